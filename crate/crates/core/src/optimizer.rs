//! Outer max of the max-min rate over packetsizes and transmission probability.
//!
//! A full coarse grid over `(tau, packetsize simplex)` is the global pass; a
//! deterministic pattern search polishes the best grid point. The search runs
//! in reduced coordinates with N's packetsize chosen by bisection to balance
//! the two flows, since the optimum of `min{c_f, c_n}` sits on the kink
//! `c_f = c_n` where a plain coordinate search stalls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::NetworkConfig;
use crate::error::{Error, Result};
use crate::mac::{MacParams, TimeShares};
use crate::rates::{evaluate, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptSettings {
    /// Interior tau grid: `k / (n + 1)` for `k = 1..=n`.
    pub tau_grid_points: usize,
    pub simplex_step: f64,
    pub refine_iters: usize,
    pub refine_shrink: f64,
    pub min_step: f64,
}

impl Default for OptSettings {
    fn default() -> Self {
        Self {
            tau_grid_points: 199,
            simplex_step: 0.02,
            refine_iters: 40,
            refine_shrink: 0.5,
            min_step: 1e-5,
        }
    }
}

impl OptSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSettings(msg));
        if self.tau_grid_points == 0 {
            return bad("tau_grid_points must be positive".into());
        }
        if !(self.simplex_step > 0.0 && self.simplex_step <= 1.0) {
            return bad(format!(
                "simplex_step must lie in (0, 1], got {}",
                self.simplex_step
            ));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return bad(format!(
                "refine_shrink must lie in (0, 1), got {}",
                self.refine_shrink
            ));
        }
        if self.min_step.is_nan() || self.min_step <= 0.0 {
            return bad(format!("min_step must be positive, got {}", self.min_step));
        }
        Ok(())
    }

    fn simplex_divisions(&self) -> usize {
        (1.0 / self.simplex_step).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptResult {
    pub scheme: Scheme,
    pub best_params: MacParams,
    pub best_rate: f64,
    pub best_shares: TimeShares,
    pub c_f: f64,
    pub c_n: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    params: MacParams,
    rate: f64,
    /// Grid position `(tau, t_f, t_n)` used to break ties.
    key: (usize, usize, usize),
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.rate > other.rate || (self.rate == other.rate && self.key < other.key)
    }
}

fn objective(scheme: Scheme, config: &NetworkConfig, params: &MacParams) -> Result<f64> {
    evaluate(scheme, config, params).map(|r| r.min_rate)
}

/// Best grid point at one tau; packetsizes enumerated lexicographically in `(t_f, t_n)`.
fn best_at_tau(
    scheme: Scheme,
    config: &NetworkConfig,
    settings: &OptSettings,
    tau_index: usize,
) -> Result<(Option<Candidate>, usize)> {
    let tau = (tau_index + 1) as f64 / (settings.tau_grid_points + 1) as f64;
    let m = settings.simplex_divisions();
    let mf = m as f64;
    let relays = scheme.mac_scheme().relays();
    let mut best: Option<Candidate> = None;
    let mut evals = 0;
    for i in 0..=m {
        let n_range = if relays {
            0..=(m - i)
        } else {
            (m - i)..=(m - i)
        };
        for j in n_range {
            let t_f = i as f64 / mf;
            let t_n = j as f64 / mf;
            let t_r = if relays { (m - i - j) as f64 / mf } else { 0.0 };
            let params = MacParams::new(t_f, t_n, t_r, tau)?;
            let rate = objective(scheme, config, &params)?;
            evals += 1;
            let cand = Candidate {
                params,
                rate,
                key: (tau_index, i, j),
            };
            if best.is_none_or(|b| cand.beats(&b)) {
                best = Some(cand);
            }
        }
    }
    Ok((best, evals))
}

/// N's packetsize is not searched directly: at every probe it is set by
/// bisection so that the two flows get equal rates, which is where the
/// max-min optimum sits for fixed `(tau, split)`. This keeps the search off
/// the `c_f = c_n` ridge.
const BISECTION_STEPS: usize = 64;

/// Reduced search point: `[tau]` without relaying, `[tau, split]` with, where
/// `split = t_f / (t_f + t_r)`.
fn params_at(relays: bool, y: &[f64], t_n: f64) -> Result<MacParams> {
    let tau = y[0].clamp(0.0, 1.0);
    if relays {
        let split = y[1].clamp(0.0, 1.0);
        let t_f = (1.0 - t_n) * split;
        let t_r = (1.0 - t_n - t_f).max(0.0);
        MacParams::new(t_f, t_n, t_r, tau)
    } else {
        MacParams::direct(1.0 - t_n, tau)
    }
}

fn to_reduced(p: &MacParams, relays: bool) -> Vec<f64> {
    if relays {
        let f_side = p.t_f() + p.t_r();
        let split = if f_side > 0.0 { p.t_f() / f_side } else { 0.5 };
        vec![p.tau(), split]
    } else {
        vec![p.tau()]
    }
}

struct Balancer<'a> {
    scheme: Scheme,
    config: &'a NetworkConfig,
    relays: bool,
    evals: usize,
}

impl Balancer<'_> {
    /// Best point seen while bisecting `t_n` towards `c_f = c_n`.
    fn balance(&mut self, y: &[f64]) -> Result<(MacParams, f64)> {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut best: Option<(MacParams, f64)> = None;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let params = params_at(self.relays, y, mid)?;
            let r = evaluate(self.scheme, self.config, &params)?;
            self.evals += 1;
            if best.is_none_or(|(_, v)| r.min_rate > v) {
                best = Some((params, r.min_rate));
            }
            if r.c_f >= r.c_n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(best.expect("bisection evaluates at least once"))
    }
}

/// Coordinate axes and, in 2-D, the diagonals.
fn poll_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[k] = s;
            dirs.push(d);
        }
    }
    if dim == 2 {
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            dirs.push(vec![a, b]);
        }
    }
    dirs
}

/// Radical-inverse (van der Corput) of `i` in `base`, in `[0, 1)`.
fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Columns of the Householder reflection `I - 2 v v^T` for the `k`-th Halton
/// point, with their negatives: an orthogonal poll basis whose orientation
/// never repeats, so the union over iterations is dense on the sphere.
fn rotated_directions(dim: usize, k: usize) -> Vec<Vec<f64>> {
    const BASES: [usize; 3] = [2, 3, 5];
    let mut v: Vec<f64> = (0..dim)
        .map(|j| 2.0 * radical_inverse(k + 1, BASES[j]) - 1.0)
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Vec::new();
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let mut dirs = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        let col: Vec<f64> = (0..dim)
            .map(|i| f64::from(u8::from(i == j)) - 2.0 * v[i] * v[j])
            .collect();
        dirs.push(col.iter().map(|x| -x).collect());
        dirs.push(col);
    }
    dirs
}

fn refine(
    scheme: Scheme,
    config: &NetworkConfig,
    settings: &OptSettings,
    start: Candidate,
) -> Result<(Candidate, usize)> {
    let relays = scheme.mac_scheme().relays();
    let mut bal = Balancer {
        scheme,
        config,
        relays,
        evals: 0,
    };
    let mut y = to_reduced(&start.params, relays);
    let dim = y.len();
    let mut scale = vec![settings.simplex_step; dim];
    scale[0] = 1.0 / (settings.tau_grid_points + 1) as f64;
    let max_scale = scale.iter().cloned().fold(0.0, f64::max);
    let fixed = poll_directions(dim);

    let mut best = start;
    let (params, rate) = bal.balance(&y)?;
    let mut incumbent = rate;
    if rate > best.rate {
        best = Candidate {
            params,
            rate,
            key: start.key,
        };
    }
    let mut h = 1.0;
    for iter in 0..settings.refine_iters {
        if h * max_scale < settings.min_step {
            break;
        }
        let rotated = if dim > 1 {
            rotated_directions(dim, iter)
        } else {
            Vec::new()
        };
        let mut improved: Option<(Vec<f64>, MacParams, f64)> = None;
        for d in fixed.iter().chain(rotated.iter()) {
            let probe: Vec<f64> = (0..dim)
                .map(|k| (y[k] + h * scale[k] * d[k]).clamp(0.0, 1.0))
                .collect();
            let (params, rate) = bal.balance(&probe)?;
            if rate > improved.as_ref().map_or(incumbent, |(_, _, r)| *r) {
                improved = Some((probe, params, rate));
            }
        }
        match improved {
            Some((probe, params, rate)) => {
                y = probe;
                incumbent = rate;
                if rate > best.rate {
                    best = Candidate {
                        params,
                        rate,
                        key: start.key,
                    };
                }
                h = (h / settings.refine_shrink).min(1.0);
            }
            None => h *= settings.refine_shrink,
        }
    }
    Ok((best, bal.evals))
}

pub fn maximize(
    scheme: Scheme,
    config: &NetworkConfig,
    settings: &OptSettings,
) -> Result<OptResult> {
    settings.validate()?;
    let per_tau: Vec<Result<(Option<Candidate>, usize)>> = (0..settings.tau_grid_points)
        .into_par_iter()
        .map(|k| best_at_tau(scheme, config, settings, k))
        .collect();
    let mut best: Option<Candidate> = None;
    let mut evaluations = 0;
    for r in per_tau {
        let (cand, n) = r?;
        evaluations += n;
        if let Some(c) = cand {
            if best.is_none_or(|b| c.beats(&b)) {
                best = Some(c);
            }
        }
    }
    let grid_best = best.ok_or_else(|| Error::InvalidSettings("optimizer grid is empty".into()))?;
    let (best, n) = refine(scheme, config, settings, grid_best)?;
    evaluations += n;
    let r = evaluate(scheme, config, &best.params)?;
    Ok(OptResult {
        scheme,
        best_params: best.params,
        best_rate: r.min_rate,
        best_shares: r.shares,
        c_f: r.c_f,
        c_n: r.c_n,
        evaluations,
    })
}

/// Optimized rates of all five schemes at one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeComparison {
    pub optima: Vec<OptResult>,
    pub no_coop: f64,
}

impl SchemeComparison {
    pub fn rate(&self, scheme: Scheme) -> f64 {
        self.optima
            .iter()
            .find(|o| o.scheme == scheme)
            .map(|o| o.best_rate)
            .expect("comparison covers every scheme")
    }

    /// Percentage gain of `scheme` over the best non-cooperative scheme.
    pub fn improvement(&self, scheme: Scheme) -> Result<f64> {
        improvement_percent(self.rate(scheme), self.no_coop)
    }
}

pub fn improvement_percent(rate: f64, no_coop: f64) -> Result<f64> {
    if no_coop > 0.0 {
        Ok(100.0 * (rate - no_coop) / no_coop)
    } else {
        Err(Error::UndefinedImprovement)
    }
}

pub fn compare_schemes(config: &NetworkConfig, settings: &OptSettings) -> Result<SchemeComparison> {
    let optima = Scheme::ALL
        .iter()
        .map(|&s| maximize(s, config, settings))
        .collect::<Result<Vec<_>>>()?;
    let no_coop = optima[0].best_rate.max(optima[1].best_rate);
    Ok(SchemeComparison { optima, no_coop })
}

/// Best of direct-link and two-hop.
pub fn no_coop_benchmark(config: &NetworkConfig, settings: &OptSettings) -> Result<f64> {
    let direct = maximize(Scheme::DirectLink, config, settings)?;
    let two_hop = maximize(Scheme::TwoHop, config, settings)?;
    Ok(direct.best_rate.max(two_hop.best_rate))
}

/// Improvement of each cooperative scheme over the non-cooperative benchmark, in percent.
pub fn improvement(config: &NetworkConfig, settings: &OptSettings) -> Result<Vec<(Scheme, f64)>> {
    let cmp = compare_schemes(config, settings)?;
    Scheme::COOPERATIVE
        .iter()
        .map(|&s| cmp.improvement(s).map(|v| (s, v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> OptSettings {
        OptSettings {
            tau_grid_points: 39,
            simplex_step: 0.05,
            ..OptSettings::default()
        }
    }

    #[test]
    fn settings_validation() {
        assert!(OptSettings::default().validate().is_ok());
        for bad in [
            OptSettings {
                tau_grid_points: 0,
                ..OptSettings::default()
            },
            OptSettings {
                simplex_step: 0.0,
                ..OptSettings::default()
            },
            OptSettings {
                refine_shrink: 1.0,
                ..OptSettings::default()
            },
            OptSettings {
                min_step: 0.0,
                ..OptSettings::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidSettings(_))));
        }
    }

    #[test]
    fn poll_direction_counts() {
        assert_eq!(poll_directions(1).len(), 2);
        assert_eq!(poll_directions(2).len(), 8);
        for k in 0..50 {
            let dirs = rotated_directions(2, k);
            assert_eq!(dirs.len(), 4);
            for d in &dirs {
                assert!((d[0] * d[0] + d[1] * d[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn result_is_reevaluable_and_beats_grid() {
        let c = NetworkConfig::new(1.0, 0.5, 2.0, 0.002).unwrap();
        for scheme in Scheme::ALL {
            let r = maximize(scheme, &c, &coarse()).unwrap();
            assert_eq!(
                evaluate(scheme, &c, &r.best_params).unwrap().min_rate,
                r.best_rate
            );
            let grid: f64 = (0..39)
                .map(|k| {
                    best_at_tau(scheme, &c, &coarse(), k)
                        .unwrap()
                        .0
                        .unwrap()
                        .rate
                })
                .fold(0.0, f64::max);
            assert!(r.best_rate >= grid);
            if !scheme.mac_scheme().relays() {
                assert_eq!(r.best_params.t_r(), 0.0);
            }
        }
    }

    #[test]
    fn deterministic() {
        let c = NetworkConfig::new(2.0, 0.4, 3.0, 0.002).unwrap();
        for scheme in Scheme::ALL {
            assert_eq!(
                maximize(scheme, &c, &coarse()).unwrap(),
                maximize(scheme, &c, &coarse()).unwrap()
            );
        }
    }

    #[test]
    fn vanishing_power() {
        let mut last = f64::INFINITY;
        for p in [1e-2, 1e-4, 1e-6] {
            let c = NetworkConfig::new(p, 0.5, 2.0, 0.002).unwrap();
            let r = maximize(Scheme::DirectLink, &c, &coarse())
                .unwrap()
                .best_rate;
            assert!(r < last && r < 2.0 * p);
            last = r;
        }
    }

    #[test]
    fn refinement_reaches_collision_free_limit() {
        // slot length is required positive; 1e-12 stands in for zero
        let c = NetworkConfig::new(1.0, 0.5, 2.0, 1e-12).unwrap();
        let opt = maximize(Scheme::DirectLink, &c, &OptSettings::default()).unwrap();

        let mut dense = 0.0f64;
        for k in 1..2000 {
            let tau = k as f64 / 2000.0;
            for i in 0..=500 {
                let p = MacParams::direct(i as f64 / 500.0, tau).unwrap();
                dense = dense.max(objective(Scheme::DirectLink, &c, &p).unwrap());
            }
        }
        assert!(opt.best_rate >= dense);

        // Without idle cost the optimum drifts to tau -> 0, where collisions
        // vanish and each flow owns its packetsize share outright.
        let c_f = |t: f64| t * (1.0 + 1.0 / t).log2();
        let c_n = |t: f64| (1.0 - t) * (1.0 + 4.0 / (1.0 - t)).log2();
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if c_f(mid) < c_n(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let limit = c_f(lo).min(c_n(lo));
        assert!(
            ((opt.best_rate - limit) / limit).abs() < 1e-4,
            "{} vs {limit} (dense grid {dense})",
            opt.best_rate
        );
    }


    #[test]
    fn co_located_relay_splits_evenly() {
        let c = NetworkConfig::new(1.0, 1.0 - 1e-12, 2.0, 0.002).unwrap();
        let r = maximize(Scheme::DirectLink, &c, &OptSettings::default()).unwrap();
        assert!(
            (r.best_params.t_f() - 0.5).abs() < 1e-3,
            "{:?}",
            r.best_params
        );
    }

    #[test]
    fn improvement_requires_positive_benchmark() {
        assert_eq!(
            improvement_percent(1.0, 0.0),
            Err(Error::UndefinedImprovement)
        );
        assert!((improvement_percent(1.2, 1.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn two_hop_never_improves() {
        let c = NetworkConfig::new(0.5, 0.5, 2.0, 0.002).unwrap();
        let cmp = compare_schemes(&c, &coarse()).unwrap();
        assert!(cmp.improvement(Scheme::TwoHop).unwrap() <= 0.0);
        assert!(cmp.improvement(Scheme::DirectLink).unwrap() <= 0.0);
        assert_eq!(cmp.no_coop, no_coop_benchmark(&c, &coarse()).unwrap());
    }
}
