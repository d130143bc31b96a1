//! Monte Carlo phase simulator for the MAC chains.
//!
//! The simulator walks the same [`ChainSpec`] the analytic model integrates,
//! but draws each node's transmit decision instead of weighting by
//! probability. Standard errors come from batch means so the serial
//! correlation of the state chain does not bias them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{build_chain, CollisionModel, MacParams, MacScheme, PhaseKind, TimeShares};

pub const BATCHES: usize = 100;

/// Pass threshold in standard errors.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_phases: u64,
    pub seed: u64,
    pub scheme: MacScheme,
    pub params: MacParams,
    pub sigma: f64,
    pub collision_model: CollisionModel,
}

impl SimConfig {
    pub fn new(scheme: MacScheme, params: MacParams, sigma: f64) -> Self {
        Self {
            n_phases: 1_000_000,
            seed: 0,
            scheme,
            params,
            sigma,
            collision_model: CollisionModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub shares: TimeShares,
    /// Batch-means standard error of each field of `shares`.
    pub std_errors: TimeShares,
    /// Phase counts indexed by [`PhaseKind::index`].
    pub counts: [u64; 6],
    pub n_phases: u64,
    /// Fraction of phases that started in the second chain state.
    pub state2_fraction: f64,
    pub state2_std_error: f64,
}

impl SimStats {
    pub fn count(&self, kind: PhaseKind) -> u64 {
        self.counts[kind.index()]
    }

    /// Checks the second-state occupancy against its stationary probability.
    pub fn occupancy_check(&self, expected: f64) -> ShareCheck {
        ShareCheck::new(
            "state2",
            self.state2_fraction,
            expected,
            self.state2_std_error,
        )
    }
}

/// Per-batch accumulators: the seven share numerators, total time, phases
/// spent in state 2 and phase count.
#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    sums: [f64; 7],
    time: f64,
    in_state2: u64,
    phases: u64,
}

impl Batch {
    fn shares(&self) -> [f64; 7] {
        self.sums.map(|v| v / self.time)
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn draw(rng: &mut ChaCha8Rng, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen::<f64>() < p
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimStats> {
    if config.n_phases == 0 {
        return Err(Error::InvalidConfig("n_phases must be at least 1".into()));
    }
    let chain = build_chain(
        config.scheme,
        &config.params,
        config.sigma,
        config.collision_model,
    )?;
    // [state][f transmits][n transmits] -> phase
    let lookup: Vec<[[Option<usize>; 2]; 2]> = chain
        .states
        .iter()
        .map(|st| {
            let mut t = [[None; 2]; 2];
            for (i, ph) in st.phases.iter().enumerate() {
                t[usize::from(ph.f_transmits)][usize::from(ph.n_transmits)] = Some(i);
            }
            t
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_phases;
    let n_batches = (BATCHES as u64).min(n) as usize;
    let mut batches = vec![Batch::default(); n_batches];
    let mut counts = [0u64; 6];
    let mut state = if chain.states.len() > 1 && draw(&mut rng, chain.stationary[1]) {
        1
    } else {
        0
    };

    for i in 0..n {
        let b = &mut batches[(i as u128 * n_batches as u128 / n as u128) as usize];
        let st = &chain.states[state];
        let f_tx = draw(&mut rng, st.f_attempt);
        let n_tx = draw(&mut rng, st.n_attempt);
        let idx = lookup[state][usize::from(f_tx)][usize::from(n_tx)]
            .expect("chain lists every reachable transmit pattern");
        let ph = &st.phases[idx];
        let slot = match ph.kind {
            PhaseKind::SuccessF => 0,
            PhaseKind::SuccessN => 1,
            PhaseKind::SuccessR => 2,
            PhaseKind::Idle => 5,
            PhaseKind::Collision | PhaseKind::WastedF => 6,
        };
        b.sums[slot] += ph.duration;
        b.sums[3] += ph.f_airtime;
        b.sums[4] += ph.n_airtime;
        b.time += ph.duration;
        b.in_state2 += u64::from(state == 1);
        b.phases += 1;
        counts[ph.kind.index()] += 1;
        state = ph.next_state;
    }

    let mut total = Batch::default();
    for b in &batches {
        for k in 0..7 {
            total.sums[k] += b.sums[k];
        }
        total.time += b.time;
        total.in_state2 += b.in_state2;
        total.phases += b.phases;
    }
    if total.time <= 0.0 {
        return Err(Error::Degenerate);
    }
    let usable: Vec<&Batch> = batches.iter().filter(|b| b.time > 0.0).collect();
    let mut se = [0.0; 7];
    for (k, e) in se.iter_mut().enumerate() {
        let per_batch: Vec<f64> = usable.iter().map(|b| b.shares()[k]).collect();
        *e = mean_and_se(&per_batch).1;
    }
    let occupancy: Vec<f64> = batches
        .iter()
        .map(|b| b.in_state2 as f64 / b.phases as f64)
        .collect();
    let shares = total.shares();
    Ok(SimStats {
        shares: from_array(shares),
        std_errors: from_array(se),
        counts,
        n_phases: n,
        state2_fraction: total.in_state2 as f64 / n as f64,
        state2_std_error: mean_and_se(&occupancy).1,
    })
}

fn from_array(v: [f64; 7]) -> TimeShares {
    TimeShares {
        s_f: v[0],
        s_n: v[1],
        s_r: v[2],
        tx_f: v[3],
        tx_n: v[4],
        idle: v[5],
        collision: v[6],
    }
}

/// One estimated quantity against its analytic value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareCheck {
    pub name: &'static str,
    pub empirical: f64,
    pub analytic: f64,
    pub std_error: f64,
    pub z: f64,
    pub rel_error: f64,
    pub pass: bool,
}

impl ShareCheck {
    fn new(name: &'static str, empirical: f64, analytic: f64, std_error: f64) -> Self {
        let diff = empirical - analytic;
        // A zero standard error means the estimate never varied; accept
        // only rounding-level disagreement then.
        let z = if std_error > 0.0 {
            diff / std_error
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        let rel_error = if analytic != 0.0 {
            diff.abs() / analytic.abs()
        } else {
            diff.abs()
        };
        Self {
            name,
            empirical,
            analytic,
            std_error,
            z,
            rel_error,
            pass: z.abs() <= Z_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub checks: Vec<ShareCheck>,
    pub pass: bool,
}

/// Per-share z-scores of the simulation against the analytic shares.
pub fn compare(stats: &SimStats, analytic: &TimeShares) -> ComparisonReport {
    let emp = stats.shares.as_array();
    let se = stats.std_errors.as_array();
    let checks: Vec<ShareCheck> = TimeShares::FIELD_NAMES
        .iter()
        .zip(analytic.as_array())
        .enumerate()
        .map(|(k, (name, a))| ShareCheck::new(name, emp[k], a, se[k]))
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    ComparisonReport { checks, pass }
}
