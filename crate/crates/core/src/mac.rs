//! Random-access MAC model: from packetsizes and transmission probability to
//! the normalized time-division shares.
//!
//! Every scheme is a phase chain with one or two states. In each phase the
//! nodes contending in the current state transmit independently; the outcome
//! is a success of F, N or the relay packet, a collision, an idle slot, or
//! (naive decode-and-forward only) an F success the relay ignores because it
//! still holds F's previous packet. The closed-form `shares_*` functions and
//! [`ChainSpec::integrate`] are two routes to the same stationary averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;

/// Packetsizes normalized to the unit simplex and the per-phase transmission
/// probability shared by both contending nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacParams {
    t_f: f64,
    t_n: f64,
    t_r: f64,
    tau: f64,
}

impl MacParams {
    pub fn new(t_f: f64, t_n: f64, t_r: f64, tau: f64) -> Result<Self> {
        for (name, v) in [("t_f", t_f), ("t_n", t_n), ("t_r", t_r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} outside [0, 1]")));
            }
        }
        let sum = t_f + t_n + t_r;
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParams(format!(
                "packetsizes must sum to 1, got {sum}"
            )));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidTau(tau));
        }
        Ok(Self { t_f, t_n, t_r, tau })
    }

    /// Parameters without a relay packet (`t_r = 0`, `t_n = 1 - t_f`).
    pub fn direct(t_f: f64, tau: f64) -> Result<Self> {
        Self::new(t_f, 1.0 - t_f, 0.0, tau)
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn t_n(&self) -> f64 {
        self.t_n
    }

    pub fn t_r(&self) -> f64 {
        self.t_r
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Normalized time-division quantities. `tx_f` and `tx_n` are the total
/// fractions of time F and N spend transmitting (collisions included; for N
/// this counts both its own and relayed packets).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeShares {
    pub s_f: f64,
    pub s_n: f64,
    pub s_r: f64,
    pub tx_f: f64,
    pub tx_n: f64,
    pub idle: f64,
    pub collision: f64,
}

impl TimeShares {
    pub const FIELD_NAMES: [&'static str; 7] =
        ["s_f", "s_n", "s_r", "tx_f", "tx_n", "idle", "collision"];

    /// A network where nobody ever transmits.
    pub fn all_idle() -> Self {
        Self {
            idle: 1.0,
            ..Self::default()
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.s_f,
            self.s_n,
            self.s_r,
            self.tx_f,
            self.tx_n,
            self.idle,
            self.collision,
        ]
    }

    /// `idle + collision + s_f + s_n + s_r`, which is one for any valid model output.
    pub fn total(&self) -> f64 {
        self.idle + self.collision + self.s_f + self.s_n + self.s_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MacScheme {
    DirectAccess,
    NaiveDF,
    IdleForward,
    Straightforward,
}

impl MacScheme {
    pub const ALL: [MacScheme; 4] = [
        MacScheme::DirectAccess,
        MacScheme::NaiveDF,
        MacScheme::IdleForward,
        MacScheme::Straightforward,
    ];

    /// Whether the scheme ever sends a relay packet.
    pub fn relays(&self) -> bool {
        !matches!(self, MacScheme::DirectAccess)
    }

    pub fn name(self) -> &'static str {
        match self {
            MacScheme::DirectAccess => "direct-access",
            MacScheme::NaiveDF => "naive-df",
            MacScheme::IdleForward => "idle-forward",
            MacScheme::Straightforward => "straightforward",
        }
    }
}

impl std::fmt::Display for MacScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MacScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        MacScheme::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = MacScheme::ALL.iter().map(|m| m.name()).collect();
                format!(
                    "unknown MAC scheme `{s}`, expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// Collision duration used by decode-straightforward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionModel {
    /// F's packet counts with its appended relay: `max{t_f + t_r, t_n}`.
    #[default]
    Literal,
    /// No relay follows a collision: `max{t_f, t_n}`.
    Refined,
}

/// `(p_s, p_c, p_i)`: probability that one designated node succeeds, that both
/// collide, and that the slot stays idle.
pub fn phase_probs(tau: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidTau(tau));
    }
    Ok((tau * (1.0 - tau), tau * tau, (1.0 - tau) * (1.0 - tau)))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "sigma must be >= 0, got {sigma}"
        )))
    }
}

fn check_duration(t: f64) -> Result<f64> {
    if t > 0.0 {
        Ok(t)
    } else {
        Err(Error::Degenerate)
    }
}

/// Single-state contention where each F success is followed by `t_r` of
/// contention-free relaying (zero for direct access).
fn single_state_shares(p: &MacParams, sigma: f64, collision_duration: f64) -> Result<TimeShares> {
    check_sigma(sigma)?;
    let tau = p.tau;
    let (ps, pc, pi) = phase_probs(tau)?;
    let t = check_duration(
        ps * p.t_n + ps * p.t_f + ps * p.t_r + pc * collision_duration + pi * sigma,
    )?;
    Ok(TimeShares {
        s_f: ps * p.t_f / t,
        s_n: ps * p.t_n / t,
        s_r: ps * p.t_r / t,
        tx_f: tau * p.t_f / t,
        tx_n: (tau * p.t_n + ps * p.t_r) / t,
        idle: pi * sigma / t,
        collision: pc * collision_duration / t,
    })
}

pub fn shares_direct(params: &MacParams, sigma: f64) -> Result<TimeShares> {
    if params.t_r != 0.0 {
        return Err(Error::InvalidParams(format!(
            "direct access requires t_r = 0, got {}",
            params.t_r
        )));
    }
    single_state_shares(params, sigma, params.t_f.max(params.t_n))
}

pub fn shares_naive_df(params: &MacParams, sigma: f64) -> Result<TimeShares> {
    check_sigma(sigma)?;
    let p = params;
    let tau = p.tau;
    let (ps, pc, pi) = phase_probs(tau)?;
    let (pi1, pi2) = (0.5, 0.5);
    let t_sc = pi1 * (ps * p.t_n + ps * p.t_f) + pi2 * ps * p.t_r;
    let t_c = pi1 * pc * p.t_f.max(p.t_n) + pi2 * (pc * p.t_f.max(p.t_r) + ps * p.t_f);
    let t_i = (pi1 + pi2) * pi * sigma;
    let t = check_duration(t_sc + t_c + t_i)?;
    Ok(TimeShares {
        s_f: pi1 * ps * p.t_f / t,
        s_n: pi1 * ps * p.t_n / t,
        s_r: pi2 * ps * p.t_r / t,
        tx_f: tau * p.t_f / t,
        tx_n: (pi1 * tau * p.t_n + pi2 * tau * p.t_r) / t,
        idle: t_i / t,
        collision: t_c / t,
    })
}

pub fn shares_idle_forward(params: &MacParams, sigma: f64) -> Result<TimeShares> {
    check_sigma(sigma)?;
    let p = params;
    let tau = p.tau;
    let (ps, pc, pi) = phase_probs(tau)?;
    // (pi1, pi2) proportional to (1, 1 - tau); tau = 1 gives (1, 0).
    let pi1 = 1.0 / (2.0 - tau);
    let pi2 = (1.0 - tau) / (2.0 - tau);
    let t_sc = pi1 * (ps * p.t_n + ps * p.t_f) + pi2 * tau * p.t_r;
    let t_c = pi1 * pc * p.t_f.max(p.t_n);
    let t_i = pi1 * pi * sigma + pi2 * (1.0 - tau) * sigma;
    let t = check_duration(t_sc + t_c + t_i)?;
    Ok(TimeShares {
        s_f: pi1 * ps * p.t_f / t,
        s_n: pi1 * ps * p.t_n / t,
        s_r: pi2 * tau * p.t_r / t,
        tx_f: pi1 * tau * p.t_f / t,
        tx_n: (pi1 * tau * p.t_n + pi2 * tau * p.t_r) / t,
        idle: t_i / t,
        collision: t_c / t,
    })
}

fn straightforward_collision(p: &MacParams, model: CollisionModel) -> f64 {
    match model {
        CollisionModel::Literal => (p.t_f + p.t_r).max(p.t_n),
        CollisionModel::Refined => p.t_f.max(p.t_n),
    }
}

/// Direct access with F's effective packet `t_f + t_r`: the relay forwards
/// right after every F success without contending.
pub fn shares_straightforward(
    params: &MacParams,
    sigma: f64,
    model: CollisionModel,
) -> Result<TimeShares> {
    single_state_shares(params, sigma, straightforward_collision(params, model))
}

pub fn shares(
    scheme: MacScheme,
    params: &MacParams,
    sigma: f64,
    model: CollisionModel,
) -> Result<TimeShares> {
    match scheme {
        MacScheme::DirectAccess => shares_direct(params, sigma),
        MacScheme::NaiveDF => shares_naive_df(params, sigma),
        MacScheme::IdleForward => shares_idle_forward(params, sigma),
        MacScheme::Straightforward => shares_straightforward(params, sigma, model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    SuccessF,
    SuccessN,
    SuccessR,
    Collision,
    Idle,
    /// F wins the channel but the relay drops the packet; counts as collision time.
    WastedF,
}

impl PhaseKind {
    pub const ALL: [PhaseKind; 6] = [
        PhaseKind::SuccessF,
        PhaseKind::SuccessN,
        PhaseKind::SuccessR,
        PhaseKind::Collision,
        PhaseKind::Idle,
        PhaseKind::WastedF,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One transition phase of a chain state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phase {
    pub kind: PhaseKind,
    /// Whether F and N put a packet on the air in this phase.
    pub f_transmits: bool,
    pub n_transmits: bool,
    pub prob: f64,
    pub duration: f64,
    /// Air time of F and N within the phase.
    pub f_airtime: f64,
    pub n_airtime: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainState {
    /// Per-phase transmission probabilities of F and N in this state.
    pub f_attempt: f64,
    pub n_attempt: f64,
    pub phases: Vec<Phase>,
}

impl ChainState {
    /// Phase triggered by the given transmit decisions.
    pub fn phase_for(&self, f_transmits: bool, n_transmits: bool) -> Option<&Phase> {
        self.phases
            .iter()
            .find(|ph| ph.f_transmits == f_transmits && ph.n_transmits == n_transmits)
    }

    /// Probability of leaving for each state, indexed by target.
    fn outflow(&self, n_states: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_states];
        for ph in &self.phases {
            out[ph.next_state] += ph.prob;
        }
        out
    }
}

/// Explicit phase table of one scheme at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSpec {
    pub scheme: MacScheme,
    pub states: Vec<ChainState>,
    pub stationary: Vec<f64>,
}

struct PhaseBuilder<'a> {
    p: &'a MacParams,
    f_attempt: f64,
    n_attempt: f64,
    n_packet: f64,
}

impl PhaseBuilder<'_> {
    fn phase(&self, kind: PhaseKind, f_tx: bool, n_tx: bool, duration: f64, next: usize) -> Phase {
        let pf = if f_tx {
            self.f_attempt
        } else {
            1.0 - self.f_attempt
        };
        let pn = if n_tx {
            self.n_attempt
        } else {
            1.0 - self.n_attempt
        };
        Phase {
            kind,
            f_transmits: f_tx,
            n_transmits: n_tx,
            prob: pf * pn,
            duration,
            f_airtime: if f_tx { self.p.t_f } else { 0.0 },
            n_airtime: if n_tx { self.n_packet } else { 0.0 },
            next_state: next,
        }
    }

    fn state(&self, phases: Vec<Phase>) -> ChainState {
        ChainState {
            f_attempt: self.f_attempt,
            n_attempt: self.n_attempt,
            phases,
        }
    }
}

/// State 1 of every scheme: F and N contend with their own packets. An F
/// success moves the chain to `after_f`.
fn contention_state(p: &MacParams, sigma: f64, collision: f64, after_f: usize) -> ChainState {
    let b = PhaseBuilder {
        p,
        f_attempt: p.tau,
        n_attempt: p.tau,
        n_packet: p.t_n,
    };
    b.state(vec![
        b.phase(PhaseKind::SuccessF, true, false, p.t_f, after_f),
        b.phase(PhaseKind::SuccessN, false, true, p.t_n, 0),
        b.phase(PhaseKind::Collision, true, true, collision, 0),
        b.phase(PhaseKind::Idle, false, false, sigma, 0),
    ])
}

pub fn build_chain(
    scheme: MacScheme,
    params: &MacParams,
    sigma: f64,
    model: CollisionModel,
) -> Result<ChainSpec> {
    check_sigma(sigma)?;
    let p = params;
    let tau = p.tau;
    let states = match scheme {
        MacScheme::DirectAccess => {
            if p.t_r != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "direct access requires t_r = 0, got {}",
                    p.t_r
                )));
            }
            vec![contention_state(p, sigma, p.t_f.max(p.t_n), 0)]
        }
        MacScheme::NaiveDF => {
            let b = PhaseBuilder {
                p,
                f_attempt: tau,
                n_attempt: tau,
                n_packet: p.t_r,
            };
            vec![
                contention_state(p, sigma, p.t_f.max(p.t_n), 1),
                b.state(vec![
                    b.phase(PhaseKind::WastedF, true, false, p.t_f, 1),
                    b.phase(PhaseKind::SuccessR, false, true, p.t_r, 0),
                    b.phase(PhaseKind::Collision, true, true, p.t_f.max(p.t_r), 1),
                    b.phase(PhaseKind::Idle, false, false, sigma, 1),
                ]),
            ]
        }
        MacScheme::IdleForward => {
            let b = PhaseBuilder {
                p,
                f_attempt: 0.0,
                n_attempt: tau,
                n_packet: p.t_r,
            };
            vec![
                contention_state(p, sigma, p.t_f.max(p.t_n), 1),
                b.state(vec![
                    b.phase(PhaseKind::SuccessR, false, true, p.t_r, 0),
                    b.phase(PhaseKind::Idle, false, false, sigma, 1),
                ]),
            ]
        }
        MacScheme::Straightforward => {
            let b = PhaseBuilder {
                p,
                f_attempt: 0.0,
                n_attempt: 1.0,
                n_packet: p.t_r,
            };
            vec![
                contention_state(p, sigma, straightforward_collision(p, model), 1),
                b.state(vec![b.phase(PhaseKind::SuccessR, false, true, p.t_r, 0)]),
            ]
        }
    };
    let stationary = stationary_distribution(&states);
    Ok(ChainSpec {
        scheme,
        states,
        stationary,
    })
}

/// Stationary law of a one- or two-state chain. With no transitions in
/// either direction the states are weighted equally.
fn stationary_distribution(states: &[ChainState]) -> Vec<f64> {
    match states.len() {
        1 => vec![1.0],
        2 => {
            let p12 = states[0].outflow(2)[1];
            let p21 = states[1].outflow(2)[0];
            let total = p12 + p21;
            if total > 0.0 {
                vec![p21 / total, p12 / total]
            } else {
                vec![0.5, 0.5]
            }
        }
        n => unreachable!("phase chains have one or two states, got {n}"),
    }
}

impl ChainSpec {
    /// Stationary-weighted expected shares.
    pub fn integrate(&self) -> Result<TimeShares> {
        let mut by_kind = [0.0; 6];
        let (mut air_f, mut air_n) = (0.0, 0.0);
        for (state, &weight) in self.states.iter().zip(&self.stationary) {
            for ph in &state.phases {
                let w = weight * ph.prob;
                by_kind[ph.kind.index()] += w * ph.duration;
                air_f += w * ph.f_airtime;
                air_n += w * ph.n_airtime;
            }
        }
        let t = check_duration(by_kind.iter().sum())?;
        Ok(TimeShares {
            s_f: by_kind[PhaseKind::SuccessF.index()] / t,
            s_n: by_kind[PhaseKind::SuccessN.index()] / t,
            s_r: by_kind[PhaseKind::SuccessR.index()] / t,
            tx_f: air_f / t,
            tx_n: air_n / t,
            idle: by_kind[PhaseKind::Idle.index()] / t,
            collision: (by_kind[PhaseKind::Collision.index()]
                + by_kind[PhaseKind::WastedF.index()])
                / t,
        })
    }

    /// Largest deviation of `pi P` from `pi`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.states.len();
        let mut next = vec![0.0; n];
        for (state, &w) in self.states.iter().zip(&self.stationary) {
            for (j, q) in state.outflow(n).into_iter().enumerate() {
                next[j] += w * q;
            }
        }
        next.iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const THIRD: f64 = 1.0 / 3.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phase_probability_examples() {
        assert_eq!(phase_probs(0.5).unwrap(), (0.25, 0.25, 0.25));
        assert_eq!(phase_probs(0.0).unwrap(), (0.0, 0.0, 1.0));
        assert_eq!(phase_probs(1.0).unwrap(), (0.0, 1.0, 0.0));
        assert!(matches!(phase_probs(1.5), Err(Error::InvalidTau(_))));
        assert!(phase_probs(-0.1).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(MacParams::new(0.5, 0.5, 0.1, 0.5).is_err());
        assert!(MacParams::new(-0.1, 0.6, 0.5, 0.5).is_err());
        assert!(MacParams::new(0.5, 0.5, 0.0, 1.1).is_err());
        assert!(MacParams::new(THIRD, THIRD, THIRD, 0.5).is_ok());
        let d = MacParams::direct(0.3, 0.2).unwrap();
        assert_eq!(d.t_r(), 0.0);
        assert!(shares_direct(&MacParams::new(0.4, 0.4, 0.2, 0.5).unwrap(), 0.0).is_err());
    }

    #[test]
    fn direct_examples() {
        let s = shares_direct(&MacParams::direct(0.5, 0.5).unwrap(), 0.0).unwrap();
        assert!(close(s.s_f, THIRD, 1e-15) && close(s.s_n, THIRD, 1e-15));
        assert!(close(s.tx_f, 2.0 * THIRD, 1e-15) && close(s.tx_n, 2.0 * THIRD, 1e-15));
        assert!(close(s.collision, THIRD, 1e-15));
        assert_eq!(s.idle, 0.0);

        let s = shares_direct(&MacParams::direct(1.0, 1.0).unwrap(), 0.37).unwrap();
        assert_eq!(s.s_f, 0.0);
        assert_eq!(s.collision, 1.0);

        // 0.16 * 0.7 / (0.16 + 0.04 * 0.7 + 0.64 * 0.002)
        let s = shares_direct(&MacParams::direct(0.7, 0.2).unwrap(), 0.002).unwrap();
        assert!(close(s.s_f, 0.112 / 0.18928, 1e-12));
        assert!(close(s.s_f, 0.59172, 1e-5));
    }

    #[test]
    fn direct_degenerate() {
        let p = MacParams::direct(0.5, 0.0).unwrap();
        assert_eq!(shares_direct(&p, 0.0), Err(Error::Degenerate));
        assert_eq!(shares_direct(&p, 0.002).unwrap(), TimeShares::all_idle());
    }

    #[test]
    fn naive_df_examples() {
        let p = MacParams::new(THIRD, THIRD, THIRD, 0.5).unwrap();
        let s = shares_naive_df(&p, 0.0).unwrap();
        assert!(close(s.s_f, 1.0 / 6.0, 1e-15));
        // t_sc = t_c = 0.125 out of 0.25
        assert!(close(s.s_f + s.s_n + s.s_r, 0.5, 1e-15));
        assert!(close(s.collision, 0.5, 1e-15));

        let s = shares_naive_df(&MacParams::new(0.2, 0.5, 0.3, 0.0).unwrap(), 0.002).unwrap();
        assert_eq!(s, TimeShares::all_idle());
    }

    #[test]
    fn idle_forward_examples() {
        let p = MacParams::new(THIRD, THIRD, THIRD, 0.5).unwrap();
        let s = shares_idle_forward(&p, 0.0).unwrap();
        assert!(close(s.s_f, 0.25, 1e-15));
        assert!(close(s.s_r, 0.25, 1e-15));

        let s = shares_idle_forward(&MacParams::new(0.4, 0.4, 0.2, 1e-9).unwrap(), 0.002).unwrap();
        assert!(s.s_f < 1e-6);
        assert!(s.idle > 1.0 - 1e-5);

        let s = shares_idle_forward(&MacParams::new(0.4, 0.4, 0.2, 1.0).unwrap(), 0.002).unwrap();
        assert_eq!(s.collision, 1.0);
    }

    #[test]
    fn straightforward_examples() {
        let p = MacParams::new(0.25, 0.5, 0.25, 0.5).unwrap();
        let s = shares_straightforward(&p, 0.0, CollisionModel::Literal).unwrap();
        assert!(close(s.s_f, 1.0 / 6.0, 1e-15));
        assert!(close(s.s_r, 1.0 / 6.0, 1e-15));
        assert!(close(s.s_n, THIRD, 1e-15));

        for tau in [0.05, 0.3, 0.77, 1.0] {
            for t_f in [0.0, 0.2, 0.5, 0.9] {
                let p = MacParams::direct(t_f, tau).unwrap();
                for model in [CollisionModel::Literal, CollisionModel::Refined] {
                    assert_eq!(
                        shares_straightforward(&p, 0.002, model).unwrap(),
                        shares_direct(&p, 0.002).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn refined_collision_is_shorter() {
        let p = MacParams::new(0.3, 0.4, 0.3, 0.4).unwrap();
        let lit = shares_straightforward(&p, 0.002, CollisionModel::Literal).unwrap();
        let refd = shares_straightforward(&p, 0.002, CollisionModel::Refined).unwrap();
        assert!(refd.collision < lit.collision);
        assert!(refd.s_f > lit.s_f);
    }

    #[test]
    fn chain_examples() {
        let c = build_chain(
            MacScheme::DirectAccess,
            &MacParams::direct(0.5, 0.5).unwrap(),
            0.002,
            CollisionModel::Literal,
        )
        .unwrap();
        assert_eq!(c.states.len(), 1);
        let probs: Vec<f64> = c.states[0].phases.iter().map(|p| p.prob).collect();
        assert_eq!(probs, vec![0.25; 4]);

        let p = MacParams::new(0.3, 0.3, 0.4, 0.37).unwrap();
        let c = build_chain(MacScheme::NaiveDF, &p, 0.002, CollisionModel::Literal).unwrap();
        assert_eq!(c.states.len(), 2);
        let ps = 0.37 * (1.0 - 0.37);
        assert_eq!(c.states[0].outflow(2)[1], ps);
        assert_eq!(c.states[1].outflow(2)[0], ps);
        assert_eq!(c.stationary, vec![0.5, 0.5]);

        let p = MacParams::new(0.3, 0.3, 0.4, 0.4).unwrap();
        let c = build_chain(MacScheme::IdleForward, &p, 0.002, CollisionModel::Literal).unwrap();
        let relay = c.states[1].phase_for(false, true).unwrap();
        let idle = c.states[1].phase_for(false, false).unwrap();
        assert_eq!((relay.kind, relay.prob), (PhaseKind::SuccessR, 0.4));
        assert_eq!((idle.kind, idle.prob), (PhaseKind::Idle, 0.6));
        assert!(c.states[1].phase_for(true, false).is_none());
    }

    #[test]
    fn idle_forward_saturated_limit() {
        let p = MacParams::new(0.3, 0.3, 0.4, 1.0).unwrap();
        let c = build_chain(MacScheme::IdleForward, &p, 0.002, CollisionModel::Literal).unwrap();
        assert_eq!(c.stationary, vec![1.0, 0.0]);
    }

    fn arb_params() -> impl Strategy<Value = MacParams> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..=1.0).prop_map(|(a, b, tau)| {
            let t_f = a;
            let t_n = (1.0 - a) * b;
            let t_r = (1.0 - t_f - t_n).max(0.0);
            MacParams::new(t_f, t_n, t_r, tau).unwrap()
        })
    }

    fn params_for(scheme: MacScheme, p: MacParams) -> MacParams {
        match scheme {
            MacScheme::DirectAccess => MacParams::direct(p.t_f, p.tau).unwrap(),
            _ => p,
        }
    }

    proptest! {
        #[test]
        fn shares_partition_time(p in arb_params(), sigma in 1e-4f64..0.1, k in 0usize..4) {
            let scheme = MacScheme::ALL[k];
            let p = params_for(scheme, p);
            let s = shares(scheme, &p, sigma, CollisionModel::Literal).unwrap();
            prop_assert!((s.total() - 1.0).abs() < 1e-12);
            prop_assert!(s.s_f <= s.tx_f && s.s_n <= s.tx_n && s.s_r <= s.tx_n);
            for v in s.as_array() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn chain_reproduces_closed_forms(
            p in arb_params(), sigma in 0.0f64..0.1, k in 0usize..4, refined in any::<bool>(),
        ) {
            let scheme = MacScheme::ALL[k];
            let model = if refined { CollisionModel::Refined } else { CollisionModel::Literal };
            let p = params_for(scheme, p);
            let closed = shares(scheme, &p, sigma, model);
            let chain = build_chain(scheme, &p, sigma, model).unwrap();
            prop_assert!(chain.stationarity_residual() < 1e-15);
            prop_assert!((chain.stationary.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for st in &chain.states {
                prop_assert!((st.phases.iter().map(|ph| ph.prob).sum::<f64>() - 1.0).abs() < 1e-15);
            }
            match (closed, chain.integrate()) {
                (Ok(a), Ok(b)) => {
                    for (x, y) in a.as_array().iter().zip(b.as_array()) {
                        prop_assert!((x - y).abs() <= 1e-14, "{a:?} vs {b:?}");
                    }
                }
                (Err(Error::Degenerate), Err(Error::Degenerate)) => {}
                (a, b) => prop_assert!(false, "routes disagree: {a:?} vs {b:?}"),
            }
        }

        #[test]
        fn queue_collision_only_costs(
            a in 0.0f64..1.0, tau in 0.0f64..1.0, sigma in 1e-4f64..0.1,
        ) {
            // t_r = t_n
            let t_n = (1.0 - a) / 2.0;
            let p = MacParams::new(1.0 - 2.0 * t_n, t_n, t_n, tau).unwrap();
            let naive = shares_naive_df(&p, sigma).unwrap();
            let idle = shares_idle_forward(&p, sigma).unwrap();
            prop_assert!(naive.s_f <= idle.s_f + 1e-15);
        }
    }
}
