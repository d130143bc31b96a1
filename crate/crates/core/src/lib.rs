//! Max-min throughput analysis of a three-node random-access relay network.
//!
//! Two sources, F and the intermediate node N, send to an access point A over
//! a DCF-style random-access channel. N can relay F's packets using
//! decode-and-forward. The crate maps MAC parameters to time-division shares,
//! evaluates per-flow AWGN rates, maximizes the minimum rate, and checks the
//! analytic MAC model against a Monte Carlo phase simulator.

pub mod channel;
pub mod cli;
pub mod error;
pub mod mac;
pub mod optimizer;
pub mod rates;
pub mod sim;

pub use channel::{awgn_rate, link_snr, Link, NetworkConfig};
pub use error::{Error, Result};
pub use mac::{
    build_chain, phase_probs, shares, shares_direct, shares_idle_forward, shares_naive_df,
    shares_straightforward, ChainSpec, CollisionModel, MacParams, MacScheme, PhaseKind, TimeShares,
};
pub use optimizer::{
    compare_schemes, improvement, maximize, no_coop_benchmark, OptResult, OptSettings,
    SchemeComparison,
};
pub use rates::{evaluate, rate_decode_forward, rate_direct, rate_two_hop, RateResult, Scheme};
pub use sim::{compare, simulate, ComparisonReport, ShareCheck, SimConfig, SimStats};
