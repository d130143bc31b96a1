//! Per-flow achievable rates of the five transmission schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{awgn_rate, link_snr, Link, NetworkConfig};
use crate::error::{Error, Result};
use crate::mac::{shares, MacParams, MacScheme, TimeShares};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    DirectLink,
    TwoHop,
    NaiveDecodeForward,
    DecodeIdleForward,
    DecodeStraightforward,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::DirectLink,
        Scheme::TwoHop,
        Scheme::NaiveDecodeForward,
        Scheme::DecodeIdleForward,
        Scheme::DecodeStraightforward,
    ];

    pub const COOPERATIVE: [Scheme; 3] = [
        Scheme::NaiveDecodeForward,
        Scheme::DecodeIdleForward,
        Scheme::DecodeStraightforward,
    ];

    /// Two-hop always runs on the straightforward MAC, the one with the fewest collisions.
    pub fn mac_scheme(self) -> MacScheme {
        match self {
            Scheme::DirectLink => MacScheme::DirectAccess,
            Scheme::TwoHop | Scheme::DecodeStraightforward => MacScheme::Straightforward,
            Scheme::NaiveDecodeForward => MacScheme::NaiveDF,
            Scheme::DecodeIdleForward => MacScheme::IdleForward,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::DirectLink => "direct-link",
            Scheme::TwoHop => "two-hop",
            Scheme::NaiveDecodeForward => "naive-decode-forward",
            Scheme::DecodeIdleForward => "decode-idle-forward",
            Scheme::DecodeStraightforward => "decode-straightforward",
        }
    }

    pub fn rate(self, config: &NetworkConfig, shares: &TimeShares) -> Result<RateResult> {
        match self {
            Scheme::DirectLink => rate_direct(config, shares),
            Scheme::TwoHop => rate_two_hop(config, shares),
            _ => rate_decode_forward(config, shares),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
                format!("unknown scheme `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateResult {
    pub c_f: f64,
    pub c_n: f64,
    pub min_rate: f64,
    pub shares: TimeShares,
}

impl RateResult {
    fn new(c_f: f64, c_n: f64, shares: TimeShares) -> Self {
        Self {
            c_f,
            c_n,
            min_rate: c_f.min(c_n),
            shares,
        }
    }
}

fn own_rate_n(config: &NetworkConfig, s: &TimeShares) -> Result<f64> {
    awgn_rate(s.s_n, s.tx_n, link_snr(config, Link::NA))
}

pub fn rate_direct(config: &NetworkConfig, shares: &TimeShares) -> Result<RateResult> {
    if shares.s_r != 0.0 {
        return Err(Error::NonzeroRelayShare(shares.s_r));
    }
    let c_n = own_rate_n(config, shares)?;
    let c_f = awgn_rate(shares.s_f, shares.tx_f, link_snr(config, Link::FA))?;
    Ok(RateResult::new(c_f, c_n, *shares))
}

/// F's flow is limited by the weaker of its two hops; A discards F's signal.
pub fn rate_two_hop(config: &NetworkConfig, shares: &TimeShares) -> Result<RateResult> {
    let c_n = own_rate_n(config, shares)?;
    let first_hop = awgn_rate(shares.s_f, shares.tx_f, link_snr(config, Link::FN))?;
    let relay_hop = awgn_rate(shares.s_r, shares.tx_n, link_snr(config, Link::NA))?;
    Ok(RateResult::new(first_hop.min(relay_hop), c_n, *shares))
}

/// The relay must decode F's packet; A combines the direct and relayed
/// transmissions as two parallel channels.
pub fn rate_decode_forward(config: &NetworkConfig, shares: &TimeShares) -> Result<RateResult> {
    let c_n = own_rate_n(config, shares)?;
    let decode_at_relay = awgn_rate(shares.s_f, shares.tx_f, link_snr(config, Link::FN))?;
    let combined_at_ap = awgn_rate(shares.s_f, shares.tx_f, link_snr(config, Link::FA))?
        + awgn_rate(shares.s_r, shares.tx_n, link_snr(config, Link::NA))?;
    Ok(RateResult::new(
        decode_at_relay.min(combined_at_ap),
        c_n,
        *shares,
    ))
}

/// Shares of the scheme's MAC at `params`, then its rate formula.
pub fn evaluate(scheme: Scheme, config: &NetworkConfig, params: &MacParams) -> Result<RateResult> {
    let s = shares(
        scheme.mac_scheme(),
        params,
        config.sigma(),
        config.collision_model(),
    )?;
    scheme.rate(config, &s)
}
