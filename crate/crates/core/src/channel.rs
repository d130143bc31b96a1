//! Link SNRs of the three-node line topology and time-shared AWGN rate terms.
//!
//! F sits at unit distance from the access point A, the intermediate node N
//! at distance `beta` from A (so `1 - beta` from F). Noise variance is one,
//! so `power` is directly the SNR at unit distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::CollisionModel;

/// Physical scenario plus the MAC constants that stay fixed during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    power: f64,
    beta: f64,
    gamma: f64,
    sigma: f64,
    collision_model: CollisionModel,
}

impl NetworkConfig {
    pub fn new(power: f64, beta: f64, gamma: f64, sigma: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "power must be > 0, got {power}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be > 0, got {gamma}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be > 0, got {sigma}"
            )));
        }
        Ok(Self {
            power,
            beta,
            gamma,
            sigma,
            collision_model: CollisionModel::default(),
        })
    }

    pub fn with_collision_model(mut self, model: CollisionModel) -> Self {
        self.collision_model = model;
        self
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn collision_model(&self) -> CollisionModel {
        self.collision_model
    }

    /// Same scenario at a different unit-distance SNR.
    pub fn with_power(&self, power: f64) -> Result<Self> {
        Self::new(power, self.beta, self.gamma, self.sigma)
            .map(|c| c.with_collision_model(self.collision_model))
    }

    /// Same scenario with the relay moved to `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.power, beta, self.gamma, self.sigma)
            .map(|c| c.with_collision_model(self.collision_model))
    }
}

/// The three links of the relay topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    /// F to the access point.
    FA,
    /// F to the relay.
    FN,
    /// Relay to the access point.
    NA,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::FA, Link::FN, Link::NA];
}

pub fn link_snr(config: &NetworkConfig, link: Link) -> f64 {
    match link {
        Link::FA => config.power,
        Link::FN => config.power / (1.0 - config.beta).powf(config.gamma),
        Link::NA => config.power / config.beta.powf(config.gamma),
    }
}

/// `share * log2(1 + snr / burst)`: a node that succeeds during `share` of the
/// time and transmits during `burst` concentrates its average power into the
/// active time.
pub fn awgn_rate(share: f64, burst: f64, snr: f64) -> Result<f64> {
    if share == 0.0 {
        return Ok(0.0);
    }
    if !(share > 0.0 && share <= burst && burst <= 1.0) {
        return Err(Error::InvalidShare { share, burst });
    }
    Ok(share * (snr / burst).ln_1p() / std::f64::consts::LN_2)
}
