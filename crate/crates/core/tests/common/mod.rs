//! Reference computations for the integration tests, written independently of
//! the library's share and optimizer code.

#![allow(dead_code)]

use coop_relay::{evaluate, MacParams, NetworkConfig, Scheme};

// Closed forms below use t_f + t_n + t_r = 1 to collapse the success terms.

/// Direct access `s_f`.
pub fn sf_direct(t_f: f64, t_n: f64, tau: f64, sigma: f64) -> f64 {
    tau * (1.0 - tau) * t_f
        / (tau * (1.0 - tau) + tau * tau * t_f.max(t_n) + (1.0 - tau).powi(2) * sigma)
}

/// Naive decode-forward `s_f`. Both states hold half of the phases, so the
/// success terms contribute half of `tau (1 - tau)`.
pub fn sf_naive(t_f: f64, t_n: f64, t_r: f64, tau: f64, sigma: f64) -> f64 {
    0.5 * tau * (1.0 - tau) * t_f
        / (0.5 * tau * (1.0 - tau)
            + 0.5 * tau * tau * t_f.max(t_n)
            + 0.5 * tau * tau * t_f.max(t_r)
            + 0.5 * tau * (1.0 - tau) * t_f
            + (1.0 - tau).powi(2) * sigma)
}

/// Decode-idle-forward `s_f`.
pub fn sf_idle_forward(t_f: f64, t_n: f64, tau: f64, sigma: f64) -> f64 {
    tau * (1.0 - tau) * t_f
        / (tau * (1.0 - tau) + tau * tau * t_f.max(t_n) + 2.0 * (1.0 - tau).powi(2) * sigma)
}

fn objective(scheme: Scheme, c: &NetworkConfig, tau: f64, t_f: f64, t_n: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) || !(0.0..=1.0).contains(&t_f) || t_n < 0.0 {
        return -1.0;
    }
    let params = if scheme.mac_scheme().relays() {
        let t_r = 1.0 - t_f - t_n;
        if t_r < -1e-15 {
            return -1.0;
        }
        MacParams::new(t_f, t_n, t_r.max(0.0), tau)
    } else {
        MacParams::direct(t_f, tau)
    };
    match params {
        Ok(p) => evaluate(scheme, c, &p).map(|r| r.min_rate).unwrap_or(-1.0),
        Err(_) => -1.0,
    }
}

/// Brute-force max-min rate: a dense level-0 grid of about 10^6 points,
/// then repeated zooming onto a box around the incumbent until the grid
/// spacing falls below 1e-10. Returns the rate and `(tau, t_f, t_n)`.
pub fn brute_force_optimum(scheme: Scheme, c: &NetworkConfig) -> (f64, [f64; 3]) {
    let relays = scheme.mac_scheme().relays();
    let eval = |x: [f64; 3]| {
        let t_n = if relays { x[2] } else { 1.0 - x[1] };
        objective(scheme, c, x[0], x[1], t_n)
    };
    let mut best = (-1.0, [0.0; 3]);
    let mut consider = |x: [f64; 3]| {
        let v = eval(x);
        if v > best.0 {
            best = (v, x);
        }
    };

    let (nt, nf) = if relays {
        (100usize, 140usize)
    } else {
        (1000, 1000)
    };
    for i in 0..nt {
        let tau = (i as f64 + 0.5) / nt as f64;
        for j in 0..=nf {
            let t_f = j as f64 / nf as f64;
            if relays {
                for k in 0..=(nf - j) {
                    consider([tau, t_f, k as f64 / nf as f64]);
                }
            } else {
                consider([tau, t_f, 0.0]);
            }
        }
    }

    let mut h = [1.0 / nt as f64, 1.0 / nf as f64, 1.0 / nf as f64];
    let (m, reach) = if relays { (40i64, 16.0) } else { (400, 16.0) };
    for _ in 0..200 {
        let w = h.map(|v| v * reach);
        let x0 = best.1;
        let mut cand = best;
        for a in -m..=m {
            let tau = x0[0] + w[0] * a as f64 / m as f64;
            for b in -m..=m {
                let t_f = x0[1] + w[1] * b as f64 / m as f64;
                if relays {
                    for k in -m..=m {
                        let x = [tau, t_f, x0[2] + w[2] * k as f64 / m as f64];
                        let v = eval(x);
                        if v > cand.0 {
                            cand = (v, x);
                        }
                    }
                } else {
                    let x = [tau, t_f, 0.0];
                    let v = eval(x);
                    if v > cand.0 {
                        cand = (v, x);
                    }
                }
            }
        }
        best = cand;
        h = w.map(|v| v / m as f64 * 1.5);
        if h[0].max(h[1]) < 1e-10 {
            break;
        }
    }
    best
}

/// The five scenarios the optimizer is regression-tested on:
/// `(snr_db, beta, gamma)`, all with `sigma = 0.002`.
pub const CANONICAL: [(f64, f64, f64); 5] = [
    (0.0, 0.5, 2.0),
    (10.0, 0.5, 2.0),
    (-10.0, 0.3, 3.0),
    (5.0, 0.7, 2.0),
    (20.0, 0.5, 4.0),
];

pub fn canonical_config(k: usize) -> NetworkConfig {
    let (db, beta, gamma) = CANONICAL[k];
    NetworkConfig::new(10f64.powf(db / 10.0), beta, gamma, 0.002).unwrap()
}
