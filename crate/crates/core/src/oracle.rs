//! Brute-force references for single-antenna, single-user instances. These
//! never touch the iterative solvers and serve as ground truth for them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemConfig};

/// Scalar link: rate `α log(1 + g p / σ²)`, consumed power `ξ p + static`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SisoInstance {
    pub gain: f64,
    pub noise: f64,
    pub max_power: f64,
    pub static_power: f64,
    pub amp_inefficiency: f64,
    pub weight: f64,
}

impl SisoInstance {
    pub fn from_config(cfg: &SystemConfig, h: &ChannelSet) -> Result<Self> {
        if cfg.cells != 1 || cfg.antennas[0] != 1 || cfg.users[0] != 1 {
            return Err(Error::Config("the grid oracle needs K = M = N = 1".into()));
        }
        Ok(Self {
            gain: h.get(0, 0, 0)[0].norm_sqr(),
            noise: cfg.noise[0][0],
            max_power: cfg.max_power[0],
            static_power: cfg.static_power(),
            amp_inefficiency: cfg.amp_inefficiency,
            weight: cfg.weights[0][0],
        })
    }

    pub fn rate(&self, p: f64) -> f64 {
        self.weight * (self.gain * p / self.noise).ln_1p()
    }

    pub fn consumed(&self, p: f64) -> f64 {
        self.amp_inefficiency * p + self.static_power
    }

    fn grid(&self, points: usize) -> impl Iterator<Item = f64> + '_ {
        let n = points.max(2) - 1;
        (0..=n).map(move |i| self.max_power * i as f64 / n as f64)
    }
}

/// `max_p rate(p) / consumed(p)` over `points` equally spaced powers in
/// `[0, P]`; returns `(η*, p*)`.
pub fn siso_eta_star(inst: &SisoInstance, points: usize) -> (f64, f64) {
    inst.grid(points)
        .map(|p| (inst.rate(p) / inst.consumed(p), p))
        .fold((f64::NEG_INFINITY, 0.0), |best, c| if c.0 > best.0 { c } else { best })
}

/// `F(η) = max_p rate(p) − η consumed(p)` on the same grid.
pub fn siso_f(inst: &SisoInstance, eta: f64, points: usize) -> f64 {
    inst.grid(points)
        .map(|p| inst.rate(p) - eta * inst.consumed(p))
        .fold(f64::NEG_INFINITY, f64::max)
}
