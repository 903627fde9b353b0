//! Per-iteration floating-point operation counts of the inner solver.
//!
//! With `N = Σ N_j` and `L = Σ N_j M_j`: the receive-filter step costs
//! `9NL`, the weight step `8(N+2)L + 3N`, and the beamformer step
//! `Σ_j (129 M_j³ + (15 + 8N_j) M_j² + (N+2) M_j) + (12K + 8) N`.

use serde::{Deserialize, Serialize};

use crate::model::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopEstimate {
    pub phi1: u64,
    pub phi2: u64,
    pub phi3: u64,
    /// `φ1 + φ2 + φ3`, the cost of one inner sweep.
    pub per_outer_total: u64,
}

impl FlopEstimate {
    /// `ρ1 ρ2 (φ1 + φ2 + φ3)` for `ρ1` outer and `ρ2` inner iterations.
    pub fn grand_total(&self, rho1: u64, rho2: u64) -> u128 {
        rho1 as u128 * rho2 as u128 * self.per_outer_total as u128
    }
}

pub fn estimate_flops(cfg: &SystemConfig) -> FlopEstimate {
    let k = cfg.cells as u64;
    let n: u64 = cfg.users.iter().map(|&x| x as u64).sum();
    let l: u64 = cfg.users.iter().zip(&cfg.antennas).map(|(&nj, &mj)| (nj * mj) as u64).sum();
    let phi1 = 9 * n * l;
    let phi2 = 8 * (n + 2) * l + 3 * n;
    let phi3 = cfg
        .antennas
        .iter()
        .zip(&cfg.users)
        .map(|(&m, &nj)| {
            let (m, nj) = (m as u64, nj as u64);
            129 * m.pow(3) + (15 + 8 * nj) * m * m + (n + 2) * m
        })
        .sum::<u64>()
        + (12 * k + 8) * n;
    FlopEstimate {
        phi1,
        phi2,
        phi3,
        per_outer_total: phi1 + phi2 + phi3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let f = estimate_flops(&SystemConfig::uniform(3, 4, 1, 1.0, 1.0, 1.0, 1.0));
        assert_eq!((f.phi1, f.phi2, f.phi3), (324, 489, 26064));
        let f = estimate_flops(&SystemConfig::uniform(1, 1, 1, 1.0, 1.0, 1.0, 1.0));
        assert_eq!((f.phi1, f.phi2, f.phi3), (9, 27, 175));
        assert_eq!(f.grand_total(3, 4), 12 * 211);
    }
}
