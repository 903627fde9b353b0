//! System model: configuration, channel/beamformer containers and the metric
//! functions (rates, interference, MSE, energy efficiency, surrogates).
//!
//! All rates are in nats per channel use and all powers in Watts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{inner, norm_sqr, CVector};

/// Static description of a coordinated cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of cells (one base station each).
    pub cells: usize,
    /// Transmit antennas per base station.
    pub antennas: Vec<usize>,
    /// Single-antenna users per cell.
    pub users: Vec<usize>,
    /// Per-BS transmit power budget (W).
    pub max_power: Vec<f64>,
    /// Circuit power per antenna (W).
    pub circuit_power: f64,
    /// Antenna-independent basic power per BS (W).
    pub basic_power: f64,
    /// Power amplifier inefficiency, at least 1.
    pub amp_inefficiency: f64,
    /// Priority weight of each user, `weights[j][k] > 0`.
    pub weights: Vec<Vec<f64>>,
    /// Receiver noise power of each user (W).
    pub noise: Vec<Vec<f64>>,
    /// Inner-loop stopping threshold on the objective change.
    pub inner_tol: f64,
    /// Outer bisection bracket width threshold.
    pub outer_tol: f64,
}

impl SystemConfig {
    /// Homogeneous cluster with unit weights, `ξ = 1`, and the default
    /// tolerances (1e-3 inner, 1e-5 outer).
    pub fn uniform(
        cells: usize,
        antennas: usize,
        users: usize,
        max_power: f64,
        circuit_power: f64,
        basic_power: f64,
        noise: f64,
    ) -> Self {
        Self {
            cells,
            antennas: vec![antennas; cells],
            users: vec![users; cells],
            max_power: vec![max_power; cells],
            circuit_power,
            basic_power,
            amp_inefficiency: 1.0,
            weights: vec![vec![1.0; users]; cells],
            noise: vec![vec![noise; users]; cells],
            inner_tol: 1e-3,
            outer_tol: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cells;
        if k == 0 {
            return Err(Error::Config("at least one cell is required".into()));
        }
        for (name, len) in [
            ("antennas", self.antennas.len()),
            ("users", self.users.len()),
            ("max_power", self.max_power.len()),
            ("weights", self.weights.len()),
            ("noise", self.noise.len()),
        ] {
            if len != k {
                return Err(Error::Config(format!("{name} has {len} entries, expected {k}")));
            }
        }
        for j in 0..k {
            if self.antennas[j] == 0 || self.users[j] == 0 {
                return Err(Error::Config(format!("cell {j} needs at least one antenna and one user")));
            }
            if !(self.max_power[j] > 0.0) || !self.max_power[j].is_finite() {
                return Err(Error::Config(format!("cell {j} power budget must be positive")));
            }
            if self.weights[j].len() != self.users[j] || self.noise[j].len() != self.users[j] {
                return Err(Error::Config(format!("cell {j} weight/noise vectors do not match the user count")));
            }
            if self.weights[j].iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return Err(Error::Config(format!("cell {j} has a non-positive weight")));
            }
            if self.noise[j].iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                return Err(Error::Config(format!("cell {j} has a non-positive noise power")));
            }
        }
        if !(self.circuit_power >= 0.0) || !(self.basic_power >= 0.0) {
            return Err(Error::Config("circuit and basic power must be non-negative".into()));
        }
        if !(self.amp_inefficiency >= 1.0) || !self.amp_inefficiency.is_finite() {
            return Err(Error::Config("amplifier inefficiency must be at least 1".into()));
        }
        if !(self.inner_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn total_users(&self) -> usize {
        self.users.iter().sum()
    }

    /// Iterates over `(j, k)` user indices in cell-major order.
    pub fn user_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.cells).flat_map(move |j| (0..self.users[j]).map(move |k| (j, k)))
    }

    /// `Σ_j (M_j Pc + P0)`, the power drawn regardless of the beamformers.
    pub fn static_power(&self) -> f64 {
        self.antennas
            .iter()
            .map(|&m| m as f64 * self.circuit_power + self.basic_power)
            .sum()
    }

    fn check_user(&self, j: usize, k: usize) -> Result<()> {
        if j >= self.cells {
            return Err(Error::Index(format!("cell {j} (have {})", self.cells)));
        }
        if k >= self.users[j] {
            return Err(Error::Index(format!("user ({j}, {k}) (cell has {})", self.users[j])));
        }
        Ok(())
    }
}

/// Channel vectors `h[m][j][k]` from BS `m` to user `(j, k)`, length `M_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h: Vec<Vec<Vec<CVector>>>,
}

impl ChannelSet {
    /// Channel from BS `m` to user `(j, k)`.
    #[inline]
    pub fn get(&self, m: usize, j: usize, k: usize) -> &[Complex64] {
        &self.h[m][j][k]
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.h.len() != cfg.cells {
            return Err(Error::Config(format!(
                "channel set covers {} base stations, expected {}",
                self.h.len(),
                cfg.cells
            )));
        }
        for (m, per_bs) in self.h.iter().enumerate() {
            if per_bs.len() != cfg.cells {
                return Err(Error::Config(format!("BS {m}: expected {} cells", cfg.cells)));
            }
            for (j, per_cell) in per_bs.iter().enumerate() {
                if per_cell.len() != cfg.users[j] {
                    return Err(Error::Config(format!("BS {m}, cell {j}: wrong user count")));
                }
                for (k, v) in per_cell.iter().enumerate() {
                    if v.len() != cfg.antennas[m] {
                        return Err(Error::Config(format!(
                            "h[{m}][{j}][{k}] has length {}, expected {}",
                            v.len(),
                            cfg.antennas[m]
                        )));
                    }
                    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(Error::Config(format!("h[{m}][{j}][{k}] is not finite")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Transmit beamformers `w[j][k]`, length `M_j` (√W scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    pub w: Vec<Vec<CVector>>,
}

impl BeamformerSet {
    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self {
            w: (0..cfg.cells)
                .map(|j| vec![vec![Complex64::new(0.0, 0.0); cfg.antennas[j]]; cfg.users[j]])
                .collect(),
        }
    }

    /// `Σ_k ‖w_{j,k}‖²`.
    pub fn bs_power(&self, j: usize) -> f64 {
        self.w[j].iter().map(|v| norm_sqr(v)).sum()
    }

    pub fn bs_powers(&self) -> Vec<f64> {
        (0..self.w.len()).map(|j| self.bs_power(j)).collect()
    }

    pub fn user_powers(&self) -> Vec<Vec<f64>> {
        self.w.iter().map(|cell| cell.iter().map(|v| norm_sqr(v)).collect()).collect()
    }

    /// True when every BS satisfies its budget with relative slack `rel_tol`.
    pub fn is_feasible(&self, cfg: &SystemConfig, rel_tol: f64) -> bool {
        (0..cfg.cells).all(|j| self.bs_power(j) <= cfg.max_power[j] * (1.0 + rel_tol))
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.w.len() != cfg.cells {
            return Err(Error::Config("beamformer set has the wrong number of cells".into()));
        }
        for (j, cell) in self.w.iter().enumerate() {
            if cell.len() != cfg.users[j] || cell.iter().any(|v| v.len() != cfg.antennas[j]) {
                return Err(Error::Config(format!("beamformers of cell {j} have wrong dimensions")));
            }
        }
        Ok(())
    }
}

/// Scalar receive filters `μ[j][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverFilters {
    pub mu: Vec<Vec<Complex64>>,
}

impl ReceiverFilters {
    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self {
            mu: cfg.users.iter().map(|&n| vec![Complex64::new(0.0, 0.0); n]).collect(),
        }
    }
}

/// Positive MSE weights `s[j][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxWeights {
    pub s: Vec<Vec<f64>>,
}

impl AuxWeights {
    pub fn ones(cfg: &SystemConfig) -> Self {
        Self {
            s: cfg.users.iter().map(|&n| vec![1.0; n]).collect(),
        }
    }
}

/// What user `(j, k)` receives: the useful gain `h_{j,j,k}^H w_{j,k}` and the
/// interference power `Υ_{j,k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reception {
    pub signal: Complex64,
    pub interference: f64,
}

impl Reception {
    pub fn signal_power(&self) -> f64 {
        self.signal.norm_sqr()
    }

    /// `Σ_{m,n} |h_{m,j,k}^H w_{m,n}|²`.
    pub fn total_power(&self) -> f64 {
        self.interference + self.signal_power()
    }
}

/// Received signal and interference at user `(j, k)`. Summation runs over
/// base stations `m` in index order, then their users `n`.
pub(crate) fn reception(h: &ChannelSet, w: &BeamformerSet, j: usize, k: usize) -> Reception {
    let mut interference = 0.0;
    let mut signal = Complex64::new(0.0, 0.0);
    for (m, beams) in w.w.iter().enumerate() {
        let hm = h.get(m, j, k);
        for (n, wmn) in beams.iter().enumerate() {
            let g = inner(hm, wmn);
            if m == j && n == k {
                signal = g;
            } else {
                interference += g.norm_sqr();
            }
        }
    }
    Reception { signal, interference }
}

/// Interference power `Υ_{j,k}` (intra- plus inter-cell).
pub fn interference(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet, j: usize, k: usize) -> Result<f64> {
    cfg.check_user(j, k)?;
    Ok(reception(h, w, j, k).interference)
}

/// Achievable rate of user `(j, k)` in nats.
pub fn user_rate(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet, j: usize, k: usize) -> Result<f64> {
    cfg.check_user(j, k)?;
    let r = reception(h, w, j, k);
    Ok((r.signal_power() / (r.interference + cfg.noise[j][k])).ln_1p())
}

/// Per-user rates, indexed `[j][k]`.
pub fn user_rates(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet) -> Vec<Vec<f64>> {
    (0..cfg.cells)
        .map(|j| {
            (0..cfg.users[j])
                .map(|k| {
                    let r = reception(h, w, j, k);
                    (r.signal_power() / (r.interference + cfg.noise[j][k])).ln_1p()
                })
                .collect()
        })
        .collect()
}

/// `Σ α_{j,k} R_{j,k}`.
pub fn weighted_sum_rate(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet) -> f64 {
    user_rates(cfg, h, w)
        .iter()
        .zip(&cfg.weights)
        .flat_map(|(r, a)| r.iter().zip(a).map(|(r, a)| a * r))
        .sum()
}

/// Mean square error of the linear estimate `μ* y` for user `(j, k)`.
pub fn mse(
    cfg: &SystemConfig,
    h: &ChannelSet,
    w: &BeamformerSet,
    u: &ReceiverFilters,
    j: usize,
    k: usize,
) -> Result<f64> {
    cfg.check_user(j, k)?;
    let r = reception(h, w, j, k);
    let mu = u.mu[j][k];
    Ok(mu.norm_sqr() * (r.total_power() + cfg.noise[j][k]) - 2.0 * (mu.conj() * r.signal).re + 1.0)
}

/// MSE attained by the optimal receive filter, written as
/// `(Υ + σ²) / (Υ + |h^H w|² + σ²)` to avoid cancellation at high SINR.
pub fn mmse(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet, j: usize, k: usize) -> Result<f64> {
    cfg.check_user(j, k)?;
    let r = reception(h, w, j, k);
    let floor = r.interference + cfg.noise[j][k];
    Ok(floor / (floor + r.signal_power()))
}

/// `Σ ‖w_{j,k}‖²` over all users.
pub fn total_power(w: &BeamformerSet) -> f64 {
    w.bs_powers().iter().sum()
}

/// Consumed power given per-BS transmit powers: `ξ Σ_j p_j + Σ_j (M_j Pc + P0)`.
pub fn consumed_power_from_bs(cfg: &SystemConfig, bs_powers: &[f64]) -> f64 {
    cfg.amp_inefficiency * bs_powers.iter().sum::<f64>() + cfg.static_power()
}

pub fn consumed_power(cfg: &SystemConfig, w: &BeamformerSet) -> f64 {
    consumed_power_from_bs(cfg, &w.bs_powers())
}

/// Weighted sum rate per Joule (nats/J per channel use).
pub fn energy_efficiency(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet) -> Result<f64> {
    let denom = consumed_power(cfg, w);
    if !(denom > 0.0) {
        return Err(Error::DegenerateConfig(
            "consumed power is zero; energy efficiency is undefined".into(),
        ));
    }
    Ok(weighted_sum_rate(cfg, h, w) / denom)
}

/// `G(W) = Σ (α R − η ξ ‖w‖²)`.
pub fn surrogate_g(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet, eta: f64) -> f64 {
    let rates = user_rates(cfg, h, w);
    let mut g = 0.0;
    for (j, k) in cfg.user_indices() {
        g += cfg.weights[j][k] * rates[j][k] - eta * cfg.amp_inefficiency * norm_sqr(&w.w[j][k]);
    }
    g
}

/// `H(W, U, S) = Σ (−α e s + α log s + α − η ξ ‖w‖²)`.
pub fn surrogate_h(
    cfg: &SystemConfig,
    h: &ChannelSet,
    w: &BeamformerSet,
    u: &ReceiverFilters,
    s: &AuxWeights,
    eta: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (j, k) in cfg.user_indices() {
        let sjk = s.s[j][k];
        if !(sjk > 0.0) {
            return Err(Error::Domain(format!("auxiliary weight s[{j}][{k}] = {sjk} must be positive")));
        }
        let a = cfg.weights[j][k];
        let e = mse(cfg, h, w, u, j, k)?;
        total += -a * e * sjk + a * sjk.ln() + a - eta * cfg.amp_inefficiency * norm_sqr(&w.w[j][k]);
    }
    Ok(total)
}

/// Interference-free full-power rate bound `Σ log(1 + P_j ‖h_{j,j,k}‖² / σ²)`.
pub fn max_rate_bound(cfg: &SystemConfig, h: &ChannelSet) -> f64 {
    cfg.user_indices()
        .map(|(j, k)| (cfg.max_power[j] * norm_sqr(h.get(j, j, k)) / cfg.noise[j][k]).ln_1p())
        .sum()
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn scalar_beams(values: &[f64]) -> BeamformerSet {
        BeamformerSet {
            w: vec![values.iter().map(|&v| vec![c(v, 0.0)]).collect()],
        }
    }

    #[test]
    fn interference_trivial_cases() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(interference(&cfg, &h, &scalar_beams(&[1.0]), 0, 0).unwrap(), 0.0);

        let (cfg, h) = scalar(2, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(interference(&cfg, &h, &scalar_beams(&[1.0, 1.0]), 0, 0).unwrap(), 1.0);
        assert!(matches!(
            interference(&cfg, &h, &scalar_beams(&[1.0, 1.0]), 0, 2),
            Err(Error::Index(_))
        ));
        assert!(interference(&cfg, &h, &scalar_beams(&[1.0, 1.0]), 1, 0).is_err());
    }

    #[test]
    fn interference_matches_naive_loops() {
        let (cfg, h) = random_instance(3, 3, 2, 2, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_beams(&cfg, &mut rng, true);
        for (j, k) in cfg.user_indices() {
            let mut naive = 0.0;
            for n in 0..cfg.users[j] {
                if n != k {
                    let g: Complex64 = (0..cfg.antennas[j]).map(|a| h.h[j][j][k][a].conj() * w.w[j][n][a]).sum();
                    naive += g.norm_sqr();
                }
            }
            for m in 0..cfg.cells {
                if m == j {
                    continue;
                }
                for n in 0..cfg.users[m] {
                    let g: Complex64 = (0..cfg.antennas[m]).map(|a| h.h[m][j][k][a].conj() * w.w[m][n][a]).sum();
                    naive += g.norm_sqr();
                }
            }
            let got = interference(&cfg, &h, &w, j, k).unwrap();
            assert!((got - naive).abs() <= 1e-14 * naive.max(1.0), "{got} vs {naive}");
        }
    }

    #[test]
    fn rate_examples() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert!((user_rate(&cfg, &h, &scalar_beams(&[1.0]), 0, 0).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(user_rate(&cfg, &h, &scalar_beams(&[0.0]), 0, 0).unwrap(), 0.0);

        let (cfg, h) = scalar(2, 1.0, 1.0, 1.0, 1.0, 0.0);
        let r = user_rate(&cfg, &h, &scalar_beams(&[1.0, 1.0]), 0, 0).unwrap();
        assert!((r - 1.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mse_examples() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 1.0, 0.0);
        let w = scalar_beams(&[1.0]);
        let mut u = ReceiverFilters::zeros(&cfg);
        assert_eq!(mse(&cfg, &h, &w, &u, 0, 0).unwrap(), 1.0);
        u.mu[0][0] = c(0.5, 0.0);
        assert!((mse(&cfg, &h, &w, &u, 0, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mmse_examples() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(mmse(&cfg, &h, &scalar_beams(&[0.0]), 0, 0).unwrap(), 1.0);
        let w = scalar_beams(&[1.0]);
        let e = mmse(&cfg, &h, &w, 0, 0).unwrap();
        assert_eq!(e, 0.5);
        assert!(((1.0 / e).ln() - user_rate(&cfg, &h, &w, 0, 0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mmse_is_mse_at_optimal_filter() {
        let (cfg, h) = random_instance(8, 3, 3, 2, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_beams(&cfg, &mut rng, true);
        let mut u = ReceiverFilters::zeros(&cfg);
        for (j, k) in cfg.user_indices() {
            let r = reception(&h, &w, j, k);
            u.mu[j][k] = r.signal / (r.total_power() + cfg.noise[j][k]);
        }
        for (j, k) in cfg.user_indices() {
            let d = mse(&cfg, &h, &w, &u, j, k).unwrap() - mmse(&cfg, &h, &w, j, k).unwrap();
            assert!(d.abs() <= 1e-12);
        }
    }

    #[test]
    fn power_examples() {
        let (mut cfg, _) = scalar(1, 1.0, 1.0, 5.0, 1.0, 10.0);
        assert_eq!(consumed_power(&cfg, &scalar_beams(&[0.0])), 11.0);
        cfg.amp_inefficiency = 2.0;
        let w = scalar_beams(&[2f64.sqrt()]);
        assert!((total_power(&w) - 2.0).abs() < 1e-15);
        assert!((consumed_power(&cfg, &w) - 15.0).abs() < 1e-14);
    }

    #[test]
    fn power_bounds_hold_on_feasible_sets() {
        let (cfg, h) = random_instance(21, 3, 4, 2, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lower = cfg.static_power();
        let upper: f64 = lower + cfg.max_power.iter().sum::<f64>();
        let rmax = max_rate_bound(&cfg, &h);
        for _ in 0..50 {
            let w = random_beams(&cfg, &mut rng, true);
            let f2 = consumed_power(&cfg, &w);
            assert!(lower <= f2 && f2 <= upper + 1e-12);
            let f1 = weighted_sum_rate(&cfg, &h, &w);
            // Unit weights are needed for the bound; rescale by the largest weight.
            let amax = cfg.weights.iter().flatten().cloned().fold(0.0, f64::max);
            assert!(f1 >= 0.0 && f1 <= amax * rmax + 1e-12);
        }
    }

    #[test]
    fn energy_efficiency_examples() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 0.5, 0.5);
        assert_eq!(energy_efficiency(&cfg, &h, &scalar_beams(&[0.0])).unwrap(), 0.0);
        let ee = energy_efficiency(&cfg, &h, &scalar_beams(&[1.0])).unwrap();
        assert!((ee - LN_2 / 2.0).abs() < 1e-15);

        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            energy_efficiency(&cfg, &h, &scalar_beams(&[0.0])),
            Err(Error::DegenerateConfig(_))
        ));
    }

    #[test]
    fn energy_efficiency_is_composition() {
        let (cfg, h) = random_instance(4, 3, 2, 2, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_beams(&cfg, &mut rng, true);
        let mut num = 0.0;
        for (j, k) in cfg.user_indices() {
            num += cfg.weights[j][k] * user_rate(&cfg, &h, &w, j, k).unwrap();
        }
        let ee = energy_efficiency(&cfg, &h, &w).unwrap();
        assert!((ee - num / consumed_power(&cfg, &w)).abs() <= 1e-12);
    }

    #[test]
    fn energy_efficiency_falls_with_static_power() {
        let (mut cfg, h) = random_instance(5, 2, 2, 1, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_beams(&cfg, &mut rng, true);
        let before = energy_efficiency(&cfg, &h, &w).unwrap();
        cfg.circuit_power *= 2.0;
        cfg.basic_power *= 2.0;
        assert!(energy_efficiency(&cfg, &h, &w).unwrap() < before);
    }

    #[test]
    fn surrogate_g_examples() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 1.0, 0.0);
        let w = scalar_beams(&[1.0]);
        assert!((surrogate_g(&cfg, &h, &w, 0.0) - LN_2).abs() < 1e-15);
        assert_eq!(surrogate_g(&cfg, &h, &scalar_beams(&[0.0]), 0.3), 0.0);
        assert!((surrogate_g(&cfg, &h, &w, 0.1) - (LN_2 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn surrogate_h_examples() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 1.0, 1.0, 0.0);
        let zero = scalar_beams(&[0.0]);
        let u0 = ReceiverFilters::zeros(&cfg);
        let s1 = AuxWeights::ones(&cfg);
        assert_eq!(surrogate_h(&cfg, &h, &zero, &u0, &s1, 0.2).unwrap(), 0.0);

        let w = scalar_beams(&[1.0]);
        let u = ReceiverFilters { mu: vec![vec![c(0.5, 0.0)]] };
        let s = AuxWeights { s: vec![vec![2.0]] };
        assert!((surrogate_h(&cfg, &h, &w, &u, &s, 0.0).unwrap() - LN_2).abs() < 1e-15);

        let bad = AuxWeights { s: vec![vec![0.0]] };
        assert!(matches!(surrogate_h(&cfg, &h, &w, &u, &bad, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn config_validation() {
        let good = SystemConfig::uniform(2, 2, 1, 1.0, 1.0, 1.0, 1.0);
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.amp_inefficiency = 0.5;
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.noise[1][0] = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.users = vec![1];
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.max_power[0] = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rate_mmse_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..50 {
            let (cfg, h) = random_instance(seed, 3, 3, 2, rng.random_range(0.1..100.0));
            let w = random_beams(&cfg, &mut rng, false);
            for (j, k) in cfg.user_indices() {
                let r = user_rate(&cfg, &h, &w, j, k).unwrap();
                let e = mmse(&cfg, &h, &w, j, k).unwrap();
                assert!((r - (1.0 / e).ln()).abs() <= 1e-12);
            }
        }
    }
}
