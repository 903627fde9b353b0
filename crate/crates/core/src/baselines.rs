//! Comparison schemes: sum-rate WMMSE (`η = 0`) and energy-efficient power
//! allocation over fixed beam directions.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner_solver::{inner_solve, InnerOptions, InnerReport};
use crate::model::{BeamformerSet, ChannelSet, SystemConfig};
use crate::numerics::{inner, norm_sqr, CVector};
use crate::outer_solver::{eta_upper_bound, EtaBisection, SolveReport};
use crate::seeding;

/// Maximizes the weighted sum rate alone.
pub fn wmmse_sum_rate(cfg: &SystemConfig, h: &ChannelSet, opts: &InnerOptions) -> Result<InnerReport> {
    inner_solve(cfg, h, 0.0, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BeamKind {
    Mrt,
    Random(u64),
}

/// Unit-norm transmit directions `v[j][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedBeamDirections {
    pub v: Vec<Vec<CVector>>,
    pub kind: BeamKind,
}

impl FixedBeamDirections {
    /// `v = h_{j,j,k} / ‖h_{j,j,k}‖`.
    pub fn mrt(cfg: &SystemConfig, h: &ChannelSet) -> Result<Self> {
        let v = (0..cfg.cells)
            .map(|j| (0..cfg.users[j]).map(|k| normalized(h.get(j, j, k).to_vec(), j, k)).collect())
            .collect::<Result<_>>()?;
        Ok(Self { v, kind: BeamKind::Mrt })
    }

    /// Isotropic directions: normalized circularly-symmetric Gaussian vectors.
    pub fn random(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        let v = (0..cfg.cells)
            .map(|j| {
                let mut rng = seeding::stream(seed, j as u64);
                (0..cfg.users[j])
                    .map(|k| {
                        let raw: CVector = (0..cfg.antennas[j])
                            .map(|_| {
                                let re: f64 = StandardNormal.sample(&mut rng);
                                let im: f64 = StandardNormal.sample(&mut rng);
                                Complex64::new(re, im)
                            })
                            .collect();
                        normalized(raw, j, k)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            v,
            kind: BeamKind::Random(seed),
        })
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.v.len() != cfg.cells {
            return Err(Error::Config("beam directions do not match the cell count".into()));
        }
        for (j, cell) in self.v.iter().enumerate() {
            if cell.len() != cfg.users[j] {
                return Err(Error::Config(format!("cell {j} has {} directions, expected {}", cell.len(), cfg.users[j])));
            }
            for (k, v) in cell.iter().enumerate() {
                if v.len() != cfg.antennas[j] {
                    return Err(Error::Config(format!("direction ({j}, {k}) has wrong length")));
                }
                if (norm_sqr(v).sqrt() - 1.0).abs() > 1e-12 {
                    return Err(Error::Validation {
                        row: j,
                        col: k,
                        reason: "beam direction is not unit-norm".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `w_{j,k} = √p_{j,k} v_{j,k}`.
    pub fn beamformers(&self, p: &[Vec<f64>]) -> BeamformerSet {
        BeamformerSet {
            w: self
                .v
                .iter()
                .zip(p)
                .map(|(cell, pc)| cell.iter().zip(pc).map(|(v, &p)| v.iter().map(|z| z * p.sqrt()).collect()).collect())
                .collect(),
        }
    }
}

fn normalized(mut v: CVector, j: usize, k: usize) -> Result<CVector> {
    let n = norm_sqr(&v).sqrt();
    if !(n > 0.0) {
        return Err(Error::Validation {
            row: j,
            col: k,
            reason: "cannot normalize a zero vector".into(),
        });
    }
    for z in v.iter_mut() {
        *z /= n;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerInit {
    /// `P_j / N_j` per user.
    #[default]
    Equal,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocOptions {
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Stop the coordinate sweeps once `|ΔG| ≤ delta`.
    pub delta: f64,
    pub max_sweeps: usize,
    /// Golden-section interval width, relative to the feasible range.
    pub line_tol: f64,
    pub init: PowerInit,
    pub warm_start: bool,
}

impl Default for PowerAllocOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_outer_iters: 200,
            delta: 1e-3,
            max_sweeps: 500,
            line_tol: 1e-8,
            init: PowerInit::Equal,
            warm_start: true,
        }
    }
}

impl PowerAllocOptions {
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self {
            epsilon: cfg.outer_tol,
            delta: cfg.inner_tol,
            ..Self::default()
        }
    }
}

/// Flattened user index `(j, k)` → position, with cross gains
/// `gain[a][b] = |h_{cell(b), a}^H v_b|²` from beam `b` into user `a`.
struct PowerProblem {
    users: Vec<(usize, usize)>,
    gain: Vec<Vec<f64>>,
    noise: Vec<f64>,
    weight: Vec<f64>,
    xi: f64,
}

impl PowerProblem {
    fn new(cfg: &SystemConfig, h: &ChannelSet, dirs: &FixedBeamDirections) -> Self {
        let users: Vec<_> = cfg.user_indices().collect();
        let gain = users
            .iter()
            .map(|&(j, k)| users.iter().map(|&(m, n)| inner(h.get(m, j, k), &dirs.v[m][n]).norm_sqr()).collect())
            .collect();
        Self {
            noise: users.iter().map(|&(j, k)| cfg.noise[j][k]).collect(),
            weight: users.iter().map(|&(j, k)| cfg.weights[j][k]).collect(),
            users,
            gain,
            xi: cfg.amp_inefficiency,
        }
    }

    fn objective(&self, p: &[f64], eta: f64) -> f64 {
        let mut g = 0.0;
        for a in 0..p.len() {
            let floor: f64 = self.noise[a] + (0..p.len()).filter(|&b| b != a).map(|b| p[b] * self.gain[a][b]).sum::<f64>();
            g += self.weight[a] * (p[a] * self.gain[a][a] / floor).ln_1p() - eta * self.xi * p[a];
        }
        g
    }

    /// The part of the objective that depends on `p[i]`, as a function of it.
    fn line(&self, p: &[f64], i: usize, eta: f64) -> impl Fn(f64) -> f64 + '_ {
        let floors: Vec<f64> = (0..p.len())
            .map(|a| {
                self.noise[a]
                    + (0..p.len())
                        .filter(|&b| b != a && b != i)
                        .map(|b| p[b] * self.gain[a][b])
                        .sum::<f64>()
            })
            .collect();
        let own: Vec<f64> = p.to_vec();
        move |x| {
            let mut v = self.weight[i] * (x * self.gain[i][i] / floors[i]).ln_1p() - eta * self.xi * x;
            for a in 0..own.len() {
                if a != i {
                    v += self.weight[a] * (own[a] * self.gain[a][a] / (floors[a] + x * self.gain[a][i])).ln_1p();
                }
            }
            v
        }
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Result of the power subproblem at one `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub p: Vec<Vec<f64>>,
    pub g_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Cyclic coordinate ascent of `Σ α R − η ξ Σ p` over per-user powers.
pub fn optimize_powers(
    cfg: &SystemConfig,
    h: &ChannelSet,
    dirs: &FixedBeamDirections,
    eta: f64,
    start: &[Vec<f64>],
    opts: &PowerAllocOptions,
) -> Result<PowerReport> {
    let prob = PowerProblem::new(cfg, h, dirs);
    let mut p: Vec<f64> = start.iter().flatten().copied().collect();
    optimize_flat(cfg, &prob, eta, &mut p, opts)
}

fn optimize_flat(cfg: &SystemConfig, prob: &PowerProblem, eta: f64, p: &mut [f64], opts: &PowerAllocOptions) -> Result<PowerReport> {
    let mut g = prob.objective(p, eta);
    let mut g_trace = vec![g];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        for i in 0..p.len() {
            let (j, _) = prob.users[i];
            let others: f64 = (0..p.len()).filter(|&b| b != i && prob.users[b].0 == j).map(|b| p[b]).sum();
            let ub = (cfg.max_power[j] - others).max(0.0);
            let f = prob.line(p, i, eta);
            let mut best = p[i].min(ub);
            let mut best_v = f(best);
            let cand = golden_max(&f, 0.0, ub, opts.line_tol * ub.max(f64::MIN_POSITIVE));
            for x in [cand, 0.0, ub] {
                let v = f(x);
                if v > best_v {
                    best = x;
                    best_v = v;
                }
            }
            p[i] = best;
        }
        sweeps += 1;
        let next = prob.objective(p, eta);
        g_trace.push(next);
        let step = (next - g).abs();
        g = next;
        if step <= opts.delta {
            converged = true;
            break;
        }
    }
    let mut out = Vec::with_capacity(cfg.cells);
    let mut it = p.iter();
    for &n in &cfg.users {
        out.push(it.by_ref().take(n).copied().collect());
    }
    Ok(PowerReport {
        p: out,
        g_trace,
        sweeps,
        converged,
    })
}

/// Energy-efficiency bisection with the beam directions held fixed.
pub fn ee_power_allocation(
    cfg: &SystemConfig,
    h: &ChannelSet,
    dirs: &FixedBeamDirections,
    opts: &PowerAllocOptions,
) -> Result<SolveReport> {
    cfg.validate()?;
    h.validate(cfg)?;
    dirs.validate(cfg)?;
    let prob = PowerProblem::new(cfg, h, dirs);
    let initial: Vec<f64> = match opts.init {
        PowerInit::Equal => prob.users.iter().map(|&(j, _)| cfg.max_power[j] / cfg.users[j] as f64).collect(),
        PowerInit::Zero => vec![0.0; prob.users.len()],
    };
    let mut bis = EtaBisection::new(eta_upper_bound(cfg, h)?, opts.epsilon, opts.max_outer_iters);
    let mut certified: Option<Vec<f64>> = None;
    let mut last: Option<Vec<f64>> = None;
    let mut sweeps = Vec::new();
    while let Some(eta) = bis.next_eta()? {
        let mut p = match (&certified, opts.warm_start) {
            (Some(c), true) => c.clone(),
            _ => initial.clone(),
        };
        let rep = optimize_flat(cfg, &prob, eta, &mut p, opts)?;
        sweeps.push(rep.sweeps);
        let f = rep.g_trace.last().copied().unwrap_or(0.0) - eta * cfg.static_power();
        if bis.record(eta, f) {
            certified = Some(p.clone());
        }
        last = Some(p);
    }
    let p = certified.or(last).unwrap_or(initial);
    let mut nested = Vec::with_capacity(cfg.cells);
    let mut it = p.iter();
    for &n in &cfg.users {
        nested.push(it.by_ref().take(n).copied().collect::<Vec<f64>>());
    }
    SolveReport::from_solution(cfg, h, &bis, dirs.beamformers(&nested), sweeps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::{c, random_instance, scalar};
    use crate::model::{energy_efficiency, surrogate_g, weighted_sum_rate};
    use crate::oracle::{siso_eta_star, SisoInstance};
    use crate::outer_solver::{outer_solve, OuterOptions};

    #[test]
    fn wmmse_siso_full_power() {
        let (cfg, h) = scalar(1, 2.0, 1.0, 3.0, 1.0, 1.0);
        let rep = wmmse_sum_rate(&cfg, &h, &InnerOptions::default()).unwrap();
        assert!((rep.w.bs_power(0) - 3.0).abs() < 1e-9);
        assert!((weighted_sum_rate(&cfg, &h, &rep.w) - (13.0f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn wmmse_decoupled_cells() {
        let mut cfg = SystemConfig::uniform(2, 1, 1, 2.0, 1.0, 1.0, 1.0);
        cfg.validate().unwrap();
        let z = vec![c(0.0, 0.0)];
        let h = ChannelSet {
            h: vec![vec![vec![vec![c(1.0, 0.0)]], vec![z.clone()]], vec![vec![z], vec![vec![c(1.0, 0.0)]]]],
        };
        let rep = wmmse_sum_rate(&cfg, &h, &InnerOptions::default()).unwrap();
        for j in 0..2 {
            assert!((rep.w.bs_power(j) - 2.0).abs() < 1e-9);
        }
        cfg.max_power[1] = 1.0;
        let rep = wmmse_sum_rate(&cfg, &h, &InnerOptions::default()).unwrap();
        assert!((rep.w.bs_power(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wmmse_rate_dominates_ee_solution() {
        for seed in 0..3 {
            let (cfg, h) = random_instance(seed, 3, 2, 2, 3.0);
            let wm = wmmse_sum_rate(&cfg, &h, &InnerOptions::default()).unwrap();
            let ee = outer_solve(&cfg, &h, &OuterOptions::default()).unwrap();
            assert!(weighted_sum_rate(&cfg, &h, &wm.w) >= ee.sum_rate - 1e-6);
        }
    }

    #[test]
    fn directions_are_unit_norm() {
        let (cfg, h) = random_instance(5, 3, 4, 2, 1.0);
        for d in [FixedBeamDirections::mrt(&cfg, &h).unwrap(), FixedBeamDirections::random(&cfg, 9).unwrap()] {
            d.validate(&cfg).unwrap();
        }
        assert_eq!(FixedBeamDirections::random(&cfg, 9).unwrap(), FixedBeamDirections::random(&cfg, 9).unwrap());
        let (cfg, h) = scalar(1, 0.0, 1.0, 1.0, 1.0, 1.0);
        assert!(FixedBeamDirections::mrt(&cfg, &h).is_err());
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = golden_max(&|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn power_ascent_monotone_and_feasible() {
        let (cfg, h) = random_instance(6, 3, 2, 2, 2.0);
        let dirs = FixedBeamDirections::random(&cfg, 1).unwrap();
        let start: Vec<Vec<f64>> = cfg.users.iter().map(|&n| vec![0.0; n]).collect();
        let rep = optimize_powers(&cfg, &h, &dirs, 0.05, &start, &PowerAllocOptions::default()).unwrap();
        assert!(rep.g_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        for (j, pj) in rep.p.iter().enumerate() {
            assert!(pj.iter().all(|&x| x >= 0.0));
            assert!(pj.iter().sum::<f64>() <= cfg.max_power[j] * (1.0 + 1e-12));
        }
        let w = dirs.beamformers(&rep.p);
        assert!((surrogate_g(&cfg, &h, &w, 0.05) - rep.g_trace.last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn siso_power_allocation_matches_oracle() {
        let (cfg, h) = scalar(1, 1.5, 1.0, 10.0, 0.5, 0.5);
        let dirs = FixedBeamDirections::mrt(&cfg, &h).unwrap();
        let rep = ee_power_allocation(&cfg, &h, &dirs, &PowerAllocOptions::default()).unwrap();
        let (eta, _) = siso_eta_star(&SisoInstance::from_config(&cfg, &h).unwrap(), 1_000_000);
        assert!((rep.eta_star - eta).abs() <= 1e-3 * eta);
        let joint = outer_solve(&cfg, &h, &OuterOptions::default()).unwrap();
        assert!((rep.eta_star - joint.eta_star).abs() <= 2e-5);
    }

    #[test]
    fn zero_start_high_fixed_cost_goes_full_power() {
        let (cfg, h) = scalar(1, 1.0, 1.0, 10.0, 50.0, 50.0);
        let dirs = FixedBeamDirections::mrt(&cfg, &h).unwrap();
        let opts = PowerAllocOptions {
            init: PowerInit::Zero,
            warm_start: false,
            ..PowerAllocOptions::default()
        };
        let rep = ee_power_allocation(&cfg, &h, &dirs, &opts).unwrap();
        let (eta, p) = siso_eta_star(&SisoInstance::from_config(&cfg, &h).unwrap(), 1_000_000);
        assert!((p - 10.0).abs() < 1e-9);
        assert!((rep.per_bs_powers[0] - 10.0).abs() < 1e-6);
        assert!((rep.ee - eta).abs() <= 1e-9);
    }

    #[test]
    fn joint_design_dominates_power_allocation() {
        for seed in 0..3 {
            let (cfg, h) = random_instance(20 + seed, 3, 2, 2, 2.0);
            let joint = outer_solve(
                &cfg,
                &h,
                &OuterOptions {
                    inner: InnerOptions {
                        restarts: 8,
                        restart_seed: seed,
                        ..InnerOptions::default()
                    },
                    ..OuterOptions::default()
                },
            )
            .unwrap();
            for dirs in [FixedBeamDirections::mrt(&cfg, &h).unwrap(), FixedBeamDirections::random(&cfg, seed).unwrap()] {
                let pa = ee_power_allocation(&cfg, &h, &dirs, &PowerAllocOptions::default()).unwrap();
                assert!((pa.ee - energy_efficiency(&cfg, &h, &pa.w).unwrap()).abs() < 1e-12);
                assert!(joint.ee >= pa.ee - 1e-6, "seed {seed}: {} < {}", joint.ee, pa.ee);
            }
        }
    }
}
