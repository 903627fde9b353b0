//! Block-coordinate maximization of the weighted-MSE surrogate for a fixed
//! energy-efficiency factor `η`.
//!
//! Each sweep updates, in order, the receive filters `U`, the MSE weights `S`
//! (both in closed form from the current beamformers) and then every cell's
//! beamformers. The cell update is a convex quadratic program with a single
//! power constraint; its solution is `w_k(λ) = α s μ (A + λI)^{-1} h_k` with
//! the multiplier `λ` found by bisection on the transmitted power
//! `φ(λ) = Σ_m Ψ_mm / (Λ_m + λ)²`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reception, AuxWeights, BeamformerSet, ChannelSet, ReceiverFilters, SystemConfig};
use crate::numerics::{eig_hermitian, inner, norm_sqr, solve_pd, CMatrix, CVector, Cholesky, HermitianMatrix};
use crate::seeding;

/// Relative ridge added to `A_j` when `η ξ = 0`, scaled by `trace(A_j)/M_j`.
pub const RIDGE: f64 = 1e-10;

/// Cap on the number of bracket doublings before giving up on `λ`.
const LAMBDA_MAX_DOUBLINGS: usize = 2048;

/// Starting point of the block-coordinate iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// `w_{j,k} = √(P_j/N_j) h_{j,j,k}/‖h_{j,j,k}‖`.
    MrtFullPower,
    /// Gaussian directions, each cell scaled to its full budget.
    Random(u64),
    /// Explicit starting beamformers (must be feasible).
    Warm(BeamformerSet),
}

/// How independent work (per-cell updates, restarts) is scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    /// Fixed order on the calling thread.
    #[default]
    Sequential,
    /// Rayon worker pool. Results are identical to `Sequential`.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerOptions {
    /// Stop once `|G(W⁽ⁿ⁾) − G(W⁽ⁿ⁻¹⁾)| ≤ delta`.
    pub delta: f64,
    pub max_iters: usize,
    /// Relative tolerance on `P_j − φ(λ)` when the power constraint is active.
    pub lambda_tol: f64,
    pub lambda_max_iters: usize,
    pub init: InitStrategy,
    /// Total number of starts; start 0 uses `init`, the rest are random.
    pub restarts: usize,
    pub restart_seed: u64,
    pub execution: Execution,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            max_iters: 500,
            lambda_tol: 1e-10,
            lambda_max_iters: 128,
            init: InitStrategy::MrtFullPower,
            restarts: 1,
            restart_seed: 0,
            execution: Execution::Sequential,
        }
    }
}

impl InnerOptions {
    /// Defaults with `delta` taken from the configuration.
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self {
            delta: cfg.inner_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !(self.lambda_tol > 0.0) {
            return Err(Error::Config("inner tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.lambda_max_iters == 0 || self.restarts == 0 {
            return Err(Error::Config("inner iteration caps and restart count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerReport {
    pub w: BeamformerSet,
    /// Receive filters at `w`.
    pub u: ReceiverFilters,
    /// MSE weights at `w`.
    pub s: AuxWeights,
    /// `G` at the starting point and after every sweep.
    pub g_trace: Vec<f64>,
    /// Number of beamformer sweeps performed.
    pub iters: usize,
    /// Multipliers from the last sweep.
    pub lambda: Vec<f64>,
    pub converged: bool,
    /// Which start produced this result.
    pub start: usize,
}

impl InnerReport {
    pub fn objective(&self) -> f64 {
        *self.g_trace.last().expect("trace is never empty")
    }
}

/// Receive filter and MSE weight of one user, from what it receives.
#[inline]
pub(crate) fn user_update(r: &crate::model::Reception, noise: f64) -> (Complex64, f64) {
    let floor = r.interference + noise;
    let total = floor + r.signal_power();
    (r.signal / total, total / floor)
}

/// `U` for the given beamformers.
pub fn update_receivers(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet) -> ReceiverFilters {
    ReceiverFilters {
        mu: (0..cfg.cells)
            .map(|j| {
                (0..cfg.users[j])
                    .map(|k| user_update(&reception(h, w, j, k), cfg.noise[j][k]).0)
                    .collect()
            })
            .collect(),
    }
}

/// `S = 1 / ê` for the given beamformers.
pub fn update_weights(cfg: &SystemConfig, h: &ChannelSet, w: &BeamformerSet) -> AuxWeights {
    AuxWeights {
        s: (0..cfg.cells)
            .map(|j| {
                (0..cfg.users[j])
                    .map(|k| user_update(&reception(h, w, j, k), cfg.noise[j][k]).1)
                    .collect()
            })
            .collect(),
    }
}

/// Sweep objective from per-user MSE weights and powers:
/// `Σ_j Σ_k (α log s − η ξ p)`. At `S = 1/ê` this is `G(W)`.
pub(crate) fn objective_from_terms(cfg: &SystemConfig, eta: f64, s: &[Vec<f64>], user_powers: &[Vec<f64>]) -> f64 {
    let mut g = 0.0;
    for (j, k) in cfg.user_indices() {
        g += cfg.weights[j][k] * s[j][k].ln() - eta * cfg.amp_inefficiency * user_powers[j][k];
    }
    g
}

/// Coupling coefficients `α s |μ|²` of every user, as they enter every `A_j`.
pub(crate) fn coupling(cfg: &SystemConfig, s: &[Vec<f64>], mu_abs2: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..cfg.cells)
        .map(|m| (0..cfg.users[m]).map(|n| cfg.weights[m][n] * s[m][n] * mu_abs2[m][n]).collect())
        .collect()
}

fn assemble_a(cfg: &SystemConfig, h: &ChannelSet, eta: f64, j: usize, coupling: &[Vec<f64>]) -> CMatrix {
    let mut a = CMatrix::zeros(cfg.antennas[j]);
    for (m, row) in coupling.iter().enumerate() {
        for (n, &q) in row.iter().enumerate() {
            if q != 0.0 {
                a.add_outer(q, h.get(j, m, n));
            }
        }
    }
    a.add_diag(eta * cfg.amp_inefficiency);
    a
}

/// `A_j = Σ_{m,n} α s |μ|² h_{j,m,n} h_{j,m,n}^H + η ξ I`.
pub fn build_a(
    cfg: &SystemConfig,
    h: &ChannelSet,
    u: &ReceiverFilters,
    s: &AuxWeights,
    eta: f64,
    j: usize,
) -> HermitianMatrix {
    let abs2: Vec<Vec<f64>> = u.mu.iter().map(|r| r.iter().map(|z| z.norm_sqr()).collect()).collect();
    HermitianMatrix::new_unchecked(assemble_a(cfg, h, eta, j, &coupling(cfg, &s.s, &abs2)))
}

fn rhs_vectors(cfg: &SystemConfig, h: &ChannelSet, j: usize, mu: &[Complex64], s: &[f64]) -> Vec<CVector> {
    (0..cfg.users[j])
        .map(|k| {
            let coef = mu[k] * (cfg.weights[j][k] * s[k]);
            h.get(j, j, k).iter().map(|x| x * coef).collect()
        })
        .collect()
}

/// Beamformers of cell `j` for a given multiplier, via a Cholesky solve.
/// No ridge is applied: a singular `A_j + λI` is reported as an error.
pub fn beamformer_at_lambda(
    cfg: &SystemConfig,
    h: &ChannelSet,
    u: &ReceiverFilters,
    s: &AuxWeights,
    eta: f64,
    j: usize,
    lambda: f64,
) -> Result<Vec<CVector>> {
    let shifted = build_a(cfg, h, u, s, eta, j).shifted(lambda);
    rhs_vectors(cfg, h, j, &u.mu[j], &s.s[j])
        .iter()
        .map(|b| solve_pd(&shifted, b))
        .collect()
}

/// Transmit power `φ(λ)` of cell `j`, in eigen-form.
pub fn power_of_lambda(
    cfg: &SystemConfig,
    h: &ChannelSet,
    u: &ReceiverFilters,
    s: &AuxWeights,
    eta: f64,
    j: usize,
    lambda: f64,
) -> Result<f64> {
    let cell = CellProblem::new(build_a(cfg, h, u, s, eta, j), rhs_vectors(cfg, h, j, &u.mu[j], &s.s[j]));
    cell.power(lambda)
}

/// Optimal multiplier and beamformers of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSolution {
    pub lambda: f64,
    pub w: Vec<CVector>,
}

/// Solves the per-cell power-constrained quadratic problem.
pub fn solve_lambda(
    cfg: &SystemConfig,
    h: &ChannelSet,
    u: &ReceiverFilters,
    s: &AuxWeights,
    eta: f64,
    j: usize,
    opts: &InnerOptions,
) -> Result<CellSolution> {
    let abs2: Vec<Vec<f64>> = u.mu.iter().map(|r| r.iter().map(|z| z.norm_sqr()).collect()).collect();
    let q = coupling(cfg, &s.s, &abs2);
    update_cell(cfg, h, eta, j, &q, &u.mu[j], &s.s[j], opts)
}

/// Per-cell update from the coupling table and the cell's own filters and
/// weights. This is everything a cell needs, which is what lets the
/// coordination simulator run it on isolated processors.
#[allow(clippy::too_many_arguments)]
pub(crate) fn update_cell(
    cfg: &SystemConfig,
    h: &ChannelSet,
    eta: f64,
    j: usize,
    coupling: &[Vec<f64>],
    own_mu: &[Complex64],
    own_s: &[f64],
    opts: &InnerOptions,
) -> Result<CellSolution> {
    let rhs = rhs_vectors(cfg, h, j, own_mu, own_s);
    let m = cfg.antennas[j];
    if rhs.iter().all(|b| b.iter().all(|z| *z == Complex64::new(0.0, 0.0))) {
        return Ok(CellSolution {
            lambda: 0.0,
            w: vec![vec![Complex64::new(0.0, 0.0); m]; cfg.users[j]],
        });
    }
    let mut a = assemble_a(cfg, h, eta, j, coupling);
    if eta * cfg.amp_inefficiency == 0.0 {
        a.add_diag(RIDGE * a.trace().re / m as f64);
    }
    let cell = CellProblem::new(HermitianMatrix::new_unchecked(a), rhs);
    let lambda = cell.find_lambda(cfg.max_power[j], opts.lambda_tol, opts.lambda_max_iters)?;
    Ok(CellSolution {
        lambda,
        w: cell.beams(lambda)?,
    })
}

/// One cell's quadratic problem in eigen coordinates.
struct CellProblem {
    a: HermitianMatrix,
    rhs: Vec<CVector>,
    eigenvalues: Vec<f64>,
    /// Diagonal of `Φ^H (Σ_k b_k b_k^H) Φ`.
    psi: Vec<f64>,
}

impl CellProblem {
    fn new(a: HermitianMatrix, rhs: Vec<CVector>) -> Self {
        let eig = eig_hermitian(&a);
        let psi = (0..a.dim())
            .map(|i| {
                let phi = eig.vectors.column(i);
                rhs.iter().map(|b| inner(&phi, b).norm_sqr()).sum()
            })
            .collect();
        Self {
            a,
            rhs,
            eigenvalues: eig.values,
            psi,
        }
    }

    fn power(&self, lambda: f64) -> Result<f64> {
        let mut p = 0.0;
        for (i, (&l, &psi)) in self.eigenvalues.iter().zip(&self.psi).enumerate() {
            let d = l + lambda;
            if psi == 0.0 {
                continue;
            }
            if !(d > 0.0) {
                return Err(Error::SingularMatrix {
                    index: i,
                    pivot: "eigenvalue",
                    value: d,
                });
            }
            p += psi / (d * d);
        }
        Ok(p)
    }

    fn beams(&self, lambda: f64) -> Result<Vec<CVector>> {
        let chol = Cholesky::factor(&self.a.shifted(lambda))?;
        Ok(self.rhs.iter().map(|b| chol.solve(b)).collect())
    }

    /// Smallest `λ ≥ 0` meeting the budget, approached from the feasible side.
    fn find_lambda(&self, budget: f64, tol: f64, max_iters: usize) -> Result<f64> {
        if self.power(0.0)? <= budget {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.power(hi)? >= budget {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > LAMBDA_MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::NonConvergence {
                    what: "multiplier bracket",
                    iters: doublings,
                    lo,
                    hi,
                    trace: Vec::new(),
                });
            }
        }
        for _ in 0..max_iters {
            if budget - self.power(hi)? <= tol * budget || hi - lo <= f64::EPSILON * hi {
                return Ok(hi);
            }
            let mid = 0.5 * (lo + hi);
            if self.power(mid)? > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if budget - self.power(hi)? <= tol * budget {
            return Ok(hi);
        }
        Err(Error::NonConvergence {
            what: "multiplier bisection",
            iters: max_iters,
            lo,
            hi,
            trace: Vec::new(),
        })
    }
}

/// Maximum-ratio beams at full, equally split power.
pub fn mrt_full_power(cfg: &SystemConfig, h: &ChannelSet) -> BeamformerSet {
    BeamformerSet {
        w: (0..cfg.cells).map(|j| mrt_cell(cfg, h, j)).collect(),
    }
}

pub(crate) fn mrt_cell(cfg: &SystemConfig, h: &ChannelSet, j: usize) -> Vec<CVector> {
    let per_user = (cfg.max_power[j] / cfg.users[j] as f64).sqrt();
    (0..cfg.users[j])
        .map(|k| {
            let v = h.get(j, j, k);
            let norm = norm_sqr(v).sqrt();
            if norm > 0.0 {
                v.iter().map(|z| z * (per_user / norm)).collect()
            } else {
                vec![Complex64::new(0.0, 0.0); v.len()]
            }
        })
        .collect()
}

/// Random feasible beams for cell `j`: Gaussian entries scaled to `P_j`.
pub(crate) fn random_cell(cfg: &SystemConfig, j: usize, seed: u64) -> Vec<CVector> {
    let mut rng = seeding::stream(seed, j as u64);
    let mut cell: Vec<CVector> = (0..cfg.users[j])
        .map(|_| {
            (0..cfg.antennas[j])
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    let p: f64 = cell.iter().map(|v| norm_sqr(v)).sum();
    let scale = (cfg.max_power[j] / p).sqrt();
    for v in cell.iter_mut() {
        for z in v.iter_mut() {
            *z *= scale;
        }
    }
    cell
}

pub fn random_beams(cfg: &SystemConfig, seed: u64) -> BeamformerSet {
    BeamformerSet {
        w: (0..cfg.cells).map(|j| random_cell(cfg, j, seed)).collect(),
    }
}

/// Materializes an initialization strategy.
pub fn initial_beams(cfg: &SystemConfig, h: &ChannelSet, init: &InitStrategy) -> Result<BeamformerSet> {
    match init {
        InitStrategy::MrtFullPower => Ok(mrt_full_power(cfg, h)),
        InitStrategy::Random(seed) => Ok(random_beams(cfg, *seed)),
        InitStrategy::Warm(w) => {
            w.validate(cfg)?;
            if !w.is_feasible(cfg, 1e-9) {
                return Err(Error::Config("warm-start beamformers violate a power budget".into()));
            }
            Ok(w.clone())
        }
    }
}

/// Receive filters, weights and objective at `w`.
pub(crate) fn evaluate_point(
    cfg: &SystemConfig,
    h: &ChannelSet,
    w: &BeamformerSet,
    eta: f64,
) -> (ReceiverFilters, AuxWeights, f64) {
    let mut mu = Vec::with_capacity(cfg.cells);
    let mut s = Vec::with_capacity(cfg.cells);
    for j in 0..cfg.cells {
        let (mj, sj): (Vec<_>, Vec<_>) = (0..cfg.users[j])
            .map(|k| user_update(&reception(h, w, j, k), cfg.noise[j][k]))
            .unzip();
        mu.push(mj);
        s.push(sj);
    }
    let g = objective_from_terms(cfg, eta, &s, &w.user_powers());
    (ReceiverFilters { mu }, AuxWeights { s }, g)
}

fn run_from(
    cfg: &SystemConfig,
    h: &ChannelSet,
    eta: f64,
    opts: &InnerOptions,
    mut w: BeamformerSet,
    start: usize,
) -> Result<InnerReport> {
    let mut g_trace = Vec::new();
    let mut lambda = vec![0.0; cfg.cells];
    let mut iters = 0;
    loop {
        let (u, s, g) = evaluate_point(cfg, h, &w, eta);
        let converged = g_trace.last().is_some_and(|prev: &f64| (g - prev).abs() <= opts.delta);
        g_trace.push(g);
        if converged || iters >= opts.max_iters {
            return Ok(InnerReport {
                w,
                u,
                s,
                g_trace,
                iters,
                lambda,
                converged,
                start,
            });
        }

        let abs2: Vec<Vec<f64>> = u.mu.iter().map(|r| r.iter().map(|z| z.norm_sqr()).collect()).collect();
        let q = coupling(cfg, &s.s, &abs2);
        let cell = |j: usize| update_cell(cfg, h, eta, j, &q, &u.mu[j], &s.s[j], opts);
        let cells: Vec<CellSolution> = match opts.execution {
            Execution::Sequential => (0..cfg.cells).map(cell).collect::<Result<_>>()?,
            Execution::Parallel => (0..cfg.cells).into_par_iter().map(cell).collect::<Result<_>>()?,
        };
        for (j, sol) in cells.into_iter().enumerate() {
            lambda[j] = sol.lambda;
            w.w[j] = sol.w;
        }
        iters += 1;
    }
}

/// Runs the block-coordinate iterations for a fixed `eta`. With
/// `restarts > 1` the best final objective wins (ties go to the earlier start).
pub fn inner_solve(cfg: &SystemConfig, h: &ChannelSet, eta: f64, opts: &InnerOptions) -> Result<InnerReport> {
    if !(eta >= 0.0) {
        return Err(Error::Domain(format!("eta = {eta} must be non-negative")));
    }
    opts.validate()?;
    let start = |r: usize| -> Result<InnerReport> {
        let w = if r == 0 {
            initial_beams(cfg, h, &opts.init)?
        } else {
            random_beams(cfg, seeding::derive(opts.restart_seed, r as u64))
        };
        run_from(cfg, h, eta, opts, w, r)
    };
    let reports: Vec<InnerReport> = match opts.execution {
        Execution::Sequential => (0..opts.restarts).map(start).collect::<Result<_>>()?,
        Execution::Parallel => (0..opts.restarts).into_par_iter().map(start).collect::<Result<_>>()?,
    };
    let mut best: Option<InnerReport> = None;
    for rep in reports {
        if best.as_ref().is_none_or(|b| rep.objective() > b.objective()) {
            best = Some(rep);
        }
    }
    Ok(best.expect("at least one start"))
}
