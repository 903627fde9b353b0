//! Bisection on the energy-efficiency factor.
//!
//! `F(η) = max_W { f₁(W) − η f₂(W) }` is strictly decreasing in `η` and its
//! root is the optimal energy efficiency. Each probe of `F` is one inner
//! solve; `F(η) > 0` raises the lower end of the bracket, otherwise the upper
//! end drops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flops::{estimate_flops, FlopEstimate};
use crate::inner_solver::{inner_solve, InitStrategy, InnerOptions, InnerReport};
use crate::model::{consumed_power_from_bs, energy_efficiency, max_rate_bound, user_rates, weighted_sum_rate, BeamformerSet, ChannelSet, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterOptions {
    /// Stop once `η_max − η_min ≤ epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub inner: InnerOptions,
    /// Start each inner solve from the last certified beamformers.
    pub warm_start: bool,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iters: 200,
            inner: InnerOptions::default(),
            warm_start: true,
        }
    }
}

impl OuterOptions {
    /// Defaults with both tolerances taken from the configuration.
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self {
            epsilon: cfg.outer_tol,
            inner: InnerOptions::for_config(cfg),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("outer max_iters must be at least 1".into()));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Midpoint of the final bracket.
    pub eta_star: f64,
    pub w: BeamformerSet,
    pub per_user_rates: Vec<Vec<f64>>,
    pub per_bs_powers: Vec<f64>,
    /// Achieved energy efficiency of `w` (nats/J).
    pub ee: f64,
    /// Weighted sum rate of `w` (nats).
    pub sum_rate: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    /// Inner sweeps of each outer round.
    pub inner_iters: Vec<usize>,
    /// `(η, F(η))` for every probe, in evaluation order.
    pub f_trace: Vec<(f64, f64)>,
    pub converged: bool,
    pub flops: FlopEstimate,
    /// Estimated flops actually spent: per-sweep cost times total sweeps.
    pub flops_spent: u128,
}

impl SolveReport {
    /// Assembles the report for the chosen beamformers.
    pub fn from_solution(
        cfg: &SystemConfig,
        h: &ChannelSet,
        bisection: &EtaBisection,
        w: BeamformerSet,
        inner_iters: Vec<usize>,
    ) -> Result<Self> {
        let flops = estimate_flops(cfg);
        let inner_iters_total = inner_iters.iter().sum();
        Ok(Self {
            eta_star: bisection.midpoint(),
            per_user_rates: user_rates(cfg, h, &w),
            per_bs_powers: w.bs_powers(),
            ee: energy_efficiency(cfg, h, &w)?,
            sum_rate: weighted_sum_rate(cfg, h, &w),
            outer_iters: bisection.trace.len(),
            inner_iters_total,
            inner_iters,
            f_trace: bisection.trace.clone(),
            converged: bisection.is_closed(),
            flops_spent: flops.per_outer_total as u128 * inner_iters_total as u128,
            flops,
            w,
        })
    }
}

/// Bracket state of the `η` search, shared by every solver that wraps it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaBisection {
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub trace: Vec<(f64, f64)>,
}

impl EtaBisection {
    pub fn new(upper: f64, epsilon: f64, max_iters: usize) -> Self {
        Self {
            lo: 0.0,
            hi: upper,
            epsilon,
            max_iters,
            trace: Vec::new(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.hi - self.lo <= self.epsilon
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Next probe, `None` once the bracket is closed. The first probe is
    /// always made, even when the initial bracket is already narrower than
    /// `epsilon`.
    pub fn next_eta(&self) -> Result<Option<f64>> {
        if self.is_closed() && !self.trace.is_empty() {
            return Ok(None);
        }
        if self.trace.len() >= self.max_iters {
            return Err(Error::NonConvergence {
                what: "energy-efficiency bisection",
                iters: self.trace.len(),
                lo: self.lo,
                hi: self.hi,
                trace: self.trace.clone(),
            });
        }
        Ok(Some(self.midpoint()))
    }

    /// Records `F(eta)`; returns whether `eta` is certified (`F ≥ 0`).
    pub fn record(&mut self, eta: f64, f: f64) -> bool {
        self.trace.push((eta, f));
        if f <= 0.0 {
            self.hi = eta;
        } else {
            self.lo = eta;
        }
        f >= 0.0
    }
}

/// `R_max / Σ_j (M_j Pc + P0)`.
pub fn eta_upper_bound(cfg: &SystemConfig, h: &ChannelSet) -> Result<f64> {
    let denom = cfg.static_power();
    if !(denom > 0.0) {
        return Err(Error::DegenerateConfig(
            "Σ(M Pc + P0) is zero; the energy-efficiency factor is unbounded".into(),
        ));
    }
    Ok(max_rate_bound(cfg, h) / denom)
}

/// `F = Σ α log s − η f₂` from the MSE weights at `W` (where `log s` is the
/// rate) and the per-BS transmit powers.
pub(crate) fn f_value(cfg: &SystemConfig, eta: f64, s: &[Vec<f64>], bs_powers: &[f64]) -> f64 {
    let mut f1 = 0.0;
    for (j, k) in cfg.user_indices() {
        f1 += cfg.weights[j][k] * s[j][k].ln();
    }
    f1 - eta * consumed_power_from_bs(cfg, bs_powers)
}

/// One probe of `F` with its full inner report.
pub fn evaluate_f_report(cfg: &SystemConfig, h: &ChannelSet, eta: f64, inner: &InnerOptions) -> Result<(f64, InnerReport)> {
    let rep = inner_solve(cfg, h, eta, inner)?;
    Ok((f_value(cfg, eta, &rep.s.s, &rep.w.bs_powers()), rep))
}

/// `F(η) = f₁(W) − η f₂(W)` at the inner solver's output.
#[allow(non_snake_case)]
pub fn evaluate_F(cfg: &SystemConfig, h: &ChannelSet, eta: f64, opts: &OuterOptions) -> Result<(f64, BeamformerSet)> {
    let (f, rep) = evaluate_f_report(cfg, h, eta, &opts.inner)?;
    Ok((f, rep.w))
}

/// Inner options for the next probe given the last certified beamformers.
pub(crate) fn probe_options(opts: &OuterOptions, certified: Option<&BeamformerSet>) -> InnerOptions {
    match certified {
        Some(w) if opts.warm_start => InnerOptions {
            init: InitStrategy::Warm(w.clone()),
            ..opts.inner.clone()
        },
        _ => opts.inner.clone(),
    }
}

/// Bisection over `[0, eta_upper_bound]`. Returns the beamformers of the last
/// probe with `F ≥ 0`, or of the last probe if none was certified.
pub fn outer_solve(cfg: &SystemConfig, h: &ChannelSet, opts: &OuterOptions) -> Result<SolveReport> {
    cfg.validate()?;
    h.validate(cfg)?;
    opts.validate()?;
    let mut bis = EtaBisection::new(eta_upper_bound(cfg, h)?, opts.epsilon, opts.max_iters);
    let mut certified: Option<BeamformerSet> = None;
    let mut last: Option<BeamformerSet> = None;
    let mut inner_iters = Vec::new();
    while let Some(eta) = bis.next_eta()? {
        let (f, rep) = evaluate_f_report(cfg, h, eta, &probe_options(opts, certified.as_ref()))?;
        inner_iters.push(rep.iters);
        if bis.record(eta, f) {
            certified = Some(rep.w.clone());
        }
        last = Some(rep.w);
    }
    let w = certified.or(last).unwrap_or_else(|| BeamformerSet::zeros(cfg));
    SolveReport::from_solution(cfg, h, &bis, w, inner_iters)
}
