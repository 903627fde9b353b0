//! Scenario configuration, Monte Carlo sweeps and result persistence.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{ee_power_allocation, wmmse_sum_rate, FixedBeamDirections, PowerAllocOptions};
use crate::channel::{realize, GeometryConfig};
use crate::error::{Error, Result};
use crate::inner_solver::InnerOptions;
use crate::model::{energy_efficiency, weighted_sum_rate, BeamformerSet, ChannelSet, SystemConfig};
use crate::outer_solver::{outer_solve, OuterOptions};
use crate::seeding;
use crate::units::{dbm_to_watt, nats_to_bits};

pub use crate::flops::{estimate_flops, FlopEstimate};

/// Physical scenario in engineering units; resolves to a [`SystemConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub cells: usize,
    pub antennas: usize,
    pub users: usize,
    pub bs_power_dbm: f64,
    pub circuit_power_dbm: f64,
    pub basic_power_dbm: f64,
    pub amp_inefficiency: f64,
    pub weight: f64,
    pub noise_dbm: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub geometry: GeometryConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            cells: 3,
            antennas: 4,
            users: 2,
            bs_power_dbm: 46.0,
            circuit_power_dbm: 30.0,
            basic_power_dbm: 40.0,
            amp_inefficiency: 1.0,
            weight: 1.0,
            noise_dbm: crate::channel::noise_power_dbm(10e6, 9.0),
            inner_tol: 1e-3,
            outer_tol: 1e-5,
            geometry: GeometryConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn system_config(&self) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::uniform(
            self.cells,
            self.antennas,
            self.users,
            dbm_to_watt(self.bs_power_dbm),
            dbm_to_watt(self.circuit_power_dbm),
            dbm_to_watt(self.basic_power_dbm),
            dbm_to_watt(self.noise_dbm),
        );
        cfg.amp_inefficiency = self.amp_inefficiency;
        cfg.weights = vec![vec![self.weight; self.users]; self.cells];
        cfg.inner_tol = self.inner_tol;
        cfg.outer_tol = self.outer_tol;
        cfg.validate()?;
        self.geometry.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Serialized under the same names as the CSV `sweep_var` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "bs_power_dbm")]
    BsPowerDbm,
    #[serde(rename = "antennas")]
    AntennaCount,
    #[serde(rename = "circuit_power_dbm")]
    CircuitPowerDbm,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::BsPowerDbm => "bs_power_dbm",
            SweepVariable::AntennaCount => "antennas",
            SweepVariable::CircuitPowerDbm => "circuit_power_dbm",
        }
    }

    fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut s = base.clone();
        match self {
            SweepVariable::BsPowerDbm => s.bs_power_dbm = value,
            SweepVariable::CircuitPowerDbm => s.circuit_power_dbm = value,
            SweepVariable::AntennaCount => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("antenna count {value} is not a positive integer")));
                }
                s.antennas = value as usize;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    WmmseSumRate,
    PowerAllocMrt,
    PowerAllocRandom,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::WmmseSumRate => "wmmse_sum_rate",
            Algorithm::PowerAllocMrt => "power_alloc_mrt",
            Algorithm::PowerAllocRandom => "power_alloc_random",
        }
    }
}

fn default_trials() -> usize {
    100
}

fn default_restarts() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base: ScenarioConfig,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub seed: u64,
    /// Inner starts for the proposed solver.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::Config("sweep_values must not be empty".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        for &v in &self.sweep_values {
            self.sweep_variable.apply(&self.base, v)?.system_config()?;
        }
        Ok(())
    }

    /// Reads and validates a JSON spec.
    pub fn load(path: &Path) -> Result<Self> {
        let spec: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Seed of trial `t`, shared by every sweep value and algorithm.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed ^ trial as u64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Write `wall_ms = 0` so that repeated runs are byte-identical.
    pub deterministic: bool,
    /// Run trials on the rayon pool.
    pub parallel: bool,
    /// Re-derive the energy efficiency of about 1% of rows from their beamformers.
    pub spot_check: bool,
}

/// One CSV line. Column order is fixed by field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    /// Trial index, or `mean`.
    pub trial: String,
    pub seed: u64,
    pub algorithm: String,
    pub ee_nats_per_joule: f64,
    pub ee_bits_per_joule: f64,
    pub sum_rate_nats: f64,
    pub tx_power_w: f64,
    pub outer_iters: f64,
    pub inner_iters: f64,
    pub converged: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Data rows ordered by sweep value, trial, algorithm.
    pub rows: Vec<ResultRow>,
    /// One mean row per sweep value and algorithm.
    pub means: Vec<ResultRow>,
    /// Rows whose energy efficiency was re-derived.
    pub spot_checked: usize,
}

impl ExperimentResult {
    /// Data rows followed by mean rows.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.rows.iter().chain(&self.means) {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, spec: &ExperimentSpec, csv_path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(csv_path)?))?;
        write_sidecar(spec, &sidecar_path(csv_path))
    }

    /// Data rows of one algorithm at one sweep value.
    pub fn select(&self, algorithm: Algorithm, sweep_value: f64) -> impl Iterator<Item = &ResultRow> {
        self.rows
            .iter()
            .filter(move |r| r.algorithm == algorithm.name() && r.sweep_value == sweep_value)
    }

    pub fn mean(&self, algorithm: Algorithm, sweep_value: f64) -> Option<&ResultRow> {
        self.means
            .iter()
            .find(|r| r.algorithm == algorithm.name() && r.sweep_value == sweep_value)
    }
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

/// JSON echo of the spec with every sweep point resolved to its system configuration.
pub fn write_sidecar(spec: &ExperimentSpec, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Sidecar<'a> {
        spec: &'a ExperimentSpec,
        resolved: Vec<(f64, SystemConfig)>,
        version: &'static str,
    }
    let resolved = spec
        .sweep_values
        .iter()
        .map(|&v| Ok((v, spec.sweep_variable.apply(&spec.base, v)?.system_config()?)))
        .collect::<Result<_>>()?;
    let sidecar = Sidecar {
        spec,
        resolved,
        version: env!("CARGO_PKG_VERSION"),
    };
    std::fs::write(path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Outcome of one algorithm on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub w: BeamformerSet,
    pub ee: f64,
    pub sum_rate: f64,
    pub tx_power: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub converged: bool,
}

/// Runs one algorithm on one instance.
pub fn run_algorithm(
    algorithm: Algorithm,
    cfg: &SystemConfig,
    h: &ChannelSet,
    trial_seed: u64,
    restarts: usize,
) -> Result<TrialOutcome> {
    let mut outer = OuterOptions::for_config(cfg);
    outer.inner = InnerOptions {
        restarts,
        restart_seed: seeding::derive(trial_seed, 0x5EED),
        ..outer.inner
    };
    let pa = PowerAllocOptions::for_config(cfg);
    let from_report = |r: crate::outer_solver::SolveReport| TrialOutcome {
        tx_power: r.per_bs_powers.iter().sum(),
        ee: r.ee,
        sum_rate: r.sum_rate,
        outer_iters: r.outer_iters,
        inner_iters: r.inner_iters_total,
        converged: r.converged,
        w: r.w,
    };
    match algorithm {
        Algorithm::Proposed => Ok(from_report(outer_solve(cfg, h, &outer)?)),
        Algorithm::WmmseSumRate => {
            let rep = wmmse_sum_rate(cfg, h, &InnerOptions::for_config(cfg))?;
            Ok(TrialOutcome {
                ee: energy_efficiency(cfg, h, &rep.w)?,
                sum_rate: weighted_sum_rate(cfg, h, &rep.w),
                tx_power: rep.w.bs_powers().iter().sum(),
                outer_iters: 0,
                inner_iters: rep.iters,
                converged: rep.converged,
                w: rep.w,
            })
        }
        Algorithm::PowerAllocMrt => Ok(from_report(ee_power_allocation(cfg, h, &FixedBeamDirections::mrt(cfg, h)?, &pa)?)),
        Algorithm::PowerAllocRandom => {
            let dirs = FixedBeamDirections::random(cfg, seeding::derive(trial_seed, 0xB3A4))?;
            Ok(from_report(ee_power_allocation(cfg, h, &dirs, &pa)?))
        }
    }
}

fn nan_row(base: ResultRow) -> ResultRow {
    ResultRow {
        ee_nats_per_joule: f64::NAN,
        ee_bits_per_joule: f64::NAN,
        sum_rate_nats: f64::NAN,
        tx_power_w: f64::NAN,
        outer_iters: f64::NAN,
        inner_iters: f64::NAN,
        converged: false,
        ..base
    }
}

fn spot_selected(seed: u64, value_index: usize, algorithm: usize) -> bool {
    seeding::derive(seed, (value_index * 16 + algorithm) as u64).is_multiple_of(100)
}

fn run_trial(
    spec: &ExperimentSpec,
    value_index: usize,
    scenario: &ScenarioConfig,
    trial: usize,
    opts: RunOptions,
) -> Result<(Vec<ResultRow>, usize)> {
    let cfg = scenario.system_config()?;
    let seed = spec.trial_seed(trial);
    let (_, h) = realize(&scenario.geometry, &cfg, seed)?;
    let mut rows = Vec::with_capacity(spec.algorithms.len());
    let mut checked = 0;
    for (ai, &alg) in spec.algorithms.iter().enumerate() {
        let started = Instant::now();
        let outcome = run_algorithm(alg, &cfg, &h, seed, spec.restarts);
        let wall_ms = if opts.deterministic { 0.0 } else { started.elapsed().as_secs_f64() * 1e3 };
        let base = ResultRow {
            experiment: spec.name.clone(),
            sweep_var: spec.sweep_variable.name().into(),
            sweep_value: spec.sweep_values[value_index],
            trial: trial.to_string(),
            seed,
            algorithm: alg.name().into(),
            ee_nats_per_joule: 0.0,
            ee_bits_per_joule: 0.0,
            sum_rate_nats: 0.0,
            tx_power_w: 0.0,
            outer_iters: 0.0,
            inner_iters: 0.0,
            converged: false,
            wall_ms,
        };
        let row = match outcome {
            Ok(o) => {
                if opts.spot_check && spot_selected(seed, value_index, ai) {
                    let again = energy_efficiency(&cfg, &h, &o.w)?;
                    if (again - o.ee).abs() > 1e-10 * o.ee.abs().max(1.0) {
                        return Err(Error::Domain(format!(
                            "spot check failed for trial {trial}, {}: {again} vs {}",
                            alg.name(),
                            o.ee
                        )));
                    }
                    checked += 1;
                }
                ResultRow {
                    ee_nats_per_joule: o.ee,
                    ee_bits_per_joule: nats_to_bits(o.ee),
                    sum_rate_nats: o.sum_rate,
                    tx_power_w: o.tx_power,
                    outer_iters: o.outer_iters as f64,
                    inner_iters: o.inner_iters as f64,
                    converged: o.converged,
                    ..base
                }
            }
            Err(Error::NonConvergence { .. }) => nan_row(base),
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok((rows, checked))
}

fn mean_of(rows: &[&ResultRow], f: impl Fn(&ResultRow) -> f64) -> f64 {
    let vals: Vec<f64> = rows.iter().map(|r| f(r)).filter(|v| !v.is_nan()).collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Every sweep value × trial × algorithm, plus per-(value, algorithm) means.
/// Output is a pure function of the spec (and `wall_ms` unless deterministic).
pub fn run_experiment(spec: &ExperimentSpec, opts: RunOptions) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut means = Vec::new();
    let mut spot_checked = 0;
    for (vi, &value) in spec.sweep_values.iter().enumerate() {
        let scenario = spec.sweep_variable.apply(&spec.base, value)?;
        let trial = |t: usize| run_trial(spec, vi, &scenario, t, opts);
        let per_trial: Vec<(Vec<ResultRow>, usize)> = if opts.parallel {
            (0..spec.trials).into_par_iter().map(trial).collect::<Result<_>>()?
        } else {
            (0..spec.trials).map(trial).collect::<Result<_>>()?
        };
        let start = rows.len();
        for (r, c) in per_trial {
            rows.extend(r);
            spot_checked += c;
        }
        for &alg in &spec.algorithms {
            let sel: Vec<&ResultRow> = rows[start..].iter().filter(|r| r.algorithm == alg.name()).collect();
            means.push(ResultRow {
                experiment: spec.name.clone(),
                sweep_var: spec.sweep_variable.name().into(),
                sweep_value: value,
                trial: "mean".into(),
                seed: spec.seed,
                algorithm: alg.name().into(),
                ee_nats_per_joule: mean_of(&sel, |r| r.ee_nats_per_joule),
                ee_bits_per_joule: mean_of(&sel, |r| r.ee_bits_per_joule),
                sum_rate_nats: mean_of(&sel, |r| r.sum_rate_nats),
                tx_power_w: mean_of(&sel, |r| r.tx_power_w),
                outer_iters: mean_of(&sel, |r| r.outer_iters),
                inner_iters: mean_of(&sel, |r| r.inner_iters),
                converged: sel.iter().all(|r| r.converged),
                wall_ms: if opts.deterministic { 0.0 } else { sel.iter().map(|r| r.wall_ms).sum() },
            });
        }
    }
    Ok(ExperimentResult {
        rows,
        means,
        spot_checked,
    })
}
