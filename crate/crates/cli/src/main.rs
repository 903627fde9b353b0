use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eebf::channel::{realize, ChannelFile};
use eebf::harness::{estimate_flops, run_experiment, ExperimentSpec, RunOptions, ScenarioConfig};
use eebf::inner_solver::InnerOptions;
use eebf::oracle::{siso_eta_star, SisoInstance};
use eebf::outer_solver::{outer_solve, OuterOptions};
use eebf::parsim::{count_overhead, overhead_closed_form, run_parallel, ParsimOptions};
use eebf::{ChannelSet, Error, Result, SystemConfig};
use serde_json::json;

/// Energy-efficient coordinated multicell beamforming simulator.
#[derive(Parser)]
#[command(name = "eebf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop users, generate channels and save them as JSON.
    Drop(Common),
    /// Solve one instance and print the report as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Channel file from `drop`; generated from --seed when absent.
        #[arg(long)]
        channels: Option<PathBuf>,
    },
    /// Run an experiment spec and write CSV plus a JSON sidecar.
    Sweep(Common),
    /// Print the per-sweep flop estimate.
    Flops(Common),
    /// Run the message-passing simulation and write its trace as JSON lines.
    Parsim(Common),
    /// Grid brute force for a single-antenna, single-user scenario.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid points over [0, P].
        #[arg(long, default_value_t = 1_000_000)]
        points: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON, or an experiment spec for `sweep`. Defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials (sweep only).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Inner starts per probe for the proposed solver.
    #[arg(long)]
    restarts: Option<usize>,
    /// Zero the wall-clock column so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        match &self.config {
            Some(p) => ScenarioConfig::load(p),
            None => Ok(ScenarioConfig::default()),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn outer_options(&self, cfg: &SystemConfig) -> OuterOptions {
        let opts = OuterOptions::for_config(cfg);
        OuterOptions {
            inner: InnerOptions {
                restarts: self.restarts.unwrap_or(1),
                restart_seed: eebf::seeding::derive(self.seed(), 0x5EED),
                ..opts.inner.clone()
            },
            ..opts
        }
    }
}

fn instance(common: &Common) -> Result<(ScenarioConfig, SystemConfig, ChannelSet)> {
    let scenario = common.scenario()?;
    let cfg = scenario.system_config()?;
    let (_, h) = realize(&scenario.geometry, &cfg, common.seed())?;
    Ok((scenario, cfg, h))
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => print_stdout(&text)?,
    }
    Ok(())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Drop(c) => {
            let (scenario, _, h) = instance(&c)?;
            let file = ChannelFile {
                seed: c.seed(),
                geometry: scenario.geometry,
                channels: h,
            };
            let out = c.out.clone().unwrap_or_else(|| PathBuf::from("channels.json"));
            file.save(&out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Solve { common, channels } => {
            let (_, cfg, mut h) = instance(&common)?;
            if let Some(p) = channels {
                h = ChannelFile::load(&p)?.channels;
                h.validate(&cfg)?;
            }
            let rep = outer_solve(&cfg, &h, &common.outer_options(&cfg))?;
            emit(&serde_json::to_value(&rep)?, common.out.as_deref())?;
        }
        Command::Sweep(c) => {
            let path = c
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("sweep needs --config <experiment spec>".into()))?;
            let mut spec = ExperimentSpec::load(path)?;
            if let Some(t) = c.trials {
                spec.trials = t;
            }
            if let Some(s) = c.seed {
                spec.seed = s;
            }
            if let Some(r) = c.restarts {
                spec.restarts = r;
            }
            spec.validate()?;
            let res = run_experiment(
                &spec,
                RunOptions {
                    deterministic: c.deterministic,
                    parallel: true,
                    spot_check: true,
                },
            )?;
            match &c.out {
                Some(p) => {
                    res.save(&spec, p)?;
                    eprintln!("wrote {} rows to {}", res.rows.len() + res.means.len(), p.display());
                }
                None => {
                    let mut buf = Vec::new();
                    res.write_csv(&mut buf)?;
                    print_stdout(String::from_utf8_lossy(&buf).trim_end())?;
                }
            }
        }
        Command::Flops(c) => {
            let cfg = c.scenario()?.system_config()?;
            emit(&serde_json::to_value(estimate_flops(&cfg))?, c.out.as_deref())?;
        }
        Command::Parsim(c) => {
            let (_, cfg, h) = instance(&c)?;
            let mut opts = ParsimOptions::for_config(&cfg);
            opts.outer = c.outer_options(&cfg);
            let (rep, trace) = run_parallel(&cfg, &h, &opts)?;
            let out = c.out.clone().unwrap_or_else(|| PathBuf::from("trace.jsonl"));
            trace.save_jsonl(&out)?;
            let summary = json!({
                "eta_star": rep.eta_star,
                "ee": rep.ee,
                "outer_iters": rep.outer_iters,
                "kappa1": trace.kappa1,
                "kappa2": trace.kappa2,
                "overhead_reals": count_overhead(&trace)?,
                "overhead_closed_form": overhead_closed_form(&trace.kappa2, cfg.cells, cfg.total_users()),
                "init_reals": trace.init_reals,
                "messages": trace.messages.len(),
                "trace": out,
            });
            print_stdout(&serde_json::to_string_pretty(&summary)?)?;
        }
        Command::Oracle { common, points } => {
            let (_, cfg, h) = instance(&common)?;
            let inst = SisoInstance::from_config(&cfg, &h)?;
            let (eta, p) = siso_eta_star(&inst, points);
            let rep = outer_solve(&cfg, &h, &common.outer_options(&cfg))?;
            let value = json!({
                "instance": inst,
                "grid_eta_star": eta,
                "grid_power": p,
                "solver_eta_star": rep.eta_star,
                "solver_power": rep.per_bs_powers[0],
                "relative_error": (rep.eta_star - eta).abs() / eta,
            });
            emit(&value, common.out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
