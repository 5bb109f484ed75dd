use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::bail;
use clap::{Parser, Subcommand};
use poreflow::{run_scenario, ExperimentConfig, Report, Scenario};

#[derive(Parser)]
#[command(name = "poreflow", version, about = "Self-similar asymptotics experiments for the pore-density model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (TOML). For `all`, a directory of `<scenario>.toml` files.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for the perturbation phases.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config key, e.g. `--set numerics.span=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Self-similar profile constants and residuals.
    Audit,
    /// Mean-field transport from a perturbed profile.
    Transport,
    /// Nonlocal drift-diffusion from a perturbed profile.
    Parabolic,
    /// Integral equation for the moment against the transport run.
    Volterra,
    /// Forced linear X-Y system.
    Xy,
    /// Parabolic against hyperbolic propagator, relative to the barrier.
    Barrier,
    /// Full pore model and its reduction.
    Full,
    /// Every scenario, concurrently, one subdirectory each.
    All,
}

impl Command {
    fn scenario(self) -> Option<Scenario> {
        Some(match self {
            Command::Audit => Scenario::SelfsimilarAudit,
            Command::Transport => Scenario::HyperbolicStability,
            Command::Parabolic => Scenario::ParabolicStability,
            Command::Volterra => Scenario::VolterraVsSim,
            Command::Xy => Scenario::XyLemma,
            Command::Barrier => Scenario::BarrierAudit,
            Command::Full => Scenario::FullReduction,
            Command::All => return None,
        })
    }
}

fn resolve(scenario: Scenario, config: Option<&Path>, cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match config {
        Some(path) => ExperimentConfig::load(path, &overrides)?,
        None => ExperimentConfig::with_overrides(scenario, &overrides)?,
    };
    if cfg.scenario != scenario {
        bail!("config is for `{}`, not `{}`", cfg.scenario, scenario);
    }
    Ok(cfg)
}

fn summary(report: &Report) {
    for c in &report.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        let rel = serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        println!("{tag} [{}] criterion {} {}: {:.6e} {rel} {:.3e}", report.scenario, c.criterion, c.name, c.value, c.bound);
    }
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let jobs: Vec<(Scenario, ExperimentConfig, PathBuf)> = match cli.command.scenario() {
        Some(s) => vec![(s, resolve(s, cli.config.as_deref(), &cli)?, cli.out.clone())],
        None => Scenario::ALL
            .into_iter()
            .map(|s| {
                let file = cli.config.as_ref().map(|d| d.join(format!("{s}.toml"))).filter(|p| p.exists());
                Ok((s, resolve(s, file.as_deref(), &cli)?, cli.out.join(s.name())))
            })
            .collect::<anyhow::Result<_>>()?,
    };
    if cli.dry_run {
        let mut stdout = std::io::stdout().lock();
        for (_, cfg, _) in &jobs {
            // A closed pipe (`| head`) is not an error here.
            if writeln!(stdout, "{}", cfg.to_toml()).is_err() {
                break;
            }
        }
        return Ok(ExitCode::SUCCESS);
    }
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|(s, cfg, out)| (s, scope.spawn(move || run_scenario(cfg, out)))).collect();
        handles.into_iter().map(|(s, h)| (*s, h.join().expect("scenario thread panicked"))).collect()
    });
    let mut ok = true;
    for (s, result) in results {
        match result {
            Ok(report) => {
                summary(&report);
                ok &= report.pass;
            }
            Err(e) => {
                eprintln!("FAIL [{s}] {:#}", anyhow::Error::new(e).context("scenario aborted"));
                ok = false;
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
