//! `sdof`: runs experiments and writes `rates.csv`, `region.json` and
//! `summary.json`. Exit status is 0 on pass, 2 when a slope misses its
//! target tolerance (or a channel fails the rank check), 1 on error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sdof_core::experiment::{
    run_compare, run_ergodic, run_gaussian, run_region, run_verify_channel, ExperimentConfig, RunArtifacts, Verdict,
};

#[derive(Parser)]
#[command(name = "sdof", version, about = "Secrecy degree-of-freedom experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constant-state model: rates over the SNR grid, slopes and region.
    Gaussian(RunArgs),
    /// Block-fading model: averaged secrecy rates per power policy.
    Ergodic(RunArgs),
    /// Analytic ergodic vs constant-state regions (single-antenna users).
    Compare(RunArgs),
    /// Rank check on a channel file, or on a freshly generated channel.
    VerifyChannel(VerifyArgs),
    /// Analytic region of the configured model.
    Region(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `out`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    fields: FieldOverrides,
}

#[derive(Args)]
struct VerifyArgs {
    /// Channel JSON to check instead of generating one.
    #[arg(long)]
    channel: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Default)]
struct FieldOverrides {
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long = "N1")]
    n1: Option<String>,
    #[arg(long = "N2")]
    n2: Option<String>,
    #[arg(long = "J1")]
    j1: Option<String>,
    #[arg(long = "J2")]
    j2: Option<String>,
    #[arg(long)]
    r1: Option<String>,
    #[arg(long)]
    r2: Option<String>,
    /// Comma-separated dB values.
    #[arg(long = "snr_db_grid", alias = "snr-db-grid")]
    snr_db_grid: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    blocks: Option<String>,
    /// full1, full2, equal or split(<fraction for user 1>).
    #[arg(long = "power_policy", alias = "power-policy")]
    power_policy: Option<String>,
    #[arg(long = "common_state_count", alias = "common-state-count")]
    common_state_count: Option<String>,
}

impl FieldOverrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("seed", &self.seed),
            ("model", &self.model),
            ("M", &self.m),
            ("N1", &self.n1),
            ("N2", &self.n2),
            ("J1", &self.j1),
            ("J2", &self.j2),
            ("r1", &self.r1),
            ("r2", &self.r2),
            ("snr_db_grid", &self.snr_db_grid),
            ("trials", &self.trials),
            ("blocks", &self.blocks),
            ("power_policy", &self.power_policy),
            ("common_state_count", &self.common_state_count),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

impl RunArgs {
    fn is_empty(&self) -> bool {
        self.config.is_none() && self.fields.pairs().is_empty()
    }

    fn load(&self) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
            None => None,
        };
        Ok(ExperimentConfig::with_overrides(text.as_deref(), &self.fields.pairs())?)
    }

    fn out_dir(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.out.as_ref()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn write_all(dir: &Path, artifacts: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, contents) in &artifacts.files {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<Verdict> {
    let (artifacts, dir) = match &cli.command {
        Command::Gaussian(a) | Command::Ergodic(a) | Command::Compare(a) | Command::Region(a) => {
            let cfg = a.load()?;
            let artifacts = match &cli.command {
                Command::Gaussian(_) => run_gaussian(&cfg)?,
                Command::Ergodic(_) => run_ergodic(&cfg)?,
                Command::Compare(_) => run_compare(&cfg)?,
                _ => run_region(&cfg)?,
            };
            (artifacts, a.out_dir(Some(&cfg)))
        }
        Command::VerifyChannel(v) => {
            let cfg = if v.run.is_empty() { None } else { Some(v.run.load()?) };
            let text = match &v.channel {
                Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
                None => None,
            };
            (run_verify_channel(cfg.as_ref(), text.as_deref())?, v.run.out_dir(cfg.as_ref()))
        }
    };
    write_all(&dir, &artifacts)?;
    let names: Vec<&str> = artifacts.files.iter().map(|(n, _)| *n).collect();
    let status = match artifacts.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::NotAssessed => "not assessed",
    };
    println!("{status}: wrote {} to {}", names.join(", "), dir.display());
    Ok(artifacts.verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Usage errors share the general error status; help and version succeed.
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(Verdict::Fail) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
