use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwband::simgen::DatasetRecord;
use pwband_harness::experiments::{coverage, diameter, norm_bounds, single_band, voting_bands};
use pwband_harness::{output, ExperimentConfig, ExperimentKind, HarnessError, Result};

#[derive(Parser)]
#[command(
    name = "pwband",
    version,
    about = "Confidence bands for band-limited regression: experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the Hoeffding, randomized Hoeffding and Bernstein norm bounds.
    NormBounds(Common),
    /// Aggregate subsample bands by majority, random ordering and random thresholds.
    VotingBands(Common),
    /// Diameter statistics of single and aggregated intervals at random queries.
    DiameterTable(Common),
    /// Empirical simultaneous coverage of the band.
    Coverage(Common),
    /// One band on one dataset.
    Band {
        #[command(flatten)]
        common: Common,
        /// Dataset JSON as written by a previous `band` run.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file with overrides of the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

impl Common {
    fn load(&self, kind: ExperimentKind) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(kind, p)?,
            None => ExperimentConfig::defaults(kind),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.validate()?;
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
        Ok((cfg, dir))
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::NormBounds(c) => {
            let (cfg, dir) = c.load(ExperimentKind::NormBounds)?;
            output::write_norm_bounds(&dir, &norm_bounds::run(&cfg)?, c.plot)
        }
        Command::VotingBands(c) => {
            let (cfg, dir) = c.load(ExperimentKind::VotingBands)?;
            output::write_voting(&dir, &voting_bands::run(&cfg)?, c.plot)
        }
        Command::DiameterTable(c) => {
            let (cfg, dir) = c.load(ExperimentKind::DiameterTable)?;
            let report = diameter::run(&cfg)?;
            for r in &report.rows {
                println!(
                    "n={:<4} n0={:<4} {:<10} avg={:.4} med={:.4} std={:.4}",
                    r.n, r.n0, r.scheme, r.avg, r.med, r.std
                );
            }
            output::write_diameter(&dir, &report)
        }
        Command::Coverage(c) => {
            let (cfg, dir) = c.load(ExperimentKind::Coverage)?;
            let report = coverage::run(&cfg)?;
            println!(
                "coverage {}/{} = {:.4} (95% {:.4}..{:.4}), nominal {:.2}, floor {:.2}: {}",
                report.covered,
                report.trials,
                report.coverage,
                report.wilson_lo,
                report.wilson_hi,
                report.nominal,
                report.floor,
                if report.pass { "pass" } else { "FAIL" }
            );
            let files = output::write_coverage(&dir, &report)?;
            if !report.pass {
                return Err(HarnessError::Config(format!(
                    "coverage {:.4} below floor {}",
                    report.coverage, report.floor
                )));
            }
            Ok(files)
        }
        Command::Band { common, dataset } => {
            let (cfg, dir) = common.load(ExperimentKind::Band)?;
            let rec: Option<DatasetRecord> = match dataset {
                Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(p)?)?),
                None => None,
            };
            output::write_single_band(&dir, &single_band::run(&cfg, rec.as_ref())?, common.plot)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
