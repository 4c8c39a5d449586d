use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectral_mask::config::{CliError, RunConfig};
use spectral_mask::oracle::Oracle;
use spectral_mask::{report, verify, ModelParams, Part};

/// Exact, sampled and bounded laws of a random-mask DFT coefficient.
#[derive(Parser)]
#[command(name = "spectral-mask", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write summary.json.
    Verify(Common),
    /// Tabulate exact and sampled tails against the tail bounds.
    Tails {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n", value_name = "N")]
        big_n: u32,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value = "real")]
        part: Part,
    },
    /// Classify which exponent of the combined bound dominates, per (N, m).
    Crossover(Common),
    /// Tabulate sub-Gaussian norms against their upper bounds.
    Psi2(Common),
    /// Sweep one bound formula over the grid.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        formula: String,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Comma-separated suite names.
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<String>>,
    /// Largest N the exact oracle enumerates.
    #[arg(long)]
    max_enum_n: Option<u32>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.mc.seed = seed;
        }
        if let Some(samples) = self.samples {
            cfg.mc.samples = samples;
            cfg.mc.batch = cfg.mc.batch.min(samples.max(1));
        }
        if let Some(suites) = &self.suites {
            cfg.suites = suites.clone();
        }
        if let Some(guard) = self.max_enum_n {
            cfg.max_enum_n = guard;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SPECTRAL_MASK_THREADS") else { return Ok(()) };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("SPECTRAL_MASK_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Verify(common) => {
            let cfg = common.load()?;
            let summary = verify::run_all(&cfg)?;
            for s in &summary.suites {
                let verdict = if s.passed { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {:<14} checks={} failures={} skipped={}",
                    s.name, s.checks, s.failures, s.skipped
                );
                for v in &s.violations {
                    println!("    {v}");
                }
            }
            let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
            let path = write(&cfg.output_dir, "summary.json", &(json + "\n"))?;
            println!("wrote {}", path.display());
            Ok(if summary.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Tails { common, big_n, l, m, part } => {
            let cfg = common.load()?;
            let params = ModelParams::new(big_n, l, m)?;
            let oracle = Oracle::with_guard(cfg.max_enum_n)?;
            let ts = cfg.t_grid.values(big_n);
            let reports = report::tail_reports(&params, part, &ts, &oracle, Some(&cfg.mc))?;
            let path = write(&cfg.output_dir, &report::tails_file_name(&params, part), &report::tails_csv(&reports))?;
            println!("wrote {}", path.display());
            let violated = reports.iter().any(|r| r.dominated.values().any(|d| !d));
            Ok(if violated { Outcome::Fail } else { Outcome::Pass })
        }
        Command::Crossover(common) => {
            let cfg = common.load()?;
            let path = write(&cfg.output_dir, "crossover.csv", &report::crossover_csv(&cfg))?;
            println!("wrote {}", path.display());
            Ok(Outcome::Pass)
        }
        Command::Psi2(common) => {
            let cfg = common.load()?;
            let oracle = Oracle::with_guard(cfg.max_enum_n)?;
            let path = write(&cfg.output_dir, "psi2.csv", &report::psi2_csv(&cfg, &oracle)?)?;
            println!("wrote {}", path.display());
            Ok(Outcome::Pass)
        }
        Command::Scan { common, formula } => {
            let cfg = common.load()?;
            let csv = report::scan_csv(&cfg, &formula)?;
            let path = write(&cfg.output_dir, &format!("scan_{formula}.csv"), &csv)?;
            println!("wrote {}", path.display());
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("spectral-mask: {e}");
            ExitCode::from(2)
        }
    }
}
