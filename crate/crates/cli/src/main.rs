//! `ultrafbm`: batch driver for kernel tables, samplers, particle
//! simulations and the verification suites.
//!
//! Exit codes: 0 all checks pass, 1 a check failed or the run broke down,
//! 2 configuration error, 3 missing or corrupt artifacts.

mod artifacts;
mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::experiments::Failure;

#[derive(Parser)]
#[command(name = "ultrafbm", version, about = "Hierarchical walks, particle systems and oscillatory fBm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (`section.key = value` lines).
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the covariance kernel.
    KernelEval(Common),
    /// Sample Gaussian paths and compare their covariance with the kernel.
    Sample(Common),
    /// Simulate occupation-time fluctuations of a particle system.
    Simulate(Common),
    /// Run verification suites.
    Verify {
        config: Option<PathBuf>,
        /// Comma-separated suite names or `all`; overrides `verify.suite`.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Weighted and discrete quadratic variation of sampled paths.
    Qv(Common),
    /// Spatial covariance of the limit field on balls.
    Spatial(Common),
    /// Check artifact digests and print the checks of a finished run.
    Report {
        /// Output directory of an earlier run.
        dir: PathBuf,
    },
    /// Print the configuration keys with their defaults.
    Schema,
}

fn load(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Config(config::ConfigError { line: None, field: None, message: format!("{}: {e}", path.display()) })
    })?;
    Ok(Config::parse(&text)?)
}

fn threads(cfg: &Config) -> Result<(), Failure> {
    let n = match cfg.get_opt::<usize>("run.threads")? {
        Some(n) => Some(n),
        None => ultrafbm::rng::configured_threads(),
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(cfg.invalid("run.threads", "must be positive").into());
        }
        // a second call only fails if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(name: &str, path: Option<&Path>, out: Option<PathBuf>, seed: Option<u64>, suite: Option<String>) -> ExitCode {
    let result = (|| {
        let mut cfg = load(path)?;
        if let Some(s) = seed {
            cfg.set("run.seed", &s.to_string());
        }
        if let Some(s) = suite {
            cfg.set("verify.suite", &s);
        }
        threads(&cfg)?;
        let seed: u64 = cfg.get("run.seed")?;
        let dir = match out {
            Some(d) => d,
            None => PathBuf::from(cfg.get::<String>("output.dir")?),
        };
        let (files, checks) = match name {
            "kernel-eval" => experiments::kernel_eval(&cfg),
            "sample" => experiments::sample(&cfg, seed),
            "simulate" => experiments::simulate(&cfg, seed),
            "verify" => experiments::verify(&cfg, seed),
            "qv" => experiments::qv(&cfg, seed),
            "spatial" => experiments::spatial(&cfg),
            _ => unreachable!(),
        }?;
        artifacts::write_run(&dir, name, seed, &cfg, files, &checks).map_err(|e| Failure::Run(e.to_string()))?;
        print!("{}", artifacts::table(&checks));
        Ok::<bool, Failure>(checks.iter().all(|c| c.pass))
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("run failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match cli.command {
        Command::KernelEval(c) => ("kernel-eval", c),
        Command::Sample(c) => ("sample", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Qv(c) => ("qv", c),
        Command::Spatial(c) => ("spatial", c),
        Command::Verify { config, suite, out, seed } => {
            let cfg = config.as_deref().map(Path::to_path_buf);
            return run("verify", cfg.as_deref(), out, seed, suite);
        }
        Command::Report { dir } => return artifacts::report(&dir),
        Command::Schema => {
            for (key, default, about) in config::SCHEMA {
                println!("{key:<22} {:<14} {about}", default.unwrap_or("-"));
            }
            return ExitCode::SUCCESS;
        }
    };
    run(name, Some(&common.config), common.out, common.seed, None)
}
