use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cuspdyn_cli::commands::{self, Outcome};
use cuspdyn_cli::config::{parse_ratio, ExperimentConfig};
use cuspdyn_cli::output::{output_dir, Sink};

#[derive(Parser)]
#[command(name = "cuspdyn", about = "Cusp excursions, covers and entropy for rank-one diagonal flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $CUSPDYN_OUT or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Refuse to overwrite outputs written with a different config.
    #[arg(long, global = true)]
    resume: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "L", global = true)]
    len: Option<usize>,
    #[arg(long, global = true)]
    l_min: Option<usize>,
    /// s / s3, as a number or `eN` for e^N.
    #[arg(long, global = true, value_parser = parse_ratio)]
    s_ratio: Option<f64>,
    /// s' / s3, as a number or `eN`.
    #[arg(long, global = true, value_parser = parse_ratio)]
    s_prime_ratio: Option<f64>,
    #[arg(long, global = true)]
    r0: Option<f64>,
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    #[arg(long, global = true)]
    n_samples: Option<usize>,
    #[arg(long, global = true)]
    n_atoms: Option<usize>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    digit: Option<u32>,
    #[arg(long, global = true)]
    digit_max: Option<u32>,
    #[arg(long, global = true)]
    delta0: Option<String>,
    #[arg(long, global = true)]
    eps0: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Haar trajectories and their excursions above s.
    Simulate,
    /// Census of admissible excursion patterns against the three bounds.
    Patterns,
    /// Cover counts of pattern elements against the improved cover bound.
    Cover,
    /// Bowen-box and partition entropy estimates.
    Entropy,
    /// Cusp entropy inequality, escape bound and dimension exponent.
    Verify,
    /// Return-time partition and the Bowen-ball inclusion test.
    Partition,
}

fn apply_overrides(mut c: ExperimentConfig, cli: &Cli) -> ExperimentConfig {
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = cli.$field.clone() { c.$field = v; } )* };
    }
    set!(seed, len, l_min, s_ratio, r0, n_traj, n_samples, n_atoms, lambda, digit, digit_max);
    if let Some(v) = cli.s_prime_ratio {
        c.s_prime_ratio = v;
    } else if cli.s_ratio.is_some() && c.s_prime_ratio < c.s_ratio {
        c.s_prime_ratio = c.s_ratio;
    }
    if let Some(v) = &cli.delta0 {
        c.bound.delta0 = v.clone();
    }
    if let Some(v) = &cli.eps0 {
        c.bound.eps0 = v.clone();
    }
    if let Some(v) = &cli.eps {
        c.bound.eps = v.clone();
    }
    if let Some(v) = &cli.delta {
        c.bound.delta = v.clone();
    }
    if cli.len.is_some() && cli.l_min.is_none() && c.l_min > c.len {
        c.l_min = c.len;
    }
    c
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| matches!(c.downcast_ref::<cuspdyn::Error>(), Some(cuspdyn::Error::InvalidArgument(_))))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let base = match &cli.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    let cfg = apply_overrides(base, &cli);
    let res = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let sink = match Sink::new(output_dir(cli.out.clone()), &cfg, cli.resume) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result: anyhow::Result<Outcome> = match cli.command {
        Command::Simulate => commands::run_simulate(&cfg, &res, &sink),
        Command::Patterns => commands::run_patterns(&cfg, &res, &sink),
        Command::Cover => commands::run_cover(&cfg, &res, &sink),
        Command::Entropy => commands::run_entropy(&cfg, &res, &sink),
        Command::Verify => commands::run_verify(&cfg, &res, &sink),
        Command::Partition => commands::run_partition(&cfg, &sink),
    };
    match result {
        Ok(o) => {
            println!("{}", o.summary);
            if o.violations > 0 {
                eprintln!("assertion failed: {} violation(s)", o.violations);
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) || e.to_string().starts_with("refusing") || e.to_string().contains("needs model") {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
