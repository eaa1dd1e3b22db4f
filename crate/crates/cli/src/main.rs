//! `kernel-lab` command-line driver.
//!
//! Exit codes: 0 on success, 1 for configuration and I/O errors, 2 for
//! numerical failures (singular systems, divergence, ...).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kernel_lab::lab::{
    emit_report, kernel_info, resolve_workers, run_verb, with_workers, ExperimentConfig, Verb,
};
use kernel_lab::Error;

#[derive(Parser, Debug)]
#[command(name = "kernel-lab", version, about = "Kernel interpolation and variance-floor experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Known and empirical eigenvalue spectra with decay fits.
    Spectrum(Common),
    /// Ridge sweeps of the variance term against the predicted rate.
    Variance(Common),
    /// Interpolation risk against n (noise-floor study).
    Scaling(Common),
    /// Gradient-descent networks against NTK interpolation.
    Ntk(Common),
    /// Concentration of the empirical semi-norm.
    Concentration(Common),
    /// Kernel diagnostics: kappa^2, Hölder estimate, top eigenvalues, decay.
    KernelInfo(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides KERNEL_LAB_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn run(verb: Verb, args: &Common) -> Result<PathBuf, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = Some(o.clone());
    }
    for w in cfg.resolve(verb)? {
        eprintln!("warning: {w}");
    }
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(verb.name()));
    cfg.output_dir = Some(dir.clone());
    cfg.write_resolved(&dir)?;
    let workers = resolve_workers(args.workers)?;

    let report = with_workers(workers, || -> Result<_, Error> {
        if verb == Verb::KernelInfo {
            let info = kernel_info(&cfg)?;
            // a closed pipe (e.g. `| head`) is not an error
            let _ = std::io::stdout().write_all(info.render().as_bytes());
            info.to_report()
        } else {
            run_verb(&cfg, verb)
        }
    })??;
    let files = emit_report(&report, &dir)?;
    if verb != Verb::KernelInfo {
        eprintln!("{}", report.verdict);
    }
    Ok(files.summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (verb, args) = match &cli.command {
        Command::Spectrum(a) => (Verb::Spectrum, a),
        Command::Variance(a) => (Verb::Variance, a),
        Command::Scaling(a) => (Verb::Scaling, a),
        Command::Ntk(a) => (Verb::Ntk, a),
        Command::Concentration(a) => (Verb::Concentration, a),
        Command::KernelInfo(a) => (Verb::KernelInfo, a),
    };
    match run(verb, args) {
        Ok(summary) => {
            let _ = writeln!(std::io::stdout(), "{}", summary.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
