use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qjump::experiments::{self, checks_table, write_tables, ExperimentKind, RunConfig};
use qjump::Error;

/// Experiment runner for the fugacity-deformed gain-loss chain.
#[derive(Parser, Debug)]
#[command(name = "qjump", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spacing-ratio scan of the zero-charge Liouvillian block.
    Spectral(Common),
    /// Spacing-ratio scan of the half-filling no-jump Hamiltonian.
    NhSpectral(Common),
    /// Steady-state imbalance and activity scan.
    Dynamics(Common),
    /// Disorder-averaged imbalance dynamics from exact propagation.
    Transient(Common),
    /// Disorder-averaged imbalance dynamics from MPDO time evolution.
    Tebd(Common),
    /// Ginibre and two-dimensional Poisson reference statistics.
    References(Common),
    /// Runs the invariant suite.
    Verify(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration; absent fields take the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "QJUMP_THREADS")]
    threads: Option<usize>,
    /// Lift the desk-scale size limits.
    #[arg(long)]
    heavy: bool,
}

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_FAILURE: u8 = 3;

fn resolve(kind: ExperimentKind, common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path, kind)?,
        None => RunConfig::defaults(kind),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    cfg.heavy |= common.heavy;
    Ok(cfg)
}

fn write_diagnostics(dir: &Path, cfg: Option<&RunConfig>, error: String, detail: String) {
    let report = serde_json::json!({
        "error": error,
        "detail": detail,
        "config": cfg,
    });
    let path = dir.join("diagnostics.json");
    let written = std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap_or_default() + "\n"));
    match written {
        Ok(()) => eprintln!("diagnostics written to {}", path.display()),
        Err(e) => eprintln!("could not write {}: {e}", path.display()),
    }
}

fn fail(cfg: Option<&RunConfig>, out: &Path, err: Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_configuration() {
        ExitCode::from(CONFIG_ERROR)
    } else {
        write_diagnostics(out, cfg, err.to_string(), format!("{err:?}"));
        ExitCode::from(NUMERICAL_FAILURE)
    }
}

fn run_experiment(kind: ExperimentKind, common: &Common) -> ExitCode {
    let fallback = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let cfg = match resolve(kind, common) {
        Ok(cfg) => cfg,
        Err(e) => return fail(None, &fallback, e),
    };
    log::info!("running {} into {}", kind.as_str(), cfg.out.display());
    match experiments::run_and_write(&cfg) {
        Ok(files) => {
            if files.is_empty() {
                println!("empty grid: nothing to do");
            }
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(Some(&cfg), &cfg.out, e),
    }
}

fn run_verify(common: &Common) -> ExitCode {
    let fallback = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let cfg = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
            .and_then(|text| RunConfig::from_toml(&text)),
        None => Ok(RunConfig::defaults(ExperimentKind::DynamicsScan)),
    };
    let cfg = match cfg.and_then(|mut c| {
        if let Some(seed) = common.seed {
            c.base_seed = seed;
        }
        if let Some(out) = &common.out {
            c.out = out.clone();
        }
        c.validate().map(|_| c)
    }) {
        Ok(c) => c,
        Err(e) => return fail(None, &fallback, e),
    };
    let checks = match experiments::verify(&cfg) {
        Ok(c) => c,
        Err(e) => return fail(Some(&cfg), &cfg.out, e),
    };
    for c in &checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        let relation = if c.lower_bound { ">" } else { "<=" };
        println!("{verdict} {} = {:e} ({relation} {:e})", c.name, c.value, c.tolerance);
    }
    if let Err(e) = write_tables(&cfg.out, &cfg, &[checks_table(&checks)]) {
        return fail(Some(&cfg), &cfg.out, e);
    }
    if checks.iter().all(|c| c.passed()) {
        ExitCode::SUCCESS
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        write_diagnostics(&cfg.out, Some(&cfg), "invariant check failed".into(), failed.join(", "));
        ExitCode::from(NUMERICAL_FAILURE)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Spectral(c) => run_experiment(ExperimentKind::SpectralScan, c),
        Command::NhSpectral(c) => run_experiment(ExperimentKind::NhSpectralScan, c),
        Command::Dynamics(c) => run_experiment(ExperimentKind::DynamicsScan, c),
        Command::Transient(c) => run_experiment(ExperimentKind::Transient, c),
        Command::Tebd(c) => run_experiment(ExperimentKind::Tebd, c),
        Command::References(c) => run_experiment(ExperimentKind::References, c),
        Command::Verify(c) => run_verify(c),
    }
}
