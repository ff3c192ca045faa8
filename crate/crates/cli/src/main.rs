//! `gckz <task> [--config file] [overrides]`: runs one computation and writes a
//! JSON report. Exit status: 0 when every gated residual is within its
//! threshold, 1 when one is not, 2 for an invalid config, 3 for a numerical
//! failure.

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_kappa, parse_list, ConfigError, RunConfig, Task};
use tasks::{run, Failure};

#[derive(Parser, Debug)]
#[command(name = "gckz", version, about = "Stokes, braid and isomonodromy computations for the gcKZ system")]
struct Cli {
    task: Task,
    /// JSON config, or a previous report (its config echo is reused).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rank n of gl_n.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated diagonal of u.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    /// `3i`, `i` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config::bad("config", format!("{}: {e}", p.display())))?;
            let mut cfg = RunConfig::from_json(&text)?;
            cfg.task = cli.task;
            cfg
        }
        None => RunConfig::new(cli.task),
    };
    if let Some(n) = cli.n {
        cfg.n = Some(n);
    }
    if let Some(u) = &cli.u {
        cfg.u = Some(parse_list("u", u)?);
    }
    if let Some(k) = &cli.kappa {
        cfg.kappa = parse_kappa(k)?;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn threads() -> Result<(), ConfigError> {
    if let Ok(v) = std::env::var("GCKZ_THREADS") {
        let k: usize = v.trim().parse().map_err(|_| config::bad("GCKZ_THREADS", format!("`{v}` is not a count")))?;
        if k == 0 {
            return Err(config::bad("GCKZ_THREADS", "must be positive"));
        }
        // a second global build fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match threads().and_then(|_| configure(&cli)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cfg.out.clone();
    let report = match run(cfg) {
        Ok(r) => r,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(3);
        }
    };
    let text = serde_json::to_string_pretty(&report.json).expect("report serializes") + "\n";
    match out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                eprintln!("error: cannot write {p}: {e}");
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    if !report.passed {
        eprintln!("thresholds not met: {}", report.json["failed"]);
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
