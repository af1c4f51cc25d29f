use clap::Parser;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use uavsim::config;
use uavsim::sweep::{self, Axis};

/// Run a sweep of the UAV network simulator and write one CSV per metric.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swept quantity.
    #[arg(long, value_enum, default_value = "ue")]
    axis: Axis,
    /// Number of seeds per point, overriding the scenario.
    #[arg(long)]
    seeds: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Simulated seconds per run, overriding the scenario.
    #[arg(long)]
    horizon: Option<f64>,
    /// Also write the event trace of every run.
    #[arg(long)]
    trace: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = cli.seeds {
        cfg.seeds = s;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }

    let echo = config::echo(&cfg);
    print!("{echo}");
    if let Err(e) = fs::create_dir_all(&cli.out).and_then(|_| fs::write(cli.out.join("config.txt"), &echo)) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }

    let result = match sweep::run_sweep(&cfg, cli.axis, cfg.seeds, cli.trace) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match sweep::write_outputs(&cli.out, &result) {
        Ok(files) => {
            eprintln!("wrote {} files to {}", files.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
