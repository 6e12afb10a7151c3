use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use smib_pss::bench::{
    kconst_csv, kconst_rows, kconst_table, run_compare, run_simulation, trajectory_csv, tune, tune_summary,
    write_tune_outputs, BenchmarkSuite, GA_LOG_FILE, METRICS_FILE, REPORT_FILE, TUNED_FILE,
};
use smib_pss::config::{load_tuned, BenchConfig, RosterEntry};
use smib_pss::sim::ControllerKind;
use smib_pss::tuning::TuningMode;
use smib_pss::BenchError;

const DEFAULT_OUT: &str = "pss-bench-out";

/// Stabilizer benchmark for a single machine on an infinite bus.
#[derive(Parser)]
#[command(name = "pss-bench", version)]
struct Cli {
    /// TOML config; the built-in three-loading suite when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// GA seed, overriding `[ga] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `[suite] out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Machine-readable CSV on stdout instead of text.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// K1..K6 and open-loop eigenvalues at every configured loading.
    Kconst,
    /// One closed-loop run; exits 2 when the response does not settle.
    Simulate {
        /// Scenario name (default: nominal, or the first configured).
        #[arg(long)]
        scenario: Option<String>,
        /// none, cpss, ga-flpss or ga-cpss (default: the scenario's own).
        #[arg(long)]
        controller: Option<RosterEntry>,
        /// Tuned fragment written by `tune`.
        #[arg(long)]
        tuned: Option<PathBuf>,
    },
    /// GA tuning over the configured scenarios.
    Tune {
        /// ga-flpss or ga-cpss, overriding `[ga] mode`.
        #[arg(long)]
        mode: Option<TuningMode>,
    },
    /// Run the roster on every scenario and write the comparison report.
    Compare {
        /// Tuned fragment written by `tune`.
        #[arg(long)]
        tuned: Option<PathBuf>,
        /// Tune inline before comparing.
        #[arg(long)]
        tune: bool,
    },
}

enum Outcome {
    Ok,
    Unstable,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Unstable) => ExitCode::from(2),
        Err(e) => {
            eprintln!("pss-bench: {e}");
            ExitCode::from(1)
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    std::fs::write(path, bytes).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn mkdir(path: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run(cli: Cli) -> Result<Outcome, BenchError> {
    let mut cfg = match &cli.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.ga.seed = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    match cli.cmd {
        Cmd::Kconst => {
            let rows = kconst_rows(&cfg)?;
            if cli.csv {
                print!("{}", kconst_csv(&rows));
            } else {
                print!("{}", kconst_table(&rows));
            }
            Ok(Outcome::Ok)
        }
        Cmd::Simulate {
            scenario,
            controller,
            tuned,
        } => {
            if let Some(p) = tuned {
                cfg.tuned = Some(load_tuned(&p)?);
            }
            let name = scenario.unwrap_or_else(|| {
                cfg.scenario("nominal")
                    .unwrap_or(&cfg.scenarios[0])
                    .name
                    .clone()
            });
            let entry = match controller {
                Some(e) => e,
                None => match cfg.scenario(&name).map(|s| s.controller) {
                    Some(ControllerKind::Cpss) => RosterEntry::Cpss,
                    Some(ControllerKind::Flpss) => RosterEntry::GaFlpss,
                    _ => RosterEntry::None,
                },
            };
            if entry == RosterEntry::GaFlpss && cfg.tuned.is_none() {
                eprintln!("pss-bench: no tuned fragment, using the [flc] settings");
            }
            let res = run_simulation(&cfg, &name, entry)?;
            mkdir(&out)?;
            let path = out.join(BenchmarkSuite::trajectory_file(&name, entry));
            write(&path, &trajectory_csv(&res.trajectory))?;
            let m = &res.metrics;
            if cli.csv {
                println!("scenario,controller,ise,settling_time,settled,overshoot,damping_tau,stable");
                let tau = m.damping_tau.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
                println!(
                    "{name},{entry},{},{},{},{},{tau},{}",
                    m.ise, m.settling_time, m.settled, m.overshoot, m.stable
                );
            } else {
                if let Some(t) = res.trajectory.diverged_at {
                    println!("diverged at t={t}");
                }
                println!("{name} {entry} {m}");
                eprintln!("trajectory: {}", path.display());
            }
            Ok(if m.stable { Outcome::Ok } else { Outcome::Unstable })
        }
        Cmd::Tune { mode } => {
            if let Some(m) = mode {
                cfg.mode = m;
            }
            let t = tune(&cfg)?;
            write_tune_outputs(&out, &t)?;
            if cli.csv {
                print!("{}", String::from_utf8_lossy(&smib_pss::bench::ga_log_csv(&t.run)));
            } else {
                print!("{}", tune_summary(&t));
                eprintln!(
                    "wrote {} and {}",
                    out.join(GA_LOG_FILE).display(),
                    out.join(TUNED_FILE).display()
                );
            }
            Ok(Outcome::Ok)
        }
        Cmd::Compare { tuned, tune } => {
            if let Some(p) = tuned {
                cfg.tuned = Some(load_tuned(&p)?);
            }
            cfg.inline_tune |= tune;
            let report = run_compare(&cfg, &out)?;
            if cli.csv {
                print!("{}", report.metrics_csv());
            } else {
                print!("{}", report.render());
                eprintln!(
                    "wrote {} and {}",
                    out.join(REPORT_FILE).display(),
                    out.join(METRICS_FILE).display()
                );
            }
            Ok(Outcome::Ok)
        }
    }
}
