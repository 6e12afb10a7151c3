//! Benchmark driver behind the `pss-bench` subcommands: K-constant tables,
//! single runs, tuning and the multi-loading comparison.

use num_complex::Complex64;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{tuned_fragment, BenchConfig, RosterEntry};
use crate::controllers::{cpss_build, CpssParams};
use crate::eigen::eigenvalues;
use crate::error::BenchError;
use crate::fuzzy::FuzzyPss;
use crate::ga::{run_ga, GaRun, GenerationRecord};
use crate::params::OperatingPoint;
use crate::sim::{compute_metrics, simulate, write_csv, Metrics, Scenario, Stabilizer, Trajectory};
use crate::smib::{KConstants, LinearizedPlant};
use crate::tuning::{conventional_baseline, TunedController, TuningMode, TuningProblem};

pub const GA_LOG_FILE: &str = "ga_log.csv";
pub const TUNED_FILE: &str = "tuned.toml";
pub const REPORT_FILE: &str = "report.txt";
pub const METRICS_FILE: &str = "metrics.csv";

/// Conventional stabilizer of a config: the explicit `[cpss]` table, or the
/// phase-compensation design at the plant's own operating point.
pub fn conventional_cpss(cfg: &BenchConfig) -> Result<CpssParams, BenchError> {
    if let Some(p) = cfg.cpss {
        return Ok(p);
    }
    let plant = LinearizedPlant::build(&cfg.plant, &cfg.plant.operating_point())?;
    Ok(conventional_baseline(&plant, cfg.plant.m)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    fs::write(path, bytes).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn trajectory_csv(tr: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(tr, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct KconstRow {
    pub scenario: String,
    pub op: OperatingPoint,
    pub k: KConstants,
    pub eigenvalues: Vec<Complex64>,
}

pub fn kconst_rows(cfg: &BenchConfig) -> Result<Vec<KconstRow>, BenchError> {
    cfg.scenarios
        .iter()
        .map(|sc| {
            let op = sc.operating_point();
            let plant = LinearizedPlant::build(&cfg.plant, &op)?;
            Ok(KconstRow {
                scenario: sc.name.clone(),
                op,
                k: plant.k,
                eigenvalues: eigenvalues(&plant.ss.a)?,
            })
        })
        .collect()
}

fn complex_str(z: Complex64) -> String {
    if z.im < 0.0 {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

pub fn kconst_table(rows: &[KconstRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(s, "{}: P={} Q={} Vt={}", r.scenario, r.op.p_e0, r.op.q_e0, r.op.v_t0);
        for (i, k) in r.k.as_array().iter().enumerate() {
            let _ = writeln!(s, "  K{} = {}", i + 1, k);
        }
        let _ = writeln!(s, "  eigenvalues:");
        for z in &r.eigenvalues {
            let _ = writeln!(s, "    {}", complex_str(*z));
        }
    }
    s
}

/// One row per operating point; eigenvalues as `lambda<i>_re,lambda<i>_im`.
pub fn kconst_csv(rows: &[KconstRow]) -> String {
    let n = rows.iter().map(|r| r.eigenvalues.len()).max().unwrap_or(0);
    let mut s = String::from("scenario,P,Q,Vt,K1,K2,K3,K4,K5,K6");
    for i in 1..=n {
        let _ = write!(s, ",lambda{i}_re,lambda{i}_im");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{},{},{}", r.scenario, r.op.p_e0, r.op.q_e0, r.op.v_t0);
        for k in r.k.as_array() {
            let _ = write!(s, ",{k}");
        }
        for z in &r.eigenvalues {
            let _ = write!(s, ",{},{}", z.re, z.im);
        }
        s.push('\n');
    }
    s
}

fn missing_tuned(entry: RosterEntry, mode: TuningMode) -> BenchError {
    BenchError::MissingTuned(format!(
        "controller `{entry}` needs tuned parameters for mode {mode}: run \
         `pss-bench tune --config <file>` (with [ga] mode = \"{mode}\"), then point \
         [suite] tuned at the written {TUNED_FILE}, paste its [tuned] table into the \
         config, or rerun compare with --tune to tune inline"
    ))
}

/// Stabilizer for a roster entry. With `strict` unset, `ga-flpss` falls back
/// to the untuned `[flc]` settings when no fragment is available.
pub fn stabilizer_for(
    cfg: &BenchConfig,
    entry: RosterEntry,
    cpss: &CpssParams,
    tuned: Option<&TunedController>,
    strict: bool,
) -> Result<Stabilizer, BenchError> {
    Ok(match (entry, tuned) {
        (RosterEntry::None, _) => Stabilizer::None,
        (RosterEntry::Cpss, _) => Stabilizer::Cpss(cpss_build(cpss)?),
        (RosterEntry::GaFlpss, Some(t @ TunedController::Flpss(_)))
        | (RosterEntry::GaCpss, Some(t @ TunedController::Cpss(_))) => t.stabilizer()?,
        (RosterEntry::GaFlpss, _) if !strict => {
            Stabilizer::Flpss(FuzzyPss::new(cfg.flc.clone()).map_err(crate::error::SimError::from)?)
        }
        (e, _) => return Err(missing_tuned(e, e.tuned_mode().expect("tuned entry"))),
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trajectory: Trajectory,
    pub metrics: Metrics,
}

pub fn run_scenario(sc: &Scenario, cfg: &BenchConfig, stab: &Stabilizer) -> Result<RunResult, BenchError> {
    let plant = LinearizedPlant::build(&cfg.plant, &sc.operating_point())?;
    let trajectory = simulate(&plant.ss, stab, sc)?;
    let metrics = compute_metrics(&trajectory)?;
    Ok(RunResult { trajectory, metrics })
}

pub fn run_simulation(cfg: &BenchConfig, scenario: &str, entry: RosterEntry) -> Result<RunResult, BenchError> {
    let sc = cfg.scenario(scenario).ok_or_else(|| {
        let known: Vec<&str> = cfg.scenarios.iter().map(|s| s.name.as_str()).collect();
        crate::error::ConfigError::Invalid(format!(
            "unknown scenario `{scenario}` (configured: {})",
            known.join(", ")
        ))
    })?;
    let cpss = conventional_cpss(cfg)?;
    let stab = stabilizer_for(cfg, entry, &cpss, cfg.tuned.as_ref(), false)?;
    run_scenario(sc, cfg, &stab)
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub run: GaRun,
    pub tuned: TunedController,
    /// Objective of the untuned plant, summed over the scenarios.
    pub no_pss_objective: f64,
    /// Objective of the tuned controller.
    pub tuned_objective: f64,
}

impl TuneOutcome {
    /// Highest-fitness record of the run.
    pub fn best_record(&self) -> &GenerationRecord {
        best_record(&self.run)
    }
}

fn best_record(run: &GaRun) -> &GenerationRecord {
    run.records
        .iter()
        .reduce(|a, b| if b.best_fitness > a.best_fitness { b } else { a })
        .expect("a run records at least one generation")
}

pub fn tune(cfg: &BenchConfig) -> Result<TuneOutcome, BenchError> {
    let base = conventional_cpss(cfg)?;
    let problem = TuningProblem::new(cfg.mode, &cfg.plant, &cfg.scenarios, base, cfg.flc.clone())?;
    let specs = cfg.mode.default_genes();
    let run = run_ga(&cfg.ga, &specs, &problem)?;
    let params = best_record(&run).best_params.clone();
    let tuned = problem.controller(&params);
    let tuned_objective = problem.case_objectives(&tuned).iter().sum();
    Ok(TuneOutcome {
        no_pss_objective: problem.no_pss_ise().iter().sum(),
        tuned_objective,
        run,
        tuned,
    })
}

pub fn ga_log_csv(run: &GaRun) -> Vec<u8> {
    let mut buf = Vec::new();
    run.write_csv(&mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Writes the generation log and the tuned fragment into `out`.
pub fn write_tune_outputs(out: &Path, t: &TuneOutcome) -> Result<(), BenchError> {
    create_dir(out)?;
    write_file(&out.join(GA_LOG_FILE), &ga_log_csv(&t.run))?;
    write_file(&out.join(TUNED_FILE), tuned_fragment(&t.tuned).as_bytes())
}

pub fn tune_summary(t: &TuneOutcome) -> String {
    let best = t.best_record();
    let mut s = format!(
        "termination: {}\ngenerations: {}\nbest generation: {}\nbest fitness: {}\n",
        t.run.termination,
        t.run.records.len(),
        best.generation,
        best.best_fitness
    );
    for (n, v) in t.run.gene_names.iter().zip(&best.best_params) {
        let _ = writeln!(s, "{n} = {v}");
    }
    let _ = writeln!(s, "objective: {} (no PSS: {})", t.tuned_objective, t.no_pss_objective);
    s
}

/// Scenarios, controller roster and output directory of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSuite {
    pub scenarios: Vec<Scenario>,
    pub roster: Vec<RosterEntry>,
    pub out_dir: PathBuf,
}

impl BenchmarkSuite {
    pub fn from_config(cfg: &BenchConfig, out_dir: &Path) -> Self {
        Self {
            scenarios: cfg.scenarios.clone(),
            roster: cfg.roster.clone(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn trajectory_file(scenario: &str, entry: RosterEntry) -> String {
        format!("{scenario}_{}.csv", entry.label())
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub controller: RosterEntry,
    pub metrics: Metrics,
    /// File name relative to the output directory.
    pub trajectory: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub rows: Vec<ReportRow>,
    /// Roster entries by settling time (unsettled last, ties by ISE); empty
    /// for a single-controller roster.
    pub ranking: Vec<RosterEntry>,
}

impl ScenarioReport {
    pub fn row(&self, entry: RosterEntry) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.controller == entry)
    }

    /// Fastest settling controller, if any settles.
    pub fn winner(&self) -> Option<RosterEntry> {
        let first = *self.ranking.first()?;
        self.row(first)?.metrics.stable.then_some(first)
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub plant_name: String,
    pub cpss: CpssParams,
    pub tuned: Option<TunedController>,
    pub scenarios: Vec<ScenarioReport>,
}

impl ComparisonReport {
    pub fn scenario(&self, name: &str) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.scenario.name == name)
    }

    pub fn metrics_csv(&self) -> String {
        let mut s = String::from(
            "scenario,controller,ise,settling_time,settled,overshoot,damping_tau,stable,trajectory\n",
        );
        for sr in &self.scenarios {
            for r in &sr.rows {
                let m = &r.metrics;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    sr.scenario.name,
                    r.controller,
                    m.ise,
                    m.settling_time,
                    m.settled,
                    m.overshoot,
                    tau_str(m.damping_tau),
                    m.stable,
                    r.trajectory
                );
            }
        }
        s
    }

    pub fn render(&self) -> String {
        let mut s = format!("plant: {}\n", self.plant_name);
        let c = &self.cpss;
        let _ = writeln!(
            s,
            "cpss: kstab={} tw={} t1={} t2={} limits=[{}, {}]",
            c.kstab, c.tw, c.t1, c.t2, c.umin, c.umax
        );
        match &self.tuned {
            Some(TunedController::Flpss(f)) => {
                let _ = writeln!(s, "ga-flpss: ke={} kde={} ku={}", f.ke, f.kde, f.ku);
            }
            Some(TunedController::Cpss(p)) => {
                let _ = writeln!(s, "ga-cpss: kstab={} t1={}", p.kstab, p.t1);
            }
            None => {}
        }

        let head = ["controller", "ise", "settling_time", "settled", "overshoot", "damping_tau", "stable", "trajectory"];
        for sr in &self.scenarios {
            let sc = &sr.scenario;
            let _ = writeln!(s, "\n== {}: P={} Q={} Vt={} step={} ==", sc.name, sc.p, sc.q, sc.vt, sc.step);
            let mut table: Vec<Vec<String>> = vec![head.iter().map(|h| h.to_string()).collect()];
            for r in &sr.rows {
                let m = &r.metrics;
                table.push(vec![
                    r.controller.to_string(),
                    m.ise.to_string(),
                    m.settling_time.to_string(),
                    m.settled.to_string(),
                    m.overshoot.to_string(),
                    tau_str(m.damping_tau),
                    m.stable.to_string(),
                    r.trajectory.clone(),
                ]);
            }
            s.push_str(&align(&table));
            if !sr.ranking.is_empty() {
                let names: Vec<&str> = sr.ranking.iter().map(|e| e.label()).collect();
                let _ = writeln!(s, "ranking by settling time: {}", names.join(" < "));
                match sr.winner() {
                    Some(w) => {
                        let _ = writeln!(s, "winner: {w}");
                    }
                    None => s.push_str("winner: none settles\n"),
                }
            }
        }

        if self.scenarios.iter().any(|sr| !sr.ranking.is_empty()) {
            s.push_str("\nsummary\n");
            for sr in &self.scenarios {
                let w = sr.winner().map(|e| e.label()).unwrap_or("none settles");
                let _ = writeln!(s, "  {}: {w}", sr.scenario.name);
            }
        }
        s
    }
}

fn tau_str(t: Option<f64>) -> String {
    t.map(|v| v.to_string()).unwrap_or_else(|| "NA".to_string())
}

fn align(rows: &[Vec<String>]) -> String {
    let ncol = rows[0].len();
    let width: Vec<usize> = (0..ncol)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| format!("{v:<w$}", w = width[c]))
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

fn rank(rows: &[ReportRow]) -> Vec<RosterEntry> {
    let mut order: Vec<&ReportRow> = rows.iter().collect();
    order.sort_by(|a, b| {
        a.metrics
            .ranking_time()
            .total_cmp(&b.metrics.ranking_time())
            .then(a.metrics.ise.total_cmp(&b.metrics.ise))
    });
    order.into_iter().map(|r| r.controller).collect()
}

/// Run every roster entry on every scenario, writing trajectories, the
/// metrics CSV and the text report into `out_dir`. With `inline_tune` set in
/// the config the GA runs first and its outputs land in the same directory.
pub fn run_compare(cfg: &BenchConfig, out_dir: &Path) -> Result<ComparisonReport, BenchError> {
    let suite = BenchmarkSuite::from_config(cfg, out_dir);
    let cpss = conventional_cpss(cfg)?;

    let mut tuned = cfg.tuned.clone();
    if cfg.inline_tune {
        let t = tune(cfg)?;
        write_tune_outputs(out_dir, &t)?;
        tuned = Some(t.tuned);
    }
    let stabs = suite
        .roster
        .iter()
        .map(|&e| stabilizer_for(cfg, e, &cpss, tuned.as_ref(), true))
        .collect::<Result<Vec<_>, _>>()?;

    create_dir(out_dir)?;
    let mut scenarios = Vec::with_capacity(suite.scenarios.len());
    for sc in &suite.scenarios {
        let mut rows = Vec::with_capacity(stabs.len());
        for (&entry, stab) in suite.roster.iter().zip(&stabs) {
            let res = run_scenario(sc, cfg, stab)?;
            let file = BenchmarkSuite::trajectory_file(&sc.name, entry);
            write_file(&out_dir.join(&file), &trajectory_csv(&res.trajectory))?;
            rows.push(ReportRow {
                controller: entry,
                metrics: res.metrics,
                trajectory: file,
            });
        }
        let ranking = if rows.len() > 1 { rank(&rows) } else { Vec::new() };
        scenarios.push(ScenarioReport {
            scenario: sc.clone(),
            rows,
            ranking,
        });
    }

    let report = ComparisonReport {
        plant_name: cfg.plant_name.clone(),
        cpss,
        tuned,
        scenarios,
    };
    write_file(&out_dir.join(METRICS_FILE), report.metrics_csv().as_bytes())?;
    write_file(&out_dir.join(REPORT_FILE), report.render().as_bytes())?;
    Ok(report)
}
