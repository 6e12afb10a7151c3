//! Fixed-step closed-loop simulation, trajectory I/O and damping metrics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use crate::controllers::LinearBlock;
use crate::error::{FuzzyError, SimError};
use crate::fuzzy::FuzzyPss;
use crate::params::OperatingPoint;
use crate::smib::{StateSpace, IDX_DELTA, IDX_OMEGA};

/// Any state magnitude above this aborts the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Base penalty returned by [`ise_objective`] for a diverged run.
pub const DIVERGENCE_PENALTY: f64 = 1e6;
/// Settling band as a fraction of the peak |Δω|.
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    None,
    Cpss,
    Flpss,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [Self::None, Self::Cpss, Self::Flpss];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Cpss => "cpss",
            Self::Flpss => "flpss",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "cpss" => Ok(Self::Cpss),
            "flpss" | "ga-flpss" => Ok(Self::Flpss),
            other => Err(format!("unknown controller `{other}` (expected none, cpss or flpss)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Vt", default = "default_vt")]
    pub vt: f64,
    /// Mechanical-torque step applied at t = 0 (p.u.).
    pub step: f64,
    #[serde(default = "default_controller")]
    pub controller: ControllerKind,
    #[serde(default = "default_t_sim")]
    pub t_sim: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_vt() -> f64 {
    1.05
}
fn default_controller() -> ControllerKind {
    ControllerKind::None
}
fn default_t_sim() -> f64 {
    Scenario::DEFAULT_T_SIM
}
fn default_dt() -> f64 {
    Scenario::DEFAULT_DT
}

impl Scenario {
    pub const DEFAULT_T_SIM: f64 = 10.0;
    pub const DEFAULT_DT: f64 = 1e-3;

    pub fn new(name: &str, p: f64, q: f64, step: f64) -> Self {
        Self {
            name: name.to_string(),
            p,
            q,
            vt: default_vt(),
            step,
            controller: ControllerKind::None,
            t_sim: Self::DEFAULT_T_SIM,
            dt: Self::DEFAULT_DT,
        }
    }

    /// Light loading, 0.1 p.u. torque step.
    pub fn light() -> Self {
        Self::new("light", 0.4, 0.5, 0.1)
    }

    /// Nominal loading, 0.01 p.u. torque step.
    pub fn nominal() -> Self {
        Self::new("nominal", 1.0, 0.015, 0.01)
    }

    /// Heavy loading, 0.01 p.u. torque step.
    pub fn heavy() -> Self {
        Self::new("heavy", 1.25, 0.25, 0.01)
    }

    pub fn standard_suite() -> Vec<Self> {
        vec![Self::light(), Self::nominal(), Self::heavy()]
    }

    pub fn with_controller(mut self, c: ControllerKind) -> Self {
        self.controller = c;
        self
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint::new(self.p, self.q, self.vt)
    }

    /// `floor(T_sim/dt) + 1`, tolerant of rounding in the quotient.
    pub fn sample_count(&self) -> usize {
        let q = self.t_sim / self.dt;
        (q + 1e-9 * q.max(1.0)).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(format!("{}: {m}", self.name)));
        if !(self.t_sim.is_finite() && self.t_sim > 0.0) {
            return bad(format!("t_sim must be > 0, got {}", self.t_sim));
        }
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return bad(format!("dt must lie in (0, 0.01], got {}", self.dt));
        }
        if !self.step.is_finite() {
            return bad("disturbance must be finite".into());
        }
        if ![self.p, self.q, self.vt].iter().all(|v| v.is_finite()) || self.vt <= 0.0 {
            return bad("operating point must be finite with Vt > 0".into());
        }
        Ok(())
    }
}

/// Stabilizer attached to the plant's regulator summing junction.
#[derive(Debug, Clone)]
pub enum Stabilizer {
    None,
    Cpss(LinearBlock),
    Flpss(FuzzyPss),
}

impl Stabilizer {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Self::None => ControllerKind::None,
            Self::Cpss(_) => ControllerKind::Cpss,
            Self::Flpss(_) => ControllerKind::Flpss,
        }
    }

    fn n_states(&self) -> usize {
        match self {
            Self::Cpss(_) => 2,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub delta_omega: Vec<f64>,
    pub delta_delta: Vec<f64>,
    pub u_pss: Vec<f64>,
    pub dt: f64,
    pub t_sim: f64,
    /// Time at which a state exceeded [`DIVERGENCE_LIMIT`], if any.
    pub diverged_at: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn with_capacity(n: usize, dt: f64, t_sim: f64) -> Self {
        Self {
            t: Vec::with_capacity(n),
            delta_omega: Vec::with_capacity(n),
            delta_delta: Vec::with_capacity(n),
            u_pss: Vec::with_capacity(n),
            dt,
            t_sim,
            diverged_at: None,
        }
    }
}

struct ClosedLoop<'a> {
    ss: &'a StateSpace,
    ctrl: &'a Stabilizer,
    tm: f64,
    n_plant: usize,
}

impl ClosedLoop<'_> {
    /// Writes `dx` and returns the clamped stabilizer output at `x`.
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<f64, FuzzyError> {
        let np = self.n_plant;
        let (xp, xc) = x.split_at(np);
        let dw = xp[IDX_OMEGA];
        let u = match self.ctrl {
            Stabilizer::None => 0.0,
            Stabilizer::Cpss(blk) => {
                let raw = blk.c[0] * xc[0] + blk.c[1] * xc[1] + blk.d * dw;
                dx[np] = blk.a[(0, 0)] * xc[0] + blk.a[(0, 1)] * xc[1] + blk.b[0] * dw;
                dx[np + 1] = blk.a[(1, 0)] * xc[0] + blk.a[(1, 1)] * xc[1] + blk.b[1] * dw;
                blk.clamp(raw)
            }
            Stabilizer::Flpss(flc) => {
                let ddw = self.ss.omega_rate(xp, self.tm, 0.0);
                flc.clamp(flc.raw_output(dw, ddw)?)
            }
        };
        let a = &self.ss.a;
        for i in 0..np {
            let mut acc = self.ss.b_tm[i] * self.tm + self.ss.b_u[i] * u;
            for j in 0..np {
                acc += a[(i, j)] * xp[j];
            }
            dx[i] = acc;
        }
        Ok(u)
    }
}

/// Classical RK4 on the combined plant + stabilizer state, all deviations
/// starting at zero with the torque step applied from t = 0.
pub fn simulate(ss: &StateSpace, ctrl: &Stabilizer, sc: &Scenario) -> Result<Trajectory, SimError> {
    sc.validate()?;
    let np = ss.order();
    let n = np + ctrl.n_states();
    let sys = ClosedLoop {
        ss,
        ctrl,
        tm: sc.step,
        n_plant: np,
    };
    let samples = sc.sample_count();
    let dt = sc.dt;
    let mut tr = Trajectory::with_capacity(samples, dt, sc.t_sim);

    let mut x = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];

    for step in 0..samples {
        let t = step as f64 * dt;
        let u = sys.eval(&x, &mut k1)?;
        tr.t.push(t);
        tr.delta_omega.push(x[IDX_OMEGA]);
        tr.delta_delta.push(x[IDX_DELTA]);
        tr.u_pss.push(u);
        if x.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
            tr.diverged_at = Some(t);
            break;
        }
        if step + 1 == samples {
            break;
        }
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        sys.eval(&tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        sys.eval(&tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        sys.eval(&tmp, &mut k4)?;
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(tr)
}

/// Unclamped linear closed loop `(A_cl, b_tm)` for the plant alone or with a
/// conventional stabilizer. Plant states come first.
pub fn linear_closed_loop(ss: &StateSpace, cpss: Option<&LinearBlock>) -> (DMatrix<f64>, DVector<f64>) {
    let np = ss.order();
    let Some(blk) = cpss else {
        return (ss.a.clone(), ss.b_tm.clone());
    };
    let n = np + 2;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(&ss.a);
    for i in 0..np {
        a[(i, IDX_OMEGA)] += ss.b_u[i] * blk.d;
        a[(i, np)] += ss.b_u[i] * blk.c[0];
        a[(i, np + 1)] += ss.b_u[i] * blk.c[1];
    }
    for r in 0..2 {
        a[(np + r, IDX_OMEGA)] = blk.b[r];
        a[(np + r, np)] = blk.a[(r, 0)];
        a[(np + r, np + 1)] = blk.a[(r, 1)];
    }
    let mut b = DVector::zeros(n);
    b.rows_mut(0, np).copy_from(&ss.b_tm);
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub ise: f64,
    /// Last time |Δω| lies outside the settling band; `t_sim` when unsettled.
    pub settling_time: f64,
    pub settled: bool,
    /// Peak |Δω|.
    pub overshoot: f64,
    pub damping_tau: Option<f64>,
    pub stable: bool,
}

impl Metrics {
    /// Settling time for ranking: unsettled runs rank last.
    pub fn ranking_time(&self) -> f64 {
        if self.stable {
            self.settling_time
        } else {
            f64::INFINITY
        }
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tau = self
            .damping_tau
            .map(|v| v.to_string())
            .unwrap_or_else(|| "NA".to_string());
        write!(
            f,
            "ise={} settling_time={} settled={} overshoot={} damping_tau={} stable={}",
            self.ise, self.settling_time, self.settled, self.overshoot, tau, self.stable
        )
    }
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// `∫ Δω² dt` by the trapezoidal rule.
pub fn ise(tr: &Trajectory) -> f64 {
    let sq: Vec<f64> = tr.delta_omega.iter().map(|w| w * w).collect();
    trapezoid(&tr.t, &sq)
}

/// Objective for tuning: the ISE, or a penalty above [`DIVERGENCE_PENALTY`]
/// that grows the earlier the run diverged.
pub fn ise_objective(tr: &Trajectory) -> f64 {
    match tr.diverged_at {
        Some(td) => DIVERGENCE_PENALTY * (1.0 + (tr.t_sim - td).max(0.0) / tr.t_sim),
        None => ise(tr),
    }
}

/// `-1/slope` of a least-squares line through `ln|peak|` of successive local
/// maxima of `|y|`. Needs at least three peaks and a decaying envelope.
pub fn fit_damping_tau(t: &[f64], y: &[f64]) -> Result<f64, SimError> {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = peak * 1e-6;
    let mut pts = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let (a, b, c) = (y[i - 1].abs(), y[i].abs(), y[i + 1].abs());
        if b > a && b >= c && b > floor {
            pts.push((t[i], b.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(SimError::FitFailed(format!("{} peaks found, need 3", pts.len())));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(SimError::FitFailed(format!("envelope is not decaying (slope {slope})")));
    }
    Ok(-1.0 / slope)
}

pub fn compute_metrics(tr: &Trajectory) -> Result<Metrics, SimError> {
    if tr.is_empty() {
        return Err(SimError::InvalidScenario("empty trajectory".into()));
    }
    let peak = tr.delta_omega.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let band = SETTLING_BAND * peak;
    let last_out = tr.delta_omega.iter().rposition(|v| v.abs() > band);
    let (settling_time, settled) = match last_out {
        None => (0.0, true),
        Some(i) => (tr.t[i], i + 1 < tr.len()),
    };
    let settled = settled && tr.diverged_at.is_none();
    Ok(Metrics {
        ise: ise(tr),
        settling_time: if settled { settling_time } else { tr.t_sim },
        settled,
        overshoot: peak,
        damping_tau: fit_damping_tau(&tr.t, &tr.delta_omega).ok(),
        stable: settled,
    })
}

pub const CSV_HEADER: &str = "t,delta_omega,delta_delta,u_pss";

/// One row per sample, shortest round-trip float formatting. A diverged run
/// carries a leading `#` comment line.
pub fn write_csv<W: Write>(tr: &Trajectory, mut w: W) -> io::Result<()> {
    if let Some(td) = tr.diverged_at {
        writeln!(w, "# diverged at t={td}; trajectory truncated")?;
    }
    writeln!(w, "{CSV_HEADER}")?;
    for i in 0..tr.len() {
        writeln!(
            w,
            "{},{},{},{}",
            tr.t[i], tr.delta_omega[i], tr.delta_delta[i], tr.u_pss[i]
        )?;
    }
    Ok(())
}

/// Parse a trajectory written by [`write_csv`]. `dt` is taken from the first
/// two samples.
pub fn read_csv<R: BufRead>(r: R) -> io::Result<Trajectory> {
    let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut tr = Trajectory::with_capacity(0, 0.0, 0.0);
    let mut diverged = false;
    let mut seen_header = false;
    for line in r.lines() {
        let line = line?;
        if line.starts_with('#') {
            diverged = true;
            continue;
        }
        if !seen_header {
            if line.trim() != CSV_HEADER {
                return Err(invalid(format!("unexpected header `{line}`")));
            }
            seen_header = true;
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| invalid(e.to_string())))
            .collect::<Result<_, _>>()?;
        if vals.len() != 4 {
            return Err(invalid(format!("expected 4 columns, got {}", vals.len())));
        }
        tr.t.push(vals[0]);
        tr.delta_omega.push(vals[1]);
        tr.delta_delta.push(vals[2]);
        tr.u_pss.push(vals[3]);
    }
    if tr.t.len() >= 2 {
        tr.dt = tr.t[1] - tr.t[0];
    }
    tr.t_sim = tr.t.last().copied().unwrap_or(0.0);
    if diverged {
        tr.diverged_at = Some(tr.t_sim);
    }
    Ok(tr)
}
