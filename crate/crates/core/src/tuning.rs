//! Stabilizer tuning problems: the conventional phase-compensation baseline and
//! the GA fitness contexts for CPSS gains and fuzzy scalings / MF bases.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::controllers::{cpss_build, CpssParams};
use crate::eigen::{damping_ratio, dominant_mode, eigenvalues};
use crate::error::{ModelError, SimError};
use crate::fuzzy::{FlcConfig, FuzzyPss};
use crate::ga::{FitnessFunction, GeneSpec};
use crate::params::PlantConfig;
use crate::sim::{ise_objective, linear_closed_loop, simulate, Scenario, Stabilizer};
use crate::smib::{LinearizedPlant, StateSpace, IDX_EQP, IDX_OMEGA};

/// Largest phase lead requested from the single lead-lag stage.
const MAX_LEAD_DEG: f64 = 60.0;
/// Target damping ratio of the electromechanical mode for the baseline gain.
pub const BASELINE_ZETA: f64 = 0.4;

/// Transfer from stabilizer voltage to electrical torque `K2·ΔE'q` with the
/// rotor angle held fixed, evaluated at `jω`.
pub fn exciter_torque_response(ss: &StateSpace, omega: f64) -> Complex64 {
    let idx = [IDX_EQP, 3, 4];
    let n = idx.len();
    let jw = Complex64::new(0.0, omega);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut b = DVector::<Complex64>::zeros(n);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            m[(r, c)] = -Complex64::from(ss.a[(i, j)]);
        }
        m[(r, r)] += jw;
        b[r] = Complex64::from(ss.b_u[i]);
    }
    let x = m.lu().solve(&b).expect("exciter block is nonsingular at jω");
    // ΔTe = K2·ΔE'q = -M·A[ω, E'q]·ΔE'q; the M factor is dropped since only the
    // phase and relative size matter here
    x[0] * (-ss.a[(IDX_OMEGA, IDX_EQP)])
}

/// Phase-compensation design at the open-loop electromechanical frequency:
/// `T1` cancels the exciter-to-torque lag (single stage, default `T2`), then
/// the smallest gain reaching [`BASELINE_ZETA`] is taken from an eigenvalue
/// scan over `[0.1, 50]`.
pub fn conventional_baseline(plant: &LinearizedPlant, m: f64) -> Result<CpssParams, ModelError> {
    let ss = &plant.ss;
    let wn_guess = (plant.k.omega_s * plant.k.k1 / m).sqrt();
    let open = eigenvalues(&ss.a)?;
    let wn = dominant_mode(&open, wn_guess).map(|z| z.im).unwrap_or(wn_guess);

    let lag = -exciter_torque_response(ss, wn).arg();
    let lead = lag.clamp(0.0, MAX_LEAD_DEG.to_radians());
    let t2 = CpssParams::DEFAULT_T2;
    let t1 = ((lead + (wn * t2).atan()).tan() / wn).clamp(t2, 1.0);

    let mut best = (f64::NEG_INFINITY, 50.0);
    let n = 200;
    for i in 0..=n {
        let k = 0.1 * (500f64).powf(i as f64 / n as f64);
        let blk = cpss_build(&CpssParams::new(k, t1))?;
        let (a, _) = linear_closed_loop(ss, Some(&blk));
        let ev = eigenvalues(&a)?;
        let zeta = ev
            .iter()
            .filter(|z| z.im > 0.5 * wn)
            .map(|z| damping_ratio(*z))
            .fold(f64::INFINITY, f64::min);
        if zeta >= BASELINE_ZETA {
            return Ok(CpssParams::new(k, t1));
        }
        if zeta > best.0 {
            best = (zeta, k);
        }
    }
    Ok(CpssParams::new(best.1, t1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuningMode {
    /// Genes `[kstab, t1]` of the conventional stabilizer.
    #[serde(rename = "ga-cpss")]
    GaCpss,
    /// Genes `[ke, kde, ku, scale_e, scale_de, scale_u]` of the fuzzy stabilizer.
    #[serde(rename = "ga-flpss")]
    GaFlpss,
}

impl fmt::Display for TuningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GaCpss => "ga-cpss",
            Self::GaFlpss => "ga-flpss",
        })
    }
}

impl FromStr for TuningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ga-cpss" | "cpss" => Ok(Self::GaCpss),
            "ga-flpss" | "flpss" => Ok(Self::GaFlpss),
            other => Err(format!("unknown tuning mode `{other}` (expected ga-cpss or ga-flpss)")),
        }
    }
}

impl TuningMode {
    pub fn default_genes(self) -> Vec<GeneSpec> {
        match self {
            Self::GaCpss => vec![GeneSpec::new("kstab", 0.1, 50.0), GeneSpec::new("t1", 0.01, 1.0)],
            Self::GaFlpss => vec![
                GeneSpec::new("ke", 10.0, 300.0),
                GeneSpec::new("kde", 2.0, 60.0),
                GeneSpec::new("ku", 0.01, 0.1),
                GeneSpec::new("scale_e", 0.5, 1.0),
                GeneSpec::new("scale_de", 0.5, 1.0),
                GeneSpec::new("scale_u", 0.5, 1.0),
            ],
        }
    }
}

/// Decoded tuning result, ready to attach as a stabilizer.
#[derive(Debug, Clone, PartialEq)]
pub enum TunedController {
    Cpss(CpssParams),
    Flpss(FlcConfig),
}

impl TunedController {
    pub fn stabilizer(&self) -> Result<Stabilizer, SimError> {
        Ok(match self {
            Self::Cpss(p) => Stabilizer::Cpss(cpss_build(p)?),
            Self::Flpss(c) => Stabilizer::Flpss(FuzzyPss::new(c.clone())?),
        })
    }
}

/// One loading case: scenario plus its linearized plant.
#[derive(Debug, Clone)]
pub struct TuningCase {
    pub scenario: Scenario,
    pub plant: LinearizedPlant,
}

/// Fitness context: sum of ISE over the enabled scenarios for the stabilizer
/// decoded from a parameter vector.
#[derive(Debug, Clone)]
pub struct TuningProblem {
    pub mode: TuningMode,
    pub cases: Vec<TuningCase>,
    pub base_cpss: CpssParams,
    pub base_flc: FlcConfig,
    no_pss_ise: Vec<f64>,
}

impl TuningProblem {
    pub fn new(
        mode: TuningMode,
        plant: &PlantConfig,
        scenarios: &[Scenario],
        base_cpss: CpssParams,
        base_flc: FlcConfig,
    ) -> Result<Self, SimError> {
        if scenarios.is_empty() {
            return Err(SimError::InvalidScenario("tuning needs at least one scenario".into()));
        }
        let cases = scenarios
            .iter()
            .map(|sc| {
                sc.validate()?;
                Ok(TuningCase {
                    scenario: sc.clone(),
                    plant: LinearizedPlant::build(plant, &sc.operating_point())?,
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let no_pss_ise = cases
            .iter()
            .map(|c| Ok(ise_objective(&simulate(&c.plant.ss, &Stabilizer::None, &c.scenario)?)))
            .collect::<Result<Vec<_>, SimError>>()?;
        Ok(Self {
            mode,
            cases,
            base_cpss,
            base_flc,
            no_pss_ise,
        })
    }

    pub fn no_pss_ise(&self) -> &[f64] {
        &self.no_pss_ise
    }

    /// Build the controller described by decoded gene values.
    pub fn controller(&self, params: &[f64]) -> TunedController {
        match self.mode {
            TuningMode::GaCpss => TunedController::Cpss(CpssParams {
                kstab: params[0],
                t1: params[1],
                ..self.base_cpss
            }),
            TuningMode::GaFlpss => {
                let b = &self.base_flc;
                TunedController::Flpss(FlcConfig {
                    ke: params[0],
                    kde: params[1],
                    ku: params[2],
                    partition_e: b.partition_e.scaled(params[3]),
                    partition_de: b.partition_de.scaled(params[4]),
                    partition_u: b.partition_u.scaled(params[5]),
                    ..b.clone()
                })
            }
        }
    }

    /// Per-scenario objective (ISE or divergence penalty).
    pub fn case_objectives(&self, ctrl: &TunedController) -> Vec<f64> {
        let penalty = 2.0 * crate::sim::DIVERGENCE_PENALTY;
        let Ok(stab) = ctrl.stabilizer() else {
            return vec![penalty; self.cases.len()];
        };
        self.cases
            .iter()
            .map(|c| match simulate(&c.plant.ss, &stab, &c.scenario) {
                Ok(tr) => ise_objective(&tr),
                Err(_) => penalty,
            })
            .collect()
    }

    pub fn evaluate_many(&self, ctrls: &[TunedController]) -> Vec<f64> {
        ctrls
            .par_iter()
            .map(|c| self.case_objectives(c).iter().sum())
            .collect()
    }
}

impl FitnessFunction for TuningProblem {
    fn objective(&self, params: &[f64]) -> f64 {
        self.case_objectives(&self.controller(params)).iter().sum()
    }

    /// `max(1.5 × Σ no-PSS ISE, 1)`.
    fn standard_value(&self) -> f64 {
        (1.5 * self.no_pss_ise.iter().sum::<f64>()).max(1.0)
    }
}
