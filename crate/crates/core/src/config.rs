//! TOML configuration for the benchmark front end.
//!
//! ```toml
//! plant = "classic-smib"            # or a [plant] table with M, Td0p, ... keys
//!
//! [cpss]                          # optional; the conventional design is used when absent
//! kstab = 13.5
//! t1 = 0.7
//!
//! [flc]                           # optional base fuzzy stabilizer
//! ke = 600.0
//! kde = 120.0
//! ku = 0.01
//!
//! [ga]
//! mode = "ga-flpss"
//! population = 30
//! seed = 7
//!
//! [[scenario]]                    # optional; the three standard loadings otherwise
//! name = "nominal"
//! P = 1.0
//! Q = 0.015
//! step = 0.01
//!
//! [suite]
//! roster = ["none", "cpss", "ga-flpss"]
//! tuned = "tuned.toml"            # fragment written by `tune`, relative to this file
//! inline_tune = false
//!
//! [tuned]                         # the fragment may also be pasted inline
//! mode = "ga-flpss"
//! [tuned.flc]
//! ke = 120.0
//! kde = 30.0
//! ku = 0.08
//! ```

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use toml::Spanned;

use crate::controllers::CpssParams;
use crate::error::ConfigError;
use crate::fuzzy::FlcConfig;
use crate::ga::GaConfig;
use crate::params::{PlantConfig, CLASSIC_SMIB};
use crate::sim::Scenario;
use crate::tuning::{TunedController, TuningMode};

/// Controller slot in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RosterEntry {
    #[serde(rename = "none")]
    None,
    /// Conventional stabilizer: `[cpss]` or the phase-compensation design.
    #[serde(rename = "cpss")]
    Cpss,
    /// Fuzzy stabilizer with tuned settings.
    #[serde(rename = "ga-flpss", alias = "flpss")]
    GaFlpss,
    /// Conventional stabilizer with tuned gain and lead.
    #[serde(rename = "ga-cpss")]
    GaCpss,
}

impl RosterEntry {
    pub const DEFAULT_ROSTER: [RosterEntry; 3] = [Self::None, Self::Cpss, Self::GaFlpss];

    pub fn label(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Cpss => "cpss",
            Self::GaFlpss => "ga-flpss",
            Self::GaCpss => "ga-cpss",
        }
    }

    /// Tuning mode whose fragment this entry needs, if any.
    pub fn tuned_mode(self) -> Option<TuningMode> {
        match self {
            Self::GaFlpss => Some(TuningMode::GaFlpss),
            Self::GaCpss => Some(TuningMode::GaCpss),
            _ => None,
        }
    }
}

impl fmt::Display for RosterEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RosterEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "cpss" => Ok(Self::Cpss),
            "ga-flpss" | "flpss" => Ok(Self::GaFlpss),
            "ga-cpss" => Ok(Self::GaCpss),
            other => Err(format!(
                "unknown controller `{other}` (expected none, cpss, ga-flpss or ga-cpss)"
            )),
        }
    }
}

/// Tuned-parameter fragment as written by `tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunedSection {
    pub mode: TuningMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpss: Option<CpssParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flc: Option<FlcConfig>,
}

impl TunedSection {
    pub fn from_controller(c: &TunedController) -> Self {
        match c {
            TunedController::Cpss(p) => Self {
                mode: TuningMode::GaCpss,
                cpss: Some(*p),
                flc: None,
            },
            TunedController::Flpss(f) => Self {
                mode: TuningMode::GaFlpss,
                cpss: None,
                flc: Some(f.clone()),
            },
        }
    }

    pub fn controller(&self) -> Result<TunedController, String> {
        match (self.mode, &self.cpss, &self.flc) {
            (TuningMode::GaCpss, Some(p), None) => {
                p.validate().map_err(|e| e.to_string())?;
                Ok(TunedController::Cpss(*p))
            }
            (TuningMode::GaFlpss, None, Some(f)) => {
                f.validate().map_err(|e| e.to_string())?;
                Ok(TunedController::Flpss(f.clone()))
            }
            (TuningMode::GaCpss, _, _) => Err("mode ga-cpss needs exactly a [tuned.cpss] table".into()),
            (TuningMode::GaFlpss, _, _) => Err("mode ga-flpss needs exactly a [tuned.flc] table".into()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TunedFile {
    tuned: TunedSection,
}

/// Render a tuned controller as a TOML fragment loadable by [`load_tuned`] or
/// pasteable into a suite config.
pub fn tuned_fragment(c: &TunedController) -> String {
    toml::to_string(&TunedFile {
        tuned: TunedSection::from_controller(c),
    })
    .expect("tuned fragment serializes")
}

pub fn parse_tuned(text: &str, origin: &str) -> Result<TunedController, ConfigError> {
    let file: TunedFile = toml::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
    file.tuned.controller().map_err(|m| ConfigError::Parse {
        path: origin.to_string(),
        message: format!("[tuned]: {m}"),
    })
}

pub fn load_tuned(path: &Path) -> Result<TunedController, ConfigError> {
    let text = read(path)?;
    parse_tuned(&text, &path.display().to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    plant: Option<Spanned<toml::Value>>,
    cpss: Option<CpssParams>,
    flc: Option<FlcConfig>,
    ga: Option<Spanned<toml::Table>>,
    #[serde(default, rename = "scenario")]
    scenarios: Vec<Spanned<Scenario>>,
    suite: Option<SuiteSection>,
    tuned: Option<Spanned<TunedSection>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteSection {
    roster: Option<Spanned<Vec<RosterEntry>>>,
    out: Option<PathBuf>,
    #[serde(default)]
    inline_tune: bool,
    tuned: Option<PathBuf>,
}

/// GA settings of the benchmark suite. A larger population and a higher
/// mutation rate than the bare GA defaults; keys under `[ga]` override these.
pub fn suite_ga() -> GaConfig {
    GaConfig {
        population: 30,
        pm: 0.01,
        generations: 60,
        ..GaConfig::default()
    }
}

/// Fully resolved benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub plant_name: String,
    pub plant: PlantConfig,
    /// Explicit conventional stabilizer; `None` selects the phase-compensation design.
    pub cpss: Option<CpssParams>,
    pub flc: FlcConfig,
    pub ga: GaConfig,
    pub mode: TuningMode,
    pub scenarios: Vec<Scenario>,
    pub roster: Vec<RosterEntry>,
    pub out: Option<PathBuf>,
    pub inline_tune: bool,
    pub tuned: Option<TunedController>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            plant_name: CLASSIC_SMIB.to_string(),
            plant: PlantConfig::classic_smib(),
            cpss: None,
            flc: FlcConfig::default(),
            ga: suite_ga(),
            mode: TuningMode::GaFlpss,
            scenarios: Scenario::standard_suite(),
            roster: RosterEntry::DEFAULT_ROSTER.to_vec(),
            out: None,
            inline_tune: false,
            tuned: None,
        }
    }
}

impl BenchConfig {
    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// Parse config text. `origin` names the source in diagnostics and `base`
    /// resolves relative paths inside it.
    pub fn parse(text: &str, origin: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
        let at = |span: Range<usize>, msg: String| ConfigError::Parse {
            path: origin.to_string(),
            message: format!("line {}: {msg}", line_of(text, span.start)),
        };
        let mut cfg = Self::default();

        if let Some(p) = raw.plant {
            let span = p.span();
            match p.into_inner() {
                toml::Value::String(name) => {
                    cfg.plant = PlantConfig::preset(&name)
                        .ok_or_else(|| at(span.clone(), format!("unknown plant preset `{name}` (known: {CLASSIC_SMIB})")))?;
                    cfg.plant_name = name;
                }
                toml::Value::Table(t) => {
                    cfg.plant = t
                        .try_into::<PlantConfig>()
                        .map_err(|e| at(span.clone(), format!("[plant]: {}", e.message())))?;
                    cfg.plant_name = "custom".into();
                }
                _ => return Err(at(span, "plant must be a preset name or a table".into())),
            }
            cfg.plant.validate().map_err(|e| at(span, format!("[plant]: {e}")))?;
        }

        if let Some(c) = raw.cpss {
            c.validate().map_err(|e| invalid(origin, format!("[cpss]: {e}")))?;
            cfg.cpss = Some(c);
        }
        if let Some(f) = raw.flc {
            f.validate().map_err(|e| invalid(origin, format!("[flc]: {e}")))?;
            cfg.flc = f;
        }

        if let Some(ga) = raw.ga {
            let span = ga.span();
            let mut table = ga.into_inner();
            if let Some(mode) = table.remove("mode") {
                let s = mode
                    .as_str()
                    .ok_or_else(|| at(span.clone(), "[ga] mode must be a string".into()))?;
                cfg.mode = s.parse().map_err(|m| at(span.clone(), format!("[ga]: {m}")))?;
            }
            let mut merged = toml::Table::try_from(suite_ga()).expect("GaConfig serializes");
            merged.extend(table);
            cfg.ga = merged
                .try_into::<GaConfig>()
                .map_err(|e| at(span.clone(), format!("[ga]: {}", e.message())))?;
            cfg.ga.validate().map_err(|e| at(span, format!("[ga]: {e}")))?;
        }

        if !raw.scenarios.is_empty() {
            let mut seen = HashSet::new();
            cfg.scenarios = Vec::with_capacity(raw.scenarios.len());
            for s in raw.scenarios {
                let span = s.span();
                let sc = s.into_inner();
                sc.validate().map_err(|e| at(span.clone(), e.to_string()))?;
                if sc.name.is_empty()
                    || !sc
                        .name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
                {
                    return Err(at(
                        span,
                        format!("scenario name `{}` must be non-empty [A-Za-z0-9_-]", sc.name),
                    ));
                }
                if !seen.insert(sc.name.clone()) {
                    return Err(at(span, format!("duplicate scenario name `{}`", sc.name)));
                }
                cfg.scenarios.push(sc);
            }
        }

        if let Some(t) = raw.tuned {
            let span = t.span();
            cfg.tuned = Some(t.into_inner().controller().map_err(|m| at(span, format!("[tuned]: {m}")))?);
        }

        if let Some(suite) = raw.suite {
            if let Some(r) = suite.roster {
                let span = r.span();
                let roster = r.into_inner();
                let mut seen = HashSet::new();
                if roster.is_empty() {
                    return Err(at(span, "[suite] roster is empty".into()));
                }
                if let Some(dup) = roster.iter().find(|e| !seen.insert(**e)) {
                    return Err(at(span, format!("[suite] roster lists `{dup}` twice")));
                }
                cfg.roster = roster;
            }
            cfg.out = suite.out.map(|p| resolve(base, p));
            cfg.inline_tune = suite.inline_tune;
            if let Some(p) = suite.tuned {
                if cfg.tuned.is_some() {
                    return Err(invalid(origin, "both [tuned] and [suite] tuned are given".into()));
                }
                cfg.tuned = Some(load_tuned(&resolve(base, p))?);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        Self::parse(&text, &path.display().to_string(), path.parent())
    }
}

fn resolve(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn invalid(origin: &str, message: String) -> ConfigError {
    ConfigError::Parse {
        path: origin.to_string(),
        message,
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn parse_error(origin: &str, text: &str, e: &toml::de::Error) -> ConfigError {
    let message = match e.span() {
        Some(span) => format!("line {}: {}", line_of(text, span.start), e.message()),
        None => e.message().to_string(),
    };
    ConfigError::Parse {
        path: origin.to_string(),
        message,
    }
}
