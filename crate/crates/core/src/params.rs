//! Per-unit parameter sets for the single-machine infinite-bus plant.
//!
//! The flat [`PlantConfig`] mirrors the key names used in configuration files
//! (`M`, `Td0p`, `Xd`, `Ka`, ...). It splits into the typed groups consumed by
//! the model builders.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Name of the built-in preset carrying the published SMIB data.
pub const CLASSIC_SMIB: &str = "classic-smib";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Inertia coefficient, M = 2H (s).
    pub m: f64,
    /// d-axis open-circuit transient time constant (s).
    pub t_d0p: f64,
    /// Damping coefficient (p.u. torque / p.u. speed).
    pub d: f64,
    pub x_d: f64,
    pub x_dp: f64,
    pub x_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExciterParams {
    pub k_a: f64,
    pub t_a: f64,
    /// Rate-feedback gain (p.u. s).
    pub k_f: f64,
    pub t_f: f64,
}

/// Line impedance to the infinite bus plus local load admittance at the
/// generator terminal. `r` may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub r: f64,
    pub x: f64,
    pub g: f64,
    pub b: f64,
    /// System frequency (Hz).
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub p_e0: f64,
    pub q_e0: f64,
    pub v_t0: f64,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParams {
        name,
        reason: reason.into(),
    }
}

fn finite(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (n, v) in [
            ("M", self.m),
            ("Td0p", self.t_d0p),
            ("D", self.d),
            ("Xd", self.x_d),
            ("Xdp", self.x_dp),
            ("Xq", self.x_q),
        ] {
            finite(n, v)?;
        }
        if self.m <= 0.0 {
            return Err(invalid("M", "must be > 0"));
        }
        if self.t_d0p <= 0.0 {
            return Err(invalid("Td0p", "must be > 0"));
        }
        if self.d < 0.0 {
            return Err(invalid("D", "must be >= 0"));
        }
        if !(self.x_d > self.x_dp && self.x_dp > 0.0) {
            return Err(invalid("Xdp", "requires Xd > Xdp > 0"));
        }
        if self.x_q <= 0.0 {
            return Err(invalid("Xq", "must be > 0"));
        }
        Ok(())
    }
}

impl ExciterParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (n, v) in [("Ka", self.k_a), ("Ta", self.t_a), ("Kf", self.k_f), ("Tf", self.t_f)] {
            finite(n, v)?;
        }
        if self.k_a <= 0.0 {
            return Err(invalid("Ka", "must be > 0"));
        }
        if self.t_a <= 0.0 {
            return Err(invalid("Ta", "must be > 0"));
        }
        if self.t_f <= 0.0 {
            return Err(invalid("Tf", "must be > 0"));
        }
        if self.k_f < 0.0 {
            return Err(invalid("Kf", "must be >= 0"));
        }
        Ok(())
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (n, v) in [("R", self.r), ("X", self.x), ("G", self.g), ("B", self.b), ("f", self.f)] {
            finite(n, v)?;
        }
        if self.x <= 0.0 {
            return Err(invalid("X", "must be > 0"));
        }
        if self.f <= 0.0 {
            return Err(invalid("f", "must be > 0"));
        }
        Ok(())
    }

    /// Synchronous speed in rad/s.
    pub fn omega_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f
    }
}

impl OperatingPoint {
    pub fn new(p_e0: f64, q_e0: f64, v_t0: f64) -> Self {
        Self { p_e0, q_e0, v_t0 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (n, v) in [("Pe0", self.p_e0), ("Qe0", self.q_e0), ("Vt0", self.v_t0)] {
            finite(n, v)?;
        }
        if self.v_t0 <= 0.0 {
            return Err(invalid("Vt0", "must be > 0"));
        }
        Ok(())
    }
}

/// Flat key/value plant description, as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "Td0p")]
    pub td0p: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Xd")]
    pub xd: f64,
    #[serde(rename = "Xdp")]
    pub xdp: f64,
    #[serde(rename = "Xq")]
    pub xq: f64,
    #[serde(rename = "Ka")]
    pub ka: f64,
    #[serde(rename = "Ta")]
    pub ta: f64,
    #[serde(rename = "Kf")]
    pub kf: f64,
    #[serde(rename = "Tf")]
    pub tf: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub f: f64,
    #[serde(rename = "Pe0")]
    pub pe0: f64,
    #[serde(rename = "Qe0")]
    pub qe0: f64,
    #[serde(rename = "Vt0")]
    pub vt0: f64,
}

impl PlantConfig {
    /// Published SMIB generator, exciter, line/load and initial-condition data.
    pub fn classic_smib() -> Self {
        Self {
            m: 9.26,
            td0p: 7.76,
            d: 0.0,
            xd: 0.973,
            xdp: 0.190,
            xq: 0.550,
            ka: 50.0,
            ta: 0.05,
            kf: 0.025,
            tf: 1.0,
            r: -0.034,
            x: 0.997,
            g: 0.249,
            b: 0.262,
            f: 60.0,
            pe0: 1.0,
            qe0: 0.015,
            vt0: 1.05,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            CLASSIC_SMIB => Some(Self::classic_smib()),
            _ => None,
        }
    }

    pub fn generator(&self) -> GeneratorParams {
        GeneratorParams {
            m: self.m,
            t_d0p: self.td0p,
            d: self.d,
            x_d: self.xd,
            x_dp: self.xdp,
            x_q: self.xq,
        }
    }

    pub fn exciter(&self) -> ExciterParams {
        ExciterParams {
            k_a: self.ka,
            t_a: self.ta,
            k_f: self.kf,
            t_f: self.tf,
        }
    }

    pub fn network(&self) -> NetworkParams {
        NetworkParams {
            r: self.r,
            x: self.x,
            g: self.g,
            b: self.b,
            f: self.f,
        }
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint::new(self.pe0, self.qe0, self.vt0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.generator().validate()?;
        self.exciter().validate()?;
        self.network().validate()?;
        self.operating_point().validate()
    }
}
