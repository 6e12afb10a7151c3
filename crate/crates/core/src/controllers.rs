//! Conventional stabilizer: gain, washout and a single lead-lag stage,
//! `K·sT_w/(1+sT_w)·(1+sT1)/(1+sT2)`, realized as a two-state linear block.

use nalgebra::{Matrix2, Matrix3, RowVector2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpssParams {
    pub kstab: f64,
    #[serde(default = "CpssParams::default_tw")]
    pub tw: f64,
    pub t1: f64,
    #[serde(default = "CpssParams::default_t2")]
    pub t2: f64,
    #[serde(default = "CpssParams::default_umin")]
    pub umin: f64,
    #[serde(default = "CpssParams::default_umax")]
    pub umax: f64,
}

impl CpssParams {
    pub const DEFAULT_TW: f64 = 10.0;
    pub const DEFAULT_T2: f64 = 0.05;
    pub const DEFAULT_LIMIT: f64 = 0.1;

    fn default_tw() -> f64 {
        Self::DEFAULT_TW
    }
    fn default_t2() -> f64 {
        Self::DEFAULT_T2
    }
    fn default_umin() -> f64 {
        -Self::DEFAULT_LIMIT
    }
    fn default_umax() -> f64 {
        Self::DEFAULT_LIMIT
    }

    /// Gain and lead time constant with default washout, lag and limits.
    pub fn new(kstab: f64, t1: f64) -> Self {
        Self {
            kstab,
            tw: Self::DEFAULT_TW,
            t1,
            t2: Self::DEFAULT_T2,
            umin: -Self::DEFAULT_LIMIT,
            umax: Self::DEFAULT_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, reason: &str| {
            Err(ModelError::InvalidParams {
                name,
                reason: reason.to_string(),
            })
        };
        for (name, v) in [
            ("kstab", self.kstab),
            ("tw", self.tw),
            ("t1", self.t1),
            ("t2", self.t2),
            ("umin", self.umin),
            ("umax", self.umax),
        ] {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        if self.kstab < 0.0 {
            return bad("kstab", "must be >= 0");
        }
        if self.tw <= 0.0 {
            return bad("tw", "must be > 0");
        }
        if self.t2 <= 0.0 {
            return bad("t2", "must be > 0");
        }
        if self.t1 < 0.0 {
            return bad("t1", "must be >= 0");
        }
        if self.umin > self.umax {
            return bad("umin", "must not exceed umax");
        }
        Ok(())
    }

    /// Analytic transfer function evaluated at `s = jω`.
    pub fn frequency_response(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        let one = Complex64::new(1.0, 0.0);
        self.kstab * (s * self.tw / (one + s * self.tw)) * ((one + s * self.t1) / (one + s * self.t2))
    }

    /// Frequency (rad/s) of maximum phase lead of the lead-lag stage.
    pub fn max_lead_frequency(&self) -> f64 {
        1.0 / (self.t1 * self.t2).sqrt()
    }

    /// Maximum phase lead of the lead-lag stage (rad).
    pub fn max_lead(&self) -> f64 {
        ((self.t1 - self.t2) / (self.t1 + self.t2)).asin()
    }
}

/// Exact zero-order-hold discretization cached for one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Zoh {
    dt: f64,
    phi: Matrix2<f64>,
    gamma: Vector2<f64>,
}

/// Two-state realization `x' = A x + B v`, `y = C x + D v`, output clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBlock {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: RowVector2<f64>,
    pub d: f64,
    pub state: Vector2<f64>,
    pub u_min: f64,
    pub u_max: f64,
    zoh: Option<Zoh>,
}

/// Build the washout + lead-lag block. State 0 is the washout memory, state 1
/// the lag memory.
pub fn cpss_build(p: &CpssParams) -> Result<LinearBlock, ModelError> {
    p.validate()?;
    let ratio = p.t1 / p.t2;
    Ok(LinearBlock {
        a: Matrix2::new(-1.0 / p.tw, 0.0, -1.0 / p.t2, -1.0 / p.t2),
        b: Vector2::new(1.0 / p.tw, 1.0 / p.t2),
        c: RowVector2::new(-p.kstab * ratio, p.kstab * (1.0 - ratio)),
        d: p.kstab * ratio,
        state: Vector2::zeros(),
        u_min: p.umin,
        u_max: p.umax,
        zoh: None,
    })
}

impl LinearBlock {
    pub fn reset(&mut self) {
        self.state = Vector2::zeros();
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.u_min, self.u_max)
    }

    /// Unclamped output for a given state and input.
    pub fn output(&self, x: &Vector2<f64>, v: f64) -> f64 {
        (self.c * x)[0] + self.d * v
    }

    pub fn derivative(&self, x: &Vector2<f64>, v: f64) -> Vector2<f64> {
        self.a * x + self.b * v
    }

    /// `C (jωI − A)⁻¹ B + D` of the realization.
    pub fn frequency_response(&self, omega: f64) -> Complex64 {
        let jw = Complex64::new(0.0, omega);
        let m11 = jw - self.a[(0, 0)];
        let m12 = Complex64::from(-self.a[(0, 1)]);
        let m21 = Complex64::from(-self.a[(1, 0)]);
        let m22 = jw - self.a[(1, 1)];
        let det = m11 * m22 - m12 * m21;
        let x0 = (m22 * self.b[0] - m12 * self.b[1]) / det;
        let x1 = (-m21 * self.b[0] + m11 * self.b[1]) / det;
        x0 * self.c[0] + x1 * self.c[1] + self.d
    }

    fn discretization(&mut self, dt: f64) -> Zoh {
        match self.zoh {
            Some(z) if z.dt == dt => z,
            _ => {
                let mut aug = Matrix3::<f64>::zeros();
                aug.fixed_view_mut::<2, 2>(0, 0).copy_from(&(self.a * dt));
                aug.fixed_view_mut::<2, 1>(0, 2).copy_from(&(self.b * dt));
                let e = aug.exp();
                let z = Zoh {
                    dt,
                    phi: e.fixed_view::<2, 2>(0, 0).into_owned(),
                    gamma: e.fixed_view::<2, 1>(0, 2).into_owned(),
                };
                self.zoh = Some(z);
                z
            }
        }
    }
}

/// One sample of the stabilizer: emit the clamped output for `input`, then
/// advance the state by `dt` holding the input constant over the step.
pub fn cpss_step(block: &mut LinearBlock, input: f64, dt: f64) -> f64 {
    assert!(dt > 0.0, "step size must be positive");
    let y = block.output(&block.state, input);
    let z = block.discretization(dt);
    block.state = z.phi * block.state + z.gamma * input;
    block.clamp(y)
}
