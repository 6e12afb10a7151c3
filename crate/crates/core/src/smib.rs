//! Linearized single-machine infinite-bus plant.
//!
//! The generator is a one-axis salient-pole machine (E'q behind X'd, no
//! stator resistance) feeding a terminal bus with a local load `G + jB`,
//! connected to the infinite bus through `R + jX`. The infinite-bus voltage
//! is solved from the terminal operating point rather than given.
//!
//! State order of the realization: `[Δδ, Δω, ΔE'q, ΔE_fd, x_f]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use crate::error::ModelError;
use crate::params::{ExciterParams, GeneratorParams, NetworkParams, OperatingPoint, PlantConfig};

pub const STATE_LABELS: [&str; 5] = ["delta_delta", "delta_omega", "delta_eqp", "delta_efd", "x_f"];
pub const IDX_DELTA: usize = 0;
pub const IDX_OMEGA: usize = 1;
pub const IDX_EQP: usize = 2;
pub const IDX_EFD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialConditions {
    /// Rotor (q-axis) angle relative to the infinite bus (rad).
    pub delta0: f64,
    pub eqp0: f64,
    pub id0: f64,
    pub iq0: f64,
    /// Infinite-bus voltage magnitude (p.u.).
    pub vinf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub omega_s: f64,
}

impl KConstants {
    pub fn as_array(&self) -> [f64; 6] {
        [self.k1, self.k2, self.k3, self.k4, self.k5, self.k6]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    /// Mechanical-torque disturbance input column.
    pub b_tm: DVector<f64>,
    /// Stabilizer voltage input column (summed at the voltage regulator).
    pub b_u: DVector<f64>,
    pub c_omega: DVector<f64>,
    pub c_delta: DVector<f64>,
    pub labels: Vec<&'static str>,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// dΔω/dt for the given plant state, torque step and stabilizer signal.
    pub fn omega_rate(&self, x: &[f64], tm: f64, u: f64) -> f64 {
        let row = self.a.row(IDX_OMEGA);
        let mut acc = self.b_tm[IDX_OMEGA] * tm + self.b_u[IDX_OMEGA] * u;
        for (j, xj) in x.iter().enumerate() {
            acc += row[j] * xj;
        }
        acc
    }
}

/// Plant stator/network solution for a given rotor angle and E'q.
#[derive(Debug, Clone, Copy)]
struct StatorSolution {
    id: f64,
    iq: f64,
}

/// Thevenin equivalent of line + local load as seen from the terminal.
struct Thevenin {
    re: f64,
    xe: f64,
    /// Magnitude scale `|1/(1 + Z·Y_L)|` applied to the infinite-bus voltage.
    scale: f64,
    /// Angle of `1/(1 + Z·Y_L)` (rad).
    shift: f64,
}

impl Thevenin {
    fn new(np: &NetworkParams) -> Self {
        let z = Complex64::new(np.r, np.x);
        let yl = Complex64::new(np.g, np.b);
        let c = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + z * yl);
        let zth = z * c;
        Self {
            re: zth.re,
            xe: zth.im,
            scale: c.norm(),
            shift: c.arg(),
        }
    }
}

/// Steady-state phasor solution behind the given network and terminal loading.
pub fn compute_initial_conditions(
    gp: &GeneratorParams,
    np: &NetworkParams,
    op: &OperatingPoint,
) -> Result<InitialConditions, ModelError> {
    gp.validate()?;
    np.validate()?;
    op.validate()?;

    let z = Complex64::new(np.r, np.x);
    let yl = Complex64::new(np.g, np.b);
    let vt = Complex64::new(op.v_t0, 0.0);
    let i_gen = Complex64::new(op.p_e0, -op.q_e0) / op.v_t0;
    let i_line = i_gen - yl * vt;
    let vinf = vt - z * i_line;

    let e_q = vt + Complex64::new(0.0, gp.x_q) * i_gen;
    let q_axis = e_q.arg();
    // dq components: F_d + jF_q = j·F·e^{-j·q_axis}
    let rot = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, -q_axis);
    let v_dq = vt * rot;
    let i_dq = i_gen * rot;
    let eqp0 = v_dq.im + gp.x_dp * i_dq.re;
    let delta0 = wrap_angle(q_axis - vinf.arg());

    if !(delta0.is_finite() && eqp0.is_finite()) || vinf.norm() <= f64::EPSILON {
        return Err(ModelError::NoEquilibrium(format!(
            "degenerate phasor solution for P={}, Q={}, Vt={}",
            op.p_e0, op.q_e0, op.v_t0
        )));
    }
    if delta0.abs() >= FRAC_PI_2 {
        return Err(ModelError::NoEquilibrium(format!(
            "rotor angle {delta0:.6} rad outside (-pi/2, pi/2) for P={}, Q={}",
            op.p_e0, op.q_e0
        )));
    }

    Ok(InitialConditions {
        delta0,
        eqp0,
        id0: i_dq.re,
        iq0: i_dq.im,
        vinf: vinf.norm(),
    })
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w > std::f64::consts::PI {
        w -= two_pi;
    } else if w < -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// Terminal P, Q, |Vt| reconstructed from an initial-condition set.
pub fn reconstruct_operating_point(
    gp: &GeneratorParams,
    np: &NetworkParams,
    ic: &InitialConditions,
) -> OperatingPoint {
    let th = Thevenin::new(np);
    let s = stator_solution(gp, &th, ic.vinf, ic.delta0, ic.eqp0);
    let vd = gp.x_q * s.iq;
    let vq = ic.eqp0 - gp.x_dp * s.id;
    OperatingPoint {
        p_e0: vd * s.id + vq * s.iq,
        q_e0: vq * s.id - vd * s.iq,
        v_t0: vd.hypot(vq),
    }
}

fn stator_solution(
    gp: &GeneratorParams,
    th: &Thevenin,
    vinf: f64,
    delta: f64,
    eqp: f64,
) -> StatorSolution {
    let vth = vinf * th.scale;
    let ang = delta - th.shift;
    let xq_t = th.xe + gp.x_q;
    let xd_t = th.xe + gp.x_dp;
    let det = th.re * th.re + xq_t * xd_t;
    let a = -vth * ang.sin();
    let b = eqp - vth * ang.cos();
    StatorSolution {
        id: (th.re * a + xq_t * b) / det,
        iq: (-xd_t * a + th.re * b) / det,
    }
}

/// Heffron-Phillips gains at the operating point described by `ic`.
pub fn compute_k_constants(
    gp: &GeneratorParams,
    np: &NetworkParams,
    ic: &InitialConditions,
) -> Result<KConstants, ModelError> {
    gp.validate()?;
    np.validate()?;
    if !(ic.delta0.abs() < FRAC_PI_2) || !ic.eqp0.is_finite() || !(ic.vinf > 0.0) {
        return Err(ModelError::NoEquilibrium(
            "initial conditions outside the stable equilibrium region".into(),
        ));
    }

    let th = Thevenin::new(np);
    let vth = ic.vinf * th.scale;
    let ang = ic.delta0 - th.shift;
    let xq_t = th.xe + gp.x_q;
    let xd_t = th.xe + gp.x_dp;
    let det = th.re * th.re + xq_t * xd_t;

    let s = stator_solution(gp, &th, ic.vinf, ic.delta0, ic.eqp0);
    let (id, iq) = (s.id, s.iq);

    let did_dd = (-th.re * vth * ang.cos() + xq_t * vth * ang.sin()) / det;
    let diq_dd = (xd_t * vth * ang.cos() + th.re * vth * ang.sin()) / det;
    let did_de = xq_t / det;
    let diq_de = th.re / det;

    let saliency = gp.x_q - gp.x_dp;
    let k1 = (ic.eqp0 + saliency * id) * diq_dd + saliency * iq * did_dd;
    let k2 = iq + (ic.eqp0 + saliency * id) * diq_de + saliency * iq * did_de;
    let k3 = 1.0 / (1.0 + (gp.x_d - gp.x_dp) * did_de);
    let k4 = (gp.x_d - gp.x_dp) * did_dd;

    let vd = gp.x_q * iq;
    let vq = ic.eqp0 - gp.x_dp * id;
    let vt = vd.hypot(vq);
    let k5 = (vd * gp.x_q * diq_dd - vq * gp.x_dp * did_dd) / vt;
    let k6 = (vd * gp.x_q * diq_de + vq * (1.0 - gp.x_dp * did_de)) / vt;

    Ok(KConstants {
        k1,
        k2,
        k3,
        k4,
        k5,
        k6,
        omega_s: np.omega_s(),
    })
}

/// Five-state realization of the plant with a rate-feedback exciter.
pub fn build_state_space(k: &KConstants, gp: &GeneratorParams, ep: &ExciterParams) -> StateSpace {
    let n = 5;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let kf_tf = ep.k_f / ep.t_f;

    a[(0, 1)] = k.omega_s;

    a[(1, 0)] = -k.k1 / gp.m;
    a[(1, 1)] = -gp.d / gp.m;
    a[(1, 2)] = -k.k2 / gp.m;

    a[(2, 0)] = -k.k4 / gp.t_d0p;
    a[(2, 2)] = -1.0 / (k.k3 * gp.t_d0p);
    a[(2, 3)] = 1.0 / gp.t_d0p;

    a[(3, 0)] = -ep.k_a * k.k5 / ep.t_a;
    a[(3, 2)] = -ep.k_a * k.k6 / ep.t_a;
    a[(3, 3)] = -(1.0 + ep.k_a * kf_tf) / ep.t_a;
    a[(3, 4)] = ep.k_a * kf_tf / ep.t_a;

    a[(4, 3)] = 1.0 / ep.t_f;
    a[(4, 4)] = -1.0 / ep.t_f;

    let mut b_tm = DVector::zeros(n);
    b_tm[IDX_OMEGA] = 1.0 / gp.m;
    let mut b_u = DVector::zeros(n);
    b_u[IDX_EFD] = ep.k_a / ep.t_a;
    let mut c_omega = DVector::zeros(n);
    c_omega[IDX_OMEGA] = 1.0;
    let mut c_delta = DVector::zeros(n);
    c_delta[IDX_DELTA] = 1.0;

    StateSpace {
        a,
        b_tm,
        b_u,
        c_omega,
        c_delta,
        labels: STATE_LABELS.to_vec(),
    }
}

/// Everything derived from one plant description at one operating point.
#[derive(Debug, Clone)]
pub struct LinearizedPlant {
    pub initial: InitialConditions,
    pub k: KConstants,
    pub ss: StateSpace,
}

impl LinearizedPlant {
    pub fn build(cfg: &PlantConfig, op: &OperatingPoint) -> Result<Self, ModelError> {
        cfg.validate()?;
        let gp = cfg.generator();
        let np = cfg.network();
        let initial = compute_initial_conditions(&gp, &np, op)?;
        let k = compute_k_constants(&gp, &np, &initial)?;
        let ss = build_state_space(&k, &gp, &cfg.exciter());
        Ok(Self { initial, k, ss })
    }
}
