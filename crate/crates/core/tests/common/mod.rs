//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use smib_pss::params::PlantConfig;
use smib_pss::smib::KConstants;

pub const LOADINGS: [(&str, f64, f64, f64); 3] = [
    ("light", 0.4, 0.5, 0.1),
    ("nominal", 1.0, 0.015, 0.01),
    ("heavy", 1.25, 0.25, 0.01),
];
pub const VT0: f64 = 1.05;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// ---- plant: nodal network solution, no Thevenin reduction

#[derive(Debug, Clone, Copy)]
pub struct NodalIc {
    pub delta0: f64,
    pub eqp0: f64,
    pub id0: f64,
    pub iq0: f64,
    pub vinf: f64,
}

pub fn nodal_initial(p: &PlantConfig, pe: f64, qe: f64, vt0: f64) -> NodalIc {
    let z = Complex64::new(p.r, p.x);
    let yl = Complex64::new(p.g, p.b);
    let vt = Complex64::new(vt0, 0.0);
    let i = Complex64::new(pe, -qe) / vt0;
    let vinf = vt - z * (i - yl * vt);
    let eq = vt + Complex64::new(0.0, p.xq) * i;
    let ang = eq.arg();
    let rot = Complex64::i() * Complex64::from_polar(1.0, -ang);
    let (v, cur) = (vt * rot, i * rot);
    NodalIc {
        delta0: ang - vinf.arg(),
        eqp0: v.im + p.xdp * cur.re,
        id0: cur.re,
        iq0: cur.im,
        vinf: vinf.norm(),
    }
}

pub struct NetworkState {
    pub te: f64,
    pub vt: f64,
    pub id: f64,
    pub iq: f64,
}

/// Stator + line + shunt load solved as a 2×2 real system in `(id, iq)`.
pub fn nodal_network(p: &PlantConfig, delta: f64, eqp: f64, vinf: f64) -> NetworkState {
    let z = Complex64::new(p.r, p.x);
    let yl = Complex64::new(p.g, p.b);
    let vb = Complex64::new(vinf * delta.sin(), vinf * delta.cos());
    let res = |id: f64, iq: f64| {
        let v = Complex64::new(p.xq * iq, eqp - p.xdp * id);
        let i = Complex64::new(id, iq);
        v - vb - z * (i - yl * v)
    };
    let r0 = res(0.0, 0.0);
    let c1 = res(1.0, 0.0) - r0;
    let c2 = res(0.0, 1.0) - r0;
    let det = c1.re * c2.im - c2.re * c1.im;
    let id = (-r0.re * c2.im + c2.re * r0.im) / det;
    let iq = (-c1.re * r0.im + r0.re * c1.im) / det;
    let v = Complex64::new(p.xq * iq, eqp - p.xdp * id);
    NetworkState {
        te: v.re * id + v.im * iq,
        vt: v.norm(),
        id,
        iq,
    }
}

/// Central-difference K1..K6 around the nodal equilibrium.
pub fn fd_k_constants(p: &PlantConfig, pe: f64, qe: f64, vt0: f64) -> [f64; 6] {
    let ic = nodal_initial(p, pe, qe, vt0);
    let h = 1e-6;
    let f = |d: f64, e: f64| nodal_network(p, d, e, ic.vinf);
    let (a, b) = (f(ic.delta0 + h, ic.eqp0), f(ic.delta0 - h, ic.eqp0));
    let k1 = (a.te - b.te) / (2.0 * h);
    let k5 = (a.vt - b.vt) / (2.0 * h);
    let k4 = (p.xd - p.xdp) * (a.id - b.id) / (2.0 * h);
    let (a, b) = (f(ic.delta0, ic.eqp0 + h), f(ic.delta0, ic.eqp0 - h));
    let k2 = (a.te - b.te) / (2.0 * h);
    let k6 = (a.vt - b.vt) / (2.0 * h);
    let k3 = 1.0 / (1.0 + (p.xd - p.xdp) * (a.id - b.id) / (2.0 * h));
    [k1, k2, k3, k4, k5, k6]
}

/// Plant matrix restated from the block diagram (rate-feedback exciter).
pub fn plant_matrix(p: &PlantConfig, k: &KConstants) -> DMatrix<f64> {
    let ws = 2.0 * std::f64::consts::PI * p.f;
    let mut a = DMatrix::zeros(5, 5);
    a[(0, 1)] = ws;
    a[(1, 0)] = -k.k1 / p.m;
    a[(1, 1)] = -p.d / p.m;
    a[(1, 2)] = -k.k2 / p.m;
    a[(2, 0)] = -k.k4 / p.td0p;
    a[(2, 2)] = -1.0 / (k.k3 * p.td0p);
    a[(2, 3)] = 1.0 / p.td0p;
    a[(3, 0)] = -p.ka * k.k5 / p.ta;
    a[(3, 2)] = -p.ka * k.k6 / p.ta;
    a[(3, 3)] = (-1.0 - p.ka * p.kf / p.tf) / p.ta;
    a[(3, 4)] = p.ka * p.kf / p.tf / p.ta;
    a[(4, 3)] = 1.0 / p.tf;
    a[(4, 4)] = -1.0 / p.tf;
    a
}

// ---- eigenvalues through the characteristic polynomial

/// Monic characteristic polynomial coefficients `[1, c1, ..., cn]` by
/// Faddeev–LeVerrier.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &id * c[k - 1];
        let am = a * &m;
        c.push(-am.trace() / k as f64);
    }
    c
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for &ci in c {
        dp = dp * z + p;
        p = p * z + ci;
    }
    (p, dp)
}

/// Roots of a monic polynomial by Aberth iteration followed by Newton polish.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let bound = 1.0 + c[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(bound * 0.7, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in &mut z {
        for _ in 0..3 {
            let (p, dp) = horner(c, *zi);
            if dp.norm() > 0.0 {
                *zi -= p / dp;
            }
        }
    }
    z
}

pub fn sort_desc(ev: &mut [Complex64]) {
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

// ---- matrix exponential and the exact discretization of a linear system

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let x = a / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Samples of `c·z` for `z' = A z + b·w`, `z(0) = 0`, constant input `w`,
/// propagated by the exact step map over `n` steps of `h`.
pub fn exact_response(a: &DMatrix<f64>, b: &DVector<f64>, w: f64, c: &DVector<f64>, h: f64, n: usize) -> Vec<f64> {
    let m = a.nrows();
    let mut aug = DMatrix::<f64>::zeros(m + 1, m + 1);
    aug.view_mut((0, 0), (m, m)).copy_from(a);
    for i in 0..m {
        aug[(i, m)] = b[i] * w;
    }
    let phi = expm(&(aug * h));
    let mut z = DVector::<f64>::zeros(m + 1);
    z[m] = 1.0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(c.dot(&z.rows(0, m).into_owned()));
        z = &phi * z;
    }
    out
}

/// Plant plus washout and lead-lag, realized independently of the library:
/// washout output `y = Δω − w`, `w' = y/Tw`; lead-lag state `l' = (y − l)/T2`;
/// `u = K(T1/T2·y + (1 − T1/T2)·l)`.
pub fn cpss_closed_loop(a: &DMatrix<f64>, b_u: &DVector<f64>, k: f64, tw: f64, t1: f64, t2: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    let mut m = DMatrix::<f64>::zeros(n + 2, n + 2);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    let (iw, il) = (n, n + 1);
    // y = x_ω − w
    let mut y = DVector::<f64>::zeros(n + 2);
    y[1] = 1.0;
    y[iw] = -1.0;
    let mut u = &y * (k * t1 / t2);
    u[il] += k * (1.0 - t1 / t2);
    for i in 0..n {
        for j in 0..n + 2 {
            m[(i, j)] += b_u[i] * u[j];
        }
    }
    for j in 0..n + 2 {
        m[(iw, j)] += y[j] / tw;
        m[(il, j)] += y[j] / t2;
    }
    m[(il, il)] -= 1.0 / t2;
    (m, u)
}

// ---- brute-force Mamdani engine on the standard partition

fn tri(x: f64, l: f64, c: f64, r: f64) -> f64 {
    if x <= l || x >= r {
        0.0
    } else if x <= c {
        (x - l) / (c - l)
    } else {
        (r - x) / (r - c)
    }
}

/// Grade of label `i` (0 = NB .. 6 = PB) in the seven-label partition with
/// centers `(i − 3)·w/3`; the outer labels hold 1 beyond their centers.
pub fn label_grade(i: usize, x: f64, w: f64) -> f64 {
    let step = w / 3.0;
    let c = (i as f64 - 3.0) * step;
    if (i == 0 && x <= c) || (i == 6 && x >= c) {
        return 1.0;
    }
    tri(x, c - step, c, c + step)
}

pub fn sum_rule(i: usize, j: usize) -> usize {
    (i as i64 + j as i64 - 3).clamp(0, 6) as usize
}

/// Aggregated output membership at `y` for normalized inputs.
pub fn mamdani_mu(e: f64, de: f64, y: f64) -> f64 {
    let e = e.clamp(-1.0, 1.0);
    let de = de.clamp(-1.0, 1.0);
    let mut mu = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            let fire = label_grade(i, e, 1.0).min(label_grade(j, de, 1.0));
            let clipped = fire.min(label_grade(sum_rule(i, j), y, 1.0));
            mu = mu.max(clipped);
        }
    }
    mu
}

/// Centroid on `n` evenly spaced points over `[-1, 1]`.
pub fn mamdani_centroid(e: f64, de: f64, n: usize) -> f64 {
    mamdani_centroid_trapz(e, de, n)
}

/// Centroid as a ratio of trapezoid-rule integrals over `n` points.
pub fn mamdani_centroid_trapz(e: f64, de: f64, n: usize) -> f64 {
    let h = 2.0 / (n - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        let y = -1.0 + k as f64 * h;
        let wgt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let m = mamdani_mu(e, de, y) * wgt;
        num += y * m;
        den += m;
    }
    num / den
}
