use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::ModelError;

const MAX_SWEEPS: usize = 10_000;

/// All eigenvalues of `a`, sorted by real part descending (ties broken by
/// imaginary part descending).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>, ModelError> {
    if !a.is_square() {
        return Err(ModelError::InvalidParams {
            name: "A",
            reason: format!("matrix is {}x{}, not square", a.nrows(), a.ncols()),
        });
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(ModelError::ConvergenceFailure(MAX_SWEEPS))?;
    let mut ev: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    sort_spectrum(&mut ev);
    Ok(ev)
}

pub fn sort_spectrum(ev: &mut [Complex64]) {
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

/// The lightly damped oscillatory pair with positive imaginary part whose
/// frequency lies closest to `near_rad_s`.
pub fn dominant_mode(ev: &[Complex64], near_rad_s: f64) -> Option<Complex64> {
    ev.iter()
        .filter(|z| z.im > 1e-9)
        .min_by(|a, b| (a.im - near_rad_s).abs().total_cmp(&(b.im - near_rad_s).abs()))
        .copied()
}

/// Damping ratio of a complex frequency, `-Re / |z|`.
pub fn damping_ratio(z: Complex64) -> f64 {
    -z.re / z.norm()
}
