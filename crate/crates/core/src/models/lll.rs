//! Lowest Landau level, known through its normalized overlap kernel
//! `<u_k|u_q> = exp(-|k - q|^2 / 4B + i (q_x k_y - k_x q_y) / 2B)`.

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::states::KernelFamily;

pub fn overlap(b: f64, k: &[f64], q: &[f64]) -> Complex64 {
    let (dx, dy) = (k[0] - q[0], k[1] - q[1]);
    Complex64::from_polar(
        (-(dx * dx + dy * dy) / (4.0 * b)).exp(),
        (q[0] * k[1] - k[0] * q[1]) / (2.0 * b),
    )
}

pub fn family(b: f64) -> Result<KernelFamily> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "field B must be positive, got {b}"
        )));
    }
    Ok(KernelFamily::new(2, move |k: &[f64], q: &[f64]| {
        overlap(b, k, q)
    }))
}

/// `D^2 = 1 - exp(-|k - p|^2 / 2B)`.
pub fn d2(b: f64, k: &[f64], p: &[f64]) -> f64 {
    let (dx, dy) = (k[0] - p[0], k[1] - p[1]);
    1.0 - (-(dx * dx + dy * dy) / (2.0 * b)).exp()
}

/// `eps_ab k^a q^b / 2B`.
pub fn pair_phase(b: f64, k: &[f64], q: &[f64]) -> f64 {
    (k[0] * q[1] - k[1] * q[0]) / (2.0 * b)
}

/// Sum of the three pairwise phases, equal to twice the signed area over `2B`.
pub fn triangle_phase(b: f64, k: &[f64], q: &[f64], p: &[f64]) -> f64 {
    pair_phase(b, k, q) + pair_phase(b, q, p) + pair_phase(b, p, k)
}

/// Metric implied by the kernel: `delta / 2B`.
pub fn metric(b: f64) -> f64 {
    0.5 / b
}

/// Curvature `w_xy = 1/B`.
pub fn omega(b: f64) -> f64 {
    1.0 / b
}

/// The commonly quoted normalization `g = delta / B`.
pub fn reference_metric(b: f64) -> f64 {
    1.0 / b
}
