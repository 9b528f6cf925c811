//! Two-band lattice model `d(k) . sigma` with
//! `d = (sin kx, sin ky, m + cos kx + cos ky)`, lower band.

use alloc::vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::linalg::CMat;
use crate::models::spin_half;
use crate::states::StateFamily;

pub fn d_vector(mass: f64, k: &[f64]) -> [f64; 3] {
    [k[0].sin(), k[1].sin(), mass + k[0].cos() + k[1].cos()]
}

pub fn hamiltonian(mass: f64, k: &[f64]) -> CMat {
    spin_half::hamiltonian(d_vector(mass, k))
}

/// Lower band. The gauge switches between two local sections, so only
/// projector-level quantities are smooth.
pub fn family(mass: f64) -> StateFamily {
    StateFamily::new(2, 1, move |k: &[f64]| {
        let [dx, dy, dz] = d_vector(mass, k);
        let norm = (dx * dx + dy * dy + dz * dz).sqrt();
        if dz <= 0.0 {
            vec![Complex64::new(norm - dz, 0.0), -Complex64::new(dx, dy)]
        } else {
            vec![Complex64::new(dx, -dy), -Complex64::new(dz + norm, 0.0)]
        }
    })
    .with_periods(vec![2.0 * PI, 2.0 * PI])
}
