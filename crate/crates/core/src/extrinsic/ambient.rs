//! Fubini-Study geometry in the affine chart `z_{n+1} = 1`.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::states::{normalize, StateVector};

/// Affine coordinates `(z_1, .., z_n)` of the ray `(z_1, .., z_n, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientChartPoint {
    pub z: Vec<Complex64>,
}

impl AmbientChartPoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::PoleCoordinates);
        }
        Ok(AmbientChartPoint { z })
    }

    /// Chart point of a state whose last amplitude is nonzero.
    pub fn from_state(s: &StateVector) -> Result<Self> {
        let a = s.amplitudes();
        let last = a[a.len() - 1];
        if last.norm() < 1e-14 {
            return Err(Error::PoleCoordinates);
        }
        Ok(AmbientChartPoint {
            z: a[..a.len() - 1].iter().map(|v| v / last).collect(),
        })
    }

    pub fn state(&self) -> StateVector {
        let mut raw = self.z.clone();
        raw.push(Complex64::new(1.0, 0.0));
        normalize(&raw).expect("chart points are finite")
    }
}

/// Hermitian components `g_{i jbar}` and `w_{i jbar}` of the metric and the
/// symplectic form.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientGeometry {
    pub g: CMat,
    pub omega: CMat,
}

/// `g_{i jbar} = delta_ij / K - conj(z_i) z_j / K^2` with `K = 1 + |z|^2`,
/// and `w_{i jbar} = -i g_{i jbar}`.
pub fn ambient_geometry(p: &AmbientChartPoint) -> AmbientGeometry {
    let n = p.z.len();
    let k = 1.0 + p.z.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let g = CMat::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 / k } else { 0.0 };
        Complex64::new(delta, 0.0) - p.z[i].conj() * p.z[j] / (k * k)
    });
    let omega = g.map(|v| v * Complex64::new(0.0, -1.0));
    AmbientGeometry { g, omega }
}

/// Point at parameter `t` on the geodesic from `b` (`t = 0`) to `a` (`t = 1`).
pub fn ambient_geodesic(a: &StateVector, b: &StateVector, t: f64) -> Result<StateVector> {
    let ov = linalg::inner(a.amplitudes(), b.amplitudes());
    if ov.norm() <= 1e-12 {
        return Err(Error::AntipodalPair);
    }
    let w = Complex64::from_polar(1.0, -ov.arg());
    let raw: Vec<Complex64> = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x * t + y * w * (1.0 - t))
        .collect();
    normalize(&raw)
}
