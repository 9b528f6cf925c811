//! Spin one-half in a magnetic field, in the stereographic chart
//! `zeta = x + i y` of the ground state `(1, -zeta)`.

use alloc::vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::linalg::CMat;
use crate::states::StateFamily;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Family over `(x, y)` with analytic gradient.
pub fn family() -> StateFamily {
    StateFamily::new(2, 1, |p: &[f64]| vec![c(1.0, 0.0), c(-p[0], -p[1])]).with_gradient(
        |_: &[f64]| {
            vec![
                vec![c(0.0, 0.0), c(-1.0, 0.0)],
                vec![c(0.0, 0.0), c(0.0, -1.0)],
            ]
        },
    )
}

/// Family over polar angles `(theta, phi)`:
/// `(cos(theta/2), e^{i phi} sin(theta/2))`.
pub fn angles() -> StateFamily {
    StateFamily::new(2, 1, |p: &[f64]| {
        vec![
            c((p[0] / 2.0).cos(), 0.0),
            Complex64::from_polar((p[0] / 2.0).sin(), p[1]),
        ]
    })
    .with_gradient(|p: &[f64]| {
        let (s, co) = ((p[0] / 2.0).sin(), (p[0] / 2.0).cos());
        vec![
            vec![c(-s / 2.0, 0.0), Complex64::from_polar(co / 2.0, p[1])],
            vec![c(0.0, 0.0), Complex64::from_polar(s, p[1]) * c(0.0, 1.0)],
        ]
    })
}

/// `B . sigma`.
pub fn hamiltonian(b: [f64; 3]) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(b[2], 0.0), c(b[0], -b[1]), c(b[0], b[1]), c(-b[2], 0.0)],
    )
}

/// Chart coordinate of the ground state of `B . sigma`.
pub fn chart_of_field(b: [f64; 3]) -> Complex64 {
    let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    c(b[0], b[1]) / (norm - b[2])
}

/// Closed-form three-point phase `-arg prod (1 + conj(z_i) z_{i+1})`.
pub fn phase(z1: Complex64, z2: Complex64, z3: Complex64) -> f64 {
    let w = (z1.conj() * z2 + 1.0) * (z2.conj() * z3 + 1.0) * (z3.conj() * z1 + 1.0);
    crate::linalg::wrap_angle(-w.arg())
}

/// `A^0 = (y dx - x dy) / (1 + x^2 + y^2)`.
pub fn connection_origin(r: [f64; 2]) -> [f64; 2] {
    let k = 1.0 + r[0] * r[0] + r[1] * r[1];
    [r[1] / k, -r[0] / k]
}

fn eps(r: [f64; 2]) -> [f64; 2] {
    [-r[1], r[0]]
}

/// `A^{r1}(r2) = -eps r2 / (1 + r2^2) + eps (r1 + r1^2 r2) / |1 + conj(z1) z2|^2`
/// with `eps = [[0, -1], [1, 0]]`.
pub fn connection(r1: [f64; 2], r2: [f64; 2]) -> [f64; 2] {
    let r1sq = r1[0] * r1[0] + r1[1] * r1[1];
    let r2sq = r2[0] * r2[0] + r2[1] * r2[1];
    let den = 1.0 + 2.0 * (r1[0] * r2[0] + r1[1] * r2[1]) + r1sq * r2sq;
    let a = eps(r2);
    let b = eps([r1[0] + r1sq * r2[0], r1[1] + r1sq * r2[1]]);
    [
        -a[0] / (1.0 + r2sq) + b[0] / den,
        -a[1] / (1.0 + r2sq) + b[1] / den,
    ]
}

/// Point where `A^{r1}` diverges: the antipode `-1 / conj(z1)`.
pub fn pole(r1: [f64; 2]) -> Option<[f64; 2]> {
    let z = c(r1[0], r1[1]);
    if z.norm() == 0.0 {
        return None;
    }
    let p = -1.0 / z.conj();
    Some([p.re, p.im])
}

/// Metric `1 / (1 + r^2)^2` (times the identity) and curvature
/// `w_xy = -2 / (1 + r^2)^2` in the `(x, y)` chart.
pub fn metric(r: [f64; 2]) -> (f64, f64) {
    let k = 1.0 + r[0] * r[0] + r[1] * r[1];
    (1.0 / (k * k), -2.0 / (k * k))
}
