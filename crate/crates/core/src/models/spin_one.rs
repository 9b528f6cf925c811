//! Spin one in a magnetic field, parameterized by the polar angles of the
//! field.
//!
//! States are `(e^{-2i phi} cos^2(theta/2), e^{-i phi} sin(theta)/sqrt 2,
//! sin^2(theta/2))`, the top eigenvector of [`hamiltonian`] for the field
//! returned by [`field`]. With this orientation the curvature is
//! `w_{theta phi} = -sin(theta)`.

use alloc::vec;
use core::f64::consts::FRAC_1_SQRT_2;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::states::StateFamily;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn family() -> StateFamily {
    StateFamily::new(2, 2, |p: &[f64]| {
        let (th, ph) = (p[0], p[1]);
        vec![
            Complex64::from_polar((th / 2.0).cos().powi(2), -2.0 * ph),
            Complex64::from_polar(th.sin() * FRAC_1_SQRT_2, -ph),
            c((th / 2.0).sin().powi(2), 0.0),
        ]
    })
    .with_gradient(|p: &[f64]| {
        let (th, ph) = (p[0], p[1]);
        let i = c(0.0, 1.0);
        let a0 = Complex64::from_polar(1.0, -2.0 * ph);
        let a1 = Complex64::from_polar(1.0, -ph);
        vec![
            vec![
                a0 * (-0.5 * th.sin()),
                a1 * (th.cos() * FRAC_1_SQRT_2),
                c(0.5 * th.sin(), 0.0),
            ],
            vec![
                a0 * (-2.0 * i) * (th / 2.0).cos().powi(2),
                a1 * (-i) * (th.sin() * FRAC_1_SQRT_2),
                c(0.0, 0.0),
            ],
        ]
    })
}

/// Derivative-based quantities need `0 < theta < pi`.
pub fn check_chart(theta: f64) -> Result<()> {
    if theta.sin().abs() < 1e-8 {
        return Err(Error::PoleCoordinates);
    }
    Ok(())
}

/// Field `(B_x, B_y, B_z)` whose top eigenvector is the state at `(theta, phi)`.
pub fn field(b: f64, theta: f64, phi: f64) -> [f64; 3] {
    [
        b * theta.sin() * phi.cos(),
        -b * theta.sin() * phi.sin(),
        b * theta.cos(),
    ]
}

/// Spin-one Zeeman Hamiltonian.
pub fn hamiltonian(field: [f64; 3]) -> CMat {
    let p = c(field[0], field[1]) * FRAC_1_SQRT_2;
    let m = p.conj();
    let z = c(0.0, 0.0);
    CMat::from_row_slice(
        3,
        3,
        &[c(field[2], 0.0), p, z, m, z, p, z, m, c(-field[2], 0.0)],
    )
}

/// Round metric of radius `1/sqrt 2`: `diag(1/2, sin^2(theta)/2)`.
pub fn metric(theta: f64) -> [f64; 2] {
    [0.5, 0.5 * theta.sin().powi(2)]
}

/// `w_{theta phi}`.
pub fn omega(theta: f64) -> f64 {
    -theta.sin()
}

/// Lower-index Christoffel symbols of [`metric`], indexed `(a, b, c)`.
pub fn christoffel(theta: f64) -> [[[f64; 2]; 2]; 2] {
    let s = 0.5 * theta.sin() * theta.cos();
    // G_{theta, phi phi} = -s, G_{phi, theta phi} = G_{phi, phi theta} = s.
    [[[0.0, 0.0], [0.0, -s]], [[0.0, s], [s, 0.0]]]
}

/// Intrinsic distance: great-circle angle on the unit sphere over `sqrt 2`.
pub fn intrinsic_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cosg = a[0].cos() * b[0].cos() + a[0].sin() * b[0].sin() * (a[1] - b[1]).cos();
    cosg.clamp(-1.0, 1.0).acos() * FRAC_1_SQRT_2
}

/// `L_ext = arccos[cos^2(L_int / sqrt 2)]`.
pub fn extrinsic_from_intrinsic(l_int: f64) -> f64 {
    (l_int * FRAC_1_SQRT_2)
        .cos()
        .powi(2)
        .clamp(-1.0, 1.0)
        .acos()
}

/// `alpha = arg P3(A, B, C)` for `A = (0, 0)`, `B = (theta, 0)`,
/// `C = (theta, phi)`: `tan(alpha / 2) = sin(phi) / (cot^2(theta/2) + cos(phi))`.
pub fn triangle_alpha(theta: f64, phi: f64) -> f64 {
    let cot = 1.0 / (theta / 2.0).tan();
    2.0 * (phi.sin() / (cot * cot + phi.cos())).atan()
}
