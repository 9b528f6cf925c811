//! Finite-difference machinery.
//!
//! All stencils are central and combined with one Richardson step
//! (`h`, `h/2`), so first and second derivatives carry `O(h^4)` truncation
//! error. Projector derivatives are taken on `P` itself, which makes them
//! independent of the phase convention of the evaluator.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::states::StateFamily;

/// Default step for projector stencils.
pub const DEFAULT_STEP: f64 = 1e-3;

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

fn richardson_mat(coarse: CMat, fine: CMat) -> CMat {
    (fine * Complex64::new(4.0, 0.0) - coarse) / Complex64::new(3.0, 0.0)
}

/// Roundoff estimate of a Richardson-combined stencil of the given order.
pub fn noise_estimate(order: u32, h: f64) -> f64 {
    let eps = f64::EPSILON;
    match order {
        0 => eps,
        1 => 3.0 * eps / h,
        2 => 12.0 * eps / (h * h),
        n => 48.0 * eps / h.powi(n as i32),
    }
}

/// Fail with [`Error::StepTooSmall`] when roundoff would dominate.
pub fn check_step(order: u32, h: f64, tol: f64) -> Result<()> {
    let noise = noise_estimate(order, h);
    if noise > tol {
        return Err(Error::StepTooSmall { noise, tol });
    }
    Ok(())
}

pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |s: f64| (f(x + s) - f(x - s)) / (2.0 * s);
    richardson(d(h), d(h / 2.0))
}

pub fn second_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    let d = |s: f64| (f(x + s) - 2.0 * f0 + f(x - s)) / (s * s);
    richardson(d(h), d(h / 2.0))
}

pub fn derivative_complex<F: Fn(f64) -> Complex64>(f: F, x: f64, h: f64) -> Complex64 {
    let d = |s: f64| (f(x + s) - f(x - s)) / (2.0 * s);
    let (c, fi) = (d(h), d(h / 2.0));
    fi * (4.0 / 3.0) - c * (1.0 / 3.0)
}

pub fn second_derivative_complex<F: Fn(f64) -> Complex64>(f: F, x: f64, h: f64) -> Complex64 {
    let f0 = f(x);
    let d = |s: f64| (f(x + s) - f0 * 2.0 + f(x - s)) / (s * s);
    let (c, fi) = (d(h), d(h / 2.0));
    fi * (4.0 / 3.0) - c * (1.0 / 3.0)
}

/// Central derivative of a vector-valued function along one coordinate.
pub fn partial_vec<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], axis: usize, h: f64) -> Vec<f64> {
    let shifted = |s: f64| {
        let mut y = x.to_vec();
        y[axis] += s;
        f(&y)
    };
    let d = |s: f64| {
        let (p, m) = (shifted(s), shifted(-s));
        p.iter()
            .zip(&m)
            .map(|(a, b)| (a - b) / (2.0 * s))
            .collect::<Vec<_>>()
    };
    let (c, fi) = (d(h), d(h / 2.0));
    c.iter()
        .zip(&fi)
        .map(|(c, f)| f * (4.0 / 3.0) - c / 3.0)
        .collect()
}

/// Gradient of a scalar field.
pub fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|a| {
            let g = |s: f64| {
                let mut y = x.to_vec();
                y[a] += s;
                f(&y)
            };
            derivative(g, 0.0, h)
        })
        .collect()
}

fn shift(x: &[f64], axis: usize, s: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += s;
    y
}

fn shift2(x: &[f64], a: usize, sa: f64, b: usize, sb: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[a] += sa;
    y[b] += sb;
    y
}

/// Projector and its first (and optionally second) parameter derivatives.
#[derive(Clone, Debug)]
pub struct ProjectorJet {
    pub p: CMat,
    pub d1: Vec<CMat>,
    /// Row-major `d x d`; empty for first-order jets.
    pub d2: Vec<CMat>,
    dim: usize,
}

impl ProjectorJet {
    pub fn param_dim(&self) -> usize {
        self.dim
    }

    pub fn d2(&self, a: usize, b: usize) -> &CMat {
        &self.d2[a * self.dim + b]
    }

    pub fn has_second(&self) -> bool {
        !self.d2.is_empty()
    }

    /// First-order jet from a projector and its partials.
    pub fn from_parts(p: CMat, d1: Vec<CMat>) -> Self {
        let dim = d1.len();
        ProjectorJet {
            p,
            d1,
            d2: Vec::new(),
            dim,
        }
    }

    /// First-order jet at `x`.
    pub fn first(fam: &StateFamily, x: &[f64], h: f64) -> Self {
        let d = x.len();
        let p = fam.projector_at(x);
        let d1 = (0..d).map(|a| projector_partial(fam, x, a, h)).collect();
        ProjectorJet {
            p,
            d1,
            d2: Vec::new(),
            dim: d,
        }
    }

    /// Second-order jet at `x`.
    pub fn second(fam: &StateFamily, x: &[f64], h: f64) -> Self {
        let d = x.len();
        let p = fam.projector_at(x);
        let mut d1 = Vec::with_capacity(d);
        let mut d2 = alloc::vec![CMat::zeros(p.nrows(), p.ncols()); d * d];
        if fam.has_gradient() {
            for a in 0..d {
                d1.push(analytic_partial(fam, x, a));
            }
            for a in 0..d {
                for b in a..d {
                    let dab = |s: f64| {
                        (analytic_partial(fam, &shift(x, a, s), b)
                            - analytic_partial(fam, &shift(x, a, -s), b))
                            / Complex64::new(2.0 * s, 0.0)
                    };
                    let mut m = richardson_mat(dab(h), dab(h / 2.0));
                    if a != b {
                        let dba = |s: f64| {
                            (analytic_partial(fam, &shift(x, b, s), a)
                                - analytic_partial(fam, &shift(x, b, -s), a))
                                / Complex64::new(2.0 * s, 0.0)
                        };
                        m = (m + richardson_mat(dba(h), dba(h / 2.0))) * Complex64::new(0.5, 0.0);
                    }
                    d2[a * d + b] = m.clone();
                    d2[b * d + a] = m;
                }
            }
        } else {
            for a in 0..d {
                let pp = [
                    fam.projector_at(&shift(x, a, h)),
                    fam.projector_at(&shift(x, a, h / 2.0)),
                ];
                let pm = [
                    fam.projector_at(&shift(x, a, -h)),
                    fam.projector_at(&shift(x, a, -h / 2.0)),
                ];
                let c1 = (&pp[0] - &pm[0]) / Complex64::new(2.0 * h, 0.0);
                let f1 = (&pp[1] - &pm[1]) / Complex64::new(h, 0.0);
                d1.push(richardson_mat(c1, f1));
                let two_p = &p * Complex64::new(2.0, 0.0);
                let c2 = (&pp[0] - &two_p + &pm[0]) / Complex64::new(h * h, 0.0);
                let f2 = (&pp[1] - &two_p + &pm[1]) / Complex64::new(h * h / 4.0, 0.0);
                d2[a * d + a] = richardson_mat(c2, f2);
            }
            for a in 0..d {
                for b in (a + 1)..d {
                    let m = |s: f64| {
                        (fam.projector_at(&shift2(x, a, s, b, s))
                            - fam.projector_at(&shift2(x, a, s, b, -s))
                            - fam.projector_at(&shift2(x, a, -s, b, s))
                            + fam.projector_at(&shift2(x, a, -s, b, -s)))
                            / Complex64::new(4.0 * s * s, 0.0)
                    };
                    let v = richardson_mat(m(h), m(h / 2.0));
                    d2[a * d + b] = v.clone();
                    d2[b * d + a] = v;
                }
            }
        }
        ProjectorJet { p, d1, d2, dim: d }
    }
}

/// `dP/dx_a` by Richardson-combined central differences, or analytically
/// when the family carries a gradient.
pub fn projector_partial(fam: &StateFamily, x: &[f64], a: usize, h: f64) -> CMat {
    if fam.has_gradient() {
        return analytic_partial(fam, x, a);
    }
    let d = |s: f64| {
        (fam.projector_at(&shift(x, a, s)) - fam.projector_at(&shift(x, a, -s)))
            / Complex64::new(2.0 * s, 0.0)
    };
    richardson_mat(d(h), d(h / 2.0))
}

fn analytic_partial(fam: &StateFamily, x: &[f64], a: usize) -> CMat {
    let v = fam.raw(x);
    let dv = &fam.raw_gradient(x).expect("gradient present")[a];
    let n2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let dn2 = 2.0 * linalg::inner(&v, dv).re;
    let m = (linalg::outer(dv, &v) + linalg::outer(&v, dv)) / Complex64::new(n2, 0.0);
    m - linalg::outer(&v, &v) * Complex64::new(dn2 / (n2 * n2), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fam() -> StateFamily {
        StateFamily::new(2, 2, |x: &[f64]| {
            vec![
                Complex64::new(1.0 + 0.3 * x[0].sin(), 0.2),
                Complex64::new(x[1].cos(), x[0] * x[1]),
                Complex64::new(0.5, (x[0] + 2.0 * x[1]).sin()),
            ]
        })
    }

    fn fam_with_gradient() -> StateFamily {
        fam().with_gradient(|x: &[f64]| {
            vec![
                vec![
                    Complex64::new(0.3 * x[0].cos(), 0.0),
                    Complex64::new(0.0, x[1]),
                    Complex64::new(0.0, (x[0] + 2.0 * x[1]).cos()),
                ],
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(-x[1].sin(), x[0]),
                    Complex64::new(0.0, 2.0 * (x[0] + 2.0 * x[1]).cos()),
                ],
            ]
        })
    }

    #[test]
    fn analytic_and_numeric_jets_agree() {
        let x = [0.4, -0.7];
        let a = ProjectorJet::second(&fam(), &x, DEFAULT_STEP);
        let b = ProjectorJet::second(&fam_with_gradient(), &x, DEFAULT_STEP);
        for i in 0..2 {
            assert!(linalg::fro(&(&a.d1[i] - &b.d1[i])) < 1e-10);
            for j in 0..2 {
                assert!(linalg::fro(&(a.d2(i, j) - b.d2(i, j))) < 1e-8, "{i}{j}");
            }
        }
    }

    #[test]
    fn derivative_of_p_is_traceless() {
        let j = ProjectorJet::second(&fam(), &[0.1, 0.2], DEFAULT_STEP);
        for a in 0..2 {
            assert!(j.d1[a].trace().norm() < 1e-11);
            assert!(j.d2(a, a).trace().norm() < 1e-8);
        }
    }

    #[test]
    fn scalar_stencils() {
        assert!((derivative(|x: f64| x.sin(), 0.3, 1e-2) - 0.3f64.cos()).abs() < 1e-10);
        assert!((second_derivative(|x: f64| x.exp(), 0.3, 1e-2) - 0.3f64.exp()).abs() < 1e-9);
        let g = gradient(&|x: &[f64]| x[0] * x[1] * x[1], &[2.0, 3.0], 1e-3);
        assert!((g[0] - 9.0).abs() < 1e-9 && (g[1] - 12.0).abs() < 1e-9);
    }

    #[test]
    fn step_guard() {
        assert!(check_step(2, 1e-3, 1e-7).is_ok());
        assert!(matches!(
            check_step(2, 1e-5, 1e-7),
            Err(Error::StepTooSmall { .. })
        ));
    }
}
