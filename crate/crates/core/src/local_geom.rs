//! Local tensors built from projector derivatives.
//!
//! Conventions: `Q1_ab = tr[P dP_a dP_b] = g_ab - (i/2) w_ab` and
//! `Q2_abc = tr[P dP_a d2P_bc] = G_{a,bc} - (i/2) Gt_{a,bc}`, where `G` are the
//! lower-index Christoffel symbols of `g` and `Gt` is the extrinsic
//! connection. `T` is the fully symmetric part left after removing the
//! derivative of `w` from `Gt`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Float;

use crate::config::Tolerances;
use crate::deriv::{self, ProjectorJet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::states::{Family, StateFamily};

/// Default step for projector jets used by this module.
pub const DEFAULT_STEP: f64 = deriv::DEFAULT_STEP;

/// Quantum metric and Berry curvature at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Qgt {
    pub g: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

impl Qgt {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `g - (i/2) w`.
    pub fn complex(&self) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, d, |a, b| {
            Complex64::new(self.g[(a, b)], -0.5 * self.omega[(a, b)])
        })
    }

    /// Largest violation of symmetry of `g` and antisymmetry of `w`.
    pub fn symmetry_residual(&self) -> f64 {
        let sym = (&self.g - self.g.transpose()).abs().max();
        let anti = (&self.omega + self.omega.transpose()).abs().max();
        sym.max(anti)
    }

    pub fn min_metric_eigenvalue(&self) -> f64 {
        let s = (&self.g + self.g.transpose()) * 0.5;
        s.symmetric_eigenvalues().min()
    }

    pub fn metric_inverse(&self) -> Option<DMatrix<f64>> {
        self.g.clone().try_inverse()
    }
}

/// Dense real rank-3 tensor, row-major in `(a, b, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    t.data[(a * dim + b) * dim + c] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `t_abc u^a v^b w^c`.
    pub fn contract(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    acc += self.get(a, b, c) * u[a] * v[b] * w[c];
                }
            }
        }
        acc
    }

    /// Largest deviation from symmetry in the last two indices.
    pub fn pair_symmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    r = r.max((self.get(a, b, c) - self.get(a, c, b)).abs());
                }
            }
        }
        r
    }

    /// Largest deviation from full permutation symmetry.
    pub fn full_symmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let v = self.get(a, b, c);
                    for w in [
                        self.get(a, c, b),
                        self.get(b, a, c),
                        self.get(b, c, a),
                        self.get(c, a, b),
                        self.get(c, b, a),
                    ] {
                        r = r.max((v - w).abs());
                    }
                }
            }
        }
        r
    }

    /// Raise the first index with a matrix: `m^{a t} t_{t,bc}`.
    pub fn raise_first(&self, m: &DMatrix<f64>) -> Tensor3 {
        let d = self.dim;
        Tensor3::from_fn(d, |a, b, c| {
            (0..d).map(|t| m[(a, t)] * self.get(t, b, c)).sum()
        })
    }

    pub fn max_diff(&self, other: &Tensor3) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Christoffel symbols `G_{a,bc}`, the extrinsic connection `Gt_{a,bc}` and
/// the fully symmetric tensor `T_abc`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionTensors {
    pub gamma: Tensor3,
    pub gamma_tilde: Tensor3,
    pub t: Tensor3,
}

impl ConnectionTensors {
    /// `Gt^a_{bc} = (w^-1)^{at} Gt_{t,bc}`; absent when `w` is singular.
    pub fn raised_gamma_tilde(&self, qgt: &Qgt) -> Option<Tensor3> {
        let inv = qgt.omega.clone().try_inverse()?;
        Some(self.gamma_tilde.raise_first(&inv))
    }

    /// `G^a_{bc} = (g^-1)^{at} G_{t,bc}`.
    pub fn raised_gamma(&self, qgt: &Qgt) -> Option<Tensor3> {
        let inv = qgt.metric_inverse()?;
        Some(self.gamma.raise_first(&inv))
    }
}

fn qgt_from_jet(jet: &ProjectorJet) -> Qgt {
    let d = jet.param_dim();
    let mut g = DMatrix::zeros(d, d);
    let mut omega = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let q = linalg::trace3(&jet.p, &jet.d1[a], &jet.d1[b]);
            g[(a, b)] = q.re;
            omega[(a, b)] = -2.0 * q.im;
        }
    }
    Qgt { g, omega }
}

/// Quantum geometric tensor at `x`.
pub fn qgt(family: &StateFamily, x: &[f64], h: f64) -> Qgt {
    qgt_from_jet(&ProjectorJet::first(family, x, h))
}

/// `Q1_ab = d_{x_a} d_{y_b} log K(x, y)` at `y = x`, for families known only
/// through their overlap kernel.
pub fn kernel_qgt<F: Family + ?Sized>(family: &F, x: &[f64], h: f64) -> Qgt {
    let d = x.len();
    let log_k = |xa: &[f64], yb: &[f64]| family.overlap(xa, yb).ln();
    let mut g = DMatrix::zeros(d, d);
    let mut omega = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let m = |s: f64| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                let mut yp = x.to_vec();
                let mut ym = x.to_vec();
                xp[a] += s;
                xm[a] -= s;
                yp[b] += s;
                ym[b] -= s;
                (log_k(&xp, &yp) - log_k(&xp, &ym) - log_k(&xm, &yp) + log_k(&xm, &ym))
                    / (4.0 * s * s)
            };
            let q = (m(h / 2.0) * 4.0 - m(h)) / 3.0;
            g[(a, b)] = q.re;
            omega[(a, b)] = -2.0 * q.im;
        }
    }
    Qgt { g, omega }
}

/// `d_a w_bc`, from second projector derivatives only.
fn domega_from_jet(jet: &ProjectorJet) -> Tensor3 {
    Tensor3::from_fn(jet.param_dim(), |a, b, c| {
        let s = linalg::trace3(&jet.d1[a], &jet.d1[b], &jet.d1[c])
            + linalg::trace3(&jet.p, jet.d2(a, b), &jet.d1[c])
            + linalg::trace3(&jet.p, &jet.d1[b], jet.d2(a, c));
        -2.0 * s.im
    })
}

fn tensors_from_jet(jet: &ProjectorJet) -> ConnectionTensors {
    let d = jet.param_dim();
    let mut q2 = vec![Complex64::new(0.0, 0.0); d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                q2[(a * d + b) * d + c] = linalg::trace3(&jet.p, &jet.d1[a], jet.d2(b, c));
            }
        }
    }
    let gamma = Tensor3::from_fn(d, |a, b, c| q2[(a * d + b) * d + c].re);
    let gamma_tilde = Tensor3::from_fn(d, |a, b, c| -2.0 * q2[(a * d + b) * d + c].im);
    let dw = domega_from_jet(jet);
    let t = Tensor3::from_fn(d, |a, b, c| {
        gamma_tilde.get(c, a, b) - (dw.get(b, c, a) + dw.get(a, c, b)) / 3.0
    });
    ConnectionTensors {
        gamma,
        gamma_tilde,
        t,
    }
}

fn second_jet(family: &StateFamily, x: &[f64], h: f64) -> Result<ProjectorJet> {
    deriv::check_step(2, h, Tolerances::DEFAULT.stencil)?;
    Ok(ProjectorJet::second(family, x, h))
}

/// `G`, `Gt` and `T` at `x`.
pub fn qgc(family: &StateFamily, x: &[f64], h: f64) -> Result<ConnectionTensors> {
    Ok(tensors_from_jet(&second_jet(family, x, h)?))
}

pub fn t_tensor(family: &StateFamily, x: &[f64], h: f64) -> Result<Tensor3> {
    Ok(qgc(family, x, h)?.t)
}

/// `d_a w_bc` at `x`.
pub fn domega(family: &StateFamily, x: &[f64], h: f64) -> Result<Tensor3> {
    Ok(domega_from_jet(&second_jet(family, x, h)?))
}

/// Metric, curvature and connection tensors from a single jet.
pub fn local_geometry(family: &StateFamily, x: &[f64], h: f64) -> Result<(Qgt, ConnectionTensors)> {
    let jet = second_jet(family, x, h)?;
    Ok((qgt_from_jet(&jet), tensors_from_jet(&jet)))
}

/// Derivative of a matrix-valued field along every axis, by Richardson
/// central differences with step `outer`.
fn field_derivative<F: Fn(&[f64]) -> DMatrix<f64>>(
    f: F,
    x: &[f64],
    outer: f64,
) -> Vec<DMatrix<f64>> {
    (0..x.len())
        .map(|a| {
            let d = |s: f64| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[a] += s;
                m[a] -= s;
                (f(&p) - f(&m)) / (2.0 * s)
            };
            (d(outer / 2.0) * 4.0 - d(outer)) / 3.0
        })
        .collect()
}

/// Largest violation of `d_a w_bc = -Gt_{c,ba} + Gt_{b,ca}`, with `dw` taken
/// by differencing the curvature field itself.
pub fn symplectic_residual(family: &StateFamily, x: &[f64], h: f64) -> Result<f64> {
    let ct = qgc(family, x, h)?;
    let dw = field_derivative(|y| qgt(family, y, h).omega, x, h);
    let d = x.len();
    let mut r = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let v = dw[a][(b, c)] + ct.gamma_tilde.get(c, b, a) - ct.gamma_tilde.get(b, c, a);
                r = r.max(v.abs());
            }
        }
    }
    Ok(r)
}

/// Lower-index Christoffel symbols from the differentiated metric field.
pub fn christoffel_from_metric(family: &StateFamily, x: &[f64], h: f64) -> Tensor3 {
    let dg = field_derivative(|y| qgt(family, y, h).g, x, h);
    Tensor3::from_fn(x.len(), |a, b, c| {
        0.5 * (dg[b][(a, c)] + dg[c][(a, b)] - dg[a][(b, c)])
    })
}

/// Complex tensor of rank `n + 1`: one connection index followed by `n`
/// symmetric expansion indices, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTensor {
    pub order: usize,
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl ExpansionTensor {
    pub fn get(&self, index: &[usize]) -> Complex64 {
        debug_assert_eq!(index.len(), self.order + 1);
        self.data[index.iter().fold(0, |acc, &i| acc * self.dim + i)]
    }
}

/// Default sampling step for [`q_expansion`].
pub const EXPANSION_STEP: f64 = 1e-2;

/// Taylor coefficients of `q -> A^{y+q}_a(y)` up to order `n`.
///
/// The function is sampled on the cubic stencil `{-(n+1)..=n+1} * step` and
/// fitted by a polynomial of total degree `n + 2`; the `k`-th returned tensor
/// is the `k`-th derivative in `q` at zero.
pub fn q_expansion(
    family: &StateFamily,
    y: &[f64],
    order: usize,
    step: f64,
) -> Result<Vec<ExpansionTensor>> {
    if order == 0 || order > 4 {
        return Err(Error::UnsupportedOrder { order });
    }
    let d = y.len();
    let jet = ProjectorJet::first(family, y, DEFAULT_STEP);
    let degree = order + 2;
    let monomials = monomials(d, degree);
    let reach = (order + 1) as i64;
    let side = (2 * reach + 1) as usize;
    let count = side.pow(d as u32);
    let mut design = DMatrix::<f64>::zeros(count, monomials.len());
    let mut rhs_re = DMatrix::<f64>::zeros(count, d);
    let mut rhs_im = DMatrix::<f64>::zeros(count, d);
    for row in 0..count {
        let mut r = row;
        let mut unit = vec![0.0; d];
        for u in unit.iter_mut() {
            *u = (r % side) as f64 - reach as f64;
            r /= side;
        }
        for (col, m) in monomials.iter().enumerate() {
            design[(row, col)] = m
                .iter()
                .zip(&unit)
                .map(|(&e, &u)| u.powi(e as i32))
                .product();
        }
        let x: Vec<f64> = y.iter().zip(&unit).map(|(a, u)| a + u * step).collect();
        let px = family.projector_at(&x);
        let den = linalg::trace2(&px, &jet.p);
        for a in 0..d {
            let v = linalg::trace3(&px, &jet.p, &jet.d1[a]) / den;
            rhs_re[(row, a)] = v.re;
            rhs_im[(row, a)] = v.im;
        }
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if cond > Tolerances::DEFAULT.vandermonde {
        return Err(Error::IllConditionedFit { cond });
    }
    let coef_re = svd
        .solve(&rhs_re, 0.0)
        .map_err(|_| Error::IllConditionedFit { cond })?;
    let coef_im = svd
        .solve(&rhs_im, 0.0)
        .map_err(|_| Error::IllConditionedFit { cond })?;

    let mut out = Vec::with_capacity(order);
    for n in 1..=order {
        let mut data = vec![Complex64::new(0.0, 0.0); d.pow(n as u32 + 1)];
        for (flat, slot) in data.iter_mut().enumerate() {
            let mut idx = vec![0usize; n + 1];
            let mut r = flat;
            for i in (0..=n).rev() {
                idx[i] = r % d;
                r /= d;
            }
            let mut exps = vec![0usize; d];
            for &q in &idx[1..] {
                exps[q] += 1;
            }
            let col = monomials
                .iter()
                .position(|m| *m == exps)
                .expect("monomial present");
            let weight: f64 =
                exps.iter().map(|&e| factorial(e)).product::<f64>() / step.powi(n as i32);
            *slot = Complex64::new(coef_re[(col, idx[0])], coef_im[(col, idx[0])]) * weight;
        }
        out.push(ExpansionTensor {
            order: n,
            dim: d,
            data,
        });
    }
    Ok(out)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exponent vectors of all monomials of total degree at most `degree`.
fn monomials(d: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize; d]];
    let mut frontier = out.clone();
    for _ in 0..degree {
        let mut next = Vec::new();
        for m in &frontier {
            let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
            for v in last..d {
                let mut e = m.clone();
                e[v] += 1;
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Holomorphic function of the chart coordinates.
pub type Holomorphic = dyn Fn(&[Complex64]) -> Complex64;

/// Metric and curvature of the holomorphic family `(1, f_1(y), ..., f_n(y))`
/// from its Kaehler potential `log(1 + sum |f_i|^2)`.
///
/// Real coordinates are ordered `(Re y_1, .., Re y_m, Im y_1, .., Im y_m)`.
pub fn kaehler_qgt(components: &[&Holomorphic], y: &[Complex64], h: f64) -> Qgt {
    let m = y.len();
    let potential = |r: &[f64]| {
        let z: Vec<Complex64> = (0..m).map(|j| Complex64::new(r[j], r[m + j])).collect();
        (1.0 + components.iter().map(|f| f(&z).norm_sqr()).sum::<f64>()).ln()
    };
    let r0: Vec<f64> = y
        .iter()
        .map(|z| z.re)
        .chain(y.iter().map(|z| z.im))
        .collect();
    let hess = real_hessian(&potential, &r0, h);
    let mut herm = CMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            herm[(i, j)] = Complex64::new(
                0.25 * (hess[(i, j)] + hess[(m + i, m + j)]),
                0.25 * (hess[(m + i, j)] - hess[(i, m + j)]),
            );
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let q = CMat::from_fn(2 * m, 2 * m, |a, b| {
        let hv = herm[(a % m, b % m)];
        match (a < m, b < m) {
            (true, true) | (false, false) => hv,
            (true, false) => i * hv,
            (false, true) => -i * hv,
        }
    });
    Qgt {
        g: q.map(|z| z.re),
        omega: q.map(|z| -2.0 * z.im),
    }
}

fn real_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(a, s) in shifts {
            y[a] += s;
        }
        f(&y)
    };
    let f0 = f(x);
    let mut out = DMatrix::zeros(d, d);
    for a in 0..d {
        let s = |h: f64| (at(&[(a, h)]) - 2.0 * f0 + at(&[(a, -h)])) / (h * h);
        out[(a, a)] = (4.0 * s(h / 2.0) - s(h)) / 3.0;
        for b in (a + 1)..d {
            let m = |h: f64| {
                (at(&[(a, h), (b, h)]) - at(&[(a, h), (b, -h)]) - at(&[(a, -h), (b, h)])
                    + at(&[(a, -h), (b, -h)]))
                    / (4.0 * h * h)
            };
            let v = (4.0 * m(h / 2.0) - m(h)) / 3.0;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

/// Truncation level of the local expansions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionOrder {
    /// Curvature term only.
    Leading,
    /// Through third order.
    Full,
}

/// Predicted `Phi(x, x + a, x + b)` from local tensors:
/// `(1/2) w_ij a^i b^j + (1/4) Gt_{i,jk} (a^i b^j b^k - b^i a^j a^k)`.
pub fn triangle_phase_prediction(
    qgt: &Qgt,
    ct: &ConnectionTensors,
    a: &[f64],
    b: &[f64],
    order: ExpansionOrder,
) -> f64 {
    let d = a.len();
    let mut lead = 0.0;
    for i in 0..d {
        for j in 0..d {
            lead += 0.5 * qgt.omega[(i, j)] * a[i] * b[j];
        }
    }
    match order {
        ExpansionOrder::Leading => lead,
        ExpansionOrder::Full => {
            lead + 0.25 * (ct.gamma_tilde.contract(a, b, b) - ct.gamma_tilde.contract(b, a, a))
        }
    }
}

/// `|Phi_exact - Phi_expansion|` for the triangle `(x, x + eps z1, x + eps z2)`.
pub fn triangle_expansion_check(
    family: &StateFamily,
    x: &[f64],
    z1: &[f64],
    z2: &[f64],
    eps: f64,
    order: ExpansionOrder,
) -> Result<f64> {
    let (q, ct) = local_geometry(family, x, DEFAULT_STEP)?;
    let a: Vec<f64> = z1.iter().map(|v| v * eps).collect();
    let b: Vec<f64> = z2.iter().map(|v| v * eps).collect();
    let xa: Vec<f64> = x.iter().zip(&a).map(|(p, v)| p + v).collect();
    let xb: Vec<f64> = x.iter().zip(&b).map(|(p, v)| p + v).collect();
    let exact = crate::invariants::bargmann_phase(family, x, &xa, &xb)?;
    Ok((exact - triangle_phase_prediction(&q, &ct, &a, &b, order)).abs())
}

fn squared_distance(family: &StateFamily, x: &[f64], z: &[f64], eps: f64) -> f64 {
    let y: Vec<f64> = x.iter().zip(z).map(|(p, v)| p + eps * v).collect();
    let d = crate::invariants::distances(family, x, &y).d;
    d * d
}

/// `|d^2(x, x + eps z) - (g zz eps^2 + G zzz eps^3)|`.
pub fn distance_expansion_check(
    family: &StateFamily,
    x: &[f64],
    z: &[f64],
    eps: f64,
) -> Result<f64> {
    let (q, ct) = local_geometry(family, x, DEFAULT_STEP)?;
    let gzz = quadratic(&q.g, z);
    let gzzz = ct.gamma.contract(z, z, z);
    Ok((squared_distance(family, x, z, eps) - gzz * eps * eps - gzzz * eps.powi(3)).abs())
}

/// Same with `+z` and `-z` averaged, which removes the cubic term.
pub fn distance_expansion_check_symmetric(
    family: &StateFamily,
    x: &[f64],
    z: &[f64],
    eps: f64,
) -> f64 {
    let q = qgt(family, x, DEFAULT_STEP);
    let minus: Vec<f64> = z.iter().map(|v| -v).collect();
    let avg =
        0.5 * (squared_distance(family, x, z, eps) + squared_distance(family, x, &minus, eps));
    (avg - quadratic(&q.g, z) * eps * eps).abs()
}

pub(crate) fn quadratic(m: &DMatrix<f64>, z: &[f64]) -> f64 {
    let d = z.len();
    (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)] * z[i] * z[j])
        .sum()
}

/// Least-squares slope of `log r` against `log eps`.
pub fn loglog_slope(eps: &[f64], residuals: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = residuals
        .iter()
        .map(|r| r.max(f64::MIN_POSITIVE).ln())
        .collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{spin_half, spin_one, veronese};
    use crate::states::StateFamily;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// A generic curved surface in the third projective space.
    fn generic() -> StateFamily {
        StateFamily::new(2, 3, |p: &[f64]| {
            vec![
                c(1.0, 0.0),
                c(p[0], 0.3 * p[1] * p[1]),
                Complex64::from_polar(0.5 + 0.2 * p[0].sin(), p[1]),
                c(0.4 * p[0] * p[1], -0.7 * p[0]),
            ]
        })
    }

    #[test]
    fn spin_half_metric_and_connections() {
        let f = spin_half::family();
        let x = [0.4, -0.7];
        let (q, ct) = local_geometry(&f, &x, DEFAULT_STEP).unwrap();
        let (g, w) = spin_half::metric(x);
        assert_abs_diff_eq!(q.g[(0, 0)], g, epsilon = 1e-10);
        assert_abs_diff_eq!(q.omega[(0, 1)], w, epsilon = 1e-10);
        let up_t = ct.raised_gamma_tilde(&q).unwrap();
        let up_g = ct.raised_gamma(&q).unwrap();
        assert!(up_t.max_diff(&up_g) < 1e-7);
    }

    #[test]
    fn spin_one_closed_forms() {
        let f = spin_one::family();
        let x = [1.1, 0.4];
        let (q, ct) = local_geometry(&f, &x, DEFAULT_STEP).unwrap();
        let m = spin_one::metric(x[0]);
        assert_abs_diff_eq!(q.g[(0, 0)], m[0], epsilon = 1e-10);
        assert_abs_diff_eq!(q.g[(1, 1)], m[1], epsilon = 1e-10);
        assert_abs_diff_eq!(q.omega[(0, 1)], spin_one::omega(x[0]), epsilon = 1e-10);
        let cf = christoffel_from_metric(&f, &x, DEFAULT_STEP);
        assert!(cf.max_diff(&ct.gamma) < 1e-7);
        // Holomorphic curve: the symplectic and Levi-Civita connections coincide.
        let up_t = ct.raised_gamma_tilde(&q).unwrap();
        assert!(up_t.max_diff(&ct.raised_gamma(&q).unwrap()) < 1e-7);
    }

    #[test]
    fn t_is_symmetric_and_symplectic_identity_holds() {
        for (fam, x) in [
            (generic(), [0.3, -0.4]),
            (veronese::veronese(2, 3), [0.7, 0.2]),
            (spin_one::family(), [0.9, 1.3]),
        ] {
            let ct = qgc(&fam, &x, DEFAULT_STEP).unwrap();
            assert!(ct.t.full_symmetry_residual() < 1e-7);
            assert!(symplectic_residual(&fam, &x, DEFAULT_STEP).unwrap() < 1e-5);
            let dw = domega(&fam, &x, DEFAULT_STEP).unwrap();
            let q = |y: &[f64]| qgt(&fam, y, DEFAULT_STEP).omega;
            let fd = field_derivative(q, &x, DEFAULT_STEP);
            for a in 0..2 {
                assert_abs_diff_eq!(dw.get(a, 0, 1), fd[a][(0, 1)], epsilon = 1e-6);
            }
        }
        assert!(generic_has_nonzero_t());
    }

    fn generic_has_nonzero_t() -> bool {
        t_tensor(&generic(), &[0.3, -0.4], DEFAULT_STEP)
            .unwrap()
            .max_abs()
            > 1e-2
    }

    #[test]
    fn tiny_steps_are_refused() {
        let r = qgc(&spin_one::family(), &[1.0, 0.0], 1e-6);
        assert!(matches!(r, Err(Error::StepTooSmall { .. })));
    }

    #[test]
    fn kaehler_potential_reproduces_qgt() {
        let f = |z: &[Complex64]| -z[0];
        let q = kaehler_qgt(&[&f], &[c(0.4, -0.7)], 1e-3);
        let direct = qgt(&spin_half::family(), &[0.4, -0.7], 1e-3);
        assert!((q.g - direct.g).abs().max() < 1e-8);
        assert!((q.omega - direct.omega).abs().max() < 1e-8);
        let f1 = |z: &[Complex64]| z[0] * z[1];
        let f2 = |z: &[Complex64]| z[0] * z[0] - z[1];
        let y = [c(0.3, 0.1), c(-0.2, 0.5)];
        let q = kaehler_qgt(&[&f1, &f2], &y, 1e-3);
        let fam = StateFamily::new(4, 2, move |p: &[f64]| {
            let z = [c(p[0], p[2]), c(p[1], p[3])];
            vec![c(1.0, 0.0), f1(&z), f2(&z)]
        });
        let direct = qgt(&fam, &[0.3, -0.2, 0.1, 0.5], 1e-3);
        assert!((q.g - direct.g).abs().max() < 1e-8);
        assert!((q.omega - direct.omega).abs().max() < 1e-8);
    }

    #[test]
    fn expansion_coefficients() {
        let f = spin_one::family();
        let y = [1.0, 0.3];
        let (q, ct) = local_geometry(&f, &y, DEFAULT_STEP).unwrap();
        let exp = q_expansion(&f, &y, 2, EXPANSION_STEP).unwrap();
        for a in 0..2 {
            for j in 0..2 {
                let v = exp[0].get(&[a, j]);
                assert_abs_diff_eq!(v.re, q.g[(a, j)], epsilon = 1e-6);
                assert_abs_diff_eq!(v.im, -0.5 * q.omega[(a, j)], epsilon = 1e-6);
                for k in 0..2 {
                    let v = exp[1].get(&[a, j, k]);
                    assert_abs_diff_eq!(v.im, -0.5 * ct.gamma_tilde.get(a, j, k), epsilon = 1e-5);
                }
            }
        }
        assert!(matches!(
            q_expansion(&f, &y, 5, EXPANSION_STEP),
            Err(Error::UnsupportedOrder { order: 5 })
        ));
    }

    #[test]
    fn local_expansions_converge() {
        let eps = [0.04, 0.02, 0.01];
        for (fam, x) in [
            (spin_one::family(), [1.0, 0.5]),
            (veronese::veronese(2, 3), [0.3, 0.8]),
        ] {
            let tri: Vec<f64> = eps
                .iter()
                .map(|&e| {
                    triangle_expansion_check(
                        &fam,
                        &x,
                        &[1.0, 0.3],
                        &[-0.4, 1.0],
                        e,
                        ExpansionOrder::Full,
                    )
                    .unwrap()
                })
                .collect();
            assert!(loglog_slope(&eps, &tri) >= 3.7, "{tri:?}");
            let dist: Vec<f64> = eps
                .iter()
                .map(|&e| distance_expansion_check(&fam, &x, &[0.6, -0.8], e).unwrap())
                .collect();
            assert!(loglog_slope(&eps, &dist) >= 3.7, "{dist:?}");
        }
    }
}
