//! The reference-point connection `A^x(y) = d_z Phi(x, y, z)|_{z = y}`, its
//! complexification `u - i A`, and three routes to loop phases.
//!
//! With `Phi = -arg P3`, the triangle fan `sum_i Phi(x, y_i, y_{i+1})`
//! approximates `oint A^x`, and both agree with `-sum arg <y_i|y_{i+1}>`
//! modulo `2 pi`. The real part is `u = d log cos d(x, .)`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::deriv::{self, ProjectorJet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::states::Family;

/// Threshold on `P2` below which the gauge is treated as singular.
pub const ORTHOGONAL: f64 = 1e-10;

/// Default step for differencing `Phi`.
pub const CONNECTION_STEP: f64 = 1e-4;

/// A closed discretized loop `x_1 .. x_k` with implicit closure.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSample {
    points: Vec<Vec<f64>>,
}

impl LoopSample {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter(alloc::format!(
                "a loop needs at least 3 points, got {}",
                points.len()
            )));
        }
        let d = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        Ok(LoopSample { points })
    }

    /// Sample `curve` at `s = i / k` for `i < k`; the curve is closed on `[0, 1]`.
    pub fn from_curve<C: Fn(f64) -> Vec<f64>>(curve: C, k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| curve(i as f64 / k as f64)).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.points.len();
        (0..k).map(move |i| (i, (i + 1) % k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionValue {
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub complexified: Vec<Complex64>,
}

impl ConnectionValue {
    fn from_parts(a: Vec<f64>, u: Vec<f64>) -> Self {
        let complexified = a
            .iter()
            .zip(&u)
            .map(|(&a, &u)| Complex64::new(u, -a))
            .collect();
        ConnectionValue { a, u, complexified }
    }
}

/// `-sum arg <x_i|x_{i+1}>`, accumulated without reduction.
pub fn berry_phase_overlap<F: Family + ?Sized>(family: &F, lp: &LoopSample) -> Result<f64> {
    let pts = lp.points();
    let mut total = 0.0;
    for (i, j) in lp.edges() {
        let o = family.overlap(&pts[i], &pts[j]);
        if o.norm_sqr() <= ORTHOGONAL {
            return Err(Error::OrthogonalConsecutive { index: i, next: j });
        }
        total -= o.arg();
    }
    Ok(total)
}

/// `sum_i Phi(r, x_i, x_{i+1})` over the closed loop.
pub fn berry_phase_triangles<F: Family + ?Sized>(
    family: &F,
    lp: &LoopSample,
    reference: &[f64],
) -> Result<f64> {
    let pts = lp.points();
    let to_ref: Vec<Complex64> = pts.iter().map(|p| family.overlap(reference, p)).collect();
    if let Some(index) = to_ref.iter().position(|o| o.norm_sqr() <= ORTHOGONAL) {
        return Err(Error::OrthogonalReference { index });
    }
    let mut total = 0.0;
    for (i, j) in lp.edges() {
        let o = family.overlap(&pts[i], &pts[j]);
        if o.norm_sqr() <= ORTHOGONAL {
            return Err(Error::OrthogonalConsecutive { index: i, next: j });
        }
        total -= (to_ref[i] * o * to_ref[j].conj()).arg();
    }
    Ok(total)
}

/// `Phi(x, y, y + t e_axis)` relative to its value at `t = 0`.
fn phase_along<'a, F: Family + ?Sized>(
    family: &'a F,
    x: &'a [f64],
    y: &'a [f64],
    axis: usize,
) -> impl Fn(f64) -> f64 + 'a {
    let xy = family.overlap(x, y);
    move |t: f64| {
        let mut z = y.to_vec();
        z[axis] += t;
        -(xy * family.overlap(y, &z) * family.overlap(&z, x)).arg()
    }
}

fn log_modulus_along<'a, F: Family + ?Sized>(
    family: &'a F,
    x: &'a [f64],
    y: &'a [f64],
    axis: usize,
) -> impl Fn(f64) -> f64 + 'a {
    move |t: f64| {
        let mut z = y.to_vec();
        z[axis] += t;
        family.overlap(x, &z).norm().ln()
    }
}

fn traced<F: Family + ?Sized>(family: &F, x: &[f64], y: &[f64], h: f64) -> Option<Vec<Complex64>> {
    let fam = family.as_state_family().filter(|f| f.has_gradient())?;
    let px: CMat = fam.projector_at(x);
    let jet = ProjectorJet::first(fam, y, h);
    let pxy = &px * &jet.p;
    let den = pxy.trace();
    Some(
        jet.d1
            .iter()
            .map(|d| linalg::trace2(&pxy, d) / den)
            .collect(),
    )
}

/// `A^x(y)`, `u^x(y)` and `u - i A`. Families with an analytic gradient use
/// `tr[P(x) P(y) dP(y)] / tr[P(x) P(y)]`; others difference `Phi` and
/// `log |<x|y>|` with step `h`.
pub fn connection_form<F: Family + ?Sized>(
    family: &F,
    x: &[f64],
    y: &[f64],
    h: f64,
) -> Result<ConnectionValue> {
    let p2 = family.overlap(x, y).norm_sqr();
    if p2 <= ORTHOGONAL {
        return Err(Error::NearOrthogonal { p2 });
    }
    if let Some(cx) = traced(family, x, y, h) {
        return Ok(ConnectionValue::from_parts(
            cx.iter().map(|c| -c.im).collect(),
            cx.iter().map(|c| c.re).collect(),
        ));
    }
    let d = family.param_dim();
    let a = (0..d)
        .map(|ax| deriv::derivative(phase_along(family, x, y, ax), 0.0, h))
        .collect();
    let u = (0..d)
        .map(|ax| deriv::derivative(log_modulus_along(family, x, y, ax), 0.0, h))
        .collect();
    Ok(ConnectionValue::from_parts(a, u))
}

/// `|A^{x2}(y) - A^{x1}(y) - grad_y Phi(x2, x1, y)|`.
pub fn gauge_shift_check<F: Family + ?Sized>(
    family: &F,
    x1: &[f64],
    x2: &[f64],
    y: &[f64],
    h: f64,
) -> Result<f64> {
    for (a, b) in [(x1, x2), (x1, y), (x2, y)] {
        let p2 = family.overlap(a, b).norm_sqr();
        if p2 <= ORTHOGONAL {
            return Err(Error::NearOrthogonal { p2 });
        }
    }
    let a1 = connection_form(family, x1, y, h)?.a;
    let a2 = connection_form(family, x2, y, h)?.a;
    let phi0 = -(family.overlap(x2, x1) * family.overlap(x1, y) * family.overlap(y, x2)).arg();
    let mut sq = 0.0;
    for ax in 0..family.param_dim() {
        let phi = |t: f64| {
            let mut z = y.to_vec();
            z[ax] += t;
            let v =
                -(family.overlap(x2, x1) * family.overlap(x1, &z) * family.overlap(&z, x2)).arg();
            linalg::wrap_angle(v - phi0)
        };
        let grad = deriv::derivative(phi, 0.0, h);
        sq += (a2[ax] - a1[ax] - grad).powi(2);
    }
    Ok(sq.sqrt())
}

const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Integrate `(A^z - A^x) . dw` along the straight segment `x -> y`, which
/// reproduces `Phi(x, y, z)` (unreduced).
pub fn phase_from_connection<F: Family + ?Sized>(
    family: &F,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    resolution: usize,
) -> Result<f64> {
    let dir: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
    let width = 1.0 / resolution as f64;
    let mut total = 0.0;
    for i in 0..resolution {
        for (node, weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            let s = (i as f64 + 0.5 + 0.5 * node) * width;
            let w: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
            let (az, ax) = match (
                connection_form(family, z, &w, CONNECTION_STEP),
                connection_form(family, x, &w, CONNECTION_STEP),
            ) {
                (Ok(az), Ok(ax)) => (az.a, ax.a),
                _ => return Err(Error::PathSingularity { s }),
            };
            let dot: f64 = az
                .iter()
                .zip(&ax)
                .zip(&dir)
                .map(|((p, q), d)| (p - q) * d)
                .sum();
            total += 0.5 * weight * width * dot;
        }
    }
    Ok(total)
}

/// Recover `d(x, y)` by integrating `u^x` along the straight segment.
pub fn distance_from_connection<F: Family + ?Sized>(
    family: &F,
    x: &[f64],
    y: &[f64],
    resolution: usize,
) -> Result<f64> {
    let dir: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
    let width = 1.0 / resolution as f64;
    let mut log_cos = 0.0;
    for i in 0..resolution {
        for (node, weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            let s = (i as f64 + 0.5 + 0.5 * node) * width;
            let w: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
            let u = connection_form(family, x, &w, CONNECTION_STEP)
                .map_err(|_| Error::PathSingularity { s })?
                .u;
            log_cos += 0.5 * weight * width * u.iter().zip(&dir).map(|(u, d)| u * d).sum::<f64>();
        }
    }
    Ok(log_cos.exp().min(1.0).acos())
}

/// `d_a A^X_b - d_b A^X_a` with outer step `h`.
pub fn curvature_from_connection<F: Family + ?Sized>(
    family: &F,
    x: &[f64],
    y: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    let d = family.param_dim();
    connection_form(family, x, y, CONNECTION_STEP)?;
    let mut jac = vec![vec![0.0; d]; d];
    for (a, row) in jac.iter_mut().enumerate() {
        let shifted = |t: f64| -> Result<Vec<f64>> {
            let mut w = y.to_vec();
            w[a] += t;
            Ok(connection_form(family, x, &w, CONNECTION_STEP)?.a)
        };
        let (p1, m1) = (shifted(h)?, shifted(-h)?);
        let (p2, m2) = (shifted(h / 2.0)?, shifted(-h / 2.0)?);
        for b in 0..d {
            let coarse = (p1[b] - m1[b]) / (2.0 * h);
            let fine = (p2[b] - m2[b]) / h;
            row[b] = (4.0 * fine - coarse) / 3.0;
        }
    }
    Ok((0..d)
        .map(|a| (0..d).map(|b| jac[a][b] - jac[b][a]).collect())
        .collect())
}

/// `oint A^x . dy` along a loop closed on `s in [0, 1]`, by the periodic
/// trapezoid rule with `samples` nodes.
pub fn berry_phase_connection<F, C>(family: &F, curve: C, x: &[f64], samples: usize) -> Result<f64>
where
    F: Family + ?Sized,
    C: Fn(f64) -> Vec<f64>,
{
    let h = 1.0 / samples as f64;
    let mut total = 0.0;
    for i in 0..samples {
        let s = i as f64 * h;
        let y = curve(s);
        let a = connection_form(family, x, &y, CONNECTION_STEP)?.a;
        let ds = 1e-3 * h;
        let (fwd, back, fwd2, back2) = (
            curve(s + ds),
            curve(s - ds),
            curve(s + ds / 2.0),
            curve(s - ds / 2.0),
        );
        for (k, ak) in a.iter().enumerate() {
            let coarse = (fwd[k] - back[k]) / (2.0 * ds);
            let fine = (fwd2[k] - back2[k]) / ds;
            total += ak * (4.0 * fine - coarse) / 3.0 * h;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants;
    use crate::local_geom;
    use crate::models::{spin_half, spin_one, veronese};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn mod2pi(a: f64) -> f64 {
        linalg::wrap_angle(a)
    }

    fn latitude(theta: f64) -> impl Fn(f64) -> Vec<f64> {
        move |s| vec![theta, 2.0 * PI * s]
    }

    #[test]
    fn constant_loop() {
        let f = spin_half::family();
        let lp = LoopSample::new(vec![vec![0.3, 0.1]; 5]).unwrap();
        assert_eq!(berry_phase_overlap(&f, &lp).unwrap(), 0.0);
        assert_abs_diff_eq!(
            berry_phase_triangles(&f, &lp, &[1.0, 1.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(LoopSample::new(vec![vec![0.0]; 2]).is_err());
    }

    #[test]
    fn equator_encloses_half_the_sphere() {
        let f = spin_half::angles();
        let lp = LoopSample::from_curve(latitude(PI / 2.0), 256).unwrap();
        let ov = berry_phase_overlap(&f, &lp).unwrap();
        assert_abs_diff_eq!(mod2pi(ov).abs(), PI, epsilon = 1e-3);
        let north = berry_phase_triangles(&f, &lp, &[0.0, 0.0]).unwrap();
        let other = berry_phase_triangles(&f, &lp, &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(mod2pi(north - other), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(mod2pi(north - ov), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn spin_one_latitude_matches_flux() {
        let f = spin_one::family();
        for theta in [PI / 3.0, 1.0] {
            let flux = -2.0 * PI * (1.0 - theta.cos());
            let lp = LoopSample::from_curve(latitude(theta), 1024).unwrap();
            let ov = berry_phase_overlap(&f, &lp).unwrap();
            assert_abs_diff_eq!(mod2pi(ov - flux), 0.0, epsilon = 1e-4);
            let via_a = berry_phase_connection(&f, latitude(theta), &[0.4, 0.3], 256).unwrap();
            assert_abs_diff_eq!(mod2pi(via_a - flux), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn contractible_loops_on_the_flat_torus() {
        let f = veronese::veronese(2, 3);
        let lp = LoopSample::from_curve(
            |s| {
                vec![
                    0.4 + 0.7 * (2.0 * PI * s).cos(),
                    -0.2 + 0.5 * (2.0 * PI * s).sin(),
                ]
            },
            512,
        )
        .unwrap();
        let ov = berry_phase_overlap(&f, &lp).unwrap();
        assert!(ov.abs() < 1e-8, "{ov}");
        let phi = invariants::bargmann_phase(&f, &[0.0, 0.0], &[1.0, 0.5], &[0.3, 1.2]).unwrap();
        assert!(phi.abs() > 0.1);
    }

    #[test]
    fn connection_at_coincidence_and_origin() {
        let f = spin_half::family();
        let c = connection_form(&f, &[0.3, 0.4], &[0.3, 0.4], 1e-4).unwrap();
        assert!(c.a.iter().chain(&c.u).all(|v| v.abs() < 1e-12));
        let c = connection_form(&f, &[0.0, 0.0], &[1.0, 0.0], 1e-4).unwrap();
        assert_abs_diff_eq!(c.a[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.a[1], -0.5, epsilon = 1e-12);
        let fd = connection_form(
            &f.clone().without_gradient(),
            &[0.0, 0.0],
            &[1.0, 0.0],
            1e-4,
        )
        .unwrap();
        assert_abs_diff_eq!(fd.a[1], -0.5, epsilon = 1e-9);
        for (z, (a, u)) in c.complexified.iter().zip(c.a.iter().zip(&c.u)) {
            assert_eq!(*z, Complex64::new(*u, -*a));
        }
    }

    #[test]
    fn trace_and_difference_routes_agree() {
        let f = spin_one::family();
        let (x, y) = ([0.8, 0.3], [1.2, -0.4]);
        let tr = connection_form(&f, &x, &y, 1e-4).unwrap();
        let fd = connection_form(&f.clone().without_gradient(), &x, &y, 1e-4).unwrap();
        for k in 0..2 {
            assert_abs_diff_eq!(tr.a[k], fd.a[k], epsilon = 1e-8);
            assert_abs_diff_eq!(tr.u[k], fd.u[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn antipode_is_singular() {
        let f = spin_half::family();
        let r1 = [0.5, 0.5];
        let p = spin_half::pole(r1).unwrap();
        assert!(matches!(
            connection_form(&f, &r1, &p, 1e-4),
            Err(Error::NearOrthogonal { .. })
        ));
    }

    #[test]
    fn gauge_shift() {
        let f = spin_half::family();
        assert!(
            gauge_shift_check(&f, &[0.1, 0.2], &[0.1, 0.2], &[0.5, -0.3], 1e-4).unwrap() < 1e-12
        );
        assert!(
            gauge_shift_check(&f, &[0.1, 0.2], &[-0.7, 0.4], &[0.5, -0.3], 1e-4).unwrap() < 1e-6
        );
        let v = veronese::veronese(1, 2);
        assert!(
            gauge_shift_check(&v, &[0.1, 0.2], &[0.9, -0.4], &[0.5, 0.6], 1e-4).unwrap() < 1e-6
        );
    }

    #[test]
    fn phase_from_path_integral() {
        let f = spin_half::family();
        let v = phase_from_connection(&f, &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], 64).unwrap();
        assert_abs_diff_eq!(v, -PI / 4.0, epsilon = 1e-5);
        let trivial = phase_from_connection(&f, &[0.2, 0.0], &[1.0, 0.3], &[0.2, 0.0], 16).unwrap();
        assert_abs_diff_eq!(trivial, 0.0, epsilon = 1e-12);
        let s1 = spin_one::family();
        let (x, y, z) = ([0.5, 0.0], [1.0, 1.0], [1.5, -0.5]);
        let v = phase_from_connection(&s1, &x, &y, &z, 64).unwrap();
        assert_abs_diff_eq!(
            mod2pi(v - invariants::bargmann_phase(&s1, &x, &y, &z).unwrap()),
            0.0,
            epsilon = 1e-5
        );
    }

    #[test]
    fn distance_from_u() {
        let f = spin_one::family();
        let (x, y) = ([0.7, 0.2], [1.3, 1.0]);
        let d = distance_from_connection(&f, &x, &y, 64).unwrap();
        assert_abs_diff_eq!(d, invariants::distances(&f, &x, &y).d, epsilon = 1e-6);
    }

    #[test]
    fn curvature_matches_qgt() {
        let f = spin_one::family();
        let y = [1.1, 0.4];
        let om = local_geom::qgt(&f, &y, 1e-3).omega[(0, 1)];
        for x in [[0.5, 0.0], [1.5, 2.0]] {
            let c = curvature_from_connection(&f, &x, &y, 1e-3).unwrap();
            assert_abs_diff_eq!(c[0][1], -(1.1f64).sin(), epsilon = 1e-5);
            assert_abs_diff_eq!(c[0][1], om, epsilon = 1e-5);
        }
        let v = veronese::veronese(2, 3);
        let c = curvature_from_connection(&v, &[0.0, 0.0], &[0.4, 0.7], 1e-3).unwrap();
        assert!(c[0][1].abs() < 1e-6);
    }
}
