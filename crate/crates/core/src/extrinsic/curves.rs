//! Curves in the affine chart of the projective line.
//!
//! The chart metric is `|dz|^2 / (1 + |z|^2)^2`, with area form
//! `Im(conj(X) Y) / (1 + |z|^2)^2` on tangent vectors written as complex
//! numbers. The curvature form of the family `(1, z)` is minus twice the area
//! form.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::deriv;
use crate::error::{Error, Result};
use crate::invariants::cyclic_product;
use crate::states::{StateFamily, StateVector};

type ChartFn = dyn Fn(f64) -> Complex64 + Send + Sync;
type JetFn = dyn Fn(f64) -> [Complex64; 3] + Send + Sync;
type PairFn = dyn Fn(f64) -> [Complex64; 2] + Send + Sync;

/// A parameterized curve `t -> f(t)` in the chart.
///
/// Derivatives come from an analytic jet when one is attached and from
/// Richardson differences otherwise. Curves that pass through the point at
/// infinity can carry homogeneous coordinates `(a, b)` with `f = b / a`.
#[derive(Clone)]
pub struct ChartCurve {
    f: Arc<ChartFn>,
    jet: Option<Arc<JetFn>>,
    pair: Option<Arc<PairFn>>,
    period: Option<f64>,
    step: f64,
}

impl core::fmt::Debug for ChartCurve {
    fn fmt(&self, fmt: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        fmt.debug_struct("ChartCurve")
            .field("analytic", &self.jet.is_some())
            .field("homogeneous", &self.pair.is_some())
            .field("period", &self.period)
            .finish()
    }
}

impl ChartCurve {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        ChartCurve {
            f: Arc::new(f),
            jet: None,
            pair: None,
            period: None,
            step: 1e-3,
        }
    }

    /// Attach `t -> (f, f', f'')`.
    pub fn with_jet<J>(mut self, jet: J) -> Self
    where
        J: Fn(f64) -> [Complex64; 3] + Send + Sync + 'static,
    {
        self.jet = Some(Arc::new(jet));
        self
    }

    /// Attach homogeneous coordinates `(a, b)` with `f = b / a`.
    pub fn with_pair<P>(mut self, pair: P) -> Self
    where
        P: Fn(f64) -> [Complex64; 2] + Send + Sync + 'static,
    {
        self.pair = Some(Arc::new(pair));
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    /// Step used when derivatives are differenced.
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn value(&self, t: f64) -> Complex64 {
        (self.f)(t)
    }

    /// `(f, f', f'')` at `t`.
    pub fn jet(&self, t: f64) -> [Complex64; 3] {
        if let Some(j) = &self.jet {
            return j(t);
        }
        let f = |s: f64| (self.f)(s);
        [
            f(t),
            deriv::derivative_complex(f, t, self.step),
            deriv::second_derivative_complex(f, t, self.step),
        ]
    }

    pub fn homogeneous(&self, t: f64) -> [Complex64; 2] {
        match &self.pair {
            Some(p) => p(t),
            None => [Complex64::new(1.0, 0.0), (self.f)(t)],
        }
    }

    /// The one-parameter state family `(a(t), b(t))`.
    pub fn family(&self) -> StateFamily {
        let c = self.clone();
        let fam = StateFamily::new(1, 1, move |t: &[f64]| c.homogeneous(t[0]).to_vec());
        match self.period {
            Some(p) => fam.with_periods(alloc::vec![p]),
            None => fam,
        }
    }

    /// `t -> f(t + shift) + eps * bump(t)`, a smooth deformation.
    pub fn deformed<B>(&self, eps: f64, bump: B) -> ChartCurve
    where
        B: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        let f = self.f.clone();
        let mut c = ChartCurve::new(move |t| f(t) + bump(t) * eps);
        c.period = self.period;
        c.step = self.step;
        c
    }

    /// Same image under `t -> t + eps * sin(2 pi t / period)`, a
    /// reparameterization preserving the period.
    pub fn reparameterized(&self, eps: f64) -> ChartCurve {
        let period = self.period.unwrap_or(2.0 * PI);
        let f = self.f.clone();
        let mut c = ChartCurve::new(move |t| f(t + eps * (2.0 * PI * t / period).sin()));
        c.period = self.period;
        c.step = self.step;
        c
    }

    /// Traverse the curve `k` times over one period.
    pub fn repeated(&self, k: u32) -> ChartCurve {
        let f = self.f.clone();
        let mut c = ChartCurve::new(move |t| f(k as f64 * t));
        c.period = self.period;
        c.step = self.step / k as f64;
        c
    }
}

/// Chart speed `|f'| / (1 + |f|^2)`.
pub fn speed(f: Complex64, fp: Complex64) -> f64 {
    fp.norm() / (1.0 + f.norm_sqr())
}

/// Unit tangent and covariant acceleration at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveFrame {
    pub t: f64,
    pub f: Complex64,
    /// `df/ds` for arc length `s`.
    pub tangent: Complex64,
    /// `nabla_v v` with `v` the unit tangent.
    pub normal: Complex64,
    /// `ds/dt`.
    pub speed: f64,
}

impl CurveFrame {
    /// Metric inner product of two tangent vectors at `f`.
    pub fn inner(&self, x: Complex64, y: Complex64) -> f64 {
        (x * y.conj()).re / (1.0 + self.f.norm_sqr()).powi(2)
    }

    /// Area form on two tangent vectors at `f`.
    pub fn area(&self, x: Complex64, y: Complex64) -> f64 {
        (x.conj() * y).im / (1.0 + self.f.norm_sqr()).powi(2)
    }
}

fn stationary_guard(fp: Complex64, t: f64) -> Result<()> {
    if fp.norm() < 1e-12 {
        return Err(Error::StationaryPoint { t });
    }
    Ok(())
}

pub fn curve_frame(curve: &ChartCurve, t: f64) -> Result<CurveFrame> {
    let [f, fp, fpp] = curve.jet(t);
    stationary_guard(fp, t)?;
    let k = 1.0 + f.norm_sqr();
    let s = fp.norm() / k;
    let ds =
        (fp.conj() * fpp).re / (fp.norm() * k) - fp.norm() * 2.0 * (f.conj() * fp).re / (k * k);
    let tangent = fp / s;
    let accel = fpp / (s * s) - fp * (ds / (s * s * s));
    let normal = accel - f.conj() * tangent * tangent * (2.0 / k);
    Ok(CurveFrame {
        t,
        f,
        tangent,
        normal,
        speed: s,
    })
}

/// `Im[2 f''/f' - 4 conj(f) f' / (1 + |f|^2)]` in the parameter `t`.
fn bracket(f: Complex64, fp: Complex64, fpp: Complex64) -> f64 {
    (fpp / fp * 2.0 - f.conj() * fp * 4.0 / (1.0 + f.norm_sqr())).im
}

/// `T` of the curve at unit speed, which is `w(v, nabla_v v)`.
pub fn curve_t(curve: &ChartCurve, t: f64) -> Result<f64> {
    let [f, fp, fpp] = curve.jet(t);
    stationary_guard(fp, t)?;
    Ok(-bracket(f, fp, fpp) / speed(f, fp))
}

/// `T_ttt` in the given parameterization, `-g_tt * Im[...]`.
pub fn curve_t_unnormalized(curve: &ChartCurve, t: f64) -> Result<f64> {
    let [f, fp, fpp] = curve.jet(t);
    stationary_guard(fp, t)?;
    Ok(-speed(f, fp).powi(2) * bracket(f, fp, fpp))
}

/// Curve `f = tan(theta) e^{i phi}` sampled on a uniform parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructedCurve {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_prime: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ReconstructedCurve {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn chart_value(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.theta[i].tan(), self.phi[i])
    }

    /// `(cos theta, sin theta e^{i phi})`.
    pub fn state(&self, i: usize) -> [Complex64; 2] {
        [
            Complex64::new(self.theta[i].cos(), 0.0),
            Complex64::from_polar(self.theta[i].sin(), self.phi[i]),
        ]
    }

    /// Index of the sample closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let h = self.t[1] - self.t[0];
        (((t - self.t[0]) / h).round().max(0.0) as usize).min(self.len() - 1)
    }
}

/// Rebuild a unit-speed curve from its `T(t)` and initial data.
///
/// Integrates
/// `theta'' = T sqrt(1 - theta'^2) / 2 - 2 (theta'^2 - 1) cot(2 theta)` and
/// `phi' = 2 sqrt(1 - theta'^2) / sin(2 theta)` with classical RK4.
pub fn reconstruct_curve<F: Fn(f64) -> f64>(
    t_of: F,
    theta0: f64,
    theta_prime0: f64,
    phi0: f64,
    span: (f64, f64),
    step: f64,
) -> Result<ReconstructedCurve> {
    if theta_prime0.abs() >= 1.0 {
        return Err(Error::SpeedSaturation { t: span.0 });
    }
    let steps = ((span.1 - span.0) / step).round() as usize;
    let h = (span.1 - span.0) / steps as f64;
    let rhs = |t: f64, y: [f64; 3]| -> Result<[f64; 3]> {
        let [th, thp, _] = y;
        let s2 = (2.0 * th).sin();
        if s2.abs() < 1e-9 {
            return Err(Error::SingularLatitude { t });
        }
        let w = 1.0 - thp * thp;
        if w <= 1e-12 {
            return Err(Error::SpeedSaturation { t });
        }
        let root = w.sqrt();
        let c2 = (2.0 * th).cos() / s2;
        Ok([
            thp,
            t_of(t) * root / 2.0 - 2.0 * (thp * thp - 1.0) * c2,
            2.0 * root / s2,
        ])
    };
    let mut out = ReconstructedCurve {
        t: Vec::with_capacity(steps + 1),
        theta: Vec::with_capacity(steps + 1),
        theta_prime: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
    };
    let mut y = [theta0, theta_prime0, phi0];
    let sign0 = (2.0 * theta0).sin().signum();
    for i in 0..=steps {
        let t = span.0 + i as f64 * h;
        out.t.push(t);
        out.theta.push(y[0]);
        out.theta_prime.push(y[1]);
        out.phi.push(y[2]);
        if i == steps {
            break;
        }
        let add =
            |a: [f64; 3], k: [f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
        let k1 = rhs(t, y)?;
        let k2 = rhs(t + h / 2.0, add(y, k1, h / 2.0))?;
        let k3 = rhs(t + h / 2.0, add(y, k2, h / 2.0))?;
        let k4 = rhs(t + h, add(y, k3, h))?;
        for j in 0..3 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (2.0 * y[0]).sin().signum() != sign0 {
            return Err(Error::SingularLatitude { t: t + h });
        }
    }
    Ok(out)
}

/// Speed `|a b' - b a'| / (|a|^2 + |b|^2)` from homogeneous coordinates,
/// finite through the point at infinity.
fn homogeneous_speed(curve: &ChartCurve, t: f64) -> f64 {
    let [a, b] = curve.homogeneous(t);
    let da = deriv::derivative_complex(|s| curve.homogeneous(s)[0], t, 1e-3);
    let db = deriv::derivative_complex(|s| curve.homogeneous(s)[1], t, 1e-3);
    (a * db - b * da).norm() / (a.norm_sqr() + b.norm_sqr())
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    GL_NODES
        .iter()
        .zip(&GL_WEIGHTS)
        .map(|(x, w)| w * (f(mid + half * x) + f(mid - half * x)))
        .sum::<f64>()
        * half
}

/// Arc length of a closed curve and its inverse.
#[derive(Clone, Debug)]
pub struct ArcLength {
    curve: ChartCurve,
    cumulative: Arc<Vec<f64>>,
    h: f64,
}

impl ArcLength {
    /// Tabulate the length with 8-point Gauss-Legendre on `intervals` cells.
    pub fn new(curve: &ChartCurve, intervals: usize) -> Self {
        let period = curve.period().expect("closed curve");
        let h = period / intervals as f64;
        let sp = |t: f64| homogeneous_speed(curve, t);
        let mut cumulative = Vec::with_capacity(intervals + 1);
        cumulative.push(0.0);
        for i in 0..intervals {
            let next = cumulative[i] + gauss8(&sp, i as f64 * h, (i + 1) as f64 * h);
            cumulative.push(next);
        }
        ArcLength {
            curve: curve.clone(),
            cumulative: Arc::new(cumulative),
            h,
        }
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Curve parameter at arc length `s`, reduced modulo the length.
    pub fn parameter(&self, s: f64) -> f64 {
        let (table, h) = (&self.cumulative, self.h);
        let intervals = table.len() - 1;
        let length = self.length();
        let s = s - length * (s / length).floor();
        let i = match table.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(intervals - 1),
            Err(i) => i.saturating_sub(1).min(intervals - 1),
        };
        let t0 = i as f64 * h;
        let mut t = t0 + h * (s - table[i]) / (table[i + 1] - table[i]);
        for _ in 0..50 {
            let r = table[i] + gauss8(&|u| homogeneous_speed(&self.curve, u), t0, t) - s;
            let step = r / homogeneous_speed(&self.curve, t);
            t -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        t
    }

    /// The curve parameterized by arc length, with period equal to the length.
    pub fn unit_speed(&self) -> ChartCurve {
        let (a, b) = (self.clone(), self.clone());
        ChartCurve::new(move |s| a.curve.value(a.parameter(s)))
            .with_pair(move |s| b.curve.homogeneous(b.parameter(s)))
            .with_period(self.length())
    }
}

/// Agreement between a closed curve and its reconstruction from `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundTrip {
    pub length: f64,
    /// Largest `|P2|` difference over the sampled pairs.
    pub two_point: f64,
    /// Largest `|P3|` difference over the sampled triples.
    pub three_point: f64,
    /// Largest difference between the input `T` and `T` recomputed from
    /// the reconstructed samples.
    pub t_value: f64,
}

/// Tabulate `T` along a closed curve by arc length, rebuild the curve from it
/// with [`reconstruct_curve`] and compare invariants of `points` samples.
///
/// The curve must avoid the poles of the chart and wind with increasing
/// `arg f`, the orientation the reconstruction integrates.
pub fn invariant_roundtrip(curve: &ChartCurve, points: usize, step: f64) -> Result<RoundTrip> {
    let arc = ArcLength::new(curve, 512);
    let length = arc.length();
    let t_of = |s: f64| curve_t(curve, arc.parameter(s)).unwrap_or(f64::NAN);
    let [f, fp, _] = curve.jet(0.0);
    stationary_guard(fp, 0.0)?;
    let r = f.norm();
    let theta_prime0 = (f.conj() * fp).re / r / (1.0 + r * r) / speed(f, fp);
    let rc = reconstruct_curve(t_of, r.atan(), theta_prime0, f.arg(), (0.0, length), step)?;
    let ds = rc.t[1] - rc.t[0];
    let indices: Vec<usize> = (0..points).map(|j| j * (rc.len() - 1) / points).collect();
    let original: Vec<StateVector> = indices
        .iter()
        .map(|&i| crate::states::normalize(&curve.homogeneous(arc.parameter(rc.t[i]))))
        .collect::<Result<_>>()?;
    let rebuilt: Vec<StateVector> = indices
        .iter()
        .map(|&i| crate::states::normalize(&rc.state(i)))
        .collect::<Result<_>>()?;
    let (mut two_point, mut three_point) = (0.0f64, 0.0f64);
    for i in 0..points {
        for j in 0..points {
            let pa = crate::states::overlap(&original[i], &original[j])?;
            let pb = crate::states::overlap(&rebuilt[i], &rebuilt[j])?;
            two_point = two_point.max((pa.norm_sqr() - pb.norm_sqr()).abs());
            for k in 0..points {
                let a = cyclic_product(&[
                    original[i].clone(),
                    original[j].clone(),
                    original[k].clone(),
                ]);
                let b =
                    cyclic_product(&[rebuilt[i].clone(), rebuilt[j].clone(), rebuilt[k].clone()]);
                three_point = three_point.max((a - b).norm());
            }
        }
    }
    // Fourth-order differences on samples spaced about 0.005 apart.
    let stencil = ((0.005 / ds).round() as usize).max(1);
    let mut t_value = 0.0f64;
    let value = |j: usize| rc.chart_value(j);
    let hh = stencil as f64 * ds;
    for &i in indices
        .iter()
        .filter(|&&i| i >= 2 * stencil && i + 2 * stencil < rc.len())
    {
        let (m2, m1, z, p1, p2) = (
            value(i - 2 * stencil),
            value(i - stencil),
            value(i),
            value(i + stencil),
            value(i + 2 * stencil),
        );
        let fp = (m2 - m1 * 8.0 + p1 * 8.0 - p2) / (12.0 * hh);
        let fpp = (-m2 + m1 * 16.0 - z * 30.0 + p1 * 16.0 - p2) / (12.0 * hh * hh);
        let got = -bracket(z, fp, fpp) / speed(z, fp);
        t_value = t_value.max((got - t_of(rc.t[i])).abs());
    }
    Ok(RoundTrip {
        length,
        two_point,
        three_point,
        t_value,
    })
}

/// Turning integrals of a closed curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfIntersection {
    /// `oint eps(v, nabla_v v) ds` with the Fubini-Study connection.
    pub raw: f64,
    /// `raw / 2 pi`.
    pub normalized: f64,
    /// `oint Im(f''/f') dt / 2 pi`, the rotation index of `f'` in the chart.
    pub turning: f64,
}

/// Integrate the geodesic curvature of a closed curve with `samples` points
/// of the periodic trapezoid rule.
pub fn self_intersection(curve: &ChartCurve, samples: usize) -> Result<SelfIntersection> {
    let period = curve
        .period()
        .ok_or_else(|| Error::InvalidParameter("curve is not closed".into()))?;
    let dt = period / samples as f64;
    let mut raw = 0.0;
    let mut flat = 0.0;
    for i in 0..samples {
        let t = i as f64 * dt;
        let [f, fp, fpp] = curve.jet(t);
        stationary_guard(fp, t)?;
        let turn = (fpp / fp).im;
        flat += turn * dt;
        raw += (turn - 2.0 * (f.conj() * fp).im / (1.0 + f.norm_sqr())) * dt;
    }
    Ok(SelfIntersection {
        raw,
        normalized: raw / (2.0 * PI),
        turning: flat / (2.0 * PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_geom;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn latitude(r: f64) -> ChartCurve {
        ChartCurve::new(move |t| Complex64::from_polar(r, t)).with_period(2.0 * PI)
    }

    fn wobbly() -> ChartCurve {
        ChartCurve::new(|t| c(0.3 + 0.5 * t.cos(), 0.2 * (2.0 * t).sin() + 0.7 * t.sin()))
            .with_period(2.0 * PI)
    }

    #[test]
    fn geodesic_has_no_normal() {
        let arc = ChartCurve::new(|t| c((t / 2.0).tan(), 0.0));
        for t in [-0.5, 0.1, 1.0] {
            let fr = curve_frame(&arc, t).unwrap();
            assert!(fr.normal.norm() < 1e-8);
            assert!(curve_t(&arc, t).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn frame_is_unit_speed_and_orthogonal() {
        let w = wobbly();
        for i in 0..20 {
            let fr = curve_frame(&w, 0.31 * i as f64).unwrap();
            assert_abs_diff_eq!(fr.inner(fr.tangent, fr.tangent), 1.0, epsilon = 1e-8);
            assert!(fr.inner(fr.normal, fr.tangent).abs() < 1e-8);
        }
    }

    #[test]
    fn latitude_normal_is_constant() {
        let l = latitude(0.7);
        let n0 = curve_frame(&l, 0.0).unwrap();
        let n0 = n0.inner(n0.normal, n0.normal);
        for t in [0.5, 1.7, 4.0] {
            let fr = curve_frame(&l, t).unwrap();
            assert_abs_diff_eq!(fr.inner(fr.normal, fr.normal), n0, epsilon = 1e-8);
        }
    }

    #[test]
    fn curve_t_matches_projector_tensor() {
        let w = wobbly();
        let fam = w.family();
        for t in [0.2, 1.3, 2.9] {
            let tt = local_geom::t_tensor(&fam, &[t], 1e-3).unwrap().get(0, 0, 0);
            assert_abs_diff_eq!(curve_t_unnormalized(&w, t).unwrap(), tt, epsilon = 1e-5);
            let s = speed(w.value(t), w.jet(t)[1]);
            assert_abs_diff_eq!(curve_t(&w, t).unwrap(), tt / s.powi(3), epsilon = 1e-5);
        }
    }

    #[test]
    fn stationary_points_are_rejected() {
        let cusp = ChartCurve::new(|t| c(t * t, t * t * t));
        assert!(matches!(
            curve_frame(&cusp, 0.0),
            Err(Error::StationaryPoint { .. })
        ));
    }

    #[test]
    fn zero_t_gives_latitude() {
        // The only latitude with T = 0 is the great circle.
        let theta0 = PI / 4.0;
        let rc = reconstruct_curve(|_| 0.0, theta0, 0.0, 0.0, (0.0, 1.0), 1e-4).unwrap();
        let last = rc.len() - 1;
        assert!(rc.theta.iter().all(|th| (th - theta0).abs() < 1e-12));
        assert_abs_diff_eq!(rc.phi[last], 2.0, epsilon = 1e-10);
        let off = reconstruct_curve(|_| 0.0, 0.5, 0.0, 0.0, (0.0, 0.2), 1e-4).unwrap();
        assert!(off.theta[off.len() - 1] > 0.5 + 1e-3);
    }

    #[test]
    fn reconstruction_round_trip() {
        let t_of = |t: f64| 0.8 * t.sin() - 0.3;
        let rc = reconstruct_curve(t_of, 0.6, 0.2, 0.1, (0.0, 2.0), 1e-4).unwrap();
        let th = rc.clone();
        let curve = ChartCurve::new(move |t| {
            let i = th.index_of(t);
            th.chart_value(i)
        });
        // Check T on the sample grid through interpolation-free differences.
        let h = rc.t[1] - rc.t[0];
        for &t in &[0.5, 1.0, 1.5] {
            let i = rc.index_of(t);
            let stencil = 10;
            let f = |j: usize| rc.chart_value(j);
            let fp = (f(i + stencil) - f(i - stencil)) / (2.0 * stencil as f64 * h);
            let fpp = (f(i + stencil) - f(i) * 2.0 + f(i - stencil)) / (stencil as f64 * h).powi(2);
            let got = -bracket(f(i), fp, fpp) / speed(f(i), fp);
            assert_abs_diff_eq!(got, t_of(rc.t[i]), epsilon = 1e-4);
            assert_abs_diff_eq!(speed(f(i), fp), 1.0, epsilon = 1e-5);
        }
        let _ = curve.value(0.5);
    }

    #[test]
    fn invariants_survive_reconstruction() {
        let curve = ChartCurve::new(|t: f64| Complex64::from_polar(0.6 + 0.2 * (2.0 * t).cos(), t))
            .with_period(2.0 * PI);
        let rt = invariant_roundtrip(&curve, 9, 1e-3).unwrap();
        assert!(rt.two_point < 1e-6 && rt.three_point < 1e-6, "{rt:?}");
        assert!(rt.t_value < 1e-4, "{rt:?}");
    }

    #[test]
    fn singular_latitude_is_reported() {
        for theta0 in [0.0, PI / 2.0] {
            let r = reconstruct_curve(|_| 0.0, theta0, 0.3, 0.0, (0.0, 1.0), 1e-4);
            assert!(matches!(r, Err(Error::SingularLatitude { .. })));
        }
        assert!(matches!(
            reconstruct_curve(|_| 0.0, 0.5, 1.0, 0.0, (0.0, 1.0), 1e-4),
            Err(Error::SpeedSaturation { .. })
        ));
    }

    #[test]
    fn small_circle_turning() {
        let r = 0.01;
        let si = self_intersection(&latitude(r), 256).unwrap();
        assert_abs_diff_eq!(si.turning, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            si.normalized,
            1.0 - 2.0 * r * r / (1.0 + r * r),
            epsilon = 1e-9
        );
        assert!((si.normalized - 1.0).abs() < 1e-3);
        let twice = self_intersection(&latitude(r).repeated(2), 512).unwrap();
        assert_abs_diff_eq!(twice.raw, 2.0 * si.raw, epsilon = 1e-9);
    }

    #[test]
    fn turning_is_stable() {
        let w = wobbly();
        let base = self_intersection(&w, 1024).unwrap();
        let bumped = self_intersection(
            &w.deformed(1e-2, |t| c((3.0 * t).cos(), (2.0 * t).sin())),
            1024,
        )
        .unwrap();
        let rep = self_intersection(&w.reparameterized(0.1), 1024).unwrap();
        assert!((base.turning - base.turning.round()).abs() < 1e-6);
        assert!((bumped.turning - base.turning).abs() < 1e-6);
        assert!((rep.raw - base.raw).abs() < 1e-6);
    }
}
