//! Tori in the third projective space through the Segre-Veronese map
//! `(s, t) -> (1, s, t, st)`, and the flat-band lattice model built on it.

use alloc::vec;

use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::extrinsic::curves::{self, ChartCurve};
use crate::linalg::CMat;
use crate::states::StateFamily;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `f(k) = tan(s k) e^{i n k}` with homogeneous coordinates
/// `(cos(s k), sin(s k) e^{i n k})` and period `2 pi`.
pub fn tan_winding(n: i64, s: f64) -> ChartCurve {
    let nf = n as f64;
    ChartCurve::new(move |k| Complex64::from_polar((s * k).tan(), nf * k))
        .with_jet(move |k| {
            let u = (s * k).tan();
            let sec2 = 1.0 + u * u;
            let (u1, u2) = (s * sec2, 2.0 * s * s * sec2 * u);
            let e = Complex64::from_polar(1.0, nf * k);
            [
                e * u,
                e * c(u1, nf * u),
                e * c(u2 - nf * nf * u, 2.0 * nf * u1),
            ]
        })
        .with_pair(move |k| {
            [
                c((s * k).cos(), 0.0),
                Complex64::from_polar((s * k).sin(), nf * k),
            ]
        })
        .with_period(2.0 * PI)
}

/// Product state `(a_f a_g, b_f a_g, a_f b_g, b_f b_g)` over `(x, y)`.
pub fn torus_cp3(f: &ChartCurve, g: &ChartCurve) -> StateFamily {
    let (f, g) = (f.clone(), g.clone());
    let periods = match (f.period(), g.period()) {
        (Some(a), Some(b)) => Some(vec![a, b]),
        _ => None,
    };
    let fam = StateFamily::new(2, 3, move |p: &[f64]| {
        let [af, bf] = f.homogeneous(p[0]);
        let [ag, bg] = g.homogeneous(p[1]);
        vec![af * ag, bf * ag, af * bg, bf * bg]
    });
    match periods {
        Some(p) => fam.with_periods(p),
        None => fam,
    }
}

/// The lattice model with windings `(n, m)`, with analytic gradient.
pub fn veronese(n: i64, m: i64) -> StateFamily {
    let pair = |w: f64, k: f64| [c(k.cos(), 0.0), Complex64::from_polar(k.sin(), w * k)];
    let dpair = |w: f64, k: f64| {
        [
            c(-k.sin(), 0.0),
            Complex64::from_polar(1.0, w * k) * c(k.cos(), w * k.sin()),
        ]
    };
    let (nf, mf) = (n as f64, m as f64);
    StateFamily::new(2, 3, move |p: &[f64]| {
        let [af, bf] = pair(nf, p[0]);
        let [ag, bg] = pair(mf, p[1]);
        vec![af * ag, bf * ag, af * bg, bf * bg]
    })
    .with_gradient(move |p: &[f64]| {
        let [af, bf] = pair(nf, p[0]);
        let [ag, bg] = pair(mf, p[1]);
        let [daf, dbf] = dpair(nf, p[0]);
        let [dag, dbg] = dpair(mf, p[1]);
        vec![
            vec![daf * ag, dbf * ag, daf * bg, dbf * bg],
            vec![af * dag, bf * dag, af * dbg, bf * dbg],
        ]
    })
    .with_periods(vec![2.0 * PI, 2.0 * PI])
}

/// The 4x4 matrix `psi psi^dagger`, entry by entry.
pub fn projector_table(n: i64, m: i64, k: [f64; 2]) -> CMat {
    let (cx, sx, cy, sy) = (k[0].cos(), k[0].sin(), k[1].cos(), k[1].sin());
    let (a, b) = (n as f64 * k[0], m as f64 * k[1]);
    let e = |ph: f64, r: f64| Complex64::from_polar(r, ph);
    CMat::from_row_slice(
        4,
        4,
        &[
            e(0.0, cx * cx * cy * cy),
            e(-a, cx * cy * cy * sx),
            e(-b, cx * cx * cy * sy),
            e(-a - b, cx * cy * sx * sy),
            e(a, cx * cy * cy * sx),
            e(0.0, cy * cy * sx * sx),
            e(a - b, cx * cy * sx * sy),
            e(-b, cy * sx * sx * sy),
            e(b, cx * cx * cy * sy),
            e(b - a, cx * cy * sx * sy),
            e(0.0, cx * cx * sy * sy),
            e(-a, cx * sx * sy * sy),
            e(a + b, cx * cy * sx * sy),
            e(b, cy * sx * sx * sy),
            e(a, cx * sx * sy * sy),
            e(0.0, sx * sx * sy * sy),
        ],
    )
}

/// Flat-band Hamiltonian `1 - psi psi^dagger`.
pub fn hamiltonian(n: i64, m: i64, k: [f64; 2]) -> CMat {
    CMat::identity(4, 4) - projector_table(n, m, k)
}

/// Metric component along one axis: `1 + (w^2/4) sin^2(2k)`.
pub fn metric(w: i64, k: f64) -> f64 {
    let w = w as f64;
    1.0 + 0.25 * w * w * (2.0 * k).sin().powi(2)
}

/// `T` along one axis: `-2 w cos(2k) (2 + (w^2/4) sin^2(2k))`.
pub fn t_component(w: i64, k: f64) -> f64 {
    let wf = w as f64;
    -2.0 * wf * (2.0 * k).cos() * (2.0 + 0.25 * wf * wf * (2.0 * k).sin().powi(2))
}

/// `G_{x,xx} = (w^2/4) sin(4k)`.
pub fn christoffel(w: i64, k: f64) -> f64 {
    let wf = w as f64;
    0.25 * wf * wf * (4.0 * k).sin()
}

/// Alternative closed forms for the metric and `T` along one axis:
/// `1/(1 + w^2 sin^2 k)` and `(w cos k / 2)(2 + w^2 sin^2 k)`.
pub fn reference_metric(w: i64, k: f64) -> f64 {
    let wf = w as f64;
    1.0 / (1.0 + wf * wf * k.sin().powi(2))
}

pub fn reference_t_component(w: i64, k: f64) -> f64 {
    let wf = w as f64;
    0.5 * wf * k.cos() * (2.0 + wf * wf * k.sin().powi(2))
}

/// Zak phase `-oint Im(conj(f) f') / (1 + |f|^2) dx` by the midpoint rule.
pub fn zak_phase(curve: &ChartCurve, samples: usize) -> f64 {
    let period = curve.period().expect("closed curve");
    let h = period / samples as f64;
    (0..samples)
        .map(|i| {
            let [f, fp, _] = curve.jet((i as f64 + 0.5) * h);
            -(f.conj() * fp).im / (1.0 + f.norm_sqr()) * h
        })
        .sum()
}

/// `T_xxx` of the product family in the given parameterization.
pub fn t_from_map(curve: &ChartCurve, x: f64) -> f64 {
    curves::curve_t_unnormalized(curve, x).unwrap_or(f64::NAN)
}

/// Reparameterize a closed curve by arc length. The result has period equal
/// to the curve length and unit speed.
pub fn unit_speed(curve: &ChartCurve, intervals: usize) -> ChartCurve {
    curves::ArcLength::new(curve, intervals).unit_speed()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::local_geom;
    use crate::states::Family;
    use approx::assert_abs_diff_eq;

    #[test]
    fn table_is_the_projector() {
        let f = veronese(2, 3);
        for k in [[0.3, -1.2], [2.0, 0.7], [-2.9, 3.1]] {
            let p = f.projector_at(&k);
            assert!(linalg::fro(&(p - projector_table(2, 3, k))) < 1e-14);
        }
    }

    #[test]
    fn flat_spectrum() {
        let (vals, _) = linalg::hermitian_eigen(&hamiltonian(2, 3, [0.4, 1.9]));
        for (v, want) in vals.iter().zip([0.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*v, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn periodic_up_to_phase() {
        let f = veronese(1, 2);
        assert!(f.periodicity_residual(&[0.3, 0.9]).unwrap() < 1e-10);
    }

    #[test]
    fn closed_forms_match_projector_route() {
        let f = veronese(2, 3);
        for k in [[0.0, 0.0], [0.3, -0.8], [1.1, 2.2]] {
            let (q, ct) = local_geom::local_geometry(&f, &k, 1e-3).unwrap();
            assert_abs_diff_eq!(q.g[(0, 0)], metric(2, k[0]), epsilon = 1e-9);
            assert_abs_diff_eq!(q.g[(1, 1)], metric(3, k[1]), epsilon = 1e-9);
            assert!(q.omega.abs().max() < 1e-10);
            assert_abs_diff_eq!(ct.t.get(0, 0, 0), t_component(2, k[0]), epsilon = 1e-6);
            assert_abs_diff_eq!(ct.t.get(1, 1, 1), t_component(3, k[1]), epsilon = 1e-6);
            assert_abs_diff_eq!(ct.gamma.get(0, 0, 0), christoffel(2, k[0]), epsilon = 1e-6);
            assert!(ct.t.get(0, 0, 1).abs() < 1e-6 && ct.t.get(0, 1, 1).abs() < 1e-6);
        }
        assert_abs_diff_eq!(t_component(2, 0.0), -8.0, epsilon = 1e-15);
    }

    #[test]
    fn generic_map_matches_lattice_model() {
        let fam = torus_cp3(&tan_winding(2, 1.0), &tan_winding(3, 1.0));
        let lat = veronese(2, 3);
        for k in [[0.2, 0.4], [1.5, -2.0]] {
            assert_abs_diff_eq!(
                fam.overlap(&k, &[0.1, 0.1]).norm(),
                lat.overlap(&k, &[0.1, 0.1]).norm(),
                epsilon = 1e-14
            );
        }
        let curve = tan_winding(2, 1.0);
        for x in [0.2, 0.9, 2.5] {
            assert_abs_diff_eq!(t_from_map(&curve, x), t_component(2, x), epsilon = 1e-10);
        }
    }

    #[test]
    fn unit_speed_flattens_the_metric() {
        let curve = unit_speed(&tan_winding(1, 0.5), 256);
        let fam = torus_cp3(&curve, &curve);
        let len = curve.period().unwrap();
        for p in [[0.3, 1.0], [len * 0.7, 0.2]] {
            let q = local_geom::qgt(&fam, &p, 1e-3);
            assert_abs_diff_eq!(q.g[(0, 0)], 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(q.g[(1, 1)], 1.0, epsilon = 1e-6);
            assert!(q.omega.abs().max() < 1e-6);
        }
    }
}
