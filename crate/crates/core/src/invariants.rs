//! Bargmann invariants, distances and the three-point phase.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg;
use crate::states::{Family, StateVector};

/// `tr[P(x1) ... P(xk)]`, computed as the cyclic product of overlaps.
pub fn npoint<F, P>(family: &F, points: &[P]) -> Result<Complex64>
where
    F: Family + ?Sized,
    P: AsRef<[f64]>,
{
    let k = points.len();
    if k == 0 {
        return Err(Error::EmptyPointList);
    }
    if k == 1 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if let Some(first) = family.state(points[0].as_ref()) {
        let mut states = Vec::with_capacity(k);
        states.push(first);
        for p in &points[1..] {
            states.push(family.state(p.as_ref()).expect("family exposes states"));
        }
        return Ok(cyclic_product(&states));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 0..k {
        acc *= family.overlap(points[i].as_ref(), points[(i + 1) % k].as_ref());
    }
    Ok(acc)
}

/// Cyclic overlap product of explicit states.
pub fn cyclic_product(states: &[StateVector]) -> Complex64 {
    let k = states.len();
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 0..k {
        acc *= linalg::inner(states[i].amplitudes(), states[(i + 1) % k].amplitudes());
    }
    acc
}

/// Evaluate a `k`-point function with one point removed and restored through
/// a triangle factor: `P_k = P_{k-1} * P3(prev, drop, next) / P2(prev, next)`.
pub fn reduce_npoint<F, P>(family: &F, points: &[P], drop_index: usize) -> Result<Complex64>
where
    F: Family + ?Sized,
    P: AsRef<[f64]>,
{
    let k = points.len();
    if k == 0 {
        return Err(Error::EmptyPointList);
    }
    if k < 3 {
        return Err(Error::UnsupportedOrder { order: k });
    }
    if drop_index >= k {
        return Err(Error::InvalidParameter(alloc::format!(
            "drop index {drop_index} out of range for {k} points"
        )));
    }
    let prev = points[(drop_index + k - 1) % k].as_ref();
    let here = points[drop_index].as_ref();
    let next = points[(drop_index + 1) % k].as_ref();
    let p2 = family.overlap(prev, next).norm_sqr();
    if p2 <= Tolerances::DEFAULT.orthogonal {
        return Err(Error::OrthogonalNeighbors { p2 });
    }
    let rest: Vec<&[f64]> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != drop_index)
        .map(|(_, p)| p.as_ref())
        .collect();
    let reduced = npoint(family, &rest)?;
    let tri = npoint(family, &[prev, here, next])?;
    Ok(reduced * tri / p2)
}

/// Transition probability, squared Hilbert-space distance and geodesic
/// distance between two points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub p2: f64,
    pub d2: f64,
    pub d: f64,
}

impl Distances {
    pub fn from_p2(p2: f64) -> Self {
        let p2 = p2.clamp(0.0, 1.0);
        Distances {
            p2,
            d2: 1.0 - p2,
            d: p2.sqrt().acos(),
        }
    }
}

pub fn distances<F: Family + ?Sized>(family: &F, x: &[f64], y: &[f64]) -> Distances {
    Distances::from_p2(family.overlap(x, y).norm_sqr())
}

/// `-arg P3(x, y, z)` in `(-pi, pi]`.
pub fn bargmann_phase<F: Family + ?Sized>(
    family: &F,
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<f64> {
    phase_of(npoint(family, &[x, y, z])?)
}

/// Three-point phase from a precomputed `P3`.
pub fn phase_of(p3: Complex64) -> Result<f64> {
    let modulus = p3.norm();
    if modulus <= Tolerances::DEFAULT.orthogonal {
        return Err(Error::DegenerateTriangle { modulus });
    }
    Ok(linalg::wrap_angle(-p3.arg()))
}

/// One `P3` value in the serialized form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleRecord {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: Complex64,
}

/// Two- and three-point invariants among `N` labelled points.
///
/// Only `i < j < k` representatives of `P3` are stored; [`InvariantSet::p3`]
/// rebuilds the full permutation orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantSet {
    labels: Vec<String>,
    two_point: Vec<f64>,
    three_point: BTreeMap<(usize, usize, usize), Complex64>,
}

impl InvariantSet {
    /// Assemble and validate. Records may use any ordering of indices.
    pub fn new(labels: Vec<String>, two_point: Vec<f64>, records: &[TripleRecord]) -> Result<Self> {
        let n = labels.len();
        if two_point.len() != n * n {
            return Err(Error::SizeMismatch {
                left: n * n,
                right: two_point.len(),
            });
        }
        let mut three_point = BTreeMap::new();
        for r in records {
            if r.i >= n || r.j >= n || r.k >= n {
                return Err(Error::InvalidParameter(alloc::format!(
                    "triple ({}, {}, {}) out of range",
                    r.i,
                    r.j,
                    r.k
                )));
            }
            if r.i == r.j || r.j == r.k || r.i == r.k {
                continue;
            }
            let (key, odd) = canonical(r.i, r.j, r.k);
            let v = if odd { r.value.conj() } else { r.value };
            if let Some(old) = three_point.insert(key, v) {
                if (old - v).norm() > 1e-12 {
                    return Err(Error::InconsistentInvariants {
                        residual: (old - v).norm(),
                    });
                }
            }
        }
        let set = InvariantSet {
            labels,
            two_point,
            three_point,
        };
        set.validate()?;
        Ok(set)
    }

    /// Sample every pair and triple of `points`.
    pub fn from_family<F, P>(family: &F, points: &[P], labels: Vec<String>) -> Result<Self>
    where
        F: Family + ?Sized,
        P: AsRef<[f64]>,
    {
        let n = points.len();
        if labels.len() != n {
            return Err(Error::SizeMismatch {
                left: labels.len(),
                right: n,
            });
        }
        if let Some(s0) = family.state(points[0].as_ref()) {
            let mut states = alloc::vec![s0];
            for p in &points[1..] {
                states.push(family.state(p.as_ref()).expect("family exposes states"));
            }
            return Self::from_states(&states, labels);
        }
        let mut amp = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            amp[i * n + i] = Complex64::new(1.0, 0.0);
            for j in (i + 1)..n {
                let o = family.overlap(points[i].as_ref(), points[j].as_ref());
                amp[i * n + j] = o;
                amp[j * n + i] = o.conj();
            }
        }
        Self::from_overlaps(&amp, labels)
    }

    pub fn from_states(states: &[StateVector], labels: Vec<String>) -> Result<Self> {
        let n = states.len();
        if labels.len() != n {
            return Err(Error::SizeMismatch {
                left: labels.len(),
                right: n,
            });
        }
        let mut amp = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                amp[i * n + j] = linalg::inner(states[i].amplitudes(), states[j].amplitudes());
            }
        }
        Self::from_overlaps(&amp, labels)
    }

    fn from_overlaps(amp: &[Complex64], labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let two_point = (0..n * n)
            .map(|ij| {
                if ij / n == ij % n {
                    1.0
                } else {
                    amp[ij].norm_sqr().min(1.0)
                }
            })
            .collect();
        let mut three_point = BTreeMap::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    three_point.insert((i, j, k), amp[i * n + j] * amp[j * n + k] * amp[k * n + i]);
                }
            }
        }
        let set = InvariantSet {
            labels,
            two_point,
            three_point,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Row-major `N x N` matrix of `P2`.
    pub fn two_point(&self) -> &[f64] {
        &self.two_point
    }

    pub fn p2(&self, i: usize, j: usize) -> f64 {
        self.two_point[i * self.len() + j]
    }

    /// `P3(i, j, k)` for any index triple. Odd permutations give the complex
    /// conjugate; repeated indices reduce to `P2`.
    pub fn p3(&self, i: usize, j: usize, k: usize) -> Complex64 {
        if i == j || j == k {
            return Complex64::new(self.p2(i, k), 0.0);
        }
        if i == k {
            return Complex64::new(self.p2(i, j), 0.0);
        }
        let (key, odd) = canonical(i, j, k);
        let v = self.three_point.get(&key).copied().unwrap_or_default();
        if odd {
            v.conj()
        } else {
            v
        }
    }

    /// The stored `i < j < k` representatives.
    pub fn records(&self) -> impl Iterator<Item = TripleRecord> + '_ {
        self.three_point
            .iter()
            .map(|(&(i, j, k), &value)| TripleRecord { i, j, k, value })
    }

    /// Check symmetry, range and the modulus identity
    /// `|P3|^2 = P2(i,j) P2(j,k) P2(k,i)`.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if (self.p2(i, i) - 1.0).abs() > 1e-12 {
                return Err(Error::InconsistentInvariants {
                    residual: (self.p2(i, i) - 1.0).abs(),
                });
            }
            for j in 0..n {
                let v = self.p2(i, j);
                let asym = (v - self.p2(j, i)).abs();
                if asym > 1e-12 {
                    return Err(Error::InconsistentInvariants { residual: asym });
                }
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::InconsistentInvariants { residual: v });
                }
            }
        }
        for (&(i, j, k), v) in &self.three_point {
            let residual = (v.norm_sqr() - self.p2(i, j) * self.p2(j, k) * self.p2(k, i)).abs();
            if residual > 1e-10 {
                return Err(Error::InconsistentInvariants { residual });
            }
        }
        Ok(())
    }
}

/// Sort a triple of distinct indices; report whether the permutation is odd.
fn canonical(i: usize, j: usize, k: usize) -> ((usize, usize, usize), bool) {
    let mut v = [i, j, k];
    let mut swaps = 0;
    for a in 0..3 {
        for b in 0..2 - a {
            if v[b] > v[b + 1] {
                v.swap(b, b + 1);
                swaps += 1;
            }
        }
    }
    ((v[0], v[1], v[2]), swaps % 2 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{KernelFamily, StateFamily};
    use alloc::string::ToString;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn stereo() -> StateFamily {
        StateFamily::new(2, 1, |x: &[f64]| vec![c(1.0, 0.0), c(-x[0], -x[1])])
    }

    /// Points in C P^n encoded directly as real parameter vectors.
    fn raw_family(n: usize) -> StateFamily {
        StateFamily::new(2 * (n + 1), n, |x: &[f64]| {
            x.chunks(2).map(|p| c(p[0], p[1])).collect()
        })
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..2 * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn npoint_examples() {
        let f = stereo();
        let x = [0.3, -0.2];
        assert_abs_diff_eq!(npoint(&f, &[x, x, x]).unwrap().re, 1.0, epsilon = 1e-14);
        assert_eq!(npoint::<_, [f64; 2]>(&f, &[]), Err(Error::EmptyPointList));
        assert_eq!(npoint(&f, &[x]).unwrap(), c(1.0, 0.0));
        let orth = raw_family(1);
        let v = npoint(&orth, &[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-15);
        let p3 = npoint(&f, &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(p3.re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(p3.im, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn bargmann_phase_examples() {
        let f = stereo();
        let (a, b, z) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert_abs_diff_eq!(
            bargmann_phase(&f, &a, &b, &z).unwrap(),
            -PI / 4.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            bargmann_phase(&f, &a, &b, &b).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            bargmann_phase(&f, &a, &z, &b).unwrap(),
            PI / 4.0,
            epsilon = 1e-14
        );
        let e = bargmann_phase(
            &raw_family(1),
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[1.0, 0.0, 1.0, 0.0],
        );
        assert!(matches!(e, Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn distance_examples() {
        let f = raw_family(1);
        let d = distances(&f, &[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!((d.p2, d.d2), (1.0, 0.0));
        assert_abs_diff_eq!(d.d, 0.0, epsilon = 1e-7);
        let d = distances(&f, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!((d.p2, d.d2), (0.0, 1.0));
        assert_abs_diff_eq!(d.d, PI / 2.0, epsilon = 1e-15);
        // Gaussian kernel with unit field and |k - p|^2 = 2.
        let lll = KernelFamily::new(2, |k: &[f64], q: &[f64]| {
            let dx = k[0] - q[0];
            let dy = k[1] - q[1];
            Complex64::from_polar(
                (-(dx * dx + dy * dy) / 4.0).exp(),
                (q[0] * k[1] - k[0] * q[1]) / 2.0,
            )
        });
        let d = distances(&lll, &[0.0, 0.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(d.d2, 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.d2, 0.632_120_558_828_557_7, epsilon = 1e-14);
    }

    #[test]
    fn reduction_matches_direct_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = raw_family(2);
        let pts = random_points(&mut rng, 2, 4);
        let direct = npoint(&f, &pts).unwrap();
        let reduced = reduce_npoint(&f, &pts, 2).unwrap();
        assert!((direct - reduced).norm() < 1e-11);
        // Dropping a repeated point changes nothing.
        let rep = vec![
            pts[0].clone(),
            pts[1].clone(),
            pts[1].clone(),
            pts[2].clone(),
        ];
        assert!(
            (reduce_npoint(&f, &rep, 2).unwrap() - npoint(&f, &pts[..3]).unwrap()).norm() < 1e-13
        );
    }

    #[test]
    fn iterated_reduction_to_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = raw_family(3);
        let pts = random_points(&mut rng, 3, 5);
        let direct = npoint(&f, &pts).unwrap();
        // Fan decomposition around the first point.
        let mut acc = c(1.0, 0.0);
        for i in 1..4 {
            let tri = npoint(&f, &[&pts[0], &pts[i], &pts[i + 1]]).unwrap();
            acc *= tri;
            if i > 1 {
                acc /= f.overlap(&pts[0], &pts[i]).norm_sqr();
            }
        }
        assert!((direct - acc).norm() < 1e-10);
    }

    #[test]
    fn reduction_rejects_orthogonal_neighbours() {
        let f = raw_family(1);
        let pts = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        assert!(matches!(
            reduce_npoint(&f, &pts, 1),
            Err(Error::OrthogonalNeighbors { .. })
        ));
    }

    #[test]
    fn invariant_set_orbit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = raw_family(2);
        let pts = random_points(&mut rng, 2, 5);
        let labels = (0..5).map(|i| i.to_string()).collect();
        let set = InvariantSet::from_family(&f, &pts, labels).unwrap();
        for (i, j, k) in [(0, 1, 2), (3, 1, 4), (4, 2, 0)] {
            let direct = npoint(&f, &[&pts[i], &pts[j], &pts[k]]).unwrap();
            assert!((set.p3(i, j, k) - direct).norm() < 1e-13);
            assert!((set.p3(j, k, i) - direct).norm() < 1e-13);
            assert!((set.p3(i, k, j) - direct.conj()).norm() < 1e-13);
        }
        assert_abs_diff_eq!(set.p3(1, 1, 3).re, set.p2(1, 3), epsilon = 1e-15);
        let recs: Vec<_> = set.records().collect();
        assert_eq!(recs.len(), 10);
        let rebuilt =
            InvariantSet::new(set.labels().to_vec(), set.two_point().to_vec(), &recs).unwrap();
        assert_eq!(rebuilt, set);
    }

    #[test]
    fn invariant_set_rejects_inconsistent_modulus() {
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let tp = vec![1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0];
        let bad = [TripleRecord {
            i: 0,
            j: 1,
            k: 2,
            value: c(0.5, 0.0),
        }];
        assert!(matches!(
            InvariantSet::new(labels.clone(), tp.clone(), &bad),
            Err(Error::InconsistentInvariants { .. })
        ));
        let good = [TripleRecord {
            i: 2,
            j: 1,
            k: 0,
            value: Complex64::from_polar(0.125f64.sqrt(), 0.3),
        }];
        let set = InvariantSet::new(labels, tp, &good).unwrap();
        assert_abs_diff_eq!(set.p3(0, 1, 2).arg(), -0.3, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn modulus_identity(seed in 0u64..1000, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = raw_family(n);
            let p = random_points(&mut rng, n, 3);
            let p3 = npoint(&f, &p).unwrap();
            let prod = f.overlap(&p[0], &p[1]).norm_sqr() * f.overlap(&p[1], &p[2]).norm_sqr()
                * f.overlap(&p[2], &p[0]).norm_sqr();
            prop_assert!((p3.norm() - prod.sqrt()).abs() < 1e-11);
        }

        #[test]
        fn cyclic_invariance(seed in 0u64..1000, k in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = raw_family(3);
            let mut p = random_points(&mut rng, 3, k);
            let a = npoint(&f, &p).unwrap();
            p.rotate_left(1);
            prop_assert!((npoint(&f, &p).unwrap() - a).norm() < 1e-13);
        }

        #[test]
        fn gauge_invariance(seed in 0u64..500, w in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = stereo();
            let g = f.regauged(move |x: &[f64]| w * x[0] * x[0] + (x[1] * 3.0).sin());
            let p: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
            prop_assert!((npoint(&f, &p).unwrap() - npoint(&g, &p).unwrap()).norm() < 1e-12);
            let a = bargmann_phase(&f, &p[0], &p[1], &p[2]).unwrap();
            let b = bargmann_phase(&g, &p[0], &p[1], &p[2]).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn phase_is_antisymmetric(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = raw_family(2);
            let p = random_points(&mut rng, 2, 3);
            let a = bargmann_phase(&f, &p[0], &p[1], &p[2]).unwrap();
            let b = bargmann_phase(&f, &p[1], &p[0], &p[2]).unwrap();
            prop_assert!(linalg::wrap_angle(a + b).abs() < 1e-12);
        }
    }
}
