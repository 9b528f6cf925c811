//! Intrinsic distances on a sampled parameter region and their deviation
//! from the ambient distance.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use num_traits::Float;

use crate::deriv;
use crate::error::{Error, Result};
use crate::invariants;
use crate::linalg;
use crate::local_geom::{self, Qgt};
use crate::states::StateFamily;

/// Axis-aligned box in a two-dimensional parameter space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Region {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Region { lo, hi }
    }

    fn contains(&self, p: &[f64]) -> bool {
        (0..2).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }
}

/// Result of [`intrinsic_distance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntrinsicDistance {
    /// Shortest path on the 8-neighbour grid graph.
    pub graph: f64,
    /// Length of the shot geodesic, when it converged and is not longer than
    /// the graph path.
    pub refined: Option<f64>,
}

impl IntrinsicDistance {
    pub fn value(&self) -> f64 {
        self.refined.unwrap_or(self.graph)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn metric_length(g: &DMatrix<f64>, dx: [f64; 2]) -> f64 {
    local_geom::quadratic(g, &dx).max(0.0).sqrt()
}

/// Length of the shortest path from `x` to `y` inside `region`.
///
/// The region is covered by `resolution^2` nodes joined to their eight
/// neighbours; edge weights use the metric at the edge midpoint. The graph
/// path then seeds a shooting solution of the geodesic equation, which
/// replaces the graph value when it is shorter.
pub fn intrinsic_distance(
    family: &StateFamily,
    x: &[f64],
    y: &[f64],
    region: &Region,
    resolution: usize,
) -> Result<IntrinsicDistance> {
    if x.len() != 2 || y.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.len().max(y.len()),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter(
            "grid resolution must be at least 2".into(),
        ));
    }
    if !region.contains(x) || !region.contains(y) {
        return Err(Error::InvalidParameter(
            "endpoints lie outside the sampled region".into(),
        ));
    }
    if x == y {
        return Ok(IntrinsicDistance {
            graph: 0.0,
            refined: Some(0.0),
        });
    }
    let n = resolution;
    let step = [
        (region.hi[0] - region.lo[0]) / (n - 1) as f64,
        (region.hi[1] - region.lo[1]) / (n - 1) as f64,
    ];
    let half = 2 * n - 1;
    let metric: Vec<DMatrix<f64>> = (0..half * half)
        .map(|k| {
            let (i, j) = (k / half, k % half);
            let p = [
                region.lo[0] + i as f64 * step[0] / 2.0,
                region.lo[1] + j as f64 * step[1] / 2.0,
            ];
            local_geom::qgt(family, &p, deriv::DEFAULT_STEP).g
        })
        .collect();
    let node = |i: usize, j: usize| i * n + j;
    let pos = |k: usize| {
        [
            region.lo[0] + (k / n) as f64 * step[0],
            region.lo[1] + (k % n) as f64 * step[1],
        ]
    };
    // Grid nodes, then x and y as two extra nodes tied to their cell corners.
    let (sx, sy) = (n * n, n * n + 1);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * n + 2];
    for i in 0..n {
        for j in 0..n {
            let a = node(i, j);
            for (di, dj) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                    continue;
                }
                let b = node(ii as usize, jj as usize);
                let mid = (2 * i as i64 + di) as usize * half + (2 * j as i64 + dj) as usize;
                let w = metric_length(&metric[mid], [di as f64 * step[0], dj as f64 * step[1]]);
                adj[a].push((b, w));
                adj[b].push((a, w));
            }
        }
    }
    for (extra, p) in [(sx, x), (sy, y)] {
        let ci = (((p[0] - region.lo[0]) / step[0]).floor() as usize).min(n - 2);
        let cj = (((p[1] - region.lo[1]) / step[1]).floor() as usize).min(n - 2);
        for (i, j) in [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)] {
            let q = pos(node(i, j));
            let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            let g = local_geom::qgt(family, &mid, deriv::DEFAULT_STEP).g;
            let w = metric_length(&g, [q[0] - p[0], q[1] - p[1]]);
            adj[extra].push((node(i, j), w));
            adj[node(i, j)].push((extra, w));
        }
    }
    let mut dist = vec![f64::INFINITY; n * n + 2];
    let mut prev = vec![usize::MAX; n * n + 2];
    let mut heap = BinaryHeap::new();
    dist[sx] = 0.0;
    heap.push(Entry(0.0, sx));
    while let Some(Entry(d, a)) = heap.pop() {
        if a == sy {
            break;
        }
        if d > dist[a] {
            continue;
        }
        for &(b, w) in &adj[a] {
            let nd = d + w;
            if nd < dist[b] {
                dist[b] = nd;
                prev[b] = a;
                heap.push(Entry(nd, b));
            }
        }
    }
    let graph = dist[sy];
    if !graph.is_finite() {
        return Err(Error::DisconnectedRegion);
    }
    // Walk back to the node about a tenth of the way along the path.
    let mut path = vec![sy];
    while *path.last().unwrap() != sx {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    // Seed the shooting from several points along the path, then from the
    // chord, and keep the shortest converged geodesic.
    let mut guesses = Vec::new();
    for frac in [0.1, 0.3, 0.6] {
        let k = path
            .iter()
            .position(|&v| dist[v] >= frac * graph)
            .unwrap_or(path.len() - 1);
        let pk = if path[k] == sy {
            [y[0], y[1]]
        } else {
            pos(path[k])
        };
        let scale = graph / dist[path[k]].max(1e-300);
        guesses.push([(pk[0] - x[0]) * scale, (pk[1] - x[1]) * scale]);
    }
    guesses.push([y[0] - x[0], y[1] - x[1]]);
    let refined = guesses
        .into_iter()
        .filter_map(|g| shoot_geodesic(family, x, y, g, 400))
        .filter(|&l| l <= graph + 1e-12)
        .min_by(f64::total_cmp);
    Ok(IntrinsicDistance { graph, refined })
}

fn acceleration(family: &StateFamily, p: &[f64; 2], v: &[f64; 2]) -> Option<[f64; 2]> {
    let (q, ct) = local_geom::local_geometry(family, p, deriv::DEFAULT_STEP).ok()?;
    let up = ct.raised_gamma(&q)?;
    let mut a = [0.0; 2];
    for (i, ai) in a.iter_mut().enumerate() {
        *ai = -up.contract(&basis(i), v, v);
    }
    Some(a)
}

fn basis(i: usize) -> [f64; 2] {
    let mut e = [0.0; 2];
    e[i] = 1.0;
    e
}

/// Integrate the geodesic equation from `x` with velocity `v` over unit time;
/// returns the endpoint and the mean metric speed.
fn integrate_geodesic(
    family: &StateFamily,
    x: &[f64],
    v: [f64; 2],
    steps: usize,
) -> Option<([f64; 2], f64)> {
    let h = 1.0 / steps as f64;
    let mut p = [x[0], x[1]];
    let mut w = v;
    let speed = |p: &[f64; 2], w: &[f64; 2]| {
        metric_length(&local_geom::qgt(family, p, deriv::DEFAULT_STEP).g, *w)
    };
    let mut total = 0.5 * speed(&p, &w);
    for s in 0..steps {
        let add = |a: [f64; 2], k: [f64; 2], c: f64| [a[0] + c * k[0], a[1] + c * k[1]];
        let a1 = acceleration(family, &p, &w)?;
        let (p2, w2) = (add(p, w, h / 2.0), add(w, a1, h / 2.0));
        let a2 = acceleration(family, &p2, &w2)?;
        let (p3, w3) = (add(p, w2, h / 2.0), add(w, a2, h / 2.0));
        let a3 = acceleration(family, &p3, &w3)?;
        let (p4, w4) = (add(p, w3, h), add(w, a3, h));
        let a4 = acceleration(family, &p4, &w4)?;
        for i in 0..2 {
            p[i] += h / 6.0 * (w[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i]);
            w[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        let sp = speed(&p, &w);
        total += if s + 1 == steps { 0.5 * sp } else { sp };
    }
    Some((p, total * h))
}

/// Newton shooting for the geodesic from `x` to `y`; returns its length.
pub fn shoot_geodesic(
    family: &StateFamily,
    x: &[f64],
    y: &[f64],
    guess: [f64; 2],
    steps: usize,
) -> Option<f64> {
    let mut v = Vector2::new(guess[0], guess[1]);
    let target = Vector2::new(y[0], y[1]);
    for _ in 0..30 {
        let (end, len) = integrate_geodesic(family, x, [v[0], v[1]], steps)?;
        let r = Vector2::new(end[0], end[1]) - target;
        if r.norm() < 1e-11 {
            return Some(len);
        }
        let dv = 1e-6 * (1.0 + v.norm());
        let mut jac = Matrix2::zeros();
        for j in 0..2 {
            let mut vp = v;
            vp[j] += dv;
            let (e, _) = integrate_geodesic(family, x, [vp[0], vp[1]], steps)?;
            jac[(0, j)] = (e[0] - end[0]) / dv;
            jac[(1, j)] = (e[1] - end[1]) / dv;
        }
        let delta = jac.lu().solve(&r)?;
        // Halve the Newton step until the miss distance shrinks.
        let mut damp = 1.0;
        loop {
            let trial = v - delta * damp;
            let better = integrate_geodesic(family, x, [trial[0], trial[1]], steps)
                .map(|(e, _)| (Vector2::new(e[0], e[1]) - target).norm() < r.norm())
                .unwrap_or(false);
            if better || damp < 1e-3 {
                v = trial;
                break;
            }
            damp *= 0.5;
        }
        if !v.iter().all(|c| c.is_finite()) {
            return None;
        }
    }
    None
}

/// Quartic gap between intrinsic and ambient squared distances along a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaL2 {
    /// `(d_N^2 - d_L^2) / eps^4` for each `eps`.
    pub ratios: Vec<f64>,
    /// `|K(z, z)|^2 / 12` with `K` the second fundamental form at `x`.
    pub predicted: f64,
}

impl DeltaL2 {
    /// Deviation of the smallest-`eps` ratio from the prediction.
    pub fn residual(&self) -> f64 {
        (self.ratios.last().copied().unwrap_or(f64::NAN) - self.predicted).abs()
    }
}

fn normalized_raw(family: &StateFamily, p: &[f64]) -> Vec<Complex64> {
    let raw = family.raw(p);
    let n = linalg::norm(&raw);
    raw.into_iter().map(|a| a / n).collect()
}

fn state_derivative(family: &StateFamily, x: &[f64], dir: &[f64], second: bool) -> Vec<Complex64> {
    let dim = family.proj_dim() + 1;
    (0..dim)
        .map(|c| {
            let f = |s: f64| {
                let p: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + s * d).collect();
                normalized_raw(family, &p)[c]
            };
            if second {
                deriv::second_derivative_complex(f, 0.0, 1e-3)
            } else {
                deriv::derivative_complex(f, 0.0, 1e-3)
            }
        })
        .collect()
}

fn project_out(psi: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let c = linalg::inner(psi, v);
    v.iter().zip(psi).map(|(a, p)| a - p * c).collect()
}

/// `|K(z, z)|^2` for the second fundamental form of the immersion at `x`.
pub fn second_fundamental_form_sq(family: &StateFamily, x: &[f64], z: &[f64]) -> f64 {
    let d = x.len();
    let psi = normalized_raw(family, x);
    let dz = state_derivative(family, x, z, false);
    let dzz = state_derivative(family, x, z, true);
    let a = linalg::inner(&psi, &dz);
    let hz = project_out(&psi, &dz);
    let nabla: Vec<Complex64> = project_out(&psi, &dzz)
        .iter()
        .zip(&hz)
        .map(|(u, v)| u - v * a * 2.0)
        .collect();
    let h: Vec<Vec<Complex64>> = (0..d)
        .map(|al| {
            let mut e = vec![0.0; d];
            e[al] = 1.0;
            project_out(&psi, &state_derivative(family, x, &e, false))
        })
        .collect();
    let g = DMatrix::from_fn(d, d, |i, j| linalg::inner(&h[i], &h[j]).re);
    let rhs: Vec<f64> = h.iter().map(|hb| linalg::inner(hb, &nabla).re).collect();
    let coef = linalg::solve_real(&g, &rhs).unwrap_or_else(|| vec![0.0; d]);
    let mut k = nabla;
    for (al, c) in coef.iter().enumerate() {
        for (ki, hi) in k.iter_mut().zip(&h[al]) {
            *ki -= hi * *c;
        }
    }
    linalg::norm(&k).powi(2)
}

/// Compare `(d_N^2 - d_L^2)/eps^4` with `|K(z, z)|^2 / 12` along `x + eps z`.
pub fn delta_l2_check(family: &StateFamily, x: &[f64], z: &[f64], eps: &[f64]) -> Result<DeltaL2> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.len(),
        });
    }
    let mut ratios = Vec::with_capacity(eps.len());
    for &e in eps {
        let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + e * b).collect();
        let dn = shoot_geodesic(family, x, &y, [e * z[0], e * z[1]], 200)
            .ok_or_else(|| Error::InvalidParameter("geodesic shooting did not converge".into()))?;
        let dl = invariants::distances(family, x, &y).d;
        ratios.push((dn * dn - dl * dl) / e.powi(4));
    }
    Ok(DeltaL2 {
        ratios,
        predicted: second_fundamental_form_sq(family, x, z) / 12.0,
    })
}

/// Quantum metric at `x`; convenience for callers comparing with closed forms.
pub fn metric_at(family: &StateFamily, x: &[f64]) -> Qgt {
    local_geom::qgt(family, x, deriv::DEFAULT_STEP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spin_one;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spin_one_distances() {
        let f = spin_one::family();
        let (x, y) = ([1.0, 0.0], [1.6, 1.1]);
        let r = intrinsic_distance(&f, &x, &y, &Region::new([0.3, -1.0], [2.8, 2.0]), 60).unwrap();
        let exact = spin_one::intrinsic_distance(x, y);
        assert!(r.graph >= exact - 1e-9 && r.graph < exact * 1.05);
        assert_abs_diff_eq!(r.value(), exact, epsilon = 1e-6);
        let ext = invariants::distances(&f, &x, &y).d;
        assert_abs_diff_eq!(
            spin_one::extrinsic_from_intrinsic(r.value()),
            ext,
            epsilon = 1e-6
        );
    }

    #[test]
    fn bad_inputs() {
        let f = spin_one::family();
        let region = Region::new([0.3, -1.0], [2.8, 2.0]);
        assert_eq!(
            intrinsic_distance(&f, &[1.0, 0.0], &[1.0, 0.0], &region, 10)
                .unwrap()
                .value(),
            0.0
        );
        assert!(intrinsic_distance(&f, &[1.0, 0.0], &[3.0, 0.0], &region, 10).is_err());
        assert!(intrinsic_distance(&f, &[1.0, 0.0], &[2.0, 0.0], &region, 1).is_err());
    }

    #[test]
    fn quartic_gap_along_a_meridian() {
        let f = spin_one::family();
        let r = delta_l2_check(&f, &[1.0, 0.3], &[1.0, 0.0], &[0.08, 0.04, 0.02]).unwrap();
        assert_abs_diff_eq!(r.predicted, 1.0 / 48.0, epsilon = 1e-6);
        assert!(r.residual() < 1e-3, "{r:?}");
    }
}
