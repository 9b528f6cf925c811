//! Brillouin-zone observables of a single band: Wilson-line polarization,
//! the generating function of position cumulants, and the flat-band
//! conductivity at finite wavevector.
//!
//! Integrals over the zone use the periodic trapezoid rule, so every result
//! is a plain mean over grid nodes. States at shifted momenta `k + q` are
//! always re-evaluated from the family.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Float;

use crate::config::Tolerances;
use crate::deriv::{self, ProjectorJet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::local_geom;
use crate::states::{Family, StateFamily, StateVector};

/// Band states on a regular grid over the torus, nodes in row-major order
/// with the last axis fastest. The closing nodes at `k = period` are implied.
#[derive(Clone, Debug, PartialEq)]
pub struct BzGrid {
    sizes: Vec<usize>,
    periods: Vec<f64>,
    states: Vec<StateVector>,
    band_index: usize,
}

fn node_count(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

fn unflatten(sizes: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for a in (0..sizes.len()).rev() {
        idx[a] = flat % sizes[a];
        flat /= sizes[a];
    }
    idx
}

fn flatten(sizes: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(sizes).fold(0, |acc, (&i, &n)| acc * n + i)
}

impl BzGrid {
    /// Sample `family` on `sizes` nodes per axis over its declared periods.
    pub fn sample(family: &StateFamily, sizes: &[usize]) -> Result<Self> {
        let periods = family.periods().ok_or(Error::NonPeriodicGrid)?.to_vec();
        if periods.len() != sizes.len() {
            return Err(Error::DimensionMismatch {
                expected: periods.len(),
                found: sizes.len(),
            });
        }
        if sizes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter(
                "every grid axis needs at least 2 nodes".into(),
            ));
        }
        let mut grid = BzGrid {
            sizes: sizes.to_vec(),
            periods,
            states: Vec::new(),
            band_index: 0,
        };
        grid.states = (0..node_count(sizes))
            .map(|i| family.state_at(&grid.k_point(i)))
            .collect();
        Ok(grid)
    }

    /// Build from states on the closed grid with `sizes[a] + 1` nodes per
    /// axis. Normalization and periodicity are checked, then the closing
    /// nodes are dropped.
    pub fn from_closed(
        sizes: &[usize],
        periods: &[f64],
        band_index: usize,
        closed: Vec<StateVector>,
    ) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        let closed_sizes: Vec<usize> = sizes.iter().map(|n| n + 1).collect();
        if sizes.is_empty() || sizes.iter().any(|&n| n < 2) || periods.len() != sizes.len() {
            return Err(Error::InvalidParameter(
                "grid needs matching sizes >= 2 and periods".into(),
            ));
        }
        if closed.len() != node_count(&closed_sizes) {
            return Err(Error::SizeMismatch {
                left: node_count(&closed_sizes),
                right: closed.len(),
            });
        }
        for (index, s) in closed.iter().enumerate() {
            let norm = linalg::norm(s.amplitudes());
            if (norm - 1.0).abs() > tol.norm * 1e2 {
                return Err(Error::NormalizationViolation { index, norm });
            }
        }
        for (flat, s) in closed.iter().enumerate() {
            let idx = unflatten(&closed_sizes, flat);
            for axis in 0..sizes.len() {
                if idx[axis] == sizes[axis] {
                    let mut start = idx.clone();
                    start[axis] = 0;
                    let o = crate::states::overlap(s, &closed[flatten(&closed_sizes, &start)])?;
                    let mismatch = 1.0 - o.norm_sqr();
                    if mismatch > tol.periodicity {
                        return Err(Error::PeriodicityViolation { axis, mismatch });
                    }
                }
            }
        }
        let states = closed
            .into_iter()
            .enumerate()
            .filter(|(flat, _)| {
                unflatten(&closed_sizes, *flat)
                    .iter()
                    .zip(sizes)
                    .all(|(i, n)| i < n)
            })
            .map(|(_, s)| s)
            .collect();
        Ok(BzGrid {
            sizes: sizes.to_vec(),
            periods: periods.to_vec(),
            states,
            band_index,
        })
    }

    /// States on the closed grid, the inverse of [`BzGrid::from_closed`].
    pub fn closed_states(&self) -> Vec<StateVector> {
        let closed_sizes: Vec<usize> = self.sizes.iter().map(|n| n + 1).collect();
        (0..node_count(&closed_sizes))
            .map(|flat| {
                let idx: Vec<usize> = unflatten(&closed_sizes, flat)
                    .iter()
                    .zip(&self.sizes)
                    .map(|(i, n)| i % n)
                    .collect();
                self.states[flatten(&self.sizes, &idx)].clone()
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn band_index(&self) -> usize {
        self.band_index
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, flat: usize) -> &StateVector {
        &self.states[flat]
    }

    pub fn k_point(&self, flat: usize) -> Vec<f64> {
        unflatten(&self.sizes, flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| i as f64 * self.periods[a] / self.sizes[a] as f64)
            .collect()
    }

    fn neighbour(&self, flat: usize, axis: usize) -> usize {
        let mut idx = unflatten(&self.sizes, flat);
        idx[axis] = (idx[axis] + 1) % self.sizes[axis];
        flatten(&self.sizes, &idx)
    }

    fn mean_matrix<F: Fn(usize) -> DMatrix<f64>>(&self, f: F) -> DMatrix<f64> {
        let n = self.len() as f64;
        let mut acc = f(0);
        for i in 1..self.len() {
            acc += f(i);
        }
        acc / n
    }
}

/// Average polarization per axis in units of the polarization quantum,
/// reported in `(-1/2, 1/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polarization {
    pub values: Vec<f64>,
    pub quantum: f64,
}

/// Berry phase `-sum arg <u_i|u_{i+1}>` of every grid line along `axis`,
/// lines ordered by their transverse index.
pub fn wilson_line_phases(grid: &BzGrid, axis: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for flat in 0..grid.len() {
        if unflatten(&grid.sizes, flat)[axis] != 0 {
            continue;
        }
        let mut prod = Complex64::new(1.0, 0.0);
        let mut cur = flat;
        for _ in 0..grid.sizes[axis] {
            let next = grid.neighbour(cur, axis);
            let o = crate::states::overlap(grid.state(cur), grid.state(next))?;
            if o.norm() <= Tolerances::DEFAULT.overlap_collapse {
                return Err(Error::OverlapCollapse { modulus: o.norm() });
            }
            prod *= o / o.norm();
            cur = next;
        }
        out.push(-prod.arg());
    }
    Ok(out)
}

fn unwrap_near(value: f64, reference: f64) -> f64 {
    value + 2.0 * PI * ((reference - value) / (2.0 * PI)).round()
}

fn wrap_half(x: f64) -> f64 {
    let r = x - x.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

pub fn average_polarization(grid: &BzGrid) -> Result<Polarization> {
    let mut values = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let phases = wilson_line_phases(grid, axis)?;
        let mut prev = phases[0];
        let mut sum = 0.0;
        for &p in &phases {
            prev = unwrap_near(p, prev);
            sum += prev;
        }
        values.push(wrap_half(sum / phases.len() as f64 / (2.0 * PI)));
    }
    Ok(Polarization {
        values,
        quantum: 1.0,
    })
}

/// `log C(q) / V`, the zone mean of `log <u_k|u_{k+q}>`, with the branch of
/// the logarithm continued from node to node.
pub fn log_generating_function<F: Family + ?Sized>(
    grid: &BzGrid,
    family: &F,
    q: &[f64],
) -> Result<Complex64> {
    let last = grid.dim() - 1;
    let mut line_start = 0.0;
    let mut prev = 0.0;
    // Compensated sums: higher cumulants difference these means at O(h^3).
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    for flat in 0..grid.len() {
        let k = grid.k_point(flat);
        let kq: Vec<f64> = k.iter().zip(q).map(|(a, b)| a + b).collect();
        let o = family.overlap(&k, &kq);
        if o.norm() <= Tolerances::DEFAULT.overlap_collapse {
            return Err(Error::OverlapCollapse { modulus: o.norm() });
        }
        let reference = if unflatten(&grid.sizes, flat)[last] == 0 {
            line_start
        } else {
            prev
        };
        let phase = unwrap_near(o.arg(), reference);
        if unflatten(&grid.sizes, flat)[last] == 0 {
            line_start = phase;
        }
        prev = phase;
        re.add(o.norm().ln());
        im.add(phase);
    }
    Ok(Complex64::new(re.value(), im.value()) / grid.len() as f64)
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Position cumulant per unit volume from both routes. Tensors are
/// row-major with `dim^order` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantReport {
    pub order: usize,
    pub dim: usize,
    /// `i^n d^n log C / dq^n` at `q = 0` by symmetric differences.
    pub generating: Vec<f64>,
    /// Zone integral of the local tensor: the Wilson-line polarization,
    /// `g`, or `T / 2` for orders 1, 2, 3.
    pub integral: Vec<f64>,
}

impl CumulantReport {
    pub fn get(&self, index: &[usize]) -> (f64, f64) {
        let flat = index.iter().fold(0, |acc, &i| acc * self.dim + i);
        (self.generating[flat], self.integral[flat])
    }

    pub fn symmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for flat in 0..self.generating.len() {
            let idx = unflatten(&vec![self.dim; self.order], flat);
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            let other = flatten(&vec![self.dim; self.order], &sorted);
            worst = worst
                .max((self.generating[flat] - self.generating[other]).abs())
                .max((self.integral[flat] - self.integral[other]).abs());
        }
        worst
    }
}

/// Default wavevector step for differentiating `log C`.
pub const GENERATING_STEP: f64 = 0.05;

fn mixed_derivative<F: Fn(&[f64]) -> Result<Complex64>>(
    f: &F,
    dim: usize,
    axes: &[usize],
    h: f64,
) -> Result<Complex64> {
    let n = axes.len();
    let at = |h: f64| -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for signs in 0..(1usize << n) {
            let mut q = vec![0.0; dim];
            let mut sign = 1.0;
            for (bit, &a) in axes.iter().enumerate() {
                let s = if signs >> bit & 1 == 1 { -1.0 } else { 1.0 };
                sign *= s;
                q[a] += s * h;
            }
            acc += f(&q)? * sign;
        }
        Ok(acc / (2.0 * h).powi(n as i32))
    };
    let (coarse, fine) = (at(h)?, at(h / 2.0)?);
    Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
}

pub fn cumulant(
    grid: &BzGrid,
    family: &StateFamily,
    order: usize,
    step: f64,
) -> Result<CumulantReport> {
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder { order });
    }
    let d = grid.dim();
    let count = d.pow(order as u32);
    let shape = vec![d; order];
    let logc = |q: &[f64]| log_generating_function(grid, family, q);
    let phase = match order {
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let mut generating = vec![0.0; count];
    for flat in 0..count {
        let idx = unflatten(&shape, flat);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        let canon = flatten(&shape, &sorted);
        generating[flat] = if canon < flat {
            generating[canon]
        } else {
            (phase * mixed_derivative(&logc, d, &idx, step)?).re
        };
    }
    let integral = match order {
        1 => average_polarization(grid)?.values,
        2 => {
            let g = grid
                .mean_matrix(|i| local_geom::qgt(family, &grid.k_point(i), deriv::DEFAULT_STEP).g);
            g.as_slice().to_vec()
        }
        _ => {
            let mut acc = vec![0.0; count];
            for i in 0..grid.len() {
                let t = local_geom::t_tensor(family, &grid.k_point(i), deriv::DEFAULT_STEP)?;
                for (a, v) in acc.iter_mut().zip(t.as_slice()) {
                    *a += 0.5 * v / grid.len() as f64;
                }
            }
            acc
        }
    };
    if order == 1 {
        generating.iter_mut().for_each(|v| *v = wrap_half(*v));
    }
    Ok(CumulantReport {
        order,
        dim: d,
        generating,
        integral,
    })
}

fn q_tensor(jet: &ProjectorJet) -> CMat {
    let d = jet.param_dim();
    CMat::from_fn(d, d, |a, b| linalg::trace3(&jet.p, &jet.d1[a], &jet.d1[b]))
}

/// `tr[P(x) P(y) dP(y)] / tr[P(x) P(y)]` for every direction, and the bar
/// version with the last two factors swapped.
fn connection_pair(px: &CMat, jet: &ProjectorJet) -> (Vec<Complex64>, Vec<Complex64>, Complex64) {
    let pxy = px * &jet.p;
    let den = pxy.trace();
    let a = jet
        .d1
        .iter()
        .map(|d| linalg::trace2(&pxy, d) / den)
        .collect();
    let abar = jet
        .d1
        .iter()
        .map(|d| linalg::trace3(px, d, &jet.p) / den)
        .collect();
    (a, abar, den)
}

/// Conductivity integrand at `k` written with the reference-point connection:
/// `i [P(k, k+q/2) (A_a Abar_b + Qbar_ab) - P(k, k-q/2) (Abar_a A_b + Q_ab)]`,
/// connections taken at `k` with references `k +- q/2`.
pub fn conductivity_integrand(jet: &ProjectorJet, p_plus: &CMat, p_minus: &CMat) -> CMat {
    let d = jet.param_dim();
    let q = q_tensor(jet);
    let (ap, abp, np) = connection_pair(p_plus, jet);
    let (am, abm, nm) = connection_pair(p_minus, jet);
    let i = Complex64::new(0.0, 1.0);
    CMat::from_fn(d, d, |a, b| {
        i * (np * (ap[a] * abp[b] + q[(a, b)].conj()) - nm * (abm[a] * am[b] + q[(a, b)]))
    })
}

/// The same integrand from projector traces:
/// `i (tr[P(k+q/2) dP_b dP_a] - tr[P(k-q/2) dP_a dP_b])`, derivatives at `k`.
pub fn conductivity_integrand_projector(jet: &ProjectorJet, p_plus: &CMat, p_minus: &CMat) -> CMat {
    let d = jet.param_dim();
    let i = Complex64::new(0.0, 1.0);
    CMat::from_fn(d, d, |a, b| {
        i * (linalg::trace3(p_plus, &jet.d1[b], &jet.d1[a])
            - linalg::trace3(p_minus, &jet.d1[a], &jet.d1[b]))
    })
}

/// Check that `hamiltonian` has spectrum `{0, 1, .., 1}` at every node with
/// the band of `family` at zero energy.
pub fn check_flat_band<H: Fn(&[f64]) -> CMat>(
    grid: &BzGrid,
    family: &StateFamily,
    hamiltonian: H,
) -> Result<()> {
    let tol = Tolerances::DEFAULT.flatness;
    for i in 0..grid.len() {
        let k = grid.k_point(i);
        let h = hamiltonian(&k);
        let (vals, _) = linalg::hermitian_eigen(&h);
        let mut deviation = vals[0].abs();
        for v in &vals[1..] {
            deviation = deviation.max((v - 1.0).abs());
        }
        deviation = deviation.max(linalg::fro(&(&h * family.projector_at(&k))));
        if deviation > tol {
            return Err(Error::BandStructureViolation { deviation });
        }
    }
    Ok(())
}

/// `sigma_ab(q)` for a single flat occupied band, as the zone mean of
/// [`conductivity_integrand`].
pub fn conductivity_q<H: Fn(&[f64]) -> CMat>(
    grid: &BzGrid,
    family: &StateFamily,
    hamiltonian: H,
    q: &[f64],
) -> Result<CMat> {
    check_flat_band(grid, family, hamiltonian)?;
    Ok(conductivity_unchecked(grid, family, q))
}

fn conductivity_unchecked(grid: &BzGrid, family: &StateFamily, q: &[f64]) -> CMat {
    let d = grid.dim();
    let mut acc = CMat::zeros(d, d);
    for i in 0..grid.len() {
        let k = grid.k_point(i);
        let jet = ProjectorJet::first(family, &k, deriv::DEFAULT_STEP);
        let kp: Vec<f64> = k.iter().zip(q).map(|(a, b)| a + b / 2.0).collect();
        let km: Vec<f64> = k.iter().zip(q).map(|(a, b)| a - b / 2.0).collect();
        acc += conductivity_integrand(&jet, &family.projector_at(&kp), &family.projector_at(&km));
    }
    acc / Complex64::new(grid.len() as f64, 0.0)
}

/// Second-order predictions for `sigma(q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaExpansion {
    /// `-int w_ab`.
    pub uniform: DMatrix<f64>,
    /// `-int (w_ab - (w_ab g_cd + g_ac w_bd + w_ca g_bd) q^c q^d / 4)`.
    pub tensor_form: DMatrix<f64>,
    /// `-int w_xy (1 - g_xx q^2 / 2)` for `q` along the first axis.
    pub axis_form: Option<f64>,
}

pub fn sigma_expansion(grid: &BzGrid, family: &StateFamily, q: &[f64]) -> SigmaExpansion {
    let d = grid.dim();
    let mut uniform = DMatrix::zeros(d, d);
    let mut tensor_form = DMatrix::zeros(d, d);
    let mut axis = 0.0;
    let n = grid.len() as f64;
    for i in 0..grid.len() {
        let geo = local_geom::qgt(family, &grid.k_point(i), deriv::DEFAULT_STEP);
        let (g, w) = (&geo.g, &geo.omega);
        for a in 0..d {
            for b in 0..d {
                let mut corr = 0.0;
                for c in 0..d {
                    for e in 0..d {
                        corr +=
                            (w[(a, b)] * g[(c, e)] + g[(a, c)] * w[(b, e)] + w[(c, a)] * g[(b, e)])
                                * q[c]
                                * q[e];
                    }
                }
                uniform[(a, b)] -= w[(a, b)] / n;
                tensor_form[(a, b)] -= (w[(a, b)] - corr / 4.0) / n;
            }
        }
        if d >= 2 {
            axis -= w[(0, 1)] * (1.0 - g[(0, 0)] * q[0] * q[0] / 2.0) / n;
        }
    }
    let along_x = d >= 2 && q[1..].iter().all(|v| *v == 0.0);
    SigmaExpansion {
        uniform,
        tensor_form,
        axis_form: along_x.then_some(axis),
    }
}

/// Residuals of both second-order forms for `q = (q, 0)` over a list of
/// magnitudes: `(|sigma_xy - axis_form|, |sigma_xy - tensor_form_xy|)`.
pub fn small_q_residuals(grid: &BzGrid, family: &StateFamily, qs: &[f64]) -> Vec<(f64, f64)> {
    let d = grid.dim();
    qs.iter()
        .map(|&q| {
            let mut qv = vec![0.0; d];
            qv[0] = q;
            let sigma = conductivity_unchecked(grid, family, &qv)[(0, 1)];
            let exp = sigma_expansion(grid, family, &qv);
            let axis = exp.axis_form.unwrap_or(f64::NAN);
            (
                (sigma.re - axis).abs(),
                (sigma.re - exp.tensor_form[(0, 1)]).abs(),
            )
        })
        .collect()
}
