//! Reconstruction of states from their two- and three-point invariants, up
//! to a global unitary.
//!
//! The gauge is fixed by making every overlap with an anchor point real and
//! nonnegative. The remaining overlaps then follow from `P3(anchor, i, j)`,
//! and the Gram matrix factorizes into vectors of dimension equal to its
//! numerical rank.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::invariants::InvariantSet;
use crate::linalg::{self, CMat};
use crate::states::{self, StateVector};

/// Hermitian matrix of overlaps `h_ij = <x_i|x_j>` with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    h: CMat,
}

impl GramMatrix {
    pub fn new(h: CMat) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::SizeMismatch {
                left: h.nrows(),
                right: h.ncols(),
            });
        }
        let herm = linalg::fro(&(&h - h.adjoint()));
        if herm > 1e-12 {
            return Err(Error::InconsistentInvariants { residual: herm });
        }
        if let Some(d) = h
            .diagonal()
            .iter()
            .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
            .find(|&d| d > 1e-12)
        {
            return Err(Error::InconsistentInvariants { residual: d });
        }
        Ok(GramMatrix { h })
    }

    pub fn matrix(&self) -> &CMat {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.h.nrows() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub states: Vec<StateVector>,
    /// Largest `|P2|` deviation from the target.
    pub residual_two_point: f64,
    /// Largest three-point phase deviation from the target.
    pub residual_three_point: f64,
    pub rank: usize,
}

fn anchor_ok(inv: &InvariantSet, a: usize, tol: f64) -> bool {
    (0..inv.len()).all(|j| inv.p2(a, j) > tol)
}

/// Gauge-fixed Gram matrix. Falls back to the first usable anchor when the
/// requested one is orthogonal to some point.
pub fn gram_from_invariants(inv: &InvariantSet, anchor: usize) -> Result<GramMatrix> {
    let tol = Tolerances::DEFAULT;
    let n = inv.len();
    if n == 0 {
        return Err(Error::EmptyPointList);
    }
    let a = if anchor < n && anchor_ok(inv, anchor, tol.near_orthogonal) {
        anchor
    } else {
        (0..n)
            .find(|&a| anchor_ok(inv, a, tol.near_orthogonal))
            .ok_or(Error::OrthogonalAnchor)?
    };
    let mut h = CMat::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = inv.p2(i, j).max(0.0).sqrt();
            h[(i, j)] = if i == a || j == a {
                Complex64::new(r, 0.0)
            } else {
                let p3 = inv.p3(a, i, j);
                if p3.norm() > tol.orthogonal {
                    Complex64::from_polar(r, p3.arg())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
        }
    }
    let residual = cocycle_residual(inv, &h);
    if residual > tol.cocycle {
        return Err(Error::InconsistentInvariants { residual });
    }
    GramMatrix::new(h)
}

/// Largest `|arg P3(i,j,k) - arg(h_ij h_jk h_ki)|` over well-conditioned triples.
fn cocycle_residual(inv: &InvariantSet, h: &CMat) -> f64 {
    let n = inv.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let p3 = inv.p3(i, j, k);
                if p3.norm() <= 1e-6 {
                    continue;
                }
                let prod = h[(i, j)] * h[(j, k)] * h[(k, i)];
                worst = worst.max(linalg::wrap_angle(p3.arg() - prod.arg()).abs());
            }
        }
    }
    worst
}

/// Factor `h = Y^dagger Y` keeping eigenvalues above `rank_tol * lambda_max`.
pub fn states_from_gram(gram: &GramMatrix, rank_tol: f64) -> Result<ReconstructionResult> {
    let h = gram.matrix();
    let n = h.nrows();
    let (vals, vecs) = linalg::hermitian_eigen(h);
    let lmax = vals.iter().copied().fold(0.0f64, f64::max);
    let lmin = vals.first().copied().unwrap_or(0.0);
    if lmin < -Tolerances::DEFAULT.psd * lmax {
        return Err(Error::NotPsd { eigenvalue: lmin });
    }
    let kept: Vec<usize> = (0..n).filter(|&k| vals[k] > rank_tol * lmax).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut raw: Vec<Complex64> = kept
            .iter()
            .map(|&k| vecs[(i, k)].conj() * vals[k].sqrt())
            .collect();
        // A rank-one Gram matrix still needs a two-component representative.
        raw.resize(raw.len().max(2), Complex64::new(0.0, 0.0));
        out.push(states::normalize(&raw)?);
    }
    let mut r2 = 0.0f64;
    let mut r3 = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let o = linalg::inner(out[i].amplitudes(), out[j].amplitudes());
            r2 = r2.max((o.norm_sqr() - h[(i, j)].norm_sqr()).abs());
            for k in (j + 1)..n {
                let target = h[(i, j)] * h[(j, k)] * h[(k, i)];
                if i >= j || target.norm() <= 1e-6 {
                    continue;
                }
                let got = states::overlap(&out[i], &out[j])?
                    * states::overlap(&out[j], &out[k])?
                    * states::overlap(&out[k], &out[i])?;
                r3 = r3.max(linalg::wrap_angle(got.arg() - target.arg()).abs());
            }
        }
    }
    Ok(ReconstructionResult {
        states: out,
        residual_two_point: r2,
        residual_three_point: r3,
        rank: kept.len(),
    })
}

/// Largest `|dP2|` and `|dPhi|` between `original` and the invariants of
/// the reconstructed states. Phases are compared where `|P3| > 1e-10`.
pub fn verify_reconstruction(
    original: &InvariantSet,
    rec: &ReconstructionResult,
) -> Result<(f64, f64)> {
    let n = original.len();
    if rec.states.len() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: rec.states.len(),
        });
    }
    let back = InvariantSet::from_states(&rec.states, original.labels().to_vec())?;
    let mut dp2 = 0.0f64;
    let mut dphi = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dp2 = dp2.max((original.p2(i, j) - back.p2(i, j)).abs());
        }
    }
    for r in original.records() {
        let other = back.p3(r.i, r.j, r.k);
        if r.value.norm() > 1e-10 && other.norm() > 1e-10 {
            dphi = dphi.max(linalg::wrap_angle(r.value.arg() - other.arg()).abs());
        }
    }
    Ok((dp2, dphi))
}

/// `gram_from_invariants` followed by `states_from_gram`, with residuals
/// measured against `inv`.
pub fn reconstruct(
    inv: &InvariantSet,
    anchor: usize,
    rank_tol: f64,
) -> Result<ReconstructionResult> {
    let gram = gram_from_invariants(inv, anchor)?;
    let mut rec = states_from_gram(&gram, rank_tol)?;
    let (dp2, dphi) = verify_reconstruction(inv, &rec)?;
    rec.residual_two_point = dp2;
    rec.residual_three_point = dphi;
    Ok(rec)
}

/// Serialized form of a state list: one `[re, im]` pair per amplitude.
pub fn states_as_pairs(states: &[StateVector]) -> Vec<Vec<[f64; 2]>> {
    states
        .iter()
        .map(|s| s.amplitudes().iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Haar-random pure states in dimension `dim`.
pub fn random_states<R: rand_core::RngCore>(
    rng: &mut R,
    count: usize,
    dim: usize,
) -> Vec<StateVector> {
    let mut uniform = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (0..count)
        .map(|_| {
            let raw: Vec<Complex64> = (0..dim)
                .map(|_| {
                    let (u1, u2) = (uniform().max(1e-300), uniform());
                    let r = (-2.0 * u1.ln()).sqrt();
                    Complex64::from_polar(r, 2.0 * core::f64::consts::PI * u2)
                })
                .collect();
            states::normalize(&raw).expect("nonzero gaussian vector")
        })
        .collect()
}
