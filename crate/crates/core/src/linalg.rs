//! Dense complex matrix helpers on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use num_traits::Float;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `v w^\dagger`.
pub fn outer(v: &[Complex64], w: &[Complex64]) -> CMat {
    CMat::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
}

/// `tr(AB)` without forming the product.
pub fn trace2(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// `tr(ABC)`.
pub fn trace3(a: &CMat, b: &CMat, c: &CMat) -> Complex64 {
    trace2(&(a * b), c)
}

/// Frobenius norm.
pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Solve a small real linear system; `None` when singular.
pub fn solve_real(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let lu = a.clone().lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    Some(x.iter().copied().collect())
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut r = a % two_pi;
    if r <= -core::f64::consts::PI {
        r += two_pi;
    } else if r > core::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_ascending_and_reconstructs() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        let d = CMat::from_diagonal(&CVec::from_iterator(
            2,
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let back = &vecs * d * vecs.adjoint();
        assert!(fro(&(back - m)) < 1e-12);
    }

    #[test]
    fn trace_helpers_match_products() {
        let a = CMat::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMat::from_fn(3, 3, |i, j| Complex64::new((i * j) as f64, 1.0));
        let c = a.adjoint();
        assert!((trace2(&a, &b) - (&a * &b).trace()).norm() < 1e-12);
        assert!((trace3(&a, &b, &c) - (&a * &b * &c).trace()).norm() < 1e-11);
    }

    #[test]
    fn wrap() {
        assert_abs_diff_eq!(
            wrap_angle(3.0 * core::f64::consts::PI),
            core::f64::consts::PI,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(wrap_angle(-0.5), -0.5);
    }
}
