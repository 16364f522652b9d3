//! Thin dense linear-algebra adapters.
//!
//! Small dense problems (transfer-operator spectra, MPS truncation, Lanczos
//! tridiagonal solves) are converted to `f64` and handed to nalgebra; the
//! matrices involved here never exceed a few thousand rows.

use nalgebra::{Complex as NaComplex, DMatrix, DVector};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, C};

fn to_na<T: Scalar>(m: &Array2<C<T>>) -> DMatrix<NaComplex<f64>> {
    let (r, c) = m.dim();
    DMatrix::from_fn(r, c, |i, j| {
        NaComplex::new(m[(i, j)].re.to_f64_lossy(), m[(i, j)].im.to_f64_lossy())
    })
}

/// All eigenvalues of a general complex square matrix.
pub fn eigenvalues<T: Scalar>(m: &Array2<C<T>>) -> Result<Vec<C<T>>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::Shape(format!("expected square matrix, got {r}x{c}")));
    }
    let na = to_na(m);
    let eigs = na
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Solver("Schur iteration did not converge".into()))?;
    Ok(eigs
        .iter()
        .map(|z| C::new(T::from_f64_lossy(z.re), T::from_f64_lossy(z.im)))
        .collect())
}

/// Largest-modulus eigenvalue of a general complex square matrix.
pub fn leading_eigenvalue<T: Scalar>(m: &Array2<C<T>>) -> Result<C<T>> {
    let eigs = eigenvalues(m)?;
    eigs.into_iter()
        .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
        .ok_or_else(|| Error::Shape("empty matrix".into()))
}

/// Thin SVD of a complex matrix; returns `(u, singular_values, v_dagger)`
/// with `u: r x k`, `v_dagger: k x c`, `k = min(r, c)`.
#[allow(clippy::type_complexity)]
pub fn svd<T: Scalar>(m: &Array2<C<T>>) -> Result<(Array2<C<T>>, Vec<T>, Array2<C<T>>)> {
    let (r, c) = m.dim();
    let k = r.min(c);
    let na = to_na(m);
    let svd = na.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Solver("SVD: no U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Solver("SVD: no V^t".into()))?;
    let s: Vec<T> = svd
        .singular_values
        .iter()
        .map(|&x| T::from_f64_lossy(x))
        .collect();
    let back = |m: &DMatrix<NaComplex<f64>>, rows: usize, cols: usize| {
        Array2::from_shape_fn((rows, cols), |(i, j)| {
            C::new(T::from_f64_lossy(m[(i, j)].re), T::from_f64_lossy(m[(i, j)].im))
        })
    };
    Ok((back(&u, r, k), s, back(&vt, k, c)))
}

/// Eigenvalues and eigenvectors of a real symmetric tridiagonal matrix,
/// ascending. `diag` has length m, `offdiag` length m-1.
pub fn tridiagonal_eigh(diag: &[f64], offdiag: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = diag.len();
    let mut full = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        full[(i, i)] = diag[i];
        if i + 1 < m {
            full[(i, i + 1)] = offdiag[i];
            full[(i + 1, i)] = offdiag[i];
        }
    }
    let se = full.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| {
            let col: DVector<f64> = se.eigenvectors.column(i).into();
            col.as_slice().to_vec()
        })
        .collect();
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn leading_eigenvalue_of_stochastic_matrix_is_one() {
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![
                C::new(0.25_f64, 0.0),
                C::new(0.75, 0.0),
                C::new(0.5, 0.0),
                C::new(0.5, 0.0),
            ],
        )
        .unwrap();
        let lead = leading_eigenvalue(&m).unwrap();
        assert_abs_diff_eq!(lead.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lead.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_reconstructs() {
        let m = Array2::from_shape_fn((3, 4), |(i, j)| {
            C::new((i as f64 + 1.0) * 0.3 + j as f64 * 0.1, (j as f64 - i as f64) * 0.2)
        });
        let (u, s, vt) = svd(&m).unwrap();
        let mut rec = Array2::<C<f64>>::zeros((3, 4));
        for i in 0..3 {
            for j in 0..4 {
                for k in 0..3 {
                    rec[(i, j)] += u[(i, k)] * s[k] * vt[(k, j)];
                }
            }
        }
        for (a, b) in rec.iter().zip(m.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn tridiagonal_eigh_matches_known_values() {
        // 3x3 with diag 2, offdiag -1: eigenvalues 2 - 2cos(k pi / 4)
        let (vals, vecs) = tridiagonal_eigh(&[2.0, 2.0, 2.0], &[-1.0, -1.0]);
        let expected: Vec<f64> = (1..=3)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 4.0).cos())
            .collect();
        for (v, e) in vals.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(v, e, epsilon = 1e-12);
        }
        assert_eq!(vecs.len(), 3);
    }
}
