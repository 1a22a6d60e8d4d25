//! Small dense symmetric-matrix helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest condition number accepted by [`spd_inverse`].
pub const MAX_CONDITION: f64 = 1e12;

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues in ascending order together with matching unit eigenvectors (as columns).
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (values, vectors)
}

pub fn min_max_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let (values, _) = sorted_eigen(m);
    (values[0], values[values.len() - 1])
}

/// Inverse of a symmetric positive-definite matrix through a Cholesky factorization.
///
/// Matrices whose condition number exceeds [`MAX_CONDITION`] are refused.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (smallest, largest) = min_max_eigenvalues(m);
    if smallest <= 0.0 {
        return Err(Error::NotPositiveDefinite(smallest));
    }
    if largest / smallest > MAX_CONDITION {
        return Err(Error::SingularMatrix { smallest, largest });
    }
    let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(smallest))?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `S^{p}` for symmetric positive-definite `S` via its eigendecomposition.
pub fn spd_power(m: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_eigen(m);
    if values[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite(values[0]));
    }
    let scaled = DMatrix::from_diagonal(&values.map(|v| v.powf(p)));
    Ok(&vectors * scaled * vectors.transpose())
}

/// Flip a vector so its first entry with magnitude above `1e-12` is positive.
pub(crate) fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    if let Some(x) = v.iter().find(|x| x.abs() > 1e-12) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenvalues_sorted() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = sorted_eigen(&m);
        assert_eq!(vals.as_slice(), &[-1.0, 2.0, 5.0]);
        assert_abs_diff_eq!(vecs[(1, 0)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_and_powers() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&m).unwrap();
        assert!((&m * &inv - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        let half = spd_power(&m, 0.5).unwrap();
        assert!((&half * &half - &m).abs().max() < 1e-13);
    }

    #[test]
    fn refuses_singular_and_indefinite() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(spd_inverse(&singular).is_err());
        let ill = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-13]));
        assert!(matches!(spd_inverse(&ill), Err(Error::SingularMatrix { .. })));
        let indefinite = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(spd_inverse(&indefinite), Err(Error::NotPositiveDefinite(_))));
    }
}
