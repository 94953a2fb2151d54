//! Small dense linear-algebra helpers shared by the cone and certificate
//! layers: sorted symmetric eigendecompositions, numerical rank, null-space
//! bases and orthogonal Procrustes alignment.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 10_000;

/// Absolute floor below which the largest singular value counts as zero.
pub const RANK_ABS_FLOOR: f64 = 1e-14;

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and eigenvector columns permuted to match.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dim("symmetric eigendecomposition", n, m.ncols()));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenFailure { order: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Singular values of an arbitrary matrix, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: `#{σ_i ≥ rel_tol · σ_max}`, zero when `σ_max` is below
/// [`RANK_ABS_FLOOR`].
pub fn numerical_rank(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax <= RANK_ABS_FLOOR {
        return 0;
    }
    sv.iter().filter(|&&s| s >= rel_tol * smax).count()
}

/// Orthonormal basis of `{d : rows · d = 0}`.
///
/// Returns the `n × q` basis together with the rank used to cut the
/// spectrum and the singular values of `rows`.
pub fn null_space(rows: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize, Vec<f64>) {
    let n = rows.ncols();
    if rows.nrows() == 0 {
        return (DMatrix::identity(n, n), 0, Vec::new());
    }
    // Pad to at least n rows so that the SVD returns a full right basis.
    let r = rows.nrows().max(n);
    let mut padded = DMatrix::zeros(r, n);
    padded.view_mut((0, 0), (rows.nrows(), n)).copy_from(rows);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let rank = numerical_rank(&sv, rel_tol);
    let q = n - rank;
    let mut basis = DMatrix::zeros(n, q);
    for (col, &i) in idx[rank..].iter().enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    let reported = sv[..rows.nrows().min(n)].to_vec();
    (basis, rank, reported)
}

/// Rotates the columns of `q` (orthonormal) by the orthogonal factor that
/// best aligns them with `target` in Frobenius norm.
pub fn procrustes_align(q: &DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    if q.ncols() == 0 {
        return q.clone();
    }
    let cross = q.transpose() * target;
    let svd = SVD::new(cross, true, true);
    let (u, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    q * (u * v_t)
}

/// Smallest eigenvalue of a symmetric matrix (`+∞` for an empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let (vals, _) = sym_eigen_desc(m)?;
    Ok(vals[vals.len() - 1])
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Serializes a dense matrix as `{rows, cols, data}` with row-major data.
pub(crate) mod dmatrix_serde {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Dense {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let dense = Dense::deserialize(d)?;
        if dense.data.len() != dense.rows * dense.cols {
            return Err(D::Error::custom("matrix data length does not match its shape"));
        }
        Ok(DMatrix::from_row_slice(dense.rows, dense.cols, &dense.data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = sym_eigen_desc(&m).unwrap();
        assert_eq!(vals.as_slice(), &[5.0, 1.0, -2.0]);
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_single_row() {
        let rows = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let (basis, rank, _) = null_space(&rows, 1e-8);
        assert_eq!(rank, 1);
        assert_eq!(basis.ncols(), 2);
        assert!((&rows * &basis).norm() < 1e-12);
        assert!((basis.transpose() * &basis - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn zero_rows_have_rank_zero() {
        let rows = DMatrix::zeros(2, 2);
        let (basis, rank, _) = null_space(&rows, 1e-8);
        assert_eq!(rank, 0);
        assert_eq!(basis.ncols(), 2);
    }

    #[test]
    fn procrustes_recovers_rotation() {
        let target = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let q = &target * rot;
        let aligned = procrustes_align(&q, &target);
        assert!((aligned - target).norm() < 1e-12);
    }
}
