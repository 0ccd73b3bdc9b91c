//! Small dense linear-algebra helpers shared by the subspace, metric and
//! Fréchet-mean code.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{KshsError, Result};

/// Relative threshold below which Gram eigenvalues count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Ties keep the original index order and negative
/// eigenvalues are clamped to zero.
pub fn sym_eigen_desc(matrix: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // stable sort keeps index order among equal eigenvalues
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(
        order.len(),
        order.iter().map(|&i| eig.eigenvalues[i].max(0.0)),
    );
    let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// The whitened range of a PSD Gram matrix: `U Λ^{-1/2}` restricted to the
/// eigenvalues above `RANK_TOLERANCE · λ_max`.
///
/// Fails when fewer than `min_rank` eigenvalues survive.
pub fn whitened_range(gram: &DMatrix<f64>, min_rank: usize) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen_desc(gram);
    let rank = numerical_rank(&values);
    if rank < min_rank {
        return Err(KshsError::RankDeficient {
            needed: min_rank,
            found: rank,
        });
    }
    let mut out = vectors.columns(0, rank).into_owned();
    for (k, mut col) in out.column_iter_mut().enumerate() {
        col /= values[k].sqrt();
    }
    Ok(out)
}

/// Number of eigenvalues (given in descending order) above the rank tolerance.
pub fn numerical_rank(descending: &DVector<f64>) -> usize {
    let lambda_max = descending.iter().copied().fold(0.0, f64::max);
    if lambda_max <= 0.0 {
        return 0;
    }
    let cutoff = RANK_TOLERANCE * lambda_max;
    descending.iter().filter(|&&v| v > cutoff).count()
}

/// `max |Cᵀ G C − I|`.
pub fn orthogonality_residual(coefficients: &DMatrix<f64>, gram: &DMatrix<f64>) -> f64 {
    let prod = coefficients.transpose() * gram * coefficients;
    let mut worst = 0.0f64;
    for r in 0..prod.nrows() {
        for c in 0..prod.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - target).abs());
        }
    }
    worst
}

/// Orthogonal matrix `Q` maximizing `tr(M Q)`: with `M = U Σ Vᵀ`, `Q = V Uᵀ`.
pub fn procrustes_rotation(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = SVD::new(matrix.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    v_t.transpose() * u.transpose()
}

/// Singular values of a (small) dense matrix.
pub fn singular_values(matrix: &DMatrix<f64>) -> DVector<f64> {
    SVD::new(matrix.clone(), false, false).singular_values
}

/// Orthogonal factor `U Vᵀ` of the thin SVD `M = U Σ Vᵀ`; maximizes `tr(Wᵀ M)`
/// over matrices with orthonormal columns.
pub fn orthonormal_maximizer(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = SVD::new(matrix.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_and_clamped() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, -1e-14]);
        let (vals, vecs) = sym_eigen_desc(&m);
        assert_eq!(vals.as_slice(), &[5.0, 2.0, 0.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(numerical_rank(&vals), 2);
    }

    #[test]
    fn whitened_range_is_orthonormal_under_gram() {
        let a = DMatrix::from_fn(4, 6, |r, c| ((r * 7 + c * 3) % 5) as f64 + 0.5);
        let gram = a.transpose() * &a;
        let w = whitened_range(&gram, 1).unwrap();
        assert_eq!(w.ncols(), 4);
        assert!(orthogonality_residual(&w, &gram) < 1e-8);
        assert!(matches!(
            whitened_range(&gram, 5),
            Err(KshsError::RankDeficient { needed: 5, found: 4 })
        ));
    }

    #[test]
    fn procrustes_recovers_rotation() {
        let t: f64 = 0.3;
        let r = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        // tr(R^T Q) is maximized by Q = R
        let q = procrustes_rotation(&r.transpose());
        assert!((q - r).abs().max() < 1e-12);
    }
}
