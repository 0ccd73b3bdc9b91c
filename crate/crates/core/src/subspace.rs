//! Kernel-subspace descriptors of videos.
//!
//! A descriptor is a pair `(C, H)`: support histograms `H` and coefficients
//! `C` such that the feature-space vectors `Φ(H) C` form an orthonormal
//! basis, i.e. `Cᵀ κ(H, H) C = I`. Descriptors are obtained by Kernel PCA
//! on all frames followed by a Nyström reduction onto a few support frames.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibration::{Calibration, Fingerprint};
use crate::error::{KshsError, Result};
use crate::histogram::{build_histogram_matrix, BinEdges, HistogramMatrix};
use crate::kernel::kernel_matrix;
use crate::linalg::{numerical_rank, orthogonality_residual, orthonormal_maximizer, sym_eigen_desc, whitened_range};
use crate::scattering::{FilterBank, FrameImage};

/// Residual above which a basis is rejected as non-orthogonal.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-4;

/// How support columns were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportStrategy {
    #[default]
    UniformStride,
    KMedoids,
    /// Support made of k-means centroids (Fréchet means).
    Centroids,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSubspace {
    coefficients: DMatrix<f64>,
    support: HistogramMatrix,
    edges: BinEdges,
    fingerprint: Fingerprint,
    strategy: SupportStrategy,
}

impl KernelSubspace {
    pub fn new(
        coefficients: DMatrix<f64>,
        support: HistogramMatrix,
        edges: BinEdges,
        fingerprint: Fingerprint,
        strategy: SupportStrategy,
    ) -> Result<Self> {
        if coefficients.nrows() != support.len() {
            return Err(KshsError::Dimension(format!(
                "{} coefficient rows for {} support columns",
                coefficients.nrows(),
                support.len()
            )));
        }
        if coefficients.ncols() == 0 || coefficients.ncols() > coefficients.nrows() {
            return Err(KshsError::Dimension(format!(
                "subspace dimension {} with {} support columns",
                coefficients.ncols(),
                coefficients.nrows()
            )));
        }
        if edges.n_bands() != support.n_bands() || edges.n_bins() != support.n_bins() {
            return Err(KshsError::StructureMismatch("bin edges do not match the support layout".into()));
        }
        Ok(Self {
            coefficients,
            support,
            edges,
            fingerprint,
            strategy,
        })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn support(&self) -> &HistogramMatrix {
        &self.support
    }

    pub fn edges(&self) -> &BinEdges {
        &self.edges
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn strategy(&self) -> SupportStrategy {
        self.strategy
    }

    /// Subspace dimension `n`.
    pub fn dim(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Same support, coefficients replaced (e.g. `C Q` for an orthogonal `Q`).
    pub fn with_coefficients(&self, coefficients: DMatrix<f64>) -> Result<Self> {
        Self::new(
            coefficients,
            self.support.clone(),
            self.edges.clone(),
            self.fingerprint,
            self.strategy,
        )
    }

    /// `max |Cᵀ κ(H, H) C − I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let gram = kernel_matrix(&self.support, &self.support).expect("support shares its own layout");
        orthogonality_residual(&self.coefficients, &gram)
    }

    pub(crate) fn check_compatible(&self, other: &KernelSubspace) -> Result<()> {
        self.fingerprint.ensure_eq(&other.fingerprint)?;
        if self.dim() != other.dim() {
            return Err(KshsError::Dimension(format!(
                "subspace dimensions differ ({} vs {})",
                self.dim(),
                other.dim()
            )));
        }
        if !self.support.same_layout(&other.support) {
            return Err(KshsError::StructureMismatch("support histograms differ in layout".into()));
        }
        Ok(())
    }
}

/// Kernel PCA: `C = U_{:,1:n} Λ_{1:n}^{-1/2}` from the eigendecomposition of
/// `κ(H, H)` with eigenvalues in descending order.
pub fn kernel_pca(h: &HistogramMatrix, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || n > h.len() {
        return Err(KshsError::InvalidArgument(format!(
            "subspace dimension {n} invalid for {} columns",
            h.len()
        )));
    }
    let gram = kernel_matrix(h, h)?;
    let (values, vectors) = sym_eigen_desc(&gram);
    let rank = numerical_rank(&values);
    if rank < n {
        return Err(KshsError::RankDeficient { needed: n, found: rank });
    }
    let mut c = vectors.columns(0, n).into_owned();
    for (k, mut col) in c.column_iter_mut().enumerate() {
        col /= values[k].sqrt();
    }
    Ok(c)
}

/// Uniform temporal stride: indices `⌊(k + ½)·N/Ñ⌋` for `k = 0..Ñ`.
pub fn uniform_stride_indices(n_columns: usize, support: usize) -> Vec<usize> {
    (0..support).map(|k| (2 * k + 1) * n_columns / (2 * support)).collect()
}

/// Kernel k-medoids on the feature-space distance `√(2 − 2κ)`, started from
/// the uniform stride. Returns sorted, distinct indices.
fn kmedoid_indices(h: &HistogramMatrix, support: usize) -> Result<Vec<usize>> {
    let gram = kernel_matrix(h, h)?;
    let n = h.len();
    let dist = |i: usize, j: usize| (2.0 - 2.0 * gram[(i, j)]).max(0.0).sqrt();
    let mut medoids = uniform_stride_indices(n, support);
    for _ in 0..100 {
        let mut clusters = vec![Vec::new(); support];
        for p in 0..n {
            let (best, _) = medoids
                .iter()
                .enumerate()
                .map(|(k, &m)| (k, dist(p, m)))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            clusters[best].push(p);
        }
        let mut updated = medoids.clone();
        for (k, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let mut best = (medoids[k], f64::INFINITY);
            for &candidate in members {
                let cost: f64 = members.iter().map(|&q| dist(candidate, q)).sum();
                if cost < best.1 {
                    best = (candidate, cost);
                }
            }
            updated[k] = best.0;
        }
        if updated == medoids {
            break;
        }
        medoids = updated;
    }
    medoids.sort_unstable();
    medoids.dedup();
    if medoids.len() != support {
        return Err(KshsError::InvalidArgument("k-medoids produced duplicate medoids".into()));
    }
    Ok(medoids)
}

/// Indices of the `Ñ` representative columns.
pub fn support_indices(h: &HistogramMatrix, support: usize, strategy: SupportStrategy) -> Result<Vec<usize>> {
    if support == 0 || support > h.len() {
        return Err(KshsError::SupportTooLarge {
            support,
            available: h.len(),
        });
    }
    match strategy {
        SupportStrategy::UniformStride => Ok(uniform_stride_indices(h.len(), support)),
        SupportStrategy::KMedoids => kmedoid_indices(h, support),
        SupportStrategy::Centroids => Err(KshsError::InvalidArgument(
            "centroid supports are built by the Fréchet mean, not by column selection".into(),
        )),
    }
}

/// `H̃`: the selected support columns of `H`.
pub fn subsample_support(h: &HistogramMatrix, support: usize, strategy: SupportStrategy) -> Result<HistogramMatrix> {
    h.select(&support_indices(h, support, strategy)?)
}

/// Squared-error distance without validation.
///
/// Evaluated as `½(tr C₁ᵀκ(H₁,H₁)C₁ + tr C₂ᵀκ(H₂,H₂)C₂) − tr C₁ᵀκ(H₁,H₂)C₂`,
/// which is `n − tr(C₁ᵀ κ(H₁,H₂) C₂)` for orthonormal bases; the radicand is
/// clamped to `[0, 2n]`.
pub(crate) fn d_se_unchecked(
    c1: &DMatrix<f64>,
    h1: &HistogramMatrix,
    c2: &DMatrix<f64>,
    h2: &HistogramMatrix,
) -> Result<f64> {
    let n = c1.ncols() as f64;
    let self1 = (c1.transpose() * kernel_matrix(h1, h1)? * c1).trace();
    let self2 = (c2.transpose() * kernel_matrix(h2, h2)? * c2).trace();
    let cross = c1.transpose() * kernel_matrix(h1, h2)? * c2;
    Ok((0.5 * (self1 + self2) - cross.trace()).clamp(0.0, 2.0 * n).sqrt())
}

/// Squared-error distance between two orthonormal bases. Not invariant to
/// the choice of basis; see [`crate::metric::nuclear_distance`].
pub fn d_se(a: &KernelSubspace, b: &KernelSubspace) -> Result<f64> {
    a.check_compatible(b)?;
    for side in [a, b] {
        let residual = side.orthogonality_residual();
        if residual > ORTHOGONALITY_TOLERANCE {
            return Err(KshsError::NotOrthogonal(residual));
        }
    }
    d_se_unchecked(&a.coefficients, &a.support, &b.coefficients, &b.support)
}

/// Nyström reduction: the coefficients over `H̃` whose basis is closest in
/// `d_se` to the basis `(C, H)`, subject to `C̃ᵀ κ(H̃, H̃) C̃ = I`.
pub fn nystrom_reduce(c: &DMatrix<f64>, h: &HistogramMatrix, support: &HistogramMatrix) -> Result<DMatrix<f64>> {
    let n = c.ncols();
    if c.nrows() != h.len() {
        return Err(KshsError::Dimension(format!(
            "{} coefficient rows for {} columns",
            c.nrows(),
            h.len()
        )));
    }
    if support.len() < n {
        return Err(KshsError::SupportTooLarge {
            support: n,
            available: support.len(),
        });
    }
    let whitened = whitened_range(&kernel_matrix(support, support)?, n)?;
    let projected = c.transpose() * kernel_matrix(h, support)? * &whitened;
    let rotation = orthonormal_maximizer(&projected.transpose());
    Ok(whitened * rotation)
}

/// Size parameters of a descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceParams {
    /// Subspace dimension `n`.
    pub dim: usize,
    /// Number of support columns `Ñ`.
    pub support: usize,
    pub strategy: SupportStrategy,
}

impl Default for SubspaceParams {
    fn default() -> Self {
        Self {
            dim: 5,
            support: 15,
            strategy: SupportStrategy::UniformStride,
        }
    }
}

/// Descriptor of a histogram matrix: Kernel PCA, support selection and
/// Nyström reduction.
pub fn descriptor_from_histograms(
    h: &HistogramMatrix,
    edges: &BinEdges,
    fingerprint: Fingerprint,
    params: &SubspaceParams,
) -> Result<KernelSubspace> {
    if params.dim > params.support || params.support > h.len() {
        return Err(KshsError::InvalidArgument(format!(
            "need N >= support >= dim, got N={}, support={}, dim={}",
            h.len(),
            params.support,
            params.dim
        )));
    }
    let c = kernel_pca(h, params.dim)?;
    let support = subsample_support(h, params.support, params.strategy)?;
    let reduced = nystrom_reduce(&c, h, &support)?;
    KernelSubspace::new(reduced, support, edges.clone(), fingerprint, params.strategy)
}

/// Full pipeline for one video: scattering, histograms, Kernel PCA and
/// Nyström reduction.
pub fn compute_descriptor(
    frames: &[FrameImage],
    bank: &FilterBank,
    calibration: &Calibration,
    params: &SubspaceParams,
) -> Result<KernelSubspace> {
    let h = build_histogram_matrix(
        frames,
        bank,
        &calibration.edges,
        calibration.scattering.depth,
        calibration.normalized,
    )?;
    descriptor_from_histograms(&h, &calibration.edges, calibration.fingerprint(), params)
}
