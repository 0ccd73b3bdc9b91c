//! Fréchet means of kernel-subspace descriptors under the Nuclear distance.
//!
//! The mean support `H̄` is fixed up front as k-means centroids of all member
//! support columns. The coefficients `C̄` are then refined by alternating
//! between aligning every member basis to the mean (orthogonal Procrustes)
//! and solving for the best orthonormal mean basis given those alignments.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KshsError, Result};
use crate::histogram::HistogramMatrix;
use crate::kernel::kernel_matrix;
use crate::linalg::{orthonormal_maximizer, procrustes_rotation, singular_values, whitened_range};
use crate::subspace::{kernel_pca, KernelSubspace, SupportStrategy};

const KMEANS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetConfig {
    /// Number of k-means centroids `N̄` in the mean support.
    pub support: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FrechetConfig {
    fn default() -> Self {
        Self {
            support: 15,
            seed: 7,
            max_iter: 50,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrechetMeanResult {
    pub mean: KernelSubspace,
    /// Objective `Σ d²_ncl(mean, member)` after initialization and after
    /// every iteration.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_members(members: &[KernelSubspace]) -> Result<&KernelSubspace> {
    let first = members
        .first()
        .ok_or_else(|| KshsError::Empty("Fréchet mean of an empty set".into()))?;
    for m in &members[1..] {
        first.check_compatible(m)?;
    }
    Ok(first)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Euclidean k-means with k-means++ seeding.
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; points.len()];
    let first = rng.random_range(0..points.len());
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    while centers.len() < k {
        let weights: Vec<f64> = points.iter().map(|p| nearest(p, &centers).1).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    pick = Some(i);
                    if target < *w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every point coincides with a center
            chosen.iter().position(|c| !c).expect("k <= number of points")
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
    }

    let mut assignment: Vec<usize> = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == assignment {
            break;
        }
        assignment = next;
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for (c, (sum, count)) in centers.iter_mut().zip(sums.into_iter().zip(counts)) {
            if count > 0 {
                *c = sum.into_iter().map(|s| s / count as f64).collect();
            }
        }
    }
    centers
}

/// Mean support `H̄`: `N̄` k-means centroids of the pooled member support
/// columns, each block renormalized onto the probability simplex.
pub fn build_mean_support(members: &[KernelSubspace], support: usize, seed: u64) -> Result<HistogramMatrix> {
    let first = check_members(members)?;
    if support < first.dim() {
        return Err(KshsError::InvalidArgument(format!(
            "mean support {support} is smaller than the subspace dimension {}",
            first.dim()
        )));
    }
    let layout = first.support();
    let points: Vec<Vec<f64>> = members
        .iter()
        .flat_map(|m| m.support().columns().column_iter().map(|c| c.iter().copied().collect()))
        .collect();
    if points.len() < support {
        return Err(KshsError::SupportTooLarge {
            support,
            available: points.len(),
        });
    }
    let centers = kmeans(&points, support, seed);
    let columns = DMatrix::from_fn(layout.dim(), support, |r, c| centers[c][r]);
    Ok(HistogramMatrix::renormalized(
        columns,
        layout.n_bands(),
        layout.n_bins(),
        layout.is_normalized(),
    ))
}

/// Orthogonal `Q_i` aligning each member basis to the mean: the polar factor
/// maximizing `tr(C̄ᵀ κ(H̄, H_i) C_i Q_i)`.
pub fn align_members(mean: &KernelSubspace, members: &[KernelSubspace]) -> Result<Vec<DMatrix<f64>>> {
    for m in members {
        mean.check_compatible(m)?;
    }
    members
        .par_iter()
        .map(|m| Ok(procrustes_rotation(&mean.cross_matrix(m)?)))
        .collect()
}

/// Orthonormal mean coefficients over `H̄` minimizing
/// `Σ_i d²_se(C, H̄; C_i Q_i, H_i)` for fixed alignments `Q_i`.
pub fn update_basis(
    mean_support: &HistogramMatrix,
    members: &[KernelSubspace],
    alignments: &[DMatrix<f64>],
) -> Result<DMatrix<f64>> {
    let first = members
        .first()
        .ok_or_else(|| KshsError::Empty("basis update without members".into()))?;
    if alignments.len() != members.len() {
        return Err(KshsError::Dimension("one alignment per member required".into()));
    }
    let n = first.dim();
    let whitened = whitened_range(&kernel_matrix(mean_support, mean_support)?, n)?;
    let mut target = DMatrix::zeros(mean_support.len(), n);
    for (m, q) in members.iter().zip(alignments) {
        target += kernel_matrix(mean_support, m.support())? * m.coefficients() * q;
    }
    let rotation = orthonormal_maximizer(&(whitened.transpose() * target));
    Ok(whitened * rotation)
}

/// Cached pieces of the objective for a fixed mean support.
struct Objective<'a> {
    members: &'a [KernelSubspace],
    cross_grams: Vec<DMatrix<f64>>,
    member_traces: Vec<f64>,
    mean_gram: DMatrix<f64>,
}

impl<'a> Objective<'a> {
    fn new(mean_support: &HistogramMatrix, members: &'a [KernelSubspace]) -> Result<Self> {
        let cross_grams = members
            .par_iter()
            .map(|m| kernel_matrix(mean_support, m.support()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            members,
            cross_grams,
            member_traces: members.iter().map(KernelSubspace::self_trace).collect(),
            mean_gram: kernel_matrix(mean_support, mean_support)?,
        })
    }

    fn loss(&self, coefficients: &DMatrix<f64>) -> f64 {
        let n = coefficients.ncols() as f64;
        let mean_trace = (coefficients.transpose() * &self.mean_gram * coefficients).trace();
        self.members
            .iter()
            .zip(&self.cross_grams)
            .zip(&self.member_traces)
            .map(|((m, k), t)| {
                let nuclear = singular_values(&(coefficients.transpose() * k * m.coefficients())).sum();
                (0.5 * (mean_trace + t) - nuclear).clamp(0.0, n)
            })
            .sum()
    }
}

/// Fréchet mean by alternating alignment and basis updates, stopping when
/// the objective changes by less than `tol` or after `max_iter` iterations.
pub fn frechet_mean(members: &[KernelSubspace], config: &FrechetConfig) -> Result<FrechetMeanResult> {
    let first = check_members(members)?;
    let n = first.dim();
    let support = build_mean_support(members, config.support, config.seed)?;
    let wrap = |c: DMatrix<f64>| {
        KernelSubspace::new(
            c,
            support.clone(),
            first.edges().clone(),
            first.fingerprint(),
            SupportStrategy::Centroids,
        )
    };

    let objective = Objective::new(&support, members)?;
    let mut mean = wrap(kernel_pca(&support, n)?)?;
    let mut loss_trace = vec![objective.loss(mean.coefficients())];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let alignments = align_members(&mean, members)?;
        mean = wrap(update_basis(&support, members, &alignments)?)?;
        let loss = objective.loss(mean.coefficients());
        let previous = *loss_trace.last().expect("trace starts non-empty");
        loss_trace.push(loss);
        if (previous - loss).abs() < config.tol {
            converged = true;
            break;
        }
    }
    Ok(FrechetMeanResult {
        mean,
        loss_trace,
        iterations,
        converged,
    })
}
