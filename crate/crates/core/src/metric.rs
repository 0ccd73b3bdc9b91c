//! Basis-invariant Nuclear distance between kernel subspaces.
//!
//! For bases `Φ₁ = Φ(H₁)C₁` and `Φ₂ = Φ(H₂)C₂` the distance is the
//! orthogonal-Procrustes residual
//!
//! ```text
//! d²_ncl = min_Q ½‖Φ₁ − Φ₂Q‖²_F = ½(tr C₁ᵀκ(H₁,H₁)C₁ + tr C₂ᵀκ(H₂,H₂)C₂) − ‖C₁ᵀκ(H₁,H₂)C₂‖_*
//! ```
//!
//! which equals `n − ‖C₁ᵀκ(H₁,H₂)C₂‖_*` for orthonormal bases. The self
//! traces are evaluated rather than assumed to be `n` so that rounding in
//! the orthogonality constraint does not leak into near-zero distances.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{KshsError, Result};
use crate::kernel::kernel_matrix;
use crate::linalg::singular_values;
use crate::subspace::KernelSubspace;

/// Angular step of the brute-force `O(2)` search.
pub const ORACLE_ANGLE_STEP: f64 = 1e-3;

impl KernelSubspace {
    /// `tr(Cᵀ κ(H, H) C)`, the squared Frobenius norm of the basis.
    pub fn self_trace(&self) -> f64 {
        let gram = kernel_matrix(self.support(), self.support()).expect("support shares its own layout");
        (self.coefficients().transpose() * gram * self.coefficients()).trace()
    }

    /// `C₁ᵀ κ(H₁, H₂) C₂` for `self` as the first argument.
    pub fn cross_matrix(&self, other: &KernelSubspace) -> Result<DMatrix<f64>> {
        let cross = kernel_matrix(self.support(), other.support())?;
        Ok(self.coefficients().transpose() * cross * other.coefficients())
    }
}

fn from_parts(trace_a: f64, trace_b: f64, nuclear: f64, dim: usize) -> f64 {
    (0.5 * (trace_a + trace_b) - nuclear).clamp(0.0, dim as f64).sqrt()
}

/// Kernelized Nuclear distance.
pub fn nuclear_distance(a: &KernelSubspace, b: &KernelSubspace) -> Result<f64> {
    a.check_compatible(b)?;
    let nuclear = singular_values(&a.cross_matrix(b)?).sum();
    Ok(from_parts(a.self_trace(), b.self_trace(), nuclear, a.dim()))
}

/// Brute-force minimum of `d_se(A; B·Q)` over `Q ∈ O(n)` for `n ≤ 2`.
///
/// `n = 1` checks both signs; `n = 2` scans rotations and reflections on a
/// grid of [`ORACLE_ANGLE_STEP`] radians.
pub fn nuclear_distance_oracle(a: &KernelSubspace, b: &KernelSubspace) -> Result<f64> {
    a.check_compatible(b)?;
    let n = a.dim();
    let m = a.cross_matrix(b)?;
    let half_traces = 0.5 * (a.self_trace() + b.self_trace());
    let best_alignment = match n {
        1 => m[(0, 0)].abs(),
        2 => {
            let steps = (2.0 * PI / ORACLE_ANGLE_STEP).ceil() as usize;
            let mut best = f64::NEG_INFINITY;
            for k in 0..steps {
                let (s, c) = (k as f64 * ORACLE_ANGLE_STEP).sin_cos();
                // tr(M Q) for Q = [[c, -s], [s, c]] and Q = [[c, s], [s, -c]]
                let rotation = m[(0, 0)] * c + m[(0, 1)] * s - m[(1, 0)] * s + m[(1, 1)] * c;
                let reflection = m[(0, 0)] * c + m[(0, 1)] * s + m[(1, 0)] * s - m[(1, 1)] * c;
                best = best.max(rotation).max(reflection);
            }
            best
        }
        other => return Err(KshsError::OracleDimension(other)),
    };
    Ok((half_traces - best_alignment).clamp(0.0, 2.0 * n as f64).sqrt())
}

/// Symmetric matrix of pairwise distances with descriptor ids and optional
/// class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    ids: Vec<String>,
    labels: Option<Vec<String>>,
}

impl DistanceMatrix {
    pub fn new(values: DMatrix<f64>, ids: Vec<String>, labels: Option<Vec<String>>) -> Result<Self> {
        if !values.is_square() || values.nrows() != ids.len() {
            return Err(KshsError::Dimension(format!(
                "{}x{} distances for {} ids",
                values.nrows(),
                values.ncols(),
                ids.len()
            )));
        }
        if labels.as_ref().is_some_and(|l| l.len() != ids.len()) {
            return Err(KshsError::Dimension("label count differs from id count".into()));
        }
        Ok(Self { values, ids, labels })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.ids.len() {
            return Err(KshsError::Dimension("id count differs from matrix size".into()));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.ids.len() {
            return Err(KshsError::Dimension("label count differs from matrix size".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }
}

/// All pairwise Nuclear distances; ids default to the descriptor positions.
pub fn pairwise_distances(descriptors: &[KernelSubspace]) -> Result<DistanceMatrix> {
    let k = descriptors.len();
    if let Some(first) = descriptors.first() {
        for d in &descriptors[1..] {
            first.check_compatible(d)?;
        }
    }
    let traces: Vec<f64> = descriptors.par_iter().map(KernelSubspace::self_trace).collect();
    // the diagonal stays exactly zero
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&descriptors[i], &descriptors[j]);
            let nuclear = singular_values(&a.cross_matrix(b)?).sum();
            Ok(from_parts(traces[i], traces[j], nuclear, a.dim()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut values = DMatrix::zeros(k, k);
    for (&(i, j), &d) in pairs.iter().zip(&upper) {
        values[(i, j)] = d;
        values[(j, i)] = d;
    }
    DistanceMatrix::new(values, (0..k).map(|i| i.to_string()).collect(), None)
}
