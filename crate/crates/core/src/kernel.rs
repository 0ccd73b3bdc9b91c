//! Bhattacharyya product kernel on scattering histogram vectors.
//!
//! The kernel of two vectors is the product over subbands of the per-band
//! Bhattacharyya coefficients `Σ_j √(a_j b_j)`. The product over ~100 bands
//! is accumulated in the log domain; a zero factor short-circuits to zero.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{KshsError, Result};
use crate::histogram::{HistogramMatrix, HistogramVector};

/// Matrix of pairwise kernel evaluations.
pub type GramMatrix = DMatrix<f64>;

fn product_kernel(sqrt_a: &[f64], sqrt_b: &[f64], n_bins: usize) -> f64 {
    let mut log_sum = 0.0;
    for (block_a, block_b) in sqrt_a.chunks_exact(n_bins).zip(sqrt_b.chunks_exact(n_bins)) {
        let bc: f64 = block_a.iter().zip(block_b).map(|(x, y)| x * y).sum();
        if bc <= 0.0 {
            return 0.0;
        }
        log_sum += bc.ln();
    }
    log_sum.exp().min(1.0)
}

/// Kernel value of two histogram vectors.
pub fn kernel_vec(a: &HistogramVector, b: &HistogramVector) -> Result<f64> {
    if a.n_bands() != b.n_bands() || a.n_bins() != b.n_bins() {
        return Err(KshsError::StructureMismatch(format!(
            "{}x{} vs {}x{} histogram layout",
            a.n_bands(),
            a.n_bins(),
            b.n_bands(),
            b.n_bins()
        )));
    }
    let sa: Vec<f64> = a.values().iter().map(|v| v.sqrt()).collect();
    let sb: Vec<f64> = b.values().iter().map(|v| v.sqrt()).collect();
    Ok(product_kernel(&sa, &sb, a.n_bins()))
}

/// `κ(H1, H2)`: entry `(i, j)` is the kernel of column `i` of `H1` and
/// column `j` of `H2`.
pub fn kernel_matrix(h1: &HistogramMatrix, h2: &HistogramMatrix) -> Result<GramMatrix> {
    if !h1.same_layout(h2) {
        return Err(KshsError::StructureMismatch(format!(
            "{}x{} vs {}x{} histogram layout",
            h1.n_bands(),
            h1.n_bins(),
            h2.n_bands(),
            h2.n_bins()
        )));
    }
    let s1 = h1.columns().map(f64::sqrt);
    let s2 = h2.columns().map(f64::sqrt);
    let n_bins = h1.n_bins();
    let (rows, cols) = (h1.len(), h2.len());
    let entries: Vec<f64> = (0..cols)
        .into_par_iter()
        .flat_map_iter(|j| {
            let b = s2.column(j);
            let s1 = &s1;
            (0..rows).map(move |i| product_kernel(s1.column(i).as_slice(), b.as_slice(), n_bins))
        })
        .collect();
    Ok(DMatrix::from_vec(rows, cols, entries))
}
