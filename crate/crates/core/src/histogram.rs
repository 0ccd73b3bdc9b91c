//! Per-subband coefficient histograms and the per-video histogram matrix.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KshsError, Result};
use crate::scattering::{frame_subbands, FilterBank, FrameImage, ScatteringMaps};

/// Smallest admissible upper bin edge.
pub const EDGE_FLOOR: f64 = 1e-12;

/// Per-subband histogram ranges `[0, r_i]` shared across a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    upper: Vec<f64>,
    n_bins: usize,
}

impl BinEdges {
    pub fn new(upper: Vec<f64>, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(KshsError::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
        }
        if upper.is_empty() {
            return Err(KshsError::Empty("bin edges".into()));
        }
        if let Some(bad) = upper.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(KshsError::InvalidArgument(format!("upper bin edge {bad} is not positive")));
        }
        Ok(Self { upper, n_bins })
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn n_bands(&self) -> usize {
        self.upper.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin of a coefficient on `[0, upper]`; values at or above `upper` land
    /// in the last bin.
    pub fn bin_of(&self, band: usize, value: f64) -> usize {
        let r = self.upper[band];
        if value >= r {
            return self.n_bins - 1;
        }
        let pos = (value.max(0.0) / r * self.n_bins as f64).floor() as usize;
        pos.min(self.n_bins - 1)
    }
}

/// Concatenated per-subband probability histograms of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramVector {
    values: DVector<f64>,
    n_bands: usize,
    n_bins: usize,
}

impl HistogramVector {
    pub fn new(values: DVector<f64>, n_bands: usize, n_bins: usize) -> Result<Self> {
        check_column(values.as_slice(), n_bands, n_bins)?;
        Ok(Self {
            values,
            n_bands,
            n_bins,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn block(&self, band: usize) -> &[f64] {
        &self.values.as_slice()[band * self.n_bins..(band + 1) * self.n_bins]
    }
}

fn check_column(values: &[f64], n_bands: usize, n_bins: usize) -> Result<()> {
    if values.len() != n_bands * n_bins || n_bins == 0 {
        return Err(KshsError::StructureMismatch(format!(
            "histogram of length {} is not {n_bands} bands x {n_bins} bins",
            values.len()
        )));
    }
    for (band, block) in values.chunks(n_bins).enumerate() {
        if block.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(KshsError::InvalidArgument(format!("band {band} has a negative or non-finite mass")));
        }
        let total: f64 = block.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(KshsError::InvalidArgument(format!("band {band} sums to {total}, not 1")));
        }
    }
    Ok(())
}

/// Histogram vectors of `N` frames stored as the columns of a
/// `(N_bands·N_bins) × N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramMatrix {
    columns: DMatrix<f64>,
    n_bands: usize,
    n_bins: usize,
    normalized: bool,
}

impl HistogramMatrix {
    pub fn new(columns: DMatrix<f64>, n_bands: usize, n_bins: usize, normalized: bool) -> Result<Self> {
        if columns.ncols() == 0 {
            return Err(KshsError::Empty("histogram matrix without columns".into()));
        }
        for col in columns.column_iter() {
            check_column(col.as_slice(), n_bands, n_bins)?;
        }
        Ok(Self {
            columns,
            n_bands,
            n_bins,
            normalized,
        })
    }

    pub fn from_vectors(vectors: &[HistogramVector], normalized: bool) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| KshsError::Empty("histogram matrix without columns".into()))?;
        let (n_bands, n_bins) = (first.n_bands, first.n_bins);
        if vectors.iter().any(|v| v.n_bands != n_bands || v.n_bins != n_bins) {
            return Err(KshsError::StructureMismatch("histogram vectors differ in layout".into()));
        }
        let columns = DMatrix::from_fn(n_bands * n_bins, vectors.len(), |r, c| vectors[c].values[r]);
        Ok(Self {
            columns,
            n_bands,
            n_bins,
            normalized,
        })
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn column(&self, index: usize) -> HistogramVector {
        HistogramVector {
            values: self.columns.column(index).into_owned(),
            n_bands: self.n_bands,
            n_bins: self.n_bins,
        }
    }

    /// Columns at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(KshsError::Empty("column selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(KshsError::InvalidArgument(format!("column {bad} out of range")));
        }
        Ok(Self {
            columns: self.columns.select_columns(indices),
            n_bands: self.n_bands,
            n_bins: self.n_bins,
            normalized: self.normalized,
        })
    }

    /// Horizontal concatenation of matrices with identical layout.
    pub fn concat(parts: &[&HistogramMatrix]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| KshsError::Empty("nothing to concatenate".into()))?;
        if parts.iter().any(|p| !p.same_layout(first)) {
            return Err(KshsError::StructureMismatch("histogram matrices differ in layout".into()));
        }
        let total: usize = parts.iter().map(|p| p.len()).sum();
        let mut columns = DMatrix::zeros(first.dim(), total);
        let mut offset = 0;
        for part in parts {
            columns.columns_mut(offset, part.len()).copy_from(&part.columns);
            offset += part.len();
        }
        Ok(Self {
            columns,
            n_bands: first.n_bands,
            n_bins: first.n_bins,
            normalized: first.normalized,
        })
    }

    pub fn same_layout(&self, other: &HistogramMatrix) -> bool {
        self.n_bands == other.n_bands && self.n_bins == other.n_bins
    }

    /// Wraps columns that are known to be stochastic up to rounding,
    /// renormalizing every block to sum to one.
    pub(crate) fn renormalized(mut columns: DMatrix<f64>, n_bands: usize, n_bins: usize, normalized: bool) -> Self {
        for mut col in columns.column_iter_mut() {
            for band in 0..n_bands {
                let mut block = col.rows_mut(band * n_bins, n_bins);
                block.apply(|v| *v = v.max(0.0));
                let total = block.sum();
                if total > 0.0 {
                    block /= total;
                } else {
                    block.fill(1.0 / n_bins as f64);
                }
            }
        }
        Self {
            columns,
            n_bands,
            n_bins,
            normalized,
        }
    }
}

/// Dataset-level upper bin edges: the `quantile` level of the pooled
/// coefficients of each subband, floored at [`EDGE_FLOOR`].
pub fn calibrate_bins(sample_maps: &[ScatteringMaps], n_bins: usize, quantile: f64) -> Result<BinEdges> {
    let first = sample_maps
        .first()
        .ok_or_else(|| KshsError::Empty("calibration sample".into()))?;
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(KshsError::InvalidArgument(format!("quantile {quantile} outside (0, 1]")));
    }
    if sample_maps.iter().any(|s| s.paths() != first.paths()) {
        return Err(KshsError::StructureMismatch(
            "calibration maps have different path structure".into(),
        ));
    }
    let upper = (0..first.len())
        .map(|band| {
            let mut pooled: Vec<f64> = sample_maps
                .iter()
                .flat_map(|s| s.maps()[band].values().iter().copied())
                .collect();
            pooled.sort_by(f64::total_cmp);
            let rank = ((quantile * pooled.len() as f64).ceil() as usize).clamp(1, pooled.len());
            pooled[rank - 1].max(EDGE_FLOOR)
        })
        .collect();
    BinEdges::new(upper, n_bins)
}

/// Histogram vector of one frame's subbands.
pub fn subband_histograms(maps: &ScatteringMaps, edges: &BinEdges) -> Result<HistogramVector> {
    if maps.len() != edges.n_bands() {
        return Err(KshsError::StructureMismatch(format!(
            "{} subbands but {} bin edges",
            maps.len(),
            edges.n_bands()
        )));
    }
    let n_bins = edges.n_bins();
    let mut values = DVector::zeros(maps.len() * n_bins);
    for (band, map) in maps.maps().iter().enumerate() {
        let coeffs = map.values();
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(KshsError::InvalidArgument(format!("subband {band} has non-finite coefficients")));
        }
        let mass = 1.0 / coeffs.len() as f64;
        for &v in coeffs {
            values[band * n_bins + edges.bin_of(band, v)] += mass;
        }
    }
    Ok(HistogramVector {
        values,
        n_bands: maps.len(),
        n_bins,
    })
}

/// Histogram matrix of a frame sequence; column `t` belongs to frame `t`.
pub fn build_histogram_matrix(
    frames: &[FrameImage],
    bank: &FilterBank,
    edges: &BinEdges,
    depth: usize,
    normalized: bool,
) -> Result<HistogramMatrix> {
    if frames.is_empty() {
        return Err(KshsError::Empty("video without frames".into()));
    }
    let vectors = frames
        .par_iter()
        .map(|frame| {
            let maps = frame_subbands(frame, bank, depth, normalized)?;
            subband_histograms(&maps, edges)
        })
        .collect::<Result<Vec<_>>>()?;
    HistogramMatrix::from_vectors(&vectors, normalized)
}
