//! Helpers shared by the integration tests.

#![allow(dead_code)]

use kshs::histogram::HistogramMatrix;
use kshs::scattering::{FrameImage, Grid};
use kshs::synth::{random_descriptor, random_histograms, synthetic_video, RandomSpec, SynthConfig};
use kshs::KernelSubspace;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_set(seed: u64, count: usize, spec: &RandomSpec) -> Vec<KernelSubspace> {
    let mut rng = rng(seed);
    (0..count).map(|_| random_descriptor(&mut rng, spec).unwrap()).collect()
}

pub fn spec_with_dim(dim: usize) -> RandomSpec {
    RandomSpec {
        dim,
        ..RandomSpec::default()
    }
}

/// Random frame with intensities in `[0, 1]`.
pub fn random_frame<R: Rng>(rng: &mut R, h: usize, w: usize) -> FrameImage {
    FrameImage::new(Grid::from_fn(h, w, |_, _| rng.random::<f64>())).unwrap()
}

/// Frames of a synthetic corpus video at the given size.
pub fn synthetic_frames(class: usize, video: usize, frames: usize, size: usize) -> Vec<FrameImage> {
    let config = SynthConfig {
        frames,
        size: (size, size),
        ..SynthConfig::default()
    };
    synthetic_video(&config, class, video)
        .into_iter()
        .map(|g| FrameImage::new(g).unwrap())
        .collect()
}

/// Sparse random histogram batch: some bins are empty, as with real
/// scattering histograms.
pub fn random_batch<R: Rng>(rng: &mut R, n_bands: usize, n_bins: usize, columns: usize) -> HistogramMatrix {
    let dense = random_histograms(rng, n_bands, n_bins, columns);
    let mut data = dense.columns().clone();
    for v in data.iter_mut() {
        if rng.random::<f64>() < 0.3 {
            *v = 0.0;
        }
    }
    for c in 0..columns {
        for band in 0..n_bands {
            let range = band * n_bins..(band + 1) * n_bins;
            let sum: f64 = range.clone().map(|r| data[(r, c)]).sum();
            if sum == 0.0 {
                data[(band * n_bins, c)] = 1.0;
            } else {
                range.for_each(|r| data[(r, c)] /= sum);
            }
        }
    }
    HistogramMatrix::new(data, n_bands, n_bins, false).unwrap()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}
