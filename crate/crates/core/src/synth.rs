//! Synthetic data: a seeded dynamic-texture corpus on disk, and random
//! histogram descriptors for exercising the metric and mean code.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::calibration::Fingerprint;
use crate::error::Result;
use crate::histogram::{BinEdges, HistogramMatrix};
use crate::io::frames::save_frame;
use crate::io::manifest::{DatasetManifest, ManifestEntry};
use crate::scattering::{bin_frequency, Fft2, Grid};
use crate::subspace::{descriptor_from_histograms, KernelSubspace, SubspaceParams, SupportStrategy};

/// Log-radial and angular bandwidths of the texture spectra.
const RADIAL_SIGMA: f64 = 0.35;
const ANGULAR_SIGMA: f64 = 0.25;
/// Weight of the isotropic broadband component shared by all families.
const BACKGROUND: f64 = 0.15;
/// Standard deviation of the rendered intensities around mid-gray.
const CONTRAST: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub classes: usize,
    pub videos_per_class: usize,
    pub frames: usize,
    /// Frame size `(H, W)`; also the manifest working size.
    pub size: (usize, usize),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            videos_per_class: 10,
            frames: 40,
            size: (128, 128),
            seed: 7,
        }
    }
}

/// Dominant orientation and radial frequency (radians per pixel) of a
/// texture family.
pub fn family_spectrum(class: usize, classes: usize) -> (f64, f64) {
    let theta = PI * class as f64 / classes.max(1) as f64;
    let radius = 1.2 * 0.6f64.powi((class % 4) as i32);
    (theta, radius)
}

/// Spectral amplitude of a family: log-normal in radius and Gaussian in
/// orientation (modulo π, so the field is real and symmetric), over a weak
/// isotropic `1/f`-like background.
fn band_amplitude(wy: f64, wx: f64, theta: f64, radius: f64) -> f64 {
    let r = wy.hypot(wx);
    if r == 0.0 {
        return 0.0;
    }
    let radial = (r / radius).ln() / RADIAL_SIGMA;
    let mut angle = (wy.atan2(wx) - theta).rem_euclid(PI);
    if angle > PI / 2.0 {
        angle -= PI;
    }
    let band = (-0.5 * radial * radial).exp() * (-0.5 * (angle / ANGULAR_SIGMA).powi(2)).exp();
    band + BACKGROUND / (1.0 + r / 0.3)
}

/// One video: oriented band-filtered Gaussian noise translating at a
/// constant sub-pixel velocity. Translation is a phase ramp, so it is exact
/// and periodic.
fn render_video(class: usize, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Grid> {
    let (theta, radius) = family_spectrum(class, config.classes);
    let (h, w) = config.size;
    let normal = Normal::<f64>::new(0.0, 1.0).expect("unit normal");
    let mut spectrum = Vec::with_capacity(h * w);
    for ky in 0..h {
        for kx in 0..w {
            let (wy, wx) = (bin_frequency(ky, h), bin_frequency(kx, w));
            let amplitude = band_amplitude(wy, wx, theta, radius);
            let noise = Complex64::new(normal.sample(rng), normal.sample(rng));
            spectrum.push((wy, wx, noise * amplitude));
        }
    }
    let speed = 0.5 + rng.random::<f64>();
    let heading = rng.random::<f64>() * 2.0 * PI;
    let (vy, vx) = (speed * heading.sin(), speed * heading.cos());

    let fft = Fft2::new(h, w);
    let mut scale = None;
    (0..config.frames)
        .map(|t| {
            let (dy, dx) = (vy * t as f64, vx * t as f64);
            let mut buf: Vec<Complex64> = spectrum
                .iter()
                .map(|&(wy, wx, s)| s * Complex64::from_polar(1.0, -(wy * dy + wx * dx)))
                .collect();
            fft.inverse(&mut buf);
            // translation preserves energy, so the first frame fixes the contrast
            let scale = *scale.get_or_insert_with(|| {
                let var = buf.iter().map(|c| c.re * c.re).sum::<f64>() / buf.len() as f64;
                CONTRAST / var.sqrt().max(f64::MIN_POSITIVE)
            });
            Grid::from_fn(h, w, |y, x| (0.5 + scale * buf[y * w + x].re).clamp(0.0, 1.0))
        })
        .collect()
}

fn video_seed(seed: u64, class: usize, video: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((class as u64) << 32) | video as u64)
}

/// Frames of one corpus video, exactly as [`generate_synthetic_corpus`]
/// renders them before 8-bit quantization.
pub fn synthetic_video(config: &SynthConfig, class: usize, video: usize) -> Vec<Grid> {
    let mut rng = ChaCha8Rng::seed_from_u64(video_seed(config.seed, class, video));
    render_video(class, config, &mut rng)
}

/// Writes `classes × videos_per_class` frame directories of 8-bit PGM
/// frames plus `manifest.json` under `out_dir`.
pub fn generate_synthetic_corpus(out_dir: &Path, config: &SynthConfig) -> Result<DatasetManifest> {
    let jobs: Vec<(usize, usize)> = (0..config.classes)
        .flat_map(|c| (0..config.videos_per_class).map(move |v| (c, v)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(class, video)| {
            let id = format!("class{class}_video{video:02}");
            let rel = PathBuf::from("frames").join(&id);
            let dir = out_dir.join(&rel);
            fs::create_dir_all(&dir)?;
            for (t, frame) in synthetic_video(config, class, video).iter().enumerate() {
                save_frame(&dir.join(format!("frame_{t:04}.pgm")), frame)?;
            }
            Ok(ManifestEntry {
                id,
                frames_dir: rel,
                label: format!("class{class}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(entries, [config.size.0, config.size.1])?;
    manifest.save(&out_dir.join("manifest.json"))?;
    DatasetManifest::load(&out_dir.join("manifest.json"))
}

/// Fingerprint shared by all randomly generated descriptors.
pub const RANDOM_FINGERPRINT: Fingerprint = Fingerprint([0x5a; 32]);

/// Shape of randomly generated descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub n_bands: usize,
    pub n_bins: usize,
    pub frames: usize,
    pub support: usize,
    pub dim: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            n_bands: 3,
            n_bins: 4,
            frames: 12,
            support: 8,
            dim: 3,
        }
    }
}

/// Random histogram matrix whose blocks mix one of a few shared prototypes
/// with noise, so that independently drawn matrices overlap in feature
/// space.
pub fn random_histograms<R: Rng>(rng: &mut R, n_bands: usize, n_bins: usize, columns: usize) -> HistogramMatrix {
    let mut prototype_rng = ChaCha8Rng::seed_from_u64(0x1234);
    let prototypes: Vec<Vec<f64>> = (0..3 * n_bands)
        .map(|_| (0..n_bins).map(|_| prototype_rng.random::<f64>().powi(2)).collect())
        .collect();
    let mut data = DMatrix::zeros(n_bands * n_bins, columns);
    for c in 0..columns {
        for band in 0..n_bands {
            let proto = &prototypes[band * 3 + rng.random_range(0..3)];
            for bin in 0..n_bins {
                data[(band * n_bins + bin, c)] = proto[bin] + 0.6 * rng.random::<f64>().powi(2);
            }
        }
    }
    HistogramMatrix::renormalized(data, n_bands, n_bins, false)
}

/// Random descriptor built by the regular Kernel PCA + Nyström route.
pub fn random_descriptor<R: Rng>(rng: &mut R, spec: &RandomSpec) -> Result<KernelSubspace> {
    let h = random_histograms(rng, spec.n_bands, spec.n_bins, spec.frames);
    let edges = BinEdges::new(vec![1.0; spec.n_bands], spec.n_bins)?;
    descriptor_from_histograms(
        &h,
        &edges,
        RANDOM_FINGERPRINT,
        &SubspaceParams {
            dim: spec.dim,
            support: spec.support,
            strategy: SupportStrategy::UniformStride,
        },
    )
}

/// Haar-distributed random orthogonal `n × n` matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let a = DMatrix::from_fn(n, n, |_, _| normal.sample(rng));
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for (k, mut col) in q.column_iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}
