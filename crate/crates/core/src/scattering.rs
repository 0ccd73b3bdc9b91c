//! Two-dimensional Morlet filter bank and the depth-limited scattering
//! transform of a single frame.
//!
//! All convolutions are periodic and carried out as products in the
//! discrete Fourier domain. Retained lowpass maps are average-pooled onto a
//! grid that is `2^J` times coarser than the input.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{KshsError, Result};

/// Spatial width of the Morlet envelope at scale `2^0`.
const SIGMA0: f64 = 0.8;
/// Center frequency of the finest bandpass, radians per pixel.
const XI0: f64 = 3.0 * PI / 4.0;
/// Relative floor used when normalizing by frame averages and parent maps.
pub const NORMALIZATION_EPS: f64 = 1e-12;

/// A dense real-valued 2-D grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(KshsError::Dimension(format!(
                "grid {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Circular shift by `(dy, dx)` pixels.
    pub fn rolled(&self, dy: usize, dx: usize) -> Self {
        Self::from_fn(self.height, self.width, |y, x| {
            self.get(
                (y + self.height - dy % self.height) % self.height,
                (x + self.width - dx % self.width) % self.width,
            )
        })
    }
}

/// One grayscale video frame with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    grid: Grid,
}

impl FrameImage {
    pub fn new(grid: Grid) -> Result<Self> {
        if let Some(bad) = grid.values().iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(KshsError::InvalidArgument(format!(
                "frame intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self { grid })
    }

    pub fn from_pixels(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::new(Grid::new(height, width, pixels)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    /// Division floor for normalized scattering, relative to the frame's
    /// dynamic range so that scaling the frame scales the floor.
    pub fn normalization_eps(&self) -> f64 {
        let range = self.grid.max() - self.grid.min();
        let scale = if range > 0.0 { range } else { self.grid.max() };
        (NORMALIZATION_EPS * scale).max(f64::MIN_POSITIVE)
    }
}

/// Parameters of the scattering front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScatteringConfig {
    pub scales: usize,
    pub orientations: usize,
    pub depth: usize,
    /// Frames are resampled to `(height, width)` before scattering.
    pub working_size: (usize, usize),
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            scales: 4,
            orientations: 4,
            depth: 2,
            working_size: (128, 128),
        }
    }
}

impl ScatteringConfig {
    pub fn band_count(&self) -> usize {
        band_count(self.scales, self.orientations, self.depth)
    }

    pub fn filter_bank(&self) -> Result<FilterBank> {
        if !(1..=2).contains(&self.depth) {
            return Err(KshsError::UnsupportedDepth(self.depth));
        }
        build_filter_bank(
            self.scales,
            self.orientations,
            self.working_size.0,
            self.working_size.1,
        )
    }
}

/// Number of retained subbands for `J` scales, `L` orientations and depth
/// `M`, with second-order paths restricted to `j2 > j1`.
pub fn band_count(scales: usize, orientations: usize, depth: usize) -> usize {
    let first = scales * orientations;
    match depth {
        0 => 1,
        1 => 1 + first,
        _ => 1 + first + orientations * orientations * scales * scales.saturating_sub(1) / 2,
    }
}

/// Row/column 2-D FFT on a fixed grid size.
#[derive(Clone)]
pub(crate) struct Fft2 {
    height: usize,
    width: usize,
    row_forward: Arc<dyn Fft<f64>>,
    row_inverse: Arc<dyn Fft<f64>>,
    col_forward: Arc<dyn Fft<f64>>,
    col_inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_forward: planner.plan_fft_forward(width),
            row_inverse: planner.plan_fft_inverse(width),
            col_forward: planner.plan_fft_forward(height),
            col_inverse: planner.plan_fft_inverse(height),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_forward, &self.col_forward);
    }

    /// Normalized inverse transform.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inverse, &self.col_inverse);
        let scale = 1.0 / (self.height * self.width) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        rows.process(data);
        let mut transposed = vec![Complex64::new(0.0, 0.0); h * w];
        for y in 0..h {
            for x in 0..w {
                transposed[x * h + y] = data[y * w + x];
            }
        }
        cols.process(&mut transposed);
        for x in 0..w {
            for y in 0..h {
                data[y * w + x] = transposed[x * h + y];
            }
        }
    }
}

/// Frequency-domain Gaussian lowpass plus `J·L` Morlet bandpass filters.
#[derive(Clone)]
pub struct FilterBank {
    scales: usize,
    orientations: usize,
    height: usize,
    width: usize,
    lowpass: Vec<f64>,
    /// Indexed by `scale * orientations + orientation`.
    bandpass: Vec<Vec<f64>>,
    littlewood_paley_bound: f64,
    /// Lowpass times the `2^J` box average, for pooling by spectral folding.
    pooling: Vec<Complex64>,
    fft: Fft2,
    coarse_fft: Fft2,
}

impl fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterBank")
            .field("scales", &self.scales)
            .field("orientations", &self.orientations)
            .field("height", &self.height)
            .field("width", &self.width)
            .field("littlewood_paley_bound", &self.littlewood_paley_bound)
            .finish_non_exhaustive()
    }
}

/// Signed angular frequency of DFT bin `k` on an `n`-point axis.
pub(crate) fn bin_frequency(k: usize, n: usize) -> f64 {
    let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * signed / n as f64
}

/// DFT of the forward box average `(1/B) Σ_{d<B} v[m + d]` on an `n`-point
/// axis.
fn box_response(block: usize, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let sum: Complex64 = (0..block)
                .map(|d| Complex64::from_polar(1.0, 2.0 * PI * (k * d % n) as f64 / n as f64))
                .sum();
            sum / block as f64
        })
        .collect()
}

/// Builds the filter bank for `J` dyadic scales and `L` orientations on an
/// `H×W` grid.
///
/// Bandpass filters are rescaled by a common factor so that
/// `|φ̂|² + Σ|ψ̂|² ≤ 1` at every frequency while the lowpass keeps unit gain
/// at DC.
pub fn build_filter_bank(scales: usize, orientations: usize, height: usize, width: usize) -> Result<FilterBank> {
    if scales == 0 || orientations == 0 {
        return Err(KshsError::InvalidArgument(
            "filter bank needs at least one scale and one orientation".into(),
        ));
    }
    let min_side = 1usize.checked_shl(scales as u32).unwrap_or(usize::MAX);
    if height < min_side || width < min_side {
        return Err(KshsError::Dimension(format!(
            "frame {height}x{width} is smaller than 2^J = {min_side}"
        )));
    }

    let freqs: Vec<(f64, f64)> = (0..height)
        .flat_map(|ky| (0..width).map(move |kx| (bin_frequency(ky, height), bin_frequency(kx, width))))
        .collect();

    let sigma_low = SIGMA0 * (1u64 << scales) as f64;
    let lowpass: Vec<f64> = freqs
        .iter()
        .map(|(wy, wx)| (-0.5 * sigma_low * sigma_low * (wy * wy + wx * wx)).exp())
        .collect();

    let mut bandpass = Vec::with_capacity(scales * orientations);
    for j in 0..scales {
        let sigma = SIGMA0 * (1u64 << j) as f64;
        let xi = XI0 / (1u64 << j) as f64;
        let s2 = sigma * sigma;
        let beta = (-0.5 * s2 * xi * xi).exp();
        for l in 0..orientations {
            let theta = PI * l as f64 / orientations as f64;
            let (cy, cx) = (xi * theta.sin(), xi * theta.cos());
            let filter: Vec<f64> = freqs
                .iter()
                .map(|&(wy, wx)| {
                    let gabor = (-0.5 * s2 * ((wy - cy).powi(2) + (wx - cx).powi(2))).exp();
                    let envelope = (-0.5 * s2 * (wy * wy + wx * wx)).exp();
                    gabor - beta * envelope
                })
                .collect();
            bandpass.push(filter);
        }
    }

    let band_energy: Vec<f64> = (0..freqs.len())
        .map(|i| bandpass.iter().map(|f| f[i] * f[i]).sum())
        .collect();
    // bins with rounding-level bandpass energy (DC) carry no constraint
    let significant = 1e-8 * band_energy.iter().copied().fold(0.0, f64::max);
    let mut gain_sq = 1.0f64;
    for (i, &energy) in band_energy.iter().enumerate() {
        if energy > significant {
            gain_sq = gain_sq.min((1.0 - lowpass[i] * lowpass[i]) / energy);
        }
    }
    let gain = gain_sq.max(0.0).sqrt();
    for filter in &mut bandpass {
        filter.iter_mut().for_each(|v| *v *= gain);
    }
    let littlewood_paley_bound = (0..freqs.len())
        .map(|i| lowpass[i] * lowpass[i] + gain_sq * band_energy[i])
        .fold(0.0, f64::max);

    let block = 1usize << scales;
    let box_y = box_response(block, height);
    let box_x = box_response(block, width);
    let alias = 1.0 / (block * block) as f64;
    let pooling = lowpass
        .iter()
        .enumerate()
        .map(|(i, &g)| box_y[i / width] * box_x[i % width] * (g * alias))
        .collect();

    Ok(FilterBank {
        scales,
        orientations,
        height,
        width,
        lowpass,
        bandpass,
        littlewood_paley_bound,
        pooling,
        fft: Fft2::new(height, width),
        coarse_fft: Fft2::new(height / block, width / block),
    })
}

impl FilterBank {
    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn orientations(&self) -> usize {
        self.orientations
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bandpass_count(&self) -> usize {
        self.bandpass.len()
    }

    pub fn littlewood_paley_bound(&self) -> f64 {
        self.littlewood_paley_bound
    }

    /// Frequency response of the lowpass filter, row-major.
    pub fn lowpass_response(&self) -> &[f64] {
        &self.lowpass
    }

    /// Frequency response of bandpass `(scale, orientation)`, row-major.
    pub fn bandpass_response(&self, scale: usize, orientation: usize) -> &[f64] {
        &self.bandpass[scale * self.orientations + orientation]
    }

    /// Peak frequency `(ω_y, ω_x)` of bandpass `(scale, orientation)`.
    pub fn center_frequency(&self, scale: usize, orientation: usize) -> (f64, f64) {
        let xi = XI0 / (1u64 << scale) as f64;
        let theta = PI * orientation as f64 / self.orientations as f64;
        (xi * theta.sin(), xi * theta.cos())
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.height != self.height || grid.width != self.width {
            return Err(KshsError::Dimension(format!(
                "grid {}x{} does not match filter bank {}x{}",
                grid.height, grid.width, self.height, self.width
            )));
        }
        Ok(())
    }

    fn spectrum(&self, grid: &Grid) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = grid.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        buf
    }

    fn filtered(&self, spectrum: &[Complex64], filter: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum.iter().zip(filter).map(|(s, f)| s * f).collect();
        self.fft.inverse(&mut buf);
        buf
    }

    fn lowpass_real(&self, spectrum: &[Complex64]) -> Grid {
        let out = self.filtered(spectrum, &self.lowpass);
        Grid {
            height: self.height,
            width: self.width,
            data: out.iter().map(|c| c.re).collect(),
        }
    }

    fn rectified(&self, spectrum: &[Complex64], index: usize) -> Grid {
        let out = self.filtered(spectrum, &self.bandpass[index]);
        Grid {
            height: self.height,
            width: self.width,
            data: out.iter().map(|c| c.norm()).collect(),
        }
    }

    /// Spectrum of `a + i·b` for real grids; `b` defaults to zero.
    fn packed_spectrum(&self, a: &Grid, b: Option<&Grid>) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = match b {
            Some(b) => a.data.iter().zip(&b.data).map(|(&re, &im)| Complex64::new(re, im)).collect(),
            None => a.data.iter().map(|&re| Complex64::new(re, 0.0)).collect(),
        };
        self.fft.forward(&mut buf);
        buf
    }

    /// Separates the spectrum of `a + i·b` into the spectra of `a` and `b`
    /// using conjugate symmetry of real signals.
    fn split_packed(&self, packed: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let (h, w) = (self.height, self.width);
        let mut a = Vec::with_capacity(packed.len());
        let mut b = Vec::with_capacity(packed.len());
        for ky in 0..h {
            for kx in 0..w {
                let z = packed[ky * w + kx];
                let mirror = packed[((h - ky) % h) * w + (w - kx) % w].conj();
                a.push((z + mirror) * 0.5);
                b.push((z - mirror) * Complex64::new(0.0, -0.5));
            }
        }
        (a, b)
    }

    /// Lowpass-filters and average-pools onto the `2^J`-coarser grid in one
    /// step by folding the spectrum. The real and imaginary parts of the
    /// result are the pooled maps of the real and imaginary parts of the
    /// input; rounding negatives are clamped to zero.
    fn pooled_lowpass(&self, spectrum: &[Complex64]) -> (Grid, Grid) {
        let block = 1usize << self.scales;
        let (h, w) = (self.height / block, self.width / block);
        let mut coarse = vec![Complex64::new(0.0, 0.0); h * w];
        for ky in 0..self.height {
            let row = (ky % h) * w;
            let offset = ky * self.width;
            for kx in 0..self.width {
                coarse[row + kx % w] += spectrum[offset + kx] * self.pooling[offset + kx];
            }
        }
        self.coarse_fft.inverse(&mut coarse);
        let part = |f: fn(&Complex64) -> f64| Grid {
            height: h,
            width: w,
            data: coarse.iter().map(|c| f(c).max(0.0)).collect(),
        };
        (part(|c| c.re), part(|c| c.im))
    }
}

/// One application of the filter-bank operator: the (unrectified) lowpass
/// output and the `J·L` modulus bandpass outputs, all at input resolution.
pub fn psi_decompose(x: &Grid, bank: &FilterBank) -> Result<(Grid, Vec<Grid>)> {
    bank.check_grid(x)?;
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(KshsError::InvalidArgument("non-finite input to filter bank".into()));
    }
    let spectrum = bank.spectrum(x);
    let low = bank.lowpass_real(&spectrum);
    let bands = (0..bank.bandpass.len()).map(|i| bank.rectified(&spectrum, i)).collect();
    Ok((low, bands))
}

/// One step along a scattering path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathStep {
    pub scale: usize,
    pub orientation: usize,
}

/// Identifier of a retained subband; its order is the number of steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScatteringPath(pub Vec<PathStep>);

impl ScatteringPath {
    pub fn order(&self) -> usize {
        self.0.len()
    }
}

/// Enumerates retained paths in canonical order: order 0, then order 1 by
/// `(j1, l1)`, then order 2 by `(j1, l1, j2, l2)` with `j2 > j1`.
pub fn enumerate_paths(scales: usize, orientations: usize, depth: usize) -> Vec<ScatteringPath> {
    let mut paths = vec![ScatteringPath(Vec::new())];
    if depth >= 1 {
        for j1 in 0..scales {
            for l1 in 0..orientations {
                paths.push(ScatteringPath(vec![PathStep { scale: j1, orientation: l1 }]));
            }
        }
    }
    if depth >= 2 {
        for j1 in 0..scales {
            for l1 in 0..orientations {
                for j2 in (j1 + 1)..scales {
                    for l2 in 0..orientations {
                        paths.push(ScatteringPath(vec![
                            PathStep { scale: j1, orientation: l1 },
                            PathStep { scale: j2, orientation: l2 },
                        ]));
                    }
                }
            }
        }
    }
    paths
}

/// Retained lowpass subbands of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMaps {
    paths: Vec<ScatteringPath>,
    maps: Vec<Grid>,
    orientations: usize,
    normalized: bool,
}

impl ScatteringMaps {
    /// Unnormalized maps in canonical path order for `(J, L, M)`; every map
    /// must share one shape and hold finite nonnegative values.
    pub fn new(scales: usize, orientations: usize, depth: usize, maps: Vec<Grid>) -> Result<Self> {
        let paths = enumerate_paths(scales, orientations, depth);
        if maps.len() != paths.len() {
            return Err(KshsError::StructureMismatch(format!(
                "{} maps for {} paths",
                maps.len(),
                paths.len()
            )));
        }
        if let Some(first) = maps.first() {
            if maps.iter().any(|m| (m.height, m.width) != (first.height, first.width)) {
                return Err(KshsError::Dimension("scattering maps differ in shape".into()));
            }
        }
        if maps.iter().flat_map(|m| &m.data).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(KshsError::InvalidArgument(
                "scattering coefficients must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            paths,
            maps,
            orientations,
            normalized: false,
        })
    }

    pub fn paths(&self) -> &[ScatteringPath] {
        &self.paths
    }

    pub fn maps(&self) -> &[Grid] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    fn parent_index(&self, path: &ScatteringPath) -> usize {
        let first = path.0[0];
        1 + first.scale * self.orientations + first.orientation
    }
}

/// Depth-`M` scattering transform of a frame (`M ∈ {1, 2}`).
pub fn scattering_transform(frame: &FrameImage, bank: &FilterBank, depth: usize) -> Result<ScatteringMaps> {
    if !(1..=2).contains(&depth) {
        return Err(KshsError::UnsupportedDepth(depth));
    }
    let x = frame.grid();
    bank.check_grid(x)?;
    let (scales, orientations) = (bank.scales, bank.orientations);
    let paths = enumerate_paths(scales, orientations, depth);
    let mut order1 = Vec::with_capacity(scales * orientations);
    let mut order2 = Vec::new();

    let spectrum = bank.spectrum(x);
    let order0 = bank.pooled_lowpass(&spectrum).0;
    for j1 in 0..scales {
        let rectified: Vec<Grid> = (0..orientations)
            .map(|l1| bank.rectified(&spectrum, j1 * orientations + l1))
            .collect();
        for pair in rectified.chunks(2) {
            let packed = bank.packed_spectrum(&pair[0], pair.get(1));
            let (first, second) = bank.pooled_lowpass(&packed);
            order1.push(first);
            let spectra = if pair.len() == 2 {
                let (a, b) = bank.split_packed(&packed);
                order1.push(second);
                vec![a, b]
            } else {
                vec![packed]
            };
            if depth < 2 {
                continue;
            }
            for u1_spectrum in &spectra {
                for j2 in (j1 + 1)..scales {
                    let u2: Vec<Grid> = (0..orientations)
                        .map(|l2| bank.rectified(u1_spectrum, j2 * orientations + l2))
                        .collect();
                    for u2_pair in u2.chunks(2) {
                        let (first, second) = bank.pooled_lowpass(&bank.packed_spectrum(&u2_pair[0], u2_pair.get(1)));
                        order2.push(first);
                        if u2_pair.len() == 2 {
                            order2.push(second);
                        }
                    }
                }
            }
        }
    }

    let mut maps = Vec::with_capacity(paths.len());
    maps.push(order0);
    maps.extend(order1);
    maps.extend(order2);
    debug_assert_eq!(maps.len(), paths.len());
    Ok(ScatteringMaps {
        paths,
        maps,
        orientations,
        normalized: false,
    })
}

/// Normalized scattering: order-1 maps are divided by the frame average,
/// order-2 maps elementwise by their order-1 parent. Divisors are floored
/// at `eps`.
pub fn normalize_subbands(maps: &ScatteringMaps, frame_avg: f64, eps: f64) -> Result<ScatteringMaps> {
    if maps.normalized {
        return Err(KshsError::AlreadyNormalized);
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(KshsError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let avg = frame_avg.max(eps);
    let normalized = maps
        .paths
        .iter()
        .zip(&maps.maps)
        .map(|(path, map)| match path.order() {
            0 => map.clone(),
            1 => map.scaled(1.0 / avg),
            _ => {
                let parent = &maps.maps[maps.parent_index(path)];
                Grid {
                    height: map.height,
                    width: map.width,
                    data: map
                        .data
                        .iter()
                        .zip(&parent.data)
                        .map(|(v, p)| v / p.max(eps))
                        .collect(),
                }
            }
        })
        .collect();
    Ok(ScatteringMaps {
        paths: maps.paths.clone(),
        maps: normalized,
        orientations: maps.orientations,
        normalized: true,
    })
}

/// Scattering followed by optional normalization, as used by the pipeline.
pub fn frame_subbands(frame: &FrameImage, bank: &FilterBank, depth: usize, normalized: bool) -> Result<ScatteringMaps> {
    let maps = scattering_transform(frame, bank, depth)?;
    if normalized {
        normalize_subbands(&maps, frame.grid().mean(), frame.normalization_eps())
    } else {
        Ok(maps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_frame(h: usize, w: usize) -> FrameImage {
        FrameImage::new(Grid::from_fn(h, w, |y, x| {
            0.5 + 0.25 * ((y as f64 * 0.7).sin() * (x as f64 * 0.31).cos())
        }))
        .unwrap()
    }

    #[test]
    fn bank_shapes_and_errors() {
        let bank = build_filter_bank(4, 4, 64, 64).unwrap();
        assert_eq!(bank.bandpass_count(), 16);
        assert!(bank.littlewood_paley_bound() <= 1.0 + 1e-6);
        let tiny = build_filter_bank(1, 1, 2, 2).unwrap();
        assert_eq!(tiny.bandpass_count(), 1);
        assert!(matches!(build_filter_bank(4, 4, 8, 8), Err(KshsError::Dimension(_))));
    }

    #[test]
    fn bandpass_filters_have_zero_mean() {
        let bank = build_filter_bank(4, 4, 64, 64).unwrap();
        for j in 0..4 {
            for l in 0..4 {
                assert!(bank.bandpass_response(j, l)[0].abs() < 1e-6);
            }
        }
        assert_eq!(bank.lowpass_response()[0], 1.0);
    }

    #[test]
    fn band_count_examples() {
        assert_eq!(band_count(4, 4, 2), 113);
        assert_eq!(band_count(1, 1, 2), 2);
        assert_eq!(band_count(4, 4, 1), 17);
        for j in 1..=4 {
            for l in 1..=4 {
                for m in 1..=2 {
                    assert_eq!(enumerate_paths(j, l, m).len(), band_count(j, l, m));
                }
            }
        }
    }

    #[test]
    fn path_order_is_canonical() {
        let paths = enumerate_paths(3, 2, 2);
        assert_eq!(paths[0].order(), 0);
        let mut sorted = paths[1..].to_vec();
        sorted.sort_by(|a, b| a.order().cmp(&b.order()).then(a.cmp(b)));
        assert_eq!(&paths[1..], sorted.as_slice());
    }

    #[test]
    fn zero_frame_gives_zero_outputs() {
        let bank = build_filter_bank(2, 2, 16, 16).unwrap();
        let (low, bands) = psi_decompose(&Grid::filled(16, 16, 0.0), &bank).unwrap();
        assert_eq!(low.max(), 0.0);
        assert!(bands.iter().all(|b| b.max() == 0.0));
    }

    #[test]
    fn depth_three_is_rejected() {
        let bank = build_filter_bank(2, 2, 16, 16).unwrap();
        let frame = ramp_frame(16, 16);
        assert!(matches!(
            scattering_transform(&frame, &bank, 3),
            Err(KshsError::UnsupportedDepth(3))
        ));
    }

    #[test]
    fn mismatched_frame_is_rejected() {
        let bank = build_filter_bank(2, 2, 16, 16).unwrap();
        let frame = ramp_frame(32, 16);
        assert!(matches!(scattering_transform(&frame, &bank, 2), Err(KshsError::Dimension(_))));
    }

    #[test]
    fn double_normalization_fails() {
        let bank = build_filter_bank(2, 2, 16, 16).unwrap();
        let frame = ramp_frame(16, 16);
        let s = scattering_transform(&frame, &bank, 2).unwrap();
        let n = normalize_subbands(&s, frame.grid().mean(), 1e-12).unwrap();
        assert!(n.is_normalized());
        assert!(matches!(normalize_subbands(&n, 0.5, 1e-12), Err(KshsError::AlreadyNormalized)));
    }

    #[test]
    fn eps_guard_avoids_non_finite() {
        let bank = build_filter_bank(2, 2, 16, 16).unwrap();
        // a zero frame has all-zero parents
        let frame = FrameImage::new(Grid::filled(16, 16, 0.0)).unwrap();
        let s = scattering_transform(&frame, &bank, 2).unwrap();
        let n = normalize_subbands(&s, 0.0, 1e-12).unwrap();
        assert!(n.maps().iter().all(|m| m.values().iter().all(|v| v.is_finite())));
    }

    fn spatial_pool(grid: &Grid, block: usize) -> Grid {
        Grid::from_fn(grid.height / block, grid.width / block, |y, x| {
            let mut acc = 0.0;
            for dy in 0..block {
                for dx in 0..block {
                    acc += grid.get(y * block + dy, x * block + dx);
                }
            }
            (acc / (block * block) as f64).max(0.0)
        })
    }

    fn max_abs_diff(a: &Grid, b: &Grid) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn spectral_pooling_matches_spatial_pooling() {
        let bank = build_filter_bank(3, 2, 32, 24).unwrap();
        let a = ramp_frame(32, 24).grid().clone();
        let b = a.rolled(3, 5);
        let packed = bank.packed_spectrum(&a, Some(&b));
        let (pa, pb) = bank.pooled_lowpass(&packed);
        let direct_a = spatial_pool(&bank.lowpass_real(&bank.spectrum(&a)), 8);
        let direct_b = spatial_pool(&bank.lowpass_real(&bank.spectrum(&b)), 8);
        assert_eq!((pa.height(), pa.width()), (4, 3));
        assert!(max_abs_diff(&pa, &direct_a) < 1e-12);
        assert!(max_abs_diff(&pb, &direct_b) < 1e-12);
    }

    #[test]
    fn packed_spectra_split_exactly() {
        let bank = build_filter_bank(2, 2, 16, 12).unwrap();
        let a = ramp_frame(16, 12).grid().clone();
        let b = a.rolled(1, 7).scaled(0.3);
        let (sa, sb) = bank.split_packed(&bank.packed_spectrum(&a, Some(&b)));
        for (x, y) in sa.iter().zip(bank.spectrum(&a)) {
            assert!((x - y).norm() < 1e-11);
        }
        for (x, y) in sb.iter().zip(bank.spectrum(&b)) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn transform_matches_unpacked_reference() {
        // odd orientation count exercises the unpaired remainder
        let bank = build_filter_bank(2, 3, 16, 16).unwrap();
        let frame = ramp_frame(16, 16);
        let maps = scattering_transform(&frame, &bank, 2).unwrap();
        let x = frame.grid();
        let pool = |g: &Grid| spatial_pool(&bank.lowpass_real(&bank.spectrum(g)), 4);
        let mut reference = vec![pool(x)];
        let spectrum = bank.spectrum(x);
        let u1: Vec<Grid> = (0..6).map(|i| bank.rectified(&spectrum, i)).collect();
        reference.extend(u1.iter().map(&pool));
        for (i, u) in u1.iter().enumerate() {
            let j1 = i / 3;
            for j2 in (j1 + 1)..2 {
                for l2 in 0..3 {
                    reference.push(pool(&bank.rectified(&bank.spectrum(u), j2 * 3 + l2)));
                }
            }
        }
        assert_eq!(maps.len(), reference.len());
        for (m, r) in maps.maps().iter().zip(&reference) {
            assert!(max_abs_diff(m, r) < 1e-12);
        }
    }

    #[test]
    fn frame_rejects_out_of_range() {
        assert!(FrameImage::from_pixels(1, 2, vec![0.5, 1.5]).is_err());
        assert!(FrameImage::from_pixels(1, 2, vec![0.5, f64::NAN]).is_err());
    }
}
