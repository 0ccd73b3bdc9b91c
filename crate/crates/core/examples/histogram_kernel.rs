//! Scattering histograms of two synthetic videos and their Bhattacharyya
//! Gram matrix: frames of the same video are far more similar to each other
//! than to frames of a different texture family.

use kshs::calibration::calibrate_frames;
use kshs::histogram::build_histogram_matrix;
use kshs::kernel::kernel_matrix;
use kshs::scattering::{FrameImage, ScatteringConfig};
use kshs::synth::{synthetic_video, SynthConfig};

fn frames(config: &SynthConfig, class: usize) -> kshs::Result<Vec<FrameImage>> {
    synthetic_video(config, class, 0).into_iter().map(FrameImage::new).collect()
}

fn main() -> kshs::Result<()> {
    let scattering = ScatteringConfig::default();
    let bank = scattering.filter_bank()?;
    let synth = SynthConfig {
        frames: 6,
        ..SynthConfig::default()
    };
    let a = frames(&synth, 0)?;
    let b = frames(&synth, 1)?;
    let sample: Vec<_> = a.iter().chain(&b).cloned().collect();
    let calibration = calibrate_frames(&sample, &bank, scattering, true, 20, 0.99)?;

    let ha = build_histogram_matrix(&a, &bank, &calibration.edges, scattering.depth, true)?;
    let hb = build_histogram_matrix(&b, &bank, &calibration.edges, scattering.depth, true)?;
    println!("histogram vectors: {} entries ({} bands x {} bins)", ha.dim(), ha.n_bands(), ha.n_bins());

    let within = kernel_matrix(&ha, &ha)?;
    let across = kernel_matrix(&ha, &hb)?;
    println!("K(A, A):\n{within:.3e}");
    println!("K(A, B):\n{across:.3e}");
    Ok(())
}
