//! Kernel subspace descriptor of one synthetic video: Kernel PCA on all
//! frames, then Nyström reduction onto growing nested supports. Prints the
//! orthogonality residual and the distance to the full-support descriptor.

use kshs::calibration::calibrate_frames;
use kshs::histogram::build_histogram_matrix;
use kshs::scattering::{FrameImage, ScatteringConfig};
use kshs::subspace::{d_se, kernel_pca, nystrom_reduce, uniform_stride_indices, KernelSubspace, SupportStrategy};
use kshs::synth::{synthetic_video, SynthConfig};

fn main() -> kshs::Result<()> {
    let scattering = ScatteringConfig::default();
    let bank = scattering.filter_bank()?;
    let synth = SynthConfig::default();
    let frames = synthetic_video(&synth, 2, 0)
        .into_iter()
        .map(FrameImage::new)
        .collect::<kshs::Result<Vec<_>>>()?;
    let calibration = calibrate_frames(&frames, &bank, scattering, true, 20, 0.99)?;
    let h = build_histogram_matrix(&frames, &bank, &calibration.edges, scattering.depth, true)?;
    let n = 5;
    let c = kernel_pca(&h, n)?;
    let wrap = |c, support| {
        KernelSubspace::new(
            c,
            support,
            calibration.edges.clone(),
            calibration.fingerprint(),
            SupportStrategy::UniformStride,
        )
    };
    let full = wrap(c.clone(), h.clone())?;
    println!("{} frames, n = {n}, full residual {:.2e}", h.len(), full.orthogonality_residual());

    for support in [5, 10, 15, 20, h.len()] {
        let indices = uniform_stride_indices(h.len(), support);
        let h_tilde = h.select(&indices)?;
        let reduced = wrap(nystrom_reduce(&c, &h, &h_tilde)?, h_tilde)?;
        println!(
            "support {support:>2}: residual {:.2e}, d_se to full {:.6}",
            reduced.orthogonality_residual(),
            d_se(&reduced, &full)?
        );
    }
    Ok(())
}
