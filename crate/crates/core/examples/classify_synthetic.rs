//! End-to-end run on the seeded synthetic corpus: generate, calibrate,
//! extract descriptors, then leave-one-out 1-NN and NCC.
//!
//! ```text
//! cargo run --release --example classify_synthetic -- [videos_per_class] [frames]
//! ```

use std::time::Instant;

use kshs::eval::{ncc_loo, one_nn_loo, LabeledDescriptorSet};
use kshs::frechet::FrechetConfig;
use kshs::pipeline::{calibrate_manifest, extract_manifest, CalibrationOptions};
use kshs::subspace::SubspaceParams;
use kshs::synth::{generate_synthetic_corpus, SynthConfig};

fn main() -> kshs::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = SynthConfig::default();
    if let Some(v) = args.next() {
        config.videos_per_class = v.parse().expect("videos per class");
    }
    if let Some(f) = args.next() {
        config.frames = f.parse().expect("frame count");
    }

    let dir = std::env::temp_dir().join(format!("kshs-synthetic-{}", std::process::id()));
    let start = Instant::now();
    let manifest = generate_synthetic_corpus(&dir, &config)?;
    println!("corpus: {} videos in {:.1?}", manifest.entries.len(), start.elapsed());

    let t = Instant::now();
    let calibration = calibrate_manifest(&manifest, &CalibrationOptions::default())?;
    println!("calibrated {} subbands in {:.1?}", calibration.edges.n_bands(), t.elapsed());

    let t = Instant::now();
    let extracted = extract_manifest(&manifest, &calibration, &SubspaceParams::default())?;
    println!("extracted {} descriptors in {:.1?}", extracted.len(), t.elapsed());

    let set = LabeledDescriptorSet::new(
        extracted.iter().map(|e| e.id.clone()).collect(),
        extracted.into_iter().map(|e| e.descriptor).collect(),
        manifest.entries.iter().map(|e| e.label.clone()).collect(),
    )?;
    let t = Instant::now();
    let nn = one_nn_loo(&set)?;
    println!("{}", nn.to_table());
    let ncc = ncc_loo(&set, &FrechetConfig::default())?;
    println!("{}", ncc.to_table());
    println!("evaluation in {:.1?}, total {:.1?}", t.elapsed(), start.elapsed());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
