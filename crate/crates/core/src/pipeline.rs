//! Dataset-level driver: calibrate on a manifest, extract descriptors for
//! every entry, and store them as a descriptor directory.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::calibration::{calibrate_frames, Calibration};
use crate::error::{KshsError, Result};
use crate::io::binary::save_descriptor;
use crate::io::export::{DescriptorIndex, IndexEntry};
use crate::io::frames::{frame_paths, load_frame, load_frames};
use crate::io::manifest::DatasetManifest;
use crate::scattering::ScatteringConfig;
use crate::subspace::{compute_descriptor, KernelSubspace, SubspaceParams};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "KSHS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub scales: usize,
    pub orientations: usize,
    pub depth: usize,
    pub normalized: bool,
    pub n_bins: usize,
    pub quantile: f64,
    /// Every `stride`-th frame of every video enters the calibration sample.
    pub stride: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            scales: 4,
            orientations: 4,
            depth: 2,
            normalized: true,
            n_bins: 20,
            quantile: 0.99,
            stride: 10,
        }
    }
}

/// Calibrates bin edges on a strided frame sample of the whole manifest.
pub fn calibrate_manifest(manifest: &DatasetManifest, options: &CalibrationOptions) -> Result<Calibration> {
    if options.stride == 0 {
        return Err(KshsError::InvalidArgument("calibration stride must be positive".into()));
    }
    let scattering = ScatteringConfig {
        scales: options.scales,
        orientations: options.orientations,
        depth: options.depth,
        working_size: manifest.working_size(),
    };
    let bank = scattering.filter_bank()?;
    let per_video = manifest
        .entries
        .par_iter()
        .map(|entry| {
            frame_paths(&manifest.frames_dir(entry))?
                .iter()
                .step_by(options.stride)
                .map(|p| load_frame(p, scattering.working_size))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let sample: Vec<_> = per_video.into_iter().flatten().collect();
    calibrate_frames(
        &sample,
        &bank,
        scattering,
        options.normalized,
        options.n_bins,
        options.quantile,
    )
}

#[derive(Debug, Clone)]
pub struct Extracted {
    pub id: String,
    pub label: String,
    pub descriptor: KernelSubspace,
}

/// Descriptors of every manifest entry, in manifest order.
pub fn extract_manifest(
    manifest: &DatasetManifest,
    calibration: &Calibration,
    params: &SubspaceParams,
) -> Result<Vec<Extracted>> {
    if manifest.working_size() != calibration.scattering.working_size {
        return Err(KshsError::InvalidArgument(format!(
            "manifest working size {:?} differs from calibration {:?}",
            manifest.working_size(),
            calibration.scattering.working_size
        )));
    }
    let bank = calibration.scattering.filter_bank()?;
    manifest
        .entries
        .par_iter()
        .map(|entry| {
            let frames = load_frames(&manifest.frames_dir(entry), manifest.working_size())?;
            if frames.len() < params.support {
                return Err(KshsError::InvalidArgument(format!(
                    "{} has {} frames, fewer than the support size {}",
                    entry.id,
                    frames.len(),
                    params.support
                )));
            }
            Ok(Extracted {
                id: entry.id.clone(),
                label: entry.label.clone(),
                descriptor: compute_descriptor(&frames, &bank, calibration, params)?,
            })
        })
        .collect()
}

/// Writes `<id>.kshs` per descriptor plus the directory index.
pub fn write_descriptor_dir(dir: &Path, calibration: &Calibration, extracted: &[Extracted]) -> Result<DescriptorIndex> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(extracted.len());
    for e in extracted {
        let file = format!("{}.kshs", e.id);
        save_descriptor(&dir.join(&file), &e.descriptor)?;
        entries.push(IndexEntry {
            id: e.id.clone(),
            label: e.label.clone(),
            file: file.into(),
        });
    }
    let index = DescriptorIndex {
        fingerprint: calibration.fingerprint(),
        entries,
    };
    index.save(dir)?;
    Ok(index)
}

/// Worker pool sized by `KSHS_THREADS`, defaulting to the available
/// parallelism.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| KshsError::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a positive integer")))?,
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| KshsError::InvalidArgument(format!("cannot build worker pool: {e}")))
}
