//! File formats and dataset ingestion.

pub mod binary;
pub mod export;
pub mod frames;
pub mod manifest;

pub use binary::{load_calibration, load_descriptor, save_calibration, save_descriptor};
pub use export::{load_descriptor_set, read_distance_csv, read_report, write_distance_csv, write_report, DescriptorIndex, IndexEntry};
pub use frames::load_frames;
pub use manifest::{DatasetManifest, ManifestEntry};
