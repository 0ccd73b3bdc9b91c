//! Text exports: distance CSV, evaluation report JSON and the descriptor
//! directory index.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibration::Fingerprint;
use crate::error::{KshsError, Result};
use crate::eval::{EvalReport, LabeledDescriptorSet};
use crate::io::binary::load_descriptor;
use crate::metric::DistanceMatrix;

fn csv_error(path: &Path, e: csv::Error) -> KshsError {
    KshsError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Header row of ids, then one row of distances per id, 17 significant
/// digits.
pub fn write_distance_csv(path: &Path, distances: &DistanceMatrix) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer.write_record(distances.ids()).map_err(|e| csv_error(path, e))?;
    for row in distances.values().row_iter() {
        writer
            .write_record(row.iter().map(|v| format!("{v:.16e}")))
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_distance_csv(path: &Path) -> Result<DistanceMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let ids: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut values = Vec::with_capacity(ids.len() * ids.len());
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for field in record.iter() {
            values.push(field.trim().parse::<f64>().map_err(|e| KshsError::Format {
                path: path.to_path_buf(),
                reason: format!("bad distance {field:?}: {e}"),
            })?);
        }
    }
    if values.len() != ids.len() * ids.len() {
        return Err(KshsError::Format {
            path: path.to_path_buf(),
            reason: format!("{} values for {} ids", values.len(), ids.len()),
        });
    }
    let k = ids.len();
    DistanceMatrix::new(DMatrix::from_row_slice(k, k, &values), ids, None)
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub const INDEX_FILE: &str = "descriptors.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub label: String,
    /// Relative to the index directory.
    pub file: PathBuf,
}

/// `descriptors.json`: the descriptor files of a directory with their labels,
/// in manifest order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorIndex {
    pub fingerprint: Fingerprint,
    pub entries: Vec<IndexEntry>,
}

impl DescriptorIndex {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(INDEX_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(INDEX_FILE))?)?)
    }
}

/// Loads every descriptor listed in a directory index; all must carry the
/// index fingerprint.
pub fn load_descriptor_set(dir: &Path) -> Result<LabeledDescriptorSet> {
    let index = DescriptorIndex::load(dir)?;
    let descriptors = index
        .entries
        .iter()
        .map(|e| load_descriptor(&dir.join(&e.file), Some(&index.fingerprint)))
        .collect::<Result<Vec<_>>>()?;
    LabeledDescriptorSet::new(
        index.entries.iter().map(|e| e.id.clone()).collect(),
        descriptors,
        index.entries.iter().map(|e| e.label.clone()).collect(),
    )
}
