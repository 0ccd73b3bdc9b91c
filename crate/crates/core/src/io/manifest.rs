use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{KshsError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative paths are resolved against the manifest's directory.
    pub frames_dir: PathBuf,
    pub label: String,
}

/// JSON list of videos (frame directories) with labels and the working
/// frame size `[H, W]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub working_size: [usize; 2],
    #[serde(skip)]
    base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, working_size: [usize; 2]) -> Result<Self> {
        let manifest = Self {
            entries,
            working_size,
            base_dir: PathBuf::new(),
        };
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.id.is_empty() || !seen.insert(e.id.as_str()) {
                return Err(KshsError::InvalidArgument(format!("duplicate or empty manifest id {:?}", e.id)));
            }
        }
        if self.working_size.contains(&0) {
            return Err(KshsError::InvalidArgument("working size must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut manifest: Self = serde_json::from_str(&text)?;
        manifest.validate()?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn working_size(&self) -> (usize, usize) {
        (self.working_size[0], self.working_size[1])
    }

    pub fn frames_dir(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.frames_dir.is_absolute() {
            entry.frames_dir.clone()
        } else {
            self.base_dir.join(&entry.frames_dir)
        }
    }

    /// Distinct labels in order of first appearance.
    pub fn labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.label.as_str()))
            .map(|e| e.label.clone())
            .collect()
    }
}
