//! Dataset calibration: scattering configuration plus shared bin edges,
//! identified by a SHA-256 fingerprint that every descriptor carries.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{KshsError, Result};
use crate::histogram::{calibrate_bins, BinEdges};
use crate::scattering::{frame_subbands, FilterBank, FrameImage, ScatteringConfig};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(text, &mut out)
            .map_err(|e| KshsError::InvalidArgument(format!("bad fingerprint {text:?}: {e}")))?;
        Ok(Self(out))
    }

    pub fn ensure_eq(&self, other: &Fingerprint) -> Result<()> {
        if self != other {
            return Err(KshsError::FingerprintMismatch {
                expected: self.to_hex(),
                found: other.to_hex(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Fingerprint::from_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Everything that must agree between two descriptors for their distance
/// to be meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub scattering: ScatteringConfig,
    pub normalized: bool,
    pub quantile: f64,
    pub edges: BinEdges,
}

impl Calibration {
    pub fn n_bins(&self) -> usize {
        self.edges.n_bins()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        hasher.update(b"kshs-calibration-v1");
        let s = &self.scattering;
        for v in [s.scales, s.orientations, s.depth, s.working_size.0, s.working_size.1] {
            hasher.update((v as u64).to_le_bytes());
        }
        hasher.update([u8::from(self.normalized)]);
        hasher.update(self.quantile.to_le_bytes());
        hasher.update((self.edges.n_bins() as u64).to_le_bytes());
        hasher.update((self.edges.n_bands() as u64).to_le_bytes());
        for r in self.edges.upper() {
            hasher.update(r.to_le_bytes());
        }
        Fingerprint(hasher.finalize().into())
    }
}

/// Calibrates bin edges on a sample of frames.
pub fn calibrate_frames(
    sample: &[FrameImage],
    bank: &FilterBank,
    scattering: ScatteringConfig,
    normalized: bool,
    n_bins: usize,
    quantile: f64,
) -> Result<Calibration> {
    if sample.is_empty() {
        return Err(KshsError::Empty("calibration sample".into()));
    }
    let maps = sample
        .par_iter()
        .map(|frame| frame_subbands(frame, bank, scattering.depth, normalized))
        .collect::<Result<Vec<_>>>()?;
    let edges = calibrate_bins(&maps, n_bins, quantile)?;
    Ok(Calibration {
        scattering,
        normalized,
        quantile,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calibration(edge: f64) -> Calibration {
        Calibration {
            scattering: ScatteringConfig::default(),
            normalized: true,
            quantile: 0.99,
            edges: BinEdges::new(vec![edge; 3], 20).unwrap(),
        }
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = calibration(1.0);
        assert_eq!(base.fingerprint(), calibration(1.0).fingerprint());
        assert_ne!(base.fingerprint(), calibration(1.5).fingerprint());
        let mut other = base.clone();
        other.normalized = false;
        assert_ne!(base.fingerprint(), other.fingerprint());
        other = base.clone();
        other.scattering.working_size = (64, 64);
        assert_ne!(base.fingerprint(), other.fingerprint());
    }

    #[test]
    fn hex_round_trip() {
        let fp = calibration(1.0).fingerprint();
        assert_eq!(Fingerprint::from_hex(&fp.to_hex()).unwrap(), fp);
        assert!(Fingerprint::from_hex("abc").is_err());
        assert!(fp.ensure_eq(&calibration(2.0).fingerprint()).is_err());
    }
}
