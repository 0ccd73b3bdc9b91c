//! Little-endian binary formats for descriptors and calibrations.
//!
//! Descriptor file (`.kshs`):
//!
//! ```text
//! magic "KSHS1" | version u16 | flags u8 | D, Ñ, n, N_bands, N_bins u32
//! | fingerprint [32]u8 | edges f64 × N_bands | H̃ f64 × D·Ñ (column-major)
//! | C̃ f64 × Ñ·n (column-major)
//! ```
//!
//! Flags: bit 0 normalized scattering, bits 1-2 support strategy
//! (0 uniform stride, 1 k-medoids, 2 centroids).
//!
//! Calibration file:
//!
//! ```text
//! magic "KSHE1" | version u16 | flags u8 | J, L, M, H, W, N_bands, N_bins u32
//! | quantile f64 | fingerprint [32]u8 | edges f64 × N_bands
//! ```

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::calibration::{Calibration, Fingerprint};
use crate::error::{KshsError, Result};
use crate::histogram::{BinEdges, HistogramMatrix};
use crate::scattering::ScatteringConfig;
use crate::subspace::{KernelSubspace, SupportStrategy};

pub const DESCRIPTOR_MAGIC: &[u8; 5] = b"KSHS1";
pub const CALIBRATION_MAGIC: &[u8; 5] = b"KSHE1";
pub const FORMAT_VERSION: u16 = 1;

const FLAG_NORMALIZED: u8 = 0b001;
const STRATEGY_SHIFT: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("dimension fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s<'a>(&mut self, values: impl IntoIterator<Item = &'a f64>) {
        for v in values {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: impl Into<String>) -> KshsError {
        KshsError::Format {
            path: self.what.into(),
            reason: reason.into(),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(self.err("truncated"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| self.err("size overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn fingerprint(&mut self) -> Result<Fingerprint> {
        Ok(Fingerprint(self.take(32)?.try_into().unwrap()))
    }
    fn header(&mut self, magic: &[u8; 5]) -> Result<()> {
        if self.take(5)? != magic {
            return Err(self.err("bad magic"));
        }
        let version = self.u16()?;
        if version != FORMAT_VERSION {
            return Err(self.err(format!("unsupported version {version}")));
        }
        Ok(())
    }
    fn finish(&self) -> Result<()> {
        if !self.bytes.is_empty() {
            return Err(self.err(format!("{} trailing bytes", self.bytes.len())));
        }
        Ok(())
    }
}

fn strategy_code(strategy: SupportStrategy) -> u8 {
    match strategy {
        SupportStrategy::UniformStride => 0,
        SupportStrategy::KMedoids => 1,
        SupportStrategy::Centroids => 2,
    }
}

pub fn encode_descriptor(descriptor: &KernelSubspace) -> Vec<u8> {
    let support = descriptor.support();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(DESCRIPTOR_MAGIC);
    w.u16(FORMAT_VERSION);
    let mut flags = strategy_code(descriptor.strategy()) << STRATEGY_SHIFT;
    if support.is_normalized() {
        flags |= FLAG_NORMALIZED;
    }
    w.u8(flags);
    for v in [
        support.dim(),
        support.len(),
        descriptor.dim(),
        support.n_bands(),
        support.n_bins(),
    ] {
        w.u32(v);
    }
    w.0.extend_from_slice(&descriptor.fingerprint().0);
    w.f64s(descriptor.edges().upper());
    w.f64s(support.columns().as_slice());
    w.f64s(descriptor.coefficients().as_slice());
    w.0
}

pub fn decode_descriptor(bytes: &[u8]) -> Result<KernelSubspace> {
    let mut r = Reader {
        bytes,
        what: "descriptor",
    };
    r.header(DESCRIPTOR_MAGIC)?;
    let flags = r.u8()?;
    let strategy = match (flags >> STRATEGY_SHIFT) & 0b11 {
        0 => SupportStrategy::UniformStride,
        1 => SupportStrategy::KMedoids,
        2 => SupportStrategy::Centroids,
        other => return Err(r.err(format!("unknown support strategy {other}"))),
    };
    let (d, support, n, n_bands, n_bins) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if d != n_bands * n_bins {
        return Err(r.err(format!("D = {d} is not {n_bands} x {n_bins}")));
    }
    let fingerprint = r.fingerprint()?;
    let edges = BinEdges::new(r.f64s(n_bands)?, n_bins)?;
    let h = DMatrix::from_vec(d, support, r.f64s(d * support)?);
    let c = DMatrix::from_vec(support, n, r.f64s(support * n)?);
    r.finish()?;
    let support = HistogramMatrix::new(h, n_bands, n_bins, flags & FLAG_NORMALIZED != 0)?;
    KernelSubspace::new(c, support, edges, fingerprint, strategy)
}

pub fn save_descriptor(path: &Path, descriptor: &KernelSubspace) -> Result<()> {
    fs::write(path, encode_descriptor(descriptor))?;
    Ok(())
}

/// Loads a descriptor, optionally requiring a specific calibration.
pub fn load_descriptor(path: &Path, expected: Option<&Fingerprint>) -> Result<KernelSubspace> {
    let descriptor = decode_descriptor(&fs::read(path)?).map_err(|e| relabel(e, path))?;
    if let Some(fp) = expected {
        fp.ensure_eq(&descriptor.fingerprint())?;
    }
    Ok(descriptor)
}

fn relabel(error: KshsError, path: &Path) -> KshsError {
    match error {
        KshsError::Format { reason, .. } => KshsError::Format {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    }
}

pub fn encode_calibration(calibration: &Calibration) -> Vec<u8> {
    let s = &calibration.scattering;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(CALIBRATION_MAGIC);
    w.u16(FORMAT_VERSION);
    w.u8(if calibration.normalized { FLAG_NORMALIZED } else { 0 });
    for v in [
        s.scales,
        s.orientations,
        s.depth,
        s.working_size.0,
        s.working_size.1,
        calibration.edges.n_bands(),
        calibration.edges.n_bins(),
    ] {
        w.u32(v);
    }
    w.f64s([calibration.quantile].iter());
    w.0.extend_from_slice(&calibration.fingerprint().0);
    w.f64s(calibration.edges.upper());
    w.0
}

pub fn decode_calibration(bytes: &[u8]) -> Result<Calibration> {
    let mut r = Reader {
        bytes,
        what: "calibration",
    };
    r.header(CALIBRATION_MAGIC)?;
    let normalized = r.u8()? & FLAG_NORMALIZED != 0;
    let scattering = ScatteringConfig {
        scales: r.u32()?,
        orientations: r.u32()?,
        depth: r.u32()?,
        working_size: (r.u32()?, r.u32()?),
    };
    let (n_bands, n_bins) = (r.u32()?, r.u32()?);
    let quantile = r.f64()?;
    let stored = r.fingerprint()?;
    let edges = BinEdges::new(r.f64s(n_bands)?, n_bins)?;
    r.finish()?;
    if scattering.band_count() != n_bands {
        return Err(r.err(format!("{n_bands} edges for {} subbands", scattering.band_count())));
    }
    let calibration = Calibration {
        scattering,
        normalized,
        quantile,
        edges,
    };
    stored.ensure_eq(&calibration.fingerprint())?;
    Ok(calibration)
}

pub fn save_calibration(path: &Path, calibration: &Calibration) -> Result<()> {
    fs::write(path, encode_calibration(calibration))?;
    Ok(())
}

pub fn load_calibration(path: &Path) -> Result<Calibration> {
    decode_calibration(&fs::read(path)?).map_err(|e| relabel(e, path))
}
