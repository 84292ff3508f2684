//! Raw waveform export and capture import.
//!
//! Transmit waveforms and received captures travel as raw 32-bit
//! little-endian float sample files accompanied by a small JSON sidecar
//! (`<path>.json`) that records the sample rate, symbol period, guard
//! duration, and waveform family — everything a decoder needs to recover
//! symbol timing without the original experiment config.
//!
//! Capture decoding also accepts raw 8-bit signed samples, the natural
//! format of an oscilloscope deep-memory dump. Both receivers are amplitude
//! scale-invariant (the coherent correlator compares two correlations of
//! the same signal, the noncoherent detector compares two branch means), so
//! the 8-bit writer scales to full range and the reader normalizes to
//! `[−1, 1]` without tracking the original volts-per-count.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::modem::WaveformKind;

// ---------------------------------------------------------------------------
// Sidecar metadata
// ---------------------------------------------------------------------------

/// Symbol-timing metadata stored as `<path>.json` next to the raw samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    /// Sample rate (Sa/s).
    pub fs: f64,
    /// Full symbol period `T = Tg + Tu` (s).
    pub symbol_period: f64,
    /// Guard duration `Tg` at the start of each symbol (s).
    pub guard_period: f64,
    /// Transmit waveform family.
    pub kind: WaveformKind,
}

impl WaveformMeta {
    /// Checks that the timing fields describe a usable link.
    ///
    /// # Errors
    ///
    /// [`Error::Format`] if the sample rate or symbol period is not
    /// strictly positive, or if the guard is negative or consumes the whole
    /// symbol.
    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::Format(format!(
                "sidecar sample rate must be positive, got {}",
                self.fs
            )));
        }
        if !(self.symbol_period > 0.0 && self.symbol_period.is_finite()) {
            return Err(Error::Format(format!(
                "sidecar symbol period must be positive, got {}",
                self.symbol_period
            )));
        }
        if !(self.guard_period >= 0.0 && self.guard_period < self.symbol_period) {
            return Err(Error::Format(format!(
                "sidecar guard {} must lie in [0, T) with T = {}",
                self.guard_period, self.symbol_period
            )));
        }
        Ok(())
    }
}

/// Path of the JSON sidecar belonging to a raw sample file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

// ---------------------------------------------------------------------------
// 32-bit float waveforms
// ---------------------------------------------------------------------------

/// Writes samples as raw little-endian `f32` and the metadata as a JSON
/// sidecar at [`sidecar_path`].
///
/// # Errors
///
/// [`Error::Format`] if the metadata is inconsistent; [`Error::Io`] on
/// filesystem failure.
pub fn write_waveform(path: &Path, samples: &[f64], meta: &WaveformMeta) -> Result<()> {
    meta.validate()?;
    let mut buf = Vec::with_capacity(samples.len() * 4);
    for &v in samples {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, buf)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

/// Reads a waveform written by [`write_waveform`]: the raw `f32` samples
/// (widened to `f64`) and the sidecar metadata.
///
/// # Errors
///
/// [`Error::Io`] if either file is missing; [`Error::Format`] if the sample
/// file length is not a multiple of 4 bytes or the metadata is
/// inconsistent; [`Error::Json`] if the sidecar does not parse.
pub fn read_waveform(path: &Path) -> Result<(Vec<f64>, WaveformMeta)> {
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Format(format!(
            "raw f32 file {} has {} bytes, not a multiple of 4",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let meta: WaveformMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    meta.validate()?;
    Ok((samples, meta))
}

// ---------------------------------------------------------------------------
// 8-bit signed captures
// ---------------------------------------------------------------------------

/// Full-scale 8-bit counts of a sample block: the largest magnitude maps
/// to ±127, everything else rounds to the nearest count. All-zero input
/// yields all-zero counts.
fn i8_counts(samples: &[f64]) -> Vec<i8> {
    let peak = samples.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let scale = if peak > 0.0 { 127.0 / peak } else { 0.0 };
    samples
        .iter()
        .map(|&v| (v * scale).round().clamp(-127.0, 127.0) as i8)
        .collect()
}

/// Writes a capture as raw 8-bit signed samples, scaled so the largest
/// magnitude maps to ±127. The scale factor is not preserved; both
/// receivers are amplitude-invariant. An all-zero input produces an
/// all-zero file.
///
/// # Errors
///
/// [`Error::Io`] on filesystem failure.
pub fn write_capture_i8(path: &Path, samples: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = i8_counts(samples).iter().map(|&c| c as u8).collect();
    fs::write(path, bytes)?;
    Ok(())
}

/// In-memory equivalent of an 8-bit capture round trip: quantizes to
/// full-scale signed 8-bit counts and normalizes back to `[−1, 1]`,
/// exactly what [`write_capture_i8`] followed by [`read_capture_i8`]
/// produces.
pub fn quantize_i8(samples: &[f64]) -> Vec<f64> {
    i8_counts(samples)
        .iter()
        .map(|&c| f64::from(c) / 127.0)
        .collect()
}

/// Reads a raw 8-bit signed capture, normalizing counts to `[−1, 1]`.
///
/// # Errors
///
/// [`Error::Io`] if the file cannot be read.
pub fn read_capture_i8(path: &Path) -> Result<Vec<f64>> {
    Ok(fs::read(path)?
        .iter()
        .map(|&b| f64::from(b as i8) / 127.0)
        .collect())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    /// Unique temp-file path per test so parallel tests never collide.
    fn scratch(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("reslink-wavefile-{name}-{}", std::process::id()))
    }

    fn cleanup(path: &Path) {
        let _ = fs::remove_file(path);
        let _ = fs::remove_file(sidecar_path(path));
    }

    fn meta_20k() -> WaveformMeta {
        WaveformMeta {
            fs: 20e6,
            symbol_period: 5e-5,
            guard_period: 5e-5 / 11.0,
            kind: WaveformKind::Fsk,
        }
    }

    #[test]
    fn float_waveform_round_trips_to_f32_precision() {
        let path = scratch("roundtrip");
        let samples: Vec<f64> = (0..1000)
            .map(|n| (TAU * 0.045 * n as f64).sin() * 1.3)
            .collect();
        let meta = meta_20k();
        write_waveform(&path, &samples, &meta).unwrap();
        let (back, meta_back) = read_waveform(&path).unwrap();
        cleanup(&path);
        assert_eq!(meta_back, meta);
        assert_eq!(back.len(), samples.len());
        for (b, s) in back.iter().zip(samples.iter()) {
            // Exactly the f32 rounding of the original, no further error.
            assert_eq!(*b, *s as f32 as f64);
        }
    }

    #[test]
    fn sidecar_is_readable_json_with_the_timing_fields() {
        let path = scratch("sidecar");
        write_waveform(&path, &[0.25, -0.5], &meta_20k()).unwrap();
        let text = fs::read_to_string(sidecar_path(&path)).unwrap();
        cleanup(&path);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["fs"], 20e6);
        assert!(value["symbol_period"].is_number());
        assert!(value["guard_period"].is_number());
        assert_eq!(value["kind"], "Fsk");
    }

    #[test]
    fn truncated_sample_files_are_rejected() {
        let path = scratch("truncated");
        write_waveform(&path, &[1.0, 2.0, 3.0], &meta_20k()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 2);
        fs::write(&path, bytes).unwrap();
        let err = read_waveform(&path).unwrap_err();
        cleanup(&path);
        assert!(matches!(err, Error::Format(_)), "got {err:?}");
    }

    #[test]
    fn malformed_sidecars_are_rejected() {
        let path = scratch("badjson");
        write_waveform(&path, &[1.0], &meta_20k()).unwrap();
        fs::write(sidecar_path(&path), b"not json at all").unwrap();
        let err = read_waveform(&path).unwrap_err();
        cleanup(&path);
        assert!(matches!(err, Error::Json(_)), "got {err:?}");
    }

    #[test]
    fn inconsistent_metadata_is_rejected_on_write_and_read() {
        let mut meta = meta_20k();
        meta.guard_period = meta.symbol_period; // guard eats the whole symbol
        let path = scratch("badmeta");
        assert!(matches!(
            write_waveform(&path, &[1.0], &meta),
            Err(Error::Format(_))
        ));

        // A sidecar edited by hand to a negative sample rate fails on read.
        write_waveform(&path, &[1.0], &meta_20k()).unwrap();
        let mut bad = meta_20k();
        bad.fs = -1.0;
        fs::write(
            sidecar_path(&path),
            serde_json::to_string(&bad).unwrap(),
        )
        .unwrap();
        let err = read_waveform(&path).unwrap_err();
        cleanup(&path);
        assert!(matches!(err, Error::Format(_)), "got {err:?}");
    }

    #[test]
    fn missing_files_surface_as_io_errors() {
        let path = scratch("missing-does-not-exist");
        assert!(matches!(read_waveform(&path), Err(Error::Io(_))));
        assert!(matches!(read_capture_i8(&path), Err(Error::Io(_))));
    }

    #[test]
    fn i8_captures_preserve_shape_at_full_scale() {
        let path = scratch("i8");
        let samples: Vec<f64> = (0..500)
            .map(|n| 0.8 * (TAU * 0.031 * n as f64).sin())
            .collect();
        write_capture_i8(&path, &samples).unwrap();
        let back = read_capture_i8(&path).unwrap();
        cleanup(&path);
        assert_eq!(back.len(), samples.len());
        let peak = back.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-12, "normalized peak {peak}");
        // Shape agrees with the rescaled original within one quantization step.
        for (b, s) in back.iter().zip(samples.iter()) {
            assert!((b - s / 0.8).abs() <= 0.5 / 127.0 + 1e-12);
        }
    }

    #[test]
    fn all_zero_captures_stay_zero() {
        let path = scratch("zeros");
        write_capture_i8(&path, &[0.0; 64]).unwrap();
        let back = read_capture_i8(&path).unwrap();
        cleanup(&path);
        assert_eq!(back, vec![0.0; 64]);
    }

    #[test]
    fn in_memory_quantization_matches_the_file_round_trip() {
        let path = scratch("quantize");
        let samples: Vec<f64> = (0..300)
            .map(|n| 2.7 * (TAU * 0.017 * n as f64).sin())
            .collect();
        write_capture_i8(&path, &samples).unwrap();
        let from_file = read_capture_i8(&path).unwrap();
        cleanup(&path);
        assert_eq!(quantize_i8(&samples), from_file);
        assert_eq!(quantize_i8(&[0.0; 5]), vec![0.0; 5]);
    }
}
