//! Result records: deterministic CSV tables plus JSON metadata.
//!
//! Every experiment returns a [`ResultRecord`]: a comment header naming the
//! experiment, the config hash, the seed, and the axis conventions; a CSV
//! table with one row per sweep point; and a structured JSON summary. The
//! CSV body is rendered from pre-formatted strings (shortest round-trip
//! float form), so identical configs and seeds reproduce it byte for byte —
//! wall-clock runtime lives only in the JSON metadata.

use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::FirChannel;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

/// Shortest round-trip decimal form of a float, the one canonical cell
/// format used in every CSV this crate writes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// One experiment's output: provenance header, CSV table, JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    /// Experiment name; also the output file stem.
    pub experiment: String,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    /// Master seed the run derived every RNG stream from.
    pub seed: u64,
    /// Wall-clock duration of the run (s); excluded from the CSV so output
    /// bytes depend only on config and seed.
    pub runtime_seconds: f64,
    /// Header comment lines (axis definitions, tone placement, frame
    /// geometry), rendered as leading `# ` lines of the CSV.
    pub notes: Vec<String>,
    /// CSV column names.
    pub columns: Vec<String>,
    /// CSV body, pre-formatted.
    pub rows: Vec<Vec<String>>,
    /// Structured scalar results (fits, gaps, measured constants).
    pub summary: serde_json::Value,
}

impl ResultRecord {
    /// Starts an empty record for an experiment under a config.
    pub fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
            runtime_seconds: 0.0,
            notes: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    /// Appends one pre-formatted row; panics in debug builds if the width
    /// disagrees with the column count.
    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        self.rows.push(cells);
    }

    /// Renders the record as a CSV document: `# ` comment header, column
    /// row, then the body.
    ///
    /// # Errors
    ///
    /// [`Error::Csv`] or [`Error::Format`] if encoding fails, which only
    /// happens on malformed internal state.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("# experiment: {}\n", self.experiment));
        out.push_str(&format!("# config-sha256: {}\n", self.config_hash));
        out.push_str(&format!("# seed: {}\n", self.seed));
        for note in &self.notes {
            out.push_str(&format!("# {note}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let body = w
            .into_inner()
            .map_err(|e| Error::Format(format!("csv buffer error: {e}")))?;
        out.push_str(
            &String::from_utf8(body).map_err(|e| Error::Format(format!("csv not utf-8: {e}")))?,
        );
        Ok(out)
    }

    /// Writes `<dir>/<experiment>.csv` and `<dir>/<experiment>.json`,
    /// creating the directory if needed; returns both paths.
    ///
    /// # Errors
    ///
    /// [`Error::Io`] on filesystem failure, plus the [`Self::to_csv_string`]
    /// errors.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        let json_path = dir.join(format!("{}.json", self.experiment));
        fs::write(&csv_path, self.to_csv_string()?)?;
        fs::write(&json_path, serde_json::to_string_pretty(self)?)?;
        Ok((csv_path, json_path))
    }
}

/// Writes the discrete channel taps as a CSV table `l,t_seconds,h_l` — the
/// exchange format for comparing the equivalent FIR channel against other
/// tools.
///
/// # Errors
///
/// [`Error::Csv`] if encoding fails.
pub fn tap_csv_string(channel: &FirChannel) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["l", "t_seconds", "h_l"])?;
    for (l, &h) in channel.taps.iter().enumerate() {
        w.write_record([l.to_string(), fmt_f64(l as f64 * channel.ts), fmt_f64(h)])?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::Format(format!("csv buffer error: {e}")))?;
    String::from_utf8(body).map_err(|e| Error::Format(format!("csv not utf-8: {e}")))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> ResultRecord {
        let cfg = ExperimentConfig::reference();
        let mut r = ResultRecord::new("unit_test", &cfg);
        r.notes.push("axis: es_n0_db at the correlator input".into());
        r.columns = vec!["x".into(), "y".into()];
        r.push_row(vec![fmt_f64(1.5), fmt_f64(0.25)]);
        r.push_row(vec![fmt_f64(2.5), fmt_f64(1.0 / 3.0)]);
        r.summary = serde_json::json!({ "max": 2.5 });
        r
    }

    #[test]
    fn csv_rendering_is_deterministic_and_complete() {
        let r = sample_record();
        let a = r.to_csv_string().unwrap();
        let b = r.to_csv_string().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# experiment: unit_test\n"));
        assert!(a.contains("# seed: 1\n"));
        assert!(a.contains("# axis: es_n0_db at the correlator input\n"));
        assert!(a.contains("x,y\n"));
        assert!(a.contains("1.5,0.25\n"));
        // Shortest round-trip form, no fixed-width padding.
        assert!(a.contains("2.5,0.3333333333333333\n"));
        // Runtime never reaches the CSV.
        let mut timed = r.clone();
        timed.runtime_seconds = 123.0;
        assert_eq!(timed.to_csv_string().unwrap(), a);
    }

    #[test]
    fn save_writes_csv_and_json_side_by_side() {
        let dir = std::env::temp_dir().join(format!(
            "reslink-records-{}",
            std::process::id()
        ));
        let r = sample_record();
        let (csv_path, json_path) = r.save(&dir).unwrap();
        let csv_text = fs::read_to_string(&csv_path).unwrap();
        let json_text = fs::read_to_string(&json_path).unwrap();
        let _ = fs::remove_dir_all(&dir);
        assert_eq!(csv_text, r.to_csv_string().unwrap());
        let value: serde_json::Value = serde_json::from_str(&json_text).unwrap();
        assert_eq!(value["experiment"], "unit_test");
        assert_eq!(value["summary"]["max"], 2.5);
        assert_eq!(value["config_hash"], r.config_hash.as_str());
    }

    #[test]
    fn tap_dump_lists_every_tap_with_its_time() {
        let ch = FirChannel {
            taps: vec![0.5, -0.25, 0.125],
            j: 1,
            ts: 5e-8,
        };
        let text = tap_csv_string(&ch).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("l,t_seconds,h_l"));
        assert_eq!(lines.next(), Some("0,0,0.5"));
        assert_eq!(lines.next(), Some("1,0.00000005,-0.25"));
        assert_eq!(lines.next(), Some("2,0.0000001,0.125"));
        assert_eq!(lines.next(), None);
    }
}
