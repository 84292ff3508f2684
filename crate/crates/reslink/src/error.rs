//! Crate-wide error type.
//!
//! Every fallible operation in the crate returns [`Result`]. Variants carry
//! enough context to be rendered as a machine-readable JSON object by the CLI.

use thiserror::Error;

/// Errors raised by circuit analysis, channel construction, modem processing,
/// transient integration, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An input parameter is outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical procedure failed to meet its tolerance.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Pole pairs are too close for the partial-fraction construction.
    #[error("repeated poles: pole separation {separation:.3e} rad/s below threshold {threshold:.3e}")]
    RepeatedPoles { separation: f64, threshold: f64 },

    /// The sample rate is too low for spectral sampling of this response.
    #[error("aliasing risk: |H| at Nyquist is {nyquist_ratio:.3e} of peak (limit {limit:.1e}); raise the sample rate")]
    AliasingRisk { nyquist_ratio: f64, limit: f64 },

    /// A discretized rational function has poles on or outside the unit circle.
    #[error("unstable discretization: pole magnitude {pole_magnitude} >= 1")]
    UnstableDiscretization { pole_magnitude: f64 },

    /// The requested FIR tap budget cannot meet the filter specs.
    #[error("filter spec infeasible with {taps} taps: achieved {achieved_attenuation_db:.1} dB attenuation, {achieved_ripple_db:.2} dB ripple")]
    SpecInfeasible {
        taps: usize,
        achieved_attenuation_db: f64,
        achieved_ripple_db: f64,
    },

    /// Received-sample buffer shorter than the frame being demodulated.
    #[error("length mismatch: need {needed} samples, got {got}")]
    LengthMismatch { needed: usize, got: usize },

    /// Integration step exceeds the stability/accuracy precondition.
    #[error("step too large: dt = {dt:.3e} s exceeds limit {limit:.3e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    /// The inductance matrix is singular (k = 1).
    #[error("singular inductance matrix: k = {k} gives zero determinant")]
    SingularInductance { k: f64 },

    /// A steady-state settle run did not stabilize within its cycle budget.
    #[error("not settled: per-cycle energy ratio still changing by {last_change:.2e} after {cycles} cycles")]
    NotSettled { cycles: usize, last_change: f64 },

    /// No frequency splitting found anywhere in the search range.
    #[error("no splitting in range: response has a single peak for all k up to {k_max}")]
    NoSplitInRange { k_max: f64 },

    /// A 2x2 phasor mesh system could not be solved reliably.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// Malformed waveform/capture file or sidecar header.
    #[error("format error: {0}")]
    Format(String),

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// CSV encoding failure while exporting a result table.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
