//! Monte Carlo experiment harness: configs, deterministic seeding, BER
//! points with honest confidence intervals, the named experiments, and
//! reproducible CSV/JSON records.
//!
//! Everything downstream of a config is a pure function of `(config, seed)`:
//! per-frame seeds derive from the master seed, the point index, and the
//! frame index, so any single point of any sweep can be replayed in
//! isolation and records can be compared byte for byte across runs.

pub mod ber;
pub mod config;
pub mod experiments;
pub mod records;

pub use ber::{
    build_link, calibrate_symbol_energy, correlator_variance_ratio, derive_seed,
    es_n0_required_db, frame_data_bits, frame_size, noise_scales, run_point, sigma_for,
    warmup_bits, wilson_interval, BerPoint, LinkSetup, CALIBRATION_FRAME, WILSON_Z,
};
pub use config::{CircuitBlock, ExperimentConfig, GuardPolicy, NoiseSide};
pub use experiments::{
    decode_capture, decode_record, offpeak_setups, quantization_penalty, run_ber_sweep,
    run_efficiency_report, run_link_analysis, run_mismatch_sweep, run_noise_side_equivalence,
    run_offpeak_cases, run_transition_study, waterfall_required_db, BerCurve, BerSweepResult,
    DecodeReport, EfficiencyReport, MismatchCurve, MismatchResult, NoiseSidePoint,
    NoiseSideResult, OffpeakCase, OffpeakResult, OffpeakSetup, FILTERBANK_TAPS,
    LOW_CONFIDENCE_MARGIN,
};
pub use records::{fmt_f64, tap_csv_string, ResultRecord};
