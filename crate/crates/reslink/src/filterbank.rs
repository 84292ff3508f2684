//! Receive filterbank for the noncoherent FSK detector.
//!
//! Two linear-phase FIR branches split the band at the carrier `f0`: a
//! lowpass that keeps the lower keying tone `f− < f0` and a bandpass that
//! keeps the upper tone `f+ > f0`. Both are equiripple designs with a
//! common 291-tap length (hence identical group delay) and with passband
//! ripple weighted 1.374× over the stopbands, which splits the error budget
//! so a feasible design meets 0.4 dB peak-to-peak ripple and 30 dB
//! attenuation simultaneously.
//!
//! A noncoherent energy comparison is only fair if both branches present
//! the same gain and the same equivalent noise bandwidth (ENBW) to their
//! tone; the bandpass passband is therefore trimmed to `[1.05, 1.96]·f0`
//! rather than mirroring the full lowpass width — with the full 1 MHz width
//! its ENBW overshoots the lowpass branch by 8%, while the trimmed edge
//! brings the ratio to 0.994 at a 0.01 dB peak-gain gap.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::remez::{design_equiripple, BandSpec};

/// Relative half-width of the transition regions around the split carrier.
pub const TRANSITION_FRACTION: f64 = 0.05;
/// Bandpass passband upper edge in units of `f0`.
pub const BANDPASS_UPPER_EDGE: f64 = 1.96;
/// Maximum tolerated peak-to-peak passband ripple (dB).
pub const RIPPLE_MAX_DB: f64 = 0.4;
/// Minimum required stopband attenuation (dB).
pub const ATTENUATION_MIN_DB: f64 = 30.0;
/// Maximum tolerated gap between the two branch peak gains (dB).
pub const GAIN_GAP_MAX_DB: f64 = 0.1;
/// Maximum tolerated relative mismatch of the two branch ENBWs.
pub const ENBW_RATIO_TOL: f64 = 0.02;
/// Passband/stopband error weight ratio: (10^(30/20))⁻¹ target stopband
/// deviation over the 0.4 dB-ripple passband deviation.
pub const PASSBAND_WEIGHT: f64 = 1.373_592_014_338_8;

/// Spectral grid size used for the acceptance measurements.
const MEASURE_FFT: usize = 1 << 16;

/// Matched lowpass/bandpass FIR pair sharing tap count and group delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    /// Lowpass branch taps (selects the lower keying tone).
    pub lowpass: Vec<f64>,
    /// Bandpass branch taps (selects the upper keying tone).
    pub bandpass: Vec<f64>,
    /// Sample rate the bank was designed for (Sa/s).
    pub fs: f64,
    /// Split carrier frequency (Hz).
    pub f0: f64,
}

/// Passband/stopband figures measured on a dense spectral grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterMeasurement {
    /// Peak-to-peak passband ripple, `20·log10(max/min)` (dB).
    pub ripple_db: f64,
    /// Worst-case stopband attenuation below unit gain (dB).
    pub attenuation_db: f64,
    /// Largest passband gain (linear).
    pub gain_peak: f64,
    /// Smallest passband gain (linear).
    pub gain_min: f64,
    /// One-sided equivalent noise bandwidth `Σ|H|²Δf / max|H_pass|²` (Hz).
    pub enbw_hz: f64,
}

impl Filterbank {
    /// Group delay of both (linear-phase) branches in samples.
    pub fn group_delay(&self) -> usize {
        (self.lowpass.len() - 1) / 2
    }

    /// Lowpass band edges `(pass_hi, stop_lo)` in Hz.
    fn lowpass_edges(&self) -> (f64, f64) {
        (
            self.f0 * (1.0 - TRANSITION_FRACTION),
            self.f0 * (1.0 + TRANSITION_FRACTION),
        )
    }

    /// Bandpass band edges `(stop1_hi, pass_lo, pass_hi, stop2_lo)` in Hz.
    fn bandpass_edges(&self) -> (f64, f64, f64, f64) {
        let (pass_hi, stop_lo) = self.lowpass_edges();
        let bp_hi = self.f0 * BANDPASS_UPPER_EDGE;
        (
            pass_hi,
            stop_lo,
            bp_hi,
            bp_hi + self.f0 * 2.0 * TRANSITION_FRACTION,
        )
    }

    /// Measures the lowpass branch.
    pub fn measure_lowpass(&self) -> FilterMeasurement {
        let (pass_hi, stop_lo) = self.lowpass_edges();
        measure(
            &self.lowpass,
            self.fs,
            &[(0.0, pass_hi)],
            &[(stop_lo, self.fs / 2.0)],
        )
    }

    /// Measures the bandpass branch.
    pub fn measure_bandpass(&self) -> FilterMeasurement {
        let (stop1_hi, pass_lo, pass_hi, stop2_lo) = self.bandpass_edges();
        measure(
            &self.bandpass,
            self.fs,
            &[(pass_lo, pass_hi)],
            &[(0.0, stop1_hi), (stop2_lo, self.fs / 2.0)],
        )
    }
}

/// Gain magnitudes `|H(f_k)|` on the one-sided `MEASURE_FFT` grid.
fn gain_grid(taps: &[f64]) -> Vec<f64> {
    let n = MEASURE_FFT;
    let mut buf: Vec<Complex64> = taps
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Ripple/attenuation/ENBW figures over explicit pass and stop intervals.
fn measure(
    taps: &[f64],
    fs: f64,
    pass: &[(f64, f64)],
    stop: &[(f64, f64)],
) -> FilterMeasurement {
    let gains = gain_grid(taps);
    let df = fs / MEASURE_FFT as f64;
    let in_any = |f: f64, bands: &[(f64, f64)]| bands.iter().any(|&(lo, hi)| f >= lo && f <= hi);
    let mut pass_max = 0.0f64;
    let mut pass_min = f64::INFINITY;
    let mut stop_max = 0.0f64;
    let mut total = 0.0f64;
    for (k, &g) in gains.iter().enumerate() {
        let f = k as f64 * df;
        total += g * g * df;
        if in_any(f, pass) {
            pass_max = pass_max.max(g);
            pass_min = pass_min.min(g);
        }
        if in_any(f, stop) {
            stop_max = stop_max.max(g);
        }
    }
    FilterMeasurement {
        ripple_db: 20.0 * (pass_max / pass_min).log10(),
        attenuation_db: -20.0 * stop_max.log10(),
        gain_peak: pass_max,
        gain_min: pass_min,
        enbw_hz: total / (pass_max * pass_max),
    }
}

/// Designs the two-branch bank at sample rate `fs` around the split carrier
/// `f0` and validates it against the detector's fairness requirements.
///
/// # Errors
///
/// [`Error::SpecInfeasible`] if either branch exceeds 0.4 dB ripple or
/// falls short of 30 dB attenuation, or if the branch peak gains differ by
/// more than 0.1 dB, or the branch ENBWs by more than 2% — all of which
/// bias a lowpass-vs-bandpass energy comparison; [`Error::Domain`] for
/// geometry that does not fit below Nyquist.
pub fn design_filterbank(fs: f64, f0: f64, n_taps: usize) -> Result<Filterbank> {
    if !(f0 > 0.0 && fs > 0.0) {
        return Err(Error::Domain(format!(
            "carrier and sample rate must be positive, got f0 = {f0}, fs = {fs}"
        )));
    }
    let bp_stop2 = f0 * (BANDPASS_UPPER_EDGE + 2.0 * TRANSITION_FRACTION);
    if bp_stop2 >= fs / 2.0 {
        return Err(Error::Domain(format!(
            "bandpass stopband must start below Nyquist: {bp_stop2} ≥ {}",
            fs / 2.0
        )));
    }
    let pass_hi = f0 * (1.0 - TRANSITION_FRACTION);
    let stop_lo = f0 * (1.0 + TRANSITION_FRACTION);
    let bp_hi = f0 * BANDPASS_UPPER_EDGE;

    let lowpass = design_equiripple(
        n_taps,
        fs,
        &[
            BandSpec { lo: 0.0, hi: pass_hi, desired: 1.0, weight: PASSBAND_WEIGHT },
            BandSpec { lo: stop_lo, hi: fs / 2.0, desired: 0.0, weight: 1.0 },
        ],
    )?;
    let bandpass = design_equiripple(
        n_taps,
        fs,
        &[
            BandSpec { lo: 0.0, hi: pass_hi, desired: 0.0, weight: 1.0 },
            BandSpec { lo: stop_lo, hi: bp_hi, desired: 1.0, weight: PASSBAND_WEIGHT },
            BandSpec { lo: bp_stop2, hi: fs / 2.0, desired: 0.0, weight: 1.0 },
        ],
    )?;

    let bank = Filterbank { lowpass, bandpass, fs, f0 };
    let mlp = bank.measure_lowpass();
    let mbp = bank.measure_bandpass();

    let ripple = mlp.ripple_db.max(mbp.ripple_db);
    let attenuation = mlp.attenuation_db.min(mbp.attenuation_db);
    let gain_gap_db = (20.0 * (mlp.gain_peak / mbp.gain_peak).log10()).abs();
    let enbw_ratio = mbp.enbw_hz / mlp.enbw_hz;
    let feasible = ripple <= RIPPLE_MAX_DB
        && attenuation >= ATTENUATION_MIN_DB
        && gain_gap_db <= GAIN_GAP_MAX_DB
        && (enbw_ratio - 1.0).abs() <= ENBW_RATIO_TOL;
    if !feasible {
        return Err(Error::SpecInfeasible {
            taps: n_taps,
            achieved_attenuation_db: attenuation,
            achieved_ripple_db: ripple,
        });
    }
    Ok(bank)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remez::tap_gain;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn reference_bank() -> Filterbank {
        design_filterbank(20e6, 1e6, 291).unwrap()
    }

    #[test]
    fn lowpass_meets_measured_figures() {
        let m = reference_bank().measure_lowpass();
        assert_abs_diff_eq!(m.ripple_db, 0.3607, epsilon = 0.01);
        assert_abs_diff_eq!(m.attenuation_db, 30.91, epsilon = 0.2);
        assert_relative_eq!(m.enbw_hz, 0.950252e6, max_relative = 5e-3);
        assert_abs_diff_eq!(m.gain_min, 0.97930, epsilon = 2e-3);
        assert_abs_diff_eq!(m.gain_peak, 1.02082, epsilon = 2e-3);
    }

    #[test]
    fn bandpass_meets_measured_figures() {
        let m = reference_bank().measure_bandpass();
        assert_abs_diff_eq!(m.ripple_db, 0.3810, epsilon = 0.01);
        assert_abs_diff_eq!(m.attenuation_db, 30.44, epsilon = 0.2);
        assert_relative_eq!(m.enbw_hz, 0.944505e6, max_relative = 5e-3);
    }

    #[test]
    fn branches_are_matched_for_fair_detection() {
        let bank = reference_bank();
        let mlp = bank.measure_lowpass();
        let mbp = bank.measure_bandpass();
        let gap_db = (20.0 * (mlp.gain_peak / mbp.gain_peak).log10()).abs();
        assert_abs_diff_eq!(gap_db, 0.0104, epsilon = 3e-3);
        assert!(gap_db < GAIN_GAP_MAX_DB);
        let ratio = mbp.enbw_hz / mlp.enbw_hz;
        assert_abs_diff_eq!(ratio, 0.9940, epsilon = 3e-3);
        assert!((ratio - 1.0).abs() < ENBW_RATIO_TOL);
    }

    #[test]
    fn passband_deviations_follow_the_weighting() {
        // The 1.374:1 weighting makes δ_stop/δ_pass ≈ 1.374 at the optimum.
        let m = reference_bank().measure_lowpass();
        let dp = 0.5 * (m.gain_peak - m.gain_min);
        let ds = 10f64.powf(-m.attenuation_db / 20.0);
        assert_abs_diff_eq!(ds / dp, PASSBAND_WEIGHT, epsilon = 0.02);
    }

    #[test]
    fn group_delay_is_the_midpoint() {
        assert_eq!(reference_bank().group_delay(), 145);
    }

    #[test]
    fn tones_land_in_the_right_branches() {
        let bank = reference_bank();
        let (f_lo, f_hi) = (845_154.254728, 1_290_994.448736);
        // Keying tones pass their own branch near unit gain...
        assert!((tap_gain(&bank.lowpass, f_lo, bank.fs) - 1.0).abs() < 0.03);
        assert!((tap_gain(&bank.bandpass, f_hi, bank.fs) - 1.0).abs() < 0.03);
        // ...and are rejected ≥30 dB by the other branch.
        assert!(tap_gain(&bank.lowpass, f_hi, bank.fs) < 0.0317);
        assert!(tap_gain(&bank.bandpass, f_lo, bank.fs) < 0.0317);
    }

    #[test]
    fn short_bank_is_infeasible() {
        match design_filterbank(20e6, 1e6, 101) {
            Err(Error::SpecInfeasible {
                taps,
                achieved_attenuation_db,
                achieved_ripple_db,
            }) => {
                assert_eq!(taps, 101);
                // The 101-tap lowpass lands near 14 dB attenuation and
                // 2.4 dB ripple with these transition widths.
                assert!((13.0..16.0).contains(&achieved_attenuation_db));
                assert!((2.0..3.0).contains(&achieved_ripple_db));
            }
            other => panic!("expected SpecInfeasible, got {other:?}"),
        }
    }

    #[test]
    fn rejects_geometry_beyond_nyquist() {
        assert!(matches!(
            design_filterbank(4e6, 1e6, 291),
            Err(Error::Domain(_))
        ));
    }
}
