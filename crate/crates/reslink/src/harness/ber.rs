//! Monte Carlo bit-error-rate engine: seeding, calibration, and the
//! per-point frame loop.
//!
//! Simulation is frame-based: each frame carries a few warmup bits (long
//! enough for the channel transient to die out, discarded from the error
//! count) followed by the scored data bits, and draws its data and noise
//! from an RNG stream derived from `(master seed, point index, frame
//! index)` — so any point of any sweep can be reproduced in isolation, and
//! frames are independent by construction.
//!
//! The SNR axis is defined at the correlator input: a noiseless calibration
//! frame (reserved frame index) fixes the mean received symbol energy `Es`
//! over the useful window, and the white-noise scale realizes
//! `Es/N0 = Es/(2σ²·ts)`. Transmitter-side (channel-shaped) noise is scaled
//! by the analytic ratio of correlator-output variances so both injection
//! sides share the same axis.

use serde::Serialize;
use std::f64::consts::TAU;

use crate::channel::{
    apply_channel, bilinear_discretize, fir_taps, gaussian_stream, FirChannel, NoiseModel,
    PartialFractionExpansion, DEFAULT_ENERGY_TOL, DEFAULT_ENVELOPE_THRESHOLD, STREAM_DATA,
};
use crate::circuit::{CircuitParams, TransferFunction};
use crate::error::Result;
use crate::harness::config::NoiseSide;
use crate::modem::{
    coherent_demod, measure_symbol_energy, modulate, theoretical_ber, ModemConfig, PhaseReference,
};

// ---------------------------------------------------------------------------
// Seeding and budgets
// ---------------------------------------------------------------------------

/// z-score of the two-sided 95% normal interval.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Frame index reserved for the noiseless calibration pass of a point.
pub const CALIBRATION_FRAME: u32 = u32::MAX;

/// Data bits per frame: long frames amortize the warmup, short symbols
/// allow more of them.
pub fn frame_size(rate_bps: f64) -> usize {
    if rate_bps >= 2e5 {
        512
    } else {
        256
    }
}

/// Warmup symbols discarded at the head of every frame: three effective
/// channel durations rounded up, never fewer than two symbols.
pub fn warmup_bits(t_eff: f64, symbol_period: f64) -> usize {
    (3.0 * t_eff / symbol_period).ceil().max(2.0) as usize
}

/// Derives the RNG seed of one frame from `(master, point, frame)` with the
/// splitmix64 finalizer, so neighboring indices land in unrelated streams.
pub fn derive_seed(master: u64, point: u32, frame: u32) -> u64 {
    let mut z = master ^ ((u64::from(point) << 32) | u64::from(frame))
        .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Equiprobable data bits for one frame, from the data substream of a seed.
pub fn frame_data_bits(seed: u64, len: usize) -> Vec<u8> {
    gaussian_stream(seed, STREAM_DATA, len)
        .iter()
        .map(|&g| u8::from(g > 0.0))
        .collect()
}

/// Wilson 95% score interval for `errors` successes in `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // At the extremes the bound is exactly the observation; don't let
    // floating-point residue pull it off the boundary.
    let lo = if errors == 0 {
        0.0
    } else {
        ((center - half) / denom).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        ((center + half) / denom).min(1.0)
    };
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Link construction
// ---------------------------------------------------------------------------

/// The physical link one sweep runs over: validated circuit, its
/// equivalent FIR channel at the modem sample rate, and the effective
/// impulse-response duration used to size frame warmups.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    /// Circuit parameters of the true channel.
    pub params: CircuitParams,
    /// Discrete channel at the modem sample rate.
    pub channel: FirChannel,
    /// Effective impulse-response duration at the default envelope
    /// threshold (s).
    pub t_eff: f64,
}

/// Discretizes the link at a sample rate and measures its effective
/// duration.
///
/// # Errors
///
/// Propagates pole finding, aliasing, and stability errors from the
/// channel construction.
pub fn build_link(params: &CircuitParams, fs: f64) -> Result<LinkSetup> {
    let tf = TransferFunction::from_params(params);
    let hz = bilinear_discretize(&tf, 1.0 / fs)?;
    let channel = fir_taps(&hz, DEFAULT_ENERGY_TOL)?;
    let poles = tf.find_poles()?;
    let pf = PartialFractionExpansion::new(&poles, &tf)?;
    let t_eff = pf.effective_duration(DEFAULT_ENVELOPE_THRESHOLD, pf.peak_magnitude());
    Ok(LinkSetup {
        params: *params,
        channel,
        t_eff,
    })
}

// ---------------------------------------------------------------------------
// SNR calibration
// ---------------------------------------------------------------------------

/// Measures `Es` at the correlator input: modulates the calibration
/// frame's bits, passes them through the noiseless channel, and averages
/// the received symbol energy over the data region.
///
/// # Errors
///
/// Propagates demodulation-geometry errors ([`Error::LengthMismatch`],
/// [`Error::Domain`]).
pub fn calibrate_symbol_energy(
    cfg: &ModemConfig,
    link: &LinkSetup,
    master: u64,
    point: u32,
    data_bits: usize,
) -> Result<f64> {
    let warmup = warmup_bits(link.t_eff, cfg.symbol_period());
    let seed = derive_seed(master, point, CALIBRATION_FRAME);
    let bits = frame_data_bits(seed, warmup + data_bits);
    let (tx, _) = modulate(&bits, cfg);
    let y = apply_channel(&tx, &link.channel, &NoiseModel::off(), seed);
    measure_symbol_energy(&y[warmup * cfg.samples_per_symbol()..], data_bits, cfg)
}

/// White-noise scale realizing `Es/N0 = Es/(2σ²·ts)` at a sample rate.
pub fn sigma_for(es: f64, es_n0_db: f64, fs: f64) -> f64 {
    let ratio = 10f64.powf(es_n0_db / 10.0);
    (es * fs / (2.0 * ratio)).sqrt()
}

/// Ratio of correlator-output noise variance under transmitter-side
/// (unit-energy channel-shaped, unit σ1) versus receiver-side (white, unit
/// σ2) injection, averaged over the two tone templates.
///
/// For white noise the correlator variance is `σ²·ts²·Σs²`; for shaped
/// noise it is `σ1²·ts²·Σᵢⱼ sᵢsⱼ·ρ̃(i−j)` with `ρ̃` the autocorrelation of
/// the unit-energy taps. Matching the two variances puts both injection
/// sides on the same `Es/N0` axis.
pub fn correlator_variance_ratio(cfg: &ModemConfig, channel: &FirChannel) -> f64 {
    let energy = channel.tap_energy();
    if energy <= 0.0 {
        return 1.0;
    }
    let scale = energy.sqrt();
    let taps: Vec<f64> = channel.taps.iter().map(|h| h / scale).collect();
    let l = taps.len();
    let mut rho = vec![0.0f64; l];
    for (d, r) in rho.iter_mut().enumerate() {
        for i in 0..l - d {
            *r += taps[i] * taps[i + d];
        }
    }
    let ts = 1.0 / cfg.fs;
    let n_sym = cfg.samples_per_symbol();
    let n_guard = cfg.guard_samples();
    let mut ratio_sum = 0.0;
    for f in [cfg.f_minus, cfg.f_plus] {
        let s: Vec<f64> = (n_guard..n_sym)
            .map(|n| (TAU * f * n as f64 * ts).sin())
            .collect();
        let white: f64 = s.iter().map(|v| v * v).sum();
        let mut shaped = 0.0;
        for i in 0..s.len() {
            shaped += s[i] * s[i] * rho[0];
            for d in 1..l.min(s.len() - i) {
                shaped += 2.0 * s[i] * s[i + d] * rho[d];
            }
        }
        ratio_sum += shaped / white;
    }
    ratio_sum / 2.0
}

/// Per-frame noise scales realizing one axis value on a chosen side. The
/// `variance_ratio` converts the white-noise scale into the shaped-noise
/// scale of equal correlator-output variance.
pub fn noise_scales(side: NoiseSide, sigma: f64, variance_ratio: f64) -> (f64, f64) {
    match side {
        NoiseSide::Receiver => (0.0, sigma),
        NoiseSide::Transmitter => (sigma / variance_ratio.sqrt(), 0.0),
        NoiseSide::Mixed => (
            sigma / (2.0 * variance_ratio).sqrt(),
            sigma / 2f64.sqrt(),
        ),
    }
}

// ---------------------------------------------------------------------------
// The per-point loop
// ---------------------------------------------------------------------------

/// One measured point of a BER sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerPoint {
    /// Symbol SNR at the correlator input (dB).
    pub es_n0_db: f64,
    /// Transmitter-side noise scale used.
    pub sigma1: f64,
    /// Receiver-side noise scale used.
    pub sigma2: f64,
    /// Calibrated symbol energy at the correlator input (J at 1 Ω).
    pub es_joules: f64,
    /// Data bits scored.
    pub bits: u64,
    /// Bit errors seen.
    pub errors: u64,
    /// Frames simulated.
    pub frames: u64,
    /// Point estimate `errors/bits`.
    pub ber: f64,
    /// Wilson 95% lower bound.
    pub ci_low: f64,
    /// Wilson 95% upper bound.
    pub ci_high: f64,
    /// Coherent orthogonal-FSK reference `½·erfc(√(Es/2N0))` at the same
    /// axis value.
    pub reference_ber: f64,
}

/// Runs frames at one sweep point until the error-event target or the
/// frame cap is reached, scoring only the data region of each frame
/// against the transmitted bits.
///
/// # Errors
///
/// Propagates noise-model and demodulation errors.
#[allow(clippy::too_many_arguments)]
pub fn run_point(
    cfg: &ModemConfig,
    link: &LinkSetup,
    es_n0_db: f64,
    scales: (f64, f64),
    master: u64,
    point: u32,
    data_bits: usize,
    target_errors: u64,
    max_frames: u64,
) -> Result<BerPoint> {
    let warmup = warmup_bits(link.t_eff, cfg.symbol_period());
    let nm = NoiseModel::new(scales.0, scales.1)?;
    let h_minus = link.channel.response_at(cfg.f_minus);
    let h_plus = link.channel.response_at(cfg.f_plus);
    let es = calibrate_symbol_energy(cfg, link, master, point, data_bits)?;
    let mut errors = 0u64;
    let mut bits = 0u64;
    let mut frames = 0u64;
    while frames < max_frames && errors < target_errors {
        let seed = derive_seed(master, point, frames as u32);
        let tx_bits = frame_data_bits(seed, warmup + data_bits);
        let (tx, frame) = modulate(&tx_bits, cfg);
        let y = apply_channel(&tx, &link.channel, &nm, seed);
        let phase = PhaseReference::genie(&frame, h_minus, h_plus);
        let decision = coherent_demod(&y, cfg, &phase)?;
        for (d, b) in decision.bits[warmup..]
            .iter()
            .zip(frame.bits[warmup..].iter())
        {
            errors += u64::from(d != b);
        }
        bits += data_bits as u64;
        frames += 1;
    }
    let (ci_low, ci_high) = wilson_interval(errors, bits);
    Ok(BerPoint {
        es_n0_db,
        sigma1: scales.0,
        sigma2: scales.1,
        es_joules: es,
        bits,
        errors,
        frames,
        ber: errors as f64 / bits as f64,
        ci_low,
        ci_high,
        reference_ber: theoretical_ber(es_n0_db),
    })
}

/// Inverts the coherent orthogonal-FSK reference curve: the `Es/N0` (dB)
/// at which [`theoretical_ber`] equals `ber`, by bisection over
/// `[−20, 40]` dB. Callers use it to express BER differences as horizontal
/// (dB) gaps.
pub fn es_n0_required_db(ber: f64) -> f64 {
    let (mut lo, mut hi) = (-20.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theoretical_ber(mid) > ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::peak_frequencies_approx;
    use crate::modem::WaveformKind;

    fn flat_link(fs: f64) -> LinkSetup {
        LinkSetup {
            params: CircuitParams::reference_link(0.4).unwrap(),
            channel: FirChannel {
                taps: vec![1.0],
                j: 1,
                ts: 1.0 / fs,
            },
            t_eff: 0.0,
        }
    }

    fn modem_20k() -> ModemConfig {
        let (fm, fp) = peak_frequencies_approx(0.4, 1e6).unwrap();
        ModemConfig::for_rate(fm, fp, 20e3, WaveformKind::Fsk).unwrap()
    }

    #[test]
    fn seeds_separate_points_frames_and_masters() {
        let base = derive_seed(7, 0, 0);
        let others = [
            derive_seed(7, 0, 1),
            derive_seed(7, 1, 0),
            derive_seed(8, 0, 0),
            derive_seed(7, 0, CALIBRATION_FRAME),
        ];
        for o in others {
            assert_ne!(base, o);
            // Avalanche sanity: roughly half the bits flip.
            assert!((base ^ o).count_ones() > 12);
        }
    }

    #[test]
    fn wilson_interval_brackets_the_point_estimate() {
        let (lo, hi) = wilson_interval(5, 1000);
        assert!(lo < 0.005 && 0.005 < hi);
        assert!(lo > 0.0015 && hi < 0.013, "got ({lo}, {hi})");

        // Zero errors: lower edge exactly 0, upper edge z²/(n+z²).
        let (lo0, hi0) = wilson_interval(0, 100);
        assert_eq!(lo0, 0.0);
        let z2 = WILSON_Z * WILSON_Z;
        assert!((hi0 - z2 / (100.0 + z2)).abs() < 1e-12);

        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn warmup_floors_at_two_symbols() {
        assert_eq!(warmup_bits(7.76e-6, 5e-5), 2);
        assert_eq!(warmup_bits(7.76e-6, 1.0 / 300e3), 7);
        assert_eq!(warmup_bits(0.0, 5e-5), 2);
    }

    #[test]
    fn sigma_realizes_the_snr_definition() {
        let es = 3.2e-5;
        let fs = 20e6;
        for x in [0.0, 7.5, 12.0] {
            let sigma = sigma_for(es, x, fs);
            let ts = 1.0 / fs;
            let ratio = es / (2.0 * sigma * sigma * ts);
            assert!((10.0 * ratio.log10() - x).abs() < 1e-9);
        }
    }

    #[test]
    fn required_db_inverts_the_reference_curve() {
        for x in [4.0, 9.0, 13.0] {
            let p = theoretical_ber(x);
            assert!((es_n0_required_db(p) - x).abs() < 1e-6);
        }
    }

    #[test]
    fn calibrated_energy_tracks_the_tone_gains() {
        let cfg = modem_20k();
        let params = CircuitParams::reference_link(0.4).unwrap();
        let link = build_link(&params, cfg.fs).unwrap();
        let es = calibrate_symbol_energy(&cfg, &link, 11, 0, 128).unwrap();
        // √2-amplitude tones through gains |H(f±)| carry power |H|², so
        // Es ≈ Tu·mean(|H(f−)|², |H(f+)|²) for an even bit mix.
        let g2m = link.channel.response_at(cfg.f_minus).norm_sqr();
        let g2p = link.channel.response_at(cfg.f_plus).norm_sqr();
        let expected = cfg.tu * 0.5 * (g2m + g2p);
        assert!(
            (es - expected).abs() < 0.05 * expected,
            "es = {es}, tone-gain prediction = {expected}"
        );
    }

    #[test]
    fn variance_ratio_matches_an_empirical_measurement() {
        let cfg = modem_20k();
        let params = CircuitParams::reference_link(0.4).unwrap();
        let link = build_link(&params, cfg.fs).unwrap();
        let analytic = correlator_variance_ratio(&cfg, &link.channel);

        // Noise-only frames through the shaped path vs. the white path,
        // correlated exactly as the receiver would.
        let n_symbols = 48;
        let zeros = vec![0.0; n_symbols * cfg.samples_per_symbol()];
        let frame = crate::modem::SymbolFrame::new(&vec![0u8; n_symbols], &cfg);
        let phase = PhaseReference::flat(&frame);
        let mut var = [0.0f64; 2];
        let mut count = 0usize;
        for rep in 0..24u32 {
            for (side, nm) in [
                NoiseModel::new(1.0, 0.0).unwrap(),
                NoiseModel::new(0.0, 1.0).unwrap(),
            ]
            .iter()
            .enumerate()
            {
                let y = apply_channel(&zeros, &link.channel, nm, derive_seed(99, side as u32, rep));
                let d = coherent_demod(&y, &cfg, &phase).unwrap();
                var[side] += d
                    .y_minus
                    .iter()
                    .chain(d.y_plus.iter())
                    .map(|v| v * v)
                    .sum::<f64>();
            }
            count += 2 * n_symbols;
        }
        let empirical = var[0] / var[1];
        assert!(
            (empirical - analytic).abs() < 0.12 * analytic,
            "analytic {analytic}, empirical {empirical} over {count} correlations"
        );
    }

    #[test]
    fn zero_noise_points_decode_without_errors() {
        let cfg = modem_20k();
        let params = CircuitParams::reference_link(0.4).unwrap();
        let link = build_link(&params, cfg.fs).unwrap();
        let p = run_point(&cfg, &link, 30.0, (0.0, 0.0), 5, 0, 64, 10, 2).unwrap();
        assert_eq!(p.errors, 0);
        assert_eq!(p.frames, 2, "noiseless run exhausts the frame cap");
        assert_eq!(p.bits, 128);
        assert_eq!(p.ci_low, 0.0);
    }

    #[test]
    fn every_point_terminates_at_the_frame_cap() {
        let cfg = modem_20k();
        let link = flat_link(cfg.fs);
        // Absurd target, tiny cap: the loop must stop at the cap.
        let p = run_point(&cfg, &link, -5.0, (0.0, 50.0), 5, 1, 32, u64::MAX - 1, 3).unwrap();
        assert_eq!(p.frames, 3);
        assert!(p.errors > 0, "σ ≫ signal must produce errors");
    }

    #[test]
    fn awgn_control_point_matches_the_reference_curve() {
        let cfg = modem_20k();
        let link = flat_link(cfg.fs);
        let x = 9.0;
        let es = calibrate_symbol_energy(&cfg, &link, 42, 0, 256).unwrap();
        let sigma = sigma_for(es, x, cfg.fs);
        let p = run_point(&cfg, &link, x, (0.0, sigma), 42, 0, 256, 100, 4000).unwrap();
        let truth = theoretical_ber(x);
        assert!(
            p.ci_low <= truth && truth <= p.ci_high,
            "AWGN control: CI ({}, {}) missed the reference {truth}",
            p.ci_low,
            p.ci_high
        );
        assert!(p.errors >= 100);
    }

    #[test]
    fn wilson_intervals_cover_the_truth_on_awgn_controls() {
        // Spec honesty check: over repeated AWGN calibration runs, the 95%
        // intervals must contain the reference BER at least 90% of the
        // time. Deterministic seeds make this a fixed outcome.
        let cfg = modem_20k();
        let link = flat_link(cfg.fs);
        let x = 8.0;
        let truth = theoretical_ber(x);
        let es = calibrate_symbol_energy(&cfg, &link, 1000, 0, 256).unwrap();
        let sigma = sigma_for(es, x, cfg.fs);
        let runs: u64 = 20;
        let covered = (0..runs)
            .filter(|&m| {
                let p =
                    run_point(&cfg, &link, x, (0.0, sigma), 2000 + m, 0, 256, 40, 4000).unwrap();
                p.ci_low <= truth && truth <= p.ci_high
            })
            .count() as u64;
        assert!(
            covered * 10 >= runs * 9,
            "only {covered}/{runs} intervals covered the reference"
        );
    }
}
