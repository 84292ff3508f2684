//! Experiment configuration: one serializable description of a run.
//!
//! Everything a sweep needs — component values, coupling (true and
//! estimated), rates, guard policy, waveform family, SNR grid, noise
//! injection side, trial budget, and the master seed — lives in a single
//! [`ExperimentConfig`]. Identical configs hash identically, and every
//! random draw in an experiment derives from `(seed, point, frame)`, so a
//! config plus its seed pins the output byte for byte.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{peak_frequencies_approx, CircuitParams};
use crate::error::{Error, Result};
use crate::modem::{ModemConfig, WaveformKind, BASE_SAMPLE_RATE};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Component values of the link under test: the serializable mirror of
/// [`CircuitParams`], free of derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitBlock {
    /// Primary series capacitance (F).
    pub c1: f64,
    /// Secondary series capacitance (F).
    pub c2: f64,
    /// Primary coil inductance (H).
    pub l1: f64,
    /// Secondary coil inductance (H).
    pub l2: f64,
    /// Primary coil loss resistance (Ω).
    pub r1: f64,
    /// Secondary coil loss resistance (Ω).
    pub r2: f64,
    /// Source internal resistance (Ω).
    pub rs: f64,
    /// Load resistance (Ω).
    pub rl: f64,
}

impl CircuitBlock {
    /// The reference 1-MHz link: 4 nF / 6.3 µH meshes, 0.62 Ω coils,
    /// 0.17 Ω source, 10 Ω load.
    pub fn reference() -> Self {
        Self {
            c1: 4e-9,
            c2: 4e-9,
            l1: 6.3e-6,
            l2: 6.3e-6,
            r1: 0.62,
            r2: 0.62,
            rs: 0.17,
            rl: 10.0,
        }
    }

    /// Builds validated circuit parameters at a coupling.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] from [`CircuitParams::new`] for nonpositive
    /// components, out-of-range `k`, or detuned meshes.
    pub fn params(&self, k: f64) -> Result<CircuitParams> {
        CircuitParams::new(
            self.c1, self.c2, self.l1, self.l2, self.r1, self.r2, self.rs, self.rl, k,
        )
    }
}

/// Guard-interval policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GuardPolicy {
    /// `Tg = T/11`: the guard is one tenth of the useful window at every
    /// rate.
    SymbolFraction,
    /// A fixed guard length in seconds, independent of the bit rate.
    Absolute {
        /// Guard duration (s); must stay below the symbol period.
        seconds: f64,
    },
}

/// Which port injects the Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseSide {
    /// Receiver-side white noise only (σ2).
    Receiver,
    /// Transmitter-side channel-shaped noise only (σ1), scaled so the
    /// correlator-output variance matches the receiver-side case.
    Transmitter,
    /// Both ports, each contributing half the correlator-output variance.
    Mixed,
}

// ---------------------------------------------------------------------------
// The experiment config
// ---------------------------------------------------------------------------

/// Complete description of a reproducible experiment.
///
/// The symbol SNR axis `Es/N0` is defined at the correlator input: `Es` is
/// the mean received symbol energy over the useful window, fixed by a
/// noiseless calibration frame per sweep point, and `N0 = 2σ²·ts` for the
/// receiver-side white noise of scale `σ` at sample spacing `ts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Component values of the physical link.
    pub circuit: CircuitBlock,
    /// True coupling coefficient of the channel.
    pub k: f64,
    /// Coupling estimate the transmitter uses to place its keying tones.
    pub k_tx: f64,
    /// Coupling estimate the receiver uses for its templates.
    pub k_rx: f64,
    /// Nominal design resonance (Hz) for tone placement; the keying tones
    /// are `f± = f0/√(1∓k)` evaluated here.
    pub nominal_f0_hz: f64,
    /// Bit rates to sweep (bits/s).
    pub rates_bps: Vec<f64>,
    /// Guard-interval policy.
    pub guard: GuardPolicy,
    /// Transmit waveform family.
    pub waveform: WaveformKind,
    /// Symbol-SNR grid at the correlator input (dB).
    pub es_n0_grid_db: Vec<f64>,
    /// Symbol-SNR grid for the marginal-coupling cases (dB), which probe
    /// much deeper bit error rates than the main sweep.
    pub offpeak_es_n0_grid_db: Vec<f64>,
    /// Bit rate of the marginal-coupling cases (bits/s).
    pub offpeak_rate_bps: f64,
    /// Noise injection side.
    pub noise_side: NoiseSide,
    /// Stop a grid point once this many bit errors have been seen.
    pub target_error_events: u64,
    /// Hard frame cap per grid point, so every point terminates.
    pub max_frames_per_point: u64,
    /// Coupling estimates swept by the mismatch experiment (true coupling
    /// stays [`Self::k`]).
    pub mismatch_estimates: Vec<f64>,
    /// Couplings for the efficiency-report curves.
    pub efficiency_couplings: Vec<f64>,
    /// Window length for transient (tone-switch) efficiency (s).
    pub transition_window_s: f64,
    /// Master seed; every frame derives its RNG stream from
    /// `(seed, point index, frame index)`.
    pub seed: u64,
}

impl ExperimentConfig {
    /// The built-in `reference` configuration: the reference link at
    /// `k = 0.4` with matched tone estimates, Fig.-style rates of 20 and
    /// 200 kbit/s, receiver-side noise, and a 100-error-event budget.
    pub fn reference() -> Self {
        Self {
            circuit: CircuitBlock::reference(),
            k: 0.4,
            k_tx: 0.4,
            k_rx: 0.4,
            nominal_f0_hz: 1e6,
            rates_bps: vec![20e3, 200e3],
            guard: GuardPolicy::SymbolFraction,
            waveform: WaveformKind::Fsk,
            es_n0_grid_db: vec![6.0, 8.0, 9.0, 10.0, 11.0],
            offpeak_es_n0_grid_db: vec![13.0, 15.0, 17.0, 18.5, 20.0],
            offpeak_rate_bps: 300e3,
            noise_side: NoiseSide::Receiver,
            target_error_events: 100,
            max_frames_per_point: 2600,
            mismatch_estimates: vec![0.3, 0.4, 0.5],
            efficiency_couplings: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            transition_window_s: 1e-5,
            seed: 1,
        }
    }

    /// Looks up a built-in configuration by name. Currently only
    /// `"reference"` exists.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "reference" => Some(Self::reference()),
            _ => None,
        }
    }

    /// Checks every field against its documented domain.
    ///
    /// # Errors
    ///
    /// [`Error::Config`] naming the offending field.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("k_tx", self.k_tx), ("k_rx", self.k_rx)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} must lie in [0, 1), got {v}"
                )));
            }
        }
        for &k in &self.mismatch_estimates {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::Config(format!(
                    "mismatch estimate {k} outside [0, 1)"
                )));
            }
        }
        for &k in &self.efficiency_couplings {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::Config(format!(
                    "efficiency coupling {k} outside [0, 1)"
                )));
            }
        }
        if self.rates_bps.is_empty() {
            return Err(Error::Config("at least one bit rate is required".into()));
        }
        for rates in [&self.rates_bps, &vec![self.offpeak_rate_bps]] {
            for &r in rates {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Config(format!(
                        "bit rates must be positive, got {r}"
                    )));
                }
                if let GuardPolicy::Absolute { seconds } = self.guard {
                    if !(seconds >= 0.0 && seconds.is_finite() && seconds < 1.0 / r) {
                        return Err(Error::Config(format!(
                            "absolute guard {seconds} s does not fit in the {r} bit/s \
                             symbol period"
                        )));
                    }
                }
            }
        }
        if self.es_n0_grid_db.is_empty() || self.offpeak_es_n0_grid_db.is_empty() {
            return Err(Error::Config("the Es/N0 grids must be non-empty".into()));
        }
        for &x in self.es_n0_grid_db.iter().chain(&self.offpeak_es_n0_grid_db) {
            if !x.is_finite() {
                return Err(Error::Config(format!("Es/N0 grid value {x} is not finite")));
            }
        }
        if self.target_error_events == 0 {
            return Err(Error::Config(
                "the error-event target must be at least 1".into(),
            ));
        }
        if self.max_frames_per_point == 0 || self.max_frames_per_point >= u64::from(u32::MAX) {
            return Err(Error::Config(format!(
                "the frame cap must lie in [1, {}], got {}",
                u32::MAX - 1,
                self.max_frames_per_point
            )));
        }
        if !(self.nominal_f0_hz > 0.0 && self.nominal_f0_hz.is_finite()) {
            return Err(Error::Config(format!(
                "nominal f0 must be positive, got {}",
                self.nominal_f0_hz
            )));
        }
        if !(self.transition_window_s > 0.0 && self.transition_window_s.is_finite()) {
            return Err(Error::Config(format!(
                "transition window must be positive, got {}",
                self.transition_window_s
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON serialization (fixed field order,
    /// shortest round-trip numbers), as lowercase hex. Two configs hash
    /// equal exactly when every field matches bit for bit.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Keying tones the transmitter places from its coupling estimate:
    /// `f± = f0/√(1∓k_tx)` at the nominal design resonance.
    pub fn transmit_tones(&self) -> Result<(f64, f64)> {
        peak_frequencies_approx(self.k_tx, self.nominal_f0_hz)
    }

    /// Builds the modem configuration for one rate, tone pair, and
    /// waveform family under this config's guard policy. The sample rate
    /// is the smallest integer-samples-per-symbol rate at or above
    /// 20 MSa/s in either policy.
    ///
    /// # Errors
    ///
    /// [`Error::Config`] if an absolute guard does not fit in the symbol;
    /// [`Error::Domain`] from [`ModemConfig::new`] for bad tones.
    pub fn modem_for(
        &self,
        rate_bps: f64,
        tones: (f64, f64),
        kind: WaveformKind,
    ) -> Result<ModemConfig> {
        match self.guard {
            GuardPolicy::SymbolFraction => {
                ModemConfig::for_rate(tones.0, tones.1, rate_bps, kind)
            }
            GuardPolicy::Absolute { seconds } => {
                let t = 1.0 / rate_bps;
                if !(seconds >= 0.0 && seconds < t) {
                    return Err(Error::Config(format!(
                        "absolute guard {seconds} s does not fit in the {rate_bps} bit/s \
                         symbol period"
                    )));
                }
                let n_sym = (BASE_SAMPLE_RATE / rate_bps - 1e-9).ceil().max(1.0);
                ModemConfig::new(tones.0, tones.1, t - seconds, seconds, n_sym * rate_bps, kind)
            }
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::reference()
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
