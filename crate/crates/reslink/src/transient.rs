//! Time-domain simulation of the two-coil resonant link.
//!
//! The mesh equations of the link, read in the time domain, form a
//! four-state ODE system in the mesh currents and capacitor voltages:
//!
//! ```text
//! [ L1 −M ]·[di1/dt]   [ v1 − R'S·i1 − vC1 ]      dvC1/dt = i1/C1
//! [ −M  L2] [di2/dt] = [ −vC2 − R'L·i2     ]      dvC2/dt = i2/C2
//! ```
//!
//! A classical fixed-step fourth-order Runge–Kutta integrator advances the
//! system under an arbitrary source waveform [`Drive`]. On top of the raw
//! integrator sit the measurement helpers used by the experiments: energy
//! bookkeeping by trapezoidal quadrature (source input, load output, and
//! per-resistor dissipation), tone-switch transition studies and their
//! transient efficiency `E_out/E_in`, steady-state settling, and a
//! stepped-tone response sweep (the quasi-static limit of a slow chirp).
//!
//! Everything here is deterministic and seedless: results are pure
//! functions of the circuit parameters, the drive, and the time grid.

use std::f64::consts::TAU;
use std::io::Write;

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Grid policy
// ---------------------------------------------------------------------------

/// Integration steps per period of the fastest drive tone used by
/// [`default_step`].
pub const DEFAULT_STEPS_PER_CYCLE: f64 = 100.0;

/// Hard lower bound on steps per period of the fastest drive tone;
/// [`integrate`] rejects coarser grids with [`Error::StepTooLarge`].
pub const MIN_STEPS_PER_CYCLE: f64 = 50.0;

/// Steps per period used by the transition and settling studies. The finer
/// grid keeps square-drive runs (whose discontinuities degrade the
/// integrator's effective order) on the same accuracy footing as sine runs.
const STUDY_STEPS_PER_CYCLE: f64 = 400.0;

/// Whole periods of the outgoing tone integrated before a transition study,
/// enough to reach steady state from rest with margin.
const STUDY_SETTLE_CYCLES: f64 = 200.0;

/// Minimum settle budget accepted by [`steady_state_settle`].
const SETTLE_MIN_CYCLES: usize = 50;

/// Relative per-cycle efficiency change below which a settle run is
/// declared stationary.
const SETTLE_RELATIVE_TOL: f64 = 1e-3;

/// A settle run may use up to this multiple of the requested cycle budget
/// before giving up with [`Error::NotSettled`].
const SETTLE_BUDGET_FACTOR: usize = 10;

/// Default integration step for a drive whose fastest tone is `f_max` hertz:
/// one hundred steps per period.
pub fn default_step(f_max: f64) -> f64 {
    1.0 / (DEFAULT_STEPS_PER_CYCLE * f_max)
}

// ---------------------------------------------------------------------------
// State vector and derivatives
// ---------------------------------------------------------------------------

/// Instantaneous state of the link: the two mesh currents and the two
/// capacitor voltages. [`derivatives`] reuses the same shape to hold the
/// time derivative of each field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    /// Primary mesh current (A).
    pub i1: f64,
    /// Secondary mesh current (A), positive toward the load.
    pub i2: f64,
    /// Primary capacitor voltage (V).
    pub v_c1: f64,
    /// Secondary capacitor voltage (V).
    pub v_c2: f64,
}

impl StateVector {
    /// Runge–Kutta stage update `self + h·d`.
    fn axpy(&self, h: f64, d: &StateVector) -> StateVector {
        StateVector {
            i1: self.i1 + h * d.i1,
            i2: self.i2 + h * d.i2,
            v_c1: self.v_c1 + h * d.v_c1,
            v_c2: self.v_c2 + h * d.v_c2,
        }
    }

    fn is_finite(&self) -> bool {
        self.i1.is_finite() && self.i2.is_finite() && self.v_c1.is_finite() && self.v_c2.is_finite()
    }
}

/// State derivative with the 2×2 inductance system already inverted;
/// `inv_det` is `1/(L1·L2 − M²)`.
fn derivatives_unchecked(x: &StateVector, v1: f64, p: &CircuitParams, inv_det: f64) -> StateVector {
    let e1 = v1 - p.r_primary * x.i1 - x.v_c1;
    let e2 = -x.v_c2 - p.r_secondary * x.i2;
    StateVector {
        i1: (p.l2 * e1 + p.m * e2) * inv_det,
        i2: (p.m * e1 + p.l1 * e2) * inv_det,
        v_c1: x.i1 / p.c1,
        v_c2: x.i2 / p.c2,
    }
}

/// Time derivative of the state under instantaneous source voltage `v1`.
///
/// Solves the mesh system
/// `[[L1, −M], [−M, L2]]·[di1/dt, di2/dt]ᵀ = [v1 − R'S·i1 − vC1, −vC2 − R'L·i2]ᵀ`
/// by the closed-form 2×2 inverse and appends the capacitor equations
/// `dvC/dt = i/C`.
///
/// # Errors
///
/// [`Error::SingularInductance`] when `L1·L2 − M² ≤ 0` (coupling at or
/// beyond unity), where the inductance matrix cannot be inverted.
pub fn derivatives(x: &StateVector, v1: f64, p: &CircuitParams) -> Result<StateVector> {
    let det = p.l1 * p.l2 - p.m * p.m;
    if det <= 0.0 {
        return Err(Error::SingularInductance { k: p.k });
    }
    Ok(derivatives_unchecked(x, v1, p, 1.0 / det))
}

/// Total energy stored in the reactive elements at state `x` (J):
/// `½L1·i1² + ½L2·i2² − M·i1·i2` for the coupled coils (the mutual term
/// carries the sign of the mesh convention, where the secondary current
/// circulates so that the mutual voltage enters loop 1 as `−M·di2/dt`)
/// plus `½C·vC²` for each capacitor. Non-negative whenever `M² ≤ L1·L2`.
pub fn stored_energy(p: &CircuitParams, x: &StateVector) -> f64 {
    0.5 * p.l1 * x.i1 * x.i1 + 0.5 * p.l2 * x.i2 * x.i2 - p.m * x.i1 * x.i2
        + 0.5 * p.c1 * x.v_c1 * x.v_c1
        + 0.5 * p.c2 * x.v_c2 * x.v_c2
}

// ---------------------------------------------------------------------------
// Drive waveforms
// ---------------------------------------------------------------------------

/// Source waveform `v1(t)` applied to the primary mesh.
///
/// All tonal variants share one convention: a tone "starts" at phase zero
/// (an upward zero crossing of the sine), and the `square` flag replaces the
/// sine by its sign while keeping the same phase timeline, so sine and
/// square runs are directly comparable.
#[derive(Debug, Clone)]
pub enum Drive {
    /// Silent source, `v1 ≡ 0` (free ringdown).
    Zero,
    /// Single tone `A·sin(2πft)`, or its square-wave version `A·sgn(sin)`.
    Tone {
        /// Amplitude `A` (V).
        amplitude: f64,
        /// Tone frequency (Hz).
        frequency: f64,
        /// Replace the sine by its sign (square-wave drive).
        square: bool,
    },
    /// `f_old` until `t_switch`, then `f_new`, phase-continuous at the
    /// switch: the accumulated phase of the old tone carries over.
    Switch {
        /// Amplitude (V).
        amplitude: f64,
        /// Tone before the switch (Hz).
        f_old: f64,
        /// Tone after the switch (Hz).
        f_new: f64,
        /// Switch instant (s).
        t_switch: f64,
        /// Square-wave drive.
        square: bool,
    },
    /// Continuous-phase binary FSK symbol train: bit 0 keys `f_minus`,
    /// bit 1 keys `f_plus`, with per-symbol start phases precomputed by
    /// [`Drive::fsk`] so the waveform is continuous at symbol boundaries.
    /// Beyond the last symbol the final tone keeps running.
    Fsk {
        /// Amplitude (V).
        amplitude: f64,
        /// Tone keyed by bit 0 (Hz).
        f_minus: f64,
        /// Tone keyed by bit 1 (Hz).
        f_plus: f64,
        /// Symbol period `T` (s).
        symbol_period: f64,
        /// Bit per symbol, normalized to {0, 1}.
        bits: Vec<u8>,
        /// Start phase of each symbol (rad), from the continuity recurrence.
        phases: Vec<f64>,
        /// Square-wave drive (rectified FSK).
        square: bool,
    },
}

/// Tone sample of amplitude `amplitude` at phase `arg`, optionally squared
/// up. The square branch maps a non-negative sine to `+amplitude` so a tone
/// starting at phase zero starts on its positive half-wave.
fn shaped(amplitude: f64, arg: f64, square: bool) -> f64 {
    let s = arg.sin();
    if square {
        if s >= 0.0 {
            amplitude
        } else {
            -amplitude
        }
    } else {
        amplitude * s
    }
}

impl Drive {
    /// Builds a continuous-phase FSK drive. Nonzero bits are normalized to
    /// one; per-symbol start phases follow the recurrence
    /// `φ_{κ+1} = (φ_κ + 2π·f_κ·T) mod 2π` starting at zero.
    pub fn fsk(
        amplitude: f64,
        f_minus: f64,
        f_plus: f64,
        symbol_period: f64,
        bits: &[u8],
        square: bool,
    ) -> Drive {
        let bits: Vec<u8> = bits.iter().map(|&b| u8::from(b != 0)).collect();
        let mut phases = Vec::with_capacity(bits.len());
        let mut phase = 0.0_f64;
        for &b in &bits {
            phases.push(phase);
            let f = if b == 0 { f_minus } else { f_plus };
            phase = (phase + TAU * f * symbol_period) % TAU;
        }
        Drive::Fsk {
            amplitude,
            f_minus,
            f_plus,
            symbol_period,
            bits,
            phases,
            square,
        }
    }

    /// Source voltage at time `t` (V).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Drive::Zero => 0.0,
            Drive::Tone {
                amplitude,
                frequency,
                square,
            } => shaped(*amplitude, TAU * frequency * t, *square),
            Drive::Switch {
                amplitude,
                f_old,
                f_new,
                t_switch,
                square,
            } => {
                if t < *t_switch {
                    shaped(*amplitude, TAU * f_old * t, *square)
                } else {
                    let carried = (TAU * f_old * t_switch) % TAU;
                    shaped(*amplitude, carried + TAU * f_new * (t - t_switch), *square)
                }
            }
            Drive::Fsk {
                amplitude,
                f_minus,
                f_plus,
                symbol_period,
                bits,
                phases,
                square,
            } => {
                if bits.is_empty() {
                    return 0.0;
                }
                let idx = ((t / symbol_period).floor().max(0.0) as usize).min(bits.len() - 1);
                let f = if bits[idx] == 0 { *f_minus } else { *f_plus };
                let arg = phases[idx] + TAU * f * (t - idx as f64 * symbol_period);
                shaped(*amplitude, arg, *square)
            }
        }
    }

    /// Fastest tone present in the drive (Hz); zero for a silent source,
    /// meaning the step-size precondition imposes no constraint.
    pub fn max_frequency(&self) -> f64 {
        match self {
            Drive::Zero => 0.0,
            Drive::Tone { frequency, .. } => *frequency,
            Drive::Switch { f_old, f_new, .. } => f_old.max(*f_new),
            Drive::Fsk { f_minus, f_plus, .. } => f_minus.max(*f_plus),
        }
    }
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// Sampled trajectory of one integration run with its energy ledger.
///
/// The series share one time grid; `v2 = RL·i2` pointwise. Energies are
/// trapezoidal sums over the grid: `e_in = ∫v1·i1 dt` enters from the
/// source, `e_out = ∫v2·i2 dt` reaches the load, and the two loss terms
/// cover the source-plus-primary-coil resistance `R'S = RS + R1` and the
/// secondary coil resistance `R2`. Together with the change in
/// [`stored_energy`] these account for `e_in` to quadrature accuracy.
#[derive(Debug, Clone)]
pub struct TransientResult {
    /// Sample times (s).
    pub t: Vec<f64>,
    /// Source voltage at each sample (V).
    pub v1: Vec<f64>,
    /// Primary mesh current (A).
    pub i1: Vec<f64>,
    /// Load voltage `RL·i2` (V).
    pub v2: Vec<f64>,
    /// Secondary mesh current (A).
    pub i2: Vec<f64>,
    /// Energy delivered by the source, `∫v1·i1 dt` (J).
    pub e_in: f64,
    /// Energy delivered to the load, `∫v2·i2 dt` (J).
    pub e_out: f64,
    /// Energy dissipated in `R'S = RS + R1` (J).
    pub e_loss_primary: f64,
    /// Energy dissipated in the secondary coil resistance `R2` (J).
    pub e_loss_secondary: f64,
    /// State at the last sample, reusable as the next run's initial state.
    pub final_state: StateVector,
}

impl TransientResult {
    /// Output-to-input energy ratio `e_out/e_in` of the run. Lies in
    /// `[0, 1]` for any window starting from rest (the circuit is passive);
    /// NaN for a run with no input energy.
    pub fn eta(&self) -> f64 {
        self.e_out / self.e_in
    }

    /// Writes the trajectory as CSV with header `t,v1,i1,v2,i2`, one row
    /// per sample, values in shortest round-trip decimal form.
    ///
    /// # Errors
    ///
    /// [`Error::Csv`]/[`Error::Io`] on write failure.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "v1", "i1", "v2", "i2"])?;
        for idx in 0..self.t.len() {
            w.write_record([
                self.t[idx].to_string(),
                self.v1[idx].to_string(),
                self.i1[idx].to_string(),
                self.v2[idx].to_string(),
                self.i2[idx].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates the link from `initial` over `t_span = (t0, t1)` under
/// `drive`, with a classical fixed-step fourth-order Runge–Kutta scheme.
///
/// The step is rounded so the span divides into whole steps; energies are
/// accumulated by trapezoidal quadrature on the same grid. The drive is
/// evaluated at absolute time, so consecutive runs chained through
/// `final_state` see one continuous waveform.
///
/// # Errors
///
/// * [`Error::Domain`] for an empty/reversed span or non-positive step.
/// * [`Error::StepTooLarge`] when `dt` gives fewer than
///   [`MIN_STEPS_PER_CYCLE`] steps per period of the fastest drive tone.
/// * [`Error::SingularInductance`] when `L1·L2 − M² ≤ 0`.
/// * [`Error::NumericFailure`] if the state diverges to non-finite values.
pub fn integrate(
    p: &CircuitParams,
    drive: &Drive,
    t_span: (f64, f64),
    dt: f64,
    initial: StateVector,
) -> Result<TransientResult> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::Domain(format!(
            "integration span must satisfy t0 < t1, got ({t0}, {t1})"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    let f_max = drive.max_frequency();
    if f_max > 0.0 {
        let limit = 1.0 / (MIN_STEPS_PER_CYCLE * f_max);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt, limit });
        }
    }
    let det = p.l1 * p.l2 - p.m * p.m;
    if det <= 0.0 {
        return Err(Error::SingularInductance { k: p.k });
    }
    let inv_det = 1.0 / det;

    let span = t1 - t0;
    let n_steps = ((span / dt).round() as usize).max(1);
    let h = span / n_steps as f64;

    let mut t = Vec::with_capacity(n_steps + 1);
    let mut v1 = Vec::with_capacity(n_steps + 1);
    let mut i1 = Vec::with_capacity(n_steps + 1);
    let mut v2 = Vec::with_capacity(n_steps + 1);
    let mut i2 = Vec::with_capacity(n_steps + 1);

    let mut x = initial;
    let v1_0 = drive.eval(t0);
    t.push(t0);
    v1.push(v1_0);
    i1.push(x.i1);
    v2.push(p.rl * x.i2);
    i2.push(x.i2);

    // Instantaneous powers feeding the trapezoidal accumulators:
    // (source input, load output, primary-side loss, secondary-coil loss).
    let powers = |x: &StateVector, v: f64| {
        (
            v * x.i1,
            p.rl * x.i2 * x.i2,
            p.r_primary * x.i1 * x.i1,
            p.r2 * x.i2 * x.i2,
        )
    };
    let mut prev = powers(&x, v1_0);
    let (mut e_in, mut e_out, mut e_loss_primary, mut e_loss_secondary) = (0.0, 0.0, 0.0, 0.0);

    for step in 0..n_steps {
        let ta = t0 + step as f64 * h;
        let tb = t0 + (step + 1) as f64 * h;
        let va = drive.eval(ta);
        let vm = drive.eval(ta + 0.5 * h);
        let vb = drive.eval(tb);

        let k1 = derivatives_unchecked(&x, va, p, inv_det);
        let k2 = derivatives_unchecked(&x.axpy(0.5 * h, &k1), vm, p, inv_det);
        let k3 = derivatives_unchecked(&x.axpy(0.5 * h, &k2), vm, p, inv_det);
        let k4 = derivatives_unchecked(&x.axpy(h, &k3), vb, p, inv_det);
        x = StateVector {
            i1: x.i1 + h / 6.0 * (k1.i1 + 2.0 * k2.i1 + 2.0 * k3.i1 + k4.i1),
            i2: x.i2 + h / 6.0 * (k1.i2 + 2.0 * k2.i2 + 2.0 * k3.i2 + k4.i2),
            v_c1: x.v_c1 + h / 6.0 * (k1.v_c1 + 2.0 * k2.v_c1 + 2.0 * k3.v_c1 + k4.v_c1),
            v_c2: x.v_c2 + h / 6.0 * (k1.v_c2 + 2.0 * k2.v_c2 + 2.0 * k3.v_c2 + k4.v_c2),
        };

        let now = powers(&x, vb);
        e_in += 0.5 * (prev.0 + now.0) * h;
        e_out += 0.5 * (prev.1 + now.1) * h;
        e_loss_primary += 0.5 * (prev.2 + now.2) * h;
        e_loss_secondary += 0.5 * (prev.3 + now.3) * h;
        prev = now;

        t.push(tb);
        v1.push(vb);
        i1.push(x.i1);
        v2.push(p.rl * x.i2);
        i2.push(x.i2);
    }

    if !x.is_finite() {
        return Err(Error::NumericFailure(
            "transient state diverged to non-finite values".into(),
        ));
    }

    Ok(TransientResult {
        t,
        v1,
        i1,
        v2,
        i2,
        e_in,
        e_out,
        e_loss_primary,
        e_loss_secondary,
        final_state: x,
    })
}

// ---------------------------------------------------------------------------
// Transition studies
// ---------------------------------------------------------------------------

/// Source waveform family for a transition study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveWave {
    /// Sinusoidal generator.
    Sine,
    /// Square-wave generator (rectified FSK keying).
    Square,
}

/// Direction of the tone switch in a transition study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// Settle on the upper tone, switch down to the lower tone.
    HighToLow,
    /// Settle on the lower tone, switch up to the upper tone.
    LowToHigh,
}

/// Simulates one tone switch and returns the post-switch window.
///
/// The outgoing tone runs for 200 whole periods from rest (amplitude one,
/// 400 steps per period), which reaches steady state with ample margin.
/// Because whole periods end at an upward zero crossing and the incoming
/// tone starts at phase zero, the source is continuous across the switch.
/// The returned window covers `[0, t_window]` of the incoming tone on a
/// grid of 400 steps per period of the faster tone, with `t = 0` at the
/// switch; its energy ledger (and thus [`TransientResult::eta`]) measures
/// the transition alone.
///
/// # Errors
///
/// [`Error::Domain`] unless `0 < f_minus < f_plus` and `t_window > 0`;
/// otherwise whatever [`integrate`] reports.
pub fn transition_waveform(
    p: &CircuitParams,
    wave: DriveWave,
    transition: Transition,
    tones: (f64, f64),
    t_window: f64,
) -> Result<TransientResult> {
    let (f_minus, f_plus) = tones;
    if !(f_minus > 0.0 && f_minus.is_finite() && f_plus > f_minus && f_plus.is_finite()) {
        return Err(Error::Domain(format!(
            "tone pair must satisfy 0 < f_minus < f_plus, got ({f_minus}, {f_plus})"
        )));
    }
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(Error::Domain(format!(
            "window length must be positive, got {t_window}"
        )));
    }
    let square = wave == DriveWave::Square;
    let (f_old, f_new) = match transition {
        Transition::HighToLow => (f_plus, f_minus),
        Transition::LowToHigh => (f_minus, f_plus),
    };

    let settle_drive = Drive::Tone {
        amplitude: 1.0,
        frequency: f_old,
        square,
    };
    let settled = integrate(
        p,
        &settle_drive,
        (0.0, STUDY_SETTLE_CYCLES / f_old),
        1.0 / (STUDY_STEPS_PER_CYCLE * f_old),
        StateVector::default(),
    )?;

    let window_drive = Drive::Tone {
        amplitude: 1.0,
        frequency: f_new,
        square,
    };
    integrate(
        p,
        &window_drive,
        (0.0, t_window),
        1.0 / (STUDY_STEPS_PER_CYCLE * f_plus),
        settled.final_state,
    )
}

/// Transient efficiency of one tone switch: the output-to-input energy
/// ratio over the window `[0, t_window]` following the switch, with the
/// pre-switch state settled on the outgoing tone (see
/// [`transition_waveform`] for the exact protocol).
///
/// # Errors
///
/// Propagated from [`transition_waveform`].
pub fn transient_efficiency(
    p: &CircuitParams,
    wave: DriveWave,
    transition: Transition,
    tones: (f64, f64),
    t_window: f64,
) -> Result<f64> {
    Ok(transition_waveform(p, wave, transition, tones, t_window)?.eta())
}

// ---------------------------------------------------------------------------
// Steady-state settling and swept response
// ---------------------------------------------------------------------------

/// Outcome of [`steady_state_settle`].
#[derive(Debug, Clone, Copy)]
pub struct SettleResult {
    /// State at the end of the last whole cycle, suitable as the initial
    /// state of a follow-on run whose drive continues at phase zero.
    pub state: StateVector,
    /// Output-to-input energy ratio over the last cycle integrated.
    pub eta_last_cycle: f64,
    /// Whole cycles actually integrated.
    pub cycles: usize,
}

/// Integrates a unit-amplitude sine at `tone` hertz from rest, cycle by
/// cycle (400 steps per period), until at least `cycles` whole cycles have
/// run **and** the per-cycle energy ratio `e_out/e_in` changes by less than
/// 0.1% between consecutive cycles.
///
/// # Errors
///
/// * [`Error::Domain`] for a non-positive tone or a budget under 50 cycles.
/// * [`Error::NotSettled`] if the stationarity criterion is still unmet
///   after ten times the requested budget.
pub fn steady_state_settle(p: &CircuitParams, tone: f64, cycles: usize) -> Result<SettleResult> {
    if !(tone > 0.0 && tone.is_finite()) {
        return Err(Error::Domain(format!(
            "settle tone must be positive, got {tone}"
        )));
    }
    if cycles < SETTLE_MIN_CYCLES {
        return Err(Error::Domain(format!(
            "settle budget must be at least {SETTLE_MIN_CYCLES} cycles, got {cycles}"
        )));
    }
    let period = 1.0 / tone;
    let dt = period / STUDY_STEPS_PER_CYCLE;
    let drive = Drive::Tone {
        amplitude: 1.0,
        frequency: tone,
        square: false,
    };

    let mut state = StateVector::default();
    let mut eta_prev = f64::INFINITY;
    let mut last_change = f64::INFINITY;
    for cycle in 1..=(SETTLE_BUDGET_FACTOR * cycles) {
        let t0 = (cycle - 1) as f64 * period;
        let t1 = cycle as f64 * period;
        let res = integrate(p, &drive, (t0, t1), dt, state)?;
        state = res.final_state;
        let eta_cycle = res.eta();
        last_change = ((eta_cycle - eta_prev) / eta_cycle).abs();
        if cycle >= cycles && last_change < SETTLE_RELATIVE_TOL {
            return Ok(SettleResult {
                state,
                eta_last_cycle: eta_cycle,
                cycles: cycle,
            });
        }
        eta_prev = eta_cycle;
    }
    Err(Error::NotSettled {
        cycles: SETTLE_BUDGET_FACTOR * cycles,
        last_change,
    })
}

/// Stepped-tone amplitude response: the quasi-static limit of a slow chirp.
///
/// For each of `n_points` frequencies evenly spaced over
/// `[f_start, f_end]`, settles the link on that tone
/// ([`steady_state_settle`] with the minimum budget) and records the peak
/// `|v2|` over one further settled cycle. Returns `(frequency, amplitude)`
/// pairs; grid maxima of the amplitude column locate the link's gain peaks.
///
/// # Errors
///
/// [`Error::Domain`] unless `0 < f_start < f_end` and `n_points ≥ 2`;
/// otherwise whatever the settle runs report.
pub fn swept_response(
    p: &CircuitParams,
    f_start: f64,
    f_end: f64,
    n_points: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(f_start > 0.0 && f_start.is_finite() && f_end > f_start && f_end.is_finite()) {
        return Err(Error::Domain(format!(
            "sweep range must satisfy 0 < f_start < f_end, got ({f_start}, {f_end})"
        )));
    }
    if n_points < 2 {
        return Err(Error::Domain(format!(
            "sweep needs at least 2 points, got {n_points}"
        )));
    }
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let f = f_start + (f_end - f_start) * i as f64 / (n_points - 1) as f64;
        let settled = steady_state_settle(p, f, SETTLE_MIN_CYCLES)?;
        let period = 1.0 / f;
        let t0 = settled.cycles as f64 * period;
        let drive = Drive::Tone {
            amplitude: 1.0,
            frequency: f,
            square: false,
        };
        let res = integrate(
            p,
            &drive,
            (t0, t0 + period),
            period / STUDY_STEPS_PER_CYCLE,
            settled.state,
        )?;
        let amp = res.v2.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        out.push((f, amp));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
