//! Frequency-domain analysis of a two-coil series-series resonant link.
//!
//! A source with internal resistance `RS` drives the primary mesh (coil `L1`
//! with loss resistance `R1`, series capacitor `C1`); the magnetically
//! coupled secondary mesh (`L2`, `R2`, `C2`) feeds an Ohmic load `RL`. Both
//! meshes are tuned to the same resonant frequency. Above a critical
//! coupling the voltage transfer gain bifurcates into two peaks, one below
//! and one above the common resonance — the effect exploited by the
//! bifurcation-matched FSK modem in [`crate::modem`].
//!
//! This module provides the phasor/Laplace-domain toolkit: the voltage
//! transfer function `H(s) = V2(s)/V1(s)`, its pole pairs, exact and
//! approximate peak frequencies, the splitting threshold, and steady-state
//! power transfer and efficiency.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::roots;

/// Relative tolerance on the tuning requirement `L1·C1 = L2·C2`.
const TUNING_TOL: f64 = 1e-12;

/// Largest accepted coupling coefficient. As `k → 1` the leading denominator
/// coefficient `b4 = L1·L2·(1−k²)` collapses to zero and the quartic
/// degenerates to a cubic, so near-unity coupling is rejected outright.
const K_MAX: f64 = 0.999;

/// Pole-residual acceptance threshold: `|D(pole)| / max|b_i|` must stay below
/// this after Newton polishing.
const POLE_RESIDUAL_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Circuit parameters
// ---------------------------------------------------------------------------

/// Physical component values of the two-coil series-series link, plus the
/// quantities derived from them at construction time.
///
/// All values are SI: farads, henries, ohms, radians per second, hertz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Primary-side series capacitance (F).
    pub c1: f64,
    /// Secondary-side series capacitance (F).
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
    /// Coupling coefficient, `0 ≤ k ≤ 0.999`.
    pub k: f64,

    /// Mutual inductance `M = k·√(L1·L2)` (H).
    pub m: f64,
    /// Total primary mesh resistance `RS + R1` (Ω).
    pub r_primary: f64,
    /// Total secondary mesh resistance `RL + R2` (Ω).
    pub r_secondary: f64,
    /// Primary leakage inductance `L1 − M` (H).
    pub l1_leak: f64,
    /// Secondary leakage inductance `L2 − M` (H).
    pub l2_leak: f64,
    /// Shared resonance `ω0 = 1/√(L1·C1)` (rad/s).
    pub omega0: f64,
    /// Shared resonance in hertz, `ω0 / 2π`.
    pub f0: f64,
    /// Loaded primary quality factor `ω0·L1/(R1+RS)`.
    pub q1: f64,
    /// Loaded secondary quality factor `ω0·L2/(R2+RL)`.
    pub q2: f64,
}

impl CircuitParams {
    /// Builds and validates a parameter set.
    ///
    /// # Errors
    ///
    /// Returns [`Error::Domain`] if any component value is not strictly
    /// positive, if `k` is outside `[0, 0.999]`, or if the two meshes are
    /// detuned (`|L1·C1 − L2·C2| / (L1·C1) ≥ 1e-12`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c1: f64,
        c2: f64,
        l1: f64,
        l2: f64,
        r1: f64,
        r2: f64,
        rs: f64,
        rl: f64,
        k: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("C1", c1),
            ("C2", c2),
            ("L1", l1),
            ("L2", l2),
            ("R1", r1),
            ("R2", r2),
            ("RS", rs),
            ("RL", rl),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        if !(0.0..=K_MAX).contains(&k) {
            return Err(Error::Domain(format!(
                "coupling k = {k} outside supported range [0, {K_MAX}]"
            )));
        }
        let tuning_error = (l1 * c1 - l2 * c2).abs() / (l1 * c1);
        if tuning_error >= TUNING_TOL {
            return Err(Error::Domain(format!(
                "meshes are detuned: |L1·C1 − L2·C2|/(L1·C1) = {tuning_error:.3e} (limit {TUNING_TOL:.0e})"
            )));
        }

        let m = k * (l1 * l2).sqrt();
        let omega0 = 1.0 / (l1 * c1).sqrt();
        Ok(Self {
            c1,
            c2,
            l1,
            l2,
            r1,
            r2,
            rs,
            rl,
            k,
            m,
            r_primary: rs + r1,
            r_secondary: rl + r2,
            l1_leak: l1 - m,
            l2_leak: l2 - m,
            omega0,
            f0: omega0 / std::f64::consts::TAU,
            q1: omega0 * l1 / (r1 + rs),
            q2: omega0 * l2 / (r2 + rl),
        })
    }

    /// The reference 1-MHz link used throughout the tests and experiments:
    /// `C1 = C2 = 4 nF`, `L1 = L2 = 6.3 µH`, `R1 = R2 = 0.62 Ω`,
    /// `RS = 0.17 Ω`, `RL = 10 Ω`.
    ///
    /// The exact shared resonance of these component values is
    /// `f0 ≈ 1.00258 MHz`; the 1-MHz figure is the rounded design target.
    pub fn reference_link(k: f64) -> Result<Self> {
        Self::new(4e-9, 4e-9, 6.3e-6, 6.3e-6, 0.62, 0.62, 0.17, 10.0, k)
    }

    /// Returns a copy with a different coupling coefficient.
    pub fn with_coupling(&self, k: f64) -> Result<Self> {
        Self::new(
            self.c1, self.c2, self.l1, self.l2, self.r1, self.r2, self.rs, self.rl, k,
        )
    }

    /// Returns a copy with a different load resistance.
    pub fn with_load(&self, rl: f64) -> Result<Self> {
        Self::new(
            self.c1, self.c2, self.l1, self.l2, self.r1, self.r2, self.rs, rl, self.k,
        )
    }
}

// ---------------------------------------------------------------------------
// Transfer function
// ---------------------------------------------------------------------------

/// Voltage transfer function of the link in rational form,
/// `H(s) = a3·s³ / (b4·s⁴ + b3·s³ + b2·s² + b1·s + b0)`.
///
/// The coefficients follow from eliminating the mesh currents of the coupled
/// two-mesh network:
///
/// * `a3 = RL·M`
/// * `b4 = L1·L2·(1−k²)`
/// * `b3 = R'S·L2 + R'L·L1` with `R'S = RS+R1`, `R'L = RL+R2`
/// * `b2 = R'S·R'L + L1/C2 + L2/C1`
/// * `b1 = R'L/C1 + R'S/C2`
/// * `b0 = 1/(C1·C2)`
///
/// Perfect tuning forces the identity `b1 = ω0²·b3`, which the unit tests
/// verify to floating round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferFunction {
    /// Numerator coefficient of `s³`.
    pub a3: f64,
    /// Denominator coefficient of `s⁴`.
    pub b4: f64,
    /// Denominator coefficient of `s³`.
    pub b3: f64,
    /// Denominator coefficient of `s²`.
    pub b2: f64,
    /// Denominator coefficient of `s`.
    pub b1: f64,
    /// Constant denominator coefficient.
    pub b0: f64,
    /// Shared mesh resonance (rad/s), carried along for scaling and checks.
    pub omega0: f64,
}

impl TransferFunction {
    /// Derives the rational transfer function from circuit parameters.
    pub fn from_params(p: &CircuitParams) -> Self {
        Self {
            a3: p.rl * p.m,
            b4: p.l1 * p.l2 * (1.0 - p.k * p.k),
            b3: p.r_primary * p.l2 + p.r_secondary * p.l1,
            b2: p.r_primary * p.r_secondary + p.l1 / p.c2 + p.l2 / p.c1,
            b1: p.r_secondary / p.c1 + p.r_primary / p.c2,
            b0: 1.0 / (p.c1 * p.c2),
            omega0: p.omega0,
        }
    }

    /// Denominator coefficients ordered highest degree first.
    pub fn denominator(&self) -> [f64; 5] {
        [self.b4, self.b3, self.b2, self.b1, self.b0]
    }

    /// Evaluates `H(s)` at an arbitrary complex frequency.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let num = self.a3 * s * s * s;
        let den = roots::polyval(&self.denominator(), s);
        num / den
    }

    /// Evaluates the frequency response `H(jω)` at `ω` rad/s.
    pub fn eval_omega(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Evaluates the frequency response at a frequency in hertz.
    pub fn eval_hz(&self, f: f64) -> Complex64 {
        self.eval_omega(std::f64::consts::TAU * f)
    }

    /// Finds the two conjugate pole pairs of the denominator quartic.
    ///
    /// Roots come from companion-matrix eigenvalues (computed on the
    /// frequency axis rescaled by `ω0` for conditioning) followed by Newton
    /// polishing.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] if the quartic does not factor into two underdamped
    /// conjugate pairs, and [`Error::NumericFailure`] if any polished root
    /// leaves a residual `|D(s)|/max|b_i| ≥ 1e-6`.
    pub fn find_poles(&self) -> Result<PolePairs> {
        // Solve for z = s/ω0 so the companion matrix works near unit scale.
        let w = self.omega0;
        let scaled = [
            self.b4 * w.powi(4),
            self.b3 * w.powi(3),
            self.b2 * w.powi(2),
            self.b1 * w,
            self.b0,
        ];
        let raw = roots::polynomial_roots(&scaled)?;
        let poles: Vec<Complex64> = raw.into_iter().map(|z| z * w).collect();

        let (mut reps, reals) = roots::conjugate_representatives(&poles);
        if reps.len() != 2 || !reals.is_empty() {
            return Err(Error::Domain(format!(
                "denominator does not split into two underdamped conjugate pairs \
                 ({} complex pairs, {} real roots)",
                reps.len(),
                reals.len()
            )));
        }

        // Residual acceptance on all four roots.
        let b_max = self
            .denominator()
            .iter()
            .fold(0.0f64, |acc, b| acc.max(b.abs()));
        for rep in &reps {
            for pole in [*rep, rep.conj()] {
                let residual = roots::polyval(&self.denominator(), pole).norm() / b_max;
                if residual >= POLE_RESIDUAL_TOL {
                    return Err(Error::NumericFailure(format!(
                        "pole residual {residual:.3e} exceeds {POLE_RESIDUAL_TOL:.0e} after polishing"
                    )));
                }
            }
        }

        // Order by real part ascending (most damped pair first); for equal
        // damping keep the higher-frequency pair first.
        reps.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
        Ok(PolePairs {
            sigma1: reps[0].re,
            omega1: reps[0].im,
            sigma2: reps[1].re,
            omega2: reps[1].im,
        })
    }

    /// Frequencies (Hz) at which `H(jω)` is purely real, if they exist.
    ///
    /// Setting the real part of the denominator to zero at `s = jω` gives
    /// the biquadratic `b4·ω⁴ − b2·ω² + b0 = 0`; at its roots the response
    /// phase is exactly π (lower root) or 0 (upper root). These frequencies
    /// track the split gain peaks increasingly well as coupling grows, and
    /// their ratio obeys the integer-ratio design rule used by the modem.
    pub fn real_gain_frequencies(&self) -> Option<(f64, f64)> {
        let disc = self.b2 * self.b2 - 4.0 * self.b4 * self.b0;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Stable quadratic formula: compute the larger root first, then the
        // smaller via the product b0/b4 to avoid cancellation.
        let u_hi = (self.b2 + sq) / (2.0 * self.b4);
        let u_lo = self.b0 / (self.b4 * u_hi);
        if u_lo <= 0.0 || u_hi <= 0.0 {
            return None;
        }
        let tau = std::f64::consts::TAU;
        Some((u_lo.sqrt() / tau, u_hi.sqrt() / tau))
    }

    /// Stationary points of `|H(jω)|` as frequencies in rad/s, ascending.
    ///
    /// Writing `u = ω²`, the squared magnitude is `a3²·u³ / P(u)` with
    /// `P(u) = (b4u² − b2u + b0)² + u·(b1 − b3u)²`, and its stationary
    /// points solve `3P(u) − u·P'(u) = 0`, i.e. the quartic
    ///
    /// `−b4²·u⁴ + (b2² + 2b4b0 − 2b1b3)·u² + 2(b1² − 2b2b0)·u + 3b0² = 0`.
    ///
    /// One positive root means a single gain peak; three mean the response
    /// has split into peak–valley–peak.
    pub fn stationary_omegas(&self) -> Result<Vec<f64>> {
        let (b4, b3, b2, b1, b0) = (self.b4, self.b3, self.b2, self.b1, self.b0);
        let t4 = -(b4 * b4);
        let t2 = b2 * b2 + 2.0 * b4 * b0 - 2.0 * b1 * b3;
        let t1 = 2.0 * (b1 * b1 - 2.0 * b2 * b0);
        let t0 = 3.0 * b0 * b0;

        // Solve in w = u/ω0² so all coefficients sit near a common scale.
        let w2 = self.omega0 * self.omega0;
        let scaled = [t4 * w2.powi(4), 0.0, t2 * w2.powi(2), t1 * w2, t0];
        let roots_w = roots::real_roots_in(&scaled, 1e-9, 1e9)?;
        Ok(roots_w
            .into_iter()
            .map(|w| (w * w2).sqrt())
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Poles
// ---------------------------------------------------------------------------

/// The two conjugate pole pairs `σ1 ± jω1`, `σ2 ± jω2` of the denominator
/// quartic, ordered `σ1 < σ2 < 0` (most damped pair first).
///
/// In the split regime the more damped pair carries the upper natural
/// frequency: `ω1 > ω0 > ω2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePairs {
    /// Real part of the first (most damped) pair (rad/s).
    pub sigma1: f64,
    /// Positive imaginary part of the first pair (rad/s).
    pub omega1: f64,
    /// Real part of the second pair (rad/s).
    pub sigma2: f64,
    /// Positive imaginary part of the second pair (rad/s).
    pub omega2: f64,
}

impl PolePairs {
    /// Upper-half-plane pole of the first pair.
    pub fn pole1(&self) -> Complex64 {
        Complex64::new(self.sigma1, self.omega1)
    }

    /// Upper-half-plane pole of the second pair.
    pub fn pole2(&self) -> Complex64 {
        Complex64::new(self.sigma2, self.omega2)
    }

    /// Natural frequency of the first pair in hertz.
    pub fn f1(&self) -> f64 {
        self.omega1 / std::f64::consts::TAU
    }

    /// Natural frequency of the second pair in hertz.
    pub fn f2(&self) -> f64 {
        self.omega2 / std::f64::consts::TAU
    }

    /// All four poles (both conjugates of both pairs).
    pub fn all(&self) -> [Complex64; 4] {
        [
            self.pole1(),
            self.pole1().conj(),
            self.pole2(),
            self.pole2().conj(),
        ]
    }
}

// ---------------------------------------------------------------------------
// Peak analysis
// ---------------------------------------------------------------------------

/// Result of locating the gain peaks of `|H(jω)|`.
///
/// When the response has split (`split = true`), `f_minus`/`f_plus` are the
/// exact local-maximum frequencies below/above resonance. When it has not,
/// both report the shared resonance `f0` and the actual single-peak location
/// is available in `f_single`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakAnalysis {
    /// Whether the gain curve has two local maxima.
    pub split: bool,
    /// Lower peak frequency (Hz); `f0` when not split.
    pub f_minus: f64,
    /// Upper peak frequency (Hz); `f0` when not split.
    pub f_plus: f64,
    /// `|H|` at `f_minus`.
    pub mag_minus: f64,
    /// `|H|` at `f_plus`.
    pub mag_plus: f64,
    /// `arg H` at `f_minus`, in `(−π, π]`.
    pub phase_minus: f64,
    /// `arg H` at `f_plus`, in `(−π, π]`.
    pub phase_plus: f64,
    /// Local-minimum (valley) frequency between the peaks, when split.
    pub f_valley: Option<f64>,
    /// Location of the single gain maximum when not split.
    pub f_single: Option<f64>,
    /// `|H|` at `f_single` when not split.
    pub mag_single: Option<f64>,
    /// Smallest coupling at which this circuit (with all other parameters
    /// fixed) shows two gain maxima; `None` if it never splits below the
    /// supported coupling ceiling.
    pub k_split: Option<f64>,
}

/// Maps a phase into the half-open interval `(−π, π]`.
fn principal_phase(phase: f64) -> f64 {
    if phase <= -std::f64::consts::PI {
        phase + std::f64::consts::TAU
    } else {
        phase
    }
}

/// Locates the exact gain peaks of the link described by `p`.
///
/// The stationary points of `|H(jω)|` come from a closed-form quartic in
/// `ω²` (see [`TransferFunction::stationary_omegas`]), so peak locations are
/// accurate to near machine precision rather than to a grid or line-search
/// tolerance. Splitting is decided by the number of stationary points:
/// three (peak–valley–peak) means split, one means a single maximum.
pub fn peak_frequencies_exact(p: &CircuitParams) -> Result<PeakAnalysis> {
    let tf = TransferFunction::from_params(p);
    let tau = std::f64::consts::TAU;
    let crit = tf.stationary_omegas()?;
    let k_split = match find_k_split(p) {
        Ok(k) => Some(k),
        Err(Error::NoSplitInRange { .. }) => None,
        Err(e) => return Err(e),
    };

    if crit.len() == 3 {
        let f_minus = crit[0] / tau;
        let f_valley = crit[1] / tau;
        let f_plus = crit[2] / tau;
        let h_minus = tf.eval_hz(f_minus);
        let h_plus = tf.eval_hz(f_plus);
        Ok(PeakAnalysis {
            split: true,
            f_minus,
            f_plus,
            mag_minus: h_minus.norm(),
            mag_plus: h_plus.norm(),
            phase_minus: principal_phase(h_minus.arg()),
            phase_plus: principal_phase(h_plus.arg()),
            f_valley: Some(f_valley),
            f_single: None,
            mag_single: None,
            k_split,
        })
    } else {
        // Single maximum: among the stationary points (usually exactly one;
        // a tangency can contribute a spurious extra), take the highest-gain
        // one as the peak and report f∓ at the shared resonance.
        let f_single = crit
            .iter()
            .map(|&w| w / tau)
            .max_by(|a, b| {
                tf.eval_hz(*a)
                    .norm()
                    .partial_cmp(&tf.eval_hz(*b).norm())
                    .unwrap()
            })
            .ok_or_else(|| {
                Error::NumericFailure("gain curve has no stationary point".into())
            })?;
        let h0 = tf.eval_hz(p.f0);
        Ok(PeakAnalysis {
            split: false,
            f_minus: p.f0,
            f_plus: p.f0,
            mag_minus: h0.norm(),
            mag_plus: h0.norm(),
            phase_minus: principal_phase(h0.arg()),
            phase_plus: principal_phase(h0.arg()),
            f_valley: None,
            f_single: Some(f_single),
            mag_single: Some(tf.eval_hz(f_single).norm()),
            k_split,
        })
    }
}

/// Closed-form first-order peak approximations
/// `f− = f0/√(1+k)`, `f+ = f0/√(1−k)`.
///
/// # Errors
///
/// [`Error::Domain`] unless `0 ≤ k < 1` and `f0 > 0`.
pub fn peak_frequencies_approx(k: f64, f0: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!(
            "coupling k = {k} outside [0, 1) for the split-peak approximation"
        )));
    }
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::Domain(format!("f0 must be positive, got {f0}")));
    }
    Ok((f0 / (1.0 + k).sqrt(), f0 / (1.0 - k).sqrt()))
}

/// Recovers the coupling coefficient from a pair of split-peak frequencies:
/// `k = (f+² − f−²) / (f+² + f−²)`.
///
/// Exactly inverts [`peak_frequencies_approx`].
///
/// # Errors
///
/// [`Error::Domain`] unless `0 < f− ≤ f+`.
pub fn coupling_from_peaks(f_minus: f64, f_plus: f64) -> Result<f64> {
    if !(f_minus > 0.0 && f_plus >= f_minus) {
        return Err(Error::Domain(format!(
            "peak frequencies must satisfy 0 < f− ≤ f+, got ({f_minus}, {f_plus})"
        )));
    }
    let (lo2, hi2) = (f_minus * f_minus, f_plus * f_plus);
    Ok((hi2 - lo2) / (hi2 + lo2))
}

/// First `n` coupling coefficients for which the split-peak ratio `f+/f−`
/// is an integer `m = 2, 3, 4, …`: `k = (m² − 1)/(m² + 1)`.
///
/// An integer peak ratio makes the two FSK tones orthogonal over a common
/// period, which is why these particular couplings matter to the modem.
pub fn orthogonal_couplings(n: usize) -> Vec<f64> {
    (2..2 + n as u64)
        .map(|m| {
            let m2 = (m * m) as f64;
            (m2 - 1.0) / (m2 + 1.0)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Steady state
// ---------------------------------------------------------------------------

/// Steady-state phasor solution of the link at a single drive frequency.
///
/// Power bookkeeping uses the phasor products directly (`P1 = Re{V1·I1*}`,
/// `P2 = |V2|²/RL`) without the ½ RMS factor; the efficiency `η = P2/P1` is
/// unaffected by that common scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Drive frequency (rad/s).
    pub omega: f64,
    /// Source phasor (V), as supplied.
    pub v1: Complex64,
    /// Primary mesh current (A).
    pub i1: Complex64,
    /// Load voltage `RL·I2` (V).
    pub v2: Complex64,
    /// Secondary mesh current (A).
    pub i2: Complex64,
    /// Input power `Re{V1·I1*}` (W).
    pub p1: f64,
    /// Load power `|V2|²/RL` (W).
    pub p2: f64,
    /// Power-transfer efficiency `P2/P1`.
    pub eta: f64,
    /// Input impedance `V1/I1` (Ω).
    pub z1: Complex64,
}

/// Solves the coupled two-mesh phasor system at `s = jω`:
///
/// ```text
/// (R'S + jωL1 + 1/(jωC1))·I1 −             jωM·I2 = V1
///            −jωM·I1 + (R'L + jωL2 + 1/(jωC2))·I2 = 0
/// ```
///
/// # Errors
///
/// [`Error::Domain`] for `ω ≤ 0` or a zero drive phasor;
/// [`Error::SingularSystem`] if the 2×2 solve fails (cannot happen for a
/// lossy circuit but is checked rather than assumed).
pub fn solve_steady_state(p: &CircuitParams, omega: f64, v1: Complex64) -> Result<SteadyState> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!(
            "drive frequency must be positive, got {omega} rad/s"
        )));
    }
    if v1.norm() == 0.0 {
        return Err(Error::Domain("drive phasor must be nonzero".into()));
    }

    let jw = Complex64::new(0.0, omega);
    let z11 = Complex64::from(p.r_primary) + jw * p.l1 + 1.0 / (jw * p.c1);
    let z22 = Complex64::from(p.r_secondary) + jw * p.l2 + 1.0 / (jw * p.c2);
    let zm = -jw * p.m;

    let mesh = Matrix2::new(z11, zm, zm, z22);
    let rhs = Vector2::new(v1, Complex64::new(0.0, 0.0));
    let currents = mesh
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("mesh impedance matrix is singular".into()))?;
    let (i1, i2) = (currents[0], currents[1]);
    if !(i1.is_finite() && i2.is_finite()) {
        return Err(Error::SingularSystem(
            "mesh solve produced non-finite currents".into(),
        ));
    }

    let v2 = p.rl * i2;
    let p1 = (v1 * i1.conj()).re;
    let p2 = v2.norm_sqr() / p.rl;
    let eta = if p1 > 0.0 { p2 / p1 } else { 0.0 };
    Ok(SteadyState {
        omega,
        v1,
        i1,
        v2,
        i2,
        p1,
        p2,
        eta,
        z1: v1 / i1,
    })
}

/// Evaluates the efficiency `η(ω)` over a frequency grid.
///
/// # Errors
///
/// [`Error::Domain`] if the grid is empty or not strictly increasing and
/// positive; any error from [`solve_steady_state`].
pub fn efficiency_curve(p: &CircuitParams, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if omegas.is_empty() {
        return Err(Error::Domain("frequency grid is empty".into()));
    }
    if omegas[0] <= 0.0 || omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "frequency grid must be strictly increasing and positive".into(),
        ));
    }
    omegas
        .iter()
        .map(|&w| solve_steady_state(p, w, Complex64::from(1.0)).map(|ss| (w, ss.eta)))
        .collect()
}

// ---------------------------------------------------------------------------
// Splitting threshold
// ---------------------------------------------------------------------------

/// Finds the splitting coupling threshold for the circuit family of `p`
/// (its own `k` is ignored): the smallest `k` at which `|H(jω)|` has two
/// local maxima, located by bisection to an absolute tolerance of `1e-4`.
///
/// # Errors
///
/// [`Error::NoSplitInRange`] if the gain never splits up to the supported
/// coupling ceiling `k = 0.999`.
pub fn find_k_split(p: &CircuitParams) -> Result<f64> {
    let is_split = |k: f64| -> Result<bool> {
        let tf = TransferFunction::from_params(&p.with_coupling(k)?);
        Ok(tf.stationary_omegas()?.len() >= 3)
    };

    let mut lo = 1e-4;
    let mut hi = K_MAX;
    if !is_split(hi)? {
        return Err(Error::NoSplitInRange { k_max: hi });
    }
    if is_split(lo)? {
        return Ok(lo);
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if is_split(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
