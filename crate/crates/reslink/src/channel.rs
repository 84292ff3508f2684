//! Equivalent discrete-time channel model of the resonant link.
//!
//! The continuous link behaves as a linear time-invariant bandpass filter,
//! so for simulation it is reduced to a sampled FIR channel
//! `y[κ] = Σ_l h_l·x[κ−l] + n[κ]`. Three independent routes construct the
//! impulse response:
//!
//! 1. **Partial fractions** — closed-form inverse Laplace transform over the
//!    two conjugate pole pairs; the reference implementation.
//! 2. **Inverse DFT** — numerical inversion of the sampled spectrum
//!    `H(jω)`; requires enough sample rate that the spectrum has decayed at
//!    Nyquist.
//! 3. **Bilinear transform** — exact algebraic map of the rational `H(s)`
//!    to `H(z)`; exact as algebra but it warps the frequency axis, so peaks
//!    land at `(fs/π)·atan(π·f/fs)`.
//!
//! The composite noise `n[κ] = σ1·(h̃∗n1)[κ] + σ2·n2[κ]` models
//! transmitter-side noise (shaped by the link) plus receiver-side noise,
//! with `h̃` the unit-energy normalization of the channel taps so that both
//! σ parameters scale unit-power processes.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::circuit::{PolePairs, TransferFunction};
use crate::error::{Error, Result};
use crate::roots;

/// Default tail-energy fraction left outside the truncated FIR taps.
pub const DEFAULT_ENERGY_TOL: f64 = 1e-4;

/// Default envelope threshold (fraction of the peak magnitude) defining the
/// effective duration of the impulse response.
pub const DEFAULT_ENVELOPE_THRESHOLD: f64 = 0.05;

/// Largest tolerated `|H|` at Nyquist relative to the spectral peak for the
/// inverse-DFT construction.
const NYQUIST_LIMIT: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Impulse response
// ---------------------------------------------------------------------------

/// Sampled causal impulse response `h(l·Ts)` of the link (units 1/s).
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    /// Samples `h(l·Ts)` for `l = 0..n`.
    pub samples: Vec<f64>,
    /// Sample interval (s).
    pub ts: f64,
    /// Effective duration: beyond this time the remaining envelope is below
    /// [`DEFAULT_ENVELOPE_THRESHOLD`] of the peak magnitude (s).
    pub t_eff: f64,
}

impl ImpulseResponse {
    /// Spectrum of the sampled response at arbitrary frequencies (Hz):
    /// `X(f) = Ts·Σ_l h_l·e^{−j2πf·l·Ts}`, which approximates `H(j2πf)`.
    pub fn spectrum(&self, freqs: &[f64]) -> Vec<Complex64> {
        freqs
            .iter()
            .map(|&f| {
                let dphi = -std::f64::consts::TAU * f * self.ts;
                let step = Complex64::from_polar(1.0, dphi);
                let mut rot = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, &h) in self.samples.iter().enumerate() {
                    acc += h * rot;
                    rot *= step;
                    // Renormalize occasionally so the rotation stays on the
                    // unit circle over long sums.
                    if l % 4096 == 4095 {
                        rot /= rot.norm();
                    }
                }
                acc * self.ts
            })
            .collect()
    }

    /// Signal energy `Σ h_l²·Ts` (units 1/s, matching `∫h²dt`).
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|h| h * h).sum::<f64>() * self.ts
    }

    /// Largest absolute sample.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |acc, h| acc.max(h.abs()))
    }
}

/// The inverse Laplace transform of `H(s)` written over its two upper-half-
/// plane poles: `h(t) = 2·Σᵢ Re{rᵢ·e^{sᵢt}}` with residues
/// `rᵢ = N(sᵢ)/D′(sᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialFractionExpansion {
    /// `(pole, residue)` for each upper-half-plane pole.
    pub terms: [(Complex64, Complex64); 2],
}

impl PartialFractionExpansion {
    /// Computes residues at the given pole pairs.
    ///
    /// # Errors
    ///
    /// [`Error::RepeatedPoles`] if the two pairs are closer than
    /// `1e-6·ω0` — the confluent-residue case is deliberately not
    /// implemented; use the inverse-DFT route there instead.
    pub fn new(poles: &PolePairs, tf: &TransferFunction) -> Result<Self> {
        let p1 = poles.pole1();
        let p2 = poles.pole2();
        let separation = (p1 - p2).norm();
        let threshold = 1e-6 * tf.omega0;
        if separation < threshold {
            return Err(Error::RepeatedPoles {
                separation,
                threshold,
            });
        }
        let den = tf.denominator();
        let dprime = [4.0 * den[0], 3.0 * den[1], 2.0 * den[2], den[3]];
        let residue = |s: Complex64| tf.a3 * s * s * s / roots::polyval(&dprime, s);
        Ok(Self {
            terms: [(p1, residue(p1)), (p2, residue(p2))],
        })
    }

    /// Evaluates `h(t)` for `t > 0`.
    pub fn eval(&self, t: f64) -> f64 {
        2.0 * self
            .terms
            .iter()
            .map(|(s, r)| (r * (s * t).exp()).re)
            .sum::<f64>()
    }

    /// Decaying amplitude bound `2·Σᵢ |rᵢ|·e^{σᵢt} ≥ |h(t)|`.
    pub fn envelope(&self, t: f64) -> f64 {
        2.0 * self
            .terms
            .iter()
            .map(|(s, r)| r.norm() * (s.re * t).exp())
            .sum::<f64>()
    }

    /// Peak magnitude of the continuous response, by coarse scan of the
    /// first 30 µs followed by golden-section refinement of the best lobe.
    pub fn peak_magnitude(&self) -> f64 {
        let coarse = 1e-8;
        let n = (30e-6 / coarse) as usize;
        let mut best = (0usize, 0.0f64);
        for i in 0..=n {
            let v = self.eval(i as f64 * coarse).abs();
            if v > best.1 {
                best = (i, v);
            }
        }
        let lo = best.0.saturating_sub(1) as f64 * coarse;
        let hi = (best.0 + 1) as f64 * coarse;
        let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (self.eval(c).abs(), self.eval(d).abs());
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.eval(c).abs();
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.eval(d).abs();
            }
        }
        self.eval(0.5 * (a + b)).abs().max(best.1)
    }

    /// Time after which the envelope stays below `threshold·peak`,
    /// found by bisection on the monotone envelope.
    pub fn effective_duration(&self, threshold: f64, peak: f64) -> f64 {
        let target = threshold * peak;
        if self.envelope(0.0) <= target {
            return 0.0;
        }
        let mut lo = 0.0f64;
        // Grow the bracket until the envelope has decayed past the target.
        let mut hi = 1e-6;
        while self.envelope(hi) > target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.envelope(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Builds the sampled impulse response from the closed-form inverse Laplace
/// transform.
///
/// The response jumps from 0 to `a3/b4` at `t = 0`; the sample on the
/// discontinuity is assigned the midpoint value `a3/(2·b4)`, which is the
/// value Fourier inversion converges to and keeps the construction
/// consistent with the inverse-DFT route.
///
/// # Errors
///
/// [`Error::RepeatedPoles`] for (near-)confluent pole pairs;
/// [`Error::Domain`] if `duration` is shorter than five effective durations,
/// which would truncate a non-negligible tail.
pub fn impulse_response_partial_fractions(
    poles: &PolePairs,
    tf: &TransferFunction,
    ts: f64,
    duration: f64,
) -> Result<ImpulseResponse> {
    if !(ts > 0.0 && duration > ts) {
        return Err(Error::Domain(format!(
            "need 0 < ts < duration, got ts = {ts}, duration = {duration}"
        )));
    }
    let pf = PartialFractionExpansion::new(poles, tf)?;
    let n = (duration / ts).round() as usize;
    let mut samples = Vec::with_capacity(n);
    samples.push(tf.a3 / (2.0 * tf.b4));
    for l in 1..n {
        samples.push(pf.eval(l as f64 * ts));
    }
    // The threshold references the continuous peak, not the (possibly
    // coarsely) sampled one, so t_eff does not depend on the sample rate.
    let peak = pf.peak_magnitude();
    let t_eff = pf.effective_duration(DEFAULT_ENVELOPE_THRESHOLD, peak);
    if duration < 5.0 * t_eff {
        return Err(Error::Domain(format!(
            "duration {duration:.3e} s shorter than five effective durations ({:.3e} s)",
            5.0 * t_eff
        )));
    }
    Ok(ImpulseResponse { samples, ts, t_eff })
}

/// Builds the sampled impulse response by inverse DFT of the sampled
/// spectrum `H(j2πf)` on an `N`-point grid.
///
/// # Errors
///
/// [`Error::AliasingRisk`] unless `|H|` at Nyquist is below `1e-3` of the
/// spectral peak; [`Error::Domain`] for a degenerate grid.
pub fn impulse_response_idft(
    tf: &TransferFunction,
    ts: f64,
    duration: f64,
) -> Result<ImpulseResponse> {
    if !(ts > 0.0 && duration > ts) {
        return Err(Error::Domain(format!(
            "need 0 < ts < duration, got ts = {ts}, duration = {duration}"
        )));
    }
    let n = (duration / ts).round() as usize;

    // A zero transfer function (no coupling) inverts to a zero response.
    if tf.a3 == 0.0 {
        return Ok(ImpulseResponse {
            samples: vec![0.0; n],
            ts,
            t_eff: 0.0,
        });
    }

    // Nyquist decay precondition against the true spectral peak.
    let peak_gain = tf
        .stationary_omegas()?
        .iter()
        .map(|&w| tf.eval_omega(w).norm())
        .fold(0.0f64, f64::max);
    let f_nyquist = 0.5 / ts;
    let nyquist_ratio = tf.eval_hz(f_nyquist).norm() / peak_gain;
    if nyquist_ratio >= NYQUIST_LIMIT {
        return Err(Error::AliasingRisk {
            nyquist_ratio,
            limit: NYQUIST_LIMIT,
        });
    }

    // Hermitian-symmetric spectrum sampling, then inverse FFT.
    let df = 1.0 / (n as f64 * ts);
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (k, bin) in bins.iter_mut().enumerate().take(n / 2 + 1) {
        *bin = tf.eval_hz(k as f64 * df);
    }
    if n % 2 == 0 {
        bins[n / 2] = Complex64::new(bins[n / 2].re, 0.0);
    }
    for k in n / 2 + 1..n {
        bins[k] = bins[n - k].conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
    let scale = 1.0 / (n as f64 * ts);
    let samples: Vec<f64> = bins.iter().map(|c| c.re * scale).collect();

    // Effective duration by suffix scan. The periodization of the DFT
    // mirrors the t=0 ringing onto the block end, so the last few hundred
    // samples are excluded from the scan.
    let guard = 512.min(n / 4);
    let scan = &samples[..n - guard];
    let peak = scan.iter().fold(0.0f64, |acc, h| acc.max(h.abs()));
    let target = DEFAULT_ENVELOPE_THRESHOLD * peak;
    let mut idx = scan.len();
    let mut suffix_max = 0.0f64;
    for l in (0..scan.len()).rev() {
        suffix_max = suffix_max.max(scan[l].abs());
        if suffix_max >= target {
            idx = l + 1;
            break;
        }
    }
    Ok(ImpulseResponse {
        samples,
        ts,
        t_eff: idx as f64 * ts,
    })
}

// ---------------------------------------------------------------------------
// Bilinear discretization
// ---------------------------------------------------------------------------

/// Fourth-order discrete rational transfer function
/// `H(z) = (b[0] + b[1]z⁻¹ + …)/(1 + a[1]z⁻¹ + …)` with `a[0] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteRational {
    /// Numerator coefficients of `z⁰..z⁻⁴`.
    pub b: [f64; 5],
    /// Denominator coefficients of `z⁰..z⁻⁴`, `a[0] = 1`.
    pub a: [f64; 5],
    /// Sample interval (s).
    pub ts: f64,
}

impl DiscreteRational {
    /// Evaluates `H(z)` at a point of the complex z-plane.
    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        // Treat the coefficient arrays as polynomials in z (descending
        // powers); the common z⁴ factor cancels in the ratio.
        let num = self.b.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        let den = self.a.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        num / den
    }

    /// Frequency response `H(e^{j2πf·Ts})` at a frequency in hertz.
    pub fn response_at(&self, f: f64) -> Complex64 {
        self.eval_z(Complex64::from_polar(1.0, std::f64::consts::TAU * f * self.ts))
    }

    /// Poles in the z-plane.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        roots::polynomial_roots(&self.a)
    }
}

/// Multiplies two real polynomials (coefficients highest degree first).
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `(z − 1)^m · (z + 1)^(4−m)` as a degree-4 polynomial in z.
fn bilinear_basis(m: usize) -> [f64; 5] {
    let mut poly = vec![1.0];
    for _ in 0..m {
        poly = poly_mul(&poly, &[1.0, -1.0]);
    }
    for _ in 0..4 - m {
        poly = poly_mul(&poly, &[1.0, 1.0]);
    }
    poly.try_into().unwrap()
}

/// Maps `H(s)` to `H(z)` with the exact bilinear substitution
/// `s = (2/Ts)·(z−1)/(z+1)`, normalized to `a[0] = 1`.
///
/// The map is algebraically exact but warps the frequency axis: a feature
/// at analog frequency `f` appears at `(fs/π)·atan(π·f/fs)` in the discrete
/// response, so peak displacement shrinks as the sample rate grows.
///
/// # Errors
///
/// [`Error::Domain`] for a nonpositive sample interval.
pub fn bilinear_discretize(tf: &TransferFunction, ts: f64) -> Result<DiscreteRational> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::Domain(format!(
            "sample interval must be positive, got {ts}"
        )));
    }
    let c = 2.0 / ts;
    // Multiply numerator and denominator by (z+1)^4:
    //   num = a3·c³·(z−1)³(z+1)
    //   den = Σ_i b_i·c^i·(z−1)^i(z+1)^(4−i)
    let mut num = [0.0; 5];
    let cubic = bilinear_basis(3);
    for (n, &base) in num.iter_mut().zip(cubic.iter()) {
        *n = tf.a3 * c.powi(3) * base;
    }
    let den_coeffs = [tf.b0, tf.b1, tf.b2, tf.b3, tf.b4];
    let mut den = [0.0; 5];
    for (i, &bi) in den_coeffs.iter().enumerate() {
        let basis = bilinear_basis(i);
        let scale = bi * c.powi(i as i32);
        for (d, &base) in den.iter_mut().zip(basis.iter()) {
            *d += scale * base;
        }
    }
    let lead = den[0];
    Ok(DiscreteRational {
        b: num.map(|v| v / lead),
        a: den.map(|v| v / lead),
        ts,
    })
}

// ---------------------------------------------------------------------------
// FIR channel
// ---------------------------------------------------------------------------

/// Truncated FIR model of the link: dimensionless taps `h_l`, `0 ≤ l ≤ L_h`,
/// applied by discrete convolution at sample interval `Ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirChannel {
    /// Channel taps (dimensionless gain per sample).
    pub taps: Vec<f64>,
    /// Oversampling factor relative to the symbol rate (`Ts = T/J`).
    pub j: usize,
    /// Sample interval (s).
    pub ts: f64,
}

impl FirChannel {
    /// Channel memory length `L_h` (index of the last tap).
    pub fn memory(&self) -> usize {
        self.taps.len().saturating_sub(1)
    }

    /// Total tap energy `Σ h_l²`.
    pub fn tap_energy(&self) -> f64 {
        self.taps.iter().map(|h| h * h).sum()
    }

    /// Returns a copy tagged with the oversampling factor `J`.
    pub fn with_oversampling(mut self, j: usize) -> Self {
        self.j = j.max(1);
        self
    }

    /// Complex frequency response `Σ_l h_l·e^{−j2πf·l·ts}` of the tap set
    /// at `f` hertz (dimensionless discrete-time gain).
    pub fn response_at(&self, f: f64) -> Complex64 {
        let omega = std::f64::consts::TAU * f * self.ts;
        self.taps
            .iter()
            .enumerate()
            .map(|(l, &h)| h * Complex64::from_polar(1.0, -omega * l as f64))
            .sum()
    }
}

/// Unrolls the impulse response of a discrete rational function and
/// truncates it where the tail holds less than `energy_tol` of the total
/// energy.
///
/// # Errors
///
/// [`Error::UnstableDiscretization`] if any pole has magnitude ≥ 1;
/// [`Error::Domain`] for a tolerance outside `(0, 1)`.
pub fn fir_taps(hz: &DiscreteRational, energy_tol: f64) -> Result<FirChannel> {
    if !(energy_tol > 0.0 && energy_tol < 1.0) {
        return Err(Error::Domain(format!(
            "energy tolerance must be in (0,1), got {energy_tol}"
        )));
    }
    let pole_magnitude = hz
        .poles()?
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max);
    if pole_magnitude >= 1.0 {
        return Err(Error::UnstableDiscretization { pole_magnitude });
    }

    // Run the recursion long enough that the slowest mode has decayed to
    // numerical insignificance.
    let horizon = if pole_magnitude > 0.0 {
        ((1e-14f64.ln() / pole_magnitude.ln()).ceil() as usize).clamp(16, 4_000_000)
    } else {
        16
    } + hz.b.len();
    let mut h = Vec::with_capacity(horizon);
    for n in 0..horizon {
        let mut y = if n < hz.b.len() { hz.b[n] } else { 0.0 };
        for m in 1..hz.a.len() {
            if n >= m {
                y -= hz.a[m] * h[n - m];
            }
        }
        h.push(y);
    }

    let total: f64 = h.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Ok(FirChannel {
            taps: vec![0.0],
            j: 1,
            ts: hz.ts,
        });
    }
    let mut tail = total;
    let mut keep = h.len();
    for (l, &v) in h.iter().enumerate() {
        tail -= v * v;
        if tail < energy_tol * total {
            keep = l + 1;
            break;
        }
    }
    h.truncate(keep);
    Ok(FirChannel {
        taps: h,
        j: 1,
        ts: hz.ts,
    })
}

/// Inserts `j − 1` zeros after every input sample (sample-rate expansion of
/// a symbol stream before channel filtering).
pub fn upsample_zero_pad(x: &[f64], j: usize) -> Vec<f64> {
    assert!(j >= 1, "oversampling factor must be at least 1");
    let mut out = vec![0.0; x.len() * j];
    for (i, &v) in x.iter().enumerate() {
        out[i * j] = v;
    }
    out
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Full linear convolution (length `x.len() + h.len() − 1`), switching to an
/// FFT implementation when the direct form would be slow.
pub fn convolve_full(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    if (x.len() as u128) * (h.len() as u128) <= 1 << 21 {
        let mut out = vec![0.0; out_len];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &hj) in h.iter().enumerate() {
                out[i + j] += xi * hj;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut xa: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    let mut ha: Vec<Complex64> = h
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    fft.process(&mut xa);
    fft.process(&mut ha);
    for (xv, hv) in xa.iter_mut().zip(ha.iter()) {
        *xv *= hv;
    }
    ifft.process(&mut xa);
    let scale = 1.0 / n as f64;
    xa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Causal convolution truncated to the input length: `y[κ] = Σ_l h_l·x[κ−l]`
/// for `κ = 0..x.len()`.
pub fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = convolve_full(x, h);
    out.truncate(x.len());
    out
}

// ---------------------------------------------------------------------------
// Noise model
// ---------------------------------------------------------------------------

/// Composite noise description: a transmitter-side unit-power white Gaussian
/// process shaped by the (unit-energy-normalized) channel and scaled by
/// `σ1`, plus receiver-side white Gaussian noise scaled by `σ2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Transmitter-side (channel-shaped) noise scale.
    pub sigma1: f64,
    /// Receiver-side (white) noise scale.
    pub sigma2: f64,
}

impl NoiseModel {
    /// Builds a noise model, rejecting negative scales.
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        if sigma1 < 0.0 || sigma2 < 0.0 || !sigma1.is_finite() || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "noise scales must be nonnegative and finite, got ({sigma1}, {sigma2})"
            )));
        }
        Ok(Self { sigma1, sigma2 })
    }

    /// The noiseless model.
    pub fn off() -> Self {
        Self {
            sigma1: 0.0,
            sigma2: 0.0,
        }
    }

    /// True if both scales are zero.
    pub fn is_off(&self) -> bool {
        self.sigma1 == 0.0 && self.sigma2 == 0.0
    }
}

/// Draws a unit-variance white Gaussian stream from one RNG substream of a
/// seed. Substreams with different `stream` values are independent.
pub fn gaussian_stream(seed: u64, stream: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect()
}

/// RNG substream carrying data bits.
pub const STREAM_DATA: u64 = 0;
/// RNG substream carrying transmitter-side noise `n1`.
pub const STREAM_N1: u64 = 1;
/// RNG substream carrying receiver-side noise `n2`.
pub const STREAM_N2: u64 = 2;

/// Passes a sample stream through the FIR channel and adds composite noise:
/// `y[κ] = Σ_l h_l·x[κ−l] + σ1·(h̃∗n1)[κ] + σ2·n2[κ]`, with `h̃` the taps
/// normalized to unit energy so a unit-power `n1` stays unit power after
/// shaping. The output is deterministic given the seed; `n1` and `n2` come
/// from independent substreams of it.
pub fn apply_channel(x: &[f64], ch: &FirChannel, nm: &NoiseModel, seed: u64) -> Vec<f64> {
    let mut y = convolve_same(x, &ch.taps);
    if nm.is_off() {
        return y;
    }
    if nm.sigma1 > 0.0 {
        let energy = ch.tap_energy();
        if energy > 0.0 {
            let scale = nm.sigma1 / energy.sqrt();
            let shaped_taps: Vec<f64> = ch.taps.iter().map(|h| h * scale).collect();
            let n1 = gaussian_stream(seed, STREAM_N1, x.len());
            let shaped = convolve_same(&n1, &shaped_taps);
            for (yi, si) in y.iter_mut().zip(shaped.iter()) {
                *yi += si;
            }
        }
    }
    if nm.sigma2 > 0.0 {
        let n2 = gaussian_stream(seed, STREAM_N2, x.len());
        for (yi, ni) in y.iter_mut().zip(n2.iter()) {
            *yi += nm.sigma2 * ni;
        }
    }
    y
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
