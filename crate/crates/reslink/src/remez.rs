//! Equiripple (minimax) FIR design by Remez exchange.
//!
//! Designs type-I linear-phase filters: an odd number of taps with even
//! symmetry, so the amplitude response is a cosine polynomial
//! `A(ω) = Σ_{m=0..M} a_m·cos(mω)` with `M = (N−1)/2`. The exchange
//! algorithm iterates the extremal frequencies of the weighted error
//! `E(ω) = W(ω)·(A(ω) − D(ω))` until the error equioscillates, which by the
//! alternation theorem is the unique weighted-Chebyshev optimum.
//!
//! Barycentric interpolation weights are accumulated in the log domain:
//! with ~150 extremal nodes the plain products `Π(xᵢ−xⱼ)` overflow the
//! double range long before the design itself becomes ill-conditioned.

use crate::error::{Error, Result};

/// One design band: approximate `desired` over `[lo, hi]` hertz with
/// relative error weight `weight` (larger weight → smaller ripple here).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    /// Lower band edge (Hz).
    pub lo: f64,
    /// Upper band edge (Hz).
    pub hi: f64,
    /// Desired amplitude on the band.
    pub desired: f64,
    /// Error weight on the band.
    pub weight: f64,
}

/// Grid points per cosine basis function.
const GRID_DENSITY: usize = 16;
/// Relative gap between max|E| and |δ| declaring convergence.
const CONVERGENCE_TOL: f64 = 1e-7;
const MAX_ITERATIONS: usize = 100;

/// Frequency grid point with its target and weight.
struct GridPoint {
    x: f64, // cos ω
    desired: f64,
    weight: f64,
}

fn validate(n_taps: usize, fs: f64, bands: &[BandSpec]) -> Result<()> {
    if n_taps < 5 || n_taps % 2 == 0 {
        return Err(Error::Domain(format!(
            "tap count must be odd and at least 5, got {n_taps}"
        )));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::Domain(format!("sample rate must be positive, got {fs}")));
    }
    if bands.is_empty() {
        return Err(Error::Domain("at least one band is required".into()));
    }
    let mut prev_hi = -1.0;
    for b in bands {
        if !(b.lo >= 0.0 && b.hi > b.lo && b.hi <= fs / 2.0 + 1e-9) {
            return Err(Error::Domain(format!(
                "band [{}, {}] must satisfy 0 ≤ lo < hi ≤ fs/2 = {}",
                b.lo,
                b.hi,
                fs / 2.0
            )));
        }
        if b.lo <= prev_hi {
            return Err(Error::Domain(format!(
                "bands must be ascending and disjoint; [{}, {}] overlaps the previous band",
                b.lo, b.hi
            )));
        }
        if !(b.weight > 0.0 && b.weight.is_finite() && b.desired.is_finite()) {
            return Err(Error::Domain(format!(
                "band [{}, {}] needs a positive weight and finite target",
                b.lo, b.hi
            )));
        }
        prev_hi = b.hi;
    }
    Ok(())
}

/// Dense evaluation grid: points allocated to bands by width, band edges
/// always included, and band boundaries tracked so extremum scans do not
/// cross transition regions.
fn build_grid(n_cos: usize, fs: f64, bands: &[BandSpec]) -> (Vec<GridPoint>, Vec<usize>) {
    let total_width: f64 = bands.iter().map(|b| b.hi - b.lo).sum();
    let target = GRID_DENSITY * n_cos;
    let mut grid = Vec::with_capacity(target + bands.len() * 2);
    let mut band_starts = Vec::with_capacity(bands.len());
    for b in bands {
        band_starts.push(grid.len());
        let width = b.hi - b.lo;
        let npts = ((target as f64 * width / total_width).round() as usize).max(5);
        for i in 0..npts {
            let f = b.lo + width * i as f64 / (npts - 1) as f64;
            let omega = std::f64::consts::TAU * f / fs * 0.5 * 2.0; // 2πf/fs
            grid.push(GridPoint {
                x: omega.cos(),
                desired: b.desired,
                weight: b.weight,
            });
        }
    }
    (grid, band_starts)
}

/// `ln|Π_{j≠i}(x_i−x_j)|` and its sign for every node, then normalized to
/// `γ_i = sign·exp(lnγ_i − max)` — the common factor cancels in every ratio
/// these weights enter.
fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut ln_gamma = vec![0.0f64; n];
    let mut sign = vec![1.0f64; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = x[i] - x[j];
                ln_gamma[i] -= d.abs().ln();
                if d < 0.0 {
                    sign[i] = -sign[i];
                }
            }
        }
    }
    let top = ln_gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..n).map(|i| sign[i] * (ln_gamma[i] - top).exp()).collect()
}

/// Reduces `candidates` (ascending grid indices) to a sign-alternating
/// subset of exactly `want` points, keeping the largest |err| in each run
/// of equal signs and dropping surplus alternations from the weaker end.
/// Returns `None` if fewer than `want` alternations exist.
fn alternating_subset(candidates: &[usize], err: &[f64], want: usize) -> Option<Vec<usize>> {
    let mut alt: Vec<usize> = Vec::with_capacity(candidates.len());
    for &i in candidates {
        match alt.last() {
            Some(&prev) if err[prev].signum() == err[i].signum() => {
                if err[i].abs() > err[prev].abs() {
                    *alt.last_mut().unwrap() = i;
                }
            }
            _ => alt.push(i),
        }
    }
    if alt.len() < want {
        return None;
    }
    while alt.len() > want {
        if err[*alt.first().unwrap()].abs() < err[*alt.last().unwrap()].abs() {
            alt.remove(0);
        } else {
            alt.pop();
        }
    }
    Some(alt)
}

/// Barycentric interpolation through `(nodes, values)` with precomputed
/// normalized weights; exact at the nodes.
fn barycentric_eval(x: f64, nodes: &[f64], values: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &ci), &wi) in nodes.iter().zip(values.iter()).zip(weights.iter()) {
        let d = x - xi;
        if d.abs() < 1e-14 {
            return ci;
        }
        let t = wi / d;
        num += t * ci;
        den += t;
    }
    num / den
}

/// Designs a type-I equiripple FIR filter of `n_taps` coefficients at
/// sample rate `fs` approximating the piecewise-constant target in `bands`.
///
/// # Errors
///
/// [`Error::Domain`] for invalid tap counts or band layouts;
/// [`Error::NumericFailure`] if the exchange loses its alternation set or
/// fails to equioscillate within the iteration budget.
pub fn design_equiripple(n_taps: usize, fs: f64, bands: &[BandSpec]) -> Result<Vec<f64>> {
    validate(n_taps, fs, bands)?;
    let m = (n_taps - 1) / 2;
    let n_cos = m + 1;
    let (grid, band_starts) = build_grid(n_cos, fs, bands);
    let g = grid.len();
    let r = n_cos; // number of interpolation nodes; r+1 extremals
    if g < r + 1 {
        return Err(Error::Domain(format!(
            "bands too narrow: {g} grid points cannot host {} extremals",
            r + 1
        )));
    }

    // Initial extremals: evenly spaced grid indices.
    let mut extremal: Vec<usize> = (0..=r).map(|i| i * (g - 1) / r).collect();
    extremal.dedup();
    if extremal.len() < r + 1 {
        return Err(Error::Domain(
            "grid too coarse for the requested filter order".into(),
        ));
    }

    let mut delta = 0.0f64;
    let mut node_x: Vec<f64> = Vec::new();
    let mut node_c: Vec<f64> = Vec::new();
    let mut node_w: Vec<f64> = Vec::new();
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        // Weighted-Chebyshev level on the current extremal set.
        let xs: Vec<f64> = extremal.iter().map(|&i| grid[i].x).collect();
        let gamma = barycentric_weights(&xs);
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, (&idx, &gk)) in extremal.iter().zip(gamma.iter()).enumerate() {
            num += gk * grid[idx].desired;
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            den += s * gk / grid[idx].weight;
        }
        delta = num / den;

        // Interpolant through the first r extremals at the levelled values.
        node_x = xs[..r].to_vec();
        node_c = extremal[..r]
            .iter()
            .enumerate()
            .map(|(k, &idx)| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                grid[idx].desired - s * delta / grid[idx].weight
            })
            .collect();
        node_w = barycentric_weights(&node_x);

        // Weighted error on the whole grid.
        let err: Vec<f64> = grid
            .iter()
            .map(|p| p.weight * (barycentric_eval(p.x, &node_x, &node_c, &node_w) - p.desired))
            .collect();

        // Candidate extremals: per-band local maxima of |E| plus both band
        // edges. Edges must be forced: a levelled node at an edge can sit
        // next to a larger opposite-sign excursion just inside the band, in
        // which case it is no grid-local maximum yet still carries an
        // alternation.
        let mut candidates: Vec<usize> = Vec::new();
        for (b, &start) in band_starts.iter().enumerate() {
            let end = band_starts.get(b + 1).copied().unwrap_or(g);
            for i in start..end {
                let here = err[i].abs();
                let is_edge = i == start || i + 1 == end;
                let left_ok = i == start || here >= err[i - 1].abs();
                let right_ok = i + 1 == end || here > err[i + 1].abs();
                if is_edge || (left_ok && right_ok) {
                    candidates.push(i);
                }
            }
        }

        // The exchange only makes guaranteed progress (|δ| non-decreasing)
        // when every accepted extremal carries at least the current level;
        // sub-level candidates can drag |δ| down and set up a limit cycle.
        // If the filtered set cannot alternate r+1 times — which happens in
        // early iterations while the set is still finding the right bands —
        // fall back to the unfiltered candidates for this round.
        let level = delta.abs() * (1.0 - 1e-9);
        let strong: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| err[i].abs() >= level)
            .collect();
        let alt = match alternating_subset(&strong, &err, r + 1) {
            Some(alt) => alt,
            None => match alternating_subset(&candidates, &err, r + 1) {
                Some(alt) => alt,
                None => {
                    return Err(Error::NumericFailure(format!(
                        "Remez exchange cannot assemble {} alternations",
                        r + 1
                    )))
                }
            },
        };

        let peak = alt.iter().map(|&i| err[i].abs()).fold(0.0f64, f64::max);
        let unchanged = alt == extremal;
        extremal = alt;
        if unchanged || (peak - delta.abs()) <= CONVERGENCE_TOL * delta.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericFailure(format!(
            "Remez exchange did not equioscillate in {MAX_ITERATIONS} iterations \
             (level {delta:.3e})"
        )));
    }

    // Taps from the converged amplitude response: sample A(ω) at the N-th
    // roots of unity and invert the cosine series.
    let n = n_taps;
    let a_k: Vec<f64> = (0..=m)
        .map(|k| {
            let omega = std::f64::consts::TAU * k as f64 / n as f64;
            barycentric_eval(omega.cos(), &node_x, &node_c, &node_w)
        })
        .collect();
    let mut taps = vec![0.0f64; n];
    for mm in 0..=m {
        // h[M±mm] = (1/N)·[A_0 + 2Σ_k A_k cos(2πk·mm/N)]: the cosine-series
        // inversion and the tap/coefficient halving cancel to a plain
        // normalized sum.
        let mut acc = a_k[0];
        for (k, &ak) in a_k.iter().enumerate().skip(1) {
            acc += 2.0 * ak * (std::f64::consts::TAU * k as f64 * mm as f64 / n as f64).cos();
        }
        let coeff = acc / n as f64;
        taps[m - mm] = coeff;
        taps[m + mm] = coeff;
    }
    Ok(taps)
}

/// Amplitude response `|Σ h_l e^{−jωl}|` of a tap set at a frequency in Hz.
pub fn tap_gain(taps: &[f64], f: f64, fs: f64) -> f64 {
    let omega = std::f64::consts::TAU * f / fs;
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for (l, &h) in taps.iter().enumerate() {
        let (s, c) = (omega * l as f64).sin_cos();
        re += h * c;
        im -= h * s;
    }
    re.hypot(im)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Reference equiripple lowpass: 15 taps, pass [0, 0.2], stop [0.3, 0.5]
    /// at unit sample rate, equal weights (independently computed fixture).
    const LP15: [f64; 15] = [
        -2.648762885671966e-2,
        1.038433104242712e-5,
        4.411037582006722e-2,
        1.585596004346120e-7,
        -9.340366010069816e-2,
        1.374268401738525e-5,
        3.139259911500523e-1,
        5.000157202650801e-1,
        3.139259911500523e-1,
        1.374268401738525e-5,
        -9.340366010069816e-2,
        1.585596004346120e-7,
        4.411037582006722e-2,
        1.038433104242712e-5,
        -2.648762885671966e-2,
    ];

    /// Reference equiripple bandpass: 31 taps, stop [0, 0.1], pass
    /// [0.15, 0.35], stop [0.4, 0.5], stopbands weighted 2:1.
    const BP31: [f64; 31] = [
        3.102412895819058e-5,
        1.853701392056263e-2,
        -5.547130706386384e-5,
        1.148567728233721e-2,
        6.173434814430863e-5,
        -4.941682139386788e-2,
        -6.672467490002461e-5,
        -1.106573351628351e-3,
        6.833303917922701e-5,
        9.068073474518637e-2,
        -4.697005262380485e-5,
        7.056620541786476e-3,
        1.293931435754650e-5,
        -3.147893545364903e-1,
        -4.864796051319318e-6,
        4.950372771149930e-1,
        -4.864796051319318e-6,
        -3.147893545364903e-1,
        1.293931435754650e-5,
        7.056620541786476e-3,
        -4.697005262380485e-5,
        9.068073474518637e-2,
        6.833303917922701e-5,
        -1.106573351628351e-3,
        -6.672467490002461e-5,
        -4.941682139386788e-2,
        6.173434814430863e-5,
        1.148567728233721e-2,
        -5.547130706386384e-5,
        1.853701392056263e-2,
        3.102412895819058e-5,
    ];

    fn band_deviation(taps: &[f64], lo: f64, hi: f64, desired: f64, fs: f64) -> f64 {
        let n = 2000;
        (0..=n)
            .map(|i| {
                let f = lo + (hi - lo) * i as f64 / n as f64;
                (tap_gain(taps, f, fs) - desired).abs()
            })
            .fold(0.0f64, f64::max)
    }

    #[test]
    fn lowpass_matches_reference_design() {
        let taps = design_equiripple(
            15,
            1.0,
            &[
                BandSpec { lo: 0.0, hi: 0.2, desired: 1.0, weight: 1.0 },
                BandSpec { lo: 0.3, hi: 0.5, desired: 0.0, weight: 1.0 },
            ],
        )
        .unwrap();
        for (got, want) in taps.iter().zip(LP15.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 5e-4);
        }
        // The unique optimum has equal deviation in both bands, ~0.0238.
        let dp = band_deviation(&taps, 0.0, 0.2, 1.0, 1.0);
        let ds = band_deviation(&taps, 0.3, 0.5, 0.0, 1.0);
        assert_abs_diff_eq!(dp, 0.023820, epsilon = 2e-4);
        assert_abs_diff_eq!(ds, 0.023806, epsilon = 2e-4);
    }

    #[test]
    fn bandpass_honors_the_band_weights() {
        let taps = design_equiripple(
            31,
            1.0,
            &[
                BandSpec { lo: 0.0, hi: 0.1, desired: 0.0, weight: 2.0 },
                BandSpec { lo: 0.15, hi: 0.35, desired: 1.0, weight: 1.0 },
                BandSpec { lo: 0.4, hi: 0.5, desired: 0.0, weight: 2.0 },
            ],
        )
        .unwrap();
        for (got, want) in taps.iter().zip(BP31.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 5e-4);
        }
        // Doubling the stopband weight halves its ripple: δp ≈ 2·δs.
        let dp = band_deviation(&taps, 0.15, 0.35, 1.0, 1.0);
        let ds1 = band_deviation(&taps, 0.0, 0.1, 0.0, 1.0);
        let ds2 = band_deviation(&taps, 0.4, 0.5, 0.0, 1.0);
        assert_abs_diff_eq!(dp, 0.040018, epsilon = 3e-4);
        assert_abs_diff_eq!(ds1.max(ds2), 0.020008, epsilon = 2e-4);
    }

    #[test]
    fn taps_are_symmetric() {
        let taps = design_equiripple(
            21,
            2.0,
            &[
                BandSpec { lo: 0.0, hi: 0.3, desired: 1.0, weight: 1.0 },
                BandSpec { lo: 0.45, hi: 1.0, desired: 0.0, weight: 1.5 },
            ],
        )
        .unwrap();
        for i in 0..taps.len() / 2 {
            assert_eq!(taps[i], taps[taps.len() - 1 - i]);
        }
    }

    #[test]
    fn rejects_even_tap_count() {
        let bands = [
            BandSpec { lo: 0.0, hi: 0.2, desired: 1.0, weight: 1.0 },
            BandSpec { lo: 0.3, hi: 0.5, desired: 0.0, weight: 1.0 },
        ];
        assert!(matches!(
            design_equiripple(16, 1.0, &bands),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_overlapping_bands() {
        let bands = [
            BandSpec { lo: 0.0, hi: 0.3, desired: 1.0, weight: 1.0 },
            BandSpec { lo: 0.25, hi: 0.5, desired: 0.0, weight: 1.0 },
        ];
        assert!(matches!(
            design_equiripple(15, 1.0, &bands),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_band_beyond_nyquist() {
        let bands = [
            BandSpec { lo: 0.0, hi: 0.2, desired: 1.0, weight: 1.0 },
            BandSpec { lo: 0.3, hi: 0.6, desired: 0.0, weight: 1.0 },
        ];
        assert!(matches!(
            design_equiripple(15, 1.0, &bands),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn prop_designs_are_symmetric_weighted_equiripple(
            half_taps in 5usize..14,
            edge in 0.12f64..0.22,
            gap in 0.08f64..0.15,
            wstop in 0.5f64..3.0,
        ) {
            let n_taps = 2 * half_taps + 1;
            let bands = [
                BandSpec { lo: 0.0, hi: edge, desired: 1.0, weight: 1.0 },
                BandSpec { lo: edge + gap, hi: 0.5, desired: 0.0, weight: wstop },
            ];
            let taps = design_equiripple(n_taps, 1.0, &bands).unwrap();
            prop_assert_eq!(taps.len(), n_taps);
            for i in 0..n_taps / 2 {
                prop_assert_eq!(taps[i], taps[n_taps - 1 - i]);
            }
            prop_assert!(taps.iter().all(|t| t.is_finite()));
            // Weighted deviations agree across bands at the optimum.
            let dp = band_deviation(&taps, 0.0, edge, 1.0, 1.0);
            let ds = band_deviation(&taps, edge + gap, 0.5, 0.0, 1.0);
            let ratio = (1.0 * dp) / (wstop * ds);
            prop_assert!((0.95..1.06).contains(&ratio), "weighted ripple ratio {}", ratio);
        }
    }
}
