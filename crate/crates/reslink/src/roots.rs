//! Polynomial root finding.
//!
//! Roots are obtained as the eigenvalues of the companion matrix (via a real
//! Schur decomposition) and then polished with a few complex Newton steps so
//! that pole locations reach near machine precision. The polynomials handled
//! here are low degree (quartics from the two-mesh circuit), so no balancing
//! or deflation heroics are required beyond normalizing by the leading
//! coefficient.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Evaluates a polynomial with real coefficients at a complex point.
///
/// `coeffs` are ordered highest degree first: `coeffs[0]*x^n + ... + coeffs[n]`.
pub fn polyval(coeffs: &[f64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * x + c;
    }
    acc
}

/// Evaluates the derivative of a real-coefficient polynomial at a complex point.
pub fn polyval_deriv(coeffs: &[f64], x: Complex64) -> Complex64 {
    let n = coeffs.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &c) in coeffs[..n - 1].iter().enumerate() {
        let power = (n - 1 - i) as f64;
        acc = acc * x + power * c;
    }
    acc
}

/// Finds all complex roots of a real-coefficient polynomial.
///
/// Coefficients are ordered highest degree first. Leading zeros are stripped;
/// a constant (degree-0) polynomial yields an empty root list. Roots are
/// returned unsorted.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    // Strip leading zeros so the companion matrix is well formed.
    let first_nonzero = coeffs
        .iter()
        .position(|&c| c != 0.0)
        .ok_or_else(|| Error::Domain("all-zero polynomial has no defined roots".into()))?;
    let coeffs = &coeffs[first_nonzero..];
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    if !coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::Domain("polynomial coefficients must be finite".into()));
    }

    // Monic form: x^n + m[0] x^(n-1) + ... + m[n-1].
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs[1..].iter().map(|&c| c / lead).collect();

    // Companion matrix in bottom-row form: identity superdiagonal, negated
    // ascending-order monic coefficients across the last row.
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i - 1, i)] = 1.0;
    }
    for j in 0..degree {
        companion[(degree - 1, j)] = -monic[degree - 1 - j];
    }

    let eigen = companion
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect::<Vec<Complex64>>();
    if eigen.len() != degree {
        return Err(Error::NumericFailure(format!(
            "eigenvalue count {} != polynomial degree {}",
            eigen.len(),
            degree
        )));
    }

    // Newton polish: a handful of iterations from each eigenvalue estimate.
    let monic_full: Vec<f64> = std::iter::once(1.0).chain(monic.iter().copied()).collect();
    let polished = eigen
        .into_iter()
        .map(|z0| newton_polish(&monic_full, z0))
        .collect();
    Ok(polished)
}

/// Runs Newton iterations on a polynomial from a starting estimate.
///
/// Falls back to the unpolished value if the iteration stalls on a vanishing
/// derivative (repeated root) or diverges.
fn newton_polish(coeffs: &[f64], start: Complex64) -> Complex64 {
    let mut z = start;
    let scale = start.norm().max(1.0);
    for _ in 0..20 {
        let f = polyval(coeffs, z);
        let df = polyval_deriv(coeffs, z);
        if df.norm() == 0.0 {
            return z;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-16 * scale.max(z.norm()) {
            break;
        }
    }
    if z.is_finite() {
        z
    } else {
        start
    }
}

/// Pairs conjugate roots of a real polynomial, returning one representative
/// (positive imaginary part) per pair plus any real roots.
///
/// The imaginary-part threshold below which a root is considered real scales
/// with the root magnitude.
pub fn conjugate_representatives(roots: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
    let mut complex_reps = Vec::new();
    let mut reals = Vec::new();
    for r in roots {
        let tol = 1e-9 * r.norm().max(1.0);
        if r.im.abs() <= tol {
            reals.push(r.re);
        } else if r.im > 0.0 {
            complex_reps.push(*r);
        }
    }
    (complex_reps, reals)
}

/// Finds real roots of a real-coefficient polynomial within a closed interval.
///
/// Complex eigenvalues whose imaginary part is negligible relative to their
/// magnitude are accepted as real. Results are sorted ascending and
/// deduplicated with a magnitude-relative tolerance.
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let roots = polynomial_roots(coeffs)?;
    let mut out: Vec<f64> = Vec::new();
    for r in roots {
        let tol = 1e-7 * r.norm().max(1.0);
        if r.im.abs() <= tol {
            let x = r.re;
            if x >= lo - tol && x <= hi + tol {
                out.push(x.clamp(lo, hi));
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_factored_quadratic() {
        // (x - 2)(x + 3) = x^2 + x - 6
        let mut roots = polynomial_roots(&[1.0, 1.0, -6.0]).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_relative_eq!(roots[0].re, -3.0, max_relative = 1e-12);
        assert_relative_eq!(roots[1].re, 2.0, max_relative = 1e-12);
        assert!(roots[0].im.abs() < 1e-12);
        assert!(roots[1].im.abs() < 1e-12);
    }

    #[test]
    fn solves_complex_conjugate_pair() {
        // x^2 + 2x + 5 has roots -1 +/- 2i.
        let roots = polynomial_roots(&[1.0, 2.0, 5.0]).unwrap();
        let (reps, reals) = conjugate_representatives(&roots);
        assert!(reals.is_empty());
        assert_eq!(reps.len(), 1);
        assert_relative_eq!(reps[0].re, -1.0, max_relative = 1e-12);
        assert_relative_eq!(reps[0].im, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn strips_leading_zeros() {
        let roots = polynomial_roots(&[0.0, 0.0, 1.0, -4.0]).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0].re, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_all_zero_polynomial() {
        assert!(polynomial_roots(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn quartic_with_widely_scaled_roots() {
        // Roots at 1e-3, 1, 1e3, 1e6 stress the scaling of the Newton polish.
        let r = [1e-3, 1.0, 1e3, 1e6];
        // Expand (x - r0)(x - r1)(x - r2)(x - r3).
        let mut c = vec![1.0f64];
        for root in r {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i] += ci;
                next[i + 1] -= ci * root;
            }
            c = next;
        }
        let mut roots = real_roots_in(&c, 0.0, 2e6).unwrap();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(roots.len(), 4);
        for (got, want) in roots.iter().zip(r.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn polyval_matches_horner_expansion() {
        // p(x) = 3x^3 - 2x + 7 at x = 2 - i.
        let x = Complex64::new(2.0, -1.0);
        let direct = 3.0 * x * x * x - 2.0 * x + 7.0;
        assert_relative_eq!(
            polyval(&[3.0, 0.0, -2.0, 7.0], x).re,
            direct.re,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            polyval(&[3.0, 0.0, -2.0, 7.0], x).im,
            direct.im,
            max_relative = 1e-14
        );
    }

    #[test]
    fn derivative_of_cubic() {
        // d/dx (x^3 - 6x^2 + 11x - 6) = 3x^2 - 12x + 11 at x = 1.5.
        let x = Complex64::new(1.5, 0.0);
        let d = polyval_deriv(&[1.0, -6.0, 11.0, -6.0], x);
        assert_relative_eq!(d.re, 3.0 * 2.25 - 12.0 * 1.5 + 11.0, max_relative = 1e-14);
        assert!(d.im.abs() < 1e-14);
    }

    #[test]
    fn real_roots_in_respects_interval() {
        // (x-1)(x-5) = x^2 - 6x + 5; only the root at 1 lies in [0, 3].
        let roots = real_roots_in(&[1.0, -6.0, 5.0], 0.0, 3.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0], 1.0, max_relative = 1e-12);
    }
}
