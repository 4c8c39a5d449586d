//! Gaussian tail function and its elementary exponential sandwich.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, Result};

/// `Q(x) = P(Z ≥ x)` for a standard normal `Z`, via `Q(x) = erfc(x/√2)/2`.
///
/// `erfc` is computed without cancellation for large arguments, so the
/// relative accuracy holds well into the far tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `(φ(x)·x/(1+x²), φ(x)/x)`, which bracket `Q(x)` strictly for `x > 0`.
pub fn q_sandwich(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(domain(format!("Q sandwich needs x > 0, got {x}")));
    }
    let phi = normal_pdf(x);
    Ok((phi * x / (1.0 + x * x), phi / x))
}

/// Two-sided standard normal quantile for `confidence ∈ (0, 1)`:
/// the `z` with `P(|Z| ≤ z) = confidence`.
pub fn normal_two_sided_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let target = 0.5 * (1.0 - confidence);
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(-1.0) + q_function(1.0) - 1.0).abs() < 1e-15);
        // high-precision references, rounded to f64
        let cases = [
            (1.0, 0.158_655_253_931_457_05),
            (2.0, 0.022_750_131_948_179_21),
            (10.0, 7.619_853_024_160_525e-24),
        ];
        for (x, q) in cases {
            assert!(((q_function(x) - q) / q).abs() < 1e-12, "Q({x})");
        }
    }

    #[test]
    fn sandwich_at_two() {
        let (lo, hi) = q_sandwich(2.0).unwrap();
        let q = q_function(2.0);
        assert!((lo - 0.021596).abs() < 1e-6);
        assert!((q - 0.02275).abs() < 1e-5);
        assert!((hi - 0.026995).abs() < 1e-6);
        assert!(lo < q && q < hi);
        assert!(q_sandwich(0.0).is_err());
        assert!(q_sandwich(-1.0).is_err());
    }

    #[test]
    fn quantiles() {
        assert!((normal_two_sided_quantile(0.95).unwrap() - 1.959963984540054).abs() < 1e-12);
        assert!((normal_two_sided_quantile(0.99).unwrap() - 2.5758293035489004).abs() < 1e-12);
        assert!(normal_two_sided_quantile(1.0).is_err());
    }
}
