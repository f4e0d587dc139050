use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal upper tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inverse(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("Q^-1 needs eps in (0, 1), got {eps}")));
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * eps);
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for _ in 0..50 {
        let err = q_function(x) - eps;
        if err.abs() < 1e-15 * eps.min(1.0 - eps).max(1e-300) {
            break;
        }
        let step = err / pdf(x);
        if !step.is_finite() {
            break;
        }
        x += step;
        if step.abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centre_and_roundtrip() {
        assert_eq!(q_function(0.0), 0.5);
        assert!(q_inverse(0.5).unwrap().abs() < 1e-15);
        for e in [1e-6, 0.01, 0.1, 0.5, 0.9, 1.0 - 1e-6] {
            assert!((q_function(q_inverse(e).unwrap()) - e).abs() < 1e-12);
        }
        assert!(q_inverse(0.0).is_err() && q_inverse(1.0).is_err());
    }

    #[test]
    fn inverse_is_decreasing() {
        let xs: Vec<f64> = (1..100).map(|i| q_inverse(i as f64 / 100.0).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
    }
}
