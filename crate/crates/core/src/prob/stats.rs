//! Weighted moments over finite supports.

use crate::scalar::Real;

/// Weighted mean; weights need not be normalized.
pub fn mean<T: Real>(w: &[T], x: &[T]) -> T {
    let total: T = w.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    w.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() / total
}

pub fn covariance<T: Real>(w: &[T], x: &[T], y: &[T]) -> T {
    let total: T = w.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    let (mx, my) = (mean(w, x), mean(w, y));
    w.iter()
        .zip(x.iter().zip(y))
        .map(|(&p, (&a, &b))| p * (a - mx) * (b - my))
        .sum::<T>()
        / total
}

pub fn variance<T: Real>(w: &[T], x: &[T]) -> T {
    covariance(w, x, x).max(T::zero())
}

/// `E|X - EX|^3`.
pub fn third_abs_central<T: Real>(w: &[T], x: &[T]) -> T {
    let total: T = w.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    let m = mean(w, x);
    w.iter().zip(x).map(|(&p, &a)| p * (a - m).abs().powi(3)).sum::<T>() / total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_moments() {
        let w = [0.3f64, 0.7];
        let x = [0.0, 1.0];
        assert!((mean(&w, &x) - 0.7).abs() < 1e-15);
        assert!((variance(&w, &x) - 0.21).abs() < 1e-15);
        let third = 0.3 * 0.7f64.powi(3) + 0.7 * 0.3f64.powi(3);
        assert!((third_abs_central(&w, &x) - third).abs() < 1e-15);
    }
}
