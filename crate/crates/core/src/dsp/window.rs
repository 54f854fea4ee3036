use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// 4-term Blackman-Harris coefficients.
pub const BH4: [f64; 4] = [0.35875, 0.48829, 0.14128, 0.01168];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    BlackmanHarris4,
    Rectangular,
}

/// Symmetric window of length `n` (denominator `n − 1`).
pub fn window_coefficients(kind: WindowKind, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    Ok(match kind {
        WindowKind::Rectangular => vec![1.0; n],
        WindowKind::BlackmanHarris4 if n == 1 => vec![1.0],
        WindowKind::BlackmanHarris4 => {
            let d = (n - 1) as f64;
            (0..n)
                .map(|k| {
                    let x = 2.0 * PI * k as f64 / d;
                    BH4[0] - BH4[1] * x.cos() + BH4[2] * (2.0 * x).cos() - BH4[3] * (3.0 * x).cos()
                })
                .collect()
        }
    })
}

/// `(Σw, Σw²)`.
pub fn window_sums(w: &[f64]) -> (f64, f64) {
    (w.iter().sum(), w.iter().map(|x| x * x).sum())
}

/// Normalized power response `|Σ w_n e^{j2πδn/N}|² / (Σw)²` at a
/// fractional bin offset `delta`.
pub fn kernel_power(w: &[f64], delta: f64) -> f64 {
    let n = w.len() as f64;
    let step = Complex64::from_polar(1.0, 2.0 * PI * delta / n);
    let mut phasor = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &wi) in w.iter().enumerate() {
        if i % 256 == 0 {
            phasor = Complex64::from_polar(1.0, 2.0 * PI * delta * i as f64 / n);
        }
        acc += phasor * wi;
        phasor *= step;
    }
    let sum: f64 = w.iter().sum();
    acc.norm_sqr() / (sum * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_is_ones() {
        assert!(window_coefficients(WindowKind::Rectangular, 16).unwrap().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn bh4_endpoints_and_symmetry() {
        let w = window_coefficients(WindowKind::BlackmanHarris4, 4096).unwrap();
        // a0 − a1 + a2 − a3
        assert!((w[0] - 6.0e-5).abs() < 1e-9, "{}", w[0]);
        for k in 0..w.len() {
            assert!((w[k] - w[w.len() - 1 - k]).abs() < 1e-12);
        }
        assert!(window_coefficients(WindowKind::BlackmanHarris4, 0).is_err());
    }

    #[test]
    fn kernel_is_unity_on_bin_and_small_far_away() {
        let w = window_coefficients(WindowKind::BlackmanHarris4, 1024).unwrap();
        assert!((kernel_power(&w, 0.0) - 1.0).abs() < 1e-12);
        assert!(kernel_power(&w, 6.0) < 1e-9);
    }
}
