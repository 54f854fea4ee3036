//! Piecewise-linear lookup tables over strictly increasing abscissae.

use crate::error::{Error, Result};

/// A piecewise-linear function defined by `(x, y)` breakpoints.
///
/// Evaluation outside `[x_first, x_last]` is a domain error; there is no
/// extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if xs.len() < 2 {
            return Err(Error::invalid("a piecewise-linear table needs at least two points"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("table contains a non-finite value"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("table abscissae must be strictly increasing"));
        }
        Ok(Self { xs, ys })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Index `i` of the segment `[x_i, x_{i+1}]` that contains `x`.
    fn segment(&self, x: f64) -> usize {
        let upper = self.xs.partition_point(|&xi| xi <= x);
        upper.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub fn eval(&self, x: f64, quantity: &'static str) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return Err(Error::domain(quantity, x, lo, hi));
        }
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        if x == x0 {
            return Ok(y0);
        }
        if x == x1 {
            return Ok(y1);
        }
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Slope of the segment containing `x` (right-hand slope at breakpoints).
    pub fn slope(&self, x: f64, quantity: &'static str) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return Err(Error::domain(quantity, x, lo, hi));
        }
        let i = self.segment(x);
        Ok((self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]))
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] >= w[0])
    }
}
