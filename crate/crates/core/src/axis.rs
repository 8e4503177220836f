use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled real axis: `start + i * step` for `i in 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(start.is_finite() && step.is_finite() && step > 0.0) {
            return Err(Error::invalid("axis", format!("start {start}, step {step}")));
        }
        if len == 0 {
            return Err(Error::invalid("axis", "empty axis"));
        }
        Ok(Axis { start, step, len })
    }

    /// `len` points spanning the closed interval `[-half, half]`.
    pub fn symmetric(half: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid("axis", "need at least two points"));
        }
        Axis::new(-half, 2.0 * half / (len - 1) as f64, len)
    }

    /// `len` points on the periodic interval `[-half, half)`, the layout
    /// expected by discrete Fourier transforms.
    pub fn periodic(half: f64, len: usize) -> Result<Self> {
        Axis::new(-half, 2.0 * half / len as f64, len)
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    /// Same sampling with every coordinate multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Axis {
        Axis {
            start: self.start * factor,
            step: self.step * factor,
            len: self.len,
        }
    }

    /// Angular frequencies matching `rustfft`'s output ordering.
    pub fn fft_frequencies(&self) -> Vec<f64> {
        let n = self.len as i64;
        let dk = 2.0 * std::f64::consts::PI / (self.len as f64 * self.step);
        (0..n)
            .map(|j| if j < (n + 1) / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }

    /// Agreement of sampling within a relative tolerance.
    pub fn matches(&self, other: &Axis, rel_tol: f64) -> bool {
        let scale = self.step.abs().max(other.step.abs());
        self.len == other.len
            && (self.start - other.start).abs() <= rel_tol * scale
            && (self.step - other.step).abs() <= rel_tol * scale
    }

    pub fn nearest_index(&self, value: f64) -> Option<usize> {
        let i = ((value - self.start) / self.step).round();
        if i < 0.0 || i >= self.len as f64 {
            None
        } else {
            Some(i as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_axis_hits_both_ends() {
        let a = Axis::symmetric(8.0, 161).unwrap();
        assert_eq!(a.at(0), -8.0);
        assert!((a.end() - 8.0).abs() < 1e-12);
        assert!((a.at(80)).abs() < 1e-12);
    }

    #[test]
    fn fft_frequencies_wrap_at_nyquist() {
        let a = Axis::periodic(4.0, 8).unwrap();
        let k = a.fft_frequencies();
        let dk = 2.0 * std::f64::consts::PI / 8.0;
        assert_eq!(k[1], dk);
        assert_eq!(k[4], -4.0 * dk);
        assert_eq!(k[7], -dk);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(Axis::new(0.0, 0.0, 3).is_err());
        assert!(Axis::new(f64::NAN, 1.0, 3).is_err());
        assert!(Axis::new(0.0, 1.0, 0).is_err());
    }
}
