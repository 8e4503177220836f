use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{Error, Result};
use crate::fock::{LengthScale, StateVector, C64};

/// Allowed weight of a coherent state outside the truncated basis.
pub const COHERENT_LEAK_TOL: f64 = 1e-8;

/// Label `(x, p; λ)` of a minimum-uncertainty wave packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel {
    pub x: f64,
    pub p: f64,
    pub scale: LengthScale,
}

impl CoherentLabel {
    pub fn new(x: f64, p: f64, scale: LengthScale) -> Result<Self> {
        if !(x.is_finite() && p.is_finite()) {
            return Err(Error::invalid("coherent label", format!("({x}, {p}) is not finite")));
        }
        Ok(CoherentLabel { x, p, scale })
    }

    /// Complex coordinate `z = (x/λ + iλp)/√2`.
    pub fn z(&self) -> C64 {
        complex_coordinate(self.x, self.p, self.scale.get())
    }
}

#[inline]
pub fn complex_coordinate(x: f64, p: f64, lambda: f64) -> C64 {
    C64::new(x / lambda, lambda * p) * FRAC_1_SQRT_2
}

/// `<x'|x, p; λ> = (πλ²)^{-1/4} exp[−(x'−x)²/2λ² + i p x' − i p x/2]`.
pub fn coherent_wavefunction(label: &CoherentLabel, x_prime: f64) -> C64 {
    let lam = label.scale.get();
    let d = x_prime - label.x;
    let norm = (PI * lam * lam).powf(-0.25);
    let phase = label.p * x_prime - 0.5 * label.p * label.x;
    C64::from_polar(norm * (-0.5 * d * d / (lam * lam)).exp(), phase)
}

/// Number-basis amplitudes `<n|x,p;λ>` by quadrature of the wavefunction
/// against Hermite functions.
///
/// Fails with an accuracy error when more than [`COHERENT_LEAK_TOL`] of the
/// weight lies above the truncation.
pub fn coherent_fock_coefficients(label: &CoherentLabel, dim: usize) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::DegenerateSpace { dim, min: 1 });
    }
    let lam = label.scale.get();
    let reach = (2.0 * dim as f64 + 1.0).sqrt() + 10.0;
    let half = (label.x.abs() + 12.0 * lam).max(reach * lam);
    let k_max = label.p.abs() + reach / lam;
    let step = (PI / (2.0 * k_max)).min(lam / 8.0);
    let len = (2.0 * half / step).ceil() as usize + 1;
    let axis = Axis::symmetric(half, len)?;
    let samples: Vec<C64> = axis
        .points()
        .into_iter()
        .map(|xp| coherent_wavefunction(label, xp))
        .collect();
    let (state, _) = StateVector::from_wavefunction(&axis, &samples, label.scale, dim)?;
    let leak = 1.0 - state.norm().powi(2);
    if leak > COHERENT_LEAK_TOL {
        return Err(Error::Accuracy {
            what: format!("coherent state |z|={:.3} leaks out of {dim} levels", label.z().norm()),
            measured: leak,
            allowed: COHERENT_LEAK_TOL,
        });
    }
    Ok(state)
}

/// Closed-form amplitudes `e^{−|z|²/2} zⁿ/√n!`, used for bulk evaluation.
pub fn coherent_amplitudes(z: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut term = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            term = term * z / (n as f64).sqrt();
        }
        out.push(term);
    }
    out
}

pub fn coherent_state(label: &CoherentLabel, dim: usize) -> StateVector {
    StateVector::new(coherent_amplitudes(label.z(), dim), label.scale)
        .expect("coherent amplitudes are finite and nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LengthScale {
        LengthScale::new(1.0).unwrap()
    }

    #[test]
    fn vacuum_value_at_origin() {
        let l = CoherentLabel::new(0.0, 0.0, unit()).unwrap();
        let v = coherent_wavefunction(&l, 0.0);
        assert!((v.re - PI.powf(-0.25)).abs() < 1e-15);
        assert!((v.re - 0.7511).abs() < 1e-4);
        assert!((coherent_wavefunction(&l, 1.0).norm() - coherent_wavefunction(&l, -1.0).norm()).abs() < 1e-15);
    }

    #[test]
    fn wavefunction_is_normalized() {
        let l = CoherentLabel::new(0.0, 0.0, unit()).unwrap();
        let axis = Axis::symmetric(10.0, 2048).unwrap();
        let n: f64 = axis
            .points()
            .iter()
            .map(|&x| coherent_wavefunction(&l, x).norm_sqr())
            .sum::<f64>()
            * axis.step;
        assert!((n - 1.0).abs() < 1e-10);
    }

    #[test]
    fn matched_vacuum_is_number_state_zero() {
        let l = CoherentLabel::new(0.0, 0.0, unit()).unwrap();
        let s = coherent_fock_coefficients(&l, 64).unwrap();
        assert!((s.amplitude(0) - C64::new(1.0, 0.0)).norm() < 1e-10);
        for n in 1..64 {
            assert!(s.amplitude(n).norm() < 1e-10);
        }
    }

    #[test]
    fn poisson_weight_of_unit_displacement() {
        // |z|^2 = 1 at x = √2 λ
        let l = CoherentLabel::new(2f64.sqrt(), 0.0, unit()).unwrap();
        let s = coherent_fock_coefficients(&l, 64).unwrap();
        assert!((s.amplitude(0).norm_sqr() - (-1f64).exp()).abs() < 1e-10);
        assert!((s.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for &(x, p, lam) in &[(1.0, 0.5, 1.0), (-2.0, 1.5, 0.7), (0.3, -2.0, 1.8)] {
            let l = CoherentLabel::new(x, p, LengthScale::new(lam).unwrap()).unwrap();
            let quad = coherent_fock_coefficients(&l, 48).unwrap();
            let exact = coherent_amplitudes(l.z(), 48);
            for n in 0..48 {
                assert!((quad.amplitude(n) - exact[n]).norm() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn leak_is_reported() {
        let l = CoherentLabel::new(6.0, 0.0, unit()).unwrap();
        match coherent_fock_coefficients(&l, 8) {
            Err(Error::Accuracy { measured, .. }) => assert!(measured > 1e-3),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }
}
