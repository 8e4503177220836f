use std::f64::consts::PI;

use crate::axis::Axis;
use crate::error::{Error, Result};
use crate::fock::{StateVector, C64};

use super::coherent::complex_coordinate;
use super::grid::{PhaseSpaceGrid, Rect};

/// Allowed mass deficit of a Husimi grid.
pub const HUSIMI_MASS_TOL: f64 = 1e-4;

/// Overlap `<x,p;λ|ψ>` from the number-basis amplitudes.
pub fn coherent_overlap(psi: &StateVector, x: f64, p: f64) -> C64 {
    let z = complex_coordinate(x, p, psi.scale().get());
    let zc = z.conj();
    let top = psi.support_level();
    // Horner in (z*)ⁿ/√n!, innermost level first
    let mut acc = C64::new(0.0, 0.0);
    for n in (0..=top).rev() {
        acc = psi.amplitude(n) + acc * zc / ((n + 1) as f64).sqrt();
    }
    acc * (-0.5 * z.norm_sqr()).exp()
}

/// `Q(x, p) = |<x,p;λ|ψ>|² / 2π`.
pub fn husimi_value(psi: &StateVector, x: f64, p: f64) -> f64 {
    coherent_overlap(psi, x, p).norm_sqr() / (2.0 * PI)
}

/// Husimi function of `ψ` sampled on the given axes at the state's own scale.
///
/// Errors with a mass deficit when the axes do not cover the state.
pub fn husimi_q(psi: &StateVector, x_axis: Axis, p_axis: Axis) -> Result<PhaseSpaceGrid> {
    let norm2 = psi.norm().powi(2);
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("state", format!("norm² {norm2} is not 1")));
    }
    let grid = PhaseSpaceGrid::from_fn(x_axis, p_axis, psi.scale(), |x, p| husimi_value(psi, x, p))?;
    let deficit = 1.0 - grid.mass();
    if deficit.abs() > HUSIMI_MASS_TOL {
        return Err(Error::MassDeficit {
            what: "Husimi grid".into(),
            deficit,
        });
    }
    Ok(grid)
}

/// Smallest box, over a `points × points` scan of `window`, holding every
/// sample where `Q` exceeds `rel` times its peak.
pub fn husimi_support(psi: &StateVector, window: &Rect, points: usize, rel: f64) -> Option<Rect> {
    let n = points.max(2);
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let x = at(window.x_min, window.x_max, i);
        for j in 0..n {
            values.push(husimi_value(psi, x, at(window.p_min, window.p_max, j)));
        }
    }
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let (mut x0, mut x1, mut p0, mut p1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (k, v) in values.iter().enumerate() {
        if *v > rel * peak {
            let (x, p) = (at(window.x_min, window.x_max, k / n), at(window.p_min, window.p_max, k % n));
            x0 = x0.min(x);
            x1 = x1.max(x);
            p0 = p0.min(p);
            p1 = p1.max(p);
        }
    }
    Rect::new(x0, x1, p0, p1).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_number_state, LengthScale};
    use crate::phase_space::coherent::{coherent_wavefunction, CoherentLabel};
    use crate::phase_space::grid::{profile_axes, Profile};

    fn unit() -> LengthScale {
        LengthScale::new(1.0).unwrap()
    }

    #[test]
    fn vacuum_values() {
        let v = make_number_state(0, 8, unit()).unwrap();
        assert!((husimi_value(&v, 0.0, 0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((husimi_value(&v, 1.0, 0.0) - 0.09653).abs() < 1e-5);
        let one = make_number_state(1, 8, unit()).unwrap();
        assert_eq!(husimi_value(&one, 0.0, 0.0), 0.0);
    }

    #[test]
    fn overlap_matches_wavefunction_quadrature() {
        // independent route: integrate conj(coherent) * ψ(x') on a fine line
        let lam = LengthScale::new(0.8).unwrap();
        let psi = StateVector::normalized_from(
            vec![C64::new(0.3, 0.1), C64::new(-0.5, 0.2), C64::new(0.0, 0.7), C64::new(0.2, 0.0)],
            lam,
        )
        .unwrap();
        let axis = Axis::symmetric(14.0, 4001).unwrap();
        let wf = psi.wavefunction(&axis);
        for &(x, p) in &[(0.4, -1.1), (-1.3, 0.6), (2.0, 2.0)] {
            let label = CoherentLabel::new(x, p, lam).unwrap();
            let quad: C64 = axis
                .points()
                .iter()
                .zip(&wf)
                .map(|(&xp, &w)| coherent_wavefunction(&label, xp).conj() * w)
                .sum::<C64>()
                * axis.step;
            assert!((quad - coherent_overlap(&psi, x, p)).norm() < 1e-10);
        }
    }

    #[test]
    fn default_grid_mass_and_coverage() {
        let (xa, pa) = profile_axes(Profile::Default, unit());
        let s = make_number_state(3, 16, unit()).unwrap();
        let q = husimi_q(&s, xa, pa).unwrap();
        assert!((q.mass() - 1.0).abs() < 1e-6);
        let small = Axis::symmetric(1.0, 41).unwrap();
        assert!(matches!(husimi_q(&s, small, small), Err(Error::MassDeficit { .. })));
    }

    #[test]
    fn support_box_is_centred_for_symmetric_states() {
        let psi = make_number_state(2, 8, unit()).unwrap();
        let w = Rect::new(-10.0, 10.0, -10.0, 10.0).unwrap();
        let b = husimi_support(&psi, &w, 201, 1e-10).unwrap();
        assert!((b.x_min + b.x_max).abs() < 1e-12 && (b.p_min + b.p_max).abs() < 1e-12);
        assert!(b.x_max > 3.0 && b.x_max < 10.0);
    }
}
