use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ladder_operators, StateVector, C64};

use super::coherent::complex_coordinate;
use super::grid::PhaseSpaceGrid;

/// Smallest grid mass accepted by [`grid_moment`].
pub const MOMENT_MASS_FLOOR: f64 = 1.0 - 1e-4;
/// Allowed share of a moment integral carried by the outermost ring of cells.
pub const MOMENT_TAIL_TOL: f64 = 1e-8;

/// `moments[m][n] = ∫ z^m z*^n dμ` for `m, n ≤ max_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub max_order: usize,
    pub moments: Vec<Vec<C64>>,
}

impl MomentTable {
    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.moments[m][n]
    }

    pub fn mass(&self) -> f64 {
        self.moments[0][0].re
    }

    pub fn is_hermitian(&self) -> bool {
        let k = self.max_order;
        (0..=k).all(|m| (0..=k).all(|n| self.moments[n][m] == self.moments[m][n].conj()))
    }
}

/// `<ψ| a^m a†^n |ψ>` evaluated with truncated ladder matrices.
///
/// The state must sit far enough below the cutoff that `a†^n` never touches
/// the last level.
pub fn q_moment_operator(psi: &StateVector, m: usize, n: usize) -> Result<C64> {
    let dim = psi.dim();
    let top = psi.support_level();
    if top + m.max(n) > dim - 1 {
        return Err(Error::Truncation(format!(
            "moment ({m}, {n}) of a state on levels ≤ {top} needs more than {dim} levels"
        )));
    }
    if dim < 2 {
        // only the vacuum fits, and it has no room for raising
        return Ok(if m == 0 && n == 0 { psi.norm().powi(2).into() } else { C64::new(0.0, 0.0) });
    }
    let (_, create) = ladder_operators(dim, psi.scale())?;
    let raise = |k: usize| {
        let mut v = psi.amplitudes().clone();
        for _ in 0..k {
            v = create.entries() * v;
        }
        v
    };
    // <ψ|a^m a†^n|ψ> = <a†^m ψ | a†^n ψ>
    Ok(raise(m).dotc(&raise(n)))
}

pub(crate) fn check_mass(g: &PhaseSpaceGrid) -> Result<()> {
    let mass = g.mass();
    if mass < MOMENT_MASS_FLOOR {
        return Err(Error::MassDeficit {
            what: "moment quadrature".into(),
            deficit: 1.0 - mass,
        });
    }
    Ok(())
}

#[inline]
fn z_power(z: C64, m: usize, n: usize) -> C64 {
    z.powu(m as u32) * z.conj().powu(n as u32)
}

/// Raw quadrature of `∫ z^m z*^n dμ` together with an estimate of the part
/// of the integral lying beyond the grid.
///
/// The estimate is the absolute integrand summed over the outermost ring of
/// cells; for Gaussian-decaying densities that is the size of the
/// neglected tail once the grid step is below the decay length.
pub fn moment_with_tail(g: &PhaseSpaceGrid, m: usize, n: usize) -> (C64, f64) {
    let lam = g.lambda().get();
    let (nx, np) = (g.x_axis().len, g.p_axis().len);
    let mut total = C64::new(0.0, 0.0);
    let mut ring = 0.0;
    for i in 0..nx {
        let x = g.x_axis().at(i);
        for j in 0..np {
            let v = g.value(i, j);
            if v == 0.0 {
                continue;
            }
            let term = z_power(complex_coordinate(x, g.p_axis().at(j), lam), m, n) * v;
            total += term;
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == np {
                ring += term.norm();
            }
        }
    }
    let area = g.cell_area();
    (total * area, ring * area)
}

/// `∫ z^m z*^n dμ` over the grid, with `z = (μX/λ + iλμP)/√2`.
///
/// Fails when the estimated tail beyond the grid exceeds
/// [`MOMENT_TAIL_TOL`] relative to the size of the moment.
pub fn grid_moment(g: &PhaseSpaceGrid, m: usize, n: usize) -> Result<C64> {
    check_mass(g)?;
    let (value, tail) = moment_with_tail(g, m, n);
    if tail > MOMENT_TAIL_TOL * value.norm().max(1.0) {
        return Err(Error::Accuracy {
            what: format!("moment ({m}, {n}) tail at grid boundary"),
            measured: tail,
            allowed: MOMENT_TAIL_TOL,
        });
    }
    Ok(value)
}

/// Full `(max_order+1)²` table by direct quadrature, Hermitian by
/// construction.
pub fn moment_table(g: &PhaseSpaceGrid, max_order: usize) -> MomentTable {
    let lam = g.lambda().get();
    let k = max_order;
    let mut acc = vec![vec![C64::new(0.0, 0.0); k + 1]; k + 1];
    let mut zp = vec![C64::new(0.0, 0.0); k + 1];
    for (x, p, v) in g.samples() {
        if v == 0.0 {
            continue;
        }
        let z = complex_coordinate(x, p, lam);
        zp[0] = C64::new(1.0, 0.0);
        for e in 1..=k {
            zp[e] = zp[e - 1] * z;
        }
        for m in 0..=k {
            for n in m..=k {
                acc[m][n] += zp[m] * zp[n].conj() * v;
            }
        }
    }
    let area = g.cell_area();
    let mut moments = vec![vec![C64::new(0.0, 0.0); k + 1]; k + 1];
    for m in 0..=k {
        for n in m..=k {
            let val = acc[m][n] * area;
            moments[m][n] = val;
            moments[n][m] = val.conj();
        }
        moments[m][m].im = 0.0;
    }
    MomentTable {
        max_order,
        moments,
    }
}

/// `∫ exp(i(kX μX + kP μP)) dμ`.
pub fn characteristic_function(g: &PhaseSpaceGrid, k_x: f64, k_p: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, p, v) in g.samples() {
        if v != 0.0 {
            acc += C64::from_polar(v, k_x * x + k_p * p);
        }
    }
    acc * g.cell_area()
}

/// `(n + l)! / l!`, the ceiling on `<a^n a†^n>` for states on levels `≤ l`.
pub fn moment_growth_bound(l: u64, n: u64) -> Result<f64> {
    let mut acc = 1.0f64;
    for k in (l + 1)..=(l + n) {
        acc *= k as f64;
        if !acc.is_finite() {
            return Err(Error::Range(format!("({n}+{l})!/{l}! overflows f64; use the log form")));
        }
    }
    Ok(acc)
}

/// `ln((n + l)! / l!)`.
pub fn log_moment_growth_bound(l: u64, n: u64) -> f64 {
    ((l + 1)..=(l + n)).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_number_state, LengthScale};
    use crate::phase_space::grid::{profile_axes, Profile};
    use crate::phase_space::husimi::husimi_q;

    fn unit() -> LengthScale {
        LengthScale::new(1.0).unwrap()
    }

    #[test]
    fn vacuum_operator_moments() {
        let v = make_number_state(0, 16, unit()).unwrap();
        assert!((q_moment_operator(&v, 3, 3).unwrap() - C64::new(6.0, 0.0)).norm() < 1e-12);
        assert_eq!(q_moment_operator(&v, 1, 2).unwrap(), C64::new(0.0, 0.0));
        let s = StateVector::normalized_from(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)], unit())
            .unwrap();
        // a†|0> = |1>, so <ψ|a†|ψ> = conj(c1)·c0 = 1/2
        let direct = s.amplitude(1).conj() * s.amplitude(0);
        assert!((q_moment_operator(&s, 0, 1).unwrap() - direct).norm() < 1e-15);
        assert!((direct.re - 0.5).abs() < 1e-15);
        assert!(q_moment_operator(&s, 0, 2).is_err());
    }

    #[test]
    fn vacuum_grid_moments() {
        let (xa, pa) = profile_axes(Profile::Default, unit());
        let v = make_number_state(0, 16, unit()).unwrap();
        let q = husimi_q(&v, xa, pa).unwrap();
        assert!((grid_moment(&q, 0, 0).unwrap().re - 1.0).abs() < 1e-6);
        assert!((grid_moment(&q, 1, 1).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-4);
        assert!(grid_moment(&q, 1, 0).unwrap().norm() < 1e-6);
        let t = moment_table(&q, 6);
        assert!(t.is_hermitian());
        assert!((t.mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn vacuum_characteristic_function() {
        let (xa, pa) = profile_axes(Profile::Default, unit());
        let q = husimi_q(&make_number_state(0, 4, unit()).unwrap(), xa, pa).unwrap();
        assert!((characteristic_function(&q, 0.0, 0.0).re - 1.0).abs() < 1e-6);
        // Gaussian with unit variance in μX at λ = 1
        let c = characteristic_function(&q, 1.0, 0.0);
        assert!((c - C64::new((-0.5f64).exp(), 0.0)).norm() < 1e-8);
        let a = characteristic_function(&q, 0.7, -0.3);
        let b = characteristic_function(&q, -0.7, 0.3);
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn growth_bound_values() {
        assert_eq!(moment_growth_bound(0, 4).unwrap(), 24.0);
        assert_eq!(moment_growth_bound(2, 0).unwrap(), 1.0);
        assert_eq!(moment_growth_bound(2, 3).unwrap(), 60.0);
        assert!(matches!(moment_growth_bound(0, 200), Err(Error::Range(_))));
        assert!((log_moment_growth_bound(2, 3) - 60f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn clipped_tail_is_rejected() {
        let lam = unit();
        let a = crate::axis::Axis::symmetric(3.0, 61).unwrap();
        let q = husimi_q(&make_number_state(0, 4, lam).unwrap(), crate::axis::Axis::symmetric(10.0, 201).unwrap(), crate::axis::Axis::symmetric(10.0, 201).unwrap()).unwrap();
        assert!(grid_moment(&q, 4, 4).is_ok());
        // a grid that stops at 3λ keeps most of the mass but not the tail
        let clipped = PhaseSpaceGrid::from_fn(a, a, lam, |x, p| crate::phase_space::husimi::husimi_value(&make_number_state(0, 4, lam).unwrap(), x, p)).unwrap();
        let scaled = clipped.rescaled(1.0 / clipped.mass()).unwrap();
        assert!(grid_moment(&scaled, 4, 4).is_err());
    }
}
