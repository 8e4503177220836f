use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::PhaseSpaceGrid;
use super::moments::{characteristic_function, check_mass, moment_with_tail};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTolerances {
    pub moments: f64,
    pub characteristic: f64,
    pub l1: f64,
}

impl Default for OracleTolerances {
    fn default() -> Self {
        OracleTolerances {
            moments: 1e-4,
            characteristic: 1e-5,
            l1: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equal,
    /// Moments agree but the distributions themselves do not.
    MomentsOnly,
    Unequal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub max_order: usize,
    pub moment_distance: f64,
    /// `(m, n)` attaining `moment_distance`.
    pub worst_moment: (usize, usize),
    /// Largest estimated moment tail beyond the grid edge, either grid.
    pub moment_tail: f64,
    pub characteristic_distance: f64,
    pub worst_wavevector: (f64, f64),
    pub l1_distance: f64,
    pub tolerances: OracleTolerances,
    pub verdict: Verdict,
}

/// Wave vectors `{0, ±½, ±1, ±2}/λ × {0, ±½, ±1, ±2}·λ`.
pub fn default_wavevectors(lambda: f64) -> Vec<(f64, f64)> {
    const STEPS: [f64; 7] = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0];
    let mut out = Vec::with_capacity(STEPS.len() * STEPS.len());
    for &a in &STEPS {
        for &b in &STEPS {
            out.push((a / lambda, b * lambda));
        }
    }
    out
}

/// Decides whether two sampled planar distributions are the same measure.
///
/// Moments up to total order `max_order` are compared first; agreement
/// there is not sufficient on its own, so the characteristic function on
/// `wavevectors` and the L1 distance must agree as well.
pub fn measure_equality_oracle(
    a: &PhaseSpaceGrid,
    b: &PhaseSpaceGrid,
    max_order: usize,
    wavevectors: &[(f64, f64)],
    tolerances: OracleTolerances,
) -> Result<EqualityReport> {
    a.ensure_same_axes(b)?;
    a.lambda().ensure_same(b.lambda())?;

    check_mass(a)?;
    check_mass(b)?;
    let mut moment_distance = 0.0;
    let mut worst_moment = (0, 0);
    let mut moment_tail = 0.0f64;
    for m in 0..=max_order {
        for n in 0..=(max_order - m) {
            let (va, ta) = moment_with_tail(a, m, n);
            let (vb, tb) = moment_with_tail(b, m, n);
            moment_tail = moment_tail.max(ta).max(tb);
            let d = (va - vb).norm();
            if d > moment_distance {
                moment_distance = d;
                worst_moment = (m, n);
            }
        }
    }
    // the grids must resolve every compared moment more finely than the
    // comparison itself
    if moment_tail >= tolerances.moments {
        return Err(Error::Accuracy {
            what: format!("moments to order {max_order} are clipped by the grid extent"),
            measured: moment_tail,
            allowed: tolerances.moments,
        });
    }

    let mut characteristic_distance = 0.0;
    let mut worst_wavevector = (0.0, 0.0);
    for &(kx, kp) in wavevectors {
        let d = (characteristic_function(a, kx, kp) - characteristic_function(b, kx, kp)).norm();
        if d > characteristic_distance {
            characteristic_distance = d;
            worst_wavevector = (kx, kp);
        }
    }

    let l1_distance = a.l1_distance(b)?;

    let moments_ok = moment_distance < tolerances.moments;
    let rest_ok = characteristic_distance < tolerances.characteristic && l1_distance < tolerances.l1;
    let verdict = match (moments_ok, rest_ok) {
        (true, true) => Verdict::Equal,
        (true, false) => Verdict::MomentsOnly,
        _ => Verdict::Unequal,
    };
    Ok(EqualityReport {
        max_order,
        moment_distance,
        worst_moment,
        moment_tail,
        characteristic_distance,
        worst_wavevector,
        l1_distance,
        tolerances,
        verdict,
    })
}
