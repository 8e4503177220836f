use nalgebra::{DMatrix, DVector};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::{LengthScale, C64};

use super::coherent::{coherent_amplitudes, complex_coordinate};
use super::grid::PhaseSpaceGrid;

pub const MIXTURE_MASS_TOL: f64 = 1e-6;
pub const MIXTURE_TRACE_TOL: f64 = 1e-4;

/// `Σ_cells w · |x,p;λf><x,p;λf| · area`, the state whose anti-Husimi
/// function is the given weight.
pub fn p_mixture_density(weights: &PhaseSpaceGrid, lambda_f: LengthScale, dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::DegenerateSpace { dim, min: 1 });
    }
    let mass = weights.mass();
    if (mass - 1.0).abs() > MIXTURE_MASS_TOL {
        return Err(Error::MassDeficit {
            what: "mixture weights".into(),
            deficit: 1.0 - mass,
        });
    }
    let lam = lambda_f.get();
    let area = weights.cell_area();
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for (x, p, w) in weights.samples() {
        if w == 0.0 {
            continue;
        }
        let c = DVector::from_vec(coherent_amplitudes(complex_coordinate(x, p, lam), dim));
        rho.ger(C64::new(w * area, 0.0), &c, &c.conjugate(), C64::new(1.0, 0.0));
    }
    // exact Hermitian symmetry regardless of summation order
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let out = DensityMatrix::from_entries(rho, lambda_f)?;
    let trace = out.trace().re;
    if (trace - 1.0).abs() > MIXTURE_TRACE_TOL {
        return Err(Error::Truncation(format!(
            "mixture trace {trace} in {dim} levels; weights reach beyond the basis"
        )));
    }
    Ok(out)
}
