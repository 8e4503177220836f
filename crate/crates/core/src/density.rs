use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{LengthScale, OperatorMatrix, StateVector, C64};

/// System density matrix in the truncated number basis at scale `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
}

impl DensityMatrix {
    pub fn from_operator(op: OperatorMatrix) -> Self {
        DensityMatrix { op }
    }

    pub fn from_entries(entries: DMatrix<C64>, scale: LengthScale) -> Result<Self> {
        Ok(DensityMatrix {
            op: OperatorMatrix::new(entries, scale)?,
        })
    }

    pub fn pure(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        DensityMatrix {
            op: OperatorMatrix::new(v * v.adjoint(), psi.scale()).expect("square outer product"),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn scale(&self) -> LengthScale {
        self.op.scale()
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.op.entry(row, col)
    }

    pub fn trace(&self) -> C64 {
        self.op.entries().trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.op.is_hermitian(tol)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.op.hermitian_eigen().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `ρ / tr ρ`.
    pub fn normalized(&self) -> DensityMatrix {
        let t = self.trace().re;
        DensityMatrix {
            op: self.op.scaled(C64::new(1.0 / t, 0.0)),
        }
    }

    /// `<psi|ρ|psi>`, the fidelity with a pure state.
    pub fn fidelity_with(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.op.expectation(psi)?.re)
    }

    /// `½ Σ |eig(ρ − σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        let diff = self.op.sub(&other.op)?;
        Ok(0.5 * diff.hermitian_eigen().0.iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn to_serializable(&self) -> SerializedDensity {
        let n = self.dim();
        SerializedDensity {
            dim: n,
            lambda: self.scale().get(),
            re: (0..n)
                .map(|i| (0..n).map(|j| self.entry(i, j).re).collect())
                .collect(),
            im: (0..n)
                .map(|i| (0..n).map(|j| self.entry(i, j).im).collect())
                .collect(),
        }
    }
}

/// Row-major real and imaginary parts for JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SerializedDensity {
    pub dim: usize,
    pub lambda: f64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_number_state;

    #[test]
    fn pure_state_properties() {
        let lam = LengthScale::new(1.0).unwrap();
        let s = StateVector::normalized_from(
            vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
            lam,
        )
        .unwrap();
        let rho = DensityMatrix::pure(&s);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        assert!(rho.is_hermitian(1e-15));
        assert!((rho.fidelity_with(&s).unwrap() - 1.0).abs() < 1e-14);
        assert!(rho.min_eigenvalue() > -1e-14);
        let e2 = make_number_state(2, 3, lam).unwrap();
        let other = DensityMatrix::pure(&e2);
        assert!((rho.trace_distance(&other).unwrap() - 1.0).abs() < 1e-12);
        assert!(rho.trace_distance(&rho).unwrap() < 1e-14);
    }
}
