//! Truncated Fock-space linear algebra at an explicit oscillator length scale.
//!
//! Number states `|n>_λ` are the eigenstates of `â†â` for the ladder pair
//! built on the length `λ` (ħ = 1):
//!
//! ```text
//! x̂ = (λ/√2)(â + â†)        p̂ = (i/(λ√2))(â† − â)
//! ```
//!
//! Truncation to `dim` levels breaks `[â, â†] = 1` in the last level only,
//! so identities involving `â†` hold on levels `≤ dim − 2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{Error, Result};

pub type C64 = Complex64;

const SCALE_REL_TOL: f64 = 1e-12;

/// Oscillator length `λ > 0` on which a Fock basis is built.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LengthScale(f64);

impl LengthScale {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(LengthScale(value))
        } else {
            Err(Error::invalid("lambda", format!("must be positive and finite, got {value}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn ensure_same(self, other: LengthScale) -> Result<()> {
        if (self.0 - other.0).abs() <= SCALE_REL_TOL * self.0.max(other.0) {
            Ok(())
        } else {
            Err(Error::ScaleMismatch {
                left: self.0,
                right: other.0,
            })
        }
    }
}

/// Complex amplitudes over the truncated number basis `|0>, …, |dim−1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    scale: LengthScale,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>, scale: LengthScale) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DegenerateSpace { dim: 0, min: 1 });
        }
        if amplitudes.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("amplitudes", "non-finite entry"));
        }
        let v = DVector::from_vec(amplitudes);
        if v.norm() == 0.0 {
            return Err(Error::invalid("amplitudes", "zero vector"));
        }
        Ok(StateVector {
            amplitudes: v,
            scale,
        })
    }

    /// Builds a unit vector from unnormalised amplitudes.
    pub fn normalized_from(amplitudes: Vec<C64>, scale: LengthScale) -> Result<Self> {
        Ok(Self::new(amplitudes, scale)?.normalized())
    }

    pub(crate) fn from_dvector(amplitudes: DVector<C64>, scale: LengthScale) -> Self {
        StateVector { amplitudes, scale }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn scale(&self) -> LengthScale {
        self.scale
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amplitudes.get(n).copied().unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        StateVector {
            amplitudes: self.amplitudes.unscale(self.norm()),
            scale: self.scale,
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-12
    }

    /// Highest level carrying weight above `1e-14`, the `l` of a finite
    /// superposition.
    pub fn support_level(&self) -> usize {
        self.amplitudes
            .iter()
            .rposition(|c| c.norm_sqr() > 1e-28)
            .unwrap_or(0)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.scale.ensure_same(other.scale)?;
        let n = self.dim().min(other.dim());
        Ok((0..n)
            .map(|i| self.amplitudes[i].conj() * other.amplitudes[i])
            .sum())
    }

    /// Zero-pads or truncates to `dim` levels.
    pub fn resized(&self, dim: usize) -> StateVector {
        let mut v = DVector::zeros(dim);
        for i in 0..dim.min(self.dim()) {
            v[i] = self.amplitudes[i];
        }
        StateVector {
            amplitudes: v,
            scale: self.scale,
        }
    }

    /// Position-space wavefunction sampled on `axis`.
    pub fn wavefunction(&self, axis: &Axis) -> Vec<C64> {
        let xs = axis.points();
        let table = hermite_functions(self.support_level() + 1, self.scale, &xs);
        let mut out = vec![C64::new(0.0, 0.0); xs.len()];
        for (n, row) in table.chunks(xs.len()).enumerate() {
            let c = self.amplitudes[n];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (o, &h) in out.iter_mut().zip(row) {
                *o += c * h;
            }
        }
        out
    }

    /// Projects a sampled wavefunction onto the first `dim` number states.
    ///
    /// Returns the state and the leaked weight, i.e. the grid norm of the
    /// input not captured by the truncated basis.
    pub fn from_wavefunction(
        axis: &Axis,
        values: &[C64],
        scale: LengthScale,
        dim: usize,
    ) -> Result<(StateVector, f64)> {
        if values.len() != axis.len {
            return Err(Error::AxisMismatch(format!(
                "{} samples for an axis of {}",
                values.len(),
                axis.len
            )));
        }
        if dim == 0 {
            return Err(Error::DegenerateSpace { dim, min: 1 });
        }
        let xs = axis.points();
        let table = hermite_functions(dim, scale, &xs);
        let h = axis.step;
        let amps: Vec<C64> = table
            .chunks(xs.len())
            .map(|row| row.iter().zip(values).map(|(&hn, &v)| v * hn).sum::<C64>() * h)
            .collect();
        let grid_norm2: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h;
        let captured: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let state = StateVector::new(amps, scale)?;
        Ok((state, (grid_norm2 - captured).max(0.0)))
    }

    /// JSON array of `[re, im]` pairs.
    pub fn to_json(&self) -> String {
        let pairs: Vec<[f64; 2]> = self.amplitudes.iter().map(|c| [c.re, c.im]).collect();
        serde_json::to_string(&pairs).expect("finite amplitudes serialise")
    }

    pub fn from_json(text: &str, scale: LengthScale) -> Result<Self> {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
        StateVector::new(pairs.iter().map(|p| C64::new(p[0], p[1])).collect(), scale)
    }
}

/// Dense operator on the truncated system space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    scale: LengthScale,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>, scale: LengthScale) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::invalid(
                "entries",
                format!("{}x{} is not a square operator", entries.nrows(), entries.ncols()),
            ));
        }
        Ok(OperatorMatrix { entries, scale })
    }

    pub fn identity(dim: usize, scale: LengthScale) -> Self {
        OperatorMatrix {
            entries: DMatrix::identity(dim, dim),
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn scale(&self) -> LengthScale {
        self.scale
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    fn check(&self, other_scale: LengthScale, other_dim: usize) -> Result<()> {
        self.scale.ensure_same(other_scale)?;
        if self.dim() != other_dim {
            return Err(Error::invalid(
                "dim",
                format!("operator on {} levels applied to {} levels", self.dim(), other_dim),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check(psi.scale, psi.dim())?;
        Ok(StateVector::from_dvector(&self.entries * &psi.amplitudes, self.scale))
    }

    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(rhs.scale, rhs.dim())?;
        Ok(OperatorMatrix {
            entries: &self.entries * &rhs.entries,
            scale: self.scale,
        })
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(rhs.scale, rhs.dim())?;
        Ok(OperatorMatrix {
            entries: &self.entries + &rhs.entries,
            scale: self.scale,
        })
    }

    pub fn sub(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(rhs.scale, rhs.dim())?;
        Ok(OperatorMatrix {
            entries: &self.entries - &rhs.entries,
            scale: self.scale,
        })
    }

    pub fn scaled(&self, factor: C64) -> OperatorMatrix {
        OperatorMatrix {
            entries: self.entries.map(|e| e * factor),
            scale: self.scale,
        }
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            entries: self.entries.adjoint(),
            scale: self.scale,
        }
    }

    /// `[self, rhs] = self·rhs − rhs·self`.
    pub fn commutator(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.compose(rhs)?.sub(&rhs.compose(self)?)
    }

    pub fn power(&self, k: u32) -> OperatorMatrix {
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            acc = &acc * &self.entries;
        }
        OperatorMatrix {
            entries: acc,
            scale: self.scale,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= tol))
    }

    /// `<psi|self|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        let applied = self.apply(psi)?;
        psi.inner(&applied)
    }

    /// Largest absolute entry of `self − rhs`.
    pub fn max_abs_diff(&self, rhs: &OperatorMatrix) -> Result<f64> {
        let d = self.sub(rhs)?;
        Ok(d.entries.iter().map(|e| e.norm()).fold(0.0, f64::max))
    }

    /// Leading `k×k` block.
    pub fn leading_block(&self, k: usize) -> OperatorMatrix {
        let k = k.min(self.dim());
        OperatorMatrix {
            entries: self.entries.view((0, 0), (k, k)).into_owned(),
            scale: self.scale,
        }
    }

    /// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let herm = (&self.entries + self.entries.adjoint()).map(|e| e * 0.5);
        let eig = herm.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        (values, vectors)
    }
}

pub fn make_number_state(n: usize, dim: usize, scale: LengthScale) -> Result<StateVector> {
    if n >= dim {
        return Err(Error::OutOfRange { level: n, dim });
    }
    let mut v = DVector::zeros(dim);
    v[n] = C64::new(1.0, 0.0);
    Ok(StateVector::from_dvector(v, scale))
}

/// `(â, â†)` on `dim` levels.
pub fn ladder_operators(dim: usize, scale: LengthScale) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if dim < 2 {
        return Err(Error::DegenerateSpace { dim, min: 2 });
    }
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.transpose();
    Ok((
        OperatorMatrix { entries: a, scale },
        OperatorMatrix {
            entries: a_dag,
            scale,
        },
    ))
}

/// `(x̂, p̂)` on `dim` levels.
pub fn quadrature_operators(
    dim: usize,
    scale: LengthScale,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let (a, a_dag) = ladder_operators(dim, scale)?;
    let lam = scale.get();
    let x = a.add(&a_dag)?.scaled(C64::new(lam * FRAC_1_SQRT_2, 0.0));
    let p = a_dag
        .sub(&a)?
        .scaled(C64::new(0.0, FRAC_1_SQRT_2 / lam));
    Ok((x, p))
}

pub fn number_operator(dim: usize, scale: LengthScale) -> Result<OperatorMatrix> {
    let (a, a_dag) = ladder_operators(dim, scale)?;
    a_dag.compose(&a)
}

/// Normalised random superposition of levels `0..=max_level`, reproducible
/// from `seed`.
pub fn random_finite_state(
    seed: u64,
    max_level: usize,
    dim: usize,
    scale: LengthScale,
) -> Result<StateVector> {
    if max_level >= dim {
        return Err(Error::Truncation(format!(
            "support level {max_level} does not fit in {dim} levels"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for a in amps.iter_mut().take(max_level + 1) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *a = C64::new(re, im);
    }
    StateVector::normalized_from(amps, scale)
}

/// Hermite functions `<x|n>_λ` for `n < count`, row-major `[n][i]`.
///
/// Uses the stable three-term recurrence
/// `φ_{n+1} = √(2/(n+1)) u φ_n − √(n/(n+1)) φ_{n−1}` with `u = x/λ`.
pub fn hermite_functions(count: usize, scale: LengthScale, xs: &[f64]) -> Vec<f64> {
    let lam = scale.get();
    let m = xs.len();
    let mut out = vec![0.0; count * m];
    if count == 0 {
        return out;
    }
    let norm0 = (PI * lam * lam).powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        let u = x / lam;
        let mut prev = 0.0;
        let mut cur = norm0 * (-0.5 * u * u).exp();
        out[i] = cur;
        for n in 0..count - 1 {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * u * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            out[(n + 1) * m + i] = cur;
        }
    }
    out
}
