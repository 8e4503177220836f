use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{make_number_state, LengthScale, OperatorMatrix, StateVector, C64};

use super::process::MeasurementProcess;
use super::wavefunction::JointWavefunction;

/// Which pair of error operators: readout minus initial (retrodictive) or
/// readout minus final (predictive) system observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Retrodictive,
    Predictive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorPair {
    /// `μ_X − x` before the interaction.
    Xi,
    /// `μ_P − p` before the interaction.
    Pi,
    /// `μ_X − x` after the interaction.
    Xf,
    /// `μ_P − p` after the interaction.
    Pf,
}

impl ErrorPair {
    pub fn regime(self) -> Regime {
        match self {
            ErrorPair::Xi | ErrorPair::Pi => Regime::Retrodictive,
            ErrorPair::Xf | ErrorPair::Pf => Regime::Predictive,
        }
    }

    fn is_position(self) -> bool {
        matches!(self, ErrorPair::Xi | ErrorPair::Xf)
    }
}

/// Partial expectations of the error operators and their squares against
/// the apparatus state, on the number levels `0..dim` at the target scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorOperators {
    pub regime: Regime,
    pub first_x: OperatorMatrix,
    pub second_x: OperatorMatrix,
    pub first_p: OperatorMatrix,
    pub second_p: OperatorMatrix,
}

impl ErrorOperators {
    pub fn dim(&self) -> usize {
        self.first_x.dim()
    }

    pub fn get(&self, which: ErrorPair, power: u32) -> Result<&OperatorMatrix> {
        if which.regime() != self.regime {
            return Err(Error::invalid("which", format!("{which:?} is not in the {:?} pair", self.regime)));
        }
        match (which.is_position(), power) {
            (true, 1) => Ok(&self.first_x),
            (true, 2) => Ok(&self.second_x),
            (false, 1) => Ok(&self.first_p),
            (false, 2) => Ok(&self.second_p),
            _ => Err(Error::invalid("power", format!("{power} is not 1 or 2"))),
        }
    }
}

/// Hermiticity demanded of a computed first-moment operator before it is
/// symmetrised.
const FIRST_MOMENT_HERMITIAN_TOL: f64 = 1e-8;

fn hermitian_from_upper(upper: Vec<C64>, dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        for k in j..dim {
            let v = upper[j * dim + k];
            m[(j, k)] = v;
            m[(k, j)] = v.conj();
        }
        m[(j, j)].im = 0.0;
    }
    m
}

fn symmetrised(full: Vec<C64>, dim: usize, what: &str) -> Result<DMatrix<C64>> {
    let m = DMatrix::from_row_slice(dim, dim, &full);
    let dev = (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if dev > FIRST_MOMENT_HERMITIAN_TOL {
        return Err(Error::Accuracy {
            what: format!("{what} is not Hermitian"),
            measured: dev,
            allowed: FIRST_MOMENT_HERMITIAN_TOL,
        });
    }
    Ok((&m + m.adjoint()) * C64::new(0.5, 0.0))
}

/// Accumulates `M¹_jk = <Ψ_j|w_k>` and `M²_jk = <w_j|w_k>` where `w_k` is
/// produced pointwise by `make_w` from the evolved basis amplitudes.
fn accumulate(
    states: &[JointWavefunction],
    dim: usize,
    volume: f64,
    mut make_w: impl FnMut(usize, &[C64], &mut [C64]),
) -> (Vec<C64>, Vec<C64>) {
    let npts = states[0].data().len();
    let mut first = vec![C64::new(0.0, 0.0); dim * dim];
    let mut second = vec![C64::new(0.0, 0.0); dim * dim];
    let mut vals = vec![C64::new(0.0, 0.0); dim + 1];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    for pt in 0..npts {
        for (v, s) in vals.iter_mut().zip(states) {
            *v = s.data()[pt];
        }
        make_w(pt, &vals, &mut w);
        for j in 0..dim {
            let cj = vals[j].conj();
            let wj = w[j].conj();
            let row = j * dim;
            for k in 0..dim {
                first[row + k] += cj * w[k];
            }
            for k in j..dim {
                second[row + k] += wj * w[k];
            }
        }
    }
    for v in first.iter_mut().chain(second.iter_mut()) {
        *v *= volume;
    }
    (first, second)
}

/// Error-moment operators on levels `0..dim`.
///
/// Each number state `|k>` is evolved once. The error applied to `|k> ⊗ φ`
/// is rebuilt in the final frame: retrodictive errors use the readout times
/// `U|k>` minus `U x̂|k>` (or `U p̂|k>`), which the ladder relations express
/// through `U|k±1>`, so level `dim` is evolved as well and no truncation
/// enters the matrices. Predictive errors are the readout minus the final
/// `x̂` or `p̂` acting on `U|k>` directly.
pub fn error_operators(process: &MeasurementProcess, regime: Regime, dim: usize) -> Result<ErrorOperators> {
    if dim < 2 {
        return Err(Error::DegenerateSpace { dim, min: 2 });
    }
    let lam = process.lambda_target();
    let l = lam.get();
    let cal = process.calibration();
    let grid = process.config().grid;
    let mut states = Vec::with_capacity(dim + 1);
    for k in 0..=dim {
        states.push(process.evolve(&make_number_state(k, dim + 1, lam)?)?);
    }
    let volume = states[0].cell_volume();
    let [_, n1, n2] = states[0].shape();
    let mu_x: Vec<f64> = grid.y1.points().iter().map(|y| y / cal).collect();
    let mu_p: Vec<f64> = grid.y2.points().iter().map(|y| y / cal).collect();
    let xs = grid.x.points();
    let sq: Vec<f64> = (0..=dim + 1).map(|k| (k as f64).sqrt()).collect();

    let (fx, sx, fp, sp) = match regime {
        Regime::Retrodictive => {
            let ax = l * FRAC_1_SQRT_2;
            let ap = C64::new(0.0, FRAC_1_SQRT_2 / l);
            let (fx, sx) = accumulate(&states, dim, volume, |pt, v, w| {
                let m = mu_x[(pt / n2) % n1];
                for k in 0..dim {
                    let lower = if k > 0 { v[k - 1] * sq[k] } else { C64::new(0.0, 0.0) };
                    w[k] = v[k] * m - (lower + v[k + 1] * sq[k + 1]) * ax;
                }
            });
            let (fp, sp) = accumulate(&states, dim, volume, |pt, v, w| {
                let m = mu_p[pt % n2];
                for k in 0..dim {
                    let lower = if k > 0 { v[k - 1] * sq[k] } else { C64::new(0.0, 0.0) };
                    w[k] = v[k] * m - (v[k + 1] * sq[k + 1] - lower) * ap;
                }
            });
            (fx, sx, fp, sp)
        }
        Regime::Predictive => {
            let (fx, sx) = accumulate(&states, dim, volume, |pt, v, w| {
                let d = mu_x[(pt / n2) % n1] - xs[pt / (n1 * n2)];
                for k in 0..dim {
                    w[k] = v[k] * d;
                }
            });
            for s in states.iter_mut() {
                process.to_system_momentum(s);
            }
            let ks = grid.x.fft_frequencies();
            let (fp, sp) = accumulate(&states, dim, volume, |pt, v, w| {
                let d = mu_p[pt % n2] - ks[pt / (n1 * n2)];
                for k in 0..dim {
                    w[k] = v[k] * d;
                }
            });
            (fx, sx, fp, sp)
        }
    };
    Ok(ErrorOperators {
        regime,
        first_x: OperatorMatrix::new(symmetrised(fx, dim, "first position error moment")?, lam)?,
        second_x: OperatorMatrix::new(hermitian_from_upper(sx, dim), lam)?,
        first_p: OperatorMatrix::new(symmetrised(fp, dim, "first momentum error moment")?, lam)?,
        second_p: OperatorMatrix::new(hermitian_from_upper(sp, dim), lam)?,
    })
}

/// One partial-expectation operator, `<ψ|M|ψ> = <ψ⊗φ|ε^power|ψ⊗φ>`.
pub fn error_moment_operator(
    process: &MeasurementProcess,
    which: ErrorPair,
    power: u32,
    dim: usize,
) -> Result<OperatorMatrix> {
    if power != 1 && power != 2 {
        return Err(Error::invalid("power", format!("{power} is not 1 or 2")));
    }
    Ok(error_operators(process, which.regime(), dim)?.get(which, power)?.clone())
}

/// Worst-case rms errors over the unit sphere of the truncated space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub regime: Regime,
    pub delta_x: f64,
    pub delta_p: f64,
    pub product: f64,
    pub bias_x: f64,
    pub bias_p: f64,
    /// `√2·Δx`, the resolution at which an optimal process measures.
    pub resolution_lambda: f64,
    pub dim: usize,
    /// Mean number level of the maximising vectors.
    pub sup_level_x: f64,
    pub sup_level_p: f64,
    /// Growth of the top eigenvalue when the last two levels are admitted.
    pub edge_gain: f64,
    pub sup_convention: String,
}

/// Allowed growth of the supremum from the last two levels before it is
/// declared a truncation artifact.
pub const EDGE_GAIN_TOL: f64 = 1e-6;

fn top_eigen(m: &OperatorMatrix) -> (f64, f64) {
    let (vals, vecs) = m.hermitian_eigen();
    let n = vals.len();
    let top = vals[n - 1];
    let v = vecs.column(n - 1);
    let level = v.iter().enumerate().map(|(k, c)| k as f64 * c.norm_sqr()).sum::<f64>();
    (top, level)
}

fn sup_with_edge_check(m: &OperatorMatrix) -> Result<(f64, f64, f64)> {
    let dim = m.dim();
    let (top, level) = top_eigen(m);
    let interior = if dim > 2 { top_eigen(&m.leading_block(dim - 2)).0 } else { top };
    let gain = top - interior;
    if gain > EDGE_GAIN_TOL * top.abs().max(1.0) {
        return Err(Error::UnreliableSup {
            level,
            dim,
        });
    }
    Ok((top, level, gain))
}

fn max_abs_eigen(m: &OperatorMatrix) -> f64 {
    m.hermitian_eigen().0.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Summarises error operators into the worst-case report.
pub fn report_from_operators(ops: &ErrorOperators) -> Result<ErrorReport> {
    let (sup_x, level_x, gain_x) = sup_with_edge_check(&ops.second_x)?;
    let (sup_p, level_p, gain_p) = sup_with_edge_check(&ops.second_p)?;
    let delta_x = sup_x.max(0.0).sqrt();
    let delta_p = sup_p.max(0.0).sqrt();
    Ok(ErrorReport {
        regime: ops.regime,
        delta_x,
        delta_p,
        product: delta_x * delta_p,
        bias_x: max_abs_eigen(&ops.first_x),
        bias_p: max_abs_eigen(&ops.first_p),
        resolution_lambda: std::f64::consts::SQRT_2 * delta_x,
        dim: ops.dim(),
        sup_level_x: level_x,
        sup_level_p: level_p,
        edge_gain: gain_x.max(gain_p),
        sup_convention: format!("top eigenvalue on number levels 0..{}", ops.dim()),
    })
}

pub fn worst_case_errors(process: &MeasurementProcess, regime: Regime, dim: usize) -> Result<ErrorReport> {
    report_from_operators(&error_operators(process, regime, dim)?)
}

/// The two error operators applied to one state, in the final frame.
pub struct ErrorVectors {
    pub regime: Regime,
    pub evolved: JointWavefunction,
    pub x: JointWavefunction,
    pub p: JointWavefunction,
}

/// Per-state error statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateErrorMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub msq_x: f64,
    pub msq_p: f64,
    /// `<[ε_X, ε_P]>`.
    pub commutator: C64,
}

impl ErrorVectors {
    pub fn moments(&self) -> StateErrorMoments {
        let xp = self.x.inner(&self.p);
        StateErrorMoments {
            mean_x: self.evolved.inner(&self.x).re,
            mean_p: self.evolved.inner(&self.p).re,
            msq_x: self.x.norm_sqr(),
            msq_p: self.p.norm_sqr(),
            commutator: xp - xp.conj(),
        }
    }

    /// `‖(ε_X/λ ∓ iλ ε_P)|ψ⊗φ>‖/√2`, minus sign for the retrodictive pair
    /// and plus for the predictive one.
    pub fn annihilator_residual(&self, lambda: f64) -> f64 {
        let sign = match self.regime {
            Regime::Retrodictive => -1.0,
            Regime::Predictive => 1.0,
        };
        let a = 1.0 / lambda;
        let b = C64::new(0.0, sign * lambda);
        let acc: f64 = self
            .x
            .data()
            .iter()
            .zip(self.p.data())
            .map(|(&ex, &ep)| (ex * a + ep * b).norm_sqr())
            .sum();
        (0.5 * acc * self.x.cell_volume()).sqrt()
    }
}

/// Builds `U ε_X |ψ⊗φ>` and `U ε_P |ψ⊗φ>`.
pub fn error_vectors(process: &MeasurementProcess, psi: &StateVector, regime: Regime) -> Result<ErrorVectors> {
    let start = process.initial_state(psi)?;
    let before = start.norm_sqr();
    let cal = process.calibration();
    let grid = process.config().grid;
    let (evolved, mut wx, mut wp) = match regime {
        Regime::Retrodictive => {
            let mut xs = start.clone();
            process.apply_position(&mut xs);
            let mut ps = start.clone();
            process.apply_momentum(&mut ps);
            let evolved = process.evolve_joint(start);
            (evolved, process.evolve_joint(xs), process.evolve_joint(ps))
        }
        Regime::Predictive => {
            let evolved = process.evolve_joint(start);
            let mut xf = evolved.clone();
            process.apply_position(&mut xf);
            let mut pf = evolved.clone();
            process.apply_momentum(&mut pf);
            (evolved, xf, pf)
        }
    };
    process.check_containment(&evolved, before)?;
    // readout times Ψ_f, minus the system observable already applied
    let [_, n1, n2] = evolved.shape();
    let ev = evolved.data();
    for (pt, v) in wx.data_mut().iter_mut().enumerate() {
        *v = ev[pt] * (grid.y1.at((pt / n2) % n1) / cal) - *v;
    }
    for (pt, v) in wp.data_mut().iter_mut().enumerate() {
        *v = ev[pt] * (grid.y2.at(pt % n2) / cal) - *v;
    }
    Ok(ErrorVectors {
        regime,
        evolved,
        x: wx,
        p: wp,
    })
}

pub fn state_error_moments(
    process: &MeasurementProcess,
    psi: &StateVector,
    regime: Regime,
) -> Result<StateErrorMoments> {
    Ok(error_vectors(process, psi, regime)?.moments())
}

/// `<ψ⊗φ|[ε_X, ε_P]|ψ⊗φ>` for the chosen pair.
pub fn commutator_expectation(process: &MeasurementProcess, psi: &StateVector, regime: Regime) -> Result<C64> {
    Ok(state_error_moments(process, psi, regime)?.commutator)
}

/// `‖ĉ|ψ⊗φ>‖` with `ĉ = (ε_Xi/λ − iλ ε_Pi)/√2`.
pub fn c_residual(process: &MeasurementProcess, psi: &StateVector, lambda_i: LengthScale) -> Result<f64> {
    Ok(error_vectors(process, psi, Regime::Retrodictive)?.annihilator_residual(lambda_i.get()))
}

/// `‖d̂|ψ⊗φ>‖` with `d̂ = (ε_Xf/λ + iλ ε_Pf)/√2`.
pub fn d_residual(process: &MeasurementProcess, psi: &StateVector, lambda_f: LengthScale) -> Result<f64> {
    Ok(error_vectors(process, psi, Regime::Predictive)?.annihilator_residual(lambda_f.get()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::random_finite_state;
    use crate::joint::config::{JointSampling, MeasurementConfig};
    use crate::joint::process::build_process;

    fn sampling() -> JointSampling {
        JointSampling::for_profile(crate::phase_space::Profile::Default)
    }

    fn unit() -> LengthScale {
        LengthScale::new(1.0).unwrap()
    }

    #[test]
    fn optimal_operators_are_scalar() {
        let p = build_process(&MeasurementConfig::optimal(1.0, 1.0, sampling()).unwrap()).unwrap();
        let ops = error_operators(&p, Regime::Retrodictive, 4).unwrap();
        let id = OperatorMatrix::identity(4, unit());
        assert!(ops.second_x.max_abs_diff(&id.scaled(C64::new(0.5, 0.0))).unwrap() < 1e-8);
        assert!(ops.second_p.max_abs_diff(&id.scaled(C64::new(0.5, 0.0))).unwrap() < 1e-8);
        assert!(ops.first_x.entries().iter().all(|c| c.norm() < 1e-8));
        assert!(ops.second_x.is_hermitian(1e-10));
        let r = report_from_operators(&ops).unwrap();
        assert!((r.product - 0.5).abs() < 1e-8);
        assert!((r.resolution_lambda - 1.0).abs() < 1e-8);
    }

    #[test]
    fn direct_route_agrees_with_operators() {
        let p = build_process(&MeasurementConfig::detuned(1.0, 1.0, 1.5, sampling()).unwrap()).unwrap();
        let ops = error_operators(&p, Regime::Predictive, 4).unwrap();
        let psi = random_finite_state(11, 3, 4, unit()).unwrap();
        let m = state_error_moments(&p, &psi, Regime::Predictive).unwrap();
        assert!((ops.second_x.expectation(&psi).unwrap().re - m.msq_x).abs() < 1e-9);
        assert!((ops.second_p.expectation(&psi).unwrap().re - m.msq_p).abs() < 1e-9);
        assert!((ops.first_x.expectation(&psi).unwrap().re - m.mean_x).abs() < 1e-9);
    }

    #[test]
    fn commutators_have_opposite_signs() {
        let p = build_process(&MeasurementConfig::optimal(1.0, 1.0, sampling()).unwrap()).unwrap();
        let psi = random_finite_state(5, 3, 8, unit()).unwrap();
        let ci = commutator_expectation(&p, &psi, Regime::Retrodictive).unwrap();
        let cf = commutator_expectation(&p, &psi, Regime::Predictive).unwrap();
        assert!((ci - C64::new(0.0, -1.0)).norm() < 1e-8);
        assert!((cf - C64::new(0.0, 1.0)).norm() < 1e-8);
        // residuals are norms, so they sit at the square root of the
        // discretisation error of the quadratic quantities above
        assert!(c_residual(&p, &psi, unit()).unwrap() < 1e-4);
        assert!(d_residual(&p, &psi, unit()).unwrap() < 1e-4);
    }

    #[test]
    fn offset_pointer_shows_up_as_bias() {
        let cfg = MeasurementConfig::optimal(1.0, 1.0, sampling()).unwrap().with_offsets(0.3, 0.0).unwrap();
        let p = build_process(&cfg).unwrap();
        let r = worst_case_errors(&p, Regime::Retrodictive, 4).unwrap();
        assert!((r.bias_x - 0.3).abs() < 1e-6);
        assert!(r.bias_p < 1e-6);
    }
}
