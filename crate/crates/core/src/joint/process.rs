use std::fmt;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{Error, Result};
use crate::fock::{LengthScale, StateVector, C64};
use crate::phase_space::PhaseSpaceGrid;

use super::config::{MeasurementConfig, WidthChoice};
use super::wavefunction::{AxisTransforms, JointWavefunction};

/// Largest weight a system wavefunction may lose to the finite x-grid.
pub const SYSTEM_LEAK_TOL: f64 = 1e-8;
/// Largest weight allowed near the edges of the joint grid after evolution.
pub const WRAP_TOL: f64 = 1e-6;
/// Allowed deficit of the pointer distribution mass.
pub const POINTER_MASS_TOL: f64 = 1e-4;
/// Tolerance of the build-time optimality check.
pub const OPTIMALITY_TOL: f64 = 1e-3;

/// Error moments of the initial pointer states, from one-dimensional
/// quadrature. Checked at build time for processes built with optimal widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCertificate {
    pub rms_x: f64,
    pub rms_p: f64,
    pub product: f64,
    pub bias_x: f64,
    pub bias_p: f64,
}

/// A built two-pointer measurement: grid, initial pointer states and the
/// phase tables of the factorised interaction.
pub struct MeasurementProcess {
    cfg: MeasurementConfig,
    transforms: AxisTransforms,
    pointer1: Vec<C64>,
    pointer2: Vec<C64>,
    // exp(iκ²P₁P₂/2) on [k₁][k₂], with the inverse-transform 1/(n₁n₂)
    pointer_phase: Vec<C64>,
    // exp(−iκ p P₂) on [k][k₂], with 1/n₀
    momentum_phase: Vec<C64>,
    // exp(−iκ x P₁) on [x][k₁]
    position_phase: Vec<C64>,
    certificate: Option<OptimalityCertificate>,
}

impl fmt::Debug for MeasurementProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementProcess")
            .field("config", &self.cfg)
            .field("certificate", &self.certificate)
            .finish_non_exhaustive()
    }
}

fn gaussian_pointer(axis: &Axis, sigma: f64, center: f64) -> Vec<C64> {
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25);
    axis.points()
        .iter()
        .map(|&y| {
            let d = y - center;
            C64::new(norm * (-d * d / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .collect()
}

/// `(<y>, <y²>, <P>, <P²>)` of a sampled one-dimensional wavefunction, with
/// momentum moments from its discrete transform.
fn pointer_moments(axis: &Axis, phi: &[C64]) -> (f64, f64, f64, f64) {
    let h = axis.step;
    let mut y1 = 0.0;
    let mut y2 = 0.0;
    for (y, v) in axis.points().iter().zip(phi) {
        let w = v.norm_sqr() * h;
        y1 += y * w;
        y2 += y * y * w;
    }
    let mut spec = phi.to_vec();
    FftPlanner::new().plan_fft_forward(axis.len).process(&mut spec);
    let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    for (k, c) in axis.fft_frequencies().iter().zip(&spec) {
        let w = c.norm_sqr() / total;
        p1 += k * w;
        p2 += k * k * w;
    }
    (y1, y2, p1, p2)
}

impl MeasurementProcess {
    pub fn config(&self) -> &MeasurementConfig {
        &self.cfg
    }

    pub fn certificate(&self) -> Option<&OptimalityCertificate> {
        self.certificate.as_ref()
    }

    pub fn lambda_target(&self) -> LengthScale {
        LengthScale::new(self.cfg.lambda_target).expect("validated")
    }

    pub fn coupling(&self) -> f64 {
        self.cfg.coupling
    }

    pub fn calibration(&self) -> f64 {
        self.cfg.calibration()
    }

    /// Readout axes `(μX, μP)`.
    pub fn readout_axes(&self) -> (Axis, Axis) {
        let c = 1.0 / self.calibration();
        (self.cfg.grid.y1.scaled(c), self.cfg.grid.y2.scaled(c))
    }

    /// Samples `ψ(x)` on the system axis, failing if the grid misses more than
    /// [`SYSTEM_LEAK_TOL`] of its weight.
    pub fn system_wavefunction(&self, psi: &StateVector) -> Result<Vec<C64>> {
        let axis = self.cfg.grid.x;
        let samples = psi.wavefunction(&axis);
        let on_grid: f64 = samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * axis.step;
        let leak = (psi.norm().powi(2) - on_grid).abs();
        if leak > SYSTEM_LEAK_TOL {
            return Err(Error::Accuracy {
                what: "system state on the x-grid".into(),
                measured: leak,
                allowed: SYSTEM_LEAK_TOL,
            });
        }
        Ok(samples)
    }

    /// `ψ ⊗ φ₁ ⊗ φ₂` before the interaction.
    pub fn initial_state(&self, psi: &StateVector) -> Result<JointWavefunction> {
        let sys = self.system_wavefunction(psi)?;
        Ok(JointWavefunction::product(self.cfg.grid, &sys, &self.pointer1, &self.pointer2))
    }

    /// Applies the interaction to an arbitrary joint array.
    pub fn evolve_joint(&self, mut j: JointWavefunction) -> JointWavefunction {
        let [n0, n1, n2] = j.shape();
        let t = &self.transforms;
        let data = j.data_mut();
        t.apply(data, 1, false);
        t.apply(data, 2, false);
        for slab in data.chunks_mut(n1 * n2) {
            for (v, ph) in slab.iter_mut().zip(&self.pointer_phase) {
                *v *= ph;
            }
        }
        t.apply(data, 0, false);
        for k0 in 0..n0 {
            let slab = &mut data[k0 * n1 * n2..(k0 + 1) * n1 * n2];
            let row = &self.momentum_phase[k0 * n2..(k0 + 1) * n2];
            for line in slab.chunks_mut(n2) {
                for (v, ph) in line.iter_mut().zip(row) {
                    *v *= ph;
                }
            }
        }
        t.apply(data, 0, true);
        for i0 in 0..n0 {
            for k1 in 0..n1 {
                let ph = self.position_phase[i0 * n1 + k1];
                for v in &mut data[(i0 * n1 + k1) * n2..(i0 * n1 + k1 + 1) * n2] {
                    *v *= ph;
                }
            }
        }
        t.apply(data, 1, true);
        t.apply(data, 2, true);
        j
    }

    /// Post-interaction state of `ψ ⊗ φ_ap`.
    ///
    /// Fails when the evolved state reaches the grid edges, where the
    /// periodic transforms would wrap it around.
    pub fn evolve(&self, psi: &StateVector) -> Result<JointWavefunction> {
        let j0 = self.initial_state(psi)?;
        let before = j0.norm_sqr();
        let j = self.evolve_joint(j0);
        self.check_containment(&j, before)?;
        Ok(j)
    }

    pub(crate) fn check_containment(&self, j: &JointWavefunction, before: f64) -> Result<()> {
        let drift = (j.norm_sqr() - before).abs();
        let margin = (j.shape().iter().min().copied().unwrap_or(8) / 32).max(1);
        let edge = j.edge_weight(margin) / before.max(f64::MIN_POSITIVE);
        if drift > WRAP_TOL || edge > WRAP_TOL {
            return Err(Error::Unitarity { drift: drift.max(edge) });
        }
        Ok(())
    }

    /// `x̂` applied to a joint array.
    pub fn apply_position(&self, j: &mut JointWavefunction) {
        j.map_position(|x, _, _| C64::new(x, 0.0));
    }

    /// `p̂` on the system coordinate, applied spectrally.
    pub fn apply_momentum(&self, j: &mut JointWavefunction) {
        let [n0, n1, n2] = j.shape();
        let ks = self.cfg.grid.x.fft_frequencies();
        let t = &self.transforms;
        let data = j.data_mut();
        t.apply(data, 0, false);
        for (k0, k) in ks.iter().enumerate() {
            let f = k / n0 as f64;
            for v in &mut data[k0 * n1 * n2..(k0 + 1) * n1 * n2] {
                *v *= f;
            }
        }
        t.apply(data, 0, true);
    }

    /// Transforms a joint array along x into the system momentum
    /// representation, scaled so inner products are preserved when each
    /// momentum sample is weighted by the x-grid step.
    pub(crate) fn to_system_momentum(&self, j: &mut JointWavefunction) {
        let n0 = j.shape()[0] as f64;
        self.transforms.apply(j.data_mut(), 0, false);
        let s = 1.0 / n0.sqrt();
        for v in j.data_mut() {
            *v *= s;
        }
    }

    /// Outcome density over calibrated readouts, `∫ dx |Ψ_f|²`.
    pub fn pointer_distribution(&self, j: &JointWavefunction) -> Result<PhaseSpaceGrid> {
        let [n0, n1, n2] = j.shape();
        let cal = self.calibration();
        let hx = self.cfg.grid.x.step;
        let mut values = vec![0.0; n1 * n2];
        let data = j.data();
        for i0 in 0..n0 {
            let slab = &data[i0 * n1 * n2..(i0 + 1) * n1 * n2];
            for (acc, v) in values.iter_mut().zip(slab) {
                *acc += v.norm_sqr();
            }
        }
        let jac = hx * cal * cal;
        for v in values.iter_mut() {
            *v *= jac;
        }
        let (ax, ap) = self.readout_axes();
        let grid = PhaseSpaceGrid::new(ax, ap, self.lambda_target(), values)?;
        let deficit = 1.0 - grid.mass();
        if deficit.abs() > POINTER_MASS_TOL {
            return Err(Error::MassDeficit {
                what: "pointer distribution".into(),
                deficit,
            });
        }
        Ok(grid)
    }

    pub fn pointer_states(&self) -> (&[C64], &[C64]) {
        (&self.pointer1, &self.pointer2)
    }

    fn certify(&self) -> OptimalityCertificate {
        let k = self.cfg.coupling;
        let g = &self.cfg.grid;
        let (m1y, m1yy, m1p, m1pp) = pointer_moments(&g.y1, &self.pointer1);
        let (m2y, m2yy, m2p, m2pp) = pointer_moments(&g.y2, &self.pointer2);
        // readout errors y₁/κ + κP₂/2 and y₂/κ − κP₁/2 on independent pointers
        let bias_x = m1y / k + 0.5 * k * m2p;
        let bias_p = m2y / k - 0.5 * k * m1p;
        let msq_x = m1yy / (k * k) + 0.25 * k * k * m2pp + m1y * m2p;
        let msq_p = m2yy / (k * k) + 0.25 * k * k * m1pp - m2y * m1p;
        OptimalityCertificate {
            rms_x: msq_x.sqrt(),
            rms_p: msq_p.sqrt(),
            product: (msq_x * msq_p).sqrt(),
            bias_x,
            bias_p,
        }
    }
}

/// Builds the process, checking the grid and, for optimal widths, that the
/// pointer states really saturate the error bound at the target resolution.
pub fn build_process(cfg: &MeasurementConfig) -> Result<MeasurementProcess> {
    cfg.validate()?;
    let g = cfg.grid;
    let k = cfg.coupling;
    let cal = cfg.calibration();
    let pointer1 = gaussian_pointer(&g.y1, cfg.pointer_width1, cal * cfg.pointer_offset1);
    let pointer2 = gaussian_pointer(&g.y2, cfg.pointer_width2, cal * cfg.pointer_offset2);

    let (n0, n1, n2) = (g.x.len, g.y1.len, g.y2.len);
    let kx = g.x.fft_frequencies();
    let k1 = g.y1.fft_frequencies();
    let k2 = g.y2.fft_frequencies();
    let inv12 = 1.0 / (n1 * n2) as f64;
    let mut pointer_phase = Vec::with_capacity(n1 * n2);
    for &a in &k1 {
        for &b in &k2 {
            pointer_phase.push(C64::from_polar(inv12, 0.5 * k * k * a * b));
        }
    }
    let inv0 = 1.0 / n0 as f64;
    let mut momentum_phase = Vec::with_capacity(n0 * n2);
    for &p in &kx {
        for &b in &k2 {
            momentum_phase.push(C64::from_polar(inv0, -k * p * b));
        }
    }
    let mut position_phase = Vec::with_capacity(n0 * n1);
    for x in g.x.points() {
        for &a in &k1 {
            position_phase.push(C64::from_polar(1.0, -k * x * a));
        }
    }

    let mut process = MeasurementProcess {
        cfg: *cfg,
        transforms: AxisTransforms::new(&g),
        pointer1,
        pointer2,
        pointer_phase,
        momentum_phase,
        position_phase,
        certificate: None,
    };
    if cfg.widths == WidthChoice::Optimal {
        let c = process.certify();
        let lam = cfg.lambda_target;
        let bad = (c.product - 0.5).abs() > OPTIMALITY_TOL
            || (c.rms_x * std::f64::consts::SQRT_2 - lam).abs() > OPTIMALITY_TOL * lam
            || c.bias_x.abs() > 1e-6
            || c.bias_p.abs() > 1e-6;
        if bad {
            return Err(Error::Accuracy {
                what: format!("optimal pointer widths fail the error bound: {c:?}"),
                measured: (c.product - 0.5).abs(),
                allowed: OPTIMALITY_TOL,
            });
        }
        process.certificate = Some(c);
    }
    Ok(process)
}
