//! Single-coordinate measurement through a kernel `K(x, μ; x')`: the
//! outcome density `∫dx |∫dx' K ψ(x')|²` and its retrodictive error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{Error, Result};
use crate::fock::{hermite_functions, LengthScale, C64};
use crate::phase_space::Profile;

/// Normalisation demanded of a delta-kernel multiplier at every outcome.
pub const MULTIPLIER_NORM_TOL: f64 = 1e-8;
/// Unitarity demanded of a sampled kernel on the test basis.
pub const UNITARITY_TOL: f64 = 1e-6;
/// Allowed mass deficit of an outcome density.
pub const OUTCOME_MASS_TOL: f64 = 1e-4;
/// Number of Hermite test functions used to check sampled kernels.
pub const TEST_BASIS: usize = 8;

/// Source line for a profile: `±half` with 1025 or 4097 samples.
pub fn profile_line(profile: Profile, half: f64) -> Result<Axis> {
    let points = match profile {
        Profile::Default => 1025,
        Profile::Fine => 4097,
    };
    Axis::symmetric(half, points)
}

/// Sampled one-dimensional wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction1d {
    axis: Axis,
    values: Vec<C64>,
}

impl Wavefunction1d {
    /// Requires unit grid norm within `1e-6`.
    pub fn new(axis: Axis, values: Vec<C64>) -> Result<Self> {
        if values.len() != axis.len {
            return Err(Error::AxisMismatch(format!("{} samples on {} points", values.len(), axis.len)));
        }
        let w = Wavefunction1d { axis, values };
        let n = w.norm_sqr();
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("wavefunction", format!("grid norm² {n} is not 1")));
        }
        Ok(w)
    }

    /// Gaussian packet whose density has standard deviation `spread`,
    /// carrying momentum `momentum`.
    pub fn gaussian_packet(axis: Axis, center: f64, spread: f64, momentum: f64) -> Result<Self> {
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::invalid("packet_width", format!("must be positive, got {spread}")));
        }
        let norm = (2.0 * PI * spread * spread).powf(-0.25);
        let values = axis
            .points()
            .iter()
            .map(|&x| {
                let d = x - center;
                C64::from_polar(norm * (-d * d / (4.0 * spread * spread)).exp(), momentum * x)
            })
            .collect();
        Wavefunction1d::new(axis, values)
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.axis.step
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Multiplier `f(x, μ)` of a delta kernel, stored `[x][μ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub x_axis: Axis,
    pub mu_axis: Axis,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Multiplier {
    pub fn from_fn(x_axis: Axis, mu_axis: Axis, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut re = Vec::with_capacity(x_axis.len * mu_axis.len);
        let mut im = Vec::with_capacity(x_axis.len * mu_axis.len);
        for x in x_axis.points() {
            for mu in mu_axis.points() {
                let v = f(x, mu);
                re.push(v.re);
                im.push(v.im);
            }
        }
        Multiplier { x_axis, mu_axis, re, im }
    }

    fn value(&self, ix: usize, imu: usize) -> C64 {
        let k = ix * self.mu_axis.len + imu;
        C64::new(self.re[k], self.im[k])
    }

    /// `∫dx |f(x, μ)|²` at each outcome sample.
    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.mu_axis.len)
            .map(|m| (0..self.x_axis.len).map(|i| self.value(i, m).norm_sqr()).sum::<f64>() * self.x_axis.step)
            .collect()
    }
}

/// Kernel sampled on `[x][μ][x']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledKernel {
    pub x_axis: Axis,
    pub mu_axis: Axis,
    pub source_axis: Axis,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SampledKernel {
    pub fn from_fn(x_axis: Axis, mu_axis: Axis, source_axis: Axis, k: impl Fn(f64, f64, f64) -> C64) -> Self {
        let n = x_axis.len * mu_axis.len * source_axis.len;
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for x in x_axis.points() {
            for mu in mu_axis.points() {
                for xp in source_axis.points() {
                    let v = k(x, mu, xp);
                    re.push(v.re);
                    im.push(v.im);
                }
            }
        }
        SampledKernel {
            x_axis,
            mu_axis,
            source_axis,
            re,
            im,
        }
    }

    /// `Σ_x' K(x, μ; x') g(x') h'` for every `(x, μ)`, scaled so the result
    /// can be summed against itself with weights `hx·hμ`.
    fn apply(&self, g: &[C64], moment: bool) -> Vec<C64> {
        let ns = self.source_axis.len;
        let hs = self.source_axis.step;
        let src = self.source_axis.points();
        let mut out = Vec::with_capacity(self.x_axis.len * self.mu_axis.len);
        for ix in 0..self.x_axis.len {
            for imu in 0..self.mu_axis.len {
                let mu = self.mu_axis.at(imu);
                let base = (ix * self.mu_axis.len + imu) * ns;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..ns {
                    let k = C64::new(self.re[base + j], self.im[base + j]);
                    let w = if moment { mu - src[j] } else { 1.0 };
                    acc += k * g[j] * w;
                }
                out.push(acc * hs);
            }
        }
        out
    }

    /// Largest deviation of `∫dx dμ (Kφ_n)*(Kφ_m)` from `δ_nm` over the
    /// first [`TEST_BASIS`] Hermite functions sized to fit the source axis.
    pub fn unitarity_defect(&self) -> f64 {
        let half = 0.5 * (self.source_axis.end() - self.source_axis.start);
        let center = 0.5 * (self.source_axis.end() + self.source_axis.start);
        let scale = LengthScale::new(half / 8.0).expect("positive span");
        let pts: Vec<f64> = self.source_axis.points().iter().map(|x| x - center).collect();
        let table = hermite_functions(TEST_BASIS, scale, &pts);
        let images: Vec<Vec<C64>> = table
            .chunks(pts.len())
            .map(|row| {
                let g: Vec<C64> = row.iter().map(|&v| C64::new(v, 0.0)).collect();
                self.apply(&g, false)
            })
            .collect();
        let w = self.x_axis.step * self.mu_axis.step;
        let mut worst = 0.0f64;
        for n in 0..TEST_BASIS {
            for m in n..TEST_BASIS {
                let g: C64 = images[n].iter().zip(&images[m]).map(|(a, b)| a.conj() * b).sum::<C64>() * w;
                let target = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// A measurement kernel, in declared analytic form where one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum MeasurementKernel {
    /// `f(x, μ) δ(μ − x' − shift)`; without a multiplier the apparatus
    /// factor is any fixed unit vector.
    Delta {
        #[serde(default)]
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        multiplier: Option<Multiplier>,
    },
    /// `δ(x − x') φ(μ − x' − shift)` with `|φ|²` a Gaussian of standard
    /// deviation `width`.
    Gaussian {
        width: f64,
        #[serde(default)]
        shift: f64,
    },
    Sampled(SampledKernel),
}

/// Perfect-position delta kernel shifted by `shift`.
pub fn identity_delta(shift: f64) -> Result<MeasurementKernel> {
    if !shift.is_finite() {
        return Err(Error::InvalidKernel(format!("shift {shift}")));
    }
    Ok(MeasurementKernel::Delta { shift, multiplier: None })
}

/// Delta kernel with multiplier `f`, which must satisfy `∫dx|f|² = 1` at
/// every outcome sample.
pub fn delta_kernel(f: Multiplier, shift: f64) -> Result<MeasurementKernel> {
    let k = MeasurementKernel::Delta {
        shift,
        multiplier: Some(f),
    };
    k.validate()?;
    Ok(k)
}

pub fn gaussian_kernel(width: f64, shift: f64) -> Result<MeasurementKernel> {
    let k = MeasurementKernel::Gaussian { width, shift };
    k.validate()?;
    Ok(k)
}

pub fn sampled_kernel(k: SampledKernel) -> Result<MeasurementKernel> {
    let k = MeasurementKernel::Sampled(k);
    k.validate()?;
    Ok(k)
}

impl MeasurementKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            MeasurementKernel::Delta { shift, multiplier } => {
                if !shift.is_finite() {
                    return Err(Error::InvalidKernel(format!("shift {shift}")));
                }
                if let Some(f) = multiplier {
                    if f.re.len() != f.x_axis.len * f.mu_axis.len || f.im.len() != f.re.len() {
                        return Err(Error::InvalidKernel("multiplier size does not match its axes".into()));
                    }
                    for (m, n) in f.column_norms().iter().enumerate() {
                        if (n - 1.0).abs() > MULTIPLIER_NORM_TOL {
                            return Err(Error::InvalidKernel(format!(
                                "∫|f(x, μ)|²dx = {n} at μ = {}",
                                f.mu_axis.at(m)
                            )));
                        }
                    }
                }
                Ok(())
            }
            MeasurementKernel::Gaussian { width, shift } => {
                if !(width.is_finite() && *width > 0.0 && shift.is_finite()) {
                    return Err(Error::InvalidKernel(format!("gaussian width {width}, shift {shift}")));
                }
                Ok(())
            }
            MeasurementKernel::Sampled(k) => {
                let n = k.x_axis.len * k.mu_axis.len * k.source_axis.len;
                if k.re.len() != n || k.im.len() != n {
                    return Err(Error::InvalidKernel("sampled kernel size does not match its axes".into()));
                }
                let defect = k.unitarity_defect();
                if !(defect <= UNITARITY_TOL) {
                    return Err(Error::InvalidKernel(format!(
                        "kernel is not unitary on the test basis (defect {defect:.3e})"
                    )));
                }
                Ok(())
            }
        }
    }

    fn shift(&self) -> f64 {
        match self {
            MeasurementKernel::Delta { shift, .. } | MeasurementKernel::Gaussian { shift, .. } => *shift,
            MeasurementKernel::Sampled(_) => 0.0,
        }
    }

    /// Outcome axis for a wavefunction sampled on `source`.
    pub fn outcome_axis(&self, source: &Axis) -> Axis {
        match self {
            MeasurementKernel::Sampled(k) => k.mu_axis,
            _ => Axis {
                start: source.start + self.shift(),
                ..*source
            },
        }
    }

    /// Kernel-applied vectors `∫dx' K ψ` (or with `(μ − x')` inserted) on
    /// `[x][μ]`, for the sampled form.
    fn sampled_images(k: &SampledKernel, psi: &Wavefunction1d, moment: bool) -> Result<Vec<C64>> {
        if !k.source_axis.matches(psi.axis(), 1e-9) {
            return Err(Error::AxisMismatch(format!(
                "kernel source axis {:?} vs wavefunction axis {:?}",
                k.source_axis,
                psi.axis()
            )));
        }
        Ok(k.apply(psi.values(), moment))
    }
}

/// Outcome density on its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub axis: Axis,
    pub density: Vec<f64>,
}

impl Outcome {
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.axis.step
    }
}

/// `ρ(μ) = ∫dx |∫dx' K(x, μ; x') ψ(x')|²`.
pub fn outcome_distribution(kernel: &MeasurementKernel, psi: &Wavefunction1d) -> Result<Outcome> {
    kernel.validate()?;
    let axis = kernel.outcome_axis(psi.axis());
    let dens = psi.density();
    let density = match kernel {
        MeasurementKernel::Delta { multiplier: None, .. } => dens,
        MeasurementKernel::Delta {
            multiplier: Some(f), ..
        } => {
            if !f.mu_axis.matches(&axis, 1e-9) {
                return Err(Error::AxisMismatch(format!(
                    "multiplier outcome axis {:?} vs {:?}",
                    f.mu_axis, axis
                )));
            }
            let hx = f.x_axis.step;
            (0..axis.len)
                .map(|m| {
                    let col: f64 = (0..f.x_axis.len).map(|i| f.value(i, m).norm_sqr()).sum::<f64>() * hx;
                    col * dens[m]
                })
                .collect()
        }
        MeasurementKernel::Gaussian { width, .. } => {
            let h = psi.axis().step;
            let norm = 1.0 / (2.0 * PI * width * width).sqrt();
            let src = psi.axis().points();
            (0..axis.len)
                .map(|i| {
                    let x = src[i];
                    src.iter()
                        .zip(&dens)
                        .map(|(&xp, &d)| d * norm * (-(x - xp) * (x - xp) / (2.0 * width * width)).exp())
                        .sum::<f64>()
                        * h
                })
                .collect()
        }
        MeasurementKernel::Sampled(k) => {
            let img = MeasurementKernel::sampled_images(k, psi, false)?;
            let nmu = k.mu_axis.len;
            (0..nmu)
                .map(|m| (0..k.x_axis.len).map(|i| img[i * nmu + m].norm_sqr()).sum::<f64>() * k.x_axis.step)
                .collect()
        }
    };
    let out = Outcome { axis, density };
    let deficit = 1.0 - out.mass();
    if deficit.abs() > OUTCOME_MASS_TOL {
        return Err(Error::MassDeficit {
            what: "outcome density".into(),
            deficit,
        });
    }
    Ok(out)
}

/// `√(∫dx dμ |∫dx' (μ − x') K ψ(x')|²)`.
pub fn retro_error(kernel: &MeasurementKernel, psi: &Wavefunction1d) -> Result<f64> {
    kernel.validate()?;
    let mass = psi.norm_sqr();
    match kernel {
        // every outcome sits exactly `shift` from the source point
        MeasurementKernel::Delta { shift, .. } => Ok(shift.abs() * mass.sqrt()),
        MeasurementKernel::Gaussian { width, shift } => {
            // ∫du (u + s)² |φ(u)|² against the source density
            let h = psi.axis().step;
            let n = (8.0 * width / h).ceil().max(64.0) as usize;
            let du = 16.0 * width / n as f64;
            let norm = 1.0 / (2.0 * PI * width * width).sqrt();
            let second: f64 = (0..=n)
                .map(|i| {
                    let u = -8.0 * width + i as f64 * du;
                    (u + shift) * (u + shift) * norm * (-u * u / (2.0 * width * width)).exp()
                })
                .sum::<f64>()
                * du;
            Ok((second * mass).sqrt())
        }
        MeasurementKernel::Sampled(k) => {
            let img = MeasurementKernel::sampled_images(k, psi, true)?;
            let w = k.x_axis.step * k.mu_axis.step;
            Ok((img.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt())
        }
    }
}

/// Relative sup-norm gap between the outcome density and `|ψ|²`.
pub fn density_deviation(outcome: &Outcome, psi: &Wavefunction1d) -> Result<f64> {
    if !outcome.axis.matches(psi.axis(), 1e-9) {
        return Err(Error::AxisMismatch("outcome and source axes differ".into()));
    }
    let dens = psi.density();
    let peak = dens.iter().copied().fold(0.0, f64::max);
    Ok(outcome
        .density
        .iter()
        .zip(&dens)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / peak)
}

/// De Broglie comparison: a packet of momentum `p0` whose envelope spread
/// equals its wavelength `2π/p0`, read out through a Gaussian kernel of
/// width `ratio · 2π/p0`. Returns the relative sup-norm deviation of the
/// outcome density from `|ψ|²`.
pub fn de_broglie_deviation(ratio: f64, momentum: f64, points: usize) -> Result<f64> {
    if !(momentum > 0.0) {
        return Err(Error::invalid("packet_momentum", "must be positive"));
    }
    let wavelength = 2.0 * PI / momentum;
    let spread = wavelength;
    let half = 12.0 * (spread * spread + (ratio * wavelength).powi(2)).sqrt();
    let axis = Axis::symmetric(half, points)?;
    let psi = Wavefunction1d::gaussian_packet(axis, 0.0, spread, momentum)?;
    let k = gaussian_kernel(ratio * wavelength, 0.0)?;
    let out = outcome_distribution(&k, &psi)?;
    density_deviation(&out, &psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Axis {
        Axis::symmetric(12.0, 2049).unwrap()
    }

    fn gauss_density(x: f64, s: f64) -> f64 {
        (-x * x / (2.0 * s * s)).exp() / (2.0 * PI * s * s).sqrt()
    }

    #[test]
    fn delta_reproduces_density() {
        let psi = Wavefunction1d::gaussian_packet(line(), 0.4, 0.8, 2.0).unwrap();
        let out = outcome_distribution(&identity_delta(0.0).unwrap(), &psi).unwrap();
        assert_eq!(out.density, psi.density());
        assert_eq!(retro_error(&identity_delta(0.0).unwrap(), &psi).unwrap(), 0.0);
        let shifted = identity_delta(-0.3).unwrap();
        assert!((retro_error(&shifted, &psi).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn multiplier_normalisation_is_enforced() {
        let xa = Axis::symmetric(10.0, 801).unwrap();
        let mu = line();
        let phi = |x: f64| (-x * x / 2.0).exp() / PI.powf(0.25);
        let good = Multiplier::from_fn(xa, mu, |x, _| C64::new(phi(x), 0.0));
        assert!(delta_kernel(good, 0.0).is_ok());
        let short = Multiplier::from_fn(xa, mu, |x, _| C64::new(0.9f64.sqrt() * phi(x), 0.0));
        assert!(matches!(delta_kernel(short, 0.0), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn multiplier_phase_cancels() {
        let xa = Axis::symmetric(10.0, 801).unwrap();
        let mu = line();
        let phi = |x: f64| (-x * x / 2.0).exp() / PI.powf(0.25);
        let f = Multiplier::from_fn(xa, mu, |x, m| C64::from_polar(phi(x), 3.0 * m + 0.5 * x * m));
        let k = delta_kernel(f, 0.0).unwrap();
        let psi = Wavefunction1d::gaussian_packet(line(), -1.0, 0.7, 1.0).unwrap();
        let out = outcome_distribution(&k, &psi).unwrap();
        for (a, b) in out.density.iter().zip(psi.density()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_convolution_closed_form() {
        let (a, w) = (0.9, 0.6);
        let psi = Wavefunction1d::gaussian_packet(line(), 0.0, a, 1.3).unwrap();
        let out = outcome_distribution(&gaussian_kernel(w, 0.0).unwrap(), &psi).unwrap();
        let s = (a * a + w * w).sqrt();
        for (x, v) in out.axis.points().iter().zip(&out.density) {
            assert!((v - gauss_density(*x, s)).abs() < 1e-4);
        }
    }

    #[test]
    fn gaussian_error_is_the_kernel_spread() {
        for (i, &(c, a, p)) in [(0.0, 0.5, 0.0), (1.0, 1.2, 2.0), (-2.0, 0.8, -1.0)].iter().enumerate() {
            let psi = Wavefunction1d::gaussian_packet(line(), c, a, p).unwrap();
            let w = 0.2 + 0.3 * i as f64;
            assert!((retro_error(&gaussian_kernel(w, 0.0).unwrap(), &psi).unwrap() - w).abs() < 1e-8);
        }
    }

    #[test]
    fn sampled_von_neumann_kernel_matches_declared_form() {
        // K(x, μ; x') = δ_{x x'}/h · φ_w(μ − x') on a coarse grid
        let src = Axis::symmetric(6.0, 121).unwrap();
        let w = 0.5;
        let amp = |u: f64| (2.0 * PI * w * w).powf(-0.25) * (-u * u / (4.0 * w * w)).exp();
        let h = src.step;
        let k = SampledKernel::from_fn(src, src, src, |x, mu, xp| {
            if (x - xp).abs() < 0.5 * h {
                C64::new(amp(mu - xp) / h, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let k = sampled_kernel(k).unwrap();
        let psi = Wavefunction1d::gaussian_packet(src, 0.3, 0.7, 0.0).unwrap();
        let out = outcome_distribution(&k, &psi).unwrap();
        let declared = outcome_distribution(&gaussian_kernel(w, 0.0).unwrap(), &psi).unwrap();
        for (a, b) in out.density.iter().zip(&declared.density) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((retro_error(&k, &psi).unwrap() - w).abs() < 1e-6);
    }

    #[test]
    fn non_unitary_sampled_kernel_is_rejected() {
        let src = Axis::symmetric(6.0, 61).unwrap();
        let k = SampledKernel::from_fn(src, src, src, |_, _, _| C64::new(0.01, 0.0));
        assert!(matches!(sampled_kernel(k), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn de_broglie_thresholds() {
        assert!(de_broglie_deviation(0.1, 3.0, 4001).unwrap() < 1e-2);
        assert!(de_broglie_deviation(3.0, 3.0, 4001).unwrap() > 0.1);
    }
}
