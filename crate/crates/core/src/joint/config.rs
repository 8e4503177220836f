use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{Error, Result};
use crate::fock::StateVector;
use crate::phase_space::{husimi_support, Profile, Rect};

/// Sampling of the three joint axes in units of the combined widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSampling {
    pub points: usize,
    /// Half-extent of each axis in combined widths.
    pub widths: f64,
}

impl JointSampling {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Default => JointSampling {
                points: 128,
                widths: 8.0,
            },
            Profile::Fine => JointSampling {
                points: 256,
                widths: 12.0,
            },
        }
    }
}

/// Periodic axes for the system coordinate and the two pointers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: Axis,
    pub y1: Axis,
    pub y2: Axis,
}

/// First and second moments of the system state the grid must hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateEnvelope {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

impl StateEnvelope {
    /// The ground state at resolution `lambda`.
    pub fn vacuum(lambda: f64) -> Self {
        StateEnvelope {
            mean_x: 0.0,
            mean_p: 0.0,
            var_x: 0.5 * lambda * lambda,
            var_p: 0.5 / (lambda * lambda),
        }
    }

    /// Moments of `psi` from its number-basis amplitudes.
    pub fn of_state(psi: &StateVector) -> Self {
        let lam = psi.scale().get();
        let c = psi.amplitudes();
        let dim = c.len();
        let (mut a1, mut a2, mut n) = (crate::fock::C64::new(0.0, 0.0), crate::fock::C64::new(0.0, 0.0), 0.0);
        for k in 0..dim {
            n += k as f64 * c[k].norm_sqr();
            if k + 1 < dim {
                a1 += c[k].conj() * c[k + 1] * ((k + 1) as f64).sqrt();
            }
            if k + 2 < dim {
                a2 += c[k].conj() * c[k + 2] * (((k + 1) * (k + 2)) as f64).sqrt();
            }
        }
        let mean_x = std::f64::consts::SQRT_2 * lam * a1.re;
        let mean_p = std::f64::consts::SQRT_2 * a1.im / lam;
        let x2 = lam * lam * (a2.re + n + 0.5);
        let p2 = (n + 0.5 - a2.re) / (lam * lam);
        StateEnvelope {
            mean_x,
            mean_p,
            var_x: (x2 - mean_x * mean_x).max(0.0),
            var_p: (p2 - mean_p * mean_p).max(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.mean_x, self.mean_p, self.var_x, self.var_p].iter().all(|v| v.is_finite());
        if !finite || !(self.var_x > 0.0 && self.var_p > 0.0) {
            return Err(Error::invalid("envelope", format!("{self:?}")));
        }
        Ok(())
    }
}

/// How the pointer widths were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthChoice {
    /// Derived from the target resolution so that both errors balance at
    /// the uncertainty bound.
    Optimal,
    Explicit,
}

/// Parameters of the two-pointer apparatus.
///
/// Pointer `j` starts in `exp(−(y − κ s_j)² / 4σ_j²)`, so `σ_j` is the
/// standard deviation of its position distribution and `s_j` the offset it
/// induces in the calibrated readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub pointer_width1: f64,
    pub pointer_width2: f64,
    pub pointer_offset1: f64,
    pub pointer_offset2: f64,
    pub coupling: f64,
    pub lambda_target: f64,
    pub widths: WidthChoice,
    /// State the grid is sized for; the vacuum unless set.
    pub envelope: StateEnvelope,
    pub sampling: JointSampling,
    pub grid: GridSpec,
}

/// Pointer widths `(κλ/2, κ/2λ)` that make the process retrodictively and
/// predictively optimal at resolution `λ`.
///
/// The readout errors are `y₁/κ ± κP₂/2` and `y₂/κ ∓ κP₁/2`. Their
/// variances `σ₁²/κ² + κ²/16σ₂²` and `σ₂²/κ² + κ²/16σ₁²` reach `λ²/2` and
/// `1/2λ²` with product `1/4` only when each pointer is at its own
/// minimum-uncertainty split, which fixes both widths.
pub fn optimal_pointer_widths(lambda: f64, kappa: f64) -> (f64, f64) {
    (0.5 * kappa * lambda, 0.5 * kappa / lambda)
}

/// RMS spreads of the vacuum after the interaction on the `(x, y₁, y₂)` axes.
pub fn combined_widths(sigma1: f64, sigma2: f64, kappa: f64, lambda: f64) -> [f64; 3] {
    envelope_widths(sigma1, sigma2, kappa, &StateEnvelope::vacuum(lambda))
}

/// RMS spreads after the interaction when the system starts in `env`.
pub fn envelope_widths(sigma1: f64, sigma2: f64, kappa: f64, env: &StateEnvelope) -> [f64; 3] {
    let k2 = kappa * kappa;
    [
        (env.var_x + k2 / (4.0 * sigma2 * sigma2)).sqrt(),
        (sigma1 * sigma1 + k2 * env.var_x + k2 * k2 / (16.0 * sigma2 * sigma2)).sqrt(),
        (sigma2 * sigma2 + k2 * env.var_p + k2 * k2 / (16.0 * sigma1 * sigma1)).sqrt(),
    ]
}

/// RMS spreads of the conjugate momenta `(p, P₁, P₂)` for the vacuum.
pub fn momentum_widths(sigma1: f64, sigma2: f64, kappa: f64, lambda: f64) -> [f64; 3] {
    envelope_momentum_widths(sigma1, sigma2, kappa, &StateEnvelope::vacuum(lambda))
}

pub fn envelope_momentum_widths(sigma1: f64, sigma2: f64, kappa: f64, env: &StateEnvelope) -> [f64; 3] {
    let k2 = kappa * kappa;
    [(env.var_p + k2 / (4.0 * sigma1 * sigma1)).sqrt(), 0.5 / sigma1, 0.5 / sigma2]
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be a positive number, got {v}")))
    }
}

impl MeasurementConfig {
    /// Optimal process at resolution `lambda` with coupling `kappa`.
    pub fn optimal(lambda: f64, kappa: f64, sampling: JointSampling) -> Result<Self> {
        check_positive("lambdaTarget", lambda)?;
        check_positive("coupling", kappa)?;
        let (s1, s2) = optimal_pointer_widths(lambda, kappa);
        let mut cfg = MeasurementConfig::explicit(s1, s2, kappa, lambda, sampling)?;
        cfg.widths = WidthChoice::Optimal;
        Ok(cfg)
    }

    /// Arbitrary pointer widths; `kappa = 0` switches the interaction off.
    pub fn explicit(sigma1: f64, sigma2: f64, kappa: f64, lambda: f64, sampling: JointSampling) -> Result<Self> {
        check_positive("pointerWidth1", sigma1)?;
        check_positive("pointerWidth2", sigma2)?;
        check_positive("lambdaTarget", lambda)?;
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::invalid("coupling", format!("must be nonnegative, got {kappa}")));
        }
        let envelope = StateEnvelope::vacuum(lambda);
        Ok(MeasurementConfig {
            pointer_width1: sigma1,
            pointer_width2: sigma2,
            pointer_offset1: 0.0,
            pointer_offset2: 0.0,
            coupling: kappa,
            lambda_target: lambda,
            widths: WidthChoice::Explicit,
            envelope,
            sampling,
            grid: GridSpec::covering(sigma1, sigma2, kappa, &envelope, [0.0; 3], sampling)?,
        })
    }

    /// Optimal widths with the first pointer width multiplied by `ratio`.
    pub fn detuned(lambda: f64, kappa: f64, ratio: f64, sampling: JointSampling) -> Result<Self> {
        check_positive("detuning ratio", ratio)?;
        let (s1, s2) = optimal_pointer_widths(lambda, kappa);
        MeasurementConfig::explicit(s1 * ratio, s2, kappa, lambda, sampling)
    }

    pub fn with_offsets(mut self, offset1: f64, offset2: f64) -> Result<Self> {
        if !(offset1.is_finite() && offset2.is_finite()) {
            return Err(Error::invalid("pointerOffset", "must be finite"));
        }
        self.pointer_offset1 = offset1;
        self.pointer_offset2 = offset2;
        self.widths = WidthChoice::Explicit;
        self.regrid()?;
        Ok(self)
    }

    /// Resizes the grid to hold a system state with the given moments.
    pub fn with_envelope(mut self, envelope: StateEnvelope) -> Result<Self> {
        envelope.validate()?;
        self.envelope = envelope;
        self.regrid()?;
        Ok(self)
    }

    /// Grid centred on the phase-space support of `psi`, keeping the vacuum
    /// spreads at the target resolution. Widening by the state's own
    /// variance would cost momentum resolution the fixed point count cannot
    /// spare, and the mean alone pushes the far tail of a lopsided state
    /// toward an edge.
    pub fn for_state(self, psi: &StateVector) -> Result<Self> {
        let e = StateEnvelope::of_state(psi);
        let v = StateEnvelope::vacuum(self.lambda_target);
        let (rx, rp) = (e.var_x.max(v.var_x).sqrt(), e.var_p.max(v.var_p).sqrt());
        let window = Rect::new(e.mean_x - 12.0 * rx, e.mean_x + 12.0 * rx, e.mean_p - 12.0 * rp, e.mean_p + 12.0 * rp)?;
        let (mean_x, mean_p) = husimi_support(psi, &window, 241, 1e-12)
            .map(|b| b.center())
            .unwrap_or((e.mean_x, e.mean_p));
        self.with_envelope(StateEnvelope {
            mean_x,
            mean_p,
            var_x: v.var_x,
            var_p: v.var_p,
        })
    }

    /// Expected final values on `(x, y₁, y₂)`.
    pub fn expected_centres(&self) -> [f64; 3] {
        let cal = self.calibration();
        let k = self.coupling;
        [
            self.envelope.mean_x,
            cal * self.pointer_offset1 + k * self.envelope.mean_x,
            cal * self.pointer_offset2 + k * self.envelope.mean_p,
        ]
    }

    fn regrid(&mut self) -> Result<()> {
        self.grid = GridSpec::covering(
            self.pointer_width1,
            self.pointer_width2,
            self.coupling,
            &self.envelope,
            self.expected_centres(),
            self.sampling,
        )?;
        Ok(())
    }

    /// Readout scale: pointer positions are divided by this to give
    /// calibrated outcomes. Without coupling the raw positions are reported.
    pub fn calibration(&self) -> f64 {
        if self.coupling > 0.0 {
            self.coupling
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("pointerWidth1", self.pointer_width1)?;
        check_positive("pointerWidth2", self.pointer_width2)?;
        check_positive("lambdaTarget", self.lambda_target)?;
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::invalid("coupling", format!("must be nonnegative, got {}", self.coupling)));
        }
        self.envelope.validate()?;
        let space = envelope_widths(self.pointer_width1, self.pointer_width2, self.coupling, &self.envelope);
        let momentum = envelope_momentum_widths(self.pointer_width1, self.pointer_width2, self.coupling, &self.envelope);
        let shifts = self.expected_centres();
        let momentum_centres = [self.envelope.mean_p.abs(), 0.0, 0.0];
        let names = ["x", "y1", "y2"];
        for (k, axis) in [self.grid.x, self.grid.y1, self.grid.y2].iter().enumerate() {
            if axis.len < 8 {
                return Err(Error::invalid("grid", format!("axis {} has {} points", names[k], axis.len)));
            }
            let half = 0.5 * axis.len as f64 * axis.step;
            let center = axis.start + half;
            let reach = (center - shifts[k]).abs() + 6.0 * space[k];
            if half < reach {
                return Err(Error::invalid(
                    "grid",
                    format!("axis {} spans ±{half:.4} but needs ±{reach:.4} (6 combined widths)", names[k]),
                ));
            }
            if axis.step > space[k] / 8.0 * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "grid",
                    format!(
                        "axis {} step {:.4} is coarser than 1/8 of the width {:.4}",
                        names[k], axis.step, space[k]
                    ),
                ));
            }
            let nyquist = std::f64::consts::PI / axis.step;
            let need = momentum_centres[k] + 6.0 * momentum[k];
            if nyquist < need {
                return Err(Error::invalid(
                    "grid",
                    format!("axis {} resolves momenta to {nyquist:.4}, needs {need:.4}", names[k]),
                ));
            }
        }
        Ok(())
    }
}

impl GridSpec {
    /// Periodic axes spanning `±sampling.widths` combined widths about
    /// `centres`.
    pub fn covering(
        sigma1: f64,
        sigma2: f64,
        kappa: f64,
        envelope: &StateEnvelope,
        centres: [f64; 3],
        sampling: JointSampling,
    ) -> Result<Self> {
        if sampling.points < 8 || !(sampling.widths > 0.0) {
            return Err(Error::invalid("grid", format!("{sampling:?}")));
        }
        let w = envelope_widths(sigma1, sigma2, kappa, envelope);
        let axis = |k: usize| -> Result<Axis> {
            let a = Axis::periodic(sampling.widths * w[k], sampling.points)?;
            Ok(Axis {
                start: a.start + centres[k],
                ..a
            })
        };
        Ok(GridSpec {
            x: axis(0)?,
            y1: axis(1)?,
            y2: axis(2)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_widths_saturate_the_bound() {
        for &(lam, kap) in &[(1.0, 1.0), (0.6, 1.7), (2.0, 0.5)] {
            let (s1, s2) = optimal_pointer_widths(lam, kap);
            let vx = s1 * s1 / (kap * kap) + kap * kap / (16.0 * s2 * s2);
            let vp = s2 * s2 / (kap * kap) + kap * kap / (16.0 * s1 * s1);
            assert!((vx - lam * lam / 2.0).abs() < 1e-14);
            assert!((vp - 0.5 / (lam * lam)).abs() < 1e-14);
            assert!((vx * vp - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn optimal_vacuum_spreads() {
        // every calibrated readout of the optimal process spreads like Q of the vacuum
        let w = combined_widths(0.5, 0.5, 1.0, 1.0);
        assert!((w[1] - 1.0).abs() < 1e-15);
        assert!((w[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profiles_validate() {
        for p in [Profile::Default, Profile::Fine] {
            MeasurementConfig::optimal(1.0, 1.0, JointSampling::for_profile(p))
                .unwrap()
                .validate()
                .unwrap();
        }
        for r in [1.25, 1.5, 2.0] {
            MeasurementConfig::detuned(1.0, 1.0, r, JointSampling::for_profile(Profile::Default))
                .unwrap()
                .validate()
                .unwrap();
        }
    }

    #[test]
    fn envelope_of_known_states() {
        use crate::fock::{make_number_state, LengthScale};
        use crate::phase_space::{coherent_state, CoherentLabel};
        let lam = LengthScale::new(1.3).unwrap();
        let e = StateEnvelope::of_state(&make_number_state(2, 8, lam).unwrap());
        assert!((e.var_x - 2.5 * 1.69).abs() < 1e-12 && (e.var_p - 2.5 / 1.69).abs() < 1e-12);
        let c = coherent_state(&CoherentLabel::new(0.7, -1.1, lam).unwrap(), 40);
        let e = StateEnvelope::of_state(&c);
        let v = StateEnvelope::vacuum(1.3);
        assert!((e.mean_x - 0.7).abs() < 1e-12 && (e.mean_p + 1.1).abs() < 1e-12);
        assert!((e.var_x - v.var_x).abs() < 1e-12 && (e.var_p - v.var_p).abs() < 1e-12);
    }

    #[test]
    fn grid_follows_the_state() {
        let s = JointSampling::for_profile(Profile::Default);
        let env = StateEnvelope {
            mean_x: 1.5,
            mean_p: -0.5,
            var_x: 1.5,
            var_p: 1.5,
        };
        let cfg = MeasurementConfig::optimal(1.0, 1.0, s).unwrap().with_envelope(env).unwrap();
        cfg.validate().unwrap();
        let mid = |a: &Axis| a.start + 0.5 * a.len as f64 * a.step;
        assert!((mid(&cfg.grid.y1) - 1.5).abs() < 1e-12);
        assert!((mid(&cfg.grid.y2) + 0.5).abs() < 1e-12);
        // a state wider than 128 points can hold at six momentum widths
        let wide = StateEnvelope { var_x: 6.5, var_p: 6.5, ..env };
        let cfg = MeasurementConfig::optimal(1.0, 1.0, s).unwrap().with_envelope(wide).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = JointSampling::for_profile(Profile::Default);
        match MeasurementConfig::explicit(-1.0, 0.5, 1.0, 1.0, s) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "pointerWidth1"),
            other => panic!("{other:?}"),
        }
        let coarse = JointSampling { points: 16, widths: 8.0 };
        assert!(MeasurementConfig::optimal(1.0, 1.0, coarse).unwrap().validate().is_err());
        let narrow = JointSampling { points: 128, widths: 4.0 };
        assert!(MeasurementConfig::optimal(1.0, 1.0, narrow).unwrap().validate().is_err());
    }
}
