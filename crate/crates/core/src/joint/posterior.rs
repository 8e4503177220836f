use nalgebra::DMatrix;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::{hermite_functions, LengthScale, C64};
use crate::phase_space::Rect;

use super::process::MeasurementProcess;
use super::wavefunction::JointWavefunction;

/// Smallest region probability that conditioning accepts.
pub const MIN_REGION_PROBABILITY: f64 = 1e-10;
/// Allowed weight of the conditioned state outside the number basis.
pub const POSTERIOR_TRACE_TOL: f64 = 1e-6;

/// System state after the readout was found in a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub density: DensityMatrix,
    /// Probability of the readout landing in the region.
    pub p_region: f64,
    /// Number of readout grid cells inside the region.
    pub cells: usize,
}

/// Restricts the readouts to `region`, traces out both pointers and returns
/// the normalised system state in the number basis at `basis`.
pub fn condition_on_region(
    process: &MeasurementProcess,
    j: &JointWavefunction,
    region: &Rect,
    basis: LengthScale,
    dim: usize,
) -> Result<Posterior> {
    if dim == 0 {
        return Err(Error::DegenerateSpace { dim, min: 1 });
    }
    let [n0, n1, n2] = j.shape();
    let (ax, ap) = process.readout_axes();
    let inside: Vec<usize> = (0..n1 * n2)
        .filter(|&r| region.contains(ax.at(r / n2), ap.at(r % n2)))
        .collect();
    let grid = j.grid();
    let hx = grid.x.step;
    let h12 = grid.y1.step * grid.y2.step;
    let data = j.data();

    let mut p_region = 0.0;
    for i0 in 0..n0 {
        let slab = &data[i0 * n1 * n2..(i0 + 1) * n1 * n2];
        p_region += inside.iter().map(|&r| slab[r].norm_sqr()).sum::<f64>();
    }
    p_region *= hx * h12;
    if !(p_region > MIN_REGION_PROBABILITY) {
        return Err(Error::Conditioning { p_region });
    }

    // amplitudes <n|Ψ(·, y₁, y₂)> for every readout cell in the region
    let hermite = hermite_functions(dim, basis, &grid.x.points());
    let mut proj = DMatrix::<C64>::zeros(dim, inside.len());
    for i0 in 0..n0 {
        let slab = &data[i0 * n1 * n2..(i0 + 1) * n1 * n2];
        for n in 0..dim {
            let h = hermite[n * n0 + i0] * hx;
            if h == 0.0 {
                continue;
            }
            for (c, &r) in inside.iter().enumerate() {
                proj[(n, c)] += slab[r] * h;
            }
        }
    }
    let rho = &proj * proj.adjoint() * C64::new(h12 / p_region, 0.0);
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let density = DensityMatrix::from_entries(rho, basis)?;
    let trace = density.trace().re;
    if (trace - 1.0).abs() > POSTERIOR_TRACE_TOL {
        return Err(Error::Truncation(format!(
            "conditioned state keeps trace {trace} in {dim} levels"
        )));
    }
    Ok(Posterior {
        density: density.normalized(),
        p_region,
        cells: inside.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_number_state;
    use crate::joint::config::{JointSampling, MeasurementConfig};
    use crate::joint::process::build_process;
    use crate::phase_space::{coherent_state, CoherentLabel};

    #[test]
    fn whole_plane_and_single_cell() {
        let lam = LengthScale::new(1.0).unwrap();
        let cfg = MeasurementConfig::optimal(1.0, 1.0, JointSampling::for_profile(crate::phase_space::Profile::Default)).unwrap();
        let p = build_process(&cfg).unwrap();
        let j = p.evolve(&make_number_state(1, 4, lam).unwrap()).unwrap();
        let all = condition_on_region(&p, &j, &Rect::everything(), lam, 40).unwrap();
        assert!((all.p_region - 1.0).abs() < 1e-8);
        let (ax, ap) = p.readout_axes();
        let (x0, p0) = (ax.at(52), ap.at(44));
        let cell = condition_on_region(&p, &j, &Rect::centered(x0, p0, 0.025, 0.025).unwrap(), lam, 40).unwrap();
        assert_eq!(cell.cells, 1);
        let target = coherent_state(&CoherentLabel::new(x0, p0, lam).unwrap(), 40);
        assert!(cell.density.fidelity_with(&target).unwrap() > 1.0 - 1e-8);
        let empty = Rect::centered(100.0, 0.0, 0.1, 0.1).unwrap();
        assert!(matches!(
            condition_on_region(&p, &j, &empty, lam, 40),
            Err(Error::Conditioning { .. })
        ));
    }
}
