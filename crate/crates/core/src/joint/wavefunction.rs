use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::fock::C64;

use super::config::GridSpec;

/// Amplitudes on the `(x, y₁, y₂)` grid, stored with `y₂` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointWavefunction {
    grid: GridSpec,
    data: Vec<C64>,
}

impl JointWavefunction {
    /// `ψ(x) φ₁(y₁) φ₂(y₂)`.
    pub fn product(grid: GridSpec, system: &[C64], pointer1: &[C64], pointer2: &[C64]) -> Self {
        let (n0, n1, n2) = (grid.x.len, grid.y1.len, grid.y2.len);
        let mut data = Vec::with_capacity(n0 * n1 * n2);
        for &s in system {
            for &a in pointer1 {
                let sa = s * a;
                data.extend(pointer2.iter().map(|&b| sa * b));
            }
        }
        JointWavefunction { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.grid.x.len, self.grid.y1.len, self.grid.y2.len]
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.x.step * self.grid.y1.step * self.grid.y2.step
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    /// `<self|other>` on the common grid.
    pub fn inner(&self, other: &JointWavefunction) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.cell_volume()
    }

    /// Weight within `margin` cells of the edge of any axis.
    pub fn edge_weight(&self, margin: usize) -> f64 {
        let [n0, n1, n2] = self.shape();
        let near = |i: usize, n: usize| i < margin || i + margin >= n;
        let mut acc = 0.0;
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let row = &self.data[(i0 * n1 + i1) * n2..(i0 * n1 + i1 + 1) * n2];
                if near(i0, n0) || near(i1, n1) {
                    acc += row.iter().map(|c| c.norm_sqr()).sum::<f64>();
                } else {
                    acc += row[..margin.min(n2)].iter().map(|c| c.norm_sqr()).sum::<f64>();
                    acc += row[n2.saturating_sub(margin)..].iter().map(|c| c.norm_sqr()).sum::<f64>();
                }
            }
        }
        acc * self.cell_volume()
    }

    /// Multiplies every amplitude by `f(x, y₁, y₂)`.
    pub fn map_position(&mut self, f: impl Fn(f64, f64, f64) -> C64) {
        let [n0, n1, n2] = self.shape();
        let g = self.grid;
        for i0 in 0..n0 {
            let x = g.x.at(i0);
            for i1 in 0..n1 {
                let y1 = g.y1.at(i1);
                let base = (i0 * n1 + i1) * n2;
                for i2 in 0..n2 {
                    self.data[base + i2] *= f(x, y1, g.y2.at(i2));
                }
            }
        }
    }
}

/// Discrete Fourier transforms along single axes of a joint array.
pub(crate) struct AxisTransforms {
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    shape: [usize; 3],
}

const GATHER: usize = 64;

impl AxisTransforms {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let shape = [grid.x.len, grid.y1.len, grid.y2.len];
        AxisTransforms {
            forward: shape.map(|n| planner.plan_fft_forward(n)),
            inverse: shape.map(|n| planner.plan_fft_inverse(n)),
            shape,
        }
    }

    /// Unnormalised transform along `axis`; the inverse does not divide by
    /// the length, callers fold `1/n` into their phase tables.
    pub fn apply(&self, data: &mut [C64], axis: usize, inverse: bool) {
        let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
        let len = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        if stride == 1 {
            plan.process(data);
            return;
        }
        let block = len * stride;
        let mut buf = vec![C64::new(0.0, 0.0); len * GATHER];
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for outer in data.chunks_mut(block) {
            let mut r0 = 0;
            while r0 < stride {
                let w = GATHER.min(stride - r0);
                for l in 0..len {
                    let src = &outer[l * stride + r0..l * stride + r0 + w];
                    for (k, &v) in src.iter().enumerate() {
                        buf[k * len + l] = v;
                    }
                }
                plan.process_with_scratch(&mut buf[..w * len], &mut scratch);
                for l in 0..len {
                    let dst = &mut outer[l * stride + r0..l * stride + r0 + w];
                    for (k, d) in dst.iter_mut().enumerate() {
                        *d = buf[k * len + l];
                    }
                }
                r0 += w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axis::Axis;

    fn grid(n: [usize; 3]) -> GridSpec {
        GridSpec {
            x: Axis::periodic(4.0, n[0]).unwrap(),
            y1: Axis::periodic(3.0, n[1]).unwrap(),
            y2: Axis::periodic(5.0, n[2]).unwrap(),
        }
    }

    #[test]
    fn axis_transform_matches_direct_sum() {
        let g = grid([6, 10, 70]);
        let n = 6 * 10 * 70;
        let data: Vec<C64> = (0..n).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let t = AxisTransforms::new(&g);
        for axis in 0..3 {
            let mut out = data.clone();
            t.apply(&mut out, axis, false);
            let shape = [6, 10, 70];
            let strides = [700, 70, 1];
            let len = shape[axis];
            // spot check a few entries against the defining sum
            for &flat in &[0usize, 17, 333, 4199] {
                let idx = [flat / 700, (flat / 70) % 10, flat % 70];
                let k = idx[axis];
                let base = flat - k * strides[axis];
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..len {
                    let ang = -2.0 * std::f64::consts::PI * (j * k) as f64 / len as f64;
                    acc += data[base + j * strides[axis]] * C64::from_polar(1.0, ang);
                }
                assert!((acc - out[flat]).norm() < 1e-10, "axis {axis}");
            }
            t.apply(&mut out, axis, true);
            for (a, b) in out.iter().zip(&data) {
                assert!((a / len as f64 - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn product_norm_and_edges() {
        let g = grid([32, 32, 32]);
        let gauss = |a: &Axis, s: f64| -> Vec<C64> {
            let norm = (2.0 * std::f64::consts::PI * s * s).powf(-0.25);
            a.points().iter().map(|&y| C64::new(norm * (-y * y / (4.0 * s * s)).exp(), 0.0)).collect()
        };
        let j = JointWavefunction::product(g, &gauss(&g.x, 0.5), &gauss(&g.y1, 0.4), &gauss(&g.y2, 0.6));
        assert!((j.norm_sqr() - 1.0).abs() < 1e-9);
        assert!(j.edge_weight(1) < 1e-9);
        assert!((j.edge_weight(16) - j.norm_sqr()).abs() < 1e-12);
    }
}
