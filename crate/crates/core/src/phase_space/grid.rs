use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{Error, Result};
use crate::fock::LengthScale;

pub const SCHEMA: &str = "phasemeter/1";

const NEGATIVE_CLIP: f64 = 1e-12;
const MASS_CEILING: f64 = 1.0 + 1e-6;

/// Sampling profile for phase-space grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Default,
    Fine,
}

impl Profile {
    /// `(points per axis, half-extent in units of λ and 1/λ)`.
    pub fn phase_space_sampling(self) -> (usize, f64) {
        match self {
            Profile::Default => (161, 10.0),
            Profile::Fine => (321, 14.0),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Profile::Default),
            "fine" => Ok(Profile::Fine),
            other => Err(Error::invalid("profile", format!("unknown profile `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::Fine => "fine",
        }
    }
}

/// Axes `(μX, μP)` of the standard phase-space grid at resolution `λ`.
pub fn profile_axes(profile: Profile, lambda: LengthScale) -> (Axis, Axis) {
    let (n, half) = profile.phase_space_sampling();
    let lam = lambda.get();
    (
        Axis::symmetric(half * lam, n).expect("valid profile"),
        Axis::symmetric(half / lam, n).expect("valid profile"),
    )
}

/// Axis-aligned rectangle in the `(μX, μP)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64) -> Result<Self> {
        if !(x_min < x_max && p_min < p_max) {
            return Err(Error::invalid(
                "region",
                format!("[{x_min}, {x_max}] x [{p_min}, {p_max}] is empty"),
            ));
        }
        Ok(Rect {
            x_min,
            x_max,
            p_min,
            p_max,
        })
    }

    pub fn centered(x: f64, p: f64, half_x: f64, half_p: f64) -> Result<Self> {
        Rect::new(x - half_x, x + half_x, p - half_p, p + half_p)
    }

    pub fn everything() -> Self {
        Rect {
            x_min: f64::NEG_INFINITY,
            x_max: f64::INFINITY,
            p_min: f64::NEG_INFINITY,
            p_max: f64::INFINITY,
        }
    }

    #[inline]
    pub fn contains(&self, x: f64, p: f64) -> bool {
        x >= self.x_min && x <= self.x_max && p >= self.p_min && p <= self.p_max
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.p_min + self.p_max))
    }
}

/// Nonnegative samples of a planar density on a uniform `(μX, μP)` grid.
///
/// Values are stored row-major with `μP` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    x_axis: Axis,
    p_axis: Axis,
    lambda: LengthScale,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    schema: String,
    x_axis: Axis,
    p_axis: Axis,
    lambda: f64,
    values: Vec<f64>,
}

impl PhaseSpaceGrid {
    /// Validates nonnegativity (clipping noise above `−1e−12`) and total mass.
    pub fn new(x_axis: Axis, p_axis: Axis, lambda: LengthScale, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != x_axis.len * p_axis.len {
            return Err(Error::AxisMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                x_axis.len,
                p_axis.len
            )));
        }
        for v in values.iter_mut() {
            if !v.is_finite() || *v < -NEGATIVE_CLIP {
                return Err(Error::invalid("values", format!("density sample {v} is not a nonnegative number")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let grid = PhaseSpaceGrid {
            x_axis,
            p_axis,
            lambda,
            values,
        };
        let mass = grid.mass();
        if mass > MASS_CEILING {
            return Err(Error::invalid("values", format!("total mass {mass} exceeds one")));
        }
        Ok(grid)
    }

    /// Samples `f(μX, μP)` on the given axes.
    pub fn from_fn(
        x_axis: Axis,
        p_axis: Axis,
        lambda: LengthScale,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(x_axis.len * p_axis.len);
        for i in 0..x_axis.len {
            let x = x_axis.at(i);
            for j in 0..p_axis.len {
                values.push(f(x, p_axis.at(j)));
            }
        }
        PhaseSpaceGrid::new(x_axis, p_axis, lambda, values)
    }

    pub fn x_axis(&self) -> &Axis {
        &self.x_axis
    }

    pub fn p_axis(&self) -> &Axis {
        &self.p_axis
    }

    pub fn lambda(&self) -> LengthScale {
        self.lambda
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.p_axis.len + ip]
    }

    pub fn cell_area(&self) -> f64 {
        self.x_axis.step * self.p_axis.step
    }

    /// Iterates `(μX, μP, value)` in storage order.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let np = self.p_axis.len;
        self.values.iter().enumerate().map(move |(k, &v)| {
            (self.x_axis.at(k / np), self.p_axis.at(k % np), v)
        })
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn ensure_same_axes(&self, other: &PhaseSpaceGrid) -> Result<()> {
        if self.x_axis.matches(&other.x_axis, 1e-9) && self.p_axis.matches(&other.p_axis, 1e-9) {
            Ok(())
        } else {
            Err(Error::AxisMismatch(format!(
                "grids sampled differently: {:?}/{:?} vs {:?}/{:?}",
                self.x_axis, self.p_axis, other.x_axis, other.p_axis
            )))
        }
    }

    /// `∫ |f − g|` over the common grid.
    pub fn l1_distance(&self, other: &PhaseSpaceGrid) -> Result<f64> {
        self.ensure_same_axes(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.cell_area())
    }

    /// Largest pointwise difference.
    pub fn max_abs_difference(&self, other: &PhaseSpaceGrid) -> Result<f64> {
        self.ensure_same_axes(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Mass carried by the outermost `width` rows and columns.
    pub fn boundary_mass(&self, width: usize) -> f64 {
        let (nx, np) = (self.x_axis.len, self.p_axis.len);
        let mut acc = 0.0;
        for i in 0..nx {
            for j in 0..np {
                if i < width || j < width || i + width >= nx || j + width >= np {
                    acc += self.values[i * np + j];
                }
            }
        }
        acc * self.cell_area()
    }

    /// Copy with samples outside `region` set to zero, plus the mass inside.
    pub fn restricted(&self, region: &Rect) -> (PhaseSpaceGrid, f64) {
        let mut values = self.values.clone();
        let np = self.p_axis.len;
        for (k, v) in values.iter_mut().enumerate() {
            if !region.contains(self.x_axis.at(k / np), self.p_axis.at(k % np)) {
                *v = 0.0;
            }
        }
        let inside = values.iter().sum::<f64>() * self.cell_area();
        (
            PhaseSpaceGrid {
                x_axis: self.x_axis,
                p_axis: self.p_axis,
                lambda: self.lambda,
                values,
            },
            inside,
        )
    }

    /// Same grid with every sample multiplied by `factor ≥ 0`.
    pub fn rescaled(&self, factor: f64) -> Result<PhaseSpaceGrid> {
        PhaseSpaceGrid::new(
            self.x_axis,
            self.p_axis,
            self.lambda,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Mean `(μX, μP)` under the grid weights.
    pub fn centroid(&self) -> (f64, f64) {
        let (mut sx, mut sp, mut m) = (0.0, 0.0, 0.0);
        for (x, p, v) in self.samples() {
            sx += x * v;
            sp += p * v;
            m += v;
        }
        (sx / m, sp / m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GridJson {
            schema: SCHEMA.to_string(),
            x_axis: self.x_axis,
            p_axis: self.p_axis,
            lambda: self.lambda.get(),
            values: self.values.clone(),
        })
        .expect("finite grid serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GridJson = serde_json::from_str(text)?;
        if g.schema != SCHEMA {
            return Err(Error::Parse(format!("unsupported schema `{}`", g.schema)));
        }
        PhaseSpaceGrid::new(
            Axis::new(g.x_axis.start, g.x_axis.step, g.x_axis.len)?,
            Axis::new(g.p_axis.start, g.p_axis.step, g.p_axis.len)?,
            LengthScale::new(g.lambda)?,
            g.values,
        )
    }

    /// CSV with a metadata line, a column header, then `μX,μP,value` rows.
    pub fn to_csv(&self) -> String {
        self.to_csv_with_notes(&[])
    }

    /// CSV with each note written as a `#` line after the metadata line.
    pub fn to_csv_with_notes(&self, notes: &[String]) -> String {
        let mut out = String::with_capacity(self.values.len() * 48);
        let _ = writeln!(
            out,
            "# {SCHEMA} nx={} x0={} hx={} np={} p0={} hp={} lambda={}",
            self.x_axis.len,
            self.x_axis.start,
            self.x_axis.step,
            self.p_axis.len,
            self.p_axis.start,
            self.p_axis.step,
            self.lambda.get()
        );
        for note in notes {
            let _ = writeln!(out, "# {}", note.replace('\n', " "));
        }
        out.push_str("mu_x,mu_p,value\n");
        for (x, p, v) in self.samples() {
            let _ = writeln!(out, "{x},{p},{v}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("missing metadata line".into()))?;
        let mut fields = std::collections::BTreeMap::new();
        let mut tokens = meta.split_whitespace();
        match tokens.next() {
            Some(SCHEMA) => {}
            other => return Err(Error::Parse(format!("unsupported schema {other:?}"))),
        }
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata token `{tok}`")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let num = |k: &str| -> Result<f64> {
            fields
                .get(k)
                .ok_or_else(|| Error::Parse(format!("metadata lacks `{k}`")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{k}`: {e}")))
        };
        let count = |k: &str| -> Result<usize> {
            fields
                .get(k)
                .ok_or_else(|| Error::Parse(format!("metadata lacks `{k}`")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("`{k}`: {e}")))
        };
        let x_axis = Axis::new(num("x0")?, num("hx")?, count("nx")?)?;
        let p_axis = Axis::new(num("p0")?, num("hp")?, count("np")?)?;
        let lambda = LengthScale::new(num("lambda")?)?;
        let mut lines = lines.skip_while(|l| l.starts_with('#'));
        match lines.next() {
            Some(h) if h.trim() == "mu_x,mu_p,value" => {}
            other => return Err(Error::Parse(format!("unexpected column header {other:?}"))),
        }
        let mut values = Vec::with_capacity(x_axis.len * p_axis.len);
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("row {row}: expected 3 columns")));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {row}: {e}")))
            };
            let (x, p, v) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
            let (ix, ip) = (row / p_axis.len, row % p_axis.len);
            if ix >= x_axis.len
                || (x - x_axis.at(ix)).abs() > 1e-9 * x_axis.step.max(1.0)
                || (p - p_axis.at(ip)).abs() > 1e-9 * p_axis.step.max(1.0)
            {
                return Err(Error::Parse(format!("row {row}: coordinates ({x}, {p}) off the declared axes")));
            }
            values.push(v);
        }
        PhaseSpaceGrid::new(x_axis, p_axis, lambda, values)
    }
}
