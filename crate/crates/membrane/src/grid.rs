//! Uniform rectangular grids and scalar fields over them.
//!
//! Grids are the numerical substrate for every residual and transform check:
//! two named axes, uniform spacing, at least five points per axis so the
//! one-sided boundary stencils stay second order. Coordinate singularities
//! (tau = 0 and friends) are handled by domain exclusion, never by special
//! stencils.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names a grid direction. These are parameter-space labels, not spacetime
/// coordinates; `R` doubles as the radial coordinate of the level-set forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Tau,
    Mu,
    Zeta,
    Kappa,
    R,
    T,
    Phi,
    Z,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Tau => "tau",
            Axis::Mu => "mu",
            Axis::Zeta => "zeta",
            Axis::Kappa => "kappa",
            Axis::R => "R",
            Axis::T => "t",
            Axis::Phi => "phi",
            Axis::Z => "z",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(Axis::Tau),
            "mu" => Ok(Axis::Mu),
            "zeta" => Ok(Axis::Zeta),
            "kappa" => Ok(Axis::Kappa),
            "R" | "r" => Ok(Axis::R),
            "t" => Ok(Axis::T),
            "phi" => Ok(Axis::Phi),
            "z" => Ok(Axis::Z),
            other => Err(Error::UnknownAxis(other.to_string())),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Minimum number of points per axis; the boundary stencils need four
/// neighbours and the interior needs to be non-empty.
pub const MIN_POINTS: usize = 5;

/// One uniformly spaced axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: Axis,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn new(name: Axis, min: f64, max: f64, n: usize) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::GridTooSmall { need: MIN_POINTS, got: n });
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::BadArgument(format!(
                "axis {name}: need finite min < max, got [{min}, {max}]"
            )));
        }
        Ok(AxisSpec { name, min, max, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + self.spacing() * i as f64
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    /// Same interval with spacing halved (n -> 2n - 1).
    pub fn refined(&self) -> AxisSpec {
        AxisSpec { n: 2 * self.n - 1, ..*self }
    }
}

/// Rectangular product of two axes. Row-major storage: axis 0 is the slow
/// index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    axes: [AxisSpec; 2],
}

impl Grid2 {
    pub fn new(a0: AxisSpec, a1: AxisSpec) -> Result<Self> {
        if a0.name == a1.name {
            return Err(Error::AxisMismatch(format!(
                "grid axes must differ, got {} twice",
                a0.name
            )));
        }
        Ok(Grid2 { axes: [a0, a1] })
    }

    pub fn from_ranges(
        n0: Axis,
        r0: (f64, f64, usize),
        n1: Axis,
        r1: (f64, f64, usize),
    ) -> Result<Self> {
        Grid2::new(AxisSpec::new(n0, r0.0, r0.1, r0.2)?, AxisSpec::new(n1, r1.0, r1.1, r1.2)?)
    }

    /// Default verification grid: 129 x 129 points on [1, 2] x [1, 2].
    pub fn default_unit(n0: Axis, n1: Axis) -> Grid2 {
        Grid2::from_ranges(n0, (1.0, 2.0, 129), n1, (1.0, 2.0, 129)).expect("valid default grid")
    }

    pub fn axes(&self) -> &[AxisSpec; 2] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &AxisSpec {
        &self.axes[k]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axes[0].n, self.axes[1].n)
    }

    pub fn len(&self) -> usize {
        self.axes[0].n * self.axes[1].n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.axes[1].n + j
    }

    pub fn x0(&self, i: usize) -> f64 {
        self.axes[0].coord(i)
    }

    pub fn x1(&self, j: usize) -> f64 {
        self.axes[1].coord(j)
    }

    /// Same rectangle with both spacings halved.
    pub fn refined(&self) -> Grid2 {
        Grid2 { axes: [self.axes[0].refined(), self.axes[1].refined()] }
    }

    /// Check the grid against axis-aligned singular loci; each locus is a
    /// `(axis name, value)` pair the domain must not contain.
    pub fn check_excludes(&self, loci: &[(Axis, f64)]) -> Result<()> {
        for &(name, value) in loci {
            for ax in &self.axes {
                if ax.name == name && ax.contains(value) {
                    return Err(Error::SingularLocus(format!("{name} = {value}")));
                }
            }
        }
        Ok(())
    }

    pub fn has_axes(&self, n0: Axis, n1: Axis) -> bool {
        self.axes[0].name == n0 && self.axes[1].name == n1
    }
}

/// Scalar samples over a [`Grid2`]. Immutable after construction; every value
/// is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2 {
    grid: Grid2,
    values: Vec<f64>,
}

impl Field2 {
    pub fn from_values(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::AxisMismatch(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (k / grid.axes[1].n, k % grid.axes[1].n);
            return Err(Error::NonFinite(format!(
                "value at index ({}, {}), coordinates ({}, {})",
                i,
                j,
                grid.x0(i),
                grid.x1(j)
            )));
        }
        Ok(Field2 { grid, values })
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (n0, n1) = grid.shape();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n0 {
            for j in 0..n1 {
                values.push(f(grid.x0(i), grid.x1(j)));
            }
        }
        Field2::from_values(grid, values)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest interior |value|, skipping the outermost ring of points.
    pub fn interior_max_abs(&self) -> f64 {
        let (n0, n1) = self.grid.shape();
        let mut m = 0.0f64;
        for i in 1..n0 - 1 {
            for j in 1..n1 - 1 {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Derivative along `axis` of the given order (1 or 2). Central
    /// second-order stencils in the interior, one-sided second-order at the
    /// boundary.
    pub fn diff(&self, axis: Axis, order: u32) -> Result<Field2> {
        let k = if self.grid.axes[0].name == axis {
            0
        } else if self.grid.axes[1].name == axis {
            1
        } else {
            return Err(Error::UnknownAxis(format!(
                "axis {axis} not on grid ({}, {})",
                self.grid.axes[0].name, self.grid.axes[1].name
            )));
        };
        if order != 1 && order != 2 {
            return Err(Error::BadArgument(format!("derivative order {order} not in {{1, 2}}")));
        }
        let h = self.grid.axes[k].spacing();
        let (n0, n1) = self.grid.shape();
        let n = if k == 0 { n0 } else { n1 };
        let mut out = vec![0.0; self.values.len()];
        // `get` along the differentiated line, fixing the other index.
        let line_len = n;
        for other in 0..(if k == 0 { n1 } else { n0 }) {
            let at = |l: usize| -> f64 {
                if k == 0 {
                    self.get(l, other)
                } else {
                    self.get(other, l)
                }
            };
            for l in 0..line_len {
                let d = match (order, l) {
                    (1, 0) => (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h),
                    (1, l) if l == n - 1 => {
                        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
                    }
                    (1, l) => (at(l + 1) - at(l - 1)) / (2.0 * h),
                    (2, 0) => (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h),
                    (2, l) if l == n - 1 => {
                        (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4))
                            / (h * h)
                    }
                    (2, l) => (at(l + 1) - 2.0 * at(l) + at(l - 1)) / (h * h),
                    _ => unreachable!(),
                };
                let idx = if k == 0 {
                    self.grid.idx(l, other)
                } else {
                    self.grid.idx(other, l)
                };
                out[idx] = d;
            }
        }
        Field2::from_values(self.grid.clone(), out)
    }

    /// Mixed second derivative, as the composition of the two first-derivative
    /// operators (a cross stencil in the interior).
    pub fn mixed_diff(&self) -> Result<Field2> {
        self.diff(self.grid.axes[0].name, 1)?.diff(self.grid.axes[1].name, 1)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field2, f: impl Fn(f64, f64) -> f64) -> Result<Field2> {
        if self.grid != other.grid {
            return Err(Error::AxisMismatch("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field2::from_values(self.grid.clone(), values)
    }

    /// Write as CSV: literal header `axis1,axis2,value`, row-major rows with
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "axis1,axis2,value")?;
        let (n0, n1) = self.grid.shape();
        for i in 0..n0 {
            for j in 0..n1 {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", self.grid.x0(i), self.grid.x1(j), self.get(i, j))?;
            }
        }
        Ok(())
    }

    /// Read a CSV produced by [`Field2::write_csv`]. The axis names are not
    /// stored in the file and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, n0: Axis, n1: Axis) -> Result<Field2> {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Csv(format!("line {}: too few columns", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("line {}: {e}", lineno + 1)))
            };
            let (x, y, v) = (next()?, next()?, next()?);
            if !xs.iter().any(|&a| (a - x).abs() <= 1e-12 * x.abs().max(1.0)) {
                xs.push(x);
            }
            if !ys.iter().any(|&a| (a - y).abs() <= 1e-12 * y.abs().max(1.0)) {
                ys.push(y);
            }
            rows.push((x, y, v));
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let uniform = |v: &[f64]| -> bool {
            if v.len() < 2 {
                return false;
            }
            let h = v[1] - v[0];
            v.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-12))
        };
        if !uniform(&xs) || !uniform(&ys) {
            return Err(Error::Csv("grid coordinates are not uniform".into()));
        }
        let grid = Grid2::from_ranges(
            n0,
            (xs[0], *xs.last().unwrap(), xs.len()),
            n1,
            (ys[0], *ys.last().unwrap(), ys.len()),
        )?;
        if rows.len() != grid.len() {
            return Err(Error::Csv(format!(
                "expected {} rows for a {}x{} grid, got {}",
                grid.len(),
                xs.len(),
                ys.len(),
                rows.len()
            )));
        }
        let locate = |v: f64, axis: &AxisSpec| -> usize {
            (((v - axis.min) / axis.spacing()).round() as isize).clamp(0, axis.n as isize - 1)
                as usize
        };
        let mut values = vec![f64::NAN; grid.len()];
        for (x, y, v) in rows {
            let i = locate(x, grid.axis(0));
            let j = locate(y, grid.axis(1));
            values[grid.idx(i, j)] = v;
        }
        Field2::from_values(grid, values)
    }
}
