//! Bicubic Hermite interpolation on uniform grids.
//!
//! Patches are built from node values and first derivatives (including the
//! cross derivative), so sources that know their derivatives exactly get
//! fourth-order accurate interpolants. Queries are clamped to the grid
//! rectangle; the Newton solver that drives inverse mapping keeps its
//! iterates inside anyway.

use crate::error::{Error, Result};
use crate::grid::{Field2, Grid2};
use crate::jet::Jet2;

/// Hermite basis matrix: rows express the cubic coefficients of
/// `(f(0), f(1), f'(0), f'(1))`.
const M: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [-3.0, 3.0, -2.0, -1.0],
    [2.0, -2.0, 1.0, 1.0],
];

fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for (i, row) in a.iter().enumerate() {
        for j in 0..4 {
            let mut acc = 0.0;
            for (k, &aik) in row.iter().enumerate() {
                acc += aik * b[k][j];
            }
            c[i][j] = acc;
        }
    }
    c
}

fn transpose(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut t = [[0.0; 4]; 4];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

/// Bicubic Hermite interpolant with precomputed per-cell coefficients.
pub struct Bicubic {
    grid: Grid2,
    /// Row-major per-cell 4x4 coefficient matrices of the local polynomial
    /// `sum c[m][n] s^m t^n`.
    coeffs: Vec<[[f64; 4]; 4]>,
}

impl Bicubic {
    /// Build from node data: values plus both first derivatives and the
    /// cross derivative.
    pub fn from_node_data(
        values: &Field2,
        fx: &Field2,
        fy: &Field2,
        fxy: &Field2,
    ) -> Result<Bicubic> {
        let grid = values.grid().clone();
        for f in [fx, fy, fxy] {
            if f.grid() != &grid {
                return Err(Error::AxisMismatch("derivative data on a different grid".into()));
            }
        }
        let (n0, n1) = grid.shape();
        let (hx, hy) = (grid.axis(0).spacing(), grid.axis(1).spacing());
        let mt = transpose(&M);
        let mut coeffs = Vec::with_capacity((n0 - 1) * (n1 - 1));
        for i in 0..n0 - 1 {
            for j in 0..n1 - 1 {
                // Hermite data matrix in local coordinates.
                let f = |di: usize, dj: usize| values.get(i + di, j + dj);
                let gx = |di: usize, dj: usize| fx.get(i + di, j + dj) * hx;
                let gy = |di: usize, dj: usize| fy.get(i + di, j + dj) * hy;
                let gxy = |di: usize, dj: usize| fxy.get(i + di, j + dj) * hx * hy;
                let data = [
                    [f(0, 0), f(0, 1), gy(0, 0), gy(0, 1)],
                    [f(1, 0), f(1, 1), gy(1, 0), gy(1, 1)],
                    [gx(0, 0), gx(0, 1), gxy(0, 0), gxy(0, 1)],
                    [gx(1, 0), gx(1, 1), gxy(1, 0), gxy(1, 1)],
                ];
                coeffs.push(mat_mul(&mat_mul(&M, &data), &mt));
            }
        }
        Ok(Bicubic { grid, coeffs })
    }

    /// Build from a field alone, with finite-difference derivative data.
    pub fn from_field(values: &Field2) -> Result<Bicubic> {
        let g = values.grid();
        let fx = values.diff(g.axis(0).name, 1)?;
        let fy = values.diff(g.axis(1).name, 1)?;
        let fxy = values.mixed_diff()?;
        Bicubic::from_node_data(values, &fx, &fy, &fxy)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    fn locate(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let ax = self.grid.axis(0);
        let ay = self.grid.axis(1);
        let (hx, hy) = (ax.spacing(), ay.spacing());
        let fx = ((x - ax.min) / hx).clamp(0.0, (ax.n - 1) as f64 - 1e-12);
        let fy = ((y - ay.min) / hy).clamp(0.0, (ay.n - 1) as f64 - 1e-12);
        let i = (fx.floor() as usize).min(ax.n - 2);
        let j = (fy.floor() as usize).min(ay.n - 2);
        (i, j, fx - i as f64, fy - j as f64)
    }

    /// Value and derivatives of the patch at `(x, y)`; the second derivatives
    /// are those of the local cubic (continuous only inside each cell).
    pub fn jet(&self, x: f64, y: f64) -> Jet2 {
        let (i, j, s, t) = self.locate(x, y);
        let c = &self.coeffs[i * (self.grid.axis(1).n - 1) + j];
        let (hx, hy) = (self.grid.axis(0).spacing(), self.grid.axis(1).spacing());
        let sp = [1.0, s, s * s, s * s * s];
        let tp = [1.0, t, t * t, t * t * t];
        let dsp = [0.0, 1.0, 2.0 * s, 3.0 * s * s];
        let dtp = [0.0, 1.0, 2.0 * t, 3.0 * t * t];
        let ddsp = [0.0, 0.0, 2.0, 6.0 * s];
        let ddtp = [0.0, 0.0, 2.0, 6.0 * t];
        let contract = |a: &[f64; 4], b: &[f64; 4]| -> f64 {
            let mut acc = 0.0;
            for (m, &am) in a.iter().enumerate() {
                for (n, &bn) in b.iter().enumerate() {
                    acc += am * c[m][n] * bn;
                }
            }
            acc
        };
        Jet2 {
            v: contract(&sp, &tp),
            dx: contract(&dsp, &tp) / hx,
            dy: contract(&sp, &dtp) / hy,
            dxx: contract(&ddsp, &tp) / (hx * hx),
            dxy: contract(&dsp, &dtp) / (hx * hy),
            dyy: contract(&sp, &ddtp) / (hy * hy),
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).v
    }
}
