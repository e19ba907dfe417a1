//! The solution-generating transformation.
//!
//! From a radius field `R(tau, mu)` solving the light-cone equation, the
//! characteristic pair `(zeta, kappa)` is built by quadrature of its
//! first-order system, the pair map `(tau, mu) -> (zeta, kappa)` is inverted
//! by damped Newton iteration, and the pushforward `R*(zeta, kappa) =
//! R(tau, mu)` is a new solution of the same equation in the new variables.
//! The map is involutive; applying it twice returns the original solution on
//! the common domain.
//!
//! The Jacobian of the pair map is the square of the Lagrangian density,
//! `J = (1/4)(R-dot^2 - R^2 R'^2)^2`, so the transformation degenerates
//! exactly where the Lagrangian vanishes.

use std::sync::Arc;

use serde_json::json;

use crate::catalog::{CatalogEntry, Role, Surface};
use crate::error::{Error, Result};
use crate::grid::{Axis, Field2, Grid2};
use crate::interp::Bicubic;
use crate::jet::Jet2;
use crate::perturb::{fit_mode, BaseSign, ModeFit};
use crate::residual::{residual_field, residual_surface, EquationId};

/// Tunables of the pipeline; defaults match the verification suites.
#[derive(Clone, Debug)]
pub struct TransformOptions {
    /// Gate on the light-cone residual of analytic sources.
    pub analytic_gate: f64,
    /// Gate on the finite-difference residual of sampled sources.
    pub fd_gate: f64,
    /// Relative floor on |J|; below it the map is declared degenerate.
    pub jacobian_floor: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Interior fraction of the inscribed image rectangle used for targets.
    pub target_fraction: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            analytic_gate: 1e-8,
            fd_gate: 1e-3,
            jacobian_floor: 1e-5,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            target_fraction: 0.8,
        }
    }
}

/// Integration constants of the pair: the quadratures determine `zeta` and
/// `kappa` only up to constants, fixed by their values at a grid corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub tau0: f64,
    pub mu0: f64,
    pub zeta0: f64,
    pub kappa0: f64,
}

impl Anchor {
    /// Reference normalization at the lower grid corner: the perturbed
    /// hyperboloid pair `zeta = -mu^2/tau^3 + 2 d' tau^{a-2} mu^{b+1}`,
    /// `kappa = mu^3/tau^4 + 2 d' (a-2)/(b+2) tau^{a-3} mu^{b+2}`.
    pub fn reference(grid: &Grid2, alpha: f64, beta: f64, delta_prime: f64) -> Anchor {
        let tau0 = grid.axis(0).min;
        let mu0 = grid.axis(1).min;
        let zeta0 = -mu0 * mu0 / tau0.powi(3)
            + 2.0 * delta_prime * tau0.powf(alpha - 2.0) * mu0.powf(beta + 1.0);
        let kappa0 = mu0.powi(3) / tau0.powi(4)
            + 2.0 * delta_prime * (alpha - 2.0) / (beta + 2.0)
                * tau0.powf(alpha - 3.0)
                * mu0.powf(beta + 2.0);
        Anchor { tau0, mu0, zeta0, kappa0 }
    }

    /// Unperturbed hyperboloid normalization.
    pub fn hyperboloid(grid: &Grid2) -> Anchor {
        Anchor::reference(grid, 0.0, 0.0, 0.0)
    }

    /// Anchor from an entry's closed-form partner fields, when it has them.
    pub fn for_entry(entry: &CatalogEntry, grid: &Grid2) -> Result<Anchor> {
        let tau0 = grid.axis(0).min;
        let mu0 = grid.axis(1).min;
        if let (Some(z), Some(k)) = (entry.zeta_surface(), entry.kappa_surface()) {
            return Ok(Anchor { tau0, mu0, zeta0: z.value(tau0, mu0), kappa0: k.value(tau0, mu0) });
        }
        // perturbed-mode entries carry their exponents as parameters
        if let (Some(&alpha), Some(&beta), Some(&delta)) = (
            entry.params.get("alpha"),
            entry.params.get("beta"),
            entry.params.get("delta"),
        ) {
            let dprime = if alpha == -1.0 && beta == -1.0 {
                -delta / 3.0
            } else {
                delta * (alpha - beta) / (beta + 1.0)
            };
            return Ok(Anchor::reference(grid, alpha, beta, dprime));
        }
        Err(Error::BadArgument(format!(
            "entry `{}` has no closed-form pair; supply an anchor explicitly",
            entry.name
        )))
    }
}

/// What the pair is built from.
pub enum PairSource<'a> {
    Entry(&'a CatalogEntry),
    /// Any analytic radius surface (for instance a transformed one).
    Surface(Arc<dyn Surface>),
    /// A sampled radius field; derivatives and quadrature are second order.
    Field(&'a Field2),
}

enum PairEval {
    Closures { zeta: Arc<dyn Surface>, kappa: Arc<dyn Surface>, dz: f64, dk: f64 },
    Interp { zeta: Bicubic, kappa: Bicubic },
}

impl PairEval {
    fn jets(&self, x: f64, y: f64) -> (Jet2, Jet2) {
        match self {
            PairEval::Closures { zeta, kappa, dz, dk } => {
                let mut zj = zeta.jet(x, y);
                let mut kj = kappa.jet(x, y);
                zj.v += dz;
                kj.v += dk;
                (zj, kj)
            }
            PairEval::Interp { zeta, kappa } => (zeta.jet(x, y), kappa.jet(x, y)),
        }
    }
}

enum RadiusEval {
    Closure(Arc<dyn Surface>),
    Interp(Bicubic),
}

impl RadiusEval {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        match self {
            RadiusEval::Closure(s) => s.jet(x, y),
            RadiusEval::Interp(b) => b.jet(x, y),
        }
    }
}

/// The characteristic pair over a source grid, with its diagnostics.
pub struct CharPair {
    pub grid: Grid2,
    pub zeta: Field2,
    pub kappa: Field2,
    /// First-order system values at the nodes.
    pub zeta_dot: Field2,
    pub zeta_prime: Field2,
    pub kappa_dot: Field2,
    pub kappa_prime: Field2,
    /// `J = zeta-dot kappa' - zeta' kappa-dot` at the nodes.
    pub jacobian: Field2,
    /// Max mismatch between the two axis-path integration orders.
    pub path_defect: f64,
    pub anchor: Anchor,
    eval: PairEval,
    radius: RadiusEval,
}

// second-order jets of the integrands, from the radius jet
fn zeta_dot_of(r: &Jet2) -> f64 {
    0.5 * (r.dx * r.dx + r.v * r.v * r.dy * r.dy)
}

fn zeta_prime_of(r: &Jet2) -> f64 {
    r.dx * r.dy
}

fn kappa_dot_of(r: &Jet2) -> f64 {
    r.v * r.v * r.dx * r.dy
}

// cross derivatives for the Hermite patches
fn zeta_dot_mu(r: &Jet2) -> f64 {
    // d/dmu of (R-dot^2 + R^2 R'^2)/2
    r.dx * r.dxy + r.v * r.dy * (r.dy * r.dy + r.v * r.dyy)
}

fn zeta_prime_tau(r: &Jet2) -> f64 {
    // d/dtau of R-dot R'
    r.dxx * r.dy + r.dx * r.dxy
}

fn kappa_dot_mu(r: &Jet2) -> f64 {
    // d/dmu of R^2 R-dot R'
    2.0 * r.v * r.dy * r.dx * r.dy + r.v * r.v * (r.dxy * r.dy + r.dx * r.dyy)
}

fn kappa_prime_tau(r: &Jet2) -> f64 {
    zeta_dot_mu(r) // kappa' = zeta-dot
}

/// Composite Gauss-Legendre 3-point quadrature of `f` along `[a, b]` split at
/// the `n` uniform nodes of the interval.
fn gl3_line<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Vec<f64> {
    // cumulative integral at each node, starting from 0 at `a`
    let h = (b - a) / (n - 1) as f64;
    let x1 = (3.0f64 / 5.0).sqrt();
    let nodes = [-x1, 0.0, x1];
    let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    for k in 0..n - 1 {
        let lo = a + h * k as f64;
        let mid = lo + h / 2.0;
        let mut seg = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            seg += w * f(mid + h / 2.0 * x);
        }
        acc += seg * h / 2.0;
        out.push(acc);
    }
    out
}

/// Cumulative trapezoid of node samples, starting from 0.
fn trapezoid_line(h: f64, samples: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Shift a cumulative line so that index `k0` reads zero.
fn rebase(mut line: Vec<f64>, k0: usize) -> Vec<f64> {
    let base = line[k0];
    for v in &mut line {
        *v -= base;
    }
    line
}

struct IntegrandData {
    zeta_dot: Field2,
    zeta_prime: Field2,
    kappa_dot: Field2,
    kappa_prime: Field2,
    // cross derivatives for interpolation
    zeta_cross: Field2,
    kappa_cross: Field2,
}

fn integrands_from_jets(grid: &Grid2, jets: &[Jet2]) -> Result<IntegrandData> {
    let collect = |f: &dyn Fn(&Jet2) -> f64| -> Result<Field2> {
        Field2::from_values(grid.clone(), jets.iter().map(f).collect())
    };
    Ok(IntegrandData {
        zeta_dot: collect(&zeta_dot_of)?,
        zeta_prime: collect(&zeta_prime_of)?,
        kappa_dot: collect(&kappa_dot_of)?,
        kappa_prime: collect(&zeta_dot_of)?,
        zeta_cross: collect(&zeta_dot_mu)?,
        kappa_cross: collect(&kappa_prime_tau)?,
    })
}

/// Integrate a first-order system `(dot, prime)` over the grid from the
/// anchor node, along both axis-path orders; returns the averaged field and
/// the worst mismatch.
fn integrate_pair_component(
    grid: &Grid2,
    i0: usize,
    j0: usize,
    base: f64,
    dot_along_col: &dyn Fn(usize) -> Vec<f64>,
    prime_along_row: &dyn Fn(usize) -> Vec<f64>,
) -> Result<(Field2, f64)> {
    let (n0, n1) = grid.shape();
    // order A: up the anchor column, then across each row
    let col = rebase(dot_along_col(j0), i0);
    let mut a = vec![0.0; grid.len()];
    for i in 0..n0 {
        let row = rebase(prime_along_row(i), j0);
        for j in 0..n1 {
            a[grid.idx(i, j)] = base + col[i] + row[j];
        }
    }
    // order B: across the anchor row, then up each column
    let row0 = rebase(prime_along_row(i0), j0);
    let mut b = vec![0.0; grid.len()];
    let mut defect = 0.0f64;
    for j in 0..n1 {
        let col = rebase(dot_along_col(j), i0);
        for i in 0..n0 {
            let idx = grid.idx(i, j);
            b[idx] = base + row0[j] + col[i];
            defect = defect.max((a[idx] - b[idx]).abs());
            a[idx] = 0.5 * (a[idx] + b[idx]);
        }
    }
    Ok((Field2::from_values(grid.clone(), a)?, defect))
}

/// Build the characteristic pair of a radius source over `grid`, anchored at
/// a grid corner (or any grid node).
pub fn build_char_pair(
    source: PairSource<'_>,
    grid: &Grid2,
    anchor: Anchor,
    opts: &TransformOptions,
) -> Result<CharPair> {
    // locate the anchor node
    let locate = |v: f64, k: usize| -> Result<usize> {
        let ax = grid.axis(k);
        let idx = ((v - ax.min) / ax.spacing()).round();
        if (v - (ax.min + ax.spacing() * idx)).abs() > 1e-9 * ax.spacing() {
            return Err(Error::BadArgument(format!(
                "anchor coordinate {v} is not a node of axis {}",
                ax.name
            )));
        }
        Ok(idx.clamp(0.0, (ax.n - 1) as f64) as usize)
    };
    let i0 = locate(anchor.tau0, 0)?;
    let j0 = locate(anchor.mu0, 1)?;

    // jets at the nodes, residual gate, and the analytic radius (when the
    // source has one) for high-order quadrature
    let (jets, radius_closure, closures, field_ref): (
        Vec<Jet2>,
        Option<Arc<dyn Surface>>,
        Option<(Arc<dyn Surface>, Arc<dyn Surface>)>,
        Option<&Field2>,
    );
    match source {
        PairSource::Entry(e) => {
            if e.role != Role::ROfTauMu {
                return Err(Error::RoleMismatch(format!(
                    "the transform needs a radius-form source, `{}` has role {}",
                    e.name, e.role
                )));
            }
            e.check_grid(grid)?;
            let s = e.surface()?;
            let rep = residual_surface(EquationId::Eq3Lightcone, s.as_ref(), None, grid)?;
            if rep.max_residual > opts.analytic_gate {
                return Err(Error::ResidualGate {
                    equation: "eq3".into(),
                    max_residual: rep.max_residual,
                    tolerance: opts.analytic_gate,
                });
            }
            jets = crate::residual::analytic_jets(s.as_ref(), grid)?;
            closures = match (e.zeta_surface(), e.kappa_surface()) {
                (Some(z), Some(k)) => Some((z, k)),
                _ => None,
            };
            radius_closure = Some(s);
            field_ref = None;
        }
        PairSource::Surface(s) => {
            let rep = residual_surface(EquationId::Eq3Lightcone, s.as_ref(), None, grid)?;
            if rep.max_residual > opts.analytic_gate {
                return Err(Error::ResidualGate {
                    equation: "eq3".into(),
                    max_residual: rep.max_residual,
                    tolerance: opts.analytic_gate,
                });
            }
            jets = crate::residual::analytic_jets(s.as_ref(), grid)?;
            closures = None;
            radius_closure = Some(s);
            field_ref = None;
        }
        PairSource::Field(f) => {
            if f.grid() != grid {
                return Err(Error::AxisMismatch("field grid differs from the requested grid".into()));
            }
            let rep = residual_field(EquationId::Eq3Lightcone, f, None)?;
            if rep.max_residual > opts.fd_gate {
                return Err(Error::ResidualGate {
                    equation: "eq3".into(),
                    max_residual: rep.max_residual,
                    tolerance: opts.fd_gate,
                });
            }
            jets = crate::residual::fd_jets(f)?;
            closures = None;
            radius_closure = None;
            field_ref = Some(f);
        }
    }
    let radius = match (&radius_closure, field_ref) {
        (Some(s), _) => RadiusEval::Closure(s.clone()),
        (None, Some(f)) => RadiusEval::Interp(Bicubic::from_field(f)?),
        (None, None) => unreachable!("every source provides a radius"),
    };

    let data = integrands_from_jets(grid, &jets)?;
    let (n0, n1) = grid.shape();
    let ax0 = grid.axis(0);
    let ax1 = grid.axis(1);

    // line integrators for each component: Gauss-Legendre panels on analytic
    // integrands, trapezoid on node samples
    let line_dot = |field: &Field2, integrand: &dyn Fn(&Jet2) -> f64, j: usize| -> Vec<f64> {
        match &radius_closure {
            Some(s) => {
                let mu = ax1.coord(j);
                gl3_line(ax0.min, ax0.max, n0, |tau| integrand(&s.jet(tau, mu)))
            }
            None => {
                let col: Vec<f64> = (0..n0).map(|i| field.get(i, j)).collect();
                trapezoid_line(ax0.spacing(), &col)
            }
        }
    };
    let line_prime = |field: &Field2, integrand: &dyn Fn(&Jet2) -> f64, i: usize| -> Vec<f64> {
        match &radius_closure {
            Some(s) => {
                let tau = ax0.coord(i);
                gl3_line(ax1.min, ax1.max, n1, |mu| integrand(&s.jet(tau, mu)))
            }
            None => {
                let row: Vec<f64> = (0..n1).map(|j| field.get(i, j)).collect();
                trapezoid_line(ax1.spacing(), &row)
            }
        }
    };

    let (zeta, dz) = integrate_pair_component(
        grid,
        i0,
        j0,
        anchor.zeta0,
        &|j| line_dot(&data.zeta_dot, &zeta_dot_of, j),
        &|i| line_prime(&data.zeta_prime, &zeta_prime_of, i),
    )?;
    let (kappa, dk) = integrate_pair_component(
        grid,
        i0,
        j0,
        anchor.kappa0,
        &|j| line_dot(&data.kappa_dot, &kappa_dot_of, j),
        &|i| line_prime(&data.kappa_prime, &zeta_dot_of, i),
    )?;
    let path_defect = dz.max(dk);

    // Jacobian from the first-order system values
    let jacobian = data
        .zeta_dot
        .zip_with(&data.kappa_prime, |zd, kp| zd * kp)?
        .zip_with(&data.zeta_prime.zip_with(&data.kappa_dot, |zp, kd| zp * kd)?, |a, b| a - b)?;
    let jmax = jacobian.max_abs();
    let jmin = jacobian.values().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if jmin < opts.jacobian_floor * jmax {
        return Err(Error::JacobianDegenerate(format!(
            "min |J| = {jmin:.3e} against max |J| = {jmax:.3e}; the Lagrangian vanishes on the grid"
        )));
    }

    let eval = match closures {
        Some((z, k)) => {
            let dz_off = anchor.zeta0 - z.value(anchor.tau0, anchor.mu0);
            let dk_off = anchor.kappa0 - k.value(anchor.tau0, anchor.mu0);
            PairEval::Closures { zeta: z, kappa: k, dz: dz_off, dk: dk_off }
        }
        None => PairEval::Interp {
            zeta: Bicubic::from_node_data(&zeta, &data.zeta_dot, &data.zeta_prime, &data.zeta_cross)?,
            kappa: Bicubic::from_node_data(
                &kappa,
                &data.kappa_dot,
                &data.kappa_prime,
                &data.kappa_cross,
            )?,
        },
    };

    Ok(CharPair {
        grid: grid.clone(),
        zeta,
        kappa,
        zeta_dot: data.zeta_dot,
        zeta_prime: data.zeta_prime,
        kappa_dot: data.kappa_dot,
        kappa_prime: data.kappa_prime,
        jacobian,
        path_defect,
        anchor,
        eval,
        radius,
    })
}

impl CharPair {
    /// Max relative defect of the Jacobian identity
    /// `J = (1/4)(R-dot^2 - R^2 R'^2)^2` over the grid.
    pub fn jacobian_identity_defect(&self) -> f64 {
        let (n0, n1) = self.grid.shape();
        let jmax = self.jacobian.max_abs();
        let mut worst = 0.0f64;
        for i in 0..n0 {
            for j in 0..n1 {
                let r = self.radius.jet(self.grid.x0(i), self.grid.x1(j));
                let lag = 0.5 * (r.dx * r.dx - r.v * r.v * r.dy * r.dy);
                worst = worst.max((self.jacobian.get(i, j) - lag * lag).abs());
            }
        }
        worst / jmax
    }

    /// Same identity with `J` re-derived by finite differences of the
    /// integrated pair fields; second-order in the grid spacing.
    pub fn jacobian_fd_defect(&self) -> Result<f64> {
        let a0 = self.grid.axis(0).name;
        let a1 = self.grid.axis(1).name;
        let zd = self.zeta.diff(a0, 1)?;
        let zp = self.zeta.diff(a1, 1)?;
        let kd = self.kappa.diff(a0, 1)?;
        let kp = self.kappa.diff(a1, 1)?;
        let jmax = self.jacobian.max_abs();
        let (n0, n1) = self.grid.shape();
        let mut worst = 0.0f64;
        for i in 1..n0 - 1 {
            for j in 1..n1 - 1 {
                let jfd = zd.get(i, j) * kp.get(i, j) - zp.get(i, j) * kd.get(i, j);
                worst = worst.max((jfd - self.jacobian.get(i, j)).abs());
            }
        }
        Ok(worst / jmax)
    }

    /// Pair jets at an arbitrary point of the source rectangle.
    pub fn pair_jets(&self, tau: f64, mu: f64) -> (Jet2, Jet2) {
        self.eval.jets(tau, mu)
    }

    pub fn radius_jet(&self, tau: f64, mu: f64) -> Jet2 {
        self.radius.jet(tau, mu)
    }

    /// Largest axis-aligned rectangle (scaled by `frac`) centered at the
    /// image of the grid center that fits inside the image of the source
    /// rectangle, returned as a target grid with the given axis names.
    pub fn fitted_target_grid(
        &self,
        axes: (Axis, Axis),
        shape: (usize, usize),
        frac: f64,
    ) -> Result<Grid2> {
        let (n0, n1) = self.grid.shape();
        // ordered boundary polygon of the image
        let mut poly: Vec<(f64, f64)> = Vec::with_capacity(2 * (n0 + n1));
        let node = |i: usize, j: usize| (self.zeta.get(i, j), self.kappa.get(i, j));
        for i in 0..n0 {
            poly.push(node(i, 0));
        }
        for j in 1..n1 {
            poly.push(node(n0 - 1, j));
        }
        for i in (0..n0 - 1).rev() {
            poly.push(node(i, n1 - 1));
        }
        for j in (1..n1 - 1).rev() {
            poly.push(node(0, j));
        }
        let inside = |p: (f64, f64)| -> bool {
            // even-odd ray casting
            let mut crossings = 0;
            for k in 0..poly.len() {
                let (x1, y1) = poly[k];
                let (x2, y2) = poly[(k + 1) % poly.len()];
                if (y1 > p.1) != (y2 > p.1) {
                    let t = (p.1 - y1) / (y2 - y1);
                    if p.0 < x1 + t * (x2 - x1) {
                        crossings += 1;
                    }
                }
            }
            crossings % 2 == 1
        };
        let center = node(n0 / 2, n1 / 2);
        let (zmin, zmax) = self
            .zeta
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let (kmin, kmax) = self
            .kappa
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let half = ((zmax - zmin) / 2.0, (kmax - kmin) / 2.0);
        let rect_ok = |s: f64| -> bool {
            let (hw, hh) = (s * half.0, s * half.1);
            for &(dx, dy) in &[
                (-1.0, -1.0),
                (-1.0, 0.0),
                (-1.0, 1.0),
                (0.0, -1.0),
                (0.0, 1.0),
                (1.0, -1.0),
                (1.0, 0.0),
                (1.0, 1.0),
            ] {
                if !inside((center.0 + dx * hw, center.1 + dy * hh)) {
                    return false;
                }
            }
            true
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if !rect_ok(1e-3) {
            return Err(Error::OutsideImage("image region is too thin to inscribe a rectangle".into()));
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if rect_ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = lo * frac;
        Grid2::from_ranges(
            axes.0,
            (center.0 - s * half.0, center.0 + s * half.0, shape.0),
            axes.1,
            (center.1 - s * half.1, center.1 + s * half.1, shape.1),
        )
    }
}

/// Inverse of the pair map on a target grid.
pub struct InverseMap {
    pub target: Grid2,
    pub tau: Field2,
    pub mu: Field2,
    pub converged: Vec<bool>,
    pub failures: usize,
    /// Max forward-composition error among converged points.
    pub forward_error: f64,
}

/// Damped per-point Newton inversion of the pair map, seeded by the
/// closed-form hyperboloid inverse `tau = -kappa^2/zeta^3`,
/// `mu = kappa^3/zeta^4`.
pub fn invert(pair: &CharPair, target: &Grid2, opts: &TransformOptions) -> Result<InverseMap> {
    let ax0 = pair.grid.axis(0);
    let ax1 = pair.grid.axis(1);
    let clamp = |tau: f64, mu: f64| -> (f64, f64) {
        (tau.clamp(ax0.min, ax0.max), mu.clamp(ax1.min, ax1.max))
    };
    let scale = pair.zeta.max_abs().max(pair.kappa.max_abs());
    let (n0, n1) = target.shape();
    let mut tau = vec![0.0; target.len()];
    let mut mu = vec![0.0; target.len()];
    let mut converged = vec![false; target.len()];
    let mut failures = 0usize;
    let mut forward_error = 0.0f64;
    for i in 0..n0 {
        for j in 0..n1 {
            let (zv, kv) = (target.x0(i), target.x1(j));
            let (mut t, mut m) = clamp(-kv * kv / zv.powi(3), kv.powi(3) / zv.powi(4));
            let mut ok = false;
            let res_norm = |t: f64, m: f64| -> (f64, f64, f64) {
                let (zj, kj) = pair.pair_jets(t, m);
                let (fz, fk) = (zj.v - zv, kj.v - kv);
                (fz, fk, fz.hypot(fk))
            };
            let (mut fz, mut fk, mut fnorm) = res_norm(t, m);
            for _ in 0..opts.newton_max_iter {
                if fnorm <= opts.newton_tol * scale {
                    ok = true;
                    break;
                }
                let (zj, kj) = pair.pair_jets(t, m);
                let det = zj.dx * kj.dy - zj.dy * kj.dx;
                if det.abs() < 1e-14 * scale {
                    break;
                }
                let dt = -(kj.dy * fz - zj.dy * fk) / det;
                let dm = -(-kj.dx * fz + zj.dx * fk) / det;
                // damped update
                let mut lambda = 1.0;
                let mut accepted = false;
                for _ in 0..12 {
                    let (tn, mn) = clamp(t + lambda * dt, m + lambda * dm);
                    let (fz2, fk2, fn2) = res_norm(tn, mn);
                    if fn2 < fnorm {
                        t = tn;
                        m = mn;
                        fz = fz2;
                        fk = fk2;
                        fnorm = fn2;
                        accepted = true;
                        break;
                    }
                    lambda *= 0.5;
                }
                if !accepted {
                    break;
                }
                if (lambda * dt).hypot(lambda * dm) <= opts.newton_tol {
                    ok = fnorm <= 1e-8 * scale;
                    break;
                }
            }
            if fnorm <= opts.newton_tol * scale {
                ok = true;
            }
            let idx = target.idx(i, j);
            tau[idx] = t;
            mu[idx] = m;
            converged[idx] = ok;
            if ok {
                forward_error = forward_error.max(fnorm);
            } else {
                failures += 1;
            }
        }
    }
    Ok(InverseMap {
        target: target.clone(),
        tau: Field2::from_values(target.clone(), tau)?,
        mu: Field2::from_values(target.clone(), mu)?,
        converged,
        failures,
        forward_error,
    })
}

/// The transformed radius on the target grid: `R* = R` composed with the
/// inverse pair map. Fails if any target point did not converge.
pub fn pushforward(pair: &CharPair, inv: &InverseMap) -> Result<Field2> {
    if inv.failures > 0 {
        return Err(Error::NewtonFailed(format!(
            "{} of {} target points unconverged",
            inv.failures,
            inv.target.len()
        )));
    }
    let (n0, n1) = inv.target.shape();
    let mut values = Vec::with_capacity(inv.target.len());
    for i in 0..n0 {
        for j in 0..n1 {
            let idx = inv.target.idx(i, j);
            values.push(
                pair.radius_jet(inv.tau.values()[idx], inv.mu.values()[idx]).v,
            );
        }
    }
    Field2::from_values(inv.target.clone(), values)
}

// ---------------------------------------------------------------------------
// transformed surface with implicit-function jets
// ---------------------------------------------------------------------------

/// `R*(zeta, kappa)` as an analytic surface: each evaluation solves the pair
/// map by Newton iteration and differentiates through the inverse, so the
/// transformed solution can feed every analytic-partials check, including a
/// second application of the transformation.
pub struct TransformedSurface {
    pair: Arc<CharPair>,
    opts: TransformOptions,
}

impl TransformedSurface {
    pub fn new(pair: Arc<CharPair>, opts: TransformOptions) -> TransformedSurface {
        TransformedSurface { pair, opts }
    }

    fn solve(&self, zv: f64, kv: f64) -> (f64, f64) {
        let ax0 = self.pair.grid.axis(0);
        let ax1 = self.pair.grid.axis(1);
        let mut t = (-kv * kv / zv.powi(3)).clamp(ax0.min, ax0.max);
        let mut m = (kv.powi(3) / zv.powi(4)).clamp(ax1.min, ax1.max);
        for _ in 0..self.opts.newton_max_iter {
            let (zj, kj) = self.pair.pair_jets(t, m);
            let (fz, fk) = (zj.v - zv, kj.v - kv);
            let det = zj.dx * kj.dy - zj.dy * kj.dx;
            let dt = -(kj.dy * fz - zj.dy * fk) / det;
            let dm = -(-kj.dx * fz + zj.dx * fk) / det;
            t = (t + dt).clamp(ax0.min, ax0.max);
            m = (m + dm).clamp(ax1.min, ax1.max);
            if dt.hypot(dm) < self.opts.newton_tol {
                break;
            }
        }
        (t, m)
    }
}

impl Surface for TransformedSurface {
    fn jet(&self, zv: f64, kv: f64) -> Jet2 {
        let (t, m) = self.solve(zv, kv);
        let (zj, kj) = self.pair.pair_jets(t, m);
        let rj = self.pair.radius_jet(t, m);
        // DG = (DF)^{-1}
        let det = zj.dx * kj.dy - zj.dy * kj.dx;
        let dg = [[kj.dy / det, -zj.dy / det], [-kj.dx / det, zj.dx / det]];
        // Hessians of the forward components
        let hz = [[zj.dxx, zj.dxy], [zj.dxy, zj.dyy]];
        let hk = [[kj.dxx, kj.dxy], [kj.dxy, kj.dyy]];
        // second derivatives of the inverse:
        // d2G^k_ab = -sum_c dg[k][c] (DG^T H_c DG)_ab
        let sandwich = |h: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
            let mut out = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let mut acc = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            acc += dg[i][a] * h[i][j] * dg[j][b];
                        }
                    }
                    out[a][b] = acc;
                }
            }
            out
        };
        let sz = sandwich(&hz);
        let sk = sandwich(&hk);
        let mut d2g = [[[0.0; 2]; 2]; 2];
        for (k, d2gk) in d2g.iter_mut().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    d2gk[a][b] = -(dg[k][0] * sz[a][b] + dg[k][1] * sk[a][b]);
                }
            }
        }
        // chain rule for R* = R o G
        let grad_r = [rj.dx, rj.dy];
        let hess_r = [[rj.dxx, rj.dxy], [rj.dxy, rj.dyy]];
        let mut grad = [0.0; 2];
        for (a, g) in grad.iter_mut().enumerate() {
            *g = grad_r[0] * dg[0][a] + grad_r[1] * dg[1][a];
        }
        let mut hess = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        acc += hess_r[i][j] * dg[i][a] * dg[j][b];
                    }
                }
                acc += grad_r[0] * d2g[0][a][b] + grad_r[1] * d2g[1][a][b];
                hess[a][b] = acc;
            }
        }
        Jet2 {
            v: rj.v,
            dx: grad[0],
            dy: grad[1],
            dxx: hess[0][0],
            dxy: hess[0][1],
            dyy: hess[1][1],
        }
    }
}

// ---------------------------------------------------------------------------
// reports and the full pipeline
// ---------------------------------------------------------------------------

/// JSON-serializable summary of one transform run.
#[derive(Debug)]
pub struct TransformReport {
    pub jacobian_defect: f64,
    pub path_defect: f64,
    pub newton_failures: usize,
    pub residual_of_rstar: f64,
    pub fit: Option<ModeFit>,
    pub rstar: Field2,
}

impl TransformReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "jacobian_defect": self.jacobian_defect,
            "path_defect": self.path_defect,
            "newton_failures": self.newton_failures,
            "residual_of_Rstar": self.residual_of_rstar,
            "fit": self.fit.as_ref().map(|f| f.to_json()),
        })
    }
}

/// Full pipeline for a radius-form catalog entry: pair, fitted target grid,
/// inversion, pushforward, light-cone residual of the result, and an
/// optional mode fit of the transformed field.
pub fn transform_entry(
    entry: &CatalogEntry,
    grid: &Grid2,
    opts: &TransformOptions,
    fit: bool,
) -> Result<TransformReport> {
    let anchor = Anchor::for_entry(entry, grid)?;
    let pair = build_char_pair(PairSource::Entry(entry), grid, anchor, opts)?;
    let target =
        pair.fitted_target_grid((Axis::Zeta, Axis::Kappa), grid.shape(), opts.target_fraction)?;
    let inv = invert(&pair, &target, opts)?;
    let rstar = pushforward(&pair, &inv)?;
    let res = residual_field(EquationId::Eq3Lightcone, &rstar, None)?;
    let fit = if fit {
        let sign = match entry.params.get("sign") {
            Some(&s) if s < 0.0 => BaseSign::Minus,
            _ => BaseSign::Plus,
        };
        Some(fit_mode(&rstar, sign.flip())?)
    } else {
        None
    };
    Ok(TransformReport {
        jacobian_defect: pair.jacobian_identity_defect(),
        path_defect: pair.path_defect,
        newton_failures: inv.failures,
        residual_of_rstar: res.max_residual,
        fit,
        rstar,
    })
}

/// Outcome of transforming twice and comparing with the original field on
/// the common domain.
#[derive(Debug)]
pub struct InvolutionReport {
    pub sup_difference: f64,
    /// Fit of the doubly transformed field, when requested.
    pub fit: Option<ModeFit>,
}

/// Apply the transformation twice, anchoring the second pair with the
/// reference normalization for the starred mode exponents, and compare the
/// doubly transformed radius against the source on the inner target grid.
pub fn involution_check(
    entry: &CatalogEntry,
    grid: &Grid2,
    star_mode: Option<(f64, f64, f64)>,
    opts: &TransformOptions,
    fit: bool,
) -> Result<InvolutionReport> {
    let anchor1 = Anchor::for_entry(entry, grid)?;
    let pair1 = Arc::new(build_char_pair(PairSource::Entry(entry), grid, anchor1, opts)?);
    let target1 =
        pair1.fitted_target_grid((Axis::Zeta, Axis::Kappa), grid.shape(), opts.target_fraction)?;
    let rstar = Arc::new(TransformedSurface::new(pair1.clone(), opts.clone()));

    let anchor2 = match star_mode {
        Some((alpha_s, beta_s, delta_s)) => {
            let dprime = delta_s * (alpha_s - beta_s) / (beta_s + 1.0);
            Anchor::reference(&target1, alpha_s, beta_s, dprime)
        }
        None => Anchor::hyperboloid(&target1),
    };
    let pair2 =
        build_char_pair(PairSource::Surface(rstar.clone()), &target1, anchor2, opts)?;
    let target2 =
        pair2.fitted_target_grid((Axis::Tau, Axis::Mu), grid.shape(), opts.target_fraction)?;
    let inv2 = invert(&pair2, &target2, opts)?;
    let rss = pushforward(&pair2, &inv2)?;
    // compare with the original radius at the same (tau, mu) points
    let source = entry.surface()?;
    let (n0, n1) = target2.shape();
    let mut sup = 0.0f64;
    for i in 0..n0 {
        for j in 0..n1 {
            let diff = rss.get(i, j) - source.value(target2.x0(i), target2.x1(j));
            sup = sup.max(diff.abs());
        }
    }
    let fit = if fit {
        let sign = match entry.params.get("sign") {
            Some(&s) if s < 0.0 => BaseSign::Minus,
            _ => BaseSign::Plus,
        };
        Some(fit_mode(&rss, sign)?)
    } else {
        None
    };
    Ok(InvolutionReport { sup_difference: sup, fit })
}
