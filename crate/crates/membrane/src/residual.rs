//! Uniform residual engine.
//!
//! Every governing equation is a kernel mapping second-order jets (plus the
//! point coordinates where the equation references them) to a defect and a
//! local scale. Jets come either from analytic evaluators or from finite
//! differences of sampled fields, so exact solutions can be checked at
//! rounding level and discretized ones through the convergence gate.
//!
//! Norms are reported on the interior only, with the defect regularized by
//! the local term scale: `|defect| / (1 + sum of |terms|)`.

use serde::Serialize;
use serde_json::json;

use crate::catalog::{CatalogEntry, Profile, Role, Surface};
use crate::error::{Error, Result};
use crate::grid::{Field2, Grid2};
use crate::jet::{Jet1, Jet2};

/// Default analytic-partials gate. The finite-difference gate is the
/// convergence-order criterion instead; see [`fd_ladder`].
pub const ANALYTIC_GATE: f64 = 1e-8;

/// Indicator magnitudes below this flag a degenerate configuration.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Scaled residuals below this are at the rounding floor; refinement ratios
/// carry no information there.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// Identifies one residual target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EquationId {
    /// `R-ddot = R (R R')'` for the radius `R(tau, mu)` (or any pair related
    /// by the first-order system, e.g. `(zeta, kappa)`).
    Eq3Lightcone,
    /// Interchange-symmetric equation for `R = s(tau, zeta)`.
    Eq31S,
    /// Level equation for `tau(zeta, R)`.
    Eq32Tau,
    /// Level equation for `zeta(tau, R)`; same form as the tau equation.
    Eq33Zeta,
    /// Equation satisfied by `g = s^2 / 2`.
    Eq53G,
    /// Wave equation `zeta-ddot = (R^2 zeta')'` in any admissible pair.
    Eq57Wave,
    /// Radial equation in the orthonormal gauge.
    Eq62R,
    /// Wave equation with the radius treated as external; same kernel as the
    /// pair-portable wave equation.
    Eq64WaveExternal,
    /// First-order constraint system for similarity profiles `(s, s~)(u)`.
    Eq67System,
    /// Graph equation for `r(t, z)`.
    Eq68Graph,
    /// Similarity reduction of the graph equation for `g(x)`.
    Eq69GGraph,
    /// Same reduction for `h = g^2`.
    Eq70HGraph,
    /// Orthonormal-gauge constraints for `(r, z)(t, phi)`.
    Eq59Constraints,
}

impl EquationId {
    pub fn as_str(&self) -> &'static str {
        use EquationId::*;
        match self {
            Eq3Lightcone => "eq3",
            Eq31S => "eq31",
            Eq32Tau => "eq32",
            Eq33Zeta => "eq33",
            Eq53G => "eq53",
            Eq57Wave => "eq57",
            Eq62R => "eq62",
            Eq64WaveExternal => "eq64",
            Eq67System => "eq67",
            Eq68Graph => "eq68",
            Eq69GGraph => "eq69",
            Eq70HGraph => "eq70",
            Eq59Constraints => "eq59",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        use EquationId::*;
        Ok(match s {
            "eq3" => Eq3Lightcone,
            "eq31" => Eq31S,
            "eq32" => Eq32Tau,
            "eq33" => Eq33Zeta,
            "eq53" => Eq53G,
            "eq57" => Eq57Wave,
            "eq62" => Eq62R,
            "eq64" => Eq64WaveExternal,
            "eq67" => Eq67System,
            "eq68" => Eq68Graph,
            "eq69" => Eq69GGraph,
            "eq70" => Eq70HGraph,
            "eq59" => Eq59Constraints,
            other => return Err(Error::BadArgument(format!("unknown equation id `{other}`"))),
        })
    }
}

/// Interior norms of a residual evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub equation: EquationId,
    pub entry: Option<String>,
    pub grid: Option<Grid2>,
    /// Interior max of the scale-regularized defect.
    pub max_residual: f64,
    /// Interior continuum-normalized L2 norm of the regularized defect.
    pub l2_residual: f64,
    /// Interior max of the raw defect.
    pub max_residual_raw: f64,
    pub degenerate: Option<bool>,
    pub h_refinement_ratio: Option<f64>,
}

impl ResidualReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_residual <= tolerance
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "eq": self.equation.as_str(),
            "entry": self.entry,
            "grid": self.grid,
            "max_residual": self.max_residual,
            "l2_residual": self.l2_residual,
            "max_residual_raw": self.max_residual_raw,
            "degenerate": self.degenerate,
            "h_refinement_ratio": self.h_refinement_ratio,
        })
    }
}

// ---------------------------------------------------------------------------
// kernels: (defect, local scale) from jets
// ---------------------------------------------------------------------------

fn scale2(terms: &[f64]) -> f64 {
    terms.iter().map(|t| t.abs()).sum()
}

/// `R-ddot - R (R R')' = R-ddot - R (R'^2 + R R'')`.
fn kernel_eq3(j: &Jet2) -> (f64, f64) {
    let lhs = j.dxx;
    let rhs = j.v * (j.dy * j.dy + j.v * j.dyy);
    (lhs - rhs, scale2(&[lhs, rhs]))
}

/// `s (s-dd s'^2 + s'' s-d^2 - 2 s-d s' s-d') + 2 (s s-d' - s-d s') + 1`.
fn kernel_eq31(j: &Jet2) -> (f64, f64) {
    let t1 = j.v * (j.dxx * j.dy * j.dy + j.dyy * j.dx * j.dx - 2.0 * j.dx * j.dy * j.dxy);
    let t2 = 2.0 * (j.v * j.dxy - j.dx * j.dy);
    (t1 + t2 + 1.0, scale2(&[t1, t2, 1.0]))
}

/// Level kernel shared by the `tau(zeta, R)` and `zeta(tau, R)` forms:
/// `f-dd - 2 f-d f'' + 2 f' f-d' - (f'/R)(f'^2 + 2 f-d)`.
fn kernel_level(j: &Jet2, radius: f64) -> (f64, f64) {
    let t1 = j.dxx;
    let t2 = -2.0 * j.dx * j.dyy;
    let t3 = 2.0 * j.dy * j.dxy;
    let t4 = -(j.dy / radius) * (j.dy * j.dy + 2.0 * j.dx);
    (t1 + t2 + t3 + t4, scale2(&[t1, t2, t3, t4]))
}

/// `(g-dd g'^2 + g'' g-d^2 - 2 g-d' g-d g') + 4 (g g-d' - g-d g') + 2g`.
fn kernel_eq53(j: &Jet2) -> (f64, f64) {
    let t1 = j.dxx * j.dy * j.dy + j.dyy * j.dx * j.dx - 2.0 * j.dxy * j.dx * j.dy;
    let t2 = 4.0 * (j.v * j.dxy - j.dx * j.dy);
    let t3 = 2.0 * j.v;
    (t1 + t2 + t3, scale2(&[t1, t2, t3]))
}

/// `Z-dd - (R^2 Z')' = Z-dd - 2 R R' Z' - R^2 Z''` with the radius external.
fn kernel_wave(j: &Jet2, rad: &Jet2) -> (f64, f64) {
    let t1 = j.dxx;
    let t2 = -2.0 * rad.v * rad.dy * j.dy;
    let t3 = -rad.v * rad.v * j.dyy;
    (t1 + t2 + t3, scale2(&[t1, t2, t3]))
}

/// Radial equation in orthonormal gauge:
/// `r-dd - r^2 r'' - r (r'^2 - z'^2)`.
fn kernel_eq62(r: &Jet2, z: &Jet2) -> (f64, f64) {
    let t1 = r.dxx;
    let t2 = -r.v * r.v * r.dyy;
    let t3 = -r.v * (r.dy * r.dy - z.dy * z.dy);
    (t1 + t2 + t3, scale2(&[t1, t2, t3]))
}

/// Orthonormal constraints; the defect is the larger of the two.
fn kernel_eq59(r: &Jet2, z: &Jet2) -> (f64, f64) {
    let c1 = r.dx * r.dy + z.dx * z.dy;
    let c2 = r.dx * r.dx + z.dx * z.dx + r.v * r.v * (r.dy * r.dy + z.dy * z.dy) - 1.0;
    let s1 = scale2(&[r.dx * r.dy, z.dx * z.dy]);
    let s2 = scale2(&[
        r.dx * r.dx,
        z.dx * z.dx,
        r.v * r.v * (r.dy * r.dy + z.dy * z.dy),
        1.0,
    ]);
    if c1.abs() / (1.0 + s1) >= c2.abs() / (1.0 + s2) {
        (c1, s1)
    } else {
        (c2, s2)
    }
}

/// Graph equation for `r(t, z)`:
/// `r-dd (1 + r'^2) - r'' (1 - r-d^2) - 2 r-d r' r-d' + (1 - r-d^2 + r'^2)/r`.
fn kernel_eq68(j: &Jet2) -> (f64, f64) {
    let t1 = j.dxx * (1.0 + j.dy * j.dy);
    let t2 = -j.dyy * (1.0 - j.dx * j.dx);
    let t3 = -2.0 * j.dx * j.dy * j.dxy;
    let t4 = (1.0 - j.dx * j.dx + j.dy * j.dy) / j.v;
    (t1 + t2 + t3 + t4, scale2(&[t1, t2, t3, t4]))
}

/// `g g'' (1 + g^2 - x^2) - g'^2 + (g - x g')^2 + 1`.
fn kernel_eq69(j: &Jet1, x: f64) -> (f64, f64) {
    let t1 = j.v * j.dd * (1.0 + j.v * j.v - x * x);
    let t2 = -j.d * j.d;
    let t3 = (j.v - x * j.d).powi(2);
    (t1 + t2 + t3 + 1.0, scale2(&[t1, t2, t3, 1.0]))
}

/// `(2 h h'' - h'^2)(1 + h - x^2) - h'^2 + 4h + (2h - x h')^2`.
fn kernel_eq70(j: &Jet1, x: f64) -> (f64, f64) {
    let t1 = (2.0 * j.v * j.dd - j.d * j.d) * (1.0 + j.v - x * x);
    let t2 = -j.d * j.d;
    let t3 = 4.0 * j.v;
    let t4 = (2.0 * j.v - x * j.d).powi(2);
    (t1 + t2 + t3 + t4, scale2(&[t1, t2, t3, t4]))
}

/// Profile form of the orthonormal constraints; defect is the larger of the
/// two equations.
fn kernel_eq67(s: &Jet1, st: &Jet1, u: f64) -> (f64, f64) {
    let a = s.v - 4.0 * u * s.d;
    let b = st.v - 4.0 * u * st.d;
    let c1 = s.d * a + st.d * b;
    let c2 = a * a + b * b + 4.0 * u * s.v * s.v * (s.d * s.d + st.d * st.d) - 1.0;
    let s1 = scale2(&[s.d * a, st.d * b]);
    let s2 = scale2(&[a * a, b * b, 4.0 * u * s.v * s.v * (s.d * s.d + st.d * st.d), 1.0]);
    if c1.abs() / (1.0 + s1) >= c2.abs() / (1.0 + s2) {
        (c1, s1)
    } else {
        (c2, s2)
    }
}

// ---------------------------------------------------------------------------
// jet assembly
// ---------------------------------------------------------------------------

/// Jets at every node of `grid`, from an analytic surface.
pub fn analytic_jets(f: &dyn Surface, grid: &Grid2) -> Result<Vec<Jet2>> {
    let (n0, n1) = grid.shape();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..n0 {
        for j in 0..n1 {
            let jet = f.jet(grid.x0(i), grid.x1(j));
            if !jet.is_finite() {
                return Err(Error::NonFinite(format!(
                    "analytic jet at ({}, {})",
                    grid.x0(i),
                    grid.x1(j)
                )));
            }
            out.push(jet);
        }
    }
    Ok(out)
}

/// Jets at every node from finite differences of a sampled field.
pub fn fd_jets(field: &Field2) -> Result<Vec<Jet2>> {
    let grid = field.grid();
    let (a0, a1) = (grid.axis(0).name, grid.axis(1).name);
    let dx = field.diff(a0, 1)?;
    let dy = field.diff(a1, 1)?;
    let dxx = field.diff(a0, 2)?;
    let dyy = field.diff(a1, 2)?;
    let dxy = field.mixed_diff()?;
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        out.push(Jet2 {
            v: field.values()[k],
            dx: dx.values()[k],
            dy: dy.values()[k],
            dxx: dxx.values()[k],
            dxy: dxy.values()[k],
            dyy: dyy.values()[k],
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// assembly and norms
// ---------------------------------------------------------------------------

struct ResidualField {
    grid: Grid2,
    defect: Vec<f64>,
    scale: Vec<f64>,
}

impl ResidualField {
    fn norms(&self) -> (f64, f64, f64) {
        let (n0, n1) = self.grid.shape();
        let (h0, h1) = (self.grid.axis(0).spacing(), self.grid.axis(1).spacing());
        let mut max_scaled = 0.0f64;
        let mut max_raw = 0.0f64;
        let mut sum = 0.0f64;
        for i in 1..n0 - 1 {
            for j in 1..n1 - 1 {
                let k = self.grid.idx(i, j);
                let scaled = self.defect[k].abs() / (1.0 + self.scale[k]);
                max_scaled = max_scaled.max(scaled);
                max_raw = max_raw.max(self.defect[k].abs());
                sum += scaled * scaled;
            }
        }
        (max_scaled, (sum * h0 * h1).sqrt(), max_raw)
    }
}

fn surface_equation_kernel(
    eq: EquationId,
    grid: &Grid2,
    main: &[Jet2],
    companion: Option<&[Jet2]>,
) -> Result<ResidualField> {
    use EquationId::*;
    let needs_companion = matches!(eq, Eq57Wave | Eq64WaveExternal | Eq62R | Eq59Constraints);
    if needs_companion && companion.is_none() {
        return Err(Error::RoleMismatch(format!(
            "{} needs a companion field (external radius or z-component)",
            eq.as_str()
        )));
    }
    let (n0, n1) = grid.shape();
    let mut defect = vec![0.0; grid.len()];
    let mut scale = vec![0.0; grid.len()];
    for i in 0..n0 {
        for j in 0..n1 {
            let k = grid.idx(i, j);
            let jm = &main[k];
            let (d, s) = match eq {
                Eq3Lightcone => kernel_eq3(jm),
                Eq31S => kernel_eq31(jm),
                Eq32Tau | Eq33Zeta => kernel_level(jm, grid.x1(j)),
                Eq53G => kernel_eq53(jm),
                Eq57Wave | Eq64WaveExternal => kernel_wave(jm, &companion.unwrap()[k]),
                Eq62R => kernel_eq62(jm, &companion.unwrap()[k]),
                Eq59Constraints => kernel_eq59(jm, &companion.unwrap()[k]),
                Eq68Graph => kernel_eq68(jm),
                Eq67System | Eq69GGraph | Eq70HGraph => {
                    return Err(Error::RoleMismatch(format!(
                        "{} is a profile equation, not a surface equation",
                        eq.as_str()
                    )))
                }
            };
            if !d.is_finite() {
                return Err(Error::NonFinite(format!(
                    "residual at ({}, {})",
                    grid.x0(i),
                    grid.x1(j)
                )));
            }
            defect[k] = d;
            scale[k] = s;
        }
    }
    Ok(ResidualField { grid: grid.clone(), defect, scale })
}

/// Residual of a surface equation with analytic partials. For the pair
/// equations (`eq59`, `eq62`), `main` is the r-component and `companion` the
/// z-component; for the external-radius wave equations, `companion` is the
/// radius.
pub fn residual_surface(
    eq: EquationId,
    main: &dyn Surface,
    companion: Option<&dyn Surface>,
    grid: &Grid2,
) -> Result<ResidualReport> {
    let mj = analytic_jets(main, grid)?;
    let cj = companion.map(|c| analytic_jets(c, grid)).transpose()?;
    let rf = surface_equation_kernel(eq, grid, &mj, cj.as_deref())?;
    let (max_scaled, l2, max_raw) = rf.norms();
    Ok(ResidualReport {
        equation: eq,
        entry: None,
        grid: Some(grid.clone()),
        max_residual: max_scaled,
        l2_residual: l2,
        max_residual_raw: max_raw,
        degenerate: None,
        h_refinement_ratio: None,
    })
}

/// Residual of a surface equation with finite-difference partials of sampled
/// fields.
pub fn residual_field(
    eq: EquationId,
    main: &Field2,
    companion: Option<&Field2>,
) -> Result<ResidualReport> {
    let grid = main.grid();
    if let Some(c) = companion {
        if c.grid() != grid {
            return Err(Error::AxisMismatch("companion field on a different grid".into()));
        }
    }
    let mj = fd_jets(main)?;
    let cj = companion.map(fd_jets).transpose()?;
    let rf = surface_equation_kernel(eq, grid, &mj, cj.as_deref())?;
    let (max_scaled, l2, max_raw) = rf.norms();
    Ok(ResidualReport {
        equation: eq,
        entry: None,
        grid: Some(grid.clone()),
        max_residual: max_scaled,
        l2_residual: l2,
        max_residual_raw: max_raw,
        degenerate: None,
        h_refinement_ratio: None,
    })
}

fn profile_norms(defect: &[f64], scale: &[f64], h: f64) -> (f64, f64, f64) {
    let n = defect.len();
    let mut max_scaled = 0.0f64;
    let mut max_raw = 0.0f64;
    let mut sum = 0.0f64;
    for k in 1..n - 1 {
        let scaled = defect[k].abs() / (1.0 + scale[k]);
        max_scaled = max_scaled.max(scaled);
        max_raw = max_raw.max(defect[k].abs());
        sum += scaled * scaled;
    }
    (max_scaled, (sum * h).sqrt(), max_raw)
}

/// Residual of a 1-d profile equation (`eq69` or `eq70`) with analytic jets
/// on `n` uniform samples of `interval`.
pub fn residual_profile(
    eq: EquationId,
    p: &dyn Profile,
    interval: (f64, f64),
    n: usize,
) -> Result<ResidualReport> {
    if n < 3 {
        return Err(Error::GridTooSmall { need: 3, got: n });
    }
    let h = (interval.1 - interval.0) / (n - 1) as f64;
    let mut defect = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    for k in 0..n {
        let x = interval.0 + h * k as f64;
        let j = p.jet(x);
        let (d, s) = match eq {
            EquationId::Eq69GGraph => kernel_eq69(&j, x),
            EquationId::Eq70HGraph => kernel_eq70(&j, x),
            other => {
                return Err(Error::RoleMismatch(format!(
                    "{} is not a single-profile equation",
                    other.as_str()
                )))
            }
        };
        defect.push(d);
        scale.push(s);
    }
    let (max_scaled, l2, max_raw) = profile_norms(&defect, &scale, h);
    Ok(ResidualReport {
        equation: eq,
        entry: None,
        grid: None,
        max_residual: max_scaled,
        l2_residual: l2,
        max_residual_raw: max_raw,
        degenerate: None,
        h_refinement_ratio: None,
    })
}

/// Residual of the profile constraint system (`eq67`) for a pair of
/// similarity profiles over the variable `u`.
pub fn residual_profile_pair(
    s: &dyn Profile,
    st: &dyn Profile,
    interval: (f64, f64),
    n: usize,
) -> Result<ResidualReport> {
    if n < 3 {
        return Err(Error::GridTooSmall { need: 3, got: n });
    }
    let h = (interval.1 - interval.0) / (n - 1) as f64;
    let mut defect = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    for k in 0..n {
        let u = interval.0 + h * k as f64;
        let (d, sc) = kernel_eq67(&s.jet(u), &st.jet(u), u);
        defect.push(d);
        scale.push(sc);
    }
    let (max_scaled, l2, max_raw) = profile_norms(&defect, &scale, h);
    Ok(ResidualReport {
        equation: EquationId::Eq67System,
        entry: None,
        grid: None,
        max_residual: max_scaled,
        l2_residual: l2,
        max_residual_raw: max_raw,
        degenerate: None,
        h_refinement_ratio: None,
    })
}

/// Which partials to use for an entry-based residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partials {
    Analytic,
    FiniteDifference,
}

/// Role-checked residual of a catalog entry. 2-d equations use `grid`;
/// profile equations sample the entry's own interval with `grid.axis(0).n`
/// points when a grid is given, or 257 points otherwise.
pub fn residual_entry(
    eq: EquationId,
    entry: &CatalogEntry,
    grid: Option<&Grid2>,
    partials: Partials,
) -> Result<ResidualReport> {
    use EquationId::*;
    let expect = |ok: bool, want: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::RoleMismatch(format!(
                "{} needs a {want} source, entry `{}` has role {}",
                eq.as_str(),
                entry.name,
                entry.role
            )))
        }
    };
    let mut report = match eq {
        Eq3Lightcone => {
            expect(entry.role == Role::ROfTauMu, "R(tau, mu)")?;
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            let f = entry.surface()?;
            match partials {
                Partials::Analytic => residual_surface(eq, f.as_ref(), None, &g)?,
                Partials::FiniteDifference => residual_field(eq, &entry.sample(&g)?, None)?,
            }
        }
        Eq32Tau | Eq33Zeta => {
            let want = if eq == Eq32Tau { Role::TauOfZetaR } else { Role::ZetaOfTauR };
            expect(entry.role == want, if eq == Eq32Tau { "tau(zeta, R)" } else { "zeta(tau, R)" })?;
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            let f = entry.surface()?;
            match partials {
                Partials::Analytic => residual_surface(eq, f.as_ref(), None, &g)?,
                Partials::FiniteDifference => residual_field(eq, &entry.sample(&g)?, None)?,
            }
        }
        Eq57Wave | Eq64WaveExternal => {
            expect(entry.role == Role::RzOfTPhi, "(r, z)(t, phi)")?;
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            let (r, z) = entry.pair()?;
            match partials {
                Partials::Analytic => residual_surface(eq, z.as_ref(), Some(r.as_ref()), &g)?,
                Partials::FiniteDifference => {
                    let zf = Field2::from_fn(g.clone(), |x, y| z.value(x, y))?;
                    let rf = Field2::from_fn(g, |x, y| r.value(x, y))?;
                    residual_field(eq, &zf, Some(&rf))?
                }
            }
        }
        Eq62R | Eq59Constraints => {
            expect(entry.role == Role::RzOfTPhi, "(r, z)(t, phi)")?;
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            let (r, z) = entry.pair()?;
            match partials {
                Partials::Analytic => residual_surface(eq, r.as_ref(), Some(z.as_ref()), &g)?,
                Partials::FiniteDifference => {
                    let rf = Field2::from_fn(g.clone(), |x, y| r.value(x, y))?;
                    let zf = Field2::from_fn(g, |x, y| z.value(x, y))?;
                    residual_field(eq, &rf, Some(&zf))?
                }
            }
        }
        Eq69GGraph | Eq70HGraph => {
            expect(entry.role == Role::Profile1d, "1-d profile")?;
            let p = entry.profile()?;
            let interval = entry.profile_interval().unwrap();
            let n = grid.map(|g| g.axis(0).n).unwrap_or(257);
            residual_profile(eq, p.as_ref(), interval, n)?
        }
        Eq67System => {
            expect(entry.role == Role::RzOfTPhi, "(r, z)(t, phi)")?;
            // Slice the pair at the mid-t row of the grid and parametrize by
            // u = phi^2 / t0^4; meaningful for self-similar pairs.
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            let (r, z) = entry.pair()?;
            let t0 = 0.5 * (g.axis(0).min + g.axis(0).max);
            let to_profile = move |surf: std::sync::Arc<dyn Surface>| {
                move |u: f64| -> Jet1 {
                    // phi(u) = t0^2 sqrt(u); s(u) = f(t0, phi)/t0 with
                    // ds/du = (f_phi / t0) * dphi/du and the second
                    // derivative from the chain rule.
                    let phi = t0 * t0 * u.sqrt();
                    let dphi = t0.powi(4) / (2.0 * phi);
                    let ddphi = -t0.powi(8) / (4.0 * phi.powi(3));
                    let j = surf.jet(t0, phi);
                    Jet1 {
                        v: j.v / t0,
                        d: j.dy / t0 * dphi,
                        dd: (j.dyy * dphi * dphi + j.dy * ddphi) / t0,
                    }
                }
            };
            let sp = to_profile(r);
            let stp = to_profile(z);
            let phi_axis = g.axis(1);
            let u0 = phi_axis.min * phi_axis.min / t0.powi(4);
            let u1 = phi_axis.max * phi_axis.max / t0.powi(4);
            residual_profile_pair(&sp, &stp, (u0, u1), phi_axis.n)?
        }
        Eq31S | Eq53G | Eq68Graph => {
            return Err(Error::RoleMismatch(format!(
                "{} has no catalog role; evaluate it on a field or surface directly",
                eq.as_str()
            )))
        }
    };
    report.entry = Some(entry.name.clone());
    if let Ok(deg) = degeneracy_entry(entry, grid) {
        report.degenerate = Some(deg.flagged);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// degeneracy indicators
// ---------------------------------------------------------------------------

/// Degeneracy indicator per source role: where it vanishes, the minimal
/// 3-manifold interpretation (and the transform) breaks down.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegeneracyRole {
    /// `zeta'^2 + 2 zeta-dot` for level functions `zeta(tau, R)`.
    ZetaLevel,
    /// `tau'^2 + 2 tau-dot` for level functions `tau(zeta, R)`.
    TauLevel,
    /// `R-dot^2 - R^2 R'^2` (twice the Lagrangian density) for `R(tau, mu)`.
    Radius,
    /// `1 - r-dot^2 + r'^2` for graphs `r(t, z)`.
    Graph,
    /// Graph indicator written through `h = g^2` for similarity profiles.
    HProfile,
}

pub struct Degeneracy {
    pub indicator: Vec<f64>,
    pub flagged: bool,
    pub min_abs: f64,
}

/// Evaluate a degeneracy indicator for a surface source.
pub fn degeneracy_surface(
    role: DegeneracyRole,
    f: &dyn Surface,
    grid: &Grid2,
) -> Result<Degeneracy> {
    let jets = analytic_jets(f, grid)?;
    let indicator: Vec<f64> = jets
        .iter()
        .map(|j| match role {
            DegeneracyRole::ZetaLevel | DegeneracyRole::TauLevel => j.dy * j.dy + 2.0 * j.dx,
            DegeneracyRole::Radius => j.dx * j.dx - j.v * j.v * j.dy * j.dy,
            DegeneracyRole::Graph => 1.0 - j.dx * j.dx + j.dy * j.dy,
            DegeneracyRole::HProfile => unreachable!("profile role on surface source"),
        })
        .collect();
    let min_abs = indicator.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    Ok(Degeneracy { flagged: min_abs < DEGENERACY_THRESHOLD, indicator, min_abs })
}

/// Degeneracy indicator for an `h(x)` similarity profile:
/// `(4h - h'^2 + (2h - x h')^2) / (4h)`.
pub fn degeneracy_h_profile(p: &dyn Profile, interval: (f64, f64), n: usize) -> Result<Degeneracy> {
    let h = (interval.1 - interval.0) / (n - 1) as f64;
    let mut indicator = Vec::with_capacity(n);
    for k in 0..n {
        let x = interval.0 + h * k as f64;
        let j = p.jet(x);
        let num = 4.0 * j.v - j.d * j.d + (2.0 * j.v - x * j.d).powi(2);
        indicator.push(num / (4.0 * j.v));
    }
    let min_abs = indicator.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    Ok(Degeneracy { flagged: min_abs < DEGENERACY_THRESHOLD, indicator, min_abs })
}

/// Role-dispatched degeneracy check for a catalog entry.
pub fn degeneracy_entry(entry: &CatalogEntry, grid: Option<&Grid2>) -> Result<Degeneracy> {
    match entry.role {
        Role::ZetaOfTauR => {
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            degeneracy_surface(DegeneracyRole::ZetaLevel, entry.surface()?.as_ref(), &g)
        }
        Role::TauOfZetaR => {
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            degeneracy_surface(DegeneracyRole::TauLevel, entry.surface()?.as_ref(), &g)
        }
        Role::ROfTauMu => {
            let g = match grid {
                Some(g) => g.clone(),
                None => entry.default_grid()?,
            };
            entry.check_grid(&g)?;
            degeneracy_surface(DegeneracyRole::Radius, entry.surface()?.as_ref(), &g)
        }
        Role::Profile1d => {
            let p = entry.profile()?;
            let interval = entry.profile_interval().unwrap();
            degeneracy_h_profile(p.as_ref(), interval, 257)
        }
        Role::RzOfTPhi => Err(Error::RoleMismatch(
            "no degeneracy indicator is defined for orthonormal pairs".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// symmetry checks
// ---------------------------------------------------------------------------

/// Solution-preserving parameter maps.
#[derive(Clone, Copy, Debug)]
pub enum SymmetryMap {
    /// `f~(x, y) = alpha f(alpha gamma^2 x, gamma y)` for the level
    /// equations.
    LevelScaling { alpha: f64, gamma: f64 },
    /// `s~(x, y) = e s(a x, b y)` with `e^2 a b = 1` for the
    /// interchange-symmetric equation.
    SScaling { e: f64, a: f64, b: f64 },
    Identity,
}

struct ScaledSurface<'a> {
    inner: &'a dyn Surface,
    value_scale: f64,
    x_scale: f64,
    y_scale: f64,
}

impl Surface for ScaledSurface<'_> {
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        let j = self.inner.jet(self.x_scale * x, self.y_scale * y);
        let (s, p, q) = (self.value_scale, self.x_scale, self.y_scale);
        Jet2 {
            v: s * j.v,
            dx: s * p * j.dx,
            dy: s * q * j.dy,
            dxx: s * p * p * j.dxx,
            dxy: s * p * q * j.dxy,
            dyy: s * q * q * j.dyy,
        }
    }
}

pub struct SymmetryReport {
    pub base: ResidualReport,
    pub transformed: ResidualReport,
}

/// Check that a symmetry of the equation maps a solution to a solution:
/// both the base and the transformed surface must pass the tolerance.
pub fn symmetry_check(
    eq: EquationId,
    f: &dyn Surface,
    map: SymmetryMap,
    grid: &Grid2,
    tolerance: f64,
) -> Result<SymmetryReport> {
    let base = residual_surface(eq, f, None, grid)?;
    if !base.passes(tolerance) {
        return Err(Error::ResidualGate {
            equation: eq.as_str().to_string(),
            max_residual: base.max_residual,
            tolerance,
        });
    }
    let scaled = match map {
        SymmetryMap::Identity => {
            ScaledSurface { inner: f, value_scale: 1.0, x_scale: 1.0, y_scale: 1.0 }
        }
        SymmetryMap::LevelScaling { alpha, gamma } => {
            if !matches!(eq, EquationId::Eq32Tau | EquationId::Eq33Zeta) {
                return Err(Error::RoleMismatch(format!(
                    "level scaling applies to the level equations, not {}",
                    eq.as_str()
                )));
            }
            ScaledSurface {
                inner: f,
                value_scale: alpha,
                x_scale: alpha * gamma * gamma,
                y_scale: gamma,
            }
        }
        SymmetryMap::SScaling { e, a, b } => {
            if eq != EquationId::Eq31S {
                return Err(Error::RoleMismatch(format!(
                    "(e, a, b) scaling applies to the s-equation, not {}",
                    eq.as_str()
                )));
            }
            if (e * e * a * b - 1.0).abs() > 1e-12 {
                return Err(Error::ConstraintViolated(format!(
                    "e^2 a b = {} but must equal 1",
                    e * e * a * b
                )));
            }
            ScaledSurface { inner: f, value_scale: e, x_scale: a, y_scale: b }
        }
    };
    let transformed = residual_surface(eq, &scaled, None, grid)?;
    Ok(SymmetryReport { base, transformed })
}

// ---------------------------------------------------------------------------
// implicit similarity profile check
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ImplicitPReport {
    /// Max of `|P^2 (P^2 + 1) - 2 y^2|` over the sampled range.
    pub max_constraint_defect: f64,
    /// Max of `|dP/dy - 2y / (P (2P^2 + 1))|` with `dP/dy` from central
    /// differences of the root.
    pub max_derivative_defect: f64,
    /// Max of `|stilde^2 - P^2 - 1|` against the orthonormal slope function.
    pub max_stilde_defect: f64,
}

fn p_root(y: f64) -> f64 {
    // P > 0 solving P^4 + P^2 = 2 y^2, refined by Newton.
    let mut p = (((1.0 + 8.0 * y * y).sqrt() - 1.0) / 2.0).sqrt();
    for _ in 0..4 {
        let f = p.powi(4) + p * p - 2.0 * y * y;
        let fp = 4.0 * p.powi(3) + 2.0 * p;
        p -= f / fp;
    }
    p
}

/// Consistency of the implicit profile `P^2 (P^2 + 1) = 2 y^2` with its
/// derivative rule and the orthonormal slope function.
pub fn implicit_p_check(y_range: (f64, f64), n: usize) -> Result<ImplicitPReport> {
    if !(y_range.0 > 0.0 && y_range.1 > y_range.0) {
        return Err(Error::BadArgument("need 0 < y0 < y1".into()));
    }
    let h = (y_range.1 - y_range.0) / (n - 1) as f64;
    let fd_step = 1e-5;
    let mut rep = ImplicitPReport {
        max_constraint_defect: 0.0,
        max_derivative_defect: 0.0,
        max_stilde_defect: 0.0,
    };
    for k in 0..n {
        let y = y_range.0 + h * k as f64;
        let p = p_root(y);
        rep.max_constraint_defect =
            rep.max_constraint_defect.max((p * p * (p * p + 1.0) - 2.0 * y * y).abs());
        let dp_fd = (p_root(y + fd_step) - p_root(y - fd_step)) / (2.0 * fd_step);
        let dp_formula = 2.0 * y / (p * (2.0 * p * p + 1.0));
        rep.max_derivative_defect = rep.max_derivative_defect.max((dp_fd - dp_formula).abs());
        // stilde at u = y^2
        let u = y * y;
        let st2 = ((1.0 + 8.0 * u).sqrt() + 1.0) / 2.0;
        rep.max_stilde_defect = rep.max_stilde_defect.max((st2 - p * p - 1.0).abs());
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// refinement ladders
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct Ladder {
    pub max_residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    /// All rungs at the rounding floor: the stencils differentiate the
    /// solution exactly and ratios carry no information.
    pub at_rounding_floor: bool,
}

impl Ladder {
    /// Second-order convergence gate: ratios in [3.2, 4.8] per halving, or
    /// everything already at the rounding floor.
    pub fn passes_second_order(&self) -> bool {
        self.at_rounding_floor || self.ratios.iter().all(|r| (3.2..=4.8).contains(r))
    }
}

/// Finite-difference residuals of an entry on successively halved grids.
pub fn fd_ladder(
    eq: EquationId,
    entry: &CatalogEntry,
    base: &Grid2,
    rungs: usize,
) -> Result<Ladder> {
    let mut grid = base.clone();
    let mut max_residuals = Vec::with_capacity(rungs);
    for _ in 0..rungs {
        let rep = residual_entry(eq, entry, Some(&grid), Partials::FiniteDifference)?;
        max_residuals.push(rep.max_residual);
        grid = grid.refined();
    }
    Ok(ladder_from_residuals(max_residuals))
}

/// Build a ladder report from a list of residuals on successively halved
/// spacings.
pub fn ladder_from_residuals(max_residuals: Vec<f64>) -> Ladder {
    let at_rounding_floor = max_residuals.iter().all(|&r| r < ROUNDING_FLOOR);
    let ratios = max_residuals.windows(2).map(|w| w[0] / w[1]).collect();
    Ladder { max_residuals, ratios, at_rounding_floor }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{entry, entry_with, SQRT2};
    use crate::grid::Axis;
    use std::collections::BTreeMap;

    fn grid(a0: Axis, a1: Axis, n: usize) -> Grid2 {
        Grid2::from_ranges(a0, (1.0, 2.0, n), a1, (1.0, 2.0, n)).unwrap()
    }

    #[test]
    fn eq3_exact_on_both_level_set_radii() {
        for (name, eps) in [("eq7-sqrt", 0.3), ("eq7-drop", 0.2)] {
            let e = entry_with(name, &BTreeMap::from([("epsilon".to_string(), eps)])).unwrap();
            let rep = residual_entry(
                EquationId::Eq3Lightcone,
                &e,
                Some(&grid(Axis::Tau, Axis::Mu, 65)),
                Partials::Analytic,
            )
            .unwrap();
            assert!(rep.max_residual <= 1e-10, "{name}: {}", rep.max_residual);
            assert_eq!(rep.degenerate, Some(false));
        }
    }

    #[test]
    fn level_equations_exact_on_rational_solutions() {
        let cases: [(&str, EquationId); 5] = [
            ("eq37", EquationId::Eq32Tau),
            ("eq38", EquationId::Eq32Tau),
            ("eq48", EquationId::Eq33Zeta),
            ("eq1-levelset", EquationId::Eq33Zeta),
            ("eq2-drop", EquationId::Eq33Zeta),
        ];
        for (name, eq) in cases {
            let e = entry(name).unwrap();
            let rep = residual_entry(eq, &e, None, Partials::Analytic).unwrap();
            assert!(rep.max_residual <= 1e-10, "{name}: {}", rep.max_residual);
        }
    }

    #[test]
    fn level_kernels_agree_under_role_swap() {
        // Same code path for both level forms: identical inputs give
        // bit-identical outputs.
        let f = |x: f64, y: f64| {
            let a = Jet2::var_x(x);
            let b = Jet2::var_y(y);
            (a * b).sqrt() + a / b
        };
        let g32 = grid(Axis::Zeta, Axis::R, 17);
        let g33 = grid(Axis::Tau, Axis::R, 17);
        let r32 = residual_surface(EquationId::Eq32Tau, &f, None, &g32).unwrap();
        let r33 = residual_surface(EquationId::Eq33Zeta, &f, None, &g33).unwrap();
        assert_eq!(r32.max_residual, r33.max_residual);
        assert_eq!(r32.l2_residual, r33.l2_residual);
    }

    #[test]
    fn s_equation_solutions() {
        // R = sqrt(-2 tau zeta) and R = sqrt(c/zeta^2 - 2 tau zeta), on a
        // zeta < 0 window.
        let g = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 33), Axis::Zeta, (-2.0, -1.0, 33))
            .unwrap();
        let hyper = |t: f64, z: f64| {
            let tau = Jet2::var_x(t);
            let zeta = Jet2::var_y(z);
            (tau * zeta * -2.0).sqrt()
        };
        let rep = residual_surface(EquationId::Eq31S, &hyper, None, &g).unwrap();
        assert!(rep.max_residual <= 1e-12, "{}", rep.max_residual);

        let c = 1.0;
        let s37 = move |t: f64, z: f64| {
            let tau = Jet2::var_x(t);
            let zeta = Jet2::var_y(z);
            (Jet2::constant(c) / (zeta * zeta) - tau * zeta * 2.0).sqrt()
        };
        let rep = residual_surface(EquationId::Eq31S, &s37, None, &g).unwrap();
        assert!(rep.max_residual <= 1e-12, "{}", rep.max_residual);
    }

    #[test]
    fn g_bridge_from_s_solutions() {
        // g = s^2/2 of an exact s-solution satisfies the g-equation exactly.
        let g = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 33), Axis::Zeta, (-2.0, -1.0, 33))
            .unwrap();
        let gexact = |t: f64, z: f64| {
            let tau = Jet2::var_x(t);
            let zeta = Jet2::var_y(z);
            -(tau * zeta) // s^2/2 for s = sqrt(-2 tau zeta)
        };
        let rep = residual_surface(EquationId::Eq53G, &gexact, None, &g).unwrap();
        assert!(rep.max_residual <= 1e-13, "{}", rep.max_residual);
    }

    #[test]
    fn graph_equation_solutions() {
        // r = sqrt(z^2 - t^2) on t in [0.2, 0.9], z in [1.2, 2].
        let g = Grid2::from_ranges(Axis::T, (0.2, 0.9, 33), Axis::Z, (1.2, 2.0, 33)).unwrap();
        let r = |t: f64, z: f64| {
            let tj = Jet2::var_x(t);
            let zj = Jet2::var_y(z);
            (zj * zj - tj * tj).sqrt()
        };
        let rep = residual_surface(EquationId::Eq68Graph, &r, None, &g).unwrap();
        assert!(rep.max_residual <= 1e-12, "{}", rep.max_residual);
    }

    #[test]
    fn profile_reductions_of_the_graph_equation() {
        let e = entry("eq66-graph").unwrap();
        let rep = residual_entry(EquationId::Eq70HGraph, &e, None, Partials::Analytic).unwrap();
        assert!(rep.max_residual_raw <= 1e-12, "{}", rep.max_residual_raw);
        assert_eq!(rep.degenerate, Some(false));
        // h = x^2 - 1 also solves the profile equation but is degenerate.
        let d = entry("eq70-degenerate").unwrap();
        let rep = residual_entry(EquationId::Eq70HGraph, &d, None, Partials::Analytic).unwrap();
        assert!(rep.max_residual_raw <= 1e-12, "{}", rep.max_residual_raw);
        assert_eq!(rep.degenerate, Some(true));
        // g = sqrt(1 - x^2) solves the g-form.
        let gprof = |x: f64| {
            let xj = Jet1::var(x);
            (-(xj * xj) + 1.0).sqrt()
        };
        let rep = residual_profile(EquationId::Eq69GGraph, &gprof, (-0.9, 0.9), 257).unwrap();
        assert!(rep.max_residual <= 1e-12, "{}", rep.max_residual);
    }

    #[test]
    fn orthonormal_entry_satisfies_constraints_and_wave_equations() {
        let e = entry("eq60-orthonormal").unwrap();
        let rep =
            residual_entry(EquationId::Eq59Constraints, &e, None, Partials::Analytic).unwrap();
        assert!(rep.max_residual <= 1e-10, "constraints: {}", rep.max_residual);
        let rep = residual_entry(EquationId::Eq62R, &e, None, Partials::Analytic).unwrap();
        assert!(rep.max_residual <= 1e-10, "radial: {}", rep.max_residual);
        let rep = residual_entry(EquationId::Eq57Wave, &e, None, Partials::Analytic).unwrap();
        assert!(rep.max_residual <= 1e-10, "wave (z): {}", rep.max_residual);
        let rep = residual_entry(EquationId::Eq67System, &e, None, Partials::Analytic).unwrap();
        assert!(rep.max_residual <= 1e-10, "profile system: {}", rep.max_residual);
    }

    #[test]
    fn zeta_minus_z_passes_external_wave_equation() {
        // zeta = t - z(t, phi) with radius r(t, phi): jets assembled from the
        // pair entry.
        let e = entry("eq60-orthonormal").unwrap();
        let (r, z) = e.pair().unwrap();
        let zc = z.clone();
        let zeta = move |t: f64, phi: f64| Jet2::var_x(t) - zc.jet(t, phi);
        let g = grid(Axis::T, Axis::Phi, 65);
        let rep =
            residual_surface(EquationId::Eq64WaveExternal, &zeta, Some(r.as_ref()), &g).unwrap();
        assert!(rep.max_residual <= 1e-10, "{}", rep.max_residual);
        // the t part alone is trivially a solution
        let tpart = |t: f64, _phi: f64| Jet2::var_x(t);
        let rep = residual_surface(EquationId::Eq57Wave, &tpart, Some(r.as_ref()), &g).unwrap();
        assert!(rep.max_residual <= 1e-14, "{}", rep.max_residual);
    }

    #[test]
    fn degeneracy_flags() {
        // zeta = +R^2/(2 tau): indicator identically zero.
        let shifted = |t: f64, rv: f64| {
            let tau = Jet2::var_x(t);
            let r = Jet2::var_y(rv);
            (r * r) / (tau * 2.0)
        };
        let g = grid(Axis::Tau, Axis::R, 17);
        let d = degeneracy_surface(DegeneracyRole::ZetaLevel, &shifted, &g).unwrap();
        assert!(d.flagged);
        assert!(d.indicator.iter().all(|v| v.abs() < 1e-13));
        // the hyperboloid branch gives 2 R^2 / tau^2, nowhere small
        let e = entry("eq8-hyperboloid").unwrap();
        let d = degeneracy_entry(&e, Some(&g)).unwrap();
        assert!(!d.flagged);
        for (k, v) in d.indicator.iter().enumerate() {
            let (i, j) = (k / 17, k % 17);
            let (tau, r) = (g.x0(i), g.x1(j));
            assert!((v - 2.0 * r * r / (tau * tau)).abs() < 1e-12);
        }
    }

    #[test]
    fn level_scaling_symmetry() {
        let e = entry("eq8-hyperboloid").unwrap();
        let f = e.surface().unwrap();
        let g = grid(Axis::Tau, Axis::R, 33);
        let rep = symmetry_check(
            EquationId::Eq33Zeta,
            f.as_ref(),
            SymmetryMap::LevelScaling { alpha: 2.0, gamma: 3.0 },
            &g,
            1e-10,
        )
        .unwrap();
        assert!(rep.transformed.max_residual <= 1e-10, "{}", rep.transformed.max_residual);
        // identity: identical report
        let rep = symmetry_check(EquationId::Eq33Zeta, f.as_ref(), SymmetryMap::Identity, &g, 1e-10)
            .unwrap();
        assert_eq!(rep.base.max_residual, rep.transformed.max_residual);
    }

    #[test]
    fn s_scaling_symmetry_under_unit_constraint() {
        let c = 1.0;
        let s37 = move |t: f64, z: f64| {
            let tau = Jet2::var_x(t);
            let zeta = Jet2::var_y(z);
            (Jet2::constant(c) / (zeta * zeta) - tau * zeta * 2.0).sqrt()
        };
        let g = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 33), Axis::Zeta, (-2.0, -1.0, 33))
            .unwrap();
        let rep = symmetry_check(
            EquationId::Eq31S,
            &s37,
            SymmetryMap::SScaling { e: 2.0, a: 1.0, b: 0.25 },
            &g,
            1e-10,
        )
        .unwrap();
        assert!(rep.transformed.max_residual <= 1e-10, "{}", rep.transformed.max_residual);
        // violated constraint is rejected
        let err = symmetry_check(
            EquationId::Eq31S,
            &s37,
            SymmetryMap::SScaling { e: 2.0, a: 1.0, b: 0.5 },
            &g,
            1e-10,
        );
        assert!(matches!(err, Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn implicit_profile_consistency() {
        let rep = implicit_p_check((0.2, 3.0), 200).unwrap();
        assert!(rep.max_constraint_defect < 1e-12);
        assert!(rep.max_derivative_defect < 1e-9, "{}", rep.max_derivative_defect);
        assert!(rep.max_stilde_defect < 1e-12);
        // spot values at y = 1: P = 1, P' = 2/3
        let p = p_root(1.0);
        assert!((p - 1.0).abs() < 1e-12);
        let dp = 2.0 * 1.0 / (p * (2.0 * p * p + 1.0));
        assert!((dp - 2.0 / 3.0).abs() < 1e-12);
        // y -> 0 limit: P -> 0
        assert!(p_root(1e-8) < 1e-7);
    }

    #[test]
    fn fd_residuals_converge_at_second_order() {
        let e = entry("eq7-sqrt").unwrap();
        let base = grid(Axis::Tau, Axis::Mu, 17);
        let ladder = fd_ladder(EquationId::Eq3Lightcone, &e, &base, 3).unwrap();
        assert!(ladder.passes_second_order(), "{:?}", ladder);
        assert!(!ladder.at_rounding_floor);
    }

    #[test]
    fn fd_residual_scale_bridge_between_s_and_g_forms() {
        // Regression test: an s-field passing the s-equation at defect d
        // gives a g = s^2/2 field passing the g-form at C * d with a modest
        // observable constant.
        let g = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 65), Axis::Zeta, (-2.0, -1.0, 65))
            .unwrap();
        let sfield = Field2::from_fn(g.clone(), |t, z| (-2.0 * t * z).sqrt()).unwrap();
        let gfield = Field2::from_fn(g, |t, z| -t * z).unwrap();
        let rs = residual_field(EquationId::Eq31S, &sfield, None).unwrap();
        let rg = residual_field(EquationId::Eq53G, &gfield, None).unwrap();
        // the g-form of this solution is bilinear, so its FD residual is at
        // rounding level; the bridge constant is tiny here
        assert!(rg.max_residual <= 1.0 * rs.max_residual.max(1e-12) * 10.0);
    }

    #[test]
    fn wrong_role_is_rejected() {
        let e = entry("eq8-hyperboloid").unwrap();
        let err = residual_entry(EquationId::Eq31S, &e, None, Partials::Analytic);
        assert!(matches!(err, Err(Error::RoleMismatch(_))));
        let err = residual_entry(EquationId::Eq3Lightcone, &e, None, Partials::Analytic);
        assert!(matches!(err, Err(Error::RoleMismatch(_))));
    }

    #[test]
    fn radius_form_degeneracy_detects_vanishing_lagrangian() {
        // eq7-drop with a large amplitude has a zero of R-dot^2 - R^2 R'^2
        // inside the default window.
        let e = entry_with("eq7-drop", &BTreeMap::from([("epsilon".to_string(), 1.0)])).unwrap();
        let d = degeneracy_entry(&e, Some(&grid(Axis::Tau, Axis::Mu, 65))).unwrap();
        let has_sign_change = d.indicator.iter().any(|&v| v > 0.0)
            && d.indicator.iter().any(|&v| v < 0.0);
        assert!(has_sign_change);
        // the hyperboloid base keeps it negative-definite
        let e0 = entry_with("eq7-drop", &BTreeMap::from([("epsilon".to_string(), 0.0)])).unwrap();
        let d0 = degeneracy_entry(&e0, Some(&grid(Axis::Tau, Axis::Mu, 65))).unwrap();
        assert!(!d0.flagged);
        assert!(d0.indicator.iter().all(|&v| v < 0.0));
        let base = SQRT2;
        let _ = base;
    }
}
