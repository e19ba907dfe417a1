//! Registry of closed-form membrane solutions.
//!
//! Each entry names a solution family, states which unknown it describes
//! (its role), carries its parameters and singular loci, and evaluates the
//! solution analytically with first and second partials. Radius-form entries
//! also know their characteristic partner fields in closed form, which makes
//! the transform pipeline comparisons well posed.
//!
//! Level-set families are stored in explicit `zeta(tau, R)` form (solved via
//! t^2 - z^2 = 2 tau zeta and x^2 + y^2 = R^2), so they can be checked
//! directly against the level equations; the implicit quartics are used only
//! by the embedding checks.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{Axis, Field2, Grid2};
use crate::jet::{Jet1, Jet2};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Which unknown a catalog entry describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Radius `R(tau, mu)` of the parametrized membrane.
    ROfTauMu,
    /// Level function `zeta(tau, R)`.
    ZetaOfTauR,
    /// Level function `tau(zeta, R)`.
    TauOfZetaR,
    /// Orthonormal pair `(r, z)(t, phi)`.
    RzOfTPhi,
    /// One-dimensional similarity profile.
    Profile1d,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::ROfTauMu => "R_of_tau_mu",
            Role::ZetaOfTauR => "zeta_of_tau_R",
            Role::TauOfZetaR => "tau_of_zeta_R",
            Role::RzOfTPhi => "rz_of_t_phi",
            Role::Profile1d => "profile_1d",
        }
    }

    /// Grid axes implied by the role; `None` for 1-d profiles.
    pub fn axes(&self) -> Option<(Axis, Axis)> {
        match self {
            Role::ROfTauMu => Some((Axis::Tau, Axis::Mu)),
            Role::ZetaOfTauR => Some((Axis::Tau, Axis::R)),
            Role::TauOfZetaR => Some((Axis::Zeta, Axis::R)),
            Role::RzOfTPhi => Some((Axis::T, Axis::Phi)),
            Role::Profile1d => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Analytic scalar function of two variables with second-order jets.
pub trait Surface: Sync + Send {
    fn jet(&self, x: f64, y: f64) -> Jet2;

    fn value(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).v
    }
}

impl<F> Surface for F
where
    F: Fn(f64, f64) -> Jet2 + Sync + Send,
{
    fn jet(&self, x: f64, y: f64) -> Jet2 {
        self(x, y)
    }
}

/// Analytic function of one variable with two derivatives.
pub trait Profile: Sync + Send {
    fn jet(&self, x: f64) -> Jet1;
}

impl<F> Profile for F
where
    F: Fn(f64) -> Jet1 + Sync + Send,
{
    fn jet(&self, x: f64) -> Jet1 {
        self(x)
    }
}

/// Axis-aligned locus the admissible domain must exclude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularLocus {
    /// Grid axis for surface entries; `None` labels the profile variable.
    pub axis: Option<Axis>,
    pub value: f64,
}

impl fmt::Display for SingularLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.axis {
            Some(ax) => write!(f, "{} = {}", ax, self.value),
            None => write!(f, "x = {}", self.value),
        }
    }
}

enum Kind {
    Surface {
        f: Arc<dyn Surface>,
        zeta: Option<Arc<dyn Surface>>,
        kappa: Option<Arc<dyn Surface>>,
    },
    Pair {
        r: Arc<dyn Surface>,
        z: Arc<dyn Surface>,
    },
    Profile {
        p: Arc<dyn Profile>,
        interval: (f64, f64),
    },
}

/// A named closed-form solution with analytic evaluators.
pub struct CatalogEntry {
    pub name: String,
    pub role: Role,
    /// Equation tag used in metadata dumps and reports.
    pub paper_eq: String,
    pub params: BTreeMap<String, f64>,
    pub singular_loci: Vec<SingularLocus>,
    kind: Kind,
}

impl CatalogEntry {
    /// The single surface evaluator (radius or level function).
    pub fn surface(&self) -> Result<Arc<dyn Surface>> {
        match &self.kind {
            Kind::Surface { f, .. } => Ok(f.clone()),
            _ => Err(Error::RoleMismatch(format!(
                "entry `{}` ({}) is not a single-surface entry",
                self.name, self.role
            ))),
        }
    }

    /// Closed-form characteristic partner `zeta(tau, mu)`, when known.
    pub fn zeta_surface(&self) -> Option<Arc<dyn Surface>> {
        match &self.kind {
            Kind::Surface { zeta, .. } => zeta.clone(),
            _ => None,
        }
    }

    /// Closed-form characteristic partner `kappa(tau, mu)`, when known.
    pub fn kappa_surface(&self) -> Option<Arc<dyn Surface>> {
        match &self.kind {
            Kind::Surface { kappa, .. } => kappa.clone(),
            _ => None,
        }
    }

    /// The `(r, z)` pair of an orthonormal-parametrization entry.
    pub fn pair(&self) -> Result<(Arc<dyn Surface>, Arc<dyn Surface>)> {
        match &self.kind {
            Kind::Pair { r, z } => Ok((r.clone(), z.clone())),
            _ => Err(Error::RoleMismatch(format!(
                "entry `{}` ({}) is not an (r, z) pair",
                self.name, self.role
            ))),
        }
    }

    pub fn profile(&self) -> Result<Arc<dyn Profile>> {
        match &self.kind {
            Kind::Profile { p, .. } => Ok(p.clone()),
            _ => Err(Error::RoleMismatch(format!(
                "entry `{}` ({}) is not a 1-d profile",
                self.name, self.role
            ))),
        }
    }

    /// Default sampling interval for profile entries.
    pub fn profile_interval(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Profile { interval, .. } => Some(*interval),
            _ => None,
        }
    }

    fn surface_loci(&self) -> Vec<(Axis, f64)> {
        self.singular_loci
            .iter()
            .filter_map(|l| l.axis.map(|a| (a, l.value)))
            .collect()
    }

    /// Check a grid against the entry's axes and singular loci.
    pub fn check_grid(&self, grid: &Grid2) -> Result<()> {
        let (a0, a1) = self.role.axes().ok_or_else(|| {
            Error::RoleMismatch(format!("entry `{}` is a 1-d profile, not a surface", self.name))
        })?;
        if !grid.has_axes(a0, a1) {
            return Err(Error::AxisMismatch(format!(
                "entry `{}` expects axes ({}, {}), grid has ({}, {})",
                self.name,
                a0,
                a1,
                grid.axis(0).name,
                grid.axis(1).name
            )));
        }
        grid.check_excludes(&self.surface_loci())
    }

    /// Pointwise analytic evaluation on an admissible grid.
    pub fn sample(&self, grid: &Grid2) -> Result<Field2> {
        self.check_grid(grid)?;
        let f = match &self.kind {
            Kind::Surface { f, .. } => f.clone(),
            Kind::Pair { .. } => {
                return Err(Error::RoleMismatch(format!(
                    "entry `{}` is an (r, z) pair; sample the components individually",
                    self.name
                )))
            }
            Kind::Profile { .. } => unreachable!("check_grid rejects profiles"),
        };
        Field2::from_fn(grid.clone(), |x, y| f.value(x, y))
    }

    /// Default verification grid for this entry's role.
    pub fn default_grid(&self) -> Result<Grid2> {
        let (a0, a1) = self.role.axes().ok_or_else(|| {
            Error::RoleMismatch(format!("entry `{}` is a 1-d profile", self.name))
        })?;
        Ok(Grid2::default_unit(a0, a1))
    }

    /// Metadata dump: `{name, role, paper_eq, parameters, singular_loci}`.
    pub fn metadata(&self) -> serde_json::Value {
        json!({
            "name": self.name,
            "role": self.role.as_str(),
            "paper_eq": self.paper_eq,
            "parameters": self.params,
            "singular_loci": self.singular_loci.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        })
    }
}

fn locus(axis: Axis, value: f64) -> SingularLocus {
    SingularLocus { axis: Some(axis), value }
}

fn profile_locus(value: f64) -> SingularLocus {
    SingularLocus { axis: None, value }
}

// ---------------------------------------------------------------------------
// entry constructors
// ---------------------------------------------------------------------------

fn eq7_sqrt(eps: f64) -> CatalogEntry {
    let f = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        (mu * mu + eps).sqrt() * SQRT2 / tau
    };
    let zeta = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        -(mu * mu + eps / 3.0) / tau.powi(3)
    };
    let kappa = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        mu * (mu * mu + eps) / tau.powi(4)
    };
    CatalogEntry {
        name: "eq7-sqrt".into(),
        role: Role::ROfTauMu,
        paper_eq: "eq7".into(),
        params: BTreeMap::from([("epsilon".to_string(), eps)]),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface {
            f: Arc::new(f),
            zeta: Some(Arc::new(zeta)),
            kappa: Some(Arc::new(kappa)),
        },
    }
}

fn eq7_drop(eps: f64) -> CatalogEntry {
    let f = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        mu / tau * SQRT2 + tau.powi(2) * eps
    };
    let zeta = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        -(mu * mu) / tau.powi(3) + mu * (2.0 * SQRT2 * eps) + tau.powi(3) * (eps * eps)
    };
    let kappa = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        mu.powi(3) / tau.powi(4)
            + mu * tau.powi(2) * (3.0 * eps * eps)
            + tau.powi(5) * (2.0 * SQRT2 / 5.0 * eps * eps * eps)
    };
    CatalogEntry {
        name: "eq7-drop".into(),
        role: Role::ROfTauMu,
        paper_eq: "eq7".into(),
        params: BTreeMap::from([("epsilon".to_string(), eps)]),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface {
            f: Arc::new(f),
            zeta: Some(Arc::new(zeta)),
            kappa: Some(Arc::new(kappa)),
        },
    }
}

fn eq8_radius(sign: f64) -> CatalogEntry {
    let f = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        mu / tau * (sign * SQRT2)
    };
    let zeta = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        -(mu * mu) / tau.powi(3)
    };
    let kappa = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        mu.powi(3) / tau.powi(4)
    };
    CatalogEntry {
        name: "eq8-radius".into(),
        role: Role::ROfTauMu,
        paper_eq: "eq8".into(),
        params: BTreeMap::from([("sign".to_string(), sign)]),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface {
            f: Arc::new(f),
            zeta: Some(Arc::new(zeta)),
            kappa: Some(Arc::new(kappa)),
        },
    }
}

fn eq8_hyperboloid() -> CatalogEntry {
    let f = |t: f64, r: f64| {
        let tau = Jet2::var_x(t);
        let rr = Jet2::var_y(r);
        -(rr * rr) / (tau * 2.0)
    };
    CatalogEntry {
        name: "eq8-hyperboloid".into(),
        role: Role::ZetaOfTauR,
        paper_eq: "eq8".into(),
        params: BTreeMap::new(),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq1_levelset(c: f64) -> CatalogEntry {
    let f = move |t: f64, r: f64| {
        let tau = Jet2::var_x(t);
        let rr = Jet2::var_y(r);
        Jet2::constant(c / 8.0) / tau.powi(3) - (rr * rr) / (tau * 2.0)
    };
    CatalogEntry {
        name: "eq1-levelset".into(),
        role: Role::ZetaOfTauR,
        paper_eq: "eq1".into(),
        params: BTreeMap::from([("C".to_string(), c)]),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq2_drop(c: f64) -> CatalogEntry {
    let f = move |t: f64, r: f64| {
        let tau = Jet2::var_x(t);
        let rr = Jet2::var_y(r);
        rr * tau * (12.0 * c) - tau.powi(3) * (24.0 * c * c) - (rr * rr) / (tau * 2.0)
    };
    CatalogEntry {
        name: "eq2-drop".into(),
        role: Role::ZetaOfTauR,
        paper_eq: "eq2".into(),
        params: BTreeMap::from([("C".to_string(), c)]),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq37(c: f64) -> CatalogEntry {
    let f = move |z: f64, r: f64| {
        let zeta = Jet2::var_x(z);
        let rr = Jet2::var_y(r);
        Jet2::constant(c / 2.0) / zeta.powi(3) - (rr * rr) / (zeta * 2.0)
    };
    CatalogEntry {
        name: "eq37".into(),
        role: Role::TauOfZetaR,
        paper_eq: "eq37".into(),
        params: BTreeMap::from([("c".to_string(), c)]),
        singular_loci: vec![locus(Axis::Zeta, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq38(c: f64) -> CatalogEntry {
    let f = move |z: f64, r: f64| {
        let zeta = Jet2::var_x(z);
        let rr = Jet2::var_y(r);
        zeta.powi(5) * (c / 2.0) + (rr * rr) / (zeta * 2.0)
    };
    CatalogEntry {
        name: "eq38".into(),
        role: Role::TauOfZetaR,
        paper_eq: "eq38".into(),
        params: BTreeMap::from([("c".to_string(), c)]),
        singular_loci: vec![locus(Axis::Zeta, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq48(c: f64) -> CatalogEntry {
    let f = move |t: f64, r: f64| {
        let tau = Jet2::var_x(t);
        let rr = Jet2::var_y(r);
        tau.powi(5) * (c / 2.0) + (rr * rr) / (tau * 2.0)
    };
    CatalogEntry {
        name: "eq48".into(),
        role: Role::ZetaOfTauR,
        paper_eq: "eq48".into(),
        params: BTreeMap::from([("c".to_string(), c)]),
        singular_loci: vec![locus(Axis::Tau, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq49_separable(tau0: f64) -> CatalogEntry {
    // zeta = (R^2/2) D(tau) with D = -1/(tau - tau0), the rational branch of
    // D-dot^2 = D^4.
    let f = move |t: f64, r: f64| {
        let tau = Jet2::var_x(t);
        let rr = Jet2::var_y(r);
        -(rr * rr) / ((tau - tau0) * 2.0)
    };
    CatalogEntry {
        name: "eq49-separable".into(),
        role: Role::ZetaOfTauR,
        paper_eq: "eq49".into(),
        params: BTreeMap::from([("tau0".to_string(), tau0)]),
        singular_loci: vec![locus(Axis::Tau, tau0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

fn eq51_general(tau0: f64, c1: f64, c2: f64) -> CatalogEntry {
    // zeta = (R^2/2) D - C1 - C2 * int exp(int 4D); for D = -1/(tau - tau0)
    // the quadrature closes: zeta_1 = -C1 + (C2/3) (tau - tau0)^{-3}.
    let f = move |t: f64, r: f64| {
        let tau = Jet2::var_x(t);
        let rr = Jet2::var_y(r);
        let u = tau - tau0;
        -(rr * rr) / (u * 2.0) - c1 + u.powi(-3) * (c2 / 3.0)
    };
    CatalogEntry {
        name: "eq51-general".into(),
        role: Role::ZetaOfTauR,
        paper_eq: "eq51".into(),
        params: BTreeMap::from([
            ("tau0".to_string(), tau0),
            ("C1".to_string(), c1),
            ("C2".to_string(), c2),
        ]),
        singular_loci: vec![locus(Axis::Tau, tau0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

/// Jet of the orthonormal-hyperboloid slope function applied to `u`:
/// `stilde(u) = sign / sqrt(2) * (sqrt(1 + 8u) + 1)^{1/2}`.
fn stilde_jet(u: Jet2, sign: f64) -> Jet2 {
    (((u * 8.0 + 1.0).sqrt() + 1.0) * 0.5).sqrt() * sign
}

fn eq60_orthonormal(sign: f64) -> CatalogEntry {
    let r = move |tv: f64, pv: f64| {
        let t = Jet2::var_x(tv);
        let phi = Jet2::var_y(pv);
        let u = (phi * phi) / t.powi(4);
        let st = stilde_jet(u, 1.0); // s = sqrt(st^2 - 1) is branch independent
        t * (st * st - 1.0).sqrt()
    };
    let z = move |tv: f64, pv: f64| {
        let t = Jet2::var_x(tv);
        let phi = Jet2::var_y(pv);
        let u = (phi * phi) / t.powi(4);
        t * stilde_jet(u, sign)
    };
    CatalogEntry {
        name: "eq60-orthonormal".into(),
        role: Role::RzOfTPhi,
        paper_eq: "eq60".into(),
        params: BTreeMap::from([("sign".to_string(), sign)]),
        singular_loci: vec![locus(Axis::T, 0.0), locus(Axis::Phi, 0.0)],
        kind: Kind::Pair { r: Arc::new(r), z: Arc::new(z) },
    }
}

fn eq66_graph() -> CatalogEntry {
    let p = |x: f64| {
        let xj = Jet1::var(x);
        -(xj * xj) + 1.0
    };
    CatalogEntry {
        name: "eq66-graph".into(),
        role: Role::Profile1d,
        paper_eq: "eq66/eq70".into(),
        params: BTreeMap::new(),
        singular_loci: vec![profile_locus(1.0), profile_locus(-1.0)],
        kind: Kind::Profile { p: Arc::new(p), interval: (-0.9, 0.9) },
    }
}

fn eq70_degenerate() -> CatalogEntry {
    let p = |x: f64| {
        let xj = Jet1::var(x);
        xj * xj - 1.0
    };
    CatalogEntry {
        name: "eq70-degenerate".into(),
        role: Role::Profile1d,
        paper_eq: "eq70".into(),
        params: BTreeMap::new(),
        // h = x^2 - 1 needs |x| > 1 for h = g^2 > 0.
        singular_loci: vec![profile_locus(1.0), profile_locus(-1.0)],
        kind: Kind::Profile { p: Arc::new(p), interval: (1.1, 2.0) },
    }
}

/// Perturbed-hyperboloid mode `R = sign * sqrt(2) (mu/tau + delta tau^a mu^b)`.
/// Solves the radius equation only to first order in `delta`.
pub fn mode_entry(alpha: f64, beta: f64, delta: f64, sign: f64) -> CatalogEntry {
    let f = move |t: f64, m: f64| {
        let tau = Jet2::var_x(t);
        let mu = Jet2::var_y(m);
        (mu / tau + tau.powf(alpha) * mu.powf(beta) * delta) * (sign * SQRT2)
    };
    CatalogEntry {
        name: format!("mode({alpha},{beta})"),
        role: Role::ROfTauMu,
        paper_eq: "eq11".into(),
        params: BTreeMap::from([
            ("alpha".to_string(), alpha),
            ("beta".to_string(), beta),
            ("delta".to_string(), delta),
            ("sign".to_string(), sign),
        ]),
        singular_loci: vec![locus(Axis::Tau, 0.0), locus(Axis::Mu, 0.0)],
        kind: Kind::Surface { f: Arc::new(f), zeta: None, kappa: None },
    }
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let get = |key: &str, default: f64| -> f64 { params.get(key).copied().unwrap_or(default) };
    let known = |allowed: &[&str]| -> Result<()> {
        for k in params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::UnknownParameter { entry: name.to_string(), param: k.clone() });
            }
        }
        Ok(())
    };
    match name {
        "eq7-sqrt" => {
            known(&["epsilon"])?;
            Ok(eq7_sqrt(get("epsilon", 0.3)))
        }
        "eq7-drop" => {
            known(&["epsilon"])?;
            Ok(eq7_drop(get("epsilon", 0.2)))
        }
        "eq8-radius" => {
            known(&["sign"])?;
            Ok(eq8_radius(get("sign", 1.0)))
        }
        "eq8-hyperboloid" => {
            known(&[])?;
            Ok(eq8_hyperboloid())
        }
        "eq1-levelset" => {
            known(&["C"])?;
            Ok(eq1_levelset(get("C", 1.0)))
        }
        "eq2-drop" => {
            known(&["C"])?;
            Ok(eq2_drop(get("C", 1.0)))
        }
        "eq37" => {
            known(&["c"])?;
            Ok(eq37(get("c", 1.0)))
        }
        "eq38" => {
            known(&["c"])?;
            Ok(eq38(get("c", 1.0)))
        }
        "eq48" => {
            known(&["c"])?;
            Ok(eq48(get("c", 1.0)))
        }
        "eq49-separable" => {
            known(&["tau0"])?;
            Ok(eq49_separable(get("tau0", 3.0)))
        }
        "eq51-general" => {
            known(&["tau0", "C1", "C2"])?;
            Ok(eq51_general(get("tau0", 3.0), get("C1", 1.0), get("C2", 1.0)))
        }
        "eq60-orthonormal" => {
            known(&["sign"])?;
            Ok(eq60_orthonormal(get("sign", 1.0)))
        }
        "eq66-graph" => {
            known(&[])?;
            Ok(eq66_graph())
        }
        "eq70-degenerate" => {
            known(&[])?;
            Ok(eq70_degenerate())
        }
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

/// Stable, complete ordering of registry entry names.
pub const ENTRY_NAMES: [&str; 14] = [
    "eq1-levelset",
    "eq2-drop",
    "eq7-sqrt",
    "eq7-drop",
    "eq8-radius",
    "eq8-hyperboloid",
    "eq37",
    "eq38",
    "eq48",
    "eq49-separable",
    "eq51-general",
    "eq60-orthonormal",
    "eq66-graph",
    "eq70-degenerate",
];

/// Entry with default parameters.
pub fn entry(name: &str) -> Result<CatalogEntry> {
    build(name, &BTreeMap::new())
}

/// Entry with parameter overrides; unknown parameters are rejected.
pub fn entry_with(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    build(name, params)
}

/// `(name, role, equation tag)` for every registry entry, in stable order.
pub fn list_entries() -> Vec<(String, Role, String)> {
    ENTRY_NAMES
        .iter()
        .map(|n| {
            let e = entry(n).expect("registry entries build with defaults");
            (e.name, e.role, e.paper_eq)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// series and embedding
// ---------------------------------------------------------------------------

/// Truncated radius expansion of the level-set family around the hyperboloid:
/// `sqrt(2) (mu/tau + eps/(2 mu tau) - eps^2/(8 mu^3 tau) + ...)`. At most
/// three terms are defined.
pub fn series_eq10(eps: f64, n_terms: usize) -> Result<impl Fn(f64, f64) -> f64> {
    if n_terms > 3 {
        return Err(Error::SeriesOrder(n_terms));
    }
    if n_terms == 0 {
        return Err(Error::BadArgument("series needs at least one term".into()));
    }
    Ok(move |tau: f64, mu: f64| {
        let mut acc = mu / tau;
        if n_terms >= 2 {
            acc += eps / (2.0 * mu * tau);
        }
        if n_terms >= 3 {
            acc -= eps * eps / (8.0 * mu.powi(3) * tau);
        }
        SQRT2 * acc
    })
}

/// Spacetime point of the membrane world volume for a radius-form entry:
/// `(tau + zeta/2, R cos psi, R sin psi, tau - zeta/2)`. Needs the entry's
/// closed-form `zeta` partner.
pub fn embed(entry: &CatalogEntry, tau: f64, mu: f64, psi: f64) -> Result<[f64; 4]> {
    if entry.role != Role::ROfTauMu {
        return Err(Error::RoleMismatch(format!(
            "embed needs a radius-form entry, `{}` has role {}",
            entry.name, entry.role
        )));
    }
    let r = entry.surface()?.value(tau, mu);
    let zeta = entry
        .zeta_surface()
        .ok_or_else(|| {
            Error::RoleMismatch(format!("entry `{}` has no closed-form zeta partner", entry.name))
        })?
        .value(tau, mu);
    Ok([tau + zeta / 2.0, r * psi.cos(), r * psi.sin(), tau - zeta / 2.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_grid_for(e: &CatalogEntry) -> Grid2 {
        let (a0, a1) = e.role.axes().unwrap();
        Grid2::from_ranges(a0, (1.0, 2.0, 33), a1, (1.0, 2.0, 33)).unwrap()
    }

    #[test]
    fn registry_is_complete_and_stable() {
        let listing = list_entries();
        assert_eq!(listing.len(), ENTRY_NAMES.len());
        let names: Vec<_> = listing.iter().map(|(n, _, _)| n.as_str()).collect();
        assert!(names.contains(&"eq7-sqrt"));
        assert!(names.contains(&"eq2-drop"));
        assert!(names.contains(&"eq1-levelset"));
        assert_eq!(list_entries(), listing);
    }

    #[test]
    fn unknown_parameters_are_rejected() {
        let params = BTreeMap::from([("zzz".to_string(), 1.0)]);
        assert!(matches!(
            entry_with("eq37", &params),
            Err(Error::UnknownParameter { .. })
        ));
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        // Catalog invariant: every surface evaluator's partials agree with
        // grid derivatives of its own samples to second order.
        for name in ENTRY_NAMES {
            let e = entry(name).unwrap();
            let surfaces: Vec<Arc<dyn Surface>> = match e.role {
                Role::Profile1d => continue,
                Role::RzOfTPhi => {
                    let (r, z) = e.pair().unwrap();
                    vec![r, z]
                }
                _ => vec![e.surface().unwrap()],
            };
            let check = |grid: &Grid2, s: &Arc<dyn Surface>| -> f64 {
                let field = Field2::from_fn(grid.clone(), |x, y| s.value(x, y)).unwrap();
                let fd = field.diff(grid.axis(0).name, 1).unwrap();
                let exact = Field2::from_fn(grid.clone(), |x, y| s.jet(x, y).dx).unwrap();
                fd.zip_with(&exact, |a, b| (a - b).abs()).unwrap().interior_max_abs()
            };
            for s in &surfaces {
                let coarse = check(&default_grid_for(&e), s);
                let fine_grid = default_grid_for(&e).refined();
                let f2 = Field2::from_fn(fine_grid.clone(), |x, y| s.value(x, y)).unwrap();
                let fd = f2.diff(fine_grid.axis(0).name, 1).unwrap();
                let exact = Field2::from_fn(fine_grid, |x, y| s.jet(x, y).dx).unwrap();
                let fine = fd.zip_with(&exact, |a, b| (a - b).abs()).unwrap().interior_max_abs();
                // Either already at rounding level or second-order convergent.
                assert!(
                    coarse < 1e-11 || (3.2..4.8).contains(&(coarse / fine)),
                    "{name}: coarse {coarse:.3e} fine {fine:.3e}"
                );
            }
        }
    }

    #[test]
    fn hyperboloid_sampled_on_tau_r_grid() {
        let e = entry("eq8-hyperboloid").unwrap();
        let g = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 9), Axis::R, (1.0, 2.0, 9)).unwrap();
        let f = e.sample(&g).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let (tau, r) = (g.x0(i), g.x1(j));
                assert!((f.get(i, j) + r * r / (2.0 * tau)).abs() < 1e-14);
            }
        }
        // resampling is deterministic
        assert_eq!(e.sample(&g).unwrap().values(), f.values());
    }

    #[test]
    fn sample_rejects_wrong_axes_and_singular_loci() {
        let e = entry("eq8-hyperboloid").unwrap();
        let wrong = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 9), Axis::Mu, (1.0, 2.0, 9)).unwrap();
        assert!(matches!(e.sample(&wrong), Err(Error::AxisMismatch(_))));
        let sing =
            Grid2::from_ranges(Axis::Tau, (-1.0, 1.0, 9), Axis::R, (1.0, 2.0, 9)).unwrap();
        assert!(matches!(e.sample(&sing), Err(Error::SingularLocus(_))));
    }

    #[test]
    fn series_limits() {
        // one term: the unperturbed hyperboloid radius
        let s = series_eq10(0.7, 1).unwrap();
        assert!((s(1.3, 1.7) - SQRT2 * 1.7 / 1.3).abs() < 1e-15);
        // linear coefficient at tau = mu = 1 is sqrt(2)/2
        let s1 = series_eq10(1e-6, 2).unwrap();
        let base = series_eq10(0.0, 2).unwrap();
        let coeff = (s1(1.0, 1.0) - base(1.0, 1.0)) / 1e-6;
        assert!((coeff - SQRT2 / 2.0).abs() < 1e-9, "{coeff}");
        assert!(series_eq10(0.1, 4).is_err());
    }

    #[test]
    fn series_matches_level_set_radius_to_cubic_order() {
        // The three-term series against the exact radius of the level-set
        // family: the defect scales like eps^3.
        let defect = |eps: f64| -> f64 {
            let exact = eq7_sqrt(eps);
            let s = series_eq10(eps, 3).unwrap();
            let surf = exact.surface().unwrap();
            let mut worst = 0.0f64;
            for i in 0..9 {
                for j in 0..9 {
                    let (tau, mu) = (1.0 + 0.125 * i as f64, 1.0 + 0.125 * j as f64);
                    worst = worst.max((surf.value(tau, mu) - s(tau, mu)).abs());
                }
            }
            worst
        };
        let d3 = defect(1e-3);
        assert!(d3 < 1e-8, "{d3}");
        let ratio = defect(2e-3) / d3;
        assert!((6.0..10.0).contains(&ratio), "cubic scaling, got ratio {ratio}");
    }

    #[test]
    fn embed_hyperboloid_lies_on_level_set() {
        // 2 zeta tau + R^2 = 0 <=> t^2 - z^2 + x^2 + y^2 = 0, the moving
        // hyperboloid z^2 = t^2 + x^2 + y^2.
        let e = entry_with("eq7-sqrt", &BTreeMap::from([("epsilon".to_string(), 0.0)])).unwrap();
        for &(tau, mu, psi) in &[(1.0, 1.0, 0.0), (1.5, 1.2, 1.1), (2.0, 1.9, 2.7)] {
            let [t, x, y, z] = embed(&e, tau, mu, psi).unwrap();
            assert!((t * t - z * z + x * x + y * y).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_rotation_flips_x() {
        let e = entry("eq7-drop").unwrap();
        let a = embed(&e, 1.3, 1.6, 0.0).unwrap();
        let b = embed(&e, 1.3, 1.6, std::f64::consts::PI).unwrap();
        assert!((a[1] + b[1]).abs() < 1e-12);
        assert!((a[0] - b[0]).abs() < 1e-15);
        assert!((a[3] - b[3]).abs() < 1e-15);
    }

    #[test]
    fn embedded_points_satisfy_level_quartics() {
        // (t^2 + x^2 + y^2 - z^2)(t + z)^2 = C with C = 16 eps / 3
        let eps = 0.37;
        let e = entry_with("eq7-sqrt", &BTreeMap::from([("epsilon".to_string(), eps)])).unwrap();
        let c = 16.0 * eps / 3.0;
        for &(tau, mu, psi) in &[(1.0, 1.0, 0.3), (1.7, 1.1, 2.0), (2.0, 2.0, 4.4)] {
            let [t, x, y, z] = embed(&e, tau, mu, psi).unwrap();
            let q = (t * t + x * x + y * y - z * z) * (t + z) * (t + z);
            assert!((q - c).abs() < 1e-10 * c.abs().max(1.0), "{q} vs {c}");
        }
        // (t^2 + x^2 + y^2 - z^2) - 6C sqrt(x^2+y^2)(t+z)^2 + 3C^2 (t+z)^4 = 0
        // with C = eps / 4
        let eps = 0.21;
        let e = entry_with("eq7-drop", &BTreeMap::from([("epsilon".to_string(), eps)])).unwrap();
        let c = eps / 4.0;
        for &(tau, mu, psi) in &[(1.0, 1.3, 0.0), (1.9, 1.0, 1.2)] {
            let [t, x, y, z] = embed(&e, tau, mu, psi).unwrap();
            let rad = (x * x + y * y).sqrt();
            let q = (t * t + x * x + y * y - z * z) - 6.0 * c * rad * (t + z) * (t + z)
                + 3.0 * c * c * (t + z).powi(4);
            assert!(q.abs() < 1e-10, "{q}");
        }
    }

    #[test]
    fn eq2_drop_normal_form_constants() {
        // In the quadratic normal form h = 1 + d z + e z^2 (a = 2, b = -1)
        // the drop has d = -24C, e = 48C^2, so e = d^2 / 12 exactly.
        let c = 1.0;
        let d = -24.0 * c;
        let e = 48.0 * c * c;
        assert_eq!(e, d * d / 12.0);
        // and the factored form reproduces the entry
        let entry = eq2_drop(c);
        let s = entry.surface().unwrap();
        for &(tau, r) in &[(1.2, 1.0), (1.8, 1.5)] {
            let z = tau * tau / r;
            let h = 1.0 + d * z + e * z * z;
            let zeta = -r * r / (2.0 * tau) * h;
            assert!((s.value(tau, r) - zeta).abs() < 1e-9);
        }
    }

    #[test]
    fn eq60_auxiliary_identities() {
        // stilde^2 (stilde^2 - 1) = 2u  and  stilde stilde' (2 stilde^2 - 1) = 1
        let e = entry("eq60-orthonormal").unwrap();
        let (_, z) = e.pair().unwrap();
        for &(t, phi) in &[(1.0f64, 1.0f64), (1.5, 1.2), (2.0, 1.9)] {
            let u = phi * phi / t.powi(4);
            let st = z.value(t, phi) / t;
            assert!((st * st * (st * st - 1.0) - 2.0 * u).abs() < 1e-12);
            // derivative via the chain rule from the phi-partial:
            // dz/dphi = t stilde'(u) * du/dphi, du/dphi = 2 phi / t^4
            let dz = z.jet(t, phi).dy;
            let stp = dz / (t * (2.0 * phi / t.powi(4)));
            assert!((st * stp * (2.0 * st * st - 1.0) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eq60_orthonormal_constraints_hold_pointwise() {
        let e = entry("eq60-orthonormal").unwrap();
        let (r, z) = e.pair().unwrap();
        for &(t, phi) in &[(1.0, 1.0), (1.3, 0.8), (1.9, 1.7), (2.0, 1.1)] {
            let rj = r.jet(t, phi);
            let zj = z.jet(t, phi);
            let c1 = rj.dx * rj.dy + zj.dx * zj.dy;
            let c2 = rj.dx * rj.dx + zj.dx * zj.dx
                + rj.v * rj.v * (rj.dy * rj.dy + zj.dy * zj.dy)
                - 1.0;
            assert!(c1.abs() < 1e-10, "c1 = {c1}");
            assert!(c2.abs() < 1e-10, "c2 = {c2}");
        }
    }

    #[test]
    fn metadata_shape() {
        let e = entry("eq37").unwrap();
        let m = e.metadata();
        assert_eq!(m["name"], "eq37");
        assert_eq!(m["role"], "tau_of_zeta_R");
        assert_eq!(m["paper_eq"], "eq37");
        assert_eq!(m["parameters"]["c"], 1.0);
        assert_eq!(m["singular_loci"][0], "zeta = 0");
    }
}
