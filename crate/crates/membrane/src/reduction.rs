//! Self-similar reductions of the governing equations and their ODE solvers.
//!
//! Four ansatz families reduce the membrane equations to second-order ODEs
//! for one profile function:
//!
//! * `R = (mu/tau) f(x)`, `x = tau^a' mu^b'` — any real exponents;
//! * `tau = zeta^A T(q)`, `q = zeta^B R` — constrained by `A + 2B + 1 = 0`;
//! * `zeta = -(R^2 / 2 tau) h(z)`, `z = tau^a R^b` — any real exponents;
//! * `r = z g(x)`, `x = t/z`, written through `h = g^2` — the graph profile.
//!
//! The f-profile chain continues through `g(u) = f(e^u)` and `G(g) = g'` to
//! an Abel equation of the second kind and its canonical form. Exponent and
//! coefficient algebra is exact rational; floating point appears only inside
//! the integrators.

use std::io::Write;

use num::{One, Zero};
use serde_json::json;

use crate::catalog::Profile;
use crate::error::{Error, Result};
use crate::jet::Jet1;
use crate::rational::{self, int, rat, sqrt_exact, to_f64, Rat};

// ---------------------------------------------------------------------------
// reduction specs
// ---------------------------------------------------------------------------

/// Selects one similarity family; exponents are exact.
#[derive(Clone, Debug, PartialEq)]
pub enum ReductionSpec {
    FProfile { alpha: Rat, beta: Rat },
    TProfile { a: Rat, b: Rat },
    HProfile { a: Rat, b: Rat },
    GraphProfile,
}

impl ReductionSpec {
    pub fn f_profile(alpha: Rat, beta: Rat) -> ReductionSpec {
        ReductionSpec::FProfile { alpha, beta }
    }

    /// `A + 2B + 1 = 0` is required for the reduction to close.
    pub fn t_profile(a: Rat, b: Rat) -> Result<ReductionSpec> {
        if &a + int(2) * &b + Rat::one() != Rat::zero() {
            return Err(Error::ConstraintViolated(format!(
                "T-profile needs A + 2B + 1 = 0, got A = {}, B = {}",
                rational::format(&a),
                rational::format(&b)
            )));
        }
        Ok(ReductionSpec::TProfile { a, b })
    }

    pub fn h_profile(a: Rat, b: Rat) -> ReductionSpec {
        ReductionSpec::HProfile { a, b }
    }
}

/// One point of a profile: position, value and first derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileState {
    pub x: f64,
    pub value: f64,
    pub derivative: f64,
}

/// Uniform samples of a profile with optional derivative data. Missing
/// derivatives are reconstructed by second-order finite differences.
#[derive(Clone, Debug)]
pub struct ProfileSamples {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Option<Vec<f64>>,
    pub second_derivatives: Option<Vec<f64>>,
}

impl ProfileSamples {
    pub fn from_profile(p: &dyn Profile, interval: (f64, f64), n: usize) -> ProfileSamples {
        let h = (interval.1 - interval.0) / (n - 1) as f64;
        let mut xs = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        let mut dd = Vec::with_capacity(n);
        for k in 0..n {
            let x = interval.0 + h * k as f64;
            let j = p.jet(x);
            xs.push(x);
            values.push(j.v);
            d.push(j.d);
            dd.push(j.dd);
        }
        ProfileSamples { xs, values, derivatives: Some(d), second_derivatives: Some(dd) }
    }

    pub fn spacing(&self) -> f64 {
        if self.xs.len() < 2 {
            0.0
        } else {
            self.xs[1] - self.xs[0]
        }
    }

    /// Jets at every node, finite-differencing whatever derivative data is
    /// missing.
    pub fn jets(&self) -> Result<Vec<Jet1>> {
        let n = self.xs.len();
        if n < 3 {
            return Err(Error::GridTooSmall { need: 3, got: n });
        }
        let h = self.spacing();
        let fd1 = |v: &[f64], k: usize| -> f64 {
            if k == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if k == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * h)
            }
        };
        let fd2 = |v: &[f64], k: usize| -> f64 {
            if k == 0 {
                (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h)
            } else if k == n - 1 {
                (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / (h * h)
            } else {
                (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h * h)
            }
        };
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let d = match &self.derivatives {
                Some(d) => d[k],
                None => fd1(&self.values, k),
            };
            let dd = match (&self.second_derivatives, &self.derivatives) {
                (Some(dd), _) => dd[k],
                (None, Some(d)) => fd1(d, k),
                (None, None) => fd2(&self.values, k),
            };
            out.push(Jet1 { v: self.values[k], d, dd });
        }
        Ok(out)
    }

    /// CSV export with the literal header `x,value,derivative`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,value,derivative")?;
        let jets = self.jets()?;
        for (x, j) in self.xs.iter().zip(&jets) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", x, j.v, j.d)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// ODE kernels
// ---------------------------------------------------------------------------

/// Defect and local scale of the f-profile equation at one point.
pub fn f_profile_defect(alpha: f64, beta: f64, x: f64, j: &Jet1) -> (f64, f64) {
    let lhs = 2.0 * j.v + (alpha * alpha - 3.0 * alpha) * x * j.d + alpha * alpha * x * x * j.dd;
    let rhs = beta * beta * x * x * j.v * j.v * j.dd
        + beta * (3.0 + beta) * x * j.v * j.v * j.d
        + beta * beta * x * x * j.v * j.d * j.d
        + j.v * j.v * j.v;
    (lhs - rhs, lhs.abs() + rhs.abs())
}

/// Same equation after `x -> u = ln x`, `g(u) = f(x)`.
pub fn g_profile_defect(alpha: f64, beta: f64, j: &Jet1) -> (f64, f64) {
    let lhs = 2.0 * j.v - 3.0 * alpha * j.d + alpha * alpha * j.dd;
    let rhs = beta * beta * j.v * j.v * j.dd
        + 3.0 * beta * j.d * j.v * j.v
        + beta * beta * j.v * j.d * j.d
        + j.v * j.v * j.v;
    (lhs - rhs, lhs.abs() + rhs.abs())
}

/// Defect of the T-profile equation at one point.
pub fn t_profile_defect(a: f64, b: f64, q: f64, j: &Jet1) -> (f64, f64) {
    let lhs = a * (a - 1.0) * j.v + b * (2.0 * a + b - 1.0) * j.d * q + b * b * q * q * j.dd;
    let rhs = 2.0 * a * (j.dd * j.v - j.d * j.d)
        + j.d * j.d * j.d / q
        + 2.0 * j.d * a * j.v / q;
    (lhs - rhs, lhs.abs() + rhs.abs())
}

/// Defect of the h-profile equation at one point, in the two-bracket form
/// `u1 = h - a z h'`, `u2 = 2h + b z h'`.
pub fn h_profile_defect(a: f64, b: f64, z: f64, j: &Jet1) -> (f64, f64) {
    let u1 = j.v - a * z * j.d;
    let u2 = 2.0 * j.v + b * z * j.d;
    let u1p = (1.0 - a) * j.d - a * z * j.dd;
    let u2p = (2.0 + b) * j.d + b * z * j.dd;
    let t1 = a * z * u1p - 2.0 * u1;
    let t2 = u1 * (u2 + b * z * u2p);
    let t3 = -u2 * (2.0 * u1 + b * z * u1p);
    let t4 = u2 * (u2 * u2 / 4.0 + u1);
    (t1 + t2 + t3 + t4, t1.abs() + t2.abs() + t3.abs() + t4.abs())
}

/// Defect of the graph profile equation for `h = g^2`.
pub fn graph_profile_defect(x: f64, j: &Jet1) -> (f64, f64) {
    let t1 = (2.0 * j.v * j.dd - j.d * j.d) * (1.0 + j.v - x * x);
    let t2 = -j.d * j.d;
    let t3 = 4.0 * j.v;
    let t4 = (2.0 * j.v - x * j.d).powi(2);
    (t1 + t2 + t3 + t4, t1.abs() + t2.abs() + t3.abs() + t4.abs())
}

fn spec_defect(spec: &ReductionSpec, x: f64, j: &Jet1) -> (f64, f64) {
    match spec {
        ReductionSpec::FProfile { alpha, beta } => {
            f_profile_defect(to_f64(alpha), to_f64(beta), x, j)
        }
        ReductionSpec::TProfile { a, b } => t_profile_defect(to_f64(a), to_f64(b), x, j),
        ReductionSpec::HProfile { a, b } => h_profile_defect(to_f64(a), to_f64(b), x, j),
        ReductionSpec::GraphProfile => graph_profile_defect(x, j),
    }
}

/// Max interior defect (scale-regularized) of the family ODE on a sampled
/// profile.
pub fn ode_residual(spec: &ReductionSpec, profile: &ProfileSamples) -> Result<f64> {
    let jets = profile.jets()?;
    let n = jets.len();
    let mut worst = 0.0f64;
    for k in 1..n - 1 {
        let (d, s) = spec_defect(spec, profile.xs[k], &jets[k]);
        if !d.is_finite() {
            return Err(Error::NonFinite(format!("profile defect at x = {}", profile.xs[k])));
        }
        worst = worst.max(d.abs() / (1.0 + s));
    }
    Ok(worst)
}

/// Solve the family ODE for the second derivative: returns
/// `(f'', leading coefficient)`; a vanishing leading coefficient is a
/// singular point.
fn second_derivative(spec: &ReductionSpec, x: f64, f: f64, p: f64) -> (f64, f64) {
    match spec {
        ReductionSpec::FProfile { alpha, beta } => {
            let (a, b) = (to_f64(alpha), to_f64(beta));
            let lead = x * x * (a * a - b * b * f * f);
            let rest = f * f * f + b * (3.0 + b) * x * f * f * p + b * b * x * x * f * p * p
                - 2.0 * f
                - (a * a - 3.0 * a) * x * p;
            (rest / lead, lead)
        }
        ReductionSpec::TProfile { a, b } => {
            let (a, b) = (to_f64(a), to_f64(b));
            let lead = b * b * x * x - 2.0 * a * f;
            let rest = -2.0 * a * p * p + p * p * p / x + 2.0 * a * p * f / x
                - a * (a - 1.0) * f
                - b * (2.0 * a + b - 1.0) * x * p;
            (rest / lead, lead)
        }
        ReductionSpec::HProfile { a, b } => {
            let (a, b) = (to_f64(a), to_f64(b));
            let u1 = f - a * x * p;
            let u2 = 2.0 * f + b * x * p;
            // split u1', u2' into h''-free parts plus the h'' coefficients
            let u1p0 = (1.0 - a) * p;
            let u2p0 = (2.0 + b) * p;
            let e0 = a * x * u1p0 - 2.0 * u1 + u1 * (u2 + b * x * u2p0)
                - u2 * (2.0 * u1 + b * x * u1p0)
                + u2 * (u2 * u2 / 4.0 + u1);
            let lead = x * x * (-a * a + b * b * u1 + a * b * u2);
            (-e0 / lead, lead)
        }
        ReductionSpec::GraphProfile => {
            let lead = 2.0 * f * (1.0 + f - x * x);
            let rest = p * p * (1.0 + f - x * x) + p * p
                - 4.0 * f
                - (2.0 * f - x * p).powi(2);
            (rest / lead, lead)
        }
    }
}

/// Classical fourth-order integration of the family ODE with dense output at
/// every step. A zero-length interval echoes the initial state. The leading
/// coefficient is monitored; a sign change or near-zero aborts with a
/// singular-point error.
pub fn integrate_profile(
    spec: &ReductionSpec,
    initial: ProfileState,
    interval: (f64, f64),
    step: f64,
) -> Result<ProfileSamples> {
    if (initial.x - interval.0).abs() > 1e-12 * interval.0.abs().max(1.0) {
        return Err(Error::BadArgument(format!(
            "initial state sits at x = {}, interval starts at {}",
            initial.x, interval.0
        )));
    }
    let length = interval.1 - interval.0;
    if length.abs() < 1e-15 {
        return Ok(ProfileSamples {
            xs: vec![initial.x],
            values: vec![initial.value],
            derivatives: Some(vec![initial.derivative]),
            second_derivatives: None,
        });
    }
    if step <= 0.0 {
        return Err(Error::BadArgument("step must be positive".into()));
    }
    let n_steps = (length.abs() / step).ceil().max(1.0) as usize;
    let h = length / n_steps as f64;
    let mut xs = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut derivs = Vec::with_capacity(n_steps + 1);
    let mut x = initial.x;
    let mut f = initial.value;
    let mut p = initial.derivative;
    let lead_scale = second_derivative(spec, x, f, p).1.abs().max(1e-6);
    let mut push = |x: f64, f: f64, p: f64| {
        xs.push(x);
        values.push(f);
        derivs.push(p);
    };
    push(x, f, p);
    for k in 0..n_steps {
        let rhs = |x: f64, f: f64, p: f64| -> Result<(f64, f64)> {
            let (fpp, lead) = second_derivative(spec, x, f, p);
            if lead.abs() < 1e-10 * lead_scale || !fpp.is_finite() {
                return Err(Error::SingularPoint(format!(
                    "leading coefficient {lead:.3e} at x = {x}"
                )));
            }
            Ok((p, fpp))
        };
        let (k1f, k1p) = rhs(x, f, p)?;
        let (k2f, k2p) = rhs(x + h / 2.0, f + h / 2.0 * k1f, p + h / 2.0 * k1p)?;
        let (k3f, k3p) = rhs(x + h / 2.0, f + h / 2.0 * k2f, p + h / 2.0 * k2p)?;
        let (k4f, k4p) = rhs(x + h, f + h * k3f, p + h * k3p)?;
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        x = interval.0 + length * (k + 1) as f64 / n_steps as f64;
        if !f.is_finite() || f.abs() > 1e12 {
            return Err(Error::Blowup(format!("profile value {f:.3e} at x = {x}")));
        }
        push(x, f, p);
    }
    Ok(ProfileSamples { xs, values, derivatives: Some(derivs), second_derivatives: None })
}

// ---------------------------------------------------------------------------
// Abel chain
// ---------------------------------------------------------------------------

/// The coefficient functions of the Abel form of the f-profile chain.
///
/// With `D(g) = alpha'^2 - beta'^2 g^2`, the slope `G(g) = dg/du` obeys
/// `G G' = f2 G^2 + f1 G + f0`, and `w = sqrt(|D|) G` obeys the canonical
/// equation `w w' = sigma (F1 w + F0)` where `sigma` is the sign of `D` on
/// the working interval. For `sigma = +1` this is the textbook canonical
/// form.
pub struct AbelChain {
    pub alpha: f64,
    pub beta: f64,
    /// Sign of `alpha'^2 - beta'^2 g^2`, constant on the admitted interval.
    pub sigma: f64,
}

impl AbelChain {
    /// Build the chain for an f-profile spec, validating that the radicand
    /// is sign-definite on the requested `g` interval.
    pub fn new(spec: &ReductionSpec, g_interval: (f64, f64)) -> Result<AbelChain> {
        let (alpha, beta) = match spec {
            ReductionSpec::FProfile { alpha, beta } => (to_f64(alpha), to_f64(beta)),
            _ => {
                return Err(Error::RoleMismatch(
                    "the Abel chain applies to the f-profile family".into(),
                ))
            }
        };
        let disc = |g: f64| alpha * alpha - beta * beta * g * g;
        // |g| extremes of the interval decide sign-definiteness
        let lo = g_interval.0.abs().min(g_interval.1.abs());
        let hi = g_interval.0.abs().max(g_interval.1.abs());
        let lo = if g_interval.0 <= 0.0 && g_interval.1 >= 0.0 { 0.0 } else { lo };
        let (da, db) = (disc(lo), disc(hi));
        if da == 0.0 || db == 0.0 || da.signum() != db.signum() {
            return Err(Error::SingularPoint(format!(
                "alpha'^2 - beta'^2 g^2 changes sign on [{}, {}]",
                g_interval.0, g_interval.1
            )));
        }
        Ok(AbelChain { alpha, beta, sigma: da.signum() })
    }

    fn disc(&self, g: f64) -> f64 {
        self.alpha * self.alpha - self.beta * self.beta * g * g
    }

    pub fn f2(&self, g: f64) -> f64 {
        self.beta * self.beta * g / self.disc(g)
    }

    pub fn f1(&self, g: f64) -> f64 {
        3.0 * (self.beta * g * g + self.alpha) / self.disc(g)
    }

    pub fn f0(&self, g: f64) -> f64 {
        (g * g * g - 2.0 * g) / self.disc(g)
    }

    /// `F1 = 3 (alpha' + beta' g^2) / sqrt(|D|)`.
    pub fn cap_f1(&self, g: f64) -> f64 {
        3.0 * (self.alpha + self.beta * g * g) / self.disc(g).abs().sqrt()
    }

    /// `F0 = g (g^2 - 2)`.
    pub fn cap_f0(&self, g: f64) -> f64 {
        g * (g * g - 2.0)
    }

    /// Weight of the canonical substitution: `w = weight(g) G`.
    pub fn weight(&self, g: f64) -> f64 {
        self.disc(g).abs().sqrt()
    }

    /// Right side of the canonical equation solved for `dw/dg`.
    pub fn canonical_slope(&self, g: f64, w: f64) -> f64 {
        self.sigma * (self.cap_f1(g) + self.cap_f0(g) / w)
    }

    /// Integrate the canonical equation together with `du/dg = weight / w`,
    /// returning `(g, w, u)` samples. This is the numeric half of the
    /// round-trip check: from `u(g)` and `g` the original profile is
    /// recovered through `x = e^u`, `f = g`.
    pub fn integrate_canonical(
        &self,
        g_interval: (f64, f64),
        w0: f64,
        u0: f64,
        step: f64,
    ) -> Result<Vec<(f64, f64, f64)>> {
        let length = g_interval.1 - g_interval.0;
        let n_steps = (length.abs() / step).ceil().max(1.0) as usize;
        let h = length / n_steps as f64;
        let mut out = Vec::with_capacity(n_steps + 1);
        let (mut g, mut w, mut u) = (g_interval.0, w0, u0);
        out.push((g, w, u));
        for k in 0..n_steps {
            let rhs = |g: f64, w: f64| -> Result<(f64, f64)> {
                if w.abs() < 1e-12 {
                    return Err(Error::SingularPoint(format!("w = 0 near g = {g}")));
                }
                Ok((self.canonical_slope(g, w), self.weight(g) / w))
            };
            let (k1w, k1u) = rhs(g, w)?;
            let (k2w, k2u) = rhs(g + h / 2.0, w + h / 2.0 * k1w)?;
            let (k3w, k3u) = rhs(g + h / 2.0, w + h / 2.0 * k2w)?;
            let (k4w, k4u) = rhs(g + h, w + h * k3w)?;
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            g = g_interval.0 + length * (k + 1) as f64 / n_steps as f64;
            out.push((g, w, u));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// quadratic ansatz families
// ---------------------------------------------------------------------------

/// Which constant term the quadratic ansatz starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzForm {
    /// `h = 1 + d z + e z^2`
    Plus,
    /// `h = -1 + d z + e z^2`
    Minus,
}

/// Constraint satisfied by one coefficient within a family.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Zero,
    Free,
    /// `e = d^2 / 12` with `d` free.
    DSquaredOverTwelve,
}

impl Coefficient {
    fn label(&self) -> String {
        match self {
            Coefficient::Zero => "0".into(),
            Coefficient::Free => "free".into(),
            Coefficient::DSquaredOverTwelve => "d^2/12".into(),
        }
    }
}

/// One solution family of the order-z conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzFamily {
    pub form: AnsatzForm,
    pub a: Rat,
    pub d: Coefficient,
    pub e: Coefficient,
    /// Families that merely shift the degenerate parabola by a constant.
    pub trivial_shift: bool,
}

impl AnsatzFamily {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "form": if self.form == AnsatzForm::Plus { "plus" } else { "minus" },
            "a": rational::format(&self.a),
            "d": self.d.label(),
            "e": self.e.label(),
            "trivial_shift": self.trivial_shift,
        })
    }
}

/// Rational roots of `a^2 + p a + q = 0`, when the discriminant is a perfect
/// square.
fn rational_quadratic_roots(p: &Rat, q: &Rat) -> Option<(Rat, Rat)> {
    let disc = p * p - int(4) * q;
    let s = sqrt_exact(&disc)?;
    let two = int(2);
    Some(((-p + &s) / &two, (-p - &s) / &two))
}

/// Exact solution families of the order-z conditions for the quadratic
/// h-ansatz with `b = -1`.
///
/// Plus form: `d (a^2 - a - 2) = 0`, `2e(1-2a)a + d^2 + 2(d^2/4 + e(1-2a)) = 0`
/// and `d (d^2/4 + e(1-2a)) = 0`. Minus form: `d (a^2 - 5a + 1) = 0`,
/// `d^2/4 = e(1-2a)(a-3)/3` and `d (d^2/4 + e(1-2a)) = 0`.
pub fn ansatz_coefficients(form: AnsatzForm) -> Vec<AnsatzFamily> {
    let mut out = Vec::new();
    match form {
        AnsatzForm::Plus => {
            // d != 0: roots of a^2 - a - 2, filtered by the z^2 condition
            // 2 e (1-2a)(a+1) + 3 d^2 / 2 = 0 with e = d^2 / (4 (2a - 1)).
            let (r1, r2) = rational_quadratic_roots(&int(-1), &int(-2)).expect("square disc");
            for a in [r1, r2] {
                let two_a_minus_1 = int(2) * &a - Rat::one();
                if two_a_minus_1.is_zero() {
                    continue;
                }
                // e (1 - 2a) = -d^2/4; substitute into the z^2 condition:
                // 2 (-d^2/4)(a+1) + 3 d^2/2 = d^2 (3/2 - (a+1)/2) must vanish,
                // so a = 2 survives and a = -1 does not.
                let z2 = rat(3, 2) - (&a + Rat::one()) / int(2);
                if z2.is_zero() {
                    out.push(AnsatzFamily {
                        form,
                        a,
                        d: Coefficient::Free,
                        e: Coefficient::DSquaredOverTwelve,
                        trivial_shift: false,
                    });
                }
            }
            // d = 0, e != 0: 2 e (1 - 2a)(a + 1) = 0
            for a in [int(-1), rat(1, 2)] {
                let shift = a == rat(1, 2);
                out.push(AnsatzFamily {
                    form,
                    a,
                    d: Coefficient::Zero,
                    e: Coefficient::Free,
                    trivial_shift: shift,
                });
            }
        }
        AnsatzForm::Minus => {
            // d != 0 requires rational roots of a^2 - 5a + 1; the
            // discriminant 21 is not a perfect square, and combining the
            // second and third conditions forces a = 0 which contradicts it,
            // so no d != 0 family exists.
            if let Some((r1, r2)) = rational_quadratic_roots(&int(-5), &Rat::one()) {
                // unreachable for this discriminant; keep the filter honest
                for a in [r1, r2] {
                    let third = (&a - int(3)) / int(3) + Rat::one();
                    if third.is_zero() {
                        out.push(AnsatzFamily {
                            form,
                            a,
                            d: Coefficient::Free,
                            e: Coefficient::Free,
                            trivial_shift: false,
                        });
                    }
                }
            }
            // d = 0, e != 0: e (1 - 2a)(a - 3) = 0
            for a in [int(3), rat(1, 2)] {
                let shift = a == rat(1, 2);
                out.push(AnsatzFamily {
                    form,
                    a,
                    d: Coefficient::Zero,
                    e: Coefficient::Free,
                    trivial_shift: shift,
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// separable family
// ---------------------------------------------------------------------------

/// Trajectory of the separable reduction: `D-ddot = 2 D^3` with the first
/// integral `D-dot^2 - D^4 = delta`, together with the linear level shift
/// `zeta1-ddot = 4 D zeta1-dot` seeded by `zeta1 = -C1`, `zeta1-dot = -C2`.
#[derive(Clone, Debug)]
pub struct SeparableSolution {
    pub taus: Vec<f64>,
    pub d: Vec<f64>,
    pub d_dot: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub zeta1_dot: Vec<f64>,
    /// Conserved value `D-dot^2 - D^4` at the initial time.
    pub delta: f64,
    /// Max drift of the first integral along the trajectory.
    pub invariant_drift: f64,
}

pub fn separable_family(
    initial: (f64, f64),
    c1: f64,
    c2: f64,
    interval: (f64, f64),
    step: f64,
) -> Result<SeparableSolution> {
    let (d0, ddot0) = initial;
    let delta = ddot0 * ddot0 - d0.powi(4);
    let length = interval.1 - interval.0;
    let n_steps = (length.abs() / step).ceil().max(1.0) as usize;
    let h = length / n_steps as f64;
    let mut sol = SeparableSolution {
        taus: Vec::with_capacity(n_steps + 1),
        d: Vec::with_capacity(n_steps + 1),
        d_dot: Vec::with_capacity(n_steps + 1),
        zeta1: Vec::with_capacity(n_steps + 1),
        zeta1_dot: Vec::with_capacity(n_steps + 1),
        delta,
        invariant_drift: 0.0,
    };
    // state: (D, D-dot, zeta1, zeta1-dot)
    let mut y = [d0, ddot0, -c1, -c2];
    let mut tau = interval.0;
    let rhs = |y: &[f64; 4]| -> [f64; 4] {
        [y[1], 2.0 * y[0].powi(3), y[3], 4.0 * y[0] * y[3]]
    };
    let mut record = |tau: f64, y: &[f64; 4], drift: &mut f64| {
        sol.taus.push(tau);
        sol.d.push(y[0]);
        sol.d_dot.push(y[1]);
        sol.zeta1.push(y[2]);
        sol.zeta1_dot.push(y[3]);
        *drift = drift.max((y[1] * y[1] - y[0].powi(4) - delta).abs());
    };
    let mut drift = 0.0;
    record(tau, &y, &mut drift);
    for k in 0..n_steps {
        let k1 = rhs(&y);
        let mut y2 = y;
        for i in 0..4 {
            y2[i] = y[i] + h / 2.0 * k1[i];
        }
        let k2 = rhs(&y2);
        for i in 0..4 {
            y2[i] = y[i] + h / 2.0 * k2[i];
        }
        let k3 = rhs(&y2);
        for i in 0..4 {
            y2[i] = y[i] + h * k3[i];
        }
        let k4 = rhs(&y2);
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        tau = interval.0 + length * (k + 1) as f64 / n_steps as f64;
        if !y[0].is_finite() || y[0].abs() > 1e8 {
            return Err(Error::Blowup(format!(
                "separable profile D = {:.3e} at tau = {tau}",
                y[0]
            )));
        }
        record(tau, &y, &mut drift);
    }
    sol.invariant_drift = drift;
    Ok(sol)
}

impl SeparableSolution {
    fn spacing(&self) -> f64 {
        self.taus[1] - self.taus[0]
    }

    /// Cubic Hermite interpolation of a table with known derivatives.
    fn hermite(&self, v: &[f64], dv: &[f64], tau: f64) -> (f64, f64) {
        let h = self.spacing();
        let t0 = self.taus[0];
        let k = (((tau - t0) / h).floor() as isize).clamp(0, v.len() as isize - 2) as usize;
        let s = (tau - (t0 + h * k as f64)) / h;
        let (v0, v1, m0, m1) = (v[k], v[k + 1], dv[k] * h, dv[k + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let value = h00 * v0 + h10 * m0 + h01 * v1 + h11 * m1;
        let dh00 = 6.0 * s * (s - 1.0);
        let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        let dh01 = -dh00;
        let dh11 = s * (3.0 * s - 2.0);
        let deriv = (dh00 * v0 + dh10 * m0 + dh01 * v1 + dh11 * m1) / h;
        (value, deriv)
    }

    /// `D(tau)` and its derivative.
    pub fn d_at(&self, tau: f64) -> (f64, f64) {
        self.hermite(&self.d, &self.d_dot, tau)
    }

    /// `zeta1(tau)` and its derivative.
    pub fn zeta1_at(&self, tau: f64) -> (f64, f64) {
        self.hermite(&self.zeta1, &self.zeta1_dot, tau)
    }

    /// The level surface `zeta(tau, R) = R^2 D / 2 + zeta1` with analytic
    /// partials; second tau-derivatives use the governing equations.
    pub fn surface(self) -> impl crate::catalog::Surface {
        move |tau: f64, r: f64| -> crate::jet::Jet2 {
            let (d, d_dot) = self.d_at(tau);
            let (_z1, z1_dot) = self.zeta1_at(tau);
            let z1 = _z1;
            crate::jet::Jet2 {
                v: r * r * d / 2.0 + z1,
                dx: r * r * d_dot / 2.0 + z1_dot,
                dy: r * d,
                dxx: r * r * d * d * d + 4.0 * d * z1_dot,
                dxy: r * d_dot,
                dyy: d,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// linear-part exponent conditions
// ---------------------------------------------------------------------------

/// Sign choice in the split `g = ±tau zeta + f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitSign {
    Plus,
    Minus,
}

/// Exact roots of the single-variable exponent condition
/// `a^2 + a(-3 ∓ 4) + 2(1 ± 2) = 0` for `f = tau^a` (or `zeta^a`).
pub fn linear_part_exponents(sign: SplitSign) -> (Rat, Rat) {
    let (p, q) = match sign {
        SplitSign::Plus => (int(-7), int(6)),
        SplitSign::Minus => (int(1), int(-2)),
    };
    rational_quadratic_roots(&p, &q).expect("both discriminants are perfect squares")
}

/// Exact two-variable predicate
/// `a^2 + b^2 + 2ab(±2 - 1) + (a + b)(-3 ∓ 4) + 2(1 ± 2) = 0`
/// for the mixed monomial `f = tau^a zeta^b`.
pub fn linear_part_condition(sign: SplitSign, a: &Rat, b: &Rat) -> bool {
    let (cross, lin, con) = match sign {
        SplitSign::Plus => (int(1), int(-7), int(6)),
        SplitSign::Minus => (int(-3), int(1), int(-2)),
    };
    a * a + b * b + int(2) * a * b * cross + (a + b) * lin + con == Rat::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SQRT2;
    use proptest::prelude::*;

    fn analytic_samples(
        f: impl Fn(f64) -> Jet1 + Sync + Send,
        interval: (f64, f64),
        n: usize,
    ) -> ProfileSamples {
        ProfileSamples::from_profile(&f, interval, n)
    }

    #[test]
    fn f_profile_solutions_from_the_level_set_radii() {
        // R = sqrt(2) sqrt(mu^2 + eps)/tau is f(x) = sqrt(2) sqrt(1 + eps x)
        // with x = mu^{-2}.
        let eps = 0.5;
        let spec = ReductionSpec::f_profile(int(0), int(-2));
        let prof = analytic_samples(
            move |x| ((Jet1::var(x) * eps) + 1.0).sqrt() * SQRT2,
            (0.25, 1.0),
            257,
        );
        assert!(ode_residual(&spec, &prof).unwrap() <= 1e-10);
        // R = sqrt(2) mu/tau + eps tau^2 is f(x) = sqrt(2) + eps x with
        // x = tau^3 / mu.
        let eps = 0.3;
        let spec = ReductionSpec::f_profile(int(3), int(-1));
        let prof =
            analytic_samples(move |x| Jet1::var(x) * eps + SQRT2, (0.5, 4.0), 257);
        assert!(ode_residual(&spec, &prof).unwrap() <= 1e-12);
    }

    #[test]
    fn t_profile_simple_solutions() {
        let c = 1.7;
        let spec = ReductionSpec::t_profile(int(-3), int(1)).unwrap();
        let prof = analytic_samples(
            move |q| -(Jet1::var(q) * Jet1::var(q)) * 0.5 + c / 2.0,
            (0.5, 2.0),
            129,
        );
        assert!(ode_residual(&spec, &prof).unwrap() <= 1e-12);
        let spec = ReductionSpec::t_profile(int(5), int(-3)).unwrap();
        let prof = analytic_samples(
            move |q| (Jet1::var(q) * Jet1::var(q)) * 0.5 + c / 2.0,
            (0.5, 2.0),
            129,
        );
        assert!(ode_residual(&spec, &prof).unwrap() <= 1e-12);
        // the closure constraint is enforced
        assert!(ReductionSpec::t_profile(int(1), int(1)).is_err());
    }

    #[test]
    fn h_profile_quadratic_solution() {
        let d = 0.8;
        let spec = ReductionSpec::h_profile(int(2), int(-1));
        let prof = analytic_samples(
            move |z| {
                let zj = Jet1::var(z);
                zj * zj * (d * d / 12.0) + zj * d + 1.0
            },
            (0.1, 2.0),
            129,
        );
        assert!(ode_residual(&spec, &prof).unwrap() <= 1e-12);
    }

    #[test]
    fn graph_profile_solution_and_integration() {
        let spec = ReductionSpec::GraphProfile;
        let prof = analytic_samples(
            |x| {
                let xj = Jet1::var(x);
                -(xj * xj) + 1.0
            },
            (-0.9, 0.9),
            129,
        );
        assert!(ode_residual(&spec, &prof).unwrap() <= 1e-13);
        // integrating from h(0) = 1, h'(0) = 0 reproduces 1 - x^2
        let integ = integrate_profile(
            &spec,
            ProfileState { x: 0.0, value: 1.0, derivative: 0.0 },
            (0.0, 0.9),
            1e-3,
        )
        .unwrap();
        let mut worst = 0.0f64;
        for (x, v) in integ.xs.iter().zip(&integ.values) {
            worst = worst.max((v - (1.0 - x * x)).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn zero_length_interval_echoes_initial_state() {
        let spec = ReductionSpec::GraphProfile;
        let init = ProfileState { x: 0.2, value: 0.96, derivative: -0.4 };
        let out = integrate_profile(&spec, init, (0.2, 0.2), 1e-3).unwrap();
        assert_eq!(out.xs, vec![0.2]);
        assert_eq!(out.values, vec![0.96]);
        assert_eq!(out.derivatives.as_ref().unwrap(), &vec![-0.4]);
    }

    #[test]
    fn integrator_is_fourth_order() {
        // error against the known parabola under step halving
        let spec = ReductionSpec::GraphProfile;
        let err = |step: f64| -> f64 {
            let out = integrate_profile(
                &spec,
                ProfileState { x: 0.0, value: 1.0, derivative: 0.0 },
                (0.0, 0.8),
                step,
            )
            .unwrap();
            let n = out.xs.len() - 1;
            (out.values[n] - (1.0 - 0.8 * 0.8)).abs()
        };
        let ratio = err(0.2) / err(0.1);
        assert!((11.0..21.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn singular_leading_coefficient_is_detected() {
        // the graph equation degenerates where 1 + h - x^2 = 0; h = 1 - x^2
        // from x = 0 hits it at x = 1
        let spec = ReductionSpec::GraphProfile;
        let out = integrate_profile(
            &spec,
            ProfileState { x: 0.0, value: 1.0, derivative: 0.0 },
            (0.0, 1.05),
            1e-3,
        );
        assert!(matches!(out, Err(Error::SingularPoint(_))));
    }

    #[test]
    fn abel_coefficients() {
        // F0 vanishes at g = sqrt(2) regardless of the spec
        let chain =
            AbelChain::new(&ReductionSpec::f_profile(int(3), int(-1)), (0.5, 2.0)).unwrap();
        assert!(chain.cap_f0(SQRT2).abs() < 1e-15);
        assert_eq!(chain.sigma, 1.0);
        // beta' = 0 gives constant F1 = 3 sign(alpha')
        let chain =
            AbelChain::new(&ReductionSpec::f_profile(int(-2), int(0)), (0.5, 2.0)).unwrap();
        for g in [0.6, 1.0, 1.9] {
            assert!((chain.cap_f1(g) + 3.0).abs() < 1e-14);
        }
        // sign change of the radicand is rejected
        assert!(AbelChain::new(&ReductionSpec::f_profile(int(1), int(-1)), (0.5, 2.0)).is_err());
    }

    #[test]
    fn canonical_weight_relates_the_two_abel_forms() {
        // On trajectories of the slope equation, w = sqrt(|D|) G satisfies
        // the canonical equation; check the algebraic relation pointwise for
        // the analytic chain of f = sqrt(2) sqrt(1 + x).
        let spec = ReductionSpec::f_profile(int(0), int(-2));
        let chain = AbelChain::new(&spec, (3f64.sqrt(), 6f64.sqrt())).unwrap();
        assert_eq!(chain.sigma, -1.0);
        for g in [1.8, 2.0, 2.3] {
            // G(g) = (g^2 - 2) / (2 g), w = 2g G = g^2 - 2
            let cap_g = (g * g - 2.0) / (2.0 * g);
            let w = chain.weight(g) * cap_g;
            assert!((w - (g * g - 2.0)).abs() < 1e-12);
            // dw/dg = 2g must match the canonical slope
            assert!((chain.canonical_slope(g, w) - 2.0 * g).abs() < 1e-12);
            // and the Abel-form coefficients reproduce G G' directly:
            // G'(g) = (g^2 + 2) / (2 g^2)
            let cap_gp = (g * g + 2.0) / (2.0 * g * g);
            let lhs = cap_g * cap_gp;
            let rhs = chain.f2(g) * cap_g * cap_g + chain.f1(g) * cap_g + chain.f0(g);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn abel_round_trip_recovers_the_profile() {
        // integrate the canonical form from initial data of
        // f(x) = sqrt(2) sqrt(1 + x) and map back through w -> G -> g -> f.
        let spec = ReductionSpec::f_profile(int(0), int(-2));
        let (ga, gb) = ((SQRT2 * 1.5f64.sqrt()) as f64, (SQRT2 * 3f64.sqrt()) as f64);
        let chain = AbelChain::new(&spec, (ga, gb)).unwrap();
        let w0 = ga * ga - 2.0; // from the analytic slope at x = 0.5
        let u0 = 0.5f64.ln();
        let samples = chain.integrate_canonical((ga, gb), w0, u0, 1e-4).unwrap();
        let mut worst = 0.0f64;
        for (g, _w, u) in samples {
            let x = u.exp();
            let f_analytic = SQRT2 * (1.0 + x).sqrt();
            worst = worst.max((g - f_analytic).abs());
        }
        assert!(worst <= 1e-6, "round trip defect {worst}");
    }

    #[test]
    fn ansatz_families_match_the_expected_set() {
        let plus = ansatz_coefficients(AnsatzForm::Plus);
        assert_eq!(plus.len(), 3);
        assert_eq!(plus[0].a, int(2));
        assert_eq!(plus[0].d, Coefficient::Free);
        assert_eq!(plus[0].e, Coefficient::DSquaredOverTwelve);
        assert!(!plus[0].trivial_shift);
        assert_eq!(plus[1].a, int(-1));
        assert_eq!(plus[1].d, Coefficient::Zero);
        assert!(!plus[1].trivial_shift);
        assert_eq!(plus[2].a, rat(1, 2));
        assert!(plus[2].trivial_shift);

        let minus = ansatz_coefficients(AnsatzForm::Minus);
        assert_eq!(minus.len(), 2);
        assert_eq!(minus[0].a, int(3));
        assert_eq!(minus[0].d, Coefficient::Zero);
        assert!(!minus[0].trivial_shift);
        assert_eq!(minus[1].a, rat(1, 2));
        assert!(minus[1].trivial_shift);
    }

    #[test]
    fn separable_rational_branch_matches_closed_form() {
        // delta = 0: D = -1/(tau - 3) from D(1) = 1/2, D-dot(1) = 1/4
        let sol = separable_family((0.5, 0.25), 0.0, 0.0, (1.0, 2.0), 1e-3).unwrap();
        assert!(sol.delta.abs() < 1e-15);
        let mut worst = 0.0f64;
        for (tau, d) in sol.taus.iter().zip(&sol.d) {
            worst = worst.max((d + 1.0 / (tau - 3.0)).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
        // dense output between nodes too
        let (d, _) = sol.d_at(1.4142);
        assert!((d + 1.0 / (1.4142 - 3.0)).abs() < 1e-8);
    }

    #[test]
    fn separable_invariant_is_conserved() {
        let sol = separable_family((0.5, 0.5), 1.0, 1.0, (1.0, 2.0), 1e-3).unwrap();
        assert!((sol.delta - (0.25 - 0.0625)).abs() < 1e-15);
        assert!(sol.invariant_drift <= 1e-9, "{}", sol.invariant_drift);
    }

    #[test]
    fn separable_blowup_is_detected() {
        // D = -1/(tau - 1.5) from tau = 1 blows up inside the interval
        let res = separable_family((2.0, 4.0), 0.0, 0.0, (1.0, 2.0), 1e-3);
        assert!(matches!(res, Err(Error::Blowup(_))));
    }

    #[test]
    fn separable_surface_passes_the_level_equation_gate() {
        use crate::catalog::Surface;
        use crate::grid::{Axis, Grid2};
        use crate::residual::{residual_surface, EquationId};
        let sol = separable_family((0.5, 0.25), 1.0, 1.0, (1.0, 2.0), 1e-3).unwrap();
        let surf = sol.surface();
        let grid = Grid2::from_ranges(Axis::Tau, (1.0, 2.0, 65), Axis::R, (1.0, 2.0, 65)).unwrap();
        let rep = residual_surface(EquationId::Eq33Zeta, &surf, None, &grid).unwrap();
        assert!(rep.max_residual <= 1e-8, "{}", rep.max_residual);
        // Seeding the shift with the closed-form entry's own initial values
        // (its quadrature constant is normalized at tau0, not at the left
        // endpoint) reproduces that entry.
        let e = crate::catalog::entry("eq51-general").unwrap();
        let exact = e.surface().unwrap();
        let c1_eff = 1.0 + 1.0 / 24.0; // -zeta1(1) for tau0 = 3, C1 = C2 = 1
        let c2_eff = 1.0 / 16.0; // -zeta1-dot(1)
        let sol = separable_family((0.5, 0.25), c1_eff, c2_eff, (1.0, 2.0), 1e-3).unwrap();
        let surf = sol.surface();
        let mut worst = 0.0f64;
        for &(tau, r) in &[(1.0, 1.0), (1.5, 1.3), (2.0, 2.0)] {
            worst = worst.max((surf.jet(tau, r).v - exact.value(tau, r)).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn exponent_conditions() {
        let (hi, lo) = linear_part_exponents(SplitSign::Plus);
        assert_eq!((hi, lo), (int(6), int(1)));
        let (hi, lo) = linear_part_exponents(SplitSign::Minus);
        assert_eq!((hi, lo), (int(1), int(-2)));
        // single-variable roots satisfy the two-variable predicate at b = 0
        assert!(linear_part_condition(SplitSign::Plus, &int(1), &int(0)));
        assert!(linear_part_condition(SplitSign::Plus, &int(6), &int(0)));
        assert!(linear_part_condition(SplitSign::Minus, &int(0), &int(-2)));
        assert!(!linear_part_condition(SplitSign::Plus, &int(2), &int(0)));
        // the mixed solution behind the s-form of the rational level set:
        // a = 0, b = -2 with the minus split
        assert!(linear_part_condition(SplitSign::Minus, &int(0), &int(-2)));
    }

    proptest! {
        #[test]
        fn chain_equivalence_between_x_and_u_forms(
            c0 in 0.5f64..2.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0,
            an in -3i64..4, bn in -3i64..4, x in 0.5f64..2.0,
        ) {
            // an arbitrary smooth test profile, not a solution: the defect
            // of the x-form at x equals the defect of the u-form at ln x.
            let f = move |x: f64| {
                let xj = Jet1::var(x);
                xj * xj * c2 + xj * c1 + c0
            };
            let (alpha, beta) = (an as f64, bn as f64);
            let jx = f(x);
            let (dx, _) = f_profile_defect(alpha, beta, x, &jx);
            // g(u) = f(e^u): g' = x f', g'' = x^2 f'' + x f'
            let jg = Jet1 { v: jx.v, d: x * jx.d, dd: x * x * jx.dd + x * jx.d };
            let (du, _) = g_profile_defect(alpha, beta, &jg);
            prop_assert!((dx - du).abs() <= 1e-8 * (1.0 + dx.abs()));
        }
    }
}
