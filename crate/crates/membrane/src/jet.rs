//! Second-order jets: a value together with its first and second partial
//! derivatives, propagated through arithmetic.
//!
//! Every closed-form solution in the catalog is written once, in jet
//! arithmetic, and gets consistent analytic partials for free. `Jet2` carries
//! the full second-order jet in two variables, `Jet1` the analogue in one.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar function of two variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Jet2 { v, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    /// The first coordinate as a jet.
    pub const fn var_x(v: f64) -> Self {
        Jet2 { v, dx: 1.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    /// The second coordinate as a jet.
    pub const fn var_y(v: f64) -> Self {
        Jet2 { v, dx: 0.0, dy: 1.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.dx.is_finite()
            && self.dy.is_finite()
            && self.dxx.is_finite()
            && self.dxy.is_finite()
            && self.dyy.is_finite()
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.v`.
    pub fn chain(self, f: f64, fp: f64, fpp: f64) -> Self {
        Jet2 {
            v: f,
            dx: fp * self.dx,
            dy: fp * self.dy,
            dxx: fpp * self.dx * self.dx + fp * self.dxx,
            dxy: fpp * self.dx * self.dy + fp * self.dxy,
            dyy: fpp * self.dy * self.dy + fp * self.dyy,
        }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powi(self, n: i32) -> Self {
        let f = self.v.powi(n);
        let fp = f64::from(n) * self.v.powi(n - 1);
        let fpp = f64::from(n) * f64::from(n - 1) * self.v.powi(n - 2);
        self.chain(f, fp, fpp)
    }

    /// Real power; requires a positive base.
    pub fn powf(self, p: f64) -> Self {
        let f = self.v.powf(p);
        let fp = p * self.v.powf(p - 1.0);
        let fpp = p * (p - 1.0) * self.v.powf(p - 2.0);
        self.chain(f, fp, fpp)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            dx: -self.dx,
            dy: -self.dy,
            dxx: -self.dxx,
            dxy: -self.dxy,
            dyy: -self.dyy,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, c: f64) -> Jet2 {
        Jet2 { v: self.v + c, ..self }
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, c: f64) -> Jet2 {
        Jet2 { v: self.v - c, ..self }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        Jet2 {
            v: c * self.v,
            dx: c * self.dx,
            dy: c * self.dy,
            dxx: c * self.dxx,
            dxy: c * self.dxy,
            dyy: c * self.dyy,
        }
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    fn div(self, c: f64) -> Jet2 {
        self * (1.0 / c)
    }
}

impl Div<Jet2> for f64 {
    type Output = Jet2;
    fn div(self, j: Jet2) -> Jet2 {
        j.recip() * self
    }
}

/// Value and first two derivatives of a function of one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet1 {
    pub const fn constant(v: f64) -> Self {
        Jet1 { v, d: 0.0, dd: 0.0 }
    }

    pub const fn var(v: f64) -> Self {
        Jet1 { v, d: 1.0, dd: 0.0 }
    }

    pub fn chain(self, f: f64, fp: f64, fpp: f64) -> Self {
        Jet1 {
            v: f,
            d: fp * self.d,
            dd: fpp * self.d * self.d + fp * self.dd,
        }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powi(self, n: i32) -> Self {
        let f = self.v.powi(n);
        let fp = f64::from(n) * self.v.powi(n - 1);
        let fpp = f64::from(n) * f64::from(n - 1) * self.v.powi(n - 2);
        self.chain(f, fp, fpp)
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(self, o: Jet1) -> Jet1 {
        Jet1 { v: self.v + o.v, d: self.d + o.d, dd: self.dd + o.dd }
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(self, o: Jet1) -> Jet1 {
        Jet1 { v: self.v - o.v, d: self.d - o.d, dd: self.dd - o.dd }
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        Jet1 { v: -self.v, d: -self.d, dd: -self.dd }
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, o: Jet1) -> Jet1 {
        Jet1 {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
            dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, o: Jet1) -> Jet1 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet1 {
    type Output = Jet1;
    fn mul(self, c: f64) -> Jet1 {
        Jet1 { v: c * self.v, d: c * self.d, dd: c * self.dd }
    }
}

impl Mul<Jet1> for f64 {
    type Output = Jet1;
    fn mul(self, j: Jet1) -> Jet1 {
        j * self
    }
}

impl Add<f64> for Jet1 {
    type Output = Jet1;
    fn add(self, c: f64) -> Jet1 {
        Jet1 { v: self.v + c, ..self }
    }
}

impl Sub<f64> for Jet1 {
    type Output = Jet1;
    fn sub(self, c: f64) -> Jet1 {
        Jet1 { v: self.v - c, ..self }
    }
}
