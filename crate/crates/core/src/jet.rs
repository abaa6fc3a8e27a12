//! Truncated Taylor arithmetic in one or two variables.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α` of a function around a base
//! point, truncated at total degree `order`. Arithmetic and the elementary
//! functions propagate the coefficients exactly (up to rounding), so partial
//! derivatives `D^α f = α! c_α` come out without finite-difference noise.
//! Univariate jets double as power series in a single parameter.

use smallvec::SmallVec;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Largest supported order for univariate series.
pub const MAX_SERIES_ORDER: usize = 24;
/// Largest supported order for bivariate jets.
pub const MAX_JET_ORDER: usize = 10;

type Coeffs = SmallVec<[f64; 16]>;

/// Monomial layout and multiplication table for one (nvars, order) pair.
pub struct Shape {
    nvars: usize,
    order: usize,
    exps: Vec<[u8; 2]>,
    mul: Vec<(u16, u16, u16)>,
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Shape(nvars={}, order={})", self.nvars, self.order)
    }
}

fn monomial_index(nvars: usize, e: [usize; 2]) -> usize {
    if nvars == 1 {
        e[0]
    } else {
        let d = e[0] + e[1];
        d * (d + 1) / 2 + e[1]
    }
}

impl Shape {
    fn build(nvars: usize, order: usize) -> Shape {
        let mut exps = Vec::new();
        if nvars == 1 {
            for i in 0..=order {
                exps.push([i as u8, 0]);
            }
        } else {
            for d in 0..=order {
                for j in 0..=d {
                    exps.push([(d - j) as u8, j as u8]);
                }
            }
        }
        let mut mul = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            for (b, eb) in exps.iter().enumerate() {
                let e = [(ea[0] + eb[0]) as usize, (ea[1] + eb[1]) as usize];
                if e[0] + e[1] <= order {
                    mul.push((a as u16, b as u16, monomial_index(nvars, e) as u16));
                }
            }
        }
        Shape { nvars, order, exps, mul }
    }

    fn len(&self) -> usize {
        self.exps.len()
    }
}

fn shapes() -> &'static [Vec<Shape>; 2] {
    static SHAPES: OnceLock<[Vec<Shape>; 2]> = OnceLock::new();
    SHAPES.get_or_init(|| {
        [
            (0..=MAX_SERIES_ORDER).map(|k| Shape::build(1, k)).collect(),
            (0..=MAX_JET_ORDER).map(|k| Shape::build(2, k)).collect(),
        ]
    })
}

fn shape(nvars: usize, order: usize) -> &'static Shape {
    assert!(nvars == 1 || nvars == 2, "jets support one or two variables");
    let table = &shapes()[nvars - 1];
    assert!(order < table.len(), "jet order {order} exceeds supported maximum");
    &table[order]
}

/// Scalar types the expression evaluator and the spectral routines run on.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant with the same shape as `self`.
    fn lift(&self, c: f64) -> Self;
    /// Value at the base point.
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn recip(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn powi(&self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

/// Truncated multivariate Taylor polynomial.
#[derive(Clone)]
pub struct Jet {
    shape: &'static Shape,
    c: Coeffs,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet[{}v,o{}]{:?}", self.shape.nvars, self.shape.order, &self.c[..])
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.shape, other.shape) && self.c == other.c
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl Jet {
    /// Constant jet.
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        let shape = shape(nvars, order);
        let mut c: Coeffs = SmallVec::from_elem(0.0, shape.len());
        c[0] = value;
        Jet { shape, c }
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, value: f64, var: usize) -> Jet {
        assert!(var < nvars);
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            let e = if var == 0 { [1, 0] } else { [0, 1] };
            j.c[monomial_index(nvars, e)] = 1.0;
        }
        j
    }

    /// Both coordinate functions of the plane, expanded around `x`.
    pub fn plane_variables(x: [f64; 2], order: usize) -> [Jet; 2] {
        [Jet::variable(2, order, x[0], 0), Jet::variable(2, order, x[1], 1)]
    }

    /// Build a jet from coefficients in the internal graded order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: &[f64]) -> Jet {
        let shape = shape(nvars, order);
        assert_eq!(coeffs.len(), shape.len(), "coefficient count mismatch");
        Jet { shape, c: SmallVec::from_slice(coeffs) }
    }

    /// Power series with the given coefficients `c_0 … c_order`.
    pub fn series(coeffs: &[f64]) -> Jet {
        assert!(!coeffs.is_empty());
        Jet::from_coeffs(1, coeffs.len() - 1, coeffs)
    }

    pub fn nvars(&self) -> usize {
        self.shape.nvars
    }

    pub fn order(&self) -> usize {
        self.shape.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient of the monomial with exponents `e`.
    pub fn coeff(&self, e: [usize; 2]) -> f64 {
        let (e, deg) = self.normalize_exponent(e);
        if deg > self.order() {
            0.0
        } else {
            self.c[monomial_index(self.nvars(), e)]
        }
    }

    /// Partial derivative `∂^e f` at the base point.
    pub fn derivative(&self, e: [usize; 2]) -> f64 {
        let (e, _) = self.normalize_exponent(e);
        self.coeff(e) * factorial(e[0]) * factorial(e[1])
    }

    fn normalize_exponent(&self, e: [usize; 2]) -> ([usize; 2], usize) {
        if self.nvars() == 1 {
            assert_eq!(e[1], 0, "univariate jet has no second variable");
        }
        (e, e[0] + e[1])
    }

    /// Jet of the partial derivative with respect to `var`, one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let nv = self.nvars();
        let target = shape(nv, self.order() - 1);
        let mut c: Coeffs = SmallVec::from_elem(0.0, target.len());
        for (k, e) in target.exps.iter().enumerate() {
            let mut src = [e[0] as usize, e[1] as usize];
            src[var] += 1;
            c[k] = self.c[monomial_index(nv, src)] * src[var] as f64;
        }
        Jet { shape: target, c }
    }

    /// Drop all terms above total degree `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let target = shape(self.nvars(), order);
        Jet { shape: target, c: SmallVec::from_slice(&self.c[..target.len()]) }
    }

    /// Multiply every coefficient by `s`.
    pub fn scale(&self, s: f64) -> Jet {
        Jet { shape: self.shape, c: self.c.iter().map(|v| v * s).collect() }
    }

    /// Evaluate the truncated polynomial at an offset `h` from the base point.
    pub fn eval_offset(&self, h: [f64; 2]) -> f64 {
        self.shape
            .exps
            .iter()
            .zip(self.c.iter())
            .map(|(e, c)| c * h[0].powi(e[0] as i32) * h[1].powi(e[1] as i32))
            .sum()
    }

    /// Substitute power series for the offsets from the base point.
    ///
    /// `deltas` holds one univariate series per variable, each with zero
    /// constant term; the result is a series of the same order as the deltas.
    pub fn compose(&self, deltas: &[Jet]) -> Jet {
        assert_eq!(deltas.len(), self.nvars());
        let n = deltas[0].order();
        for d in deltas {
            assert_eq!(d.nvars(), 1);
            assert_eq!(d.order(), n);
        }
        let top = self.order();
        let powers: Vec<Vec<Jet>> = deltas
            .iter()
            .map(|d| {
                let mut p = vec![Jet::constant(1, n, 1.0)];
                for k in 1..=top {
                    let next = &p[k - 1] * d;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Jet::constant(1, n, 0.0);
        for (k, e) in self.shape.exps.iter().enumerate() {
            let c = self.c[k];
            if c == 0.0 {
                continue;
            }
            let term = if self.nvars() == 1 {
                powers[0][e[0] as usize].scale(c)
            } else {
                (&powers[0][e[0] as usize] * &powers[1][e[1] as usize]).scale(c)
            };
            out = &out + &term;
        }
        out
    }

    /// Term-wise antiderivative of a series with zero constant term, keeping the order.
    pub fn integrate_series(&self) -> Jet {
        assert_eq!(self.nvars(), 1);
        let n = self.order();
        let mut c: Coeffs = SmallVec::from_elem(0.0, n + 1);
        for k in 0..n {
            c[k + 1] = self.c[k] / (k + 1) as f64;
        }
        Jet { shape: self.shape, c }
    }

    /// Apply a function given its Taylor coefficients `f^(k)(a)/k!` at the base value `a`.
    fn compose_scalar(&self, taylor: &[f64]) -> Jet {
        let n = self.order();
        debug_assert_eq!(taylor.len(), n + 1);
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut r = Jet::constant(self.nvars(), n, taylor[n]);
        for k in (0..n).rev() {
            r = &r * &h;
            r.c[0] += taylor[k];
        }
        r
    }

    fn binomial_taylor(&self, p: f64) -> Jet {
        let a = self.c[0];
        let n = self.order();
        let integer = p.fract() == 0.0 && p.abs() < 1e9;
        let mut t = Vec::with_capacity(n + 1);
        let mut coef = 1.0;
        for k in 0..=n {
            let pw = if integer { a.powi((p as i64 - k as i64) as i32) } else { a.powf(p - k as f64) };
            t.push(if coef == 0.0 { 0.0 } else { coef * pw });
            coef *= (p - k as f64) / (k + 1) as f64;
        }
        self.compose_scalar(&t)
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(self.nvars(), self.order(), c)
    }
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn sin(&self) -> Self {
        let a = self.c[0];
        let (s, c) = a.sin_cos();
        let cyc = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.order()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose_scalar(&t)
    }
    fn cos(&self) -> Self {
        let a = self.c[0];
        let (s, c) = a.sin_cos();
        let cyc = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.order()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose_scalar(&t)
    }
    fn exp(&self) -> Self {
        let e = self.c[0].exp();
        let t: Vec<f64> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        self.compose_scalar(&t)
    }
    fn ln(&self) -> Self {
        let a = self.c[0];
        let t: Vec<f64> = (0..=self.order())
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        self.compose_scalar(&t)
    }
    fn sqrt(&self) -> Self {
        self.binomial_taylor(0.5)
    }
    fn recip(&self) -> Self {
        self.binomial_taylor(-1.0)
    }
    fn powf(&self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            self.powi(p as i32)
        } else {
            self.binomial_taylor(p)
        }
    }
    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

fn check_same(a: &Jet, b: &Jet) {
    assert!(
        std::ptr::eq(a.shape, b.shape),
        "jet shape mismatch: {:?} vs {:?}",
        a.shape,
        b.shape
    );
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        check_same(self, rhs);
        Jet { shape: self.shape, c: self.c.iter().zip(rhs.c.iter()).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        check_same(self, rhs);
        Jet { shape: self.shape, c: self.c.iter().zip(rhs.c.iter()).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        check_same(self, rhs);
        let mut c: Coeffs = SmallVec::from_elem(0.0, self.c.len());
        for &(a, b, k) in &self.shape.mul {
            c[k as usize] += self.c[a as usize] * rhs.c[b as usize];
        }
        Jet { shape: self.shape, c }
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn div(self, rhs: &'a Jet) -> Jet {
        self * &rhs.recip()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &'a Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}
