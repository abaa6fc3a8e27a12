//! Analytic initial data: density and velocity fields with exact derivative
//! jets, pointwise spectral frames of the velocity Jacobian, and the search
//! for the generic blow-up point.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, Scalar, MAX_JET_ORDER};
use nalgebra::{Matrix2, SymmetricEigen, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// `a × b` for plane vectors.
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counter-clockwise quarter turn.
pub fn perp(a: &Vec2) -> Vec2 {
    Vec2::new(-a.y, a.x)
}

/// Scalar field given by a closed-form expression.
#[derive(Clone, Debug)]
pub struct AnalyticScalarField {
    source: String,
    expr: Expr,
    /// Reference point for Taylor data reported by the field.
    pub base_point: [f64; 2],
    /// Largest derivative order served by [`AnalyticScalarField::jet`].
    pub jet_order: usize,
}

impl AnalyticScalarField {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(AnalyticScalarField {
            source: src.trim().to_string(),
            expr: Expr::parse(src)?,
            base_point: [0.0, 0.0],
            jet_order: MAX_JET_ORDER,
        })
    }

    pub fn constant(c: f64) -> Self {
        AnalyticScalarField {
            source: format!("{c}"),
            expr: Expr::Const(c),
            base_point: [0.0, 0.0],
            jet_order: MAX_JET_ORDER,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.expr.eval(&x)
    }

    pub fn at(&self, x: &Vec2) -> f64 {
        self.value([x.x, x.y])
    }

    /// Taylor jet around `x` to the given order.
    pub fn jet(&self, x: [f64; 2], order: usize) -> Jet {
        self.expr.eval(&Jet::plane_variables(x, order))
    }

    pub fn gradient(&self, x: &Vec2) -> Vec2 {
        let j = self.jet([x.x, x.y], 1);
        Vec2::new(j.derivative([1, 0]), j.derivative([0, 1]))
    }
}

/// Closed disc where the hypotheses on the data are asserted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 2], radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, x: &Vec2) -> bool {
        let dx = x.x - self.center[0];
        let dy = x.y - self.center[1];
        (dx * dx + dy * dy).sqrt() <= self.radius * (1.0 + 1e-12)
    }
}

/// Velocity field `w = (w1, w2)` of the initial data.
#[derive(Clone, Debug)]
pub struct AnalyticPlaneField {
    pub components: [AnalyticScalarField; 2],
    pub domain_ball: Ball,
}

/// Derivative tensors of both velocity components at one point.
#[derive(Clone, Debug)]
pub struct FieldJet {
    components: [Jet; 2],
}

impl FieldJet {
    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    /// `∂_{i1} … ∂_{ik} w_c` for the variable indices `idx` (each 0 or 1).
    pub fn derivative(&self, component: usize, idx: &[usize]) -> f64 {
        let mut e = [0usize; 2];
        for &i in idx {
            e[i] += 1;
        }
        self.components[component].derivative(e)
    }

    /// Order-`k` tensor of one component, flattened in row-major index order (length 2^k).
    pub fn tensor(&self, component: usize, k: usize) -> Vec<f64> {
        (0..1usize << k)
            .map(|bits| {
                let idx: Vec<usize> = (0..k).map(|p| (bits >> (k - 1 - p)) & 1).collect();
                self.derivative(component, &idx)
            })
            .collect()
    }

    pub fn jets(&self) -> &[Jet; 2] {
        &self.components
    }
}

/// Pointwise spectral data of the velocity Jacobian.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFrame {
    pub lambda1: f64,
    pub lambda2: f64,
    pub r1: Vec2,
    pub r2: Vec2,
    pub l1: Vec2,
    pub l2: Vec2,
    /// `−1/λ₁` when `λ₁ < 0`.
    pub tau: Option<f64>,
}

impl EigenFrame {
    /// `(I + t·Dw)⁻¹ v` using the spectral decomposition.
    pub fn solve_shifted(&self, t: f64, v: &Vec2) -> Vec2 {
        self.r1 * (self.l1.dot(v) / (1.0 + t * self.lambda1)) + self.r2 * (self.l2.dot(v) / (1.0 + t * self.lambda2))
    }
}

/// Spectral data carried as jets around a base point.
#[derive(Clone, Debug)]
pub struct EigenJet {
    pub lambda1: Jet,
    pub lambda2: Jet,
    pub r1: [Jet; 2],
    pub r2: [Jet; 2],
}

impl EigenJet {
    pub fn frame_value(&self) -> (f64, f64, Vec2, Vec2) {
        (
            self.lambda1.value(),
            self.lambda2.value(),
            Vec2::new(self.r1[0].value(), self.r1[1].value()),
            Vec2::new(self.r2[0].value(), self.r2[1].value()),
        )
    }

    /// Jacobian of `r₁` at the base point (columns are ∂/∂x₁, ∂/∂x₂).
    pub fn dr1(&self) -> Mat2 {
        Mat2::new(
            self.r1[0].derivative([1, 0]),
            self.r1[0].derivative([0, 1]),
            self.r1[1].derivative([1, 0]),
            self.r1[1].derivative([0, 1]),
        )
    }

    pub fn grad_lambda1(&self) -> Vec2 {
        Vec2::new(self.lambda1.derivative([1, 0]), self.lambda1.derivative([0, 1]))
    }

    pub fn hessian_lambda1(&self) -> Mat2 {
        let h = &self.lambda1;
        let off = h.derivative([1, 1]);
        Mat2::new(h.derivative([2, 0]), off, off, h.derivative([0, 2]))
    }
}

struct Spectral<S> {
    lambda1: S,
    lambda2: S,
    r1: [S; 2],
    r2: [S; 2],
}

/// Orientation rule for an eigenvector.
#[derive(Clone, Copy, Debug)]
pub enum Orientation {
    /// First component with magnitude above 1e−14 is positive.
    FirstNonzeroPositive,
    /// Positive inner product with a reference direction.
    Along(Vec2),
}

fn orient_sign(v: Vec2, rule: Orientation) -> f64 {
    match rule {
        Orientation::FirstNonzeroPositive => {
            if v.x.abs() > 1e-14 {
                v.x.signum()
            } else {
                v.y.signum()
            }
        }
        Orientation::Along(r) => {
            if v.dot(&r) < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
    }
}

fn eigenvector<S: Scalar>(a: &S, b: &S, c: &S, d: &S, lambda: &S, rule: Orientation) -> [S; 2] {
    let va = [b.clone(), lambda.clone() - a.clone()];
    let vb = [lambda.clone() - d.clone(), c.clone()];
    let na = va[0].value().hypot(va[1].value());
    let nb = vb[0].value().hypot(vb[1].value());
    let v = if na >= nb { va } else { vb };
    let norm = (v[0].clone() * v[0].clone() + v[1].clone() * v[1].clone()).sqrt();
    let u = [v[0].clone() / norm.clone(), v[1].clone() / norm];
    let s = orient_sign(Vec2::new(u[0].value(), u[1].value()), rule);
    [u[0].clone() * s, u[1].clone() * s]
}

fn spectral<S: Scalar>(m: [[S; 2]; 2], x: &Vec2, rules: [Orientation; 2]) -> Result<Spectral<S>> {
    let [[a, b], [c, d]] = m;
    let half_diff = (a.clone() - d.clone()) * 0.5;
    let disc = half_diff.clone() * half_diff + b.clone() * c.clone();
    let scale = a.value().abs() + b.value().abs() + c.value().abs() + d.value().abs();
    if !(disc.value() > (1e-12 * scale.max(1e-300)).powi(2)) {
        return Err(Error::Hypothesis(format!(
            "velocity Jacobian at ({:.6}, {:.6}) has complex or repeated eigenvalues (discriminant {:.3e})",
            x.x,
            x.y,
            disc.value()
        )));
    }
    let root = disc.sqrt();
    let mean = (a.clone() + d.clone()) * 0.5;
    let lambda1 = mean.clone() - root.clone();
    let lambda2 = mean + root;
    let r1 = eigenvector(&a, &b, &c, &d, &lambda1, rules[0]);
    let r2 = eigenvector(&a, &b, &c, &d, &lambda2, rules[1]);
    Ok(Spectral { lambda1, lambda2, r1, r2 })
}

impl AnalyticPlaneField {
    pub fn new(w1: AnalyticScalarField, w2: AnalyticScalarField, domain_ball: Ball) -> Self {
        AnalyticPlaneField { components: [w1, w2], domain_ball }
    }

    pub fn parse(w1: &str, w2: &str, domain_ball: Ball) -> Result<Self> {
        Ok(Self::new(AnalyticScalarField::parse(w1)?, AnalyticScalarField::parse(w2)?, domain_ball))
    }

    /// Largest jet order this field serves.
    pub fn jet_order(&self) -> usize {
        self.components[0].jet_order.min(self.components[1].jet_order)
    }

    pub fn velocity(&self, x: &Vec2) -> Vec2 {
        Vec2::new(self.components[0].at(x), self.components[1].at(x))
    }

    /// Component jets around `x` without domain checks.
    pub fn component_jets(&self, x: &Vec2, order: usize) -> [Jet; 2] {
        let vars = Jet::plane_variables([x.x, x.y], order);
        [self.components[0].expr().eval(&vars), self.components[1].expr().eval(&vars)]
    }

    /// Derivative tensors of `w` at `x` up to `order`.
    pub fn jet(&self, x: &Vec2, order: usize) -> Result<FieldJet> {
        if order > self.jet_order() {
            return Err(Error::Capability(format!(
                "requested jet order {order} exceeds supported order {}",
                self.jet_order()
            )));
        }
        if !self.domain_ball.contains(x) {
            return Err(Error::Domain(format!("point ({}, {}) lies outside the working ball", x.x, x.y)));
        }
        Ok(FieldJet { components: self.component_jets(x, order) })
    }

    pub fn jacobian(&self, x: &Vec2) -> Mat2 {
        let [j1, j2] = self.component_jets(x, 1);
        Mat2::new(j1.derivative([1, 0]), j1.derivative([0, 1]), j2.derivative([1, 0]), j2.derivative([0, 1]))
    }

    /// Value, Jacobian and the two component Hessians at `x`.
    pub fn second_order(&self, x: &Vec2) -> (Vec2, Mat2, [Mat2; 2]) {
        let js = self.component_jets(x, 2);
        let h = |j: &Jet| {
            let o = j.derivative([1, 1]);
            Mat2::new(j.derivative([2, 0]), o, o, j.derivative([0, 2]))
        };
        (
            Vec2::new(js[0].value(), js[1].value()),
            Mat2::new(
                js[0].derivative([1, 0]),
                js[0].derivative([0, 1]),
                js[1].derivative([1, 0]),
                js[1].derivative([0, 1]),
            ),
            [h(&js[0]), h(&js[1])],
        )
    }

    /// Spectral frame with explicit orientation rules for `r₁` and `r₂`.
    pub fn eigenframe_oriented(&self, x: &Vec2, rules: [Orientation; 2]) -> Result<EigenFrame> {
        let m = self.jacobian(x);
        let s = spectral([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]], x, rules)?;
        let r1 = Vec2::new(s.r1[0], s.r1[1]);
        let r2 = Vec2::new(s.r2[0], s.r2[1]);
        let det = cross(&r1, &r2);
        let l1 = Vec2::new(r2.y, -r2.x) / det;
        let l2 = Vec2::new(-r1.y, r1.x) / det;
        let tau = if s.lambda1 < 0.0 { Some(-1.0 / s.lambda1) } else { None };
        Ok(EigenFrame { lambda1: s.lambda1, lambda2: s.lambda2, r1, r2, l1, l2, tau })
    }

    /// Spectral frame with the default sign convention.
    pub fn eigenframe(&self, x: &Vec2) -> Result<EigenFrame> {
        self.eigenframe_oriented(x, [Orientation::FirstNonzeroPositive; 2])
    }

    /// Spectral data as jets of the given order around `x`.
    pub fn eigen_jet(&self, x: &Vec2, order: usize, rules: [Orientation; 2]) -> Result<EigenJet> {
        let [w1, w2] = self.component_jets(x, order + 1);
        let m = [[w1.partial(0), w1.partial(1)], [w2.partial(0), w2.partial(1)]];
        let s = spectral(m, x, rules)?;
        Ok(EigenJet { lambda1: s.lambda1, lambda2: s.lambda2, r1: s.r1, r2: s.r2 })
    }

    pub fn lambda1(&self, x: &Vec2) -> Result<f64> {
        Ok(self.eigenframe(x)?.lambda1)
    }

    /// Blow-up time `τ(x) = −1/λ₁(x)`; infinite when `λ₁ ≥ 0`.
    pub fn tau(&self, x: &Vec2) -> Result<f64> {
        Ok(self.eigenframe(x)?.tau.unwrap_or(f64::INFINITY))
    }
}

/// Strict negative minimum of `λ₁`, where the first singularity is born.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericSingularity {
    pub x0: Vec2,
    pub t0: f64,
    pub hessian_lambda1: Mat2,
    pub hessian_tau: Mat2,
}

fn is_positive_definite(h: &Mat2) -> bool {
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    eig.eigenvalues.iter().all(|&v| v > 0.0)
}

/// Damped Newton search for the local minimum of `λ₁` near `seed`.
pub fn find_generic_singularity(field: &AnalyticPlaneField, seed: &Vec2) -> Result<GenericSingularity> {
    let rules = [Orientation::FirstNonzeroPositive; 2];
    let as_genericity = |e: Error| match e {
        Error::Hypothesis(m) => Error::Genericity(m),
        other => other,
    };
    let mut x = *seed;
    let mut converged = false;
    let mut last_grad = f64::INFINITY;
    for _ in 0..100 {
        let ej = field.eigen_jet(&x, 2, rules).map_err(as_genericity)?;
        let g = ej.grad_lambda1();
        let h = ej.hessian_lambda1();
        last_grad = g.norm();
        if last_grad < 1e-13 {
            converged = true;
            break;
        }
        let newton = if is_positive_definite(&h) { h.try_inverse().map(|hi| -(hi * g)) } else { None };
        let step = newton.unwrap_or_else(|| -g * (0.1 / last_grad.max(1.0)));
        let f0 = ej.lambda1.value();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = x + step * alpha;
            if let Ok(tj) = field.eigen_jet(&trial, 1, rules) {
                let f1 = tj.lambda1.value();
                let g1 = tj.grad_lambda1().norm();
                if f1 <= f0 + 1e-4 * alpha * g.dot(&step) || (last_grad < 1e-6 && g1 < last_grad) {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let ej = field.eigen_jet(&x, 2, rules).map_err(as_genericity)?;
    let h = ej.hessian_lambda1();
    if !is_positive_definite(&h) {
        return Err(Error::Genericity(format!(
            "Hessian of λ₁ at ({:.6}, {:.6}) is not positive definite: [[{:.4e}, {:.4e}], [{:.4e}, {:.4e}]]",
            x.x,
            x.y,
            h[(0, 0)],
            h[(0, 1)],
            h[(1, 0)],
            h[(1, 1)]
        )));
    }
    if !converged {
        return Err(Error::convergence("generic singularity search", last_grad));
    }
    let lambda = ej.lambda1.value();
    if lambda >= 0.0 {
        return Err(Error::Hypothesis(format!("λ₁ = {lambda} is not negative at the minimum")));
    }
    let tau = -ej.lambda1.recip();
    let off = tau.derivative([1, 1]);
    let hessian_tau = Mat2::new(tau.derivative([2, 0]), off, off, tau.derivative([0, 2]));
    Ok(GenericSingularity { x0: x, t0: -1.0 / lambda, hessian_lambda1: h, hessian_tau })
}

/// Outcome of the sampled check of the data hypotheses on the working ball.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub samples: usize,
    pub min_gap: f64,
    pub min_density: f64,
    pub failures: Vec<String>,
}

impl HypothesisReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Sample `n × n` points of the working ball: real distinct eigenvalues and positive density.
pub fn check_hypotheses(field: &AnalyticPlaneField, density: &AnalyticScalarField, n: usize) -> HypothesisReport {
    let ball = field.domain_ball;
    let mut report =
        HypothesisReport { samples: 0, min_gap: f64::INFINITY, min_density: f64::INFINITY, failures: Vec::new() };
    for i in 0..n {
        for j in 0..n {
            let u = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            let v = -1.0 + 2.0 * (j as f64 + 0.5) / n as f64;
            let x = Vec2::new(ball.center[0] + ball.radius * u, ball.center[1] + ball.radius * v);
            if !ball.contains(&x) {
                continue;
            }
            report.samples += 1;
            match field.eigenframe(&x) {
                Ok(f) => report.min_gap = report.min_gap.min(f.lambda2 - f.lambda1),
                Err(e) => {
                    if report.failures.len() < 8 {
                        report.failures.push(e.to_string());
                    }
                }
            }
            let r = density.at(&x);
            report.min_density = report.min_density.min(r);
            if !(r > 0.0) && report.failures.len() < 8 {
                report.failures.push(format!("density {r} is not positive at ({:.6}, {:.6})", x.x, x.y));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn test_field() -> AnalyticPlaneField {
        AnalyticPlaneField::parse("-x1 + x1^3 + x1*x2^2", "-x2/2", Ball::new([0.0, 0.0], 0.4)).unwrap()
    }

    #[test]
    fn linear_field_jacobian() {
        let f = AnalyticPlaneField::parse("-x1", "-x2/2", Ball::new([0.0, 0.0], 1.0)).unwrap();
        let j = f.jet(&Vec2::zeros(), 1).unwrap();
        assert_eq!(j.tensor(0, 1), vec![-1.0, 0.0]);
        assert_eq!(j.tensor(1, 1), vec![0.0, -0.5]);
    }

    #[test]
    fn test_field_second_derivatives_vanish_at_origin() {
        let j = test_field().jet(&Vec2::zeros(), 2).unwrap();
        assert!(j.tensor(0, 2).iter().all(|&v| v == 0.0));
        assert!(j.tensor(1, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn test_field_curvature_entry() {
        let j = test_field().jet(&Vec2::new(0.1, 0.2), 2).unwrap();
        assert_abs_diff_eq!(j.derivative(0, &[0, 0]), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(j.derivative(0, &[0, 1]), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn jet_errors() {
        let f = test_field();
        assert!(matches!(f.jet(&Vec2::new(2.0, 0.0), 1), Err(Error::Domain(_))));
        assert!(matches!(f.jet(&Vec2::zeros(), 99), Err(Error::Capability(_))));
    }

    #[test]
    fn frame_at_origin() {
        let fr = test_field().eigenframe(&Vec2::zeros()).unwrap();
        assert_abs_diff_eq!(fr.lambda1, -1.0);
        assert_abs_diff_eq!(fr.lambda2, -0.5);
        assert_abs_diff_eq!(fr.r1, Vec2::new(1.0, 0.0));
        assert_eq!(fr.tau, Some(1.0));
    }

    #[test]
    fn frame_off_axis() {
        let fr = test_field().eigenframe(&Vec2::new(0.0, 0.3)).unwrap();
        assert_abs_diff_eq!(fr.lambda1, -0.91, epsilon = 1e-15);
        assert_abs_diff_eq!(fr.tau.unwrap(), 1.0 / 0.91, epsilon = 1e-15);
    }

    #[test]
    fn repeated_eigenvalue_is_rejected() {
        let f = AnalyticPlaneField::parse("-x1", "-x2", Ball::new([0.0, 0.0], 1.0)).unwrap();
        assert!(matches!(f.eigenframe(&Vec2::zeros()), Err(Error::Hypothesis(_))));
        assert!(matches!(find_generic_singularity(&f, &Vec2::zeros()), Err(Error::Genericity(_))));
    }

    #[test]
    fn singularity_of_test_field() {
        let s = find_generic_singularity(&test_field(), &Vec2::new(0.2, -0.1)).unwrap();
        assert!(s.x0.norm() < 1e-12);
        assert_abs_diff_eq!(s.t0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.hessian_lambda1, Mat2::new(6.0, 0.0, 0.0, 2.0), epsilon = 1e-12);
        assert_abs_diff_eq!(s.hessian_tau, Mat2::new(6.0, 0.0, 0.0, 2.0), epsilon = 1e-12);
    }

    #[test]
    fn saddle_is_rejected() {
        // λ₁ = −1 + 3x₁² − x₂² has a saddle at the origin.
        let f = AnalyticPlaneField::parse("-x1 + x1^3 - x1*x2^2", "-x2/2", Ball::new([0.0, 0.0], 0.5)).unwrap();
        assert!(matches!(find_generic_singularity(&f, &Vec2::new(0.0, 0.0)), Err(Error::Genericity(_))));
    }

    #[test]
    fn hypotheses_hold_for_test_field() {
        let rep = check_hypotheses(&test_field(), &AnalyticScalarField::constant(1.0), 64);
        assert!(rep.ok(), "{:?}", rep.failures);
        assert!(rep.samples > 2000);
        assert!(rep.min_gap > 0.0);
    }
}
