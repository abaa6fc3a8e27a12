//! The newborn point mass of one-dimensional pressureless flow: companion
//! roots, accretion integrals, the drift field of the pullback coordinate, its
//! saddle at the blow-up point, stable-manifold tracking and the second-order
//! (mass, position, velocity) system used as a cross-check.

use crate::error::{Error, Result};
use crate::extrap::{aitken, limit_in_sqrt, limit_in_t, Limit};
use crate::ode::{dopri5, OdeOptions};
use crate::poly::Poly;
use crate::quad;

/// Line data: density `ρ̄(x) = Σ ρ_k x^k/k!` and velocity
/// `w(x) = ω₀ − ω₁x + Σ_{k≥3} ω_k x^k/k!`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cubic1DProblem {
    rho_k: Vec<f64>,
    omega0: f64,
    omega1: f64,
    omega_high: Vec<f64>,
    rho: Poly,
    w: Poly,
    dw: Poly,
    d2w: Poly,
}

impl Cubic1DProblem {
    /// `omega_high` lists `ω₃, ω₄, …`.
    pub fn new(rho_k: Vec<f64>, omega0: f64, omega1: f64, omega_high: Vec<f64>) -> Result<Self> {
        if rho_k.is_empty() || !(rho_k[0] > 0.0) {
            return Err(Error::Hypothesis("line density requires ρ₀ > 0".into()));
        }
        if !(omega1 > 0.0) {
            return Err(Error::Hypothesis("line velocity requires ω₁ > 0".into()));
        }
        if omega_high.is_empty() || !(omega_high[0] > 0.0) {
            return Err(Error::Hypothesis("line velocity requires ω₃ > 0".into()));
        }
        if rho_k.iter().chain(omega_high.iter()).any(|v| !v.is_finite()) || !omega0.is_finite() {
            return Err(Error::Hypothesis("line coefficients must be finite".into()));
        }
        let mut wd = vec![omega0, -omega1, 0.0];
        wd.extend_from_slice(&omega_high);
        let w = Poly::from_taylor(&wd);
        let dw = w.derivative();
        let d2w = dw.derivative();
        Ok(Cubic1DProblem { rho: Poly::from_taylor(&rho_k), rho_k, omega0, omega1, omega_high, w, dw, d2w })
    }

    /// Data with `ρ̄ = ρ₀ + ρ₁x` and `w = ω₀ − ω₁x + ω₃x³/6 + ω₄x⁴/24`.
    pub fn with_coefficients(rho0: f64, rho1: f64, omega0: f64, omega1: f64, omega3: f64, omega4: f64) -> Result<Self> {
        Self::new(vec![rho0, rho1], omega0, omega1, vec![omega3, omega4])
    }

    /// `ρ̄ = 1`, `w = −x + x³`.
    pub fn canonical() -> Self {
        Self::with_coefficients(1.0, 0.0, 0.0, 1.0, 6.0, 0.0).expect("canonical data are admissible")
    }

    pub fn rho_k(&self) -> &[f64] {
        &self.rho_k
    }
    pub fn rho0(&self) -> f64 {
        self.rho_k[0]
    }
    pub fn rho1(&self) -> f64 {
        self.rho_k.get(1).copied().unwrap_or(0.0)
    }
    pub fn omega0(&self) -> f64 {
        self.omega0
    }
    pub fn omega1(&self) -> f64 {
        self.omega1
    }
    pub fn omega3(&self) -> f64 {
        self.omega_high[0]
    }
    pub fn omega4(&self) -> f64 {
        self.omega_high.get(1).copied().unwrap_or(0.0)
    }
    pub fn omega_high(&self) -> &[f64] {
        &self.omega_high
    }
    pub fn t0(&self) -> f64 {
        1.0 / self.omega1
    }

    pub fn density(&self, x: f64) -> f64 {
        self.rho.eval(x)
    }
    pub fn velocity(&self, x: f64) -> f64 {
        self.w.eval(x)
    }
    pub fn velocity_prime(&self, x: f64) -> f64 {
        self.dw.eval(x)
    }
    pub fn velocity_second(&self, x: f64) -> f64 {
        self.d2w.eval(x)
    }
    pub fn velocity_poly(&self) -> &Poly {
        &self.w
    }
    pub fn density_poly(&self) -> &Poly {
        &self.rho
    }

    /// Blow-up time of the characteristic from `x` (infinite when `w′(x) ≥ 0`).
    pub fn tau(&self, x: f64) -> f64 {
        let d = self.velocity_prime(x);
        if d < 0.0 {
            -1.0 / d
        } else {
            f64::INFINITY
        }
    }

    /// Leading-order building blocks `(B, C)` of the companion roots `X± ≈ ±B − C`.
    pub fn building_blocks(&self, t: f64, x: f64) -> (f64, f64) {
        let dt = (t - self.t0()).max(0.0);
        let (w1, w3, w4) = (self.omega1, self.omega3(), self.omega4());
        let b = (6.0 * w1 * w1 * dt / w3).sqrt();
        let c = 0.5 * x + 3.0 * w1 * w1 * w4 * dt / (4.0 * w3 * w3);
        (b, c)
    }

    /// Asymmetry coefficient `E` of the extreme-sheet Jacobians for drift `s0`.
    pub fn e_coefficient(&self, s0: f64) -> f64 {
        let (w1, w3, w4) = (self.omega1, self.omega3(), self.omega4());
        (w3 * w3 * s0 - 0.5 * w1 * w1 * w4) / (4.0 * w1 * w3) * (6.0 / w3).sqrt()
    }
}

/// The two extreme-sheet preimages sharing an Eulerian point with `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompanionRoots1D {
    pub minus: f64,
    pub plus: f64,
    /// Largest residual of the companion equation at the two roots.
    pub residual: f64,
}

fn solve_side(g: &dyn Fn(f64) -> (f64, f64), x: f64, seed: f64, sign: f64) -> Result<(f64, f64)> {
    let mut d = (seed - x).abs().max(1e-7 * (1.0 + x.abs()));
    let mut outer = x + sign * d;
    let mut tries = 0;
    while g(outer).0 <= 0.0 {
        d *= 2.0;
        outer = x + sign * d;
        tries += 1;
        if tries > 60 || d > 1e4 {
            return Err(Error::Numeric(format!("no companion root found on the {} side of x = {x}", if sign > 0.0 { "upper" } else { "lower" })));
        }
    }
    let (mut neg, mut pos) = (x, outer);
    let mut r = if (seed - x) * sign > 0.0 && (seed - outer) * sign < 0.0 { seed } else { 0.5 * (neg + pos) };
    let mut gr = g(r);
    for _ in 0..200 {
        if gr.0 == 0.0 {
            break;
        }
        if gr.0 < 0.0 {
            neg = r;
        } else {
            pos = r;
        }
        let newton = r - gr.0 / gr.1;
        let inside = (newton - neg) * (newton - pos) < 0.0;
        let next = if inside && gr.1.is_finite() && gr.1 != 0.0 { newton } else { 0.5 * (neg + pos) };
        let step = (next - r).abs();
        r = next;
        gr = g(r);
        if step <= 4.0 * f64::EPSILON * r.abs().max(1e-300) || gr.0.abs() < 1e-16 {
            break;
        }
    }
    // Final polish: a couple of plain Newton steps, keeping the best residual.
    for _ in 0..2 {
        let cand = r - gr.0 / gr.1;
        let gc = g(cand);
        if gc.0.abs() < gr.0.abs() {
            r = cand;
            gr = gc;
        } else {
            break;
        }
    }
    Ok((r, gr.0.abs()))
}

/// Solve `1 + t·(w(X) − w(x))/(X − x) = 0` for the two roots bracketing `x`.
pub fn companion_roots(p: &Cubic1DProblem, t: f64, x: f64) -> Result<CompanionRoots1D> {
    let f1 = 1.0 + t * p.velocity_prime(x);
    if !(f1 < 0.0) {
        return Err(Error::Domain(format!(
            "(t, x) = ({t}, {x}) lies outside the cusp region (1 + t·w'(x) = {f1:.3e})"
        )));
    }
    let q = p.w.divided_difference(x);
    let dq = q.derivative();
    let g = move |xx: f64| (1.0 + t * q.eval(xx), t * dq.eval(xx));
    let (b, c) = p.building_blocks(t, x);
    let (minus, r1) = solve_side(&g, x, -b - c, -1.0)?;
    let (plus, r2) = solve_side(&g, x, b - c, 1.0)?;
    let residual = r1.max(r2);
    if residual >= 1e-13 {
        return Err(Error::convergence("companion roots", residual));
    }
    Ok(CompanionRoots1D { minus, plus, residual })
}

/// Mass and momentum gathered from the interval between the companion roots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accretion {
    pub roots: CompanionRoots1D,
    pub m: f64,
    pub p: f64,
    /// `∫ρ̄·(w − w(x))`, computed without cancellation.
    pub p_relative: f64,
}

pub fn accretion_integrals(p: &Cubic1DProblem, t: f64, x: f64) -> Result<Accretion> {
    let roots = companion_roots(p, t, x)?;
    let (a, b) = (roots.minus, roots.plus);
    let wx = p.velocity(x);
    let m = quad::integrate(|s| p.density(s), a, b, 1e-14, 1e-14)?;
    let mom = quad::integrate(|s| p.density(s) * p.velocity(s), a, b, 1e-14, 1e-14)?;
    let rel = quad::integrate(|s| p.density(s) * (p.velocity(s) - wx), a, b, 1e-16, 1e-14)?;
    Ok(Accretion { roots, m, p: mom, p_relative: rel })
}

/// `(1 + t·w′(x), F(t, x))` with `F` the velocity of the accreted mass relative to `w(x)`.
pub fn drift_field(p: &Cubic1DProblem, t: f64, x: f64) -> Result<[f64; 2]> {
    let acc = accretion_integrals(p, t, x)?;
    Ok([1.0 + t * p.velocity_prime(x), acc.p_relative / acc.m])
}

/// Linearization of the drift field at the blow-up point `(t₀, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumJacobian {
    pub analytic: [[f64; 2]; 2],
    pub numeric: [[f64; 2]; 2],
    /// Extrapolation error estimates of the two limit entries of the lower row.
    pub limit_errors: [f64; 2],
}

impl EquilibriumJacobian {
    /// Eigenpairs of the analytic matrix: `(λ, eigenvector)` with the stable pair first.
    pub fn eigenpairs(&self) -> [(f64, [f64; 2]); 2] {
        let [[a, _], [c, d]] = self.analytic;
        [(a, [1.0, c / (a - d)]), (d, [0.0, 1.0])]
    }
}

pub fn analytic_jacobian(p: &Cubic1DProblem) -> [[f64; 2]; 2] {
    let (w1, w3, w4, r0, r1) = (p.omega1, p.omega3(), p.omega4(), p.rho0(), p.rho1());
    [
        [-w1, 0.0],
        [3.0 * w1.powi(3) * w4 / (4.0 * w3 * w3) - 2.0 * r1 * w1.powi(3) / (r0 * w3), 1.5 * w1],
    ]
}

pub fn equilibrium_jacobian(p: &Cubic1DProblem) -> Result<EquilibriumJacobian> {
    let h = 1e-5;
    let t0 = p.t0();
    let f1 = |t: f64, x: f64| 1.0 + t * p.velocity_prime(x);
    let j11 = (f1(t0 + h, 0.0) - f1(t0 - h, 0.0)) / (2.0 * h);
    let j12 = (f1(t0, h) - f1(t0, -h)) / (2.0 * h);
    let f = |t: f64, x: f64| drift_field(p, t, x).map(|v| v[1]);
    let eps0 = 0.02 * t0;
    let mut eps = Vec::new();
    let mut d_t = Vec::new();
    let mut d_x = Vec::new();
    for k in 0..8 {
        let e = eps0 * 0.5f64.powi(k);
        let t = t0 + e;
        eps.push(e);
        d_t.push((f(t + h, 0.0)? - f(t - h, 0.0)?) / (2.0 * h));
        d_x.push((f(t, h)? - f(t, -h)?) / (2.0 * h));
    }
    let lt = limit_in_t(&eps, &d_t);
    let lx = limit_in_t(&eps, &d_x);
    Ok(EquilibriumJacobian {
        analytic: analytic_jacobian(p),
        numeric: [[j11, j12], [lt.value, lx.value]],
        limit_errors: [lt.error, lx.error],
    })
}

/// Closed-form slope of the stable manifold at the blow-up point.
pub fn s0_coefficient(p: &Cubic1DProblem) -> f64 {
    let (w1, w3, w4, r0, r1) = (p.omega1, p.omega3(), p.omega4(), p.rho0(), p.rho1());
    0.8 * r1 * w1 * w1 / (r0 * w3) - 0.3 * w1 * w1 * w4 / (w3 * w3)
}

/// `S₀` from the linear equation produced by the integrability requirement on
/// the second-order system, solved symbolically.
pub fn s0_from_linear_equation(p: &Cubic1DProblem) -> f64 {
    let (w1, w3, w4, r0, r1) = (p.omega1, p.omega3(), p.omega4(), p.rho0(), p.rho1());
    // 0 = (1/(2ρ₀))·((7/2)S ρ₀ − 6ω₁²ρ₁/ω₃ + (9/4)ρ₀ω₁²ω₄/ω₃²) + 2S
    let slope = 7.0 / 4.0 + 2.0;
    let intercept = (-6.0 * w1 * w1 * r1 / w3 + 2.25 * r0 * w1 * w1 * w4 / (w3 * w3)) / (2.0 * r0);
    -intercept / slope
}

/// Outcome of the numeric integrability route for `S₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityRoute {
    pub s0: f64,
    /// Slope of the limiting affine relation divided by `ω₁`; equals 15/4.
    pub slope: f64,
    pub intercept: f64,
    /// Deviation of a third trial value from the affine relation.
    pub linearity_defect: f64,
    pub limit_errors: [f64; 3],
}

/// Braces of the velocity equation of the second-order system along `x = S·(t − t₀)`.
fn integrability_braces(p: &Cubic1DProblem, t: f64, s: f64) -> Result<f64> {
    let x = s * (t - p.t0());
    let acc = accretion_integrals(p, t, x)?;
    let (xm, xp) = (acc.roots.minus, acc.roots.plus);
    let f1 = 1.0 + t * p.velocity_prime(x);
    let a = p.velocity(x) + f1 * s;
    let rho_m = p.density(xm) / (1.0 + t * p.velocity_prime(xm));
    let rho_p = p.density(xp) / (1.0 + t * p.velocity_prime(xp));
    let (vm, vp) = (p.velocity(xm), p.velocity(xp));
    Ok((a - vm).powi(2) * rho_m / acc.m - (a - vp).powi(2) * rho_p / acc.m
        - 2.0 * p.velocity_prime(x) * s
        - t * p.velocity_second(x) * s * s)
}

pub fn s0_by_integrability(p: &Cubic1DProblem) -> Result<IntegrabilityRoute> {
    let t0 = p.t0();
    let ts: Vec<f64> = (0..14).map(|k| 0.01 * t0 * 0.5f64.powi(k)).collect();
    let limit = |s: f64| -> Result<Limit> {
        let vals = ts.iter().map(|&d| integrability_braces(p, t0 + d, s)).collect::<Result<Vec<_>>>()?;
        Ok(limit_in_sqrt(&ts, &vals))
    };
    let l0 = limit(0.0)?;
    let l1 = limit(1.0)?;
    let l2 = limit(-1.0)?;
    let beta = l1.value - l0.value;
    let s0 = -l0.value / beta;
    let predicted = l0.value - beta;
    Ok(IntegrabilityRoute {
        s0,
        slope: beta / p.omega1,
        intercept: l0.value,
        linearity_defect: (l2.value - predicted).abs(),
        limit_errors: [l0.error, l1.error, l2.error],
    })
}

/// One sample of the tracked point mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointMassState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub m: f64,
    pub v: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub residual: f64,
}

/// Start value of the pullback coordinate at `t₀ + δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartRule {
    /// `x = S₀·δ` from the closed-form slope.
    Asymptotic,
    /// `x = 0`; the attracting stable branch absorbs the start error.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackOptions {
    pub delta: f64,
    pub n_out: usize,
    pub rtol: f64,
    pub atol: f64,
    pub start: StartRule,
    /// Explicit output times; log-spaced between `t₀ + δ` and `t_end` when `None`.
    pub outputs: Option<Vec<f64>>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions { delta: 1e-4, n_out: 101, rtol: 1e-12, atol: 1e-15, start: StartRule::Asymptotic, outputs: None }
    }
}

fn output_times(t0: f64, delta: f64, t_end: f64, n: usize, explicit: &Option<Vec<f64>>) -> Result<Vec<f64>> {
    match explicit {
        Some(v) => {
            if v.iter().any(|&t| t < t0 + delta || t > t_end) || v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("output times must increase within [t₀ + δ, t_end]".into()));
            }
            Ok(v.clone())
        }
        None => {
            let n = n.max(2);
            let (a, b) = (delta.ln(), (t_end - t0).ln());
            Ok((0..n).map(|k| t0 + (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect())
        }
    }
}

fn check_window(p: &Cubic1DProblem, t_end: f64, delta: f64) -> Result<()> {
    let t0 = p.t0();
    if !(t_end > t0 + delta && t_end <= t0 + 0.5 / p.omega1 * (1.0 + 1e-12)) {
        return Err(Error::Config(format!(
            "t_end = {t_end} must lie in (t₀ + δ, t₀ + 0.5/ω₁] = ({}, {}]",
            t0 + delta,
            t0 + 0.5 / p.omega1
        )));
    }
    Ok(())
}

fn state_at(p: &Cubic1DProblem, t: f64, x: f64) -> Result<PointMassState> {
    let acc = accretion_integrals(p, t, x)?;
    Ok(PointMassState {
        t,
        x,
        y: x + t * p.velocity(x),
        m: acc.m,
        v: p.velocity(x) + acc.p_relative / acc.m,
        x_minus: acc.roots.minus,
        x_plus: acc.roots.plus,
        residual: acc.roots.residual,
    })
}

fn tracking_lost(e: Error, t: f64) -> Error {
    match e {
        Error::Domain(m) => Error::Numeric(format!("tracking lost near t = {t}: {m}")),
        other => other,
    }
}

/// Integrate the pullback coordinate along the stable branch of the drift field.
pub fn track_point_mass(p: &Cubic1DProblem, t_end: f64, opts: &TrackOptions) -> Result<Vec<PointMassState>> {
    check_window(p, t_end, opts.delta)?;
    let t0 = p.t0();
    let times = output_times(t0, opts.delta, t_end, opts.n_out, &opts.outputs)?;
    let x_start = match opts.start {
        StartRule::Asymptotic => s0_coefficient(p) * opts.delta,
        StartRule::Zero => 0.0,
    };
    let s_out: Vec<f64> = times.iter().map(|t| (t - t0).ln()).collect();
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let d = s.exp();
        let t = t0 + d;
        let f = drift_field(p, t, y[0])?;
        if !(f[0] < 0.0) {
            return Err(Error::Domain(format!("1 + t·w'(x) = {} at t = {t}", f[0])));
        }
        dy[0] = d * f[1] / f[0];
        Ok(())
    };
    let mut o = OdeOptions::tol(opts.rtol, opts.atol * (1.0 + x_start.abs()));
    o.atol = opts.atol.max(1e-300);
    let s_start = opts.delta.ln();
    let mut states = Vec::with_capacity(times.len());
    let first = if (s_out[0] - s_start).abs() < 1e-15 { 1 } else { 0 };
    if first == 1 {
        states.push(state_at(p, times[0], x_start).map_err(|e| tracking_lost(e, times[0]))?);
    }
    let (ys, _) = dopri5(rhs, s_start, &[x_start], &s_out[first..], &o).map_err(|e| tracking_lost(e, t_end))?;
    for (t, y) in times[first..].iter().zip(ys) {
        states.push(state_at(p, *t, y[0]).map_err(|e| tracking_lost(e, *t))?);
    }
    Ok(states)
}

/// Relative change of `x(t_end)` when the start offset `δ` is halved.
pub fn delta_sensitivity(p: &Cubic1DProblem, t_end: f64, opts: &TrackOptions) -> Result<f64> {
    let run = |delta: f64| -> Result<f64> {
        let o = TrackOptions { delta, outputs: Some(vec![t_end]), ..opts.clone() };
        Ok(track_point_mass(p, t_end, &o)?[0].x)
    };
    let a = run(opts.delta)?;
    let b = run(0.5 * opts.delta)?;
    let scale = a.abs().max(b.abs()).max(1e-300);
    Ok(if a == b { 0.0 } else { (a - b).abs() / scale })
}

/// One sample of the second-order (mass, position, velocity) system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondOrderState {
    pub t: f64,
    pub x: f64,
    pub s: f64,
    pub y: f64,
    pub m: f64,
    pub v: f64,
}

/// Right-hand side `(ṁ, ẋ, Ṡ)` of the second-order system at `(t, m, x, S)`.
pub fn second_order_rates(p: &Cubic1DProblem, t: f64, m: f64, x: f64, s: f64) -> Result<[f64; 3]> {
    let roots = companion_roots(p, t, x)?;
    let (xm, xp) = (roots.minus, roots.plus);
    let f1 = 1.0 + t * p.velocity_prime(x);
    let a = p.velocity(x) + f1 * s;
    let rho_m = p.density(xm) / (1.0 + t * p.velocity_prime(xm));
    let rho_p = p.density(xp) / (1.0 + t * p.velocity_prime(xp));
    let (vm, vp) = (p.velocity(xm), p.velocity(xp));
    let m_dot = (a - vp) * rho_p - (a - vm) * rho_m;
    let braces = (a - vm).powi(2) * rho_m / m - (a - vp).powi(2) * rho_p / m
        - 2.0 * p.velocity_prime(x) * s
        - t * p.velocity_second(x) * s * s;
    Ok([m_dot, s, braces / f1])
}

pub fn second_order_system(p: &Cubic1DProblem, t_end: f64, opts: &TrackOptions) -> Result<Vec<SecondOrderState>> {
    check_window(p, t_end, opts.delta)?;
    let t0 = p.t0();
    let times = output_times(t0, opts.delta, t_end, opts.n_out, &opts.outputs)?;
    let s0 = s0_coefficient(p);
    let x_start = s0 * opts.delta;
    let m_start = accretion_integrals(p, t0 + opts.delta, x_start)?.m;
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let d = s.exp();
        let r = second_order_rates(p, t0 + d, y[0], y[1], y[2])?;
        for i in 0..3 {
            dy[i] = d * r[i];
        }
        Ok(())
    };
    let s_out: Vec<f64> = times.iter().map(|t| (t - t0).ln()).collect();
    let s_start = opts.delta.ln();
    let first = if (s_out[0] - s_start).abs() < 1e-15 { 1 } else { 0 };
    let mut states = Vec::new();
    let make = |t: f64, y: &[f64]| {
        let f1 = 1.0 + t * p.velocity_prime(y[1]);
        SecondOrderState { t, m: y[0], x: y[1], s: y[2], y: y[1] + t * p.velocity(y[1]), v: p.velocity(y[1]) + f1 * y[2] }
    };
    let y0 = [m_start, x_start, s0];
    if first == 1 {
        states.push(make(times[0], &y0));
    }
    let o = OdeOptions::tol(opts.rtol, opts.atol);
    let (ys, _) = dopri5(rhs, s_start, &y0, &s_out[first..], &o).map_err(|e| tracking_lost(e, t_end))?;
    for (t, y) in times[first..].iter().zip(ys) {
        states.push(make(*t, &y));
    }
    Ok(states)
}

/// Mass-law diagnostic: `m(t)/√(t − t₀)` along the tracked trajectory at dyadic offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct MassLaw {
    pub offsets: Vec<f64>,
    pub ratios: Vec<f64>,
    pub aitken: f64,
    pub predicted: f64,
}

pub fn mass_law(p: &Cubic1DProblem) -> Result<MassLaw> {
    let t0 = p.t0();
    let offsets: Vec<f64> = (0..8).map(|k| 0.04 * t0 * 0.5f64.powi(7 - k)).collect();
    let opts = TrackOptions {
        delta: 1e-6 * t0,
        outputs: Some(offsets.iter().map(|d| t0 + d).collect()),
        ..TrackOptions::default()
    };
    let states = track_point_mass(p, t0 + offsets[7], &opts)?;
    let mut ratios: Vec<f64> = states.iter().zip(&offsets).map(|(s, d)| s.m / d.sqrt()).collect();
    ratios.reverse();
    let mut offs = offsets.clone();
    offs.reverse();
    let predicted = 2.0 * p.omega1 * p.rho0() * (6.0 / p.omega3()).sqrt();
    Ok(MassLaw { aitken: aitken(&ratios), offsets: offs, ratios, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn canonical_roots_are_closed_form() {
        let r = companion_roots(&Cubic1DProblem::canonical(), 1.21, 0.0).unwrap();
        let exact = (0.21f64 / 1.21).sqrt();
        assert_abs_diff_eq!(r.plus, exact, epsilon = 1e-14);
        assert_abs_diff_eq!(r.minus, -exact, epsilon = 1e-14);
        assert_abs_diff_eq!(r.plus, 0.416598, epsilon = 1e-6);
        assert!(r.residual < 1e-13);
    }

    #[test]
    fn roots_outside_cusp_are_rejected() {
        let p = Cubic1DProblem::canonical();
        assert!(matches!(companion_roots(&p, 0.99, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_interval_at_blow_up() {
        let p = Cubic1DProblem::canonical();
        let a = accretion_integrals(&p, 1.0 + 1e-14, 0.0).unwrap();
        assert!(a.m < 1e-6);
    }

    #[test]
    fn symmetric_data_have_no_drift() {
        let p = Cubic1DProblem::canonical();
        for &t in &[1.01, 1.1, 1.3] {
            let a = accretion_integrals(&p, t, 0.0).unwrap();
            assert_abs_diff_eq!(a.p, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(drift_field(&p, t, 0.0).unwrap()[1], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_slopes() {
        assert_eq!(s0_coefficient(&Cubic1DProblem::canonical()), 0.0);
        let p = Cubic1DProblem::with_coefficients(1.0, 1.5, 0.0, 1.0, 6.0, 0.0).unwrap();
        assert_abs_diff_eq!(s0_coefficient(&p), 0.2, epsilon = 1e-15);
        let q = Cubic1DProblem::with_coefficients(1.0, 0.0, 0.0, 1.0, 6.0, 12.0).unwrap();
        assert_abs_diff_eq!(s0_coefficient(&q), -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s0_from_linear_equation(&p), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(s0_from_linear_equation(&q), -0.1, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_of_canonical_data() {
        let j = equilibrium_jacobian(&Cubic1DProblem::canonical()).unwrap();
        assert_eq!(j.analytic, [[-1.0, 0.0], [0.0, 1.5]]);
        for i in 0..2 {
            for k in 0..2 {
                assert_abs_diff_eq!(j.numeric[i][k], j.analytic[i][k], epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn jacobian_lower_left_with_density_gradient() {
        let p = Cubic1DProblem::with_coefficients(1.0, 1.5, 0.0, 1.0, 6.0, 0.0).unwrap();
        let j = equilibrium_jacobian(&p).unwrap();
        assert_abs_diff_eq!(j.analytic[1][0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(j.numeric[1][0], -0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(j.numeric[1][1], 1.5, epsilon = 1e-4);
        let [(l1, v1), (l2, v2)] = j.eigenpairs();
        assert_eq!((l1, l2), (-1.0, 1.5));
        assert_abs_diff_eq!(v1[1], 0.2, epsilon = 1e-15);
        assert_eq!(v2, [0.0, 1.0]);
    }

    #[test]
    fn integrability_route_reproduces_slope() {
        let p = Cubic1DProblem::with_coefficients(1.0, 1.5, 0.0, 1.0, 6.0, 0.0).unwrap();
        let r = s0_by_integrability(&p).unwrap();
        assert_abs_diff_eq!(r.s0, 0.2, epsilon = 1e-6);
        assert_abs_diff_eq!(r.slope, 3.75, epsilon = 1e-4);
    }

    #[test]
    fn symmetric_tracking_stays_on_axis() {
        let p = Cubic1DProblem::canonical();
        let traj = track_point_mass(&p, 1.2, &TrackOptions::default()).unwrap();
        for s in &traj {
            assert_eq!(s.x, 0.0);
            assert_eq!(s.y, 0.0);
            assert_abs_diff_eq!(s.v, 0.0, epsilon = 1e-15);
            assert!(s.x_minus < s.x && s.x < s.x_plus);
        }
        assert!(traj.windows(2).all(|w| w[1].m > w[0].m));
    }

    #[test]
    fn tracked_slope_matches_closed_form() {
        let p = Cubic1DProblem::with_coefficients(1.0, 1.5, 0.0, 1.0, 6.0, 0.0).unwrap();
        let d = 1e-4;
        let opts = TrackOptions { delta: 1e-9, start: StartRule::Zero, outputs: Some(vec![1.0 + d, 1.0 + 2.0 * d]), ..Default::default() };
        let tr = track_point_mass(&p, 1.0 + 2.0 * d, &opts).unwrap();
        assert_abs_diff_eq!((tr[1].x - tr[0].x) / d, 0.2, epsilon = 1e-3);
    }

    #[test]
    fn blow_up_position_is_free_flight_image() {
        let p = Cubic1DProblem::with_coefficients(1.0, 0.4, 1.0, 1.0, 6.0, 2.0).unwrap();
        let opts = TrackOptions { outputs: Some((0..6).map(|k| 1.0 + 1e-4 * 2f64.powi(k)).collect()), ..Default::default() };
        let tr = track_point_mass(&p, 1.0 + 32e-4, &opts).unwrap();
        let ts: Vec<f64> = tr.iter().map(|s| s.t - 1.0).collect();
        let ys: Vec<f64> = tr.iter().map(|s| s.y).collect();
        assert_abs_diff_eq!(limit_in_t(&ts, &ys).value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn second_order_system_agrees_with_tracker() {
        let p = Cubic1DProblem::with_coefficients(1.0, 1.5, 0.0, 1.0, 6.0, 3.0).unwrap();
        let t_end = 1.3;
        let opts = TrackOptions { outputs: Some(vec![t_end]), ..Default::default() };
        let a = track_point_mass(&p, t_end, &opts).unwrap()[0];
        let b = second_order_system(&p, t_end, &opts).unwrap()[0];
        assert_relative_eq!(a.m, b.m, max_relative = 1e-5);
        assert_relative_eq!(a.y, b.y, max_relative = 1e-5);
    }

    #[test]
    fn mass_law_limit() {
        let law = mass_law(&Cubic1DProblem::canonical()).unwrap();
        assert_relative_eq!(law.aitken, 2.0, max_relative = 1e-2);
    }
}
