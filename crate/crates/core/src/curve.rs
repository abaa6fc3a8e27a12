//! The singular curve born at the cusp: rescaled state per Lagrangian label
//! ζ, derived initial data, linearization at `T = 0`, integration in
//! `s = ln T`, and reconstruction of the physical curve.

use crate::cheb::MapJet2;
use crate::cusp::{ChartRow, CuspChart, GasState2D};
use crate::error::{Error, Result};
use crate::extrap::{limit_in_sqrt, require_converged, Limit};
use crate::fields::{cross, perp, Mat2, Vec2};
use crate::ode::{dopri5, OdeOptions, OdeStats};
use nalgebra::{Complex, SMatrix};
use rayon::prelude::*;

pub type Matrix5 = SMatrix<f64, 5, 5>;
/// `(η̂, σ̂, ξ̂, S, Z)`.
pub type State = [f64; 5];

/// Spectrum of the linearization at `T = 0` guaranteed by the construction.
pub const EXPECTED_SPECTRUM: [f64; 5] = [-3.0, -1.0, -1.0, -0.5, 0.0];

/// Per-node data fixed for the whole integration.
#[derive(Clone, Debug)]
pub struct CurveNode {
    pub zeta: f64,
    pub row: ChartRow,
    pub tau: f64,
    /// `dτ/dξ` along γ*.
    pub dtau: f64,
}

impl CurveNode {
    pub fn new(chart: &CuspChart, zeta: f64) -> Result<CurveNode> {
        let row = chart.row(zeta)?;
        let ej = chart.field.eigen_jet(&row.gamma, 1, chart.rules())?;
        let lambda1 = row.frame.lambda1;
        let dtau = ej.grad_lambda1().dot(&row.r2_star) / (lambda1 * lambda1);
        Ok(CurveNode { zeta, tau: row.tau, dtau, row })
    }
}

/// Positions and velocities attached to one node at one instant.
#[derive(Clone, Debug)]
pub struct Kinematics {
    pub t: f64,
    pub xi: f64,
    pub sigma: f64,
    pub x: MapJet2,
    pub w: Vec2,
    pub dw: Mat2,
    pub hess: [Mat2; 2],
    /// `I + t·Dw`.
    pub m: Mat2,
    /// `x_t = x_ξ Z + x_σ S`.
    pub a: Vec2,
    pub y: Vec2,
    pub y_t: Vec2,
    /// `∂y/∂ζ` at fixed `t`.
    pub y_zeta: Vec2,
}

/// `u_ζ` holds `(σ̂_ζ, ξ̂_ζ)` at fixed `T`.
pub fn kinematics(chart: &CuspChart, node: &CurveNode, big_t: f64, u: &State, u_zeta: [f64; 2]) -> Result<Kinematics> {
    let [_, sh, xh, s, z] = *u;
    let t = node.tau + big_t;
    let xi = node.zeta + big_t * xh;
    let sigma = big_t * sh;
    let x = chart.x_jet(xi, sigma)?;
    let (w, dw, hess) = chart.field.second_order(&x.value);
    let m = Mat2::identity() + dw * t;
    let a = x.d_xi * z + x.d_sigma * s;
    let xi_zeta = 1.0 + big_t * u_zeta[1] - node.dtau * z;
    let sigma_zeta = big_t * u_zeta[0] - node.dtau * s;
    Ok(Kinematics {
        t,
        xi,
        sigma,
        y: x.value + w * t,
        y_t: w + m * a,
        y_zeta: m * (x.d_xi * xi_zeta + x.d_sigma * sigma_zeta),
        x,
        w,
        dw,
        hess,
        m,
        a,
    })
}

/// Right-hand side `H` of `T·u_T = H` (equivalently `du/ds`).
pub fn rates(chart: &CuspChart, node: &CurveNode, big_t: f64, u: &State, u_zeta: [f64; 2]) -> Result<State> {
    let [eh, sh, xh, s, z] = *u;
    let k = kinematics(chart, node, big_t, u, u_zeta)?;
    let gas = chart.gas_state_seeded(k.t, k.xi, k.sigma, &node.row)?;
    let eta = big_t.sqrt() * eh;
    let flux_p = cross(&(k.y_t - gas.v_plus), &k.y_zeta);
    let flux_m = cross(&(gas.v_minus - k.y_t), &k.y_zeta);
    let eta_t = gas.rho_plus * flux_p + gas.rho_minus * flux_m;
    let g = (gas.v_minus - k.y_t) * (gas.rho_minus * flux_m) + (gas.v_plus - k.y_t) * (gas.rho_plus * flux_p);
    let d2 = Vec2::new(k.a.dot(&(k.hess[0] * k.a)), k.a.dot(&(k.hess[1] * k.a)));
    let acc = k.x.d_xi_xi * (z * z) + k.x.d_xi_sigma * (2.0 * z * s) + k.x.d_sigma_sigma * (s * s);
    let f = -(k.dw * k.a) * 2.0 - d2 * k.t - k.m * acc;
    let lu = k.m.lu();
    let b = lu.solve(&(f + g / eta)).ok_or_else(|| Error::Numeric("singular I + t·Dw on the curve".into()))?;
    let basis = Mat2::from_columns(&[k.x.d_sigma, k.x.d_xi]);
    let tt = basis.lu().solve(&b).ok_or_else(|| Error::Numeric("degenerate flow coordinates on the curve".into()))?;
    Ok([big_t.sqrt() * eta_t - 0.5 * eh, s - sh, z - xh, big_t * tt[0], big_t * tt[1]])
}

/// Dyadic sequence used for `T → 0` limits.
fn limit_levels() -> Vec<f64> {
    (0..10).map(|k| 1e-2 * 0.5f64.powi(k)).collect()
}

fn limit_of(f: impl Fn(f64) -> Result<f64> + Sync) -> Result<Limit> {
    let ts = limit_levels();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect::<Result<_>>()?;
    Ok(limit_in_sqrt(&ts, &vals))
}

fn real_spectrum(m: &Matrix5) -> ([f64; 5], f64) {
    let ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let mut re: Vec<f64> = ev.iter().map(|c| c.re).collect();
    re.sort_by(f64::total_cmp);
    let imag = ev.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    ([re[0], re[1], re[2], re[3], re[4]], imag)
}

/// Derived initial data and `T = 0` linearization at one node.
#[derive(Clone, Debug)]
pub struct NodeInit {
    pub zeta: f64,
    pub rho0: f64,
    pub s0: f64,
    /// Slope of the extrapolated `F₁` along `σ̂ = S`.
    pub s0_slope: f64,
    /// Deviation of the three-point `F₁` limits from an affine law.
    pub s0_linearity: f64,
    pub df1_ds: f64,
    /// Limit of the `Z`-rate at the initial state.
    pub g2_residual: f64,
    pub lambda: Matrix5,
    pub spectrum: [f64; 5],
    /// Complete Jacobian of the rates, when requested.
    pub full: Option<FullLinearization>,
    /// Largest `T → 0` sensitivity to `u_ζ`.
    pub fuchs: f64,
}

impl NodeInit {
    pub fn state(&self) -> State {
        [self.rho0, self.s0, 0.0, self.s0, 0.0]
    }
}

#[derive(Clone, Debug)]
pub struct CurveInitData {
    pub zeta_grid: Vec<f64>,
    pub nodes: Vec<CurveNode>,
    pub init: Vec<NodeInit>,
}

impl CurveInitData {
    pub fn rho0(&self) -> Vec<f64> {
        self.init.iter().map(|n| n.rho0).collect()
    }
    pub fn s0(&self) -> Vec<f64> {
        self.init.iter().map(|n| n.s0).collect()
    }
    pub fn z0(&self) -> Vec<f64> {
        vec![0.0; self.init.len()]
    }
    /// Largest deviation of any template spectrum from [`EXPECTED_SPECTRUM`].
    pub fn spectrum_deviation(&self) -> f64 {
        self.init
            .iter()
            .flat_map(|n| n.spectrum.iter().zip(EXPECTED_SPECTRUM).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// `ϱ₀(ζ)`, the initial mass amplitude.
pub fn initial_density(chart: &CuspChart, zeta: f64) -> Result<f64> {
    let row = chart.row(zeta)?;
    let fr = &row.frame;
    let b1 = chart.density.at(&row.gamma) / (2.0 * (fr.lambda2 - fr.lambda1));
    let shifted = (Mat2::identity() * fr.lambda1 - chart.field.jacobian(&row.gamma)) * row.r2_star;
    let rho0 = -4.0 * b1 * row.c1.sqrt() * cross(&fr.r1, &shifted);
    if !(rho0 > 0.0) {
        return Err(Error::Structure(format!("initial mass amplitude {rho0} is not positive at ζ = {zeta}")));
    }
    Ok(rho0)
}

/// Limit of `F₁` along `σ̂ = S` at `S ∈ {−1, 0, 1}`, solved for the drift `S₀`.
/// Returns `(S₀, slope, linearity defect)`.
pub fn initial_drift(chart: &CuspChart, node: &CurveNode, rho0: f64) -> Result<(f64, f64, f64)> {
    let f1 = |s: f64| -> Result<f64> {
        let l = limit_of(|bt| Ok(rates(chart, node, bt, &[rho0, s, 0.0, s, 0.0], [0.0, 0.0])?[3]))?;
        require_converged(l, 1e-7, "drift equation")
    };
    let (fm, f0, fp) = (f1(-1.0)?, f1(0.0)?, f1(1.0)?);
    let slope = 0.5 * (fp - fm);
    let defect = (fp - 2.0 * f0 + fm).abs();
    Ok((-f0 / slope, slope, defect))
}

/// Complete numeric Jacobian of the rates at `T → 0` and its spectrum.
#[derive(Clone, Debug)]
pub struct FullLinearization {
    pub jacobian: Matrix5,
    /// Real parts, ascending.
    pub spectrum: [f64; 5],
    pub max_imag: f64,
}

/// `∂H_k/∂u_i` at `T → 0`: centered differences Richardson-combined over two steps.
fn linearization_entry(chart: &CuspChart, node: &CurveNode, u0: &State, k: usize, i: usize) -> Result<Limit> {
    limit_of(|bt| {
        let d = |h: f64| -> Result<f64> {
            let (mut up, mut um) = (*u0, *u0);
            up[i] += h;
            um[i] -= h;
            Ok((rates(chart, node, bt, &up, [0.0; 2])?[k] - rates(chart, node, bt, &um, [0.0; 2])?[k]) / (2.0 * h))
        };
        let h = 2e-3 * (1.0 + u0[i].abs());
        Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
    })
}

pub fn full_linearization(chart: &CuspChart, node: &CurveNode, u0: &State) -> Result<FullLinearization> {
    let mut jacobian = Matrix5::zeros();
    for k in 0..5 {
        for i in 0..5 {
            jacobian[(k, i)] = linearization_entry(chart, node, u0, k, i)?.value;
        }
    }
    let (spectrum, max_imag) = real_spectrum(&jacobian);
    Ok(FullLinearization { jacobian, spectrum, max_imag })
}

/// Initial data and linearization at one node.
pub fn node_init(chart: &CuspChart, node: &CurveNode) -> Result<NodeInit> {
    let rho0 = initial_density(chart, node.zeta)?;
    let (s0, slope, defect) = initial_drift(chart, node, rho0)?;
    let u0 = [rho0, s0, 0.0, s0, 0.0];
    let rate = |bt: f64, u: &State, du: [f64; 2], k: usize| -> Result<f64> { Ok(rates(chart, node, bt, u, du)?[k]) };

    let partial = |k: usize, i: usize| linearization_entry(chart, node, &u0, k, i);
    let mut full = Matrix5::zeros();
    for (k, i) in [(0, 2), (0, 4), (3, 2), (3, 3), (3, 4)] {
        full[(k, i)] = partial(k, i)?.value;
    }
    let df1_ds = full[(3, 3)];
    let g2 = limit_of(|bt| rate(bt, &u0, [0.0; 2], 4))?.value;
    let mut fuchs: f64 = 0.0;
    for k in 0..5 {
        for i in 0..2 {
            let l = limit_of(|bt| {
                let h = 1e-3;
                let (mut dp, mut dm) = ([0.0; 2], [0.0; 2]);
                dp[i] = h;
                dm[i] = -h;
                Ok((rate(bt, &u0, dp, k)? - rate(bt, &u0, dm, k)?) / (2.0 * h))
            })?;
            fuchs = fuchs.max(l.value.abs());
        }
    }
    let mut lambda = Matrix5::zeros();
    lambda[(0, 0)] = -0.5;
    lambda[(0, 2)] = full[(0, 2)];
    lambda[(0, 4)] = full[(0, 4)];
    lambda[(1, 1)] = -1.0;
    lambda[(1, 3)] = 1.0;
    lambda[(2, 2)] = -1.0;
    lambda[(2, 4)] = 1.0;
    lambda[(3, 2)] = full[(3, 2)];
    lambda[(3, 3)] = df1_ds;
    lambda[(3, 4)] = full[(3, 4)];
    let (spectrum, _) = real_spectrum(&lambda);
    Ok(NodeInit {
        zeta: node.zeta,
        rho0,
        s0,
        s0_slope: slope,
        s0_linearity: defect,
        df1_ds,
        g2_residual: g2,
        lambda,
        spectrum,
        full: None,
        fuchs,
    })
}

#[derive(Clone, Debug)]
pub struct CurveOptions {
    pub t_start: f64,
    pub t_end: f64,
    /// Number of ζ nodes (odd keeps ζ = 0 on the grid).
    pub n_zeta: usize,
    /// Half-width of the ζ window; derived from `t_end` when `None`.
    pub zeta_max: Option<f64>,
    /// Number of output levels, uniform in `ln T`.
    pub n_out: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { t_start: 1e-4, t_end: 0.05, n_zeta: 21, zeta_max: None, n_out: 41, rtol: 1e-9, atol: 1e-11 }
    }
}

/// Half-width of the ζ window: `τ(±ζ_max) − t₀ ≥ 4·T_end` on both sides.
pub fn zeta_window(chart: &CuspChart, t_end: f64) -> Result<f64> {
    let t0 = chart.singularity.t0;
    let target = 4.0 * t_end;
    let [xa, xb] = chart.options.xi_range;
    let tau = |z: f64| -> Result<f64> { chart.frame_at(&chart.gamma_star(z)?)?.tau.ok_or_else(|| Error::Hypothesis("λ₁ ≥ 0 on γ*".into())) };
    let mut half = 0.0f64;
    for end in [xb, xa] {
        if tau(end)? - t0 < target {
            return Err(Error::Domain(format!("chart ξ-range is too short for T_end = {t_end}")));
        }
        let (mut lo, mut hi) = (0.0, end);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tau(mid)? - t0 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        half = half.max(hi.abs());
    }
    Ok(half)
}

/// Initial data on a uniform ζ grid, with the spectral gate enforced.
pub fn curve_init(chart: &CuspChart, opts: &CurveOptions) -> Result<CurveInitData> {
    if opts.n_zeta < 5 {
        return Err(Error::Config("the curve needs at least five ζ nodes".into()));
    }
    let half = match opts.zeta_max {
        Some(z) => z,
        None => zeta_window(chart, opts.t_end)?,
    };
    let n = opts.n_zeta;
    let zeta_grid: Vec<f64> = (0..n).map(|j| -half + 2.0 * half * j as f64 / (n - 1) as f64).collect();
    let nodes: Vec<CurveNode> = zeta_grid.par_iter().map(|&z| CurveNode::new(chart, z)).collect::<Result<_>>()?;
    let mut init: Vec<NodeInit> = nodes.par_iter().map(|nd| node_init(chart, nd)).collect::<Result<_>>()?;
    let mid = n / 2;
    init[mid].full = Some(full_linearization(chart, &nodes[mid], &init[mid].state())?);
    Ok(CurveInitData { zeta_grid, nodes, init })
}

/// Refuse to integrate unless every template spectrum is the expected one.
pub fn spectral_gate(data: &CurveInitData) -> Result<()> {
    for n in &data.init {
        for ev in n.spectrum {
            let nearest = ev.round();
            if nearest >= 1.0 && (ev - nearest).abs() < 1e-3 {
                return Err(Error::Structure(format!("eigenvalue {ev} near a positive integer at ζ = {}", n.zeta)));
            }
        }
    }
    let dev = data.spectrum_deviation();
    if dev > 1e-3 {
        return Err(Error::Structure(format!("linearization spectrum deviates by {dev:.3e}")));
    }
    Ok(())
}

/// Fourth-order first derivatives on a uniform grid, one-sided at the ends.
pub fn grid_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    assert!(n >= 5);
    let mut d = vec![0.0; n];
    for j in 2..n - 2 {
        d[j] = (-v[j + 2] + 8.0 * v[j + 1] - 8.0 * v[j - 1] + v[j - 2]) / (12.0 * h);
    }
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    d[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) / (12.0 * h);
    d[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / (12.0 * h);
    d
}

/// Integrated curve: `states[k][j]` is the state at `ts[k]` on node `j`.
#[derive(Clone, Debug)]
pub struct CurveSolution {
    pub nodes: Vec<CurveNode>,
    pub dzeta: f64,
    pub ts: Vec<f64>,
    pub states: Vec<Vec<State>>,
    pub stats: OdeStats,
}

impl CurveSolution {
    pub fn zeta(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.zeta).collect()
    }

    /// `(σ̂_ζ, ξ̂_ζ)` per node at output level `k`.
    pub fn zeta_slopes(&self, states: &[State]) -> Vec<[f64; 2]> {
        slopes(states, self.dzeta)
    }

    /// States on every node at `T`, by monotone cubic interpolation in `ln T`.
    pub fn states_at(&self, big_t: f64) -> Result<Vec<State>> {
        let (lo, hi) = (self.ts[0], *self.ts.last().expect("outputs"));
        if !(big_t >= lo * (1.0 - 1e-12) && big_t <= hi * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("T = {big_t} lies outside the integrated range [{lo}, {hi}]")));
        }
        let s: Vec<f64> = self.ts.iter().map(|t| t.ln()).collect();
        let x = big_t.ln().clamp(s[0], *s.last().expect("outputs"));
        Ok((0..self.nodes.len())
            .map(|j| {
                let mut out = [0.0; 5];
                for (c, o) in out.iter_mut().enumerate() {
                    let ys: Vec<f64> = self.states.iter().map(|st| st[j][c]).collect();
                    *o = pchip(&s, &ys, x);
                }
                out
            })
            .collect())
    }
}

fn slopes(states: &[State], h: f64) -> Vec<[f64; 2]> {
    let ds = grid_derivative(&states.iter().map(|u| u[1]).collect::<Vec<_>>(), h);
    let dx = grid_derivative(&states.iter().map(|u| u[2]).collect::<Vec<_>>(), h);
    ds.into_iter().zip(dx).map(|(a, b)| [a, b]).collect()
}

/// Monotone piecewise cubic Hermite interpolation (Fritsch–Carlson slopes).
pub fn pchip(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 1 {
        return ys[0];
    }
    let i = match xs.iter().position(|&v| v > x) {
        Some(0) => 0,
        Some(p) => p - 1,
        None => n - 2,
    }
    .min(n - 2);
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    let slope = |k: usize| -> f64 {
        if n == 2 {
            return delta[0];
        }
        if k == 0 || k == n - 1 {
            let (d0, d1, h0, h1) = if k == 0 { (delta[0], delta[1], h[0], h[1]) } else { (delta[n - 2], delta[n - 3], h[n - 2], h[n - 3]) };
            let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if m.signum() != d0.signum() {
                0.0
            } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                m
            }
        } else if delta[k - 1] * delta[k] <= 0.0 {
            0.0
        } else {
            let (w1, w2) = (2.0 * h[k] + h[k - 1], h[k] + 2.0 * h[k - 1]);
            (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k])
        }
    };
    let (m0, m1) = (slope(i), slope(i + 1));
    let u = (x - xs[i]) / h[i];
    let (h00, h10, h01, h11) =
        (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u, -2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
    h00 * ys[i] + h10 * h[i] * m0 + h01 * ys[i + 1] + h11 * h[i] * m1
}

/// Method-of-lines integration in `s = ln T` from `ū` at `T_start`.
pub fn integrate(chart: &CuspChart, data: &CurveInitData, opts: &CurveOptions) -> Result<CurveSolution> {
    spectral_gate(data)?;
    if !(opts.t_start > 0.0 && opts.t_end > opts.t_start && opts.n_out >= 2) {
        return Err(Error::Config("curve integration needs 0 < T_start < T_end and at least two outputs".into()));
    }
    let nodes = &data.nodes;
    let n = nodes.len();
    let dzeta = data.zeta_grid[1] - data.zeta_grid[0];
    let y0: Vec<f64> = data.init.iter().flat_map(|i| i.state()).collect();
    let (s0, s1) = (opts.t_start.ln(), opts.t_end.ln());
    let outs: Vec<f64> = (0..opts.n_out).map(|k| s0 + (s1 - s0) * k as f64 / (opts.n_out - 1) as f64).collect();
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let big_t = s.exp();
        let states: Vec<State> = y.chunks(5).map(|c| [c[0], c[1], c[2], c[3], c[4]]).collect();
        if let Some(j) = states.iter().position(|u| !(u[0] > 0.0)) {
            return Err(Error::Numeric(format!(
                "mass amplitude lost positivity at ζ = {} (T = {big_t:.3e}, state {:?})",
                nodes[j].zeta, states[j]
            )));
        }
        let du = slopes(&states, dzeta);
        let out: Vec<State> =
            (0..n).into_par_iter().map(|j| rates(chart, &nodes[j], big_t, &states[j], du[j])).collect::<Result<_>>()?;
        for (j, r) in out.iter().enumerate() {
            dy[5 * j..5 * j + 5].copy_from_slice(r);
        }
        Ok(())
    };
    let mut ode = OdeOptions::tol(opts.rtol, opts.atol);
    ode.h_max = 0.25;
    let (ys, stats) = dopri5(rhs, s0, &y0, &outs, &ode)?;
    let states = ys.iter().map(|y| y.chunks(5).map(|c| [c[0], c[1], c[2], c[3], c[4]]).collect()).collect();
    Ok(CurveSolution { nodes: nodes.clone(), dzeta, ts: outs.iter().map(|s| s.exp()).collect(), states, stats })
}

#[derive(Clone, Debug)]
pub struct PhysicalCurveSample {
    pub t: f64,
    pub zeta: f64,
    pub y: Vec2,
    pub eta: f64,
    pub v: Vec2,
    /// Unit normal pointing to the `+` side.
    pub normal: Vec2,
    /// `⟨n, v − v⁺⟩` and `⟨n, v⁻ − v⟩`; both nonnegative when admissible.
    pub impingement: [f64; 2],
    /// Distance to `γ*(ζ) + τ(ζ)·w(γ*(ζ))`.
    pub fold_distance: f64,
    pub gas: GasState2D,
}

impl PhysicalCurveSample {
    pub fn admissible(&self) -> bool {
        self.impingement[0] >= 0.0 && self.impingement[1] >= 0.0
    }
}

fn sample(chart: &CuspChart, node: &CurveNode, big_t: f64, u: &State, du: [f64; 2]) -> Result<PhysicalCurveSample> {
    let k = kinematics(chart, node, big_t, u, du)?;
    let gas = chart.gas_state_seeded(k.t, k.xi, k.sigma, &node.row)?;
    let mut normal = perp(&k.y_zeta).normalize();
    if normal.dot(&node.row.frame.r1) < 0.0 {
        normal = -normal;
    }
    let g = node.row.gamma;
    let sharp = g + chart.field.velocity(&g) * node.tau;
    Ok(PhysicalCurveSample {
        t: k.t,
        zeta: node.zeta,
        y: k.y,
        eta: big_t.sqrt() * u[0],
        v: k.y_t,
        normal,
        impingement: [normal.dot(&(k.y_t - gas.v_plus)), normal.dot(&(gas.v_minus - k.y_t))],
        fold_distance: (k.y - sharp).norm(),
        gas,
    })
}

/// The curve at physical time `t`, over the nodes with `t − τ(ζ)` in the integrated range.
pub fn physical_curve(sol: &CurveSolution, chart: &CuspChart, t: f64) -> Result<Vec<PhysicalCurveSample>> {
    let (lo, hi) = (sol.ts[0], *sol.ts.last().expect("outputs"));
    let active: Vec<usize> = (0..sol.nodes.len())
        .filter(|&j| {
            let bt = t - sol.nodes[j].tau;
            bt >= lo * (1.0 - 1e-12) && bt <= hi * (1.0 + 1e-12)
        })
        .collect();
    if active.is_empty() {
        return Err(Error::Domain(format!("t = {t} is outside the integrated window")));
    }
    active
        .par_iter()
        .map(|&j| {
            let bt = t - sol.nodes[j].tau;
            let all = sol.states_at(bt)?;
            let du = slopes(&all, sol.dzeta);
            sample(chart, &sol.nodes[j], bt, &all[j], du[j])
        })
        .collect()
}

/// Relative residuals of the mass and momentum balances at one interior sample,
/// each scaled by the sum of magnitudes of its terms.
#[derive(Clone, Debug)]
pub struct BalanceSample {
    pub big_t: f64,
    pub zeta: f64,
    pub mass: f64,
    pub momentum: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug)]
pub struct BalanceResiduals {
    pub samples: Vec<BalanceSample>,
    pub max_mass: f64,
    pub max_momentum: f64,
    pub all_admissible: bool,
}

/// Balance-law residuals from centered differences of the output states in
/// `ln T` and across nodes.
pub fn balance_residuals(sol: &CurveSolution, chart: &CuspChart) -> Result<BalanceResiduals> {
    let nk = sol.ts.len();
    let nj = sol.nodes.len();
    if nk < 3 || nj < 3 {
        return Err(Error::Config("balance residuals need at least three time levels and nodes".into()));
    }
    let ds = (sol.ts[1] / sol.ts[0]).ln();
    // Position, curve velocity and linear density on every output sample.
    let positions: Vec<Vec<(Vec2, Vec2, f64)>> = (0..nk)
        .map(|k| {
            (0..nj)
                .map(|j| {
                    let kin = kinematics(chart, &sol.nodes[j], sol.ts[k], &sol.states[k][j], [0.0; 2])?;
                    Ok((kin.y, kin.y_t, sol.ts[k].sqrt() * sol.states[k][j][0]))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (1..nk - 1).flat_map(|k| (1..nj - 1).map(move |j| (k, j))).collect();
    let samples: Vec<BalanceSample> = pairs
        .par_iter()
        .map(|&(k, j)| {
            let bt = sol.ts[k];
            let node = &sol.nodes[j];
            let (_, vp, ep) = positions[k + 1][j];
            let (_, v, e0) = positions[k][j];
            let (_, vm, em) = positions[k - 1][j];
            let eta_t = (ep - em) / (2.0 * ds * bt);
            let v_t = (vp - vm) / (2.0 * ds * bt);
            let y_zeta = (positions[k][j + 1].0 - positions[k][j - 1].0) / (2.0 * sol.dzeta) - v * node.dtau;
            let u = &sol.states[k][j];
            let t = node.tau + bt;
            let gas = chart.gas_state_seeded(t, node.zeta + bt * u[2], bt * u[1], &node.row)?;
            let fp = cross(&(v - gas.v_plus), &y_zeta);
            let fm = cross(&(gas.v_minus - v), &y_zeta);
            let mass = (eta_t - (gas.rho_plus * fp + gas.rho_minus * fm))
                / (eta_t.abs() + (gas.rho_plus * fp).abs() + (gas.rho_minus * fm).abs());
            let force = ((gas.v_plus - v) * (gas.rho_plus * fp) + (gas.v_minus - v) * (gas.rho_minus * fm)) / e0;
            let momentum = (v_t - force).norm() / (v_t.norm() + force.norm());
            let mut normal = perp(&y_zeta);
            if normal.dot(&node.row.frame.r1) < 0.0 {
                normal = -normal;
            }
            Ok(BalanceSample {
                big_t: bt,
                zeta: node.zeta,
                mass,
                momentum,
                admissible: normal.dot(&(v - gas.v_plus)) >= 0.0 && normal.dot(&(gas.v_minus - v)) >= 0.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BalanceResiduals {
        max_mass: samples.iter().map(|s| s.mass.abs()).fold(0.0, f64::max),
        max_momentum: samples.iter().map(|s| s.momentum).fold(0.0, f64::max),
        all_admissible: samples.iter().all(|s| s.admissible),
        samples,
    })
}
