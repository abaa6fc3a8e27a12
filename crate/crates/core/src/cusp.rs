//! The planar cusp chart: the curve γ* where `λ₁` is stationary along `r₁`,
//! flow coordinates `x(ξ, σ)` along the `r₁` lines, Taylor data of the frame
//! in `σ`, the two companion roots of the middle-sheet point, and the gas
//! state on either side.

use crate::cheb::{lobatto_nodes, Cheb2, MapJet2};
use crate::error::{Error, Result};
use crate::extrap::{limit_in_sqrt, Limit};
use crate::fields::{
    cross, find_generic_singularity, perp, AnalyticPlaneField, AnalyticScalarField, EigenFrame, GenericSingularity,
    Mat2, Orientation, Vec2,
};
use crate::jet::Jet;
use crate::ode::gbs_flow;
use rayon::prelude::*;

/// Order of the σ-series used for the frame coefficients.
const SERIES_ORDER: usize = 5;

#[derive(Clone, Debug)]
pub struct ChartOptions {
    /// Arclength interval of γ* covered by the chart.
    pub xi_range: [f64; 2],
    /// The chart covers `|σ| ≤ sigma_half_width`.
    pub sigma_half_width: f64,
    /// Number of tabulated rows.
    pub n_xi: usize,
    /// Largest Chebyshev degree tried for the coordinate map.
    pub max_degree: usize,
    /// Local error tolerance of the flow integrations.
    pub flow_tol: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions { xi_range: [-0.45, 0.45], sigma_half_width: 0.3, n_xi: 31, max_degree: 64, flow_tol: 1e-14 }
    }
}

/// Frame and Taylor data along γ* at one arclength value.
#[derive(Clone, Debug)]
pub struct ChartRow {
    pub xi: f64,
    pub gamma: Vec2,
    /// Unit tangent `dγ*/dξ`.
    pub r2_star: Vec2,
    pub frame: EigenFrame,
    pub tau: f64,
    pub omega1: f64,
    /// Linear σ-coefficient of `λ₁`; vanishes on γ*.
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    /// `q[k]` holds `q_{k+1}`.
    pub q: [f64; 8],
    pub p0: f64,
    pub c1: f64,
    /// `c₂(ξ, σ̃) = σ̃ + c2_offset`.
    pub c2_offset: f64,
    pub c3: f64,
    /// Dual basis `l₁*, l₂*` of `{r₁, r₂*}`.
    pub duals: [Vec2; 2],
    /// `⟨∇λ₁, r₁⟩` at `gamma`.
    pub stationarity: f64,
}

impl ChartRow {
    pub fn c2(&self, sigma_tilde: f64) -> f64 {
        sigma_tilde + self.c2_offset
    }

    /// The seeds `Z₀∓` for `T = t − τ(ξ)`.
    pub fn seeds(&self, big_t: f64, sigma_tilde: f64) -> Result<[f64; 2]> {
        let tc2 = big_t * self.c2(sigma_tilde);
        let cube = 4.0 * self.c3 * (self.c1 * big_t).powf(1.5);
        let base = tc2 * tc2 + 4.0 * self.c1 * big_t;
        let (rad_m, rad_p) = (base + cube, base - cube);
        if !(rad_m > 0.0 && rad_p > 0.0) {
            return Err(Error::Domain(format!("root seeds are complex at T = {big_t:.3e}, σ̃ = {sigma_tilde}")));
        }
        Ok([-0.5 * tc2 - 0.5 * rad_m.sqrt(), -0.5 * tc2 + 0.5 * rad_p.sqrt()])
    }
}

#[derive(Clone, Debug)]
pub struct CuspChart {
    pub field: AnalyticPlaneField,
    pub density: AnalyticScalarField,
    pub singularity: GenericSingularity,
    pub options: ChartOptions,
    /// Reference direction fixing the sign of `r₁` across the chart.
    pub r1_ref: Vec2,
    pub rows: Vec<ChartRow>,
    surface: Cheb2,
}

/// `g = ⟨∇λ₁, r₁⟩`, its gradient and `r₁` at `x`.
fn stationarity(field: &AnalyticPlaneField, x: &Vec2, rules: [Orientation; 2]) -> Result<(f64, Vec2, Vec2)> {
    let ej = field.eigen_jet(x, 2, rules)?;
    let (_, _, r1, _) = ej.frame_value();
    let grad = ej.grad_lambda1();
    let g = grad.dot(&r1);
    let dg = ej.hessian_lambda1() * r1 + ej.dr1().transpose() * grad;
    Ok((g, dg, r1))
}

/// Walk from `start` (at abscissa 0) through `nodes`, outward in both
/// directions, returning the state at every node in the original order.
fn march<F>(nodes: &[f64], start: Vec2, mut step: F) -> Result<Vec<Vec2>>
where
    F: FnMut(&Vec2, f64, f64) -> Result<Vec2>,
{
    let mut out = vec![start; nodes.len()];
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    let (neg, pos): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&k| nodes[k] < 0.0);
    for side in [pos, neg.into_iter().rev().collect::<Vec<_>>()] {
        let (mut x, mut s) = (start, 0.0);
        for k in side {
            x = step(&x, s, nodes[k])?;
            s = nodes[k];
            out[k] = x;
        }
    }
    Ok(out)
}

impl CuspChart {
    /// Locate the singularity near `seed` and build the chart around it.
    pub fn build(
        field: &AnalyticPlaneField,
        density: &AnalyticScalarField,
        seed: &Vec2,
        options: ChartOptions,
    ) -> Result<CuspChart> {
        let singularity = find_generic_singularity(field, seed)?;
        Self::build_gamma_star(field, density, singularity, options)
    }

    /// Continue γ* from the singular point and tabulate the chart.
    pub fn build_gamma_star(
        field: &AnalyticPlaneField,
        density: &AnalyticScalarField,
        singularity: GenericSingularity,
        options: ChartOptions,
    ) -> Result<CuspChart> {
        let [xa, xb] = options.xi_range;
        if !(xa < 0.0 && xb > 0.0 && options.sigma_half_width > 0.0 && options.n_xi >= 2) {
            return Err(Error::Config("chart needs ξ-range around 0, positive σ half-width and n_xi ≥ 2".into()));
        }
        let x0 = singularity.x0;
        let r1_ref = field.eigenframe(&x0)?.r1;
        let rules = [Orientation::Along(r1_ref), Orientation::FirstNonzeroPositive];
        let tol = options.flow_tol;

        let tangent = |x: &[f64], dx: &mut [f64]| -> Result<()> {
            let (_, dg, r1) = stationarity(field, &Vec2::new(x[0], x[1]), rules)?;
            let mut t = perp(&dg) / dg.norm();
            if cross(&r1, &t) < 0.0 {
                t = -t;
            }
            dx[0] = t.x;
            dx[1] = t.y;
            Ok(())
        };
        let corrector = |x: Vec2, xi: f64| -> Result<Vec2> {
            let mut x = x;
            for _ in 0..20 {
                let (g, dg, _) = stationarity(field, &x, rules)?;
                if g.abs() < 1e-14 {
                    return Ok(x);
                }
                x -= dg * (g / dg.norm_squared());
            }
            let (g, _, _) = stationarity(field, &x, rules)?;
            if g.abs() > 1e-10 {
                return Err(Error::Numeric(format!("γ* corrector stalled at ξ = {xi} (residual {g:.3e})")));
            }
            Ok(x)
        };
        let flow_r1 = |x: &Vec2, len: f64| -> Result<Vec2> {
            let f = |y: &[f64], dy: &mut [f64]| -> Result<()> {
                let fr = field.eigenframe_oriented(&Vec2::new(y[0], y[1]), rules)?;
                dy[0] = fr.r1.x;
                dy[1] = fr.r1.y;
                Ok(())
            };
            let y = gbs_flow(f, &[x.x, x.y], len, 0.05, tol)?;
            Ok(Vec2::new(y[0], y[1]))
        };

        let h = options.sigma_half_width;
        let mut degree = 16usize;
        let surface = loop {
            let xi_nodes = lobatto_nodes(xa, xb, degree);
            let sigma_nodes = lobatto_nodes(-h, h, degree);
            let mut last_good = 0.0;
            let gamma = march(&xi_nodes, x0, |x, from, to| {
                let y = gbs_flow(tangent, &[x.x, x.y], to - from, 0.05, tol)
                    .and_then(|y| corrector(Vec2::new(y[0], y[1]), to))
                    .map_err(|e| Error::Numeric(format!("γ* continuation failed after ξ = {last_good}: {e}")))?;
                last_good = to;
                Ok(y)
            })?;
            let values: Vec<Vec<Vec2>> = gamma
                .par_iter()
                .map(|g| march(&sigma_nodes, *g, |x, from, to| flow_r1(x, to - from)))
                .collect::<Result<_>>()?;
            let fit = Cheb2::fit([xa, -h], [xb, h], degree, &values);
            if fit.tail() < 1e-13 || degree >= options.max_degree {
                break fit;
            }
            degree = (degree * 3 / 2).min(options.max_degree);
        };

        let mut chart = CuspChart {
            field: field.clone(),
            density: density.clone(),
            singularity,
            options: options.clone(),
            r1_ref,
            rows: Vec::new(),
            surface,
        };
        let n = options.n_xi;
        let grid: Vec<f64> = (0..n).map(|k| xa + (xb - xa) * k as f64 / (n - 1) as f64).collect();
        chart.rows = grid.par_iter().map(|&xi| chart.row(xi)).collect::<Result<_>>()?;
        Ok(chart)
    }

    pub fn rules(&self) -> [Orientation; 2] {
        [Orientation::Along(self.r1_ref), Orientation::FirstNonzeroPositive]
    }

    pub fn surface(&self) -> &Cheb2 {
        &self.surface
    }

    /// `x(ξ, σ)` and its first and second partials from the chart surrogate.
    pub fn x_jet(&self, xi: f64, sigma: f64) -> Result<MapJet2> {
        if !self.surface.contains(xi, sigma) {
            return Err(Error::Domain(format!("(ξ, σ) = ({xi}, {sigma}) lies outside the chart")));
        }
        Ok(self.surface.eval(xi, sigma))
    }

    /// `(x, x_ξ, x_σ)` from the chart surrogate.
    pub fn x_first(&self, xi: f64, sigma: f64) -> Result<(Vec2, Vec2, Vec2)> {
        if !self.surface.contains(xi, sigma) {
            return Err(Error::Domain(format!("(ξ, σ) = ({xi}, {sigma}) lies outside the chart")));
        }
        Ok(self.surface.eval_first(xi, sigma))
    }

    pub fn gamma_star(&self, xi: f64) -> Result<Vec2> {
        Ok(self.x_jet(xi, 0.0)?.value)
    }

    pub fn frame_at(&self, x: &Vec2) -> Result<EigenFrame> {
        self.field.eigenframe_oriented(x, self.rules())
    }

    /// Flow of `ẋ = r₁(x)` for signed time `length`.
    pub fn flow_r1(&self, x: &Vec2, length: f64) -> Result<Vec2> {
        let rules = self.rules();
        let f = |y: &[f64], dy: &mut [f64]| -> Result<()> {
            let fr = self.field.eigenframe_oriented(&Vec2::new(y[0], y[1]), rules)?;
            dy[0] = fr.r1.x;
            dy[1] = fr.r1.y;
            Ok(())
        };
        let y = gbs_flow(f, &[x.x, x.y], length, 0.05, 1e-13)?;
        Ok(Vec2::new(y[0], y[1]))
    }

    /// `x(ξ, σ)` by direct integration from γ*(ξ).
    pub fn flow_coordinates(&self, xi: f64, sigma: f64) -> Result<Vec2> {
        if sigma.abs() > self.options.sigma_half_width + 1e-12 {
            return Err(Error::Domain(format!("|σ| = {} exceeds the chart tube radius", sigma.abs())));
        }
        self.flow_r1(&self.gamma_star(xi)?, sigma)
    }

    /// Row of the chart table at the arclength `xi`.
    pub fn row(&self, xi: f64) -> Result<ChartRow> {
        let j = self.x_jet(xi, 0.0)?;
        let gamma = j.value;
        let r2_star = j.d_xi;
        let rules = self.rules();
        let frame = self.field.eigenframe_oriented(&gamma, rules)?;
        let (lam, r1s) = self.taylor_along_flow(&gamma)?;
        let r1 = frame.r1;
        let n1 = perp(&r1);
        let tau = frame.tau.ok_or_else(|| Error::Hypothesis(format!("λ₁ ≥ 0 on γ* at ξ = {xi}")))?;
        let coef = |k: usize| Vec2::new(r1s[0].coeff([k, 0]), r1s[1].coeff([k, 0]));
        let omega1 = -lam.coeff([0, 0]);
        let omega2 = lam.coeff([1, 0]);
        let omega3 = 2.0 * lam.coeff([2, 0]);
        let omega4 = 6.0 * lam.coeff([3, 0]);
        let m = Mat2::identity() + self.field.jacobian(&gamma) * tau;
        let mr = m * r2_star;
        let p0 = n1.dot(&mr);
        if p0.abs() < 1e-8 {
            return Err(Error::Structure(format!("chart basis collapses at ξ = {xi} (p₀ = {p0:.3e})")));
        }
        let lambda1 = frame.lambda1;
        let (q1, q2, q3, q4) = (r1.dot(&coef(2)), r1.dot(&coef(3)), n1.dot(&coef(1)), n1.dot(&coef(2)));
        let q5 = -lambda1 * q3 / (2.0 * p0);
        let q6 = -lambda1 * q4 / (3.0 * p0);
        let q7 = -omega3 * tau * q3 / (8.0 * p0);
        let q8 = r1.dot(&mr);
        let c1 = 6.0 * omega1 * omega1 / omega3;
        let c2_offset = 6.0 * q5 * q8 * omega1 / omega3;
        let c3 = omega4 / (4.0 * omega3) + 6.0 * q7 * q8 * omega1 / omega3;
        let basis = Mat2::from_columns(&[r1, r2_star]);
        let inv = basis
            .try_inverse()
            .ok_or_else(|| Error::Structure(format!("r₁ and r₂* are parallel at ξ = {xi}")))?;
        let duals = [inv.row(0).transpose(), inv.row(1).transpose()];
        let (g, _, _) = stationarity(&self.field, &gamma, rules)?;
        Ok(ChartRow {
            xi,
            gamma,
            r2_star,
            frame,
            tau,
            omega1,
            omega2,
            omega3,
            omega4,
            q: [q1, q2, q3, q4, q5, q6, q7, q8],
            p0,
            c1,
            c2_offset,
            c3,
            duals,
            stationarity: g,
        })
    }

    /// σ-series of `λ₁` and `r₁` along the `r₁` line through `x`, to order five.
    pub fn taylor_along_flow(&self, x: &Vec2) -> Result<(Jet, [Jet; 2])> {
        let ej = self.field.eigen_jet(x, SERIES_ORDER, self.rules())?;
        let zero = Jet::series(&[0.0; SERIES_ORDER + 1]);
        let mut path = [zero.clone(), zero];
        let mut r1s = [ej.r1[0].compose(&path), ej.r1[1].compose(&path)];
        // Each Picard sweep fixes one more coefficient of the path.
        for _ in 0..=SERIES_ORDER {
            path = [r1s[0].integrate_series(), r1s[1].integrate_series()];
            r1s = [ej.r1[0].compose(&path), ej.r1[1].compose(&path)];
        }
        Ok((ej.lambda1.compose(&path), r1s))
    }

    /// Row with the nearest tabulated arclength, for root seeds.
    pub fn nearest_row(&self, xi: f64) -> &ChartRow {
        self.rows
            .iter()
            .min_by(|a, b| (a.xi - xi).abs().total_cmp(&(b.xi - xi).abs()))
            .expect("chart has rows")
    }

    /// The companion roots of the middle-sheet point `x(ξ, σ̃·(t − τ(ξ)))`.
    pub fn companion_roots_2d(&self, t: f64, xi: f64, sigma_tilde: f64) -> Result<CompanionRoots2D> {
        let row = self.row(xi)?;
        let big_t = t - row.tau;
        self.companion_roots_seeded(t, xi, sigma_tilde * big_t, &row)
    }

    /// Companion roots at chart point `(ξ, σ)`, seeding from the Taylor data of `seed_row`.
    pub fn companion_roots_seeded(&self, t: f64, xi: f64, sigma: f64, seed_row: &ChartRow) -> Result<CompanionRoots2D> {
        let gamma = self.gamma_star(xi)?;
        let frame = self.frame_at(&gamma)?;
        let tau = frame.tau.ok_or_else(|| Error::Hypothesis(format!("λ₁ ≥ 0 on γ* at ξ = {xi}")))?;
        let big_t = t - tau;
        if !(big_t > 0.0) {
            return Err(Error::Domain(format!("t = {t} does not exceed τ(ξ) = {tau}")));
        }
        let sigma_tilde = sigma / big_t;
        let seeds = seed_row.seeds(big_t, sigma_tilde)?;
        let r1 = frame.r1;
        let n1 = perp(&r1);
        let push = |x: &Vec2| x + self.field.velocity(x) * t;
        let y = push(&self.x_first(xi, sigma)?.0);
        let k = 6.0 / (t * seed_row.omega3);

        // Returns (φ, f, f') at Z, starting the inner solve from `phi`.
        let eval = |z: f64, phi: f64| -> Result<(f64, f64, f64)> {
            let mut phi = phi;
            let mut converged = false;
            for _ in 0..40 {
                let (x, x_xi, _) = self.x_first(phi, z)?;
                let m = Mat2::identity() + self.field.jacobian(&x) * t;
                let phi2 = n1.dot(&(push(&x) - y));
                let step = phi2 / n1.dot(&(m * x_xi));
                phi -= step;
                if step.abs() <= 1e-15 * (1.0 + phi.abs()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::convergence("nested solve for the transversal coordinate", f64::NAN));
            }
            let (x, x_xi, x_sigma) = self.x_first(phi, z)?;
            let m = Mat2::identity() + self.field.jacobian(&x) * t;
            let (pz, pxi) = (m * x_sigma, m * x_xi);
            let dphi = -n1.dot(&pz) / n1.dot(&pxi);
            let phi1 = r1.dot(&(push(&x) - y));
            let dphi1 = r1.dot(&(pz + pxi * dphi));
            let d = z - sigma;
            Ok((phi, k * phi1 / d, k * (dphi1 * d - phi1) / (d * d)))
        };

        let solve = |z0: f64| -> Result<(f64, f64, f64, f64)> {
            let (mut z, mut phi) = (z0, xi);
            for _ in 0..60 {
                let (p, f, df) = eval(z, phi)?;
                phi = p;
                let step = f / df;
                z -= step;
                if step.abs() <= 1e-15 * big_t.sqrt() {
                    break;
                }
            }
            let (p, f, df) = eval(z, phi)?;
            if !(f.abs() < 1e-12) {
                return Err(Error::convergence("companion root", f));
            }
            Ok((z, p, f, df))
        };
        let (zm, phim, fm, dfm) = solve(seeds[0])?;
        let (zp, phip, fp, dfp) = solve(seeds[1])?;
        if !(zm < sigma && sigma < zp) {
            return Err(Error::Numeric(format!("companion roots {zm}, {zp} do not bracket σ = {sigma}")));
        }
        let sq = big_t.sqrt();
        let kantorovich = dfm.abs().min(dfp.abs()) / sq;
        Ok(CompanionRoots2D {
            t,
            xi,
            sigma,
            sigma_tilde,
            tau,
            z_minus: zm,
            z_plus: zp,
            phi_minus: phim,
            phi_plus: phip,
            seeds,
            beta0: (zp + zm) / (2.0 * big_t),
            beta1: (zp - zm) / (2.0 * sq),
            residuals: [fm, fp],
            kantorovich,
            kantorovich_ok: kantorovich >= seed_row.c1.sqrt(),
        })
    }

    /// Gas state on either side of the middle-sheet point `x(ξ, σ)`.
    pub fn gas_state(&self, t: f64, xi: f64, sigma: f64) -> Result<GasState2D> {
        let row = self.row(xi)?;
        self.gas_state_seeded(t, xi, sigma, &row)
    }

    pub fn gas_state_seeded(&self, t: f64, xi: f64, sigma: f64, seed_row: &ChartRow) -> Result<GasState2D> {
        let roots = self.companion_roots_seeded(t, xi, sigma, seed_row)?;
        let side = |phi: f64, z: f64| -> Result<(Vec2, Vec2, f64)> {
            let x = self.x_first(phi, z)?.0;
            let fr = self.frame_at(&x)?;
            let det = (1.0 + t * fr.lambda1) * (1.0 + t * fr.lambda2);
            if !(det > 0.0) {
                return Err(Error::Numeric(format!("companion point ({}, {}) is not on an outer sheet", x.x, x.y)));
            }
            Ok((x, self.field.velocity(&x), self.density.at(&x) / det))
        };
        let (x_minus, v_minus, rho_minus) = side(roots.phi_minus, roots.z_minus)?;
        let (x_plus, v_plus, rho_plus) = side(roots.phi_plus, roots.z_plus)?;
        let big_t = t - roots.tau;
        let sq = big_t.sqrt();
        let w_gamma = self.field.velocity(&self.gamma_star(xi)?);
        Ok(GasState2D {
            x_minus,
            x_plus,
            v_minus,
            v_plus,
            rho_minus,
            rho_plus,
            b1_hat: (v_plus + v_minus) * 0.5 - w_gamma,
            b2_vec: (v_plus - v_minus) / (2.0 * sq),
            b1: big_t * (rho_plus + rho_minus) * 0.5,
            b2: sq * (rho_plus - rho_minus) * 0.5,
            roots,
        })
    }

    /// Limits as `t ↓ τ(ξ)` at fixed `σ̃` of the amplitude functions.
    pub fn amplitude_limits(&self, xi: f64, sigma_tilde: f64) -> Result<AmplitudeLimits> {
        let row = self.row(xi)?;
        let ts: Vec<f64> = (0..11).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        let states: Vec<GasState2D> = ts
            .iter()
            .map(|&bt| self.gas_state_seeded(row.tau + bt, xi, sigma_tilde * bt, &row))
            .collect::<Result<_>>()?;
        let lim = |f: &dyn Fn(&GasState2D) -> f64| limit_in_sqrt(&ts, &states.iter().map(f).collect::<Vec<_>>());
        Ok(AmplitudeLimits {
            b1: lim(&|s| s.b1),
            b2: lim(&|s| s.b2),
            b2_vec: [lim(&|s| s.b2_vec.x), lim(&|s| s.b2_vec.y)],
            beta0: lim(&|s| s.roots.beta0),
            beta1: lim(&|s| s.roots.beta1),
            row,
        })
    }
}

#[derive(Clone, Debug)]
pub struct CompanionRoots2D {
    pub t: f64,
    pub xi: f64,
    pub sigma: f64,
    pub sigma_tilde: f64,
    pub tau: f64,
    pub z_minus: f64,
    pub z_plus: f64,
    /// Transversal coordinates of the two roots.
    pub phi_minus: f64,
    pub phi_plus: f64,
    /// Closed-form seeds `Z₀∓`.
    pub seeds: [f64; 2],
    pub beta0: f64,
    pub beta1: f64,
    pub residuals: [f64; 2],
    /// `min |∂_Z f| / √(t − τ)` at the roots.
    pub kantorovich: f64,
    pub kantorovich_ok: bool,
}

#[derive(Clone, Debug)]
pub struct GasState2D {
    pub x_minus: Vec2,
    pub x_plus: Vec2,
    pub v_minus: Vec2,
    pub v_plus: Vec2,
    pub rho_minus: f64,
    pub rho_plus: f64,
    /// `(v⁺ + v⁻)/2 − w(γ*(ξ))`.
    pub b1_hat: Vec2,
    /// `(v⁺ − v⁻) / (2√T)`.
    pub b2_vec: Vec2,
    pub b1: f64,
    pub b2: f64,
    pub roots: CompanionRoots2D,
}

#[derive(Clone, Debug)]
pub struct AmplitudeLimits {
    pub b1: Limit,
    pub b2: Limit,
    pub b2_vec: [Limit; 2],
    pub beta0: Limit,
    pub beta1: Limit,
    pub row: ChartRow,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Ball;
    use approx::assert_abs_diff_eq;

    fn chart(w1: &str, w2: &str) -> CuspChart {
        let field = AnalyticPlaneField::parse(w1, w2, Ball::new([0.0, 0.0], 0.6)).unwrap();
        let opts = ChartOptions { xi_range: [-0.3, 0.3], sigma_half_width: 0.2, n_xi: 7, ..Default::default() };
        CuspChart::build(&field, &AnalyticScalarField::constant(1.0), &Vec2::new(0.01, 0.01), opts).unwrap()
    }

    #[test]
    fn straight_chart() {
        let c = chart("-x1 + x1^3 + x1*x2^2", "-x2/2");
        for r in &c.rows {
            assert_abs_diff_eq!(r.gamma.x, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.gamma.y, r.xi, epsilon = 1e-12);
            assert_abs_diff_eq!(r.omega1, 1.0 - r.xi * r.xi, epsilon = 1e-12);
            assert_abs_diff_eq!(r.omega3, 6.0, epsilon = 1e-10);
            assert!(r.q.iter().all(|q| q.abs() < 1e-10));
        }
        let x = c.flow_coordinates(0.1, 0.15).unwrap();
        assert_abs_diff_eq!(x.x, 0.15, epsilon = 1e-12);
        let roots = c.companion_roots_2d(1.01, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(roots.z_plus, 0.0995037, epsilon = 1e-7);
        assert_abs_diff_eq!(roots.z_minus, -roots.z_plus, epsilon = 1e-12);
    }

    #[test]
    fn curved_chart_is_consistent() {
        let c = chart("-x1 + x1^3 + x1*x2^2", "-x2/2 + 0.3*x1^2");
        let r = c.row(0.1).unwrap();
        assert!(r.stationarity.abs() < 1e-10);
        assert!((r.r2_star.norm() - 1.0).abs() < 1e-10);
        assert!(r.omega2.abs() < 1e-9);
        let direct = c.flow_coordinates(0.1, 0.12).unwrap();
        let surrogate = c.x_jet(0.1, 0.12).unwrap().value;
        assert!((direct - surrogate).norm() < 1e-12);
    }
}
