use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::svg::{Plot, Scale, Series};
use cuspflow_core::cusp::CuspChart;
use cuspflow_core::curve::{balance_residuals, curve_init, integrate, node_init, physical_curve, CurveNode};
use cuspflow_core::fields::{check_hypotheses, find_generic_singularity, AnalyticPlaneField, AnalyticScalarField};
use cuspflow_core::point_mass::{
    delta_sensitivity, equilibrium_jacobian, mass_law, s0_by_integrability, s0_coefficient, s0_from_linear_equation,
    track_point_mass,
};
use cuspflow_core::validation::{criterion, oracle_comparison, Bound};
use cuspflow_core::{Error, Result};
use serde_json::json;
use std::fmt::Write;

fn require_hypotheses(field: &AnalyticPlaneField, density: &AnalyticScalarField, grid: usize) -> Result<serde_json::Value> {
    let h = check_hypotheses(field, density, grid);
    if !h.ok() {
        return Err(Error::Hypothesis(format!(
            "{} of {} sampled points violate the data hypotheses; first: {}",
            h.failures.len(),
            h.samples,
            h.failures.join("; ")
        )));
    }
    Ok(json!({ "samples": h.samples, "min_eigen_gap": h.min_gap, "min_density": h.min_density }))
}

fn build_chart(cfg: &RunConfig) -> Result<(CuspChart, serde_json::Value)> {
    let field = cfg.plane_field()?;
    let density = cfg.density()?;
    let hyp = require_hypotheses(&field, &density, cfg.hypothesis_grid)?;
    let chart = CuspChart::build(&field, &density, &cfg.seed(), cfg.chart_options())?;
    Ok((chart, hyp))
}

pub fn analyze(cfg: &RunConfig, out: &mut Artifacts) -> Result<String> {
    let field = cfg.plane_field()?;
    let density = cfg.density()?;
    let hyp = require_hypotheses(&field, &density, cfg.hypothesis_grid)?;
    let s = find_generic_singularity(&field, &cfg.seed())?;
    let frame = field.eigenframe(&s.x0)?;
    let chart = CuspChart::build(&field, &density, &cfg.seed(), cfg.chart_options())?;
    let node = CurveNode::new(&chart, 0.0)?;
    let init = node_init(&chart, &node)?;
    let amp = chart.amplitude_limits(0.0, 0.0)?;
    let row = &amp.row;
    let m = |a: &cuspflow_core::fields::Mat2| [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]];
    let report = json!({
        "hypotheses": hyp,
        "singularity": {
            "x0": [s.x0.x, s.x0.y],
            "t0": s.t0,
            "hessian_lambda1": m(&s.hessian_lambda1),
            "hessian_tau": m(&s.hessian_tau),
        },
        "eigenframe": {
            "lambda1": frame.lambda1, "lambda2": frame.lambda2,
            "r1": [frame.r1.x, frame.r1.y], "r2": [frame.r2.x, frame.r2.y],
        },
        "chart_row": {
            "omega1": row.omega1, "omega3": row.omega3, "omega4": row.omega4,
            "c1": row.c1, "c3": row.c3, "p0": row.p0, "q": row.q,
        },
        "amplitudes": { "b1": amp.b1.value, "b2": [amp.b2_vec[0].value, amp.b2_vec[1].value] },
        "curve_start": {
            "rho0": init.rho0, "s0": init.s0, "df1_ds": init.df1_ds, "s0_slope": init.s0_slope,
            "g2_residual": init.g2_residual, "fuchs": init.fuchs, "lambda_spectrum": init.spectrum,
            "full_linearization_spectrum": init.full.as_ref().map(|f| f.spectrum),
        },
    });
    out.json("report.json", &report)?;
    let mut text = String::new();
    let _ = writeln!(text, "t0 = {:.12}", s.t0);
    let _ = writeln!(text, "x0 = ({:.12}, {:.12})", s.x0.x, s.x0.y);
    let h = &s.hessian_lambda1;
    let _ = writeln!(text, "Hessian of lambda1 = [[{:.8}, {:.8}], [{:.8}, {:.8}]]", h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    let _ = writeln!(text, "rho0 = {:.10}, S0 = {:.10}", init.rho0, init.s0);
    let sp: Vec<String> = init.spectrum.iter().map(|v| format!("{v:.8}")).collect();
    let _ = writeln!(text, "Lambda spectrum = {{{}}}", sp.join(", "));
    out.write("report.txt", text.as_bytes())?;
    Ok(text)
}

pub fn run1d(cfg: &RunConfig, out: &mut Artifacts) -> Result<String> {
    let p = cfg.line_problem()?;
    let (opts, t_end) = cfg.track_options(&p);
    let states = track_point_mass(&p, t_end, &opts)?;
    let rows: Vec<Vec<f64>> = states.iter().map(|s| vec![s.t, s.x, s.y, s.m, s.v, s.x_minus, s.x_plus, s.residual]).collect();
    out.csv("trajectory.csv", &["t", "x", "y", "m", "v", "x_minus", "x_plus", "residual"], &rows)?;

    let jac = equilibrium_jacobian(&p)?;
    let route = s0_by_integrability(&p)?;
    let law = mass_law(&p)?;
    let sens = delta_sensitivity(&p, t_end, &opts)?;
    let summary = json!({
        "t0": p.t0(),
        "s0": { "closed_form": s0_coefficient(&p), "linear_equation": s0_from_linear_equation(&p),
                "integrability": route.s0, "integrability_slope": route.slope, "linearity_defect": route.linearity_defect },
        "jacobian": { "analytic": jac.analytic, "numeric": jac.numeric, "limit_errors": jac.limit_errors },
        "mass_law": { "aitken": law.aitken, "predicted": law.predicted, "offsets": law.offsets, "ratios": law.ratios },
        "delta_halving_change": sens,
    });
    out.json("summary.json", &summary)?;

    let t0 = p.t0();
    let mass: Vec<(f64, f64)> = states.iter().map(|s| (s.t - t0, s.m)).collect();
    let predicted: Vec<(f64, f64)> = mass.iter().map(|&(d, _)| (d, law.predicted * d.sqrt())).collect();
    let plot = Plot::new("point mass", "t - t0", "m")
        .scales(Scale::Log, Scale::Log)
        .with(Series::line("tracked", mass))
        .with(Series::line("leading order", predicted));
    out.write("mass.svg", plot.render().as_bytes())?;
    let plot = Plot::new("point mass position", "t", "y")
        .with(Series::line("y", states.iter().map(|s| (s.t, s.y)).collect()))
        .with(Series::line("x", states.iter().map(|s| (s.t, s.x)).collect()));
    out.write("position.svg", plot.render().as_bytes())?;

    let last = states.last().ok_or_else(|| Error::Numeric("empty trajectory".into()))?;
    Ok(format!(
        "t0 = {t0:.12}\nS0 = {:.12} (integrability {:.12})\nmass-law limit {:.8} vs {:.8}\nm({:.6}) = {:.10}, y = {:.10}\n",
        s0_coefficient(&p),
        route.s0,
        law.aitken,
        law.predicted,
        last.t,
        last.m,
        last.y
    ))
}

pub fn oracle1d(cfg: &RunConfig, out: &mut Artifacts) -> Result<String> {
    let p = cfg.line_problem()?;
    let o = &cfg.oracle;
    let mut rows = Vec::new();
    let mut text = String::new();
    for &d in &o.offsets {
        let c = oracle_comparison(&p, d, o.interval, o.particles)?;
        rows.push(vec![d, p.t0() + d, c.particles as f64, c.merges as f64, c.mass_rel, c.position_abs, c.mass_drift, c.momentum_drift]);
        let _ = writeln!(
            text,
            "t - t0 = {d}: merges {}, mass rel. error {:.3e}, position error {:.3e}, drift (mass {:.1e}, momentum {:.1e})",
            c.merges, c.mass_rel, c.position_abs, c.mass_drift, c.momentum_drift
        );
    }
    out.csv(
        "comparison.csv",
        &["offset", "t", "particles", "merges", "mass_rel_error", "position_abs_error", "mass_drift", "momentum_drift"],
        &rows,
    )?;
    let d = *o.offsets.last().expect("checked offsets");
    let mut refine = Vec::new();
    for k in (0..4).rev() {
        let n = (o.particles >> k).max(2);
        let c = oracle_comparison(&p, d, o.interval, n)?;
        refine.push(vec![n as f64, c.mass_rel, c.position_abs]);
    }
    out.csv("refinement.csv", &["particles", "mass_rel_error", "position_abs_error"], &refine)?;
    let plot = Plot::new("sticky-particle refinement", "particles", "error")
        .scales(Scale::Log, Scale::Log)
        .with(Series::line("mass", refine.iter().map(|r| (r[0], r[1])).collect()))
        .with(Series::dots("position", refine.iter().map(|r| (r[0], r[2])).collect()));
    out.write("refinement.svg", plot.render().as_bytes())?;
    Ok(text)
}

pub fn chart2d(cfg: &RunConfig, out: &mut Artifacts) -> Result<String> {
    let (chart, hyp) = build_chart(cfg)?;
    let mut header: Vec<String> = ["xi", "gamma1", "gamma2", "r2s1", "r2s2", "tau", "omega1", "omega3", "omega4"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=8).map(|k| format!("q{k}")));
    header.extend(["c1", "c3", "p0"].iter().map(|s| s.to_string()));
    let rows: Vec<Vec<f64>> = chart
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.xi, r.gamma.x, r.gamma.y, r.r2_star.x, r.r2_star.y, r.tau, r.omega1, r.omega3, r.omega4];
            v.extend(r.q);
            v.extend([r.c1, r.c3, r.p0]);
            v
        })
        .collect();
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    out.csv("chart.csv", &h, &rows)?;
    let fold: Vec<(f64, f64)> = chart
        .rows
        .iter()
        .map(|r| {
            let y = r.gamma + chart.field.velocity(&r.gamma) * r.tau;
            (y.x, y.y)
        })
        .collect();
    let plot = Plot::new("singular set", "x1", "x2")
        .with(Series::line("gamma*", chart.rows.iter().map(|r| (r.gamma.x, r.gamma.y)).collect()))
        .with(Series::line("fold image at tau", fold));
    out.write("gamma_star.svg", plot.render().as_bytes())?;
    let plot = Plot::new("blow-up time along gamma*", "xi", "tau").with(Series::line("tau", chart.rows.iter().map(|r| (r.xi, r.tau)).collect()));
    out.write("tau.svg", plot.render().as_bytes())?;
    out.json(
        "summary.json",
        &json!({
            "hypotheses": hyp,
            "t0": chart.singularity.t0,
            "x0": [chart.singularity.x0.x, chart.singularity.x0.y],
            "surrogate_degree": chart.surface().degree(),
            "surrogate_tail": chart.surface().tail(),
            "rows": chart.rows.len(),
        }),
    )?;
    Ok(format!(
        "chart with {} rows, surrogate degree {} (tail {:.1e}), t0 = {:.12}\n",
        chart.rows.len(),
        chart.surface().degree(),
        chart.surface().tail(),
        chart.singularity.t0
    ))
}

pub fn run2d(cfg: &RunConfig, out: &mut Artifacts) -> Result<String> {
    let (chart, hyp) = build_chart(cfg)?;
    let opts = cfg.curve_options();
    let data = curve_init(&chart, &opts)?;
    let spectra: Vec<Vec<f64>> = data
        .init
        .iter()
        .map(|n| {
            let mut v = vec![n.zeta, n.rho0, n.s0, n.s0_slope, n.df1_ds, n.g2_residual, n.fuchs];
            v.extend(n.spectrum);
            v
        })
        .collect();
    out.csv(
        "spectra.csv",
        &["zeta", "rho0", "s0", "s0_slope", "df1_ds", "g2_residual", "fuchs", "lambda1", "lambda2", "lambda3", "lambda4", "lambda5"],
        &spectra,
    )?;
    let sol = integrate(&chart, &data, &opts)?;
    let balance = balance_residuals(&sol, &chart)?;
    let nj = sol.nodes.len();
    let residual = |k: usize, j: usize| -> (f64, f64) {
        if k == 0 || k + 1 == sol.ts.len() || j == 0 || j + 1 == nj {
            return (f64::NAN, f64::NAN);
        }
        let s = &balance.samples[(k - 1) * (nj - 2) + (j - 1)];
        (s.mass, s.momentum)
    };
    let digits = (sol.ts.len().max(2) - 1).to_string().len();
    for (k, level) in sol.states.iter().enumerate() {
        let bt = sol.ts[k];
        let du = sol.zeta_slopes(level);
        let mut rows = Vec::with_capacity(nj);
        for (j, u) in level.iter().enumerate() {
            let kin = cuspflow_core::curve::kinematics(&chart, &sol.nodes[j], bt, u, du[j])?;
            let (rm, rp) = residual(k, j);
            rows.push(vec![
                bt, kin.t, sol.nodes[j].zeta, kin.y.x, kin.y.y, bt.sqrt() * u[0], kin.y_t.x, kin.y_t.y, u[0], u[1], u[2], u[3], u[4], rm, rp,
            ]);
        }
        out.csv(
            &format!("curve/level_{k:0digits$}.csv"),
            &["T", "t", "zeta", "y1", "y2", "eta", "v1", "v2", "eta_hat", "sigma_hat", "xi_hat", "S", "Z", "mass_residual", "momentum_residual"],
            &rows,
        )?;
    }

    let t0 = chart.singularity.t0;
    let snapshots = if cfg.curve.snapshot_times.is_empty() {
        vec![t0 + 0.5 * opts.t_end, t0 + opts.t_end]
    } else {
        cfg.curve.snapshot_times.clone()
    };
    let mut curve_plot = Plot::new("singular curve", "y1", "y2");
    let mut admissible = true;
    for (i, &t) in snapshots.iter().enumerate() {
        let samples = physical_curve(&sol, &chart, t)?;
        admissible &= samples.iter().all(|s| s.admissible());
        let rows: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| {
                vec![s.t, s.zeta, s.y.x, s.y.y, s.eta, s.v.x, s.v.y, s.normal.x, s.normal.y, s.impingement[0], s.impingement[1], s.fold_distance]
            })
            .collect();
        out.csv(
            &format!("snapshot_{i}.csv"),
            &["t", "zeta", "y1", "y2", "eta", "v1", "v2", "n1", "n2", "impingement_plus", "impingement_minus", "fold_distance"],
            &rows,
        )?;
        curve_plot = curve_plot.with(Series::line(format!("t = {t:.5}"), samples.iter().map(|s| (s.y.x, s.y.y)).collect()));
    }
    out.write("curve.svg", curve_plot.render().as_bytes())?;
    let mut eta_plot = Plot::new("rescaled density", "T", "eta_hat").scales(Scale::Log, Scale::Linear);
    for j in [0, nj / 2, nj - 1] {
        let pts = sol.ts.iter().zip(&sol.states).map(|(&t, l)| (t, l[j][0])).collect();
        eta_plot = eta_plot.with(Series::line(format!("zeta = {:.4}", sol.nodes[j].zeta), pts));
    }
    out.write("eta_hat.svg", eta_plot.render().as_bytes())?;

    out.json(
        "summary.json",
        &json!({
            "hypotheses": hyp,
            "t0": t0,
            "zeta_half_width": data.zeta_grid.last(),
            "spectrum_deviation": data.spectrum_deviation(),
            "full_linearization_spectrum": data.init[nj / 2].full.as_ref().map(|f| f.spectrum),
            "steps": { "accepted": sol.stats.accepted, "rejected": sol.stats.rejected, "evaluations": sol.stats.evaluations },
            "balance": { "max_mass": balance.max_mass, "max_momentum": balance.max_momentum, "admissible": balance.all_admissible },
            "snapshots_admissible": admissible,
        }),
    )?;
    Ok(format!(
        "{} nodes, {} levels, spectrum deviation {:.1e}; balance residuals mass {:.3e}, momentum {:.3e}; admissible {}\n",
        nj,
        sol.ts.len(),
        data.spectrum_deviation(),
        balance.max_mass,
        balance.max_momentum,
        balance.all_admissible && admissible
    ))
}

pub fn validate(cfg: &RunConfig, out: &mut Artifacts) -> Result<String> {
    let outcomes: Vec<_> = cfg.validate.criteria.iter().filter_map(|&k| criterion(k)).collect();
    let mut text = String::new();
    let mut rows = Vec::new();
    for o in &outcomes {
        let _ = writeln!(text, "{}", o.line());
        for c in &o.checks {
            let bound = if c.bound == Bound::AtMost { 1.0 } else { -1.0 };
            rows.push(vec![o.id as f64, f64::from(u8::from(c.passed())), c.value, c.tolerance, bound]);
        }
    }
    out.write("validation.txt", text.as_bytes())?;
    out.csv("checks.csv", &["criterion", "passed", "value", "tolerance", "bound"], &rows)?;
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.id.to_string()).collect();
    if failed.is_empty() {
        Ok(text)
    } else {
        print!("{text}");
        Err(Error::Numeric(format!("acceptance criteria failed: {}", failed.join(", "))))
    }
}
