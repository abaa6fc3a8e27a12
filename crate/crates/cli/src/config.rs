//! JSON run configuration. Unknown keys are rejected at every level.

use cuspflow_core::cusp::ChartOptions;
use cuspflow_core::curve::CurveOptions;
use cuspflow_core::fields::{AnalyticPlaneField, AnalyticScalarField, Ball, Vec2};
use cuspflow_core::point_mass::{Cubic1DProblem, StartRule, TrackOptions};
use cuspflow_core::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analyze,
    Run1d,
    Oracle1d,
    Chart2d,
    Run2d,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analyze => "analyze",
            Mode::Run1d => "run1d",
            Mode::Oracle1d => "oracle1d",
            Mode::Chart2d => "chart2d",
            Mode::Run2d => "run2d",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub field: Option<FieldSpec>,
    /// Initial density expression in `x1, x2`; defaults to `1`.
    pub density: Option<String>,
    pub line: Option<LineSpec>,
    #[serde(default)]
    pub chart: ChartSpec,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub track: TrackSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub validate: ValidateSpec,
    /// Points per axis of the hypothesis sampling grid.
    #[serde(default = "default_grid")]
    pub hypothesis_grid: usize,
    pub output_dir: Option<PathBuf>,
}

fn default_grid() -> usize {
    64
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub w1: String,
    pub w2: String,
    pub ball: BallSpec,
    /// Start of the singularity search; defaults to the ball center.
    pub seed: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Line data as Taylor coefficients at the blow-up point.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    /// `ρ₀, ρ₁, …`
    pub rho: Vec<f64>,
    #[serde(default)]
    pub omega0: f64,
    pub omega1: f64,
    /// `ω₃, ω₄, …`
    pub omega_high: Vec<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub xi_range: Option<[f64; 2]>,
    pub sigma_half_width: Option<f64>,
    pub n_xi: Option<usize>,
    pub max_degree: Option<usize>,
    pub flow_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub n_zeta: Option<usize>,
    pub zeta_max: Option<f64>,
    pub n_out: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    /// Physical times at which the curve is reconstructed.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum StartSpec {
    Asymptotic,
    Zero,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    /// Final time offset `t_end − t₀`; defaults to `0.5/ω₁`.
    pub horizon: Option<f64>,
    pub delta: Option<f64>,
    pub n_out: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub start: Option<StartSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    /// Offsets `t − t₀` at which oracle and tracker are compared.
    #[serde(default = "default_offsets")]
    pub offsets: Vec<f64>,
}

fn default_particles() -> usize {
    100_000
}
fn default_interval() -> [f64; 2] {
    [-0.5, 0.5]
}
fn default_offsets() -> Vec<f64> {
    vec![0.01, 0.02, 0.04]
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { particles: default_particles(), interval: default_interval(), offsets: default_offsets() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    #[serde(default = "all_criteria")]
    pub criteria: Vec<usize>,
}

fn all_criteria() -> Vec<usize> {
    (1..=9).collect()
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec { criteria: all_criteria() }
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let needs = |what: &str, present: bool| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("mode {} requires `{what}`", self.mode.name())))
            }
        };
        match self.mode {
            Mode::Analyze | Mode::Chart2d | Mode::Run2d => needs("field", self.field.is_some())?,
            Mode::Run1d | Mode::Oracle1d => needs("line", self.line.is_some())?,
            Mode::Validate => {}
        }
        if let Some(f) = &self.field {
            positive("field.ball.radius", Some(f.ball.radius))?;
        }
        let c = &self.chart;
        positive("chart.sigma_half_width", c.sigma_half_width)?;
        positive("chart.flow_tol", c.flow_tol)?;
        if let Some([a, b]) = c.xi_range {
            if !(a < 0.0 && b > 0.0) {
                return Err(Error::Config("chart.xi_range must contain 0".into()));
            }
        }
        let cv = &self.curve;
        for (n, v) in [("curve.t_start", cv.t_start), ("curve.t_end", cv.t_end), ("curve.zeta_max", cv.zeta_max)] {
            positive(n, v)?;
        }
        positive("curve.rtol", cv.rtol)?;
        positive("curve.atol", cv.atol)?;
        let t = &self.track;
        for (n, v) in [("track.horizon", t.horizon), ("track.delta", t.delta), ("track.rtol", t.rtol), ("track.atol", t.atol)] {
            positive(n, v)?;
        }
        let o = &self.oracle;
        if o.particles < 2 || !(o.interval[0] < o.interval[1]) || o.offsets.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("oracle needs ≥ 2 particles, an increasing interval and positive offsets".into()));
        }
        if self.validate.criteria.iter().any(|&k| !(1..=9).contains(&k)) {
            return Err(Error::Config("validate.criteria entries must lie in 1..=9".into()));
        }
        if self.hypothesis_grid < 2 {
            return Err(Error::Config("hypothesis_grid must be at least 2".into()));
        }
        Ok(())
    }

    pub fn plane_field(&self) -> Result<AnalyticPlaneField> {
        let f = self.field.as_ref().ok_or_else(|| Error::Config("missing `field`".into()))?;
        AnalyticPlaneField::parse(&f.w1, &f.w2, Ball::new(f.ball.center, f.ball.radius))
    }

    pub fn seed(&self) -> Vec2 {
        let f = self.field.as_ref().expect("checked field");
        let s = f.seed.unwrap_or(f.ball.center);
        Vec2::new(s[0], s[1])
    }

    pub fn density(&self) -> Result<AnalyticScalarField> {
        AnalyticScalarField::parse(self.density.as_deref().unwrap_or("1"))
    }

    pub fn line_problem(&self) -> Result<Cubic1DProblem> {
        let l = self.line.as_ref().ok_or_else(|| Error::Config("missing `line`".into()))?;
        Cubic1DProblem::new(l.rho.clone(), l.omega0, l.omega1, l.omega_high.clone())
    }

    pub fn chart_options(&self) -> ChartOptions {
        let d = ChartOptions::default();
        let c = &self.chart;
        ChartOptions {
            xi_range: c.xi_range.unwrap_or(d.xi_range),
            sigma_half_width: c.sigma_half_width.unwrap_or(d.sigma_half_width),
            n_xi: c.n_xi.unwrap_or(d.n_xi),
            max_degree: c.max_degree.unwrap_or(d.max_degree),
            flow_tol: c.flow_tol.unwrap_or(d.flow_tol),
        }
    }

    pub fn curve_options(&self) -> CurveOptions {
        let d = CurveOptions::default();
        let c = &self.curve;
        CurveOptions {
            t_start: c.t_start.unwrap_or(d.t_start),
            t_end: c.t_end.unwrap_or(d.t_end),
            n_zeta: c.n_zeta.unwrap_or(d.n_zeta),
            zeta_max: c.zeta_max.or(d.zeta_max),
            n_out: c.n_out.unwrap_or(d.n_out),
            rtol: c.rtol.unwrap_or(d.rtol),
            atol: c.atol.unwrap_or(d.atol),
        }
    }

    /// Tracker options and the final time for `p`.
    pub fn track_options(&self, p: &Cubic1DProblem) -> (TrackOptions, f64) {
        let d = TrackOptions::default();
        let t = &self.track;
        let opts = TrackOptions {
            delta: t.delta.unwrap_or(d.delta),
            n_out: t.n_out.unwrap_or(d.n_out),
            rtol: t.rtol.unwrap_or(d.rtol),
            atol: t.atol.unwrap_or(d.atol),
            start: match t.start {
                Some(StartSpec::Zero) => StartRule::Zero,
                _ => StartRule::Asymptotic,
            },
            outputs: None,
        };
        (opts, p.t0() + t.horizon.unwrap_or(0.5 / p.omega1()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_lacks_mode() {
        assert_eq!(RunConfig::parse("{}").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse(r#"{"mode": "validate", "colour": 1}"#).unwrap_err();
        assert!(matches!(e, Error::Parse(_)), "{e}");
        let e = RunConfig::parse(r#"{"mode": "validate", "curve": {"tend": 1}}"#).unwrap_err();
        assert!(matches!(e, Error::Parse(_)), "{e}");
    }

    #[test]
    fn mode_requirements_and_positivity() {
        assert!(matches!(RunConfig::parse(r#"{"mode": "run2d"}"#).unwrap_err(), Error::Config(_)));
        let e = RunConfig::parse(r#"{"mode": "validate", "curve": {"rtol": -1}}"#).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let ok = RunConfig::parse(r#"{"mode": "run1d", "line": {"rho": [1], "omega1": 1, "omega_high": [6]}}"#).unwrap();
        let p = ok.line_problem().unwrap();
        assert_eq!(ok.track_options(&p).1, 1.5);
    }
}
