//! Smooth solution by characteristics: the Lagrangian-to-Eulerian map
//! `y = x + t·w(x)`, the transported density, and the multivalued inverse
//! inside the cusp region.

use crate::error::{Error, Result};
use crate::fields::{AnalyticPlaneField, AnalyticScalarField, Mat2, Vec2};
use crate::jet::Scalar;
use crate::point_mass::Cubic1DProblem;

/// Which branch of the inverse map a Lagrangian point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sheet {
    /// The map is locally one-to-one and the point is the only preimage found.
    Single,
    Lower,
    /// The fold-inverted branch, where `τ(x) < t`.
    Middle,
    Upper,
}

impl Sheet {
    pub fn label(self) -> &'static str {
        match self {
            Sheet::Single => "single",
            Sheet::Lower => "lower",
            Sheet::Middle => "middle",
            Sheet::Upper => "upper",
        }
    }
}

/// A characteristic of the 2D flow evaluated at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicPoint {
    pub x: Vec2,
    pub t: f64,
    pub y: Vec2,
    /// `det(I + t·Dw(x))`.
    pub det_factor: f64,
    pub sheet: Sheet,
}

fn shifted(t: f64, dw: &Mat2) -> Mat2 {
    Mat2::identity() + dw * t
}

pub fn push_forward(field: &AnalyticPlaneField, t: f64, x: &Vec2) -> CharacteristicPoint {
    let [j1, j2] = field.component_jets(x, 1);
    let w = Vec2::new(j1.value(), j2.value());
    let dw = Mat2::new(j1.derivative([1, 0]), j1.derivative([0, 1]), j2.derivative([1, 0]), j2.derivative([0, 1]));
    let a = shifted(t, &dw);
    let det_factor = a.determinant();
    // The middle sheet is where the stronger compression has already folded.
    let tr = dw.trace();
    let disc = (0.25 * tr * tr - dw.determinant()).max(0.0);
    let lambda1 = 0.5 * tr - disc.sqrt();
    let sheet = if 1.0 + t * lambda1 < 0.0 { Sheet::Middle } else { Sheet::Single };
    CharacteristicPoint { x: *x, t, y: x + w * t, det_factor, sheet }
}

/// Density `ρ̄(x)/det(I + t·Dw(x))` carried to `y(t, x)`.
pub fn smooth_density(
    field: &AnalyticPlaneField,
    rho_bar: &AnalyticScalarField,
    t: f64,
    x: &Vec2,
) -> Result<(f64, CharacteristicPoint)> {
    let p = push_forward(field, t, x);
    if p.det_factor.abs() < 1e-13 {
        return Err(Error::Domain(format!(
            "characteristic from ({}, {}) is on the caustic at t = {t} (det = {:.3e})",
            x.x, x.y, p.det_factor
        )));
    }
    Ok((rho_bar.at(x) / p.det_factor, p))
}

/// Rectangle `[lo, hi]` searched for preimages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Window {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Window { lo: Vec2::new(lo[0], lo[1]), hi: Vec2::new(hi[0], hi[1]) }
    }

    fn contains_relaxed(&self, x: &Vec2) -> bool {
        let m = 1e-9 * (1.0 + (self.hi - self.lo).norm());
        x.x >= self.lo.x - m && x.x <= self.hi.x + m && x.y >= self.lo.y - m && x.y <= self.hi.y + m
    }
}

/// Preimages of one Eulerian point.
#[derive(Clone, Debug, PartialEq)]
pub struct Preimages {
    pub points: Vec<CharacteristicPoint>,
    /// Two roots nearly coincide: the point sits on (or numerically at) a fold.
    pub on_fold: bool,
}

const ROOT_TOL: f64 = 1e-12;
const DEDUP: f64 = 1e-9;
const FOLD: f64 = 1e-6;

fn newton_2d(field: &AnalyticPlaneField, t: f64, y: &Vec2, seed: Vec2) -> Option<Vec2> {
    let resid = |x: &Vec2| x + field.velocity(x) * t - y;
    let mut x = seed;
    let mut r = resid(&x);
    for _ in 0..80 {
        let rn = r.norm();
        if rn < 1e-15 * (1.0 + y.norm()) {
            break;
        }
        let a = shifted(t, &field.jacobian(&x));
        let step = a.try_inverse()? * r;
        let mut lam = 1.0;
        loop {
            let cand = x - step * lam;
            let rc = resid(&cand);
            if rc.norm() < rn || lam < 1e-6 {
                x = cand;
                r = rc;
                break;
            }
            lam *= 0.5;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    (r.norm() < ROOT_TOL).then_some(x)
}

fn dedup_and_flag(mut roots: Vec<Vec2>) -> (Vec<Vec2>, bool) {
    let mut kept: Vec<Vec2> = Vec::new();
    roots.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    for r in roots {
        if kept.iter().all(|k| (k - r).norm() >= DEDUP) {
            kept.push(r);
        }
    }
    let mut fold = false;
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            if (kept[i] - kept[j]).norm() <= FOLD {
                fold = true;
            }
        }
    }
    (kept, fold)
}

/// All preimages of `y` at time `t` inside `window`, found by damped Newton from
/// a seed lattice plus optional caller-supplied predictions.
pub fn preimages(
    field: &AnalyticPlaneField,
    t: f64,
    y: &Vec2,
    window: &Window,
    extra_seeds: &[Vec2],
) -> Result<Preimages> {
    let n = 12;
    let mut seeds: Vec<Vec2> = extra_seeds.to_vec();
    for i in 0..=n {
        for j in 0..=n {
            let u = i as f64 / n as f64;
            let v = j as f64 / n as f64;
            seeds.push(Vec2::new(
                window.lo.x + u * (window.hi.x - window.lo.x),
                window.lo.y + v * (window.hi.y - window.lo.y),
            ));
        }
    }
    let roots: Vec<Vec2> =
        seeds.into_iter().filter_map(|s| newton_2d(field, t, y, s)).filter(|x| window.contains_relaxed(x)).collect();
    if roots.is_empty() {
        return Err(Error::Numeric(format!("no preimage of ({}, {}) found at t = {t}", y.x, y.y)));
    }
    let (kept, mut on_fold) = dedup_and_flag(roots);
    let mut points: Vec<CharacteristicPoint> = kept.iter().map(|x| push_forward(field, t, x)).collect();
    if points.iter().any(|p| p.det_factor.abs() < 1e-10) {
        on_fold = true;
    }
    if points.len() == 3 {
        if let Some(mid) = points.iter().position(|p| p.sheet == Sheet::Middle) {
            let xm = points[mid].x;
            let r1 = field.eigenframe(&xm)?.r1;
            points.sort_by(|a, b| (a.x - xm).dot(&r1).total_cmp(&(b.x - xm).dot(&r1)));
            points[0].sheet = Sheet::Lower;
            points[2].sheet = Sheet::Upper;
        }
    } else if points.len() == 1 && points[0].sheet == Sheet::Middle && !on_fold {
        return Err(Error::Numeric("isolated middle-sheet preimage: search window misses the extreme sheets".into()));
    }
    Ok(Preimages { points, on_fold })
}

/// A characteristic of the 1D flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinePoint {
    pub x: f64,
    pub t: f64,
    pub y: f64,
    pub det_factor: f64,
    pub sheet: Sheet,
}

pub fn push_forward_1d(p: &Cubic1DProblem, t: f64, x: f64) -> LinePoint {
    let det_factor = 1.0 + t * p.velocity_prime(x);
    let sheet = if det_factor < 0.0 { Sheet::Middle } else { Sheet::Single };
    LinePoint { x, t, y: x + t * p.velocity(x), det_factor, sheet }
}

pub fn smooth_density_1d(p: &Cubic1DProblem, t: f64, x: f64) -> Result<(f64, LinePoint)> {
    let lp = push_forward_1d(p, t, x);
    if lp.det_factor.abs() < 1e-13 {
        return Err(Error::Domain(format!("characteristic from {x} is on the caustic at t = {t}")));
    }
    Ok((p.density(x) / lp.det_factor, lp))
}

/// Preimages of `y` in `[a, b]` for the 1D map.
pub fn preimages_1d(p: &Cubic1DProblem, t: f64, y: f64, a: f64, b: f64) -> Result<(Vec<LinePoint>, bool)> {
    let g = |x: f64| x + t * p.velocity(x) - y;
    let dg = |x: f64| 1.0 + t * p.velocity_prime(x);
    let n = 256;
    let mut roots = Vec::new();
    let polish = |mut x: f64| -> Option<f64> {
        for _ in 0..60 {
            let d = dg(x);
            if d == 0.0 {
                return None;
            }
            let s = g(x) / d;
            x -= s;
            if s.abs() < 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        (g(x).abs() < ROOT_TOL && x >= a - 1e-9 && x <= b + 1e-9).then_some(x)
    };
    let mut prev = (a, g(a));
    for k in 1..=n {
        let x = a + (b - a) * k as f64 / n as f64;
        let gx = g(x);
        if prev.1 == 0.0 {
            roots.push(prev.0);
        } else if prev.1 * gx < 0.0 {
            let (mut lo, mut hi) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid) * prev.1 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let c = 0.5 * (lo + hi);
            roots.push(polish(c).unwrap_or(c));
        }
        // Tangential touches between lattice points: look at interior minima of |g|.
        if let Some(r) = polish(x) {
            roots.push(r);
        }
        prev = (x, gx);
    }
    if prev.1 == 0.0 {
        roots.push(prev.0);
    }
    roots.retain(|&r| g(r).abs() < ROOT_TOL);
    if roots.is_empty() {
        return Err(Error::Numeric(format!("no preimage of {y} found in [{a}, {b}] at t = {t}")));
    }
    roots.sort_by(f64::total_cmp);
    let mut kept: Vec<f64> = Vec::new();
    for r in roots {
        if kept.last().map_or(true, |&k| r - k >= DEDUP) {
            kept.push(r);
        }
    }
    let mut fold = kept.windows(2).any(|w| w[1] - w[0] <= FOLD);
    let mut pts: Vec<LinePoint> = kept.iter().map(|&x| push_forward_1d(p, t, x)).collect();
    fold |= pts.iter().any(|q| q.det_factor.abs() < 1e-10);
    if pts.len() == 3 {
        pts[0].sheet = Sheet::Lower;
        pts[2].sheet = Sheet::Upper;
    }
    Ok((pts, fold))
}

/// Push a `n × n` Lagrangian lattice over `window` forward to time `t`.
pub fn sheet_diagram(field: &AnalyticPlaneField, t: f64, window: &Window, n: usize) -> Vec<CharacteristicPoint> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = Vec2::new(
                window.lo.x + (window.hi.x - window.lo.x) * i as f64 / (n - 1) as f64,
                window.lo.y + (window.hi.y - window.lo.y) * j as f64 / (n - 1) as f64,
            );
            out.push(push_forward(field, t, &x));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Ball;
    use approx::assert_abs_diff_eq;

    fn test_field() -> AnalyticPlaneField {
        AnalyticPlaneField::parse("-x1 + x1^3 + x1*x2^2", "-x2/2", Ball::new([0.0, 0.0], 0.4)).unwrap()
    }

    #[test]
    fn identity_at_time_zero() {
        let p = push_forward(&test_field(), 0.0, &Vec2::new(0.1, -0.2));
        assert_eq!(p.y, Vec2::new(0.1, -0.2));
        assert_eq!(p.det_factor, 1.0);
    }

    #[test]
    fn blow_up_point_is_degenerate() {
        let f = test_field();
        assert_abs_diff_eq!(push_forward(&f, 1.0, &Vec2::zeros()).det_factor, 0.0);
        let rho = AnalyticScalarField::constant(1.0);
        assert!(matches!(smooth_density(&f, &rho, 1.0, &Vec2::zeros()), Err(Error::Domain(_))));
        let (r, _) = smooth_density(&f, &rho, 0.5, &Vec2::zeros()).unwrap();
        assert_abs_diff_eq!(r, 1.0 / (0.5 * 0.75), epsilon = 1e-15);
    }

    #[test]
    fn line_examples() {
        let p = Cubic1DProblem::canonical();
        assert_eq!(push_forward_1d(&p, 0.5, 1.0).y, 1.0);
        let (r, _) = smooth_density_1d(&p, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(r, 1.0 / 0.875, epsilon = 1e-15);
        let (pts, fold) = preimages_1d(&p, 1.21, 0.0, -1.0, 1.0).unwrap();
        assert!(!fold);
        let xs: Vec<f64> = pts.iter().map(|q| q.x).collect();
        let e = (0.21f64 / 1.21).sqrt();
        assert_eq!(xs.len(), 3);
        assert_abs_diff_eq!(xs[0], -e, epsilon = 1e-13);
        assert_abs_diff_eq!(xs[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(xs[2], e, epsilon = 1e-13);
        assert_eq!([pts[0].sheet, pts[1].sheet, pts[2].sheet], [Sheet::Lower, Sheet::Middle, Sheet::Upper]);
    }

    #[test]
    fn plane_roots_inside_cusp() {
        let f = test_field();
        let w = Window::new([-0.5, -0.3], [0.5, 0.3]);
        let pre = preimages(&f, 1.21, &Vec2::zeros(), &w, &[]).unwrap();
        assert_eq!(pre.points.len(), 3);
        let e = (0.21f64 / 1.21).sqrt();
        assert_abs_diff_eq!(pre.points[0].x.x, -e, epsilon = 1e-12);
        assert_abs_diff_eq!(pre.points[1].x.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pre.points[2].x.x, e, epsilon = 1e-12);
        assert_eq!(pre.points[1].sheet, Sheet::Middle);
        for p in &pre.points {
            assert_abs_diff_eq!(p.x.y, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_root_before_blow_up() {
        let f = test_field();
        let w = Window::new([-0.4, -0.3], [0.4, 0.3]);
        let pre = preimages(&f, 0.8, &Vec2::new(0.01, 0.02), &w, &[]).unwrap();
        assert_eq!(pre.points.len(), 1);
        assert_eq!(pre.points[0].sheet, Sheet::Single);
    }
}
