//! Explicit integrators: adaptive Dormand–Prince 5(4) for general systems and
//! a fixed-sequence Gragg–Bulirsch–Stoer extrapolation step whose output is a
//! smooth function of the step length (used for flow maps inside Newton solves).

use crate::error::{Error, Result};

/// Step-size control for [`dopri5`].
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step magnitude; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Largest step magnitude.
    pub h_max: f64,
    /// Relative step floor; smaller steps abort with a stiffness error.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: None, h_max: f64::INFINITY, h_min_rel: 1e-14, max_steps: 200_000 }
    }
}

impl OdeOptions {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Default::default() }
    }
}

/// Counters reported by [`dopri5`].
#[derive(Clone, Copy, Debug, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// Integrate `y' = f(t, y)` from `t0` through each time in `outputs` (monotone, same
/// direction), returning the state at every output time.
///
/// A failing right-hand side inside a trial step counts as a rejected step;
/// the error propagates once the step has shrunk to the floor.
pub fn dopri5<F>(mut f: F, t0: f64, y0: &[f64], outputs: &[f64], opts: &OdeOptions) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut results = Vec::with_capacity(outputs.len());
    let Some(&t_last) = outputs.last() else {
        return Ok((results, stats));
    };
    let dir = if t_last >= t0 { 1.0 } else { -1.0 };
    let span = (t_last - t0).abs().max(outputs.iter().map(|t| (t - t0).abs()).fold(0.0, f64::max));
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1)?;
    stats.evaluations += 1;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let weight = |a: f64, b: f64| opts.atol + opts.rtol * a.abs().max(b.abs());
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            let d0 = (y.iter().map(|v| (v / weight(*v, *v)).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
            let d1 = (k1.iter().zip(&y).map(|(k, v)| (k / weight(*v, *v)).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span.max(1e-300) } else { 0.01 * d0 / d1 };
            h0.min(span)
        }
    }
    .min(opts.h_max);
    let h_floor = opts.h_min_rel * span.max(t0.abs()).max(1e-300);
    let mut last_err = String::new();
    for &t_out in outputs {
        while (t_out - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Numeric(format!("step budget of {} exhausted at t = {t}", opts.max_steps)));
            }
            let mut hs = h.min(opts.h_max);
            let remaining = (t_out - t).abs();
            let clipped = hs >= remaining * (1.0 - 1e-12);
            if clipped {
                hs = remaining;
            }
            let hd = hs * dir;
            let stage = (|| -> Result<()> {
                lin(&mut ytmp, &y, hd, &[(A21, &k1)]);
                f(t + C2 * hd, &ytmp, &mut k2)?;
                lin(&mut ytmp, &y, hd, &[(A31, &k1), (A32, &k2)]);
                f(t + C3 * hd, &ytmp, &mut k3)?;
                lin(&mut ytmp, &y, hd, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
                f(t + C4 * hd, &ytmp, &mut k4)?;
                lin(&mut ytmp, &y, hd, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
                f(t + C5 * hd, &ytmp, &mut k5)?;
                lin(&mut ytmp, &y, hd, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
                f(t + hd, &ytmp, &mut k6)?;
                lin(&mut ynew, &y, hd, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
                f(t + hd, &ynew, &mut k7)?;
                Ok(())
            })();
            stats.evaluations += 6;
            let err = match stage {
                Ok(()) => {
                    let mut acc = 0.0;
                    for i in 0..n {
                        let e = hd
                            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                        let w = weight(y[i], ynew[i]);
                        acc += (e / w).powi(2);
                    }
                    let e = (acc / n.max(1) as f64).sqrt();
                    if e.is_finite() {
                        e
                    } else {
                        last_err = "non-finite error estimate".into();
                        f64::INFINITY
                    }
                }
                Err(e) => {
                    last_err = e.to_string();
                    f64::INFINITY
                }
            };
            if err <= 1.0 {
                stats.accepted += 1;
                t = if clipped { t_out } else { t + hd };
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !clipped || fac < 1.0 {
                    h = hs * fac;
                }
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
                h = hs * fac;
                if h < h_floor {
                    return Err(Error::Numeric(format!(
                        "step size underflow at t = {t:.6e} (stiffness suspected){}",
                        if last_err.is_empty() { String::new() } else { format!("; last failure: {last_err}") }
                    )));
                }
            }
        }
        results.push(y.clone());
    }
    Ok((results, stats))
}

const GBS_SEQUENCE: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

/// One Gragg–Bulirsch–Stoer macro step of length `h` with a fixed number of
/// extrapolation levels. Returns the extrapolated state and an error estimate.
pub fn gbs_step<F>(f: &mut F, y0: &[f64], h: f64, levels: usize) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let levels = levels.clamp(2, GBS_SEQUENCE.len());
    let n = y0.len();
    let mut f0 = vec![0.0; n];
    f(y0, &mut f0)?;
    let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(levels);
    let mut err = f64::INFINITY;
    let mut zprev = vec![0.0; n];
    let mut zcur = vec![0.0; n];
    let mut fz = vec![0.0; n];
    for k in 0..levels {
        let m = GBS_SEQUENCE[k];
        let hs = h / m as f64;
        for i in 0..n {
            zprev[i] = y0[i];
            zcur[i] = y0[i] + hs * f0[i];
        }
        for _ in 1..m {
            f(&zcur, &mut fz)?;
            for i in 0..n {
                let next = zprev[i] + 2.0 * hs * fz[i];
                zprev[i] = zcur[i];
                zcur[i] = next;
            }
        }
        f(&zcur, &mut fz)?;
        let base: Vec<f64> = (0..n).map(|i| 0.5 * (zcur[i] + zprev[i] + hs * fz[i])).collect();
        let mut row = vec![base];
        for j in 1..=k {
            let ratio = (GBS_SEQUENCE[k] as f64 / GBS_SEQUENCE[k - j] as f64).powi(2) - 1.0;
            let prev = &table[k - 1][j - 1];
            let cur = &row[j - 1];
            let next: Vec<f64> = (0..n).map(|i| cur[i] + (cur[i] - prev[i]) / ratio).collect();
            row.push(next);
        }
        if k >= 1 {
            err = (0..n).map(|i| (row[k][i] - row[k - 1][i]).abs()).fold(0.0, f64::max);
        }
        table.push(row);
    }
    let best = table.pop().unwrap().pop().unwrap();
    Ok((best, err))
}

/// Flow map of an autonomous system over `length`, by GBS macro steps; the
/// interval is halved recursively until each step's error estimate is below
/// `tol · (1 + |y|)`.
pub fn gbs_flow<F>(mut f: F, y0: &[f64], length: f64, max_macro: f64, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let pieces = ((length.abs() / max_macro).ceil() as usize).max(1);
    let mut y = y0.to_vec();
    let h = length / pieces as f64;
    for _ in 0..pieces {
        y = gbs_adaptive(&mut f, &y, h, tol, 0)?;
    }
    Ok(y)
}

fn gbs_adaptive<F>(f: &mut F, y0: &[f64], h: f64, tol: f64, depth: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if h == 0.0 {
        return Ok(y0.to_vec());
    }
    let (y, err) = gbs_step(f, y0, h, GBS_SEQUENCE.len())?;
    let scale = 1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if err <= tol * scale {
        return Ok(y);
    }
    if depth >= 20 {
        return Err(Error::convergence("extrapolated flow step", err));
    }
    let mid = gbs_adaptive(f, y0, 0.5 * h, tol, depth + 1)?;
    gbs_adaptive(f, &mid, 0.5 * h, tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay_reaches_all_outputs() {
        let outs = [0.5, 1.0, 2.0];
        let (ys, stats) =
            dopri5(|_, y, dy| { dy[0] = -y[0]; Ok(()) }, 0.0, &[1.0], &outs, &OdeOptions::tol(1e-12, 1e-14)).unwrap();
        for (t, y) in outs.iter().zip(&ys) {
            assert_abs_diff_eq!(y[0], (-t).exp(), epsilon = 1e-11);
        }
        assert!(stats.accepted > 5);
    }

    #[test]
    fn backward_integration_of_oscillator() {
        let outs = [-1.0, -std::f64::consts::PI];
        let (ys, _) = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            &outs,
            &OdeOptions::tol(1e-12, 1e-14),
        )
        .unwrap();
        assert_abs_diff_eq!(ys[0][0], (-1.0f64).sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(ys[1][1], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn failing_rhs_reports_underflow() {
        let r = dopri5(
            |t, _, dy| {
                if t > 0.5 {
                    Err(Error::Domain("left the region".into()))
                } else {
                    dy[0] = 1.0;
                    Ok(())
                }
            },
            0.0,
            &[0.0],
            &[1.0],
            &OdeOptions::default(),
        );
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    #[test]
    fn gbs_matches_rotation() {
        let y = gbs_flow(
            |y, dy| {
                dy[0] = -y[1];
                dy[1] = y[0];
                Ok(())
            },
            &[1.0, 0.0],
            1.2,
            0.5,
            1e-13,
        )
        .unwrap();
        assert_abs_diff_eq!(y[0], 1.2f64.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(y[1], 1.2f64.sin(), epsilon = 1e-13);
    }

    #[test]
    fn gbs_is_exact_for_constant_fields() {
        let y = gbs_flow(|_, dy| { dy[0] = 2.0; dy[1] = 0.0; Ok(()) }, &[0.1, 0.3], -0.7, 0.5, 1e-13).unwrap();
        assert_abs_diff_eq!(y[0], 0.1 - 1.4, epsilon = 1e-14);
        assert_eq!(y[1], 0.3);
    }
}
