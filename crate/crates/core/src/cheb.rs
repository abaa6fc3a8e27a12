//! Tensor-product Chebyshev interpolants of plane-valued maps on a rectangle,
//! sampled at Chebyshev–Lobatto points, with first and second derivatives.

use crate::fields::{Mat2, Vec2};

/// Lobatto abscissae `cos(πk/n)` mapped to `[a, b]`, in decreasing order.
pub fn lobatto_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let u = (std::f64::consts::PI * k as f64 / n as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * u
        })
        .collect()
}

/// Values of a plane map together with its first and second partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapJet2 {
    pub value: Vec2,
    pub d_xi: Vec2,
    pub d_sigma: Vec2,
    pub d_xi_xi: Vec2,
    pub d_xi_sigma: Vec2,
    pub d_sigma_sigma: Vec2,
}

impl MapJet2 {
    /// Jacobian with columns `∂/∂ξ`, `∂/∂σ`.
    pub fn jacobian(&self) -> Mat2 {
        Mat2::from_columns(&[self.d_xi, self.d_sigma])
    }
}

#[derive(Clone, Debug)]
pub struct Cheb2 {
    lo: [f64; 2],
    hi: [f64; 2],
    n: usize,
    /// `coef[c][i * (n + 1) + j]` multiplies `T_i(u) T_j(v)` in component `c`.
    coef: [Vec<f64>; 2],
}

fn dct1(vals: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (j, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, v) in vals.iter().enumerate() {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            s += w * v * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
        }
        let scale = if j == 0 || j == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
        *o = s * scale;
    }
    out
}

fn basis(u: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    let mut dd = vec![0.0; n + 1];
    t[0] = 1.0;
    if n >= 1 {
        t[1] = u;
        d[1] = 1.0;
    }
    for k in 1..n {
        t[k + 1] = 2.0 * u * t[k] - t[k - 1];
        d[k + 1] = 2.0 * t[k] + 2.0 * u * d[k] - d[k - 1];
        dd[k + 1] = 4.0 * d[k] + 2.0 * u * dd[k] - dd[k - 1];
    }
    (t, d, dd)
}

impl Cheb2 {
    /// Fit from samples `values[i][j] = f(ξ_i, σ_j)` at the Lobatto nodes of
    /// [`lobatto_nodes`] in each direction.
    pub fn fit(lo: [f64; 2], hi: [f64; 2], n: usize, values: &[Vec<Vec2>]) -> Cheb2 {
        assert_eq!(values.len(), n + 1);
        let mut coef = [vec![0.0; (n + 1) * (n + 1)], vec![0.0; (n + 1) * (n + 1)]];
        for (c, out) in coef.iter_mut().enumerate() {
            // Transform along σ for every ξ row, then along ξ for every σ column.
            let rows: Vec<Vec<f64>> = values
                .iter()
                .map(|row| {
                    assert_eq!(row.len(), n + 1);
                    dct1(&row.iter().map(|v| v[c]).collect::<Vec<_>>(), n)
                })
                .collect();
            for j in 0..=n {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                for (i, v) in dct1(&col, n).into_iter().enumerate() {
                    out[i * (n + 1) + j] = v;
                }
            }
        }
        Cheb2 { lo, hi, n, coef }
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, xi: f64, sigma: f64) -> bool {
        let eps = 1e-12;
        xi >= self.lo[0] - eps && xi <= self.hi[0] + eps && sigma >= self.lo[1] - eps && sigma <= self.hi[1] + eps
    }

    /// Largest coefficient magnitude in the two highest degrees of either
    /// direction, relative to the largest coefficient overall.
    pub fn tail(&self) -> f64 {
        let n = self.n;
        let mut top: f64 = 0.0;
        let mut tail: f64 = 0.0;
        for c in &self.coef {
            for i in 0..=n {
                for j in 0..=n {
                    let v = c[i * (n + 1) + j].abs();
                    top = top.max(v);
                    if i + 2 > n || j + 2 > n {
                        tail = tail.max(v);
                    }
                }
            }
        }
        tail / top.max(1e-300)
    }

    /// Value and first partials `(x, x_ξ, x_σ)`.
    pub fn eval_first(&self, xi: f64, sigma: f64) -> (Vec2, Vec2, Vec2) {
        let n = self.n;
        let su = 2.0 / (self.hi[0] - self.lo[0]);
        let sv = 2.0 / (self.hi[1] - self.lo[1]);
        let (tu, du, _) = basis((xi - self.lo[0]) * su - 1.0, n);
        let (tv, dv, _) = basis((sigma - self.lo[1]) * sv - 1.0, n);
        let mut out = [[0.0f64; 2]; 3];
        for (c, coef) in self.coef.iter().enumerate() {
            for i in 0..=n {
                let row = &coef[i * (n + 1)..(i + 1) * (n + 1)];
                let (mut a0, mut a1) = (0.0, 0.0);
                for j in 0..=n {
                    a0 += row[j] * tv[j];
                    a1 += row[j] * dv[j];
                }
                out[0][c] += tu[i] * a0;
                out[1][c] += du[i] * a0;
                out[2][c] += tu[i] * a1;
            }
        }
        (
            Vec2::new(out[0][0], out[0][1]),
            Vec2::new(out[1][0], out[1][1]) * su,
            Vec2::new(out[2][0], out[2][1]) * sv,
        )
    }

    pub fn eval(&self, xi: f64, sigma: f64) -> MapJet2 {
        let n = self.n;
        let su = 2.0 / (self.hi[0] - self.lo[0]);
        let sv = 2.0 / (self.hi[1] - self.lo[1]);
        let u = (xi - self.lo[0]) * su - 1.0;
        let v = (sigma - self.lo[1]) * sv - 1.0;
        let (tu, du, ddu) = basis(u, n);
        let (tv, dv, ddv) = basis(v, n);
        let mut out = [[0.0f64; 2]; 6];
        for (c, coef) in self.coef.iter().enumerate() {
            for i in 0..=n {
                let row = &coef[i * (n + 1)..(i + 1) * (n + 1)];
                let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
                for j in 0..=n {
                    a0 += row[j] * tv[j];
                    a1 += row[j] * dv[j];
                    a2 += row[j] * ddv[j];
                }
                out[0][c] += tu[i] * a0;
                out[1][c] += du[i] * a0;
                out[2][c] += tu[i] * a1;
                out[3][c] += ddu[i] * a0;
                out[4][c] += du[i] * a1;
                out[5][c] += tu[i] * a2;
            }
        }
        let v2 = |k: usize, s: f64| Vec2::new(out[k][0], out[k][1]) * s;
        MapJet2 {
            value: v2(0, 1.0),
            d_xi: v2(1, su),
            d_sigma: v2(2, sv),
            d_xi_xi: v2(3, su * su),
            d_xi_sigma: v2(4, su * sv),
            d_sigma_sigma: v2(5, sv * sv),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_smooth_map_and_derivatives() {
        let f = |a: f64, b: f64| Vec2::new((a + 2.0 * b).sin(), (a * b).exp());
        let (lo, hi, n) = ([-0.4, -0.3], [0.5, 0.2], 24);
        let xs = lobatto_nodes(lo[0], hi[0], n);
        let ss = lobatto_nodes(lo[1], hi[1], n);
        let vals: Vec<Vec<Vec2>> = xs.iter().map(|&a| ss.iter().map(|&b| f(a, b)).collect()).collect();
        let c = Cheb2::fit(lo, hi, n, &vals);
        assert!(c.tail() < 1e-14);
        let (a, b) = (0.123, -0.077);
        let j = c.eval(a, b);
        assert_abs_diff_eq!(j.value.x, f(a, b).x, epsilon = 1e-14);
        assert_abs_diff_eq!(j.d_xi.x, (a + 2.0 * b).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(j.d_sigma.y, a * (a * b).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(j.d_sigma_sigma.x, -4.0 * (a + 2.0 * b).sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(j.d_xi_sigma.y, (1.0 + a * b) * (a * b).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(j.d_xi_xi.y, b * b * (a * b).exp(), epsilon = 1e-10);
    }
}
