//! Dense univariate polynomials in monomial form.

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    /// `c[k]` multiplies `x^k`.
    pub c: Vec<f64>,
}

impl Poly {
    pub fn new(c: Vec<f64>) -> Self {
        Poly { c }
    }

    /// Polynomial with the given Taylor coefficients `f^(k)(0)`.
    pub fn from_taylor(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let c = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Poly { c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly { c: vec![0.0] };
        }
        Poly { c: self.c.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect() }
    }

    /// Coefficients (in `X`) of `(p(X) − p(x)) / (X − x)`.
    pub fn divided_difference(&self, x: f64) -> Poly {
        let n = self.c.len();
        if n <= 1 {
            return Poly { c: vec![0.0] };
        }
        // Synthetic division of p(X) − p(x) by (X − x).
        let mut q = vec![0.0; n - 1];
        let mut carry = 0.0;
        for k in (1..n).rev() {
            carry = carry * x + self.c[k];
            q[k - 1] = carry;
        }
        Poly { c: q }
    }

    pub fn degree(&self) -> usize {
        self.c.iter().rposition(|&a| a != 0.0).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn divided_difference_matches_quotient() {
        let p = Poly::new(vec![0.3, -1.0, 0.5, 1.0, 0.25]);
        let x = 0.7;
        let q = p.divided_difference(x);
        for &xx in &[-1.0, 0.2, 1.5] {
            assert_abs_diff_eq!(q.eval(xx), (p.eval(xx) - p.eval(x)) / (xx - x), epsilon = 1e-13);
        }
        assert_abs_diff_eq!(q.eval(x), p.derivative().eval(x), epsilon = 1e-14);
    }

    #[test]
    fn taylor_coefficients() {
        let p = Poly::from_taylor(&[0.0, -1.0, 0.0, 6.0]);
        assert_eq!(p.c, vec![0.0, -1.0, 0.0, 1.0]);
        assert_eq!(p.degree(), 3);
    }
}
