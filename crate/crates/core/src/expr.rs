//! Closed-form expressions over the plane coordinates `x1`, `x2`.
//!
//! Grammar (usual precedence, `^` right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | x1 | x2 | x | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | ln | sqrt
//! ```
//!
//! `x` is accepted as an alias of `x1` for line data.

use crate::error::Error;
use crate::jet::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, Error> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluate with the given coordinate values (length 2; unused entries may be constants).
    pub fn eval<S: Scalar>(&self, vars: &[S; 2]) -> S {
        match self {
            Expr::Const(c) => vars[0].lift(*c),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, b) => {
                let base = a.eval(vars);
                match b.constant_value() {
                    Some(p) if p.fract() == 0.0 && p.abs() <= 64.0 => base.powi(p as i32),
                    Some(p) => base.powf(p),
                    None => (b.eval(vars) * base.ln()).exp(),
                }
            }
            Expr::Func(f, a) => {
                let u = a.eval(vars);
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                    Func::Ln => u.ln(),
                    Func::Sqrt => u.sqrt(),
                }
            }
        }
    }

    /// Value of a coordinate-free subexpression.
    pub fn constant_value(&self) -> Option<f64> {
        if self.uses_variables() {
            None
        } else {
            Some(self.eval(&[0.0, 0.0]))
        }
    }

    fn uses_variables(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Func(_, a) => a.uses_variables(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_variables() || b.uses_variables()
            }
        }
    }

    /// True when the expression contains only `+ - *` and non-negative integer powers.
    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Neg(a) => a.is_polynomial(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_polynomial() && b.is_polynomial(),
            Expr::Div(a, b) => a.is_polynomial() && b.constant_value().is_some(),
            Expr::Pow(a, b) => {
                a.is_polynomial() && matches!(b.constant_value(), Some(p) if p >= 0.0 && p.fract() == 0.0)
            }
            Expr::Func(_, a) => !a.uses_variables(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, Error> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{text}' at column {}", start + 1)))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, i));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, i));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}' at column {} in '{src}'", i + 1)));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn error(&self, msg: &str) -> Error {
        let col = self.tokens.get(self.pos).map(|t| t.1 + 1).unwrap_or(self.src.chars().count() + 1);
        Error::Parse(format!("{msg} at column {col} in '{}'", self.src))
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, Error> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(self.unary()?.into()))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, Error> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(base.into(), exponent.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, Error> {
        let tok = self.peek().cloned().ok_or_else(|| self.error("unexpected end of expression"))?;
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "x1" | "x" => Ok(Expr::Var(0)),
                    "x2" => Ok(Expr::Var(1)),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "sin" | "cos" | "exp" | "ln" | "sqrt" => {
                        let f = match name.as_str() {
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            "exp" => Func::Exp,
                            "ln" => Func::Ln,
                            _ => Func::Sqrt,
                        };
                        if self.peek() != Some(&Tok::LParen) {
                            return Err(self.error(&format!("expected '(' after '{name}'")));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Expr::Func(f, arg.into()))
                    }
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&format!("unknown identifier '{name}'")))
                    }
                }
            }
            _ => Err(self.error("expected a number, variable, function or '('")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), Error> {
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error("expected ')'"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use approx::assert_abs_diff_eq;

    fn ev(src: &str, x: [f64; 2]) -> f64 {
        Expr::parse(src).unwrap().eval(&x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_abs_diff_eq!(ev("1 + 2 * 3", [0.0, 0.0]), 7.0);
        assert_abs_diff_eq!(ev("2 ^ 3 ^ 2", [0.0, 0.0]), 512.0);
        assert_abs_diff_eq!(ev("-x1^2", [3.0, 0.0]), -9.0);
        assert_abs_diff_eq!(ev("8 / 4 / 2", [0.0, 0.0]), 1.0);
        assert_abs_diff_eq!(ev("1.5e-1 * x2", [0.0, 2.0]), 0.3);
    }

    #[test]
    fn functions_evaluate() {
        assert_abs_diff_eq!(ev("sin(x1)^2 + cos(x1)^2", [0.7, 0.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev("exp(ln(x2))", [0.0, 2.5]), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ev("sqrt(x)", [4.0, 0.0]), 2.0);
    }

    #[test]
    fn errors_carry_position() {
        for bad in ["", "1 +", "foo(x1)", "x3", "(x1", "x1 $ 2", "sin x1"] {
            let e = Expr::parse(bad).unwrap_err();
            assert!(matches!(e, Error::Parse(_)), "{bad}: {e:?}");
        }
    }

    #[test]
    fn polynomial_detection() {
        assert!(Expr::parse("-x1 + x1^3 + x1*x2^2").unwrap().is_polynomial());
        assert!(Expr::parse("x1/2").unwrap().is_polynomial());
        assert!(!Expr::parse("1/x1").unwrap().is_polynomial());
        assert!(!Expr::parse("exp(x1)").unwrap().is_polynomial());
    }

    #[test]
    fn variable_exponent_uses_exp_log() {
        let e = Expr::parse("x1^x2").unwrap();
        let j = e.eval(&Jet::plane_variables([2.0, 3.0], 2));
        assert_abs_diff_eq!(j.value(), 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(j.derivative([1, 0]), 12.0, epsilon = 1e-13);
        assert_abs_diff_eq!(j.derivative([0, 1]), 8.0 * 2f64.ln(), epsilon = 1e-13);
    }
}
