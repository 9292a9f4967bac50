//! Closed-form expressions used for chain tails and weight smooth factors.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?            right associative
//! atom   := number | ident | '(' expr ')'
//! number := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ident  := the free variable of the context ('j' for chains, 'x' for weights)
//! ```
//!
//! Numbers are exact rationals (`0.7` is `7/10`); constant subexpressions
//! are folded at parse time, so `1/2` becomes the single literal `1/2`.
//! Printing produces text that parses back to the same tree.

use std::fmt;

use rug::{Integer, Rational};

use crate::real::{Precision, Real};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(Rational),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier '{0}' (expected '{1}')")]
    UnknownIdent(String, char),
    #[error("expression is not defined at {var} = {at}: {msg}")]
    Domain { var: char, at: String, msg: String },
    #[error("zero test is not decidable for this expression: {0}")]
    Undecidable(String),
}

/// Largest exponent folded exactly; beyond this constants stay symbolic.
const MAX_FOLD_EXPONENT: u32 = 4096;

impl Expr {
    pub fn num(v: impl Into<Rational>) -> Expr {
        Expr::Num(v.into())
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Num(Rational::from((n, d)))
    }

    pub fn parse(src: &str, var: char) -> Result<Expr, ExprError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            var,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var => false,
            Expr::Neg(a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Expr::Num(r) => Some(r),
            _ => None,
        }
    }

    /// Exact value at an integer point, when every operation stays rational.
    pub fn eval_exact(&self, at: &Rational) -> Option<Rational> {
        match self {
            Expr::Num(r) => Some(r.clone()),
            Expr::Var => Some(at.clone()),
            Expr::Neg(a) => Some(-a.eval_exact(at)?),
            Expr::Add(a, b) => Some(a.eval_exact(at)? + b.eval_exact(at)?),
            Expr::Sub(a, b) => Some(a.eval_exact(at)? - b.eval_exact(at)?),
            Expr::Mul(a, b) => Some(a.eval_exact(at)? * b.eval_exact(at)?),
            Expr::Div(a, b) => {
                let d = b.eval_exact(at)?;
                if d == 0 {
                    return None;
                }
                Some(a.eval_exact(at)? / d)
            }
            Expr::Pow(a, b) => {
                let base = a.eval_exact(at)?;
                let e = b.eval_exact(at)?;
                rational_pow(&base, &e)
            }
        }
    }

    /// Evaluate at `at` in working precision.
    pub fn eval<R: Real>(&self, at: &R, prec: Precision) -> Result<R, ExprError> {
        let v = self.eval_inner(at, prec)?;
        if !v.is_finite() {
            return Err(ExprError::Domain {
                var: '?',
                at: at.to_sci_string(),
                msg: "non-finite result".into(),
            });
        }
        Ok(v)
    }

    fn eval_inner<R: Real>(&self, at: &R, prec: Precision) -> Result<R, ExprError> {
        Ok(match self {
            Expr::Num(r) => R::from_rational(r, prec),
            Expr::Var => at.clone(),
            Expr::Neg(a) => -a.eval_inner(at, prec)?,
            Expr::Add(a, b) => a.eval_inner(at, prec)? + b.eval_inner(at, prec)?,
            Expr::Sub(a, b) => a.eval_inner(at, prec)? - b.eval_inner(at, prec)?,
            Expr::Mul(a, b) => a.eval_inner(at, prec)? * b.eval_inner(at, prec)?,
            Expr::Div(a, b) => {
                let d = b.eval_inner(at, prec)?;
                if d.is_zero() {
                    return Err(ExprError::Domain {
                        var: '?',
                        at: at.to_sci_string(),
                        msg: "division by zero".into(),
                    });
                }
                a.eval_inner(at, prec)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval_inner(at, prec)?;
                if let Some(k) = b.integer_exponent() {
                    base.powi(k)
                } else {
                    let e = b.eval_inner(at, prec)?;
                    if base < 0.0 {
                        return Err(ExprError::Domain {
                            var: '?',
                            at: at.to_sci_string(),
                            msg: "negative base with non-integer exponent".into(),
                        });
                    }
                    if base.is_zero() {
                        if e > 0.0 {
                            R::zero(prec)
                        } else {
                            return Err(ExprError::Domain {
                                var: '?',
                                at: at.to_sci_string(),
                                msg: "zero to a non-positive power".into(),
                            });
                        }
                    } else {
                        (base.ln() * e).exp()
                    }
                }
            }
        })
    }

    fn integer_exponent(&self) -> Option<i32> {
        match self {
            Expr::Num(r) if *r.denom() == 1 => r.numer().to_i32(),
            _ => None,
        }
    }

    /// Bounds used by the zero test: the expression, with denominators
    /// cleared, is an exponential polynomial `sum_k b_k^j P_k(j)`; `size`
    /// bounds `sum_k (deg P_k + 1)` of the numerator and denominator.
    fn zero_test_size(&self) -> Result<(u128, u128), ExprError> {
        const CAP: u128 = 1 << 40;
        let clamp = |v: u128| v.min(CAP);
        Ok(match self {
            Expr::Num(_) => (1, 1),
            Expr::Var => (2, 1),
            Expr::Neg(a) => a.zero_test_size()?,
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (na, da) = a.zero_test_size()?;
                let (nb, db) = b.zero_test_size()?;
                (clamp(na * db + nb * da), clamp(da * db))
            }
            Expr::Mul(a, b) => {
                let (na, da) = a.zero_test_size()?;
                let (nb, db) = b.zero_test_size()?;
                (clamp(na * nb), clamp(da * db))
            }
            Expr::Div(a, b) => {
                let (na, da) = a.zero_test_size()?;
                let (nb, db) = b.zero_test_size()?;
                (clamp(na * db), clamp(da * nb))
            }
            Expr::Pow(a, b) => {
                if let Some(k) = b.integer_exponent() {
                    let (n, d) = a.zero_test_size()?;
                    let k = k.unsigned_abs();
                    let (n, d) = (clamp(n.saturating_pow(k)), clamp(d.saturating_pow(k)));
                    if b.as_rational().map(|r| *r < 0).unwrap_or(false) {
                        (d, n)
                    } else {
                        (n, d)
                    }
                } else if a.is_constant() {
                    // c^(f(j)) with f affine in j is a single exponential term.
                    match b.affine_in_var() {
                        Some(_) => (1, 1),
                        None => {
                            return Err(ExprError::Undecidable(
                                "exponent is not an affine function of the variable".into(),
                            ))
                        }
                    }
                } else {
                    return Err(ExprError::Undecidable(
                        "variable base raised to a non-integer power".into(),
                    ));
                }
            }
        })
    }

    /// `Some((slope, intercept))` when the expression is `slope*var + intercept`.
    fn affine_in_var(&self) -> Option<(Rational, Rational)> {
        match self {
            Expr::Num(r) => Some((Rational::new(), r.clone())),
            Expr::Var => Some((Rational::from(1), Rational::new())),
            Expr::Neg(a) => {
                let (s, c) = a.affine_in_var()?;
                Some((-s, -c))
            }
            Expr::Add(a, b) => {
                let (s1, c1) = a.affine_in_var()?;
                let (s2, c2) = b.affine_in_var()?;
                Some((s1 + s2, c1 + c2))
            }
            Expr::Sub(a, b) => {
                let (s1, c1) = a.affine_in_var()?;
                let (s2, c2) = b.affine_in_var()?;
                Some((s1 - s2, c1 - c2))
            }
            Expr::Mul(a, b) => {
                let (s1, c1) = a.affine_in_var()?;
                let (s2, c2) = b.affine_in_var()?;
                if s1 != 0 && s2 != 0 {
                    return None;
                }
                Some((s1 * &c2 + s2 * &c1, c1 * c2))
            }
            Expr::Div(a, b) => {
                let (s1, c1) = a.affine_in_var()?;
                let (s2, c2) = b.affine_in_var()?;
                if s2 != 0 || c2 == 0 {
                    return None;
                }
                Some((s1 / &c2, c1 / c2))
            }
            Expr::Pow(..) => {
                if self.is_constant() {
                    None
                } else {
                    None
                }
            }
        }
    }

    /// Decide whether the expression vanishes for every integer `j >= start`.
    ///
    /// The cleared numerator is an exponential polynomial with at most
    /// `size - 1` real zeros, so vanishing at `size` admissible points
    /// proves it is identically zero.
    pub fn is_identically_zero_from(&self, start: u64) -> Result<bool, ExprError> {
        if let Expr::Num(r) = self {
            return Ok(*r == 0);
        }
        let (num_size, den_size) = self.zero_test_size()?;
        let budget = num_size + den_size;
        if budget > 512 {
            return Err(ExprError::Undecidable(format!(
                "zero test would need {budget} evaluation points"
            )));
        }
        let mut zeros = 0u128;
        let mut j = start;
        let mut tried = 0u128;
        while zeros < num_size {
            if tried > budget + 1 {
                return Err(ExprError::Undecidable(
                    "too many points where the expression is undefined".into(),
                ));
            }
            tried += 1;
            let at = Rational::from(Integer::from(j));
            match self.eval_exact(&at) {
                Some(v) if v != 0 => return Ok(false),
                Some(_) => zeros += 1,
                None => {}
            }
            j += 1;
        }
        Ok(true)
    }

    /// Limit as the variable tends to `+inf`, from the leading asymptotic
    /// term `c * b^j * j^d`. `None` when leading terms cancel.
    pub fn limit_at_infinity(&self) -> Option<Limit> {
        let lead = self.leading()?;
        Some(lead.limit())
    }

    fn leading(&self) -> Option<Leading> {
        match self {
            Expr::Num(r) => Some(Leading {
                coef: r.to_f64(),
                base: 1.0,
                degree: 0,
            }),
            Expr::Var => Some(Leading {
                coef: 1.0,
                base: 1.0,
                degree: 1,
            }),
            Expr::Neg(a) => {
                let mut l = a.leading()?;
                l.coef = -l.coef;
                Some(l)
            }
            Expr::Add(a, b) => Leading::add(a.leading()?, b.leading()?),
            Expr::Sub(a, b) => {
                let mut lb = b.leading()?;
                lb.coef = -lb.coef;
                Leading::add(a.leading()?, lb)
            }
            Expr::Mul(a, b) => {
                let la = a.leading()?;
                let lb = b.leading()?;
                Some(Leading {
                    coef: la.coef * lb.coef,
                    base: la.base * lb.base,
                    degree: la.degree + lb.degree,
                })
            }
            Expr::Div(a, b) => {
                let la = a.leading()?;
                let lb = b.leading()?;
                if lb.coef == 0.0 {
                    return None;
                }
                Some(Leading {
                    coef: la.coef / lb.coef,
                    base: la.base / lb.base,
                    degree: la.degree - lb.degree,
                })
            }
            Expr::Pow(a, b) => {
                if let Some(k) = b.integer_exponent() {
                    let la = a.leading()?;
                    Some(Leading {
                        coef: la.coef.powi(k),
                        base: la.base.powi(k),
                        degree: la.degree * i64::from(k),
                    })
                } else if a.is_constant() {
                    let (s, c) = b.affine_in_var()?;
                    let base = a.as_rational()?.to_f64();
                    if base <= 0.0 {
                        return None;
                    }
                    Some(Leading {
                        coef: base.powf(c.to_f64()),
                        base: base.powf(s.to_f64()),
                        degree: 0,
                    })
                } else {
                    None
                }
            }
        }
    }
}

/// Asymptotic limit of an expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

#[derive(Debug, Clone, Copy)]
struct Leading {
    coef: f64,
    base: f64,
    degree: i64,
}

impl Leading {
    fn growth_cmp(&self, other: &Leading) -> std::cmp::Ordering {
        self.base
            .partial_cmp(&other.base)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.degree.cmp(&other.degree))
    }

    fn add(a: Leading, b: Leading) -> Option<Leading> {
        if a.coef == 0.0 {
            return Some(b);
        }
        if b.coef == 0.0 {
            return Some(a);
        }
        match a.growth_cmp(&b) {
            std::cmp::Ordering::Greater => Some(a),
            std::cmp::Ordering::Less => Some(b),
            std::cmp::Ordering::Equal => {
                let c = a.coef + b.coef;
                if c.abs() <= 1e-14 * (a.coef.abs() + b.coef.abs()) {
                    None
                } else {
                    Some(Leading { coef: c, ..a })
                }
            }
        }
    }

    fn limit(&self) -> Limit {
        if self.coef == 0.0 || self.base < 1.0 || (self.base == 1.0 && self.degree < 0) {
            Limit::Finite(0.0)
        } else if self.base == 1.0 && self.degree == 0 {
            Limit::Finite(self.coef)
        } else if self.coef > 0.0 {
            Limit::PosInfinity
        } else {
            Limit::NegInfinity
        }
    }
}

fn rational_pow(base: &Rational, e: &Rational) -> Option<Rational> {
    if *e.denom() != 1 {
        return None;
    }
    let k = e.numer().to_i64()?;
    if k.unsigned_abs() > u64::from(MAX_FOLD_EXPONENT) {
        return None;
    }
    let k32 = k.unsigned_abs() as u32;
    if k < 0 && *base == 0 {
        return None;
    }
    let num = Integer::from(rug::ops::Pow::pow(base.numer(), k32));
    let den = Integer::from(rug::ops::Pow::pow(base.denom(), k32));
    let r = Rational::from((num, den));
    Some(if k < 0 { r.recip() } else { r })
}

fn fold(e: Expr) -> Expr {
    if !e.is_constant() || matches!(e, Expr::Num(_)) {
        return e;
    }
    match e.eval_exact(&Rational::new()) {
        Some(v) => Expr::Num(v),
        None => e,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    var: char,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = fold(Expr::Add(Box::new(lhs), Box::new(rhs)));
                }
                b'-' => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = fold(Expr::Sub(Box::new(lhs), Box::new(rhs)));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = fold(Expr::Mul(Box::new(lhs), Box::new(rhs)));
                }
                b'/' => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    if let Expr::Num(r) = &rhs {
                        if *r == 0 {
                            return Err(self.err("division by the constant zero"));
                        }
                    }
                    lhs = fold(Expr::Div(Box::new(lhs), Box::new(rhs)));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(fold(Expr::Neg(Box::new(inner))));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(fold(Expr::Pow(Box::new(base), Box::new(exp))));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if ident.len() == 1 && ident.starts_with(self.var) {
                    Ok(Expr::Var)
                } else {
                    Err(ExprError::UnknownIdent(ident.to_string(), self.var))
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_len = digits(self);
        let mut frac_len = 0;
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            frac_len = digits(self);
        }
        if int_len + frac_len == 0 {
            return Err(self.err("malformed number"));
        }
        let mantissa_end = self.pos;
        let mut exponent: i64 = 0;
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let mut neg = false;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                neg = self.src[self.pos] == b'-';
                self.pos += 1;
            }
            let es = self.pos;
            if digits(self) == 0 {
                self.pos = save;
            } else {
                let txt = std::str::from_utf8(&self.src[es..self.pos]).unwrap_or("0");
                exponent = txt.parse::<i64>().map_err(|_| self.err("exponent too large"))?;
                if neg {
                    exponent = -exponent;
                }
            }
        }
        let mant_txt: String = std::str::from_utf8(&self.src[start..mantissa_end])
            .unwrap_or("")
            .chars()
            .filter(|c| *c != '.')
            .collect();
        let mant = Integer::from_str_radix(&mant_txt, 10).map_err(|_| self.err("malformed number"))?;
        let scale = exponent - frac_len as i64;
        if scale.unsigned_abs() > 100_000 {
            return Err(self.err("exponent too large"));
        }
        let ten = rug::ops::Pow::pow(Integer::from(10), scale.unsigned_abs() as u32);
        let value = if scale >= 0 {
            Rational::from(mant * ten)
        } else {
            Rational::from((mant, ten))
        };
        Ok(Expr::Num(value))
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(r) if *r < 0 || *r.denom() != 1 => 2,
        Expr::Num(_) | Expr::Var => 5,
    }
}

struct Printer<'a> {
    e: &'a Expr,
    var: char,
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.e, self.var)
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, var: char, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "(")?;
        write_expr(f, e, var)?;
        write!(f, ")")
    } else {
        write_expr(f, e, var)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, var: char) -> fmt::Result {
    match e {
        Expr::Num(r) => {
            if *r.denom() == 1 {
                if *r < 0 {
                    write!(f, "(-{})", r.numer().clone().abs())
                } else {
                    write!(f, "{}", r.numer())
                }
            } else if *r < 0 {
                write!(f, "(-{}/{})", r.numer().clone().abs(), r.denom())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        Expr::Var => write!(f, "{var}"),
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_wrapped(f, a, var, precedence(a) < 4)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let op = if matches!(e, Expr::Add(..)) { "+" } else { "-" };
            write_wrapped(f, a, var, precedence(a) < 1)?;
            write!(f, " {op} ")?;
            write_wrapped(f, b, var, precedence(b) <= 1 || matches!(**b, Expr::Neg(_)))
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            let op = if matches!(e, Expr::Mul(..)) { "*" } else { "/" };
            write_wrapped(f, a, var, precedence(a) < 2 || matches!(**a, Expr::Neg(_)))?;
            write!(f, "{op}")?;
            write_wrapped(f, b, var, precedence(b) <= 2 || matches!(**b, Expr::Neg(_)))
        }
        Expr::Pow(a, b) => {
            write_wrapped(f, a, var, precedence(a) <= 4)?;
            write!(f, "^")?;
            write_wrapped(f, b, var, precedence(b) < 4 || matches!(**b, Expr::Pow(..)))
        }
    }
}

impl Expr {
    /// Render in the mini-grammar with `var` as the free variable.
    pub fn display(&self, var: char) -> impl fmt::Display + '_ {
        Printer { e: self, var }
    }

    pub fn to_source(&self, var: char) -> String {
        self.display(var).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s, 'j').unwrap()
    }

    #[test]
    fn folds_rationals_and_decimals() {
        assert_eq!(p("1/2"), Expr::ratio(1, 2));
        assert_eq!(p("0.7"), Expr::ratio(7, 10));
        assert_eq!(p("2.5e-1"), Expr::ratio(1, 4));
        assert_eq!(p("(1 - 1/3)*3"), Expr::num(2));
        assert_eq!(p("-1/2"), Expr::ratio(-1, 2));
        assert_eq!(p("2^-2"), Expr::ratio(1, 4));
    }

    #[test]
    fn evaluates_rational_function() {
        let e = p("(j+2)/(2*(j+1))");
        let v: f64 = e.eval(&3.0, Precision::double()).unwrap();
        assert!((v - 5.0 / 8.0).abs() < 1e-15);
        assert_eq!(e.eval_exact(&Rational::from(3)).unwrap(), Rational::from((5, 8)));
    }

    #[test]
    fn exponential_tail() {
        let e = p("4^(-j)");
        let v: f64 = e.eval(&3.0, Precision::double()).unwrap();
        assert!((v - 1.0 / 64.0).abs() < 1e-17);
        assert_eq!(e.limit_at_infinity(), Some(Limit::Finite(0.0)));
    }

    #[test]
    fn rejects_unknown_identifiers() {
        assert!(matches!(Expr::parse("n+1", 'j'), Err(ExprError::UnknownIdent(..))));
        assert!(Expr::parse("x^2", 'x').is_ok());
        assert!(Expr::parse("1/0", 'j').is_err());
        assert!(Expr::parse("(1+j", 'j').is_err());
    }

    #[test]
    fn zero_tests() {
        assert!(p("0").is_identically_zero_from(0).unwrap());
        assert!(!p("1/(j+1)^2").is_identically_zero_from(1).unwrap());
        assert!(p("j/(j+1) - 1 + 1/(j+1)").is_identically_zero_from(0).unwrap());
        assert!(p("2^j*2^j - 4^j").is_identically_zero_from(0).unwrap());
        assert!(!p("2^j - j - 1").is_identically_zero_from(0).unwrap());
        assert!(matches!(
            p("j^(1/2)").is_identically_zero_from(0),
            Err(ExprError::Undecidable(_))
        ));
    }

    #[test]
    fn limits() {
        assert_eq!(p("(j+2)/(2*(j+1))").limit_at_infinity(), Some(Limit::Finite(0.5)));
        let e = p("(j+2)/(2*(j+1)) * (j-1)/(2*j)");
        assert_eq!(e.limit_at_infinity(), Some(Limit::Finite(0.25)));
        assert_eq!(p("2^j/j").limit_at_infinity(), Some(Limit::PosInfinity));
        assert_eq!(p("j - j").limit_at_infinity(), None);
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "(j+2)/(2*(j+1))",
            "1 - (j+2)/(2*(j+1))",
            "-j^2 + 3",
            "4^(-j)",
            "(1 - 4^(-j))/2",
            "2^(j+1)^2",
            "(-1/3)*j",
            "j - (1 - j)",
            "j/(j*(j+1))",
            "-(-j)",
        ] {
            let e = p(s);
            let printed = e.to_source('j');
            assert_eq!(p(&printed), e, "{s} -> {printed}");
        }
    }
}
