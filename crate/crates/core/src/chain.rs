//! Birth-death chains with optional killing.
//!
//! A chain is given by finite prefixes of `p_j, q_j, r_j, kappa_j` and an
//! optional closed-form tail in the index `j` (see [`crate::expr`]). Prefix
//! values are exact rationals; values produced by floating computations
//! are stored as the exact rational of their binary representation.

use rug::Rational;

use crate::divergence::{classify, DivergenceVerdict, HeuristicConfig};
use crate::error::{Error, Result};
use crate::expr::{Expr, ExprError};
use crate::real::{Precision, Real, Scaled, SignLog};

/// Closed-form rules for the coefficients beyond the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRule {
    pub p: Expr,
    pub q: Expr,
    pub r: Expr,
    pub kappa: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub label: String,
    pub prefix_p: Vec<Rational>,
    pub prefix_q: Vec<Rational>,
    pub prefix_r: Vec<Rational>,
    pub prefix_kappa: Vec<Rational>,
    pub tail: Option<TailRule>,
}

/// Coefficients of one state.
#[derive(Debug, Clone)]
pub struct Coeffs<R> {
    pub p: R,
    pub q: R,
    pub r: R,
    pub kappa: R,
}

/// Coefficients of states `0..len` materialized at a working precision.
#[derive(Debug, Clone)]
pub struct CoeffTable<R> {
    pub label: String,
    pub p: Vec<R>,
    pub q: Vec<R>,
    pub r: Vec<R>,
    pub kappa: Vec<R>,
    pub prec: Precision,
}

impl<R: Real> CoeffTable<R> {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn has_killing(&self) -> bool {
        self.kappa.iter().any(|k| *k > 0.0)
    }

    /// First state with positive killing probability.
    pub fn first_killing(&self) -> Option<usize> {
        self.kappa.iter().position(|k| *k > 0.0)
    }

    /// `p_{j-1} q_j` for `j = 1..len`, the squared off-diagonal of the Jacobi matrix.
    pub fn offdiag_sq(&self, j: usize) -> R {
        self.p[j - 1].clone() * &self.q[j]
    }

    pub fn require(&self, n: usize) -> Result<()> {
        if n > self.len() {
            return Err(Error::ChainTooShort {
                label: self.label.clone(),
                available: self.len(),
                needed: n,
            });
        }
        Ok(())
    }
}

/// Tolerance on `p + q + r + kappa = 1` for floating prefixes.
pub const SUM_TOLERANCE: f64 = 1e-14;
/// Tails are checked to be evaluable and admissible up to this index.
pub const TAIL_CHECK_HORIZON: u64 = 1_000_000;

fn rational_from_str(s: &str) -> Result<Rational> {
    let e = Expr::parse(s, 'j')?;
    match e {
        Expr::Num(r) => Ok(r),
        _ => Err(Error::Parse {
            context: "chain prefix".into(),
            msg: format!("'{s}' is not a constant"),
        }),
    }
}

/// Parse a list of decimal or `a/b` strings.
pub fn parse_rationals(items: &[String]) -> Result<Vec<Rational>> {
    items.iter().map(|s| rational_from_str(s)).collect()
}

impl TailRule {
    /// Build from expressions for `p` and `q`; missing `kappa` is zero and a
    /// missing `r` is the complement `1 - p - q - kappa`.
    pub fn new(p: Expr, q: Expr, r: Option<Expr>, kappa: Option<Expr>) -> TailRule {
        let kappa = kappa.unwrap_or_else(|| Expr::num(0));
        let r = r.unwrap_or_else(|| complement(&p, &q, &kappa));
        TailRule { p, q, r, kappa }
    }

    pub fn parse(p: &str, q: &str, r: Option<&str>, kappa: Option<&str>) -> Result<TailRule> {
        Ok(TailRule::new(
            Expr::parse(p, 'j')?,
            Expr::parse(q, 'j')?,
            r.map(|s| Expr::parse(s, 'j')).transpose()?,
            kappa.map(|s| Expr::parse(s, 'j')).transpose()?,
        ))
    }

    fn sum_minus_one(&self) -> Expr {
        let b = |e: &Expr| Box::new(e.clone());
        Expr::Sub(
            Box::new(Expr::Add(
                Box::new(Expr::Add(Box::new(Expr::Add(b(&self.p), b(&self.q))), b(&self.r))),
                b(&self.kappa),
            )),
            Box::new(Expr::num(1)),
        )
    }
}

fn complement(p: &Expr, q: &Expr, kappa: &Expr) -> Expr {
    let mut e = Expr::Sub(Box::new(Expr::num(1)), Box::new(p.clone()));
    e = Expr::Sub(Box::new(e), Box::new(q.clone()));
    if kappa.as_rational().map(|k| *k != 0).unwrap_or(true) {
        e = Expr::Sub(Box::new(e), Box::new(kappa.clone()));
    }
    match e.is_constant() {
        true => e.eval_exact(&Rational::new()).map(Expr::Num).unwrap_or(e),
        false => e,
    }
}

impl ChainSpec {
    /// Validate and build. Empty `r` means the complement `1 - p - q - kappa`
    /// and empty `kappa` means no killing.
    pub fn new(
        label: impl Into<String>,
        prefix_p: Vec<Rational>,
        prefix_q: Vec<Rational>,
        prefix_r: Vec<Rational>,
        prefix_kappa: Vec<Rational>,
        tail: Option<TailRule>,
    ) -> Result<ChainSpec> {
        let label = label.into();
        let len = prefix_p.len();
        let bad = |msg: String| Error::MalformedChain {
            label: label.clone(),
            msg,
        };
        if prefix_q.len() != len {
            return Err(bad(format!(
                "p prefix has {len} entries but q prefix has {}",
                prefix_q.len()
            )));
        }
        let prefix_kappa = if prefix_kappa.is_empty() {
            vec![Rational::new(); len]
        } else {
            prefix_kappa
        };
        if prefix_kappa.len() != len {
            return Err(bad("kappa prefix length differs from p prefix".into()));
        }
        let prefix_r = if prefix_r.is_empty() {
            (0..len)
                .map(|j| Rational::from(1) - &prefix_p[j] - &prefix_q[j] - &prefix_kappa[j])
                .collect()
        } else {
            prefix_r
        };
        if prefix_r.len() != len {
            return Err(bad("r prefix length differs from p prefix".into()));
        }
        if len == 0 && tail.is_none() {
            return Err(bad("neither prefix nor tail given".into()));
        }
        let chain = ChainSpec {
            label,
            prefix_p,
            prefix_q,
            prefix_r,
            prefix_kappa,
            tail,
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Prefix-only chain from floating values.
    pub fn from_prefix<R: Real>(label: impl Into<String>, p: &[R], q: &[R], r: &[R], kappa: &[R]) -> Result<ChainSpec> {
        let conv = |v: &[R]| -> Result<Vec<Rational>> {
            v.iter()
                .map(|x| {
                    x.to_rational()
                        .ok_or_else(|| Error::InvalidInput(format!("non-finite coefficient {x}")))
                })
                .collect()
        };
        ChainSpec::new(label, conv(p)?, conv(q)?, conv(r)?, conv(kappa)?, None)
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_p.len()
    }

    /// Number of states, or `None` for a chain with a tail rule.
    pub fn len(&self) -> Option<usize> {
        match self.tail {
            Some(_) => None,
            None => Some(self.prefix_len()),
        }
    }

    fn bad(&self, msg: String) -> Error {
        Error::MalformedChain {
            label: self.label.clone(),
            msg,
        }
    }

    fn validate(&self) -> Result<()> {
        let one = Rational::from(1);
        for j in 0..self.prefix_len() {
            let (p, q, r, k) = (
                &self.prefix_p[j],
                &self.prefix_q[j],
                &self.prefix_r[j],
                &self.prefix_kappa[j],
            );
            if j == 0 && *q != 0 {
                return Err(self.bad("q_0 must be 0".into()));
            }
            if *p <= 0 {
                return Err(self.bad(format!("p_{j} = {p} is not positive")));
            }
            if j > 0 && *q <= 0 {
                return Err(self.bad(format!("q_{j} = {q} is not positive")));
            }
            if *r < 0 {
                return Err(self.bad(format!("r_{j} = {r} is negative")));
            }
            if *k < 0 {
                return Err(self.bad(format!("kappa_{j} = {k} is negative")));
            }
            let dev = Rational::from(p + q) + r + k - &one;
            if dev.to_f64().abs() > SUM_TOLERANCE {
                return Err(self.bad(format!("p_{j} + q_{j} + r_{j} + kappa_{j} - 1 = {}", dev.to_f64())));
            }
        }
        if let Some(tail) = &self.tail {
            let start = self.prefix_len() as u64;
            match tail.sum_minus_one().is_identically_zero_from(start) {
                Ok(true) => {}
                Ok(false) => return Err(self.bad("tail rules do not sum to one".into())),
                Err(ExprError::Undecidable(_)) => {}
                Err(e) => return Err(e.into()),
            }
            for j in sample_indices(start, TAIL_CHECK_HORIZON) {
                let c: Coeffs<f64> = self.tail_coeffs(j, Precision::double())?;
                if start == 0 && j == 0 {
                    if c.q != 0.0 {
                        return Err(self.bad("q_0 must be 0".into()));
                    }
                } else if !(c.q > 0.0) {
                    return Err(self.bad(format!("tail q_{j} = {} is not positive", c.q)));
                }
                if !(c.p > 0.0) {
                    return Err(self.bad(format!("tail p_{j} = {} is not positive", c.p)));
                }
                if c.r < -SUM_TOLERANCE {
                    return Err(self.bad(format!("tail r_{j} = {} is negative", c.r)));
                }
                if c.kappa < -SUM_TOLERANCE {
                    return Err(self.bad(format!("tail kappa_{j} = {} is negative", c.kappa)));
                }
                let dev = c.p + c.q + c.r + c.kappa - 1.0;
                if dev.abs() > 4.0 * SUM_TOLERANCE {
                    return Err(self.bad(format!("tail sum at j = {j} deviates from one by {dev:e}")));
                }
            }
        }
        Ok(())
    }

    fn tail_coeffs<R: Real>(&self, j: u64, prec: Precision) -> Result<Coeffs<R>> {
        let tail = self.tail.as_ref().ok_or_else(|| Error::ChainTooShort {
            label: self.label.clone(),
            available: self.prefix_len(),
            needed: j as usize + 1,
        })?;
        let at = R::from_i64(j as i64, prec);
        let ev = |e: &Expr| -> Result<R> {
            e.eval(&at, prec).map_err(|err| Error::MalformedChain {
                label: self.label.clone(),
                msg: format!("tail evaluation at j = {j}: {err}"),
            })
        };
        Ok(Coeffs {
            p: ev(&tail.p)?,
            q: ev(&tail.q)?,
            r: ev(&tail.r)?,
            kappa: ev(&tail.kappa)?,
        })
    }

    /// Coefficients of state `j`.
    pub fn coeffs<R: Real>(&self, j: usize, prec: Precision) -> Result<Coeffs<R>> {
        if j < self.prefix_len() {
            let c = |v: &Vec<Rational>| R::from_rational(&v[j], prec);
            return Ok(Coeffs {
                p: c(&self.prefix_p),
                q: c(&self.prefix_q),
                r: c(&self.prefix_r),
                kappa: c(&self.prefix_kappa),
            });
        }
        self.tail_coeffs(j as u64, prec)
    }

    /// Coefficients of states `0..n`.
    pub fn table<R: Real>(&self, n: usize, prec: Precision) -> Result<CoeffTable<R>> {
        if let Some(len) = self.len() {
            if n > len {
                return Err(Error::ChainTooShort {
                    label: self.label.clone(),
                    available: len,
                    needed: n,
                });
            }
        }
        let mut t = CoeffTable {
            label: self.label.clone(),
            p: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            kappa: Vec::with_capacity(n),
            prec,
        };
        for j in 0..n {
            let c = self.coeffs::<R>(j, prec)?;
            t.p.push(c.p);
            t.q.push(c.q);
            t.r.push(c.r);
            t.kappa.push(c.kappa);
        }
        Ok(t)
    }

    /// Largest table length available, capped at `want`.
    pub fn available(&self, want: usize) -> usize {
        self.len().map_or(want, |l| l.min(want))
    }

    pub fn has_killing(&self) -> Result<bool> {
        if self.prefix_kappa.iter().any(|k| *k > 0) {
            return Ok(true);
        }
        match &self.tail {
            None => Ok(false),
            Some(t) => match t.kappa.is_identically_zero_from(self.prefix_len() as u64) {
                Ok(z) => Ok(!z),
                Err(e) => Err(Error::UndecidableTail(e.to_string())),
            },
        }
    }

    /// True iff `r_j = 0` for every state.
    pub fn is_periodic(&self) -> Result<bool> {
        if self.prefix_r.iter().any(|r| *r != 0) {
            return Ok(false);
        }
        match &self.tail {
            None => Ok(true),
            Some(t) => t
                .r
                .is_identically_zero_from(self.prefix_len() as u64)
                .map_err(|e| Error::UndecidableTail(e.to_string())),
        }
    }
}

/// Consecutive indices after `start` plus a geometric sample up to `horizon`.
fn sample_indices(start: u64, horizon: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (start..start + 2000).collect();
    let mut j = start + 2000;
    while j <= horizon {
        v.push(j);
        j = j * 5 / 4 + 1;
    }
    v.push(horizon);
    v
}

/// `pi_0..pi_{n-1}` of a table.
pub fn potential_scaled<R: Real>(t: &CoeffTable<R>, n: usize) -> Result<Vec<Scaled<R>>> {
    t.require(n)?;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let mut pi = Scaled::one(t.prec);
    out.push(pi.clone());
    for j in 1..n {
        pi = pi.mul_real(&(t.p[j - 1].clone() / &t.q[j]));
        out.push(pi.clone());
    }
    Ok(out)
}

/// One potential coefficient: log-space value plus a best-effort `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub sign_log: SignLog,
    pub value: f64,
}

/// `pi_0..pi_n`.
pub fn potential_coefficients<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<Vec<Potential>> {
    let t = chain.table::<R>(n + 1, prec)?;
    Ok(potential_scaled(&t, n + 1)?
        .iter()
        .map(|s| Potential {
            sign_log: s.sign_log(),
            value: s.to_f64(),
        })
        .collect())
}

/// Terms of `sum_{j<=k} (1/(p_j pi_j)) sum_{m<=j} c_m pi_m` for a weight sequence `c`.
fn double_sum_terms<R: Real>(t: &CoeffTable<R>, n: usize, c: &[R]) -> Result<Vec<Scaled<R>>> {
    let pis = potential_scaled(t, n)?;
    let mut inner = Scaled::zero(t.prec);
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        inner = inner.add(&pis[j].mul_real(&c[j]), t.prec);
        terms.push(inner.div(&pis[j].mul_real(&t.p[j])));
    }
    Ok(terms)
}

/// Partial sums and verdict from nonnegative scaled terms.
pub fn verdict_from_terms<R: Real>(terms: &[Scaled<R>], prec: Precision, cfg: &HeuristicConfig) -> DivergenceVerdict {
    let mut acc = Scaled::zero(prec);
    let mut sums = Vec::with_capacity(terms.len());
    let mut logs = Vec::with_capacity(terms.len());
    for t in terms {
        acc = acc.add(t, prec);
        sums.push(acc.to_f64());
        logs.push(t.ln_abs_f64());
    }
    classify(sums, &logs, cfg)
}

/// `L_k = sum_{j<=k} 1/(p_j pi_j)`, for `k = 0..=n`.
pub fn series_l<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<DivergenceVerdict> {
    let t = chain.table::<R>(n + 1, prec)?;
    let pis = potential_scaled(&t, n + 1)?;
    let terms: Vec<Scaled<R>> = (0..=n).map(|j| pis[j].mul_real(&t.p[j]).recip(prec)).collect();
    Ok(verdict_from_terms(&terms, prec, &HeuristicConfig::default()))
}

/// `sum_{j<=k} (1/(p_j pi_j)) sum_{m<=j} r_m pi_m`; requires an honest chain.
pub fn asymptotic_aperiodicity_sum<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<DivergenceVerdict> {
    let t = chain.table::<R>(n + 1, prec)?;
    if let Some(index) = t.first_killing() {
        return Err(Error::ChainHasKilling {
            label: chain.label.clone(),
            index,
        });
    }
    let terms = double_sum_terms(&t, n + 1, &t.r)?;
    Ok(verdict_from_terms(&terms, prec, &HeuristicConfig::default()))
}

/// The same double sum with holding probabilities, without the killing check.
pub fn holding_double_sum<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<DivergenceVerdict> {
    let t = chain.table::<R>(n + 1, prec)?;
    let terms = double_sum_terms(&t, n + 1, &t.r)?;
    Ok(verdict_from_terms(&terms, prec, &HeuristicConfig::default()))
}

/// `sum_{j<=k} (1/(p_j pi_j)) sum_{m<=j} kappa_m pi_m`.
pub fn killing_sum<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<DivergenceVerdict> {
    let t = chain.table::<R>(n + 1, prec)?;
    let terms = double_sum_terms(&t, n + 1, &t.kappa)?;
    Ok(verdict_from_terms(&terms, prec, &HeuristicConfig::default()))
}

/// `sum_{j<=k} r_j / p_j`.
pub fn rj_over_pj_sum<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<DivergenceVerdict> {
    let t = chain.table::<R>(n + 1, prec)?;
    let terms: Vec<Scaled<R>> = (0..=n).map(|j| Scaled::new(t.r[j].clone() / &t.p[j])).collect();
    Ok(verdict_from_terms(&terms, prec, &HeuristicConfig::default()))
}
