//! From a measure back to a chain: the discrete Stieltjes procedure and the
//! solution of `p_{k-1} q_k = a_k^2`, `r_k = b_k`, `p_k + q_k + r_k = 1`.

use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::real::{Precision, Real};

/// Orthonormal recurrence `x u_k = a_{k+1} u_{k+1} + b_k u_k + a_k u_{k-1}`.
/// `a[k]` holds `a_{k+1}`, so `a` and `b` have the same length.
#[derive(Debug, Clone)]
pub struct RecurrenceCoefficients<R> {
    pub a: Vec<R>,
    pub b: Vec<R>,
    pub prec: Precision,
}

impl<R: Real> RecurrenceCoefficients<R> {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `a_k` for `k >= 1`.
    pub fn a_at(&self, k: usize) -> &R {
        &self.a[k - 1]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,a_k,b_k\n");
        for k in 0..self.len() {
            let a = if k == 0 { String::new() } else { self.a[k - 1].to_sci_string() };
            s.push_str(&format!("{k},{a},{}\n", self.b[k].to_sci_string()));
        }
        s
    }
}

/// First `n` diagonal and off-diagonal coefficients of the measure.
pub fn stieltjes_recurrence<R: Real>(measure: &DiscreteMeasure<R>, n: usize) -> Result<RecurrenceCoefficients<R>> {
    let m = measure.len();
    if n == 0 || 2 * n > m {
        return Err(Error::InvalidInput(format!(
            "Stieltjes procedure on {m} nodes supports at most {} steps, {n} requested",
            m / 2
        )));
    }
    let prec = measure.prec;
    let x = &measure.nodes;
    let w = &measure.weights;
    let wx: Vec<R> = x.iter().zip(w).map(|(x, w)| x.clone() * w).collect();
    let mut mass = R::zero(prec);
    for wi in w {
        mass += wi;
    }
    let mut u = vec![R::one(prec) / mass.sqrt(); m];
    let mut u_prev = vec![R::zero(prec); m];
    let mut a_k = R::zero(prec);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut t1 = R::zero(prec);
    let mut t2 = R::zero(prec);
    let tiny = R::epsilon(prec);
    for k in 0..n {
        let mut acc = R::zero(prec);
        for i in 0..m {
            t1.clone_from(&u[i]);
            t1 *= &u[i];
            t1 *= &wx[i];
            acc += &t1;
        }
        let b_k = acc;
        let mut norm = R::zero(prec);
        for i in 0..m {
            t1.clone_from(&x[i]);
            t1 -= &b_k;
            t1 *= &u[i];
            t2.clone_from(&u_prev[i]);
            t2 *= &a_k;
            t1 -= &t2;
            u_prev[i].clone_from(&t1);
            t2.clone_from(&t1);
            t2 *= &t1;
            t2 *= &w[i];
            norm += &t2;
        }
        std::mem::swap(&mut u, &mut u_prev);
        if norm <= tiny {
            return Err(Error::StieltjesBreakdown(k + 1));
        }
        a_k = norm.sqrt();
        for ui in u.iter_mut() {
            *ui /= &a_k;
        }
        a.push(a_k.clone());
        b.push(b_k);
    }
    Ok(RecurrenceCoefficients { a, b, prec })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FailureReason {
    /// `r_k = b_k < 0`.
    NegativeHolding { value: f64 },
    /// `p_k <= 0`.
    NonpositiveUp { value: f64 },
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::NegativeHolding { value } => write!(f, "r < 0 (r = {value:e})"),
            FailureReason::NonpositiveUp { value } => write!(f, "p <= 0 (p = {value:e})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryFailure {
    pub index: usize,
    pub reason: FailureReason,
}

/// Outcome of solving for the chain. `chain` holds the states that passed,
/// so a failure at index `k > 0` still yields states `0..k`.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub chain: Option<ChainSpec>,
    /// Number of leading states satisfying `p > 0`, `q > 0`, `r >= 0`.
    pub verified_through: usize,
    pub failure: Option<RecoveryFailure>,
    /// Nonzero entries of `b` within `clamp` of zero, set to zero.
    pub clamped: Vec<usize>,
}

impl Recovery {
    pub fn into_result(self) -> Result<ChainSpec> {
        match (self.failure, self.chain) {
            (Some(f), _) => Err(Error::NotARandomWalkMeasure {
                index: f.index,
                reason: match f.reason {
                    FailureReason::NegativeHolding { value } => format!("r_{} < 0 (r_{} = {value:e})", f.index, f.index),
                    FailureReason::NonpositiveUp { value } => format!("p_{} <= 0 (p_{} = {value:e})", f.index, f.index),
                },
            }),
            (None, Some(c)) => Ok(c),
            (None, None) => Err(Error::InvalidInput("no coefficients to recover from".into())),
        }
    }
}

/// `p_0 = 1 - b_0`, `q_k = a_k^2 / p_{k-1}`, `p_k = 1 - b_k - q_k`.
pub fn chain_from_recurrence<R: Real>(coeffs: &RecurrenceCoefficients<R>, label: &str) -> Result<Recovery> {
    let prec = coeffs.prec;
    let n = coeffs.len();
    // Diagonal entries this close to zero are roundoff.
    let clamp = 1e4 * R::epsilon(prec);
    let mut p: Vec<R> = Vec::with_capacity(n);
    let mut q: Vec<R> = Vec::with_capacity(n);
    let mut r: Vec<R> = Vec::with_capacity(n);
    let mut clamped = Vec::new();
    let mut failure = None;
    for k in 0..n {
        let mut b = coeffs.b[k].clone();
        if !b.is_zero() && b.clone().abs() <= clamp {
            b = R::zero(prec);
            clamped.push(k);
        }
        if b < 0.0 {
            failure = Some(RecoveryFailure {
                index: k,
                reason: FailureReason::NegativeHolding { value: b.to_f64() },
            });
            break;
        }
        let qk = if k == 0 {
            R::zero(prec)
        } else {
            let a = coeffs.a_at(k);
            a.clone() * a / &p[k - 1]
        };
        let pk = R::one(prec) - &b - &qk;
        if pk <= 0.0 {
            failure = Some(RecoveryFailure {
                index: k,
                reason: FailureReason::NonpositiveUp { value: pk.to_f64() },
            });
            break;
        }
        p.push(pk);
        q.push(qk);
        r.push(b);
    }
    let verified_through = p.len();
    let chain = if verified_through > 0 {
        let kappa = vec![R::zero(prec); verified_through];
        Some(ChainSpec::from_prefix(label, &p, &q, &r, &kappa)?)
    } else {
        None
    };
    Ok(Recovery {
        chain,
        verified_through,
        failure,
        clamped,
    })
}
