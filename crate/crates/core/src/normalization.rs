//! The normalized chain `p~_j = Q_{j+1}(eta) p_j / (eta Q_j(eta))`,
//! `q~_j = Q_{j-1}(eta) q_j / (eta Q_j(eta))`, `r~_j = r_j / eta`, whose
//! measure is the original one rescaled to top support point 1.

use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::polynomials::{eval_q, q_values, EvalTrace};
use crate::real::{Precision, Real, Scaled, SignLog};

#[derive(Debug, Clone)]
pub struct NormalizedChain {
    pub base_label: String,
    pub eta_used: f64,
    pub eta_text: String,
    /// Prefix-only chain with states `0..=depth`.
    pub chain: ChainSpec,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    /// Largest `|p~ + q~ + r~ - 1|`.
    pub sum_deviation: f64,
}

impl NormalizedChain {
    /// Chain file text with a comment line recording where it came from.
    pub fn to_chain_file(&self) -> String {
        let note = format!(
            "normalized from chain '{}' at eta = {} ({} states)",
            self.base_label,
            self.eta_text,
            self.p.len()
        );
        crate::specfile::chain_to_toml(&self.chain, Some(&note))
    }
}

fn positive_q<R: Real>(qs: &[Scaled<R>]) -> Result<()> {
    for (j, q) in qs.iter().enumerate() {
        if q.sign() <= 0 {
            return Err(Error::NonpositiveQ {
                index: j,
                value: q.to_f64(),
            });
        }
    }
    Ok(())
}

/// States `0..=depth` of the normalized chain.
pub fn normalize<R: Real>(chain: &ChainSpec, eta: &R, depth: usize, prec: Precision) -> Result<NormalizedChain> {
    if *eta <= 0.0 {
        return Err(Error::InvalidInput(format!("normalization needs eta > 0, got {eta}")));
    }
    let n = depth + 1;
    let t = chain.table::<R>(n + 1, prec)?;
    let qs = q_values(&t, n, eta)?;
    positive_q(&qs)?;
    // ratio[j] = Q_{j+1}(eta) / Q_j(eta)
    let ratio: Vec<R> = (0..n).map(|j| qs[j + 1].ratio(&qs[j]).to_real()).collect();
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut dev = 0.0f64;
    for j in 0..n {
        let pj = ratio[j].clone() * &t.p[j] / eta;
        let qj = if j == 0 {
            R::zero(prec)
        } else {
            t.q[j].clone() / &ratio[j - 1] / eta
        };
        let rj = t.r[j].clone() / eta;
        dev = dev.max((pj.clone() + &qj + &rj - 1.0).abs().to_f64());
        p.push(pj);
        q.push(qj);
        r.push(rj);
    }
    let kappa = vec![R::zero(prec); n];
    let label = format!("{}~", chain.label);
    let normalized = ChainSpec::from_prefix(label, &p, &q, &r, &kappa)?;
    Ok(NormalizedChain {
        base_label: chain.label.clone(),
        eta_used: eta.to_f64(),
        eta_text: eta.to_sci_string(),
        chain: normalized,
        p: p.iter().map(|v| v.to_f64()).collect(),
        q: q.iter().map(|v| v.to_f64()).collect(),
        r: r.iter().map(|v| v.to_f64()).collect(),
        sum_deviation: dev,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TildeTrace {
    /// `Q~_0(x)..Q~_n(x)` from the recurrence of the normalized chain.
    pub trace: EvalTrace,
    /// `Q_k(eta x) / Q_k(eta)` for the same `k`.
    pub quotient: Vec<SignLog>,
    /// Largest relative difference between the two.
    pub discrepancy: f64,
}

/// `Q~_k(x)` for `k <= n`, evaluated both ways.
pub fn tilde_polynomials<R: Real>(chain: &ChainSpec, eta: &R, n: usize, x: &R, prec: Precision) -> Result<TildeTrace> {
    let normalized = normalize(chain, eta, n, prec)?;
    let trace = eval_q(&normalized.chain, n, x, prec)?;
    let t = chain.table::<R>(n + 1, prec)?;
    let top = q_values(&t, n, eta)?;
    let scaled_x = eta.clone() * x;
    let inner = q_values(&t, n, &scaled_x)?;
    let quotient: Vec<SignLog> = inner.iter().zip(&top).map(|(a, b)| a.ratio(b).sign_log()).collect();
    let mut discrepancy = 0.0f64;
    for (a, b) in trace.values.iter().zip(&quotient) {
        let d = if a.sign != b.sign {
            if a.sign == 0 || b.sign == 0 {
                // A root flagged on one side only: compare magnitudes to one.
                a.log.max(b.log).exp().min(1.0)
            } else {
                2.0
            }
        } else if a.sign == 0 {
            0.0
        } else {
            (a.log - b.log).exp_m1().abs()
        };
        discrepancy = discrepancy.max(d);
    }
    Ok(TildeTrace {
        trace,
        quotient,
        discrepancy,
    })
}
