//! Limit estimation and the comparison of predictions with computed limits.
//!
//! The central object is [`ConjectureReport`]: the limits of `C_n` and of
//! `rho_n(-eta)/rho_n(eta)` for one chain, the branch of the main theorem
//! that applies to it, the predicted common limit when one is available,
//! and a verdict on whether the two limits agree.

use rug::Float;
use serde::Serialize;

use crate::chain::{holding_double_sum, killing_sum, potential_scaled, verdict_from_terms, ChainSpec};
use crate::divergence::{DivergenceVerdict, HeuristicConfig, Verdict};
use crate::error::{Error, Result};
use crate::expr::Limit;
use crate::limits::{estimate_limit, LimitEstimate, LimitValue};
use crate::measure::{cn_series, quadrature_from_chain, DiscreteMeasure};
use crate::polynomials::{christoffel_series, leading_coefficients, q_values, ratio_sequences, support_edges};
use crate::real::{Precision, Real, Scaled};
use crate::recover::{chain_from_recurrence, stieltjes_recurrence};
use crate::weight::{discretize_weight, WeightSpec};

/// Edge behaviour `w(x) ~ (eta - x)^alpha` at `eta` and `(x + eta)^beta` at `-eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeExponents {
    pub alpha: f64,
    pub beta: f64,
    pub w_at_eta: f64,
    pub w_at_minus_eta: f64,
}

impl EdgeExponents {
    pub fn new(alpha: f64, beta: f64, w_at_eta: f64, w_at_minus_eta: f64) -> Result<EdgeExponents> {
        if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "edge exponents must be finite and nonnegative, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if !(w_at_eta > 0.0) || !(w_at_minus_eta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "edge values must satisfy w(eta-) > 0 and w(-eta+) >= 0, got {w_at_eta} and {w_at_minus_eta}"
            )));
        }
        Ok(EdgeExponents {
            alpha,
            beta,
            w_at_eta,
            w_at_minus_eta,
        })
    }

    pub fn from_weight(spec: &WeightSpec, grid: usize) -> Result<EdgeExponents> {
        let prec = Precision::default();
        let (bottom, top) = spec.edge_values::<Float>(grid, prec)?;
        EdgeExponents::new(rat(&spec.alpha), rat(&spec.beta), top, bottom)
    }
}

fn rat(r: &rug::Rational) -> f64 {
    r.to_f64()
}

/// Predicted common limit of `C_n` and the Christoffel ratio from the edge
/// exponents: `0` when `alpha < beta`, `w(-eta+)/w(eta-)` when they agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgePrediction {
    pub value: f64,
    /// `0 < alpha <= beta`, which the conditions force.
    pub exponents_ordered: bool,
}

pub fn prediction_cw(e: &EdgeExponents) -> Result<EdgePrediction> {
    if e.alpha > e.beta {
        return Err(Error::SpecInconsistent(format!(
            "alpha = {} exceeds beta = {}; this cannot happen for a random walk measure with w(eta-) > 0",
            e.alpha, e.beta
        )));
    }
    let value = if e.alpha < e.beta {
        0.0
    } else {
        e.w_at_minus_eta / e.w_at_eta
    };
    Ok(EdgePrediction {
        value,
        exponents_ordered: e.alpha > 0.0 && e.alpha <= e.beta,
    })
}

/// Same case split as [`prediction_cw`]; it additionally presumes regularity,
/// which [`regularity_check`] probes.
pub fn prediction_rhow(e: &EdgeExponents) -> Result<EdgePrediction> {
    prediction_cw(e)
}

/// For `alpha = beta` and an even smooth factor the measure is symmetric,
/// which happens exactly for periodic chains. Returns `None` when the
/// weight is not of that kind.
pub fn symmetric_cross_check(spec: &WeightSpec, chain: &ChainSpec) -> Result<Option<bool>> {
    if spec.alpha != spec.beta || !spec.atoms.is_empty() {
        return Ok(None);
    }
    let prec = Precision::double();
    let eta = rat(&spec.eta);
    for k in 1..=16 {
        let x = eta * k as f64 / 17.0;
        let a = spec.smooth.eval(&x, prec)?;
        let b = spec.smooth.eval(&(-x), prec)?;
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
            return Ok(None);
        }
    }
    Ok(Some(chain.is_periodic()?))
}

/// `psi([-eta, -eta + eps]) / psi([eta - eps, eta])` for `eps = eta 2^-k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsWindow {
    pub eps: f64,
    pub lower_mass: f64,
    pub upper_mass: f64,
    pub ratio: f64,
}

/// Edge-mass ratios on a shrinking window, stopping once the upper window
/// holds no node. The last ratio is the diagnostic's guess at `lim C_n`.
pub fn prediction_thm_c<R: Real>(measure: &DiscreteMeasure<R>, eta: f64, max_halvings: usize) -> Vec<EpsWindow> {
    let mut out = Vec::new();
    for k in 1..=max_halvings {
        let eps = eta * 0.5f64.powi(k as i32);
        let mut lower = 0.0;
        let mut upper = 0.0;
        for (x, w) in measure.nodes.iter().zip(&measure.weights) {
            let x = x.to_f64();
            let w = w.to_f64();
            if x <= -eta + eps {
                lower += w;
            }
            if x >= eta - eps {
                upper += w;
            }
        }
        if upper == 0.0 {
            break;
        }
        out.push(EpsWindow {
            eps,
            lower_mass: lower,
            upper_mass: upper,
            ratio: lower / upper,
        });
    }
    out
}

/// `Q_0(eta)..Q_n(eta)`, all positive.
fn positive_q_values<R: Real>(t: &crate::chain::CoeffTable<R>, n: usize, eta: &R) -> Result<Vec<Scaled<R>>> {
    let qs = q_values(t, n, eta)?;
    for (j, q) in qs.iter().enumerate() {
        if q.sign() <= 0 {
            return Err(Error::NonpositiveQ {
                index: j,
                value: q.to_f64(),
            });
        }
    }
    Ok(qs)
}

/// Verdicts on the two sums of the ratio criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Rho0Criterion {
    /// `sum_j (1/(p_j pi_j Q_j Q_{j+1}(eta))) sum_{k<=j} r_k pi_k Q_k(eta)^2`;
    /// divergence is equivalent to the Christoffel ratio tending to zero.
    pub main: DivergenceVerdict,
    /// `L~ = sum_j 1/(p_j pi_j Q_j(eta) Q_{j+1}(eta))`.
    pub l_tilde: DivergenceVerdict,
}

pub fn lemma_rho0_criterion<R: Real>(chain: &ChainSpec, eta: &R, n: usize, prec: Precision) -> Result<Rho0Criterion> {
    let n = chain.available(n + 2).saturating_sub(2).max(1);
    let t = chain.table::<R>(n + 2, prec)?;
    if let Some(index) = t.first_killing() {
        return Err(Error::ChainHasKilling {
            label: chain.label.clone(),
            index,
        });
    }
    let qs = positive_q_values(&t, n + 1, eta)?;
    let pis = potential_scaled(&t, n + 1)?;
    let mut inner = Scaled::zero(prec);
    let mut main = Vec::with_capacity(n + 1);
    let mut lt = Vec::with_capacity(n + 1);
    for j in 0..=n {
        inner = inner.add(&pis[j].mul(&qs[j]).mul(&qs[j]).mul_real(&t.r[j]), prec);
        let denom = pis[j].mul(&qs[j]).mul(&qs[j + 1]).mul_real(&t.p[j]);
        let l = denom.recip(prec);
        main.push(inner.mul(&l));
        lt.push(l);
    }
    let cfg = HeuristicConfig::default();
    Ok(Rho0Criterion {
        main: verdict_from_terms(&main, prec, &cfg),
        l_tilde: verdict_from_terms(&lt, prec, &cfg),
    })
}

/// `L~` alone; this one is also meaningful for chains with killing.
fn l_tilde_sum<R: Real>(chain: &ChainSpec, eta: &R, n: usize, prec: Precision) -> Result<DivergenceVerdict> {
    let n = chain.available(n + 2).saturating_sub(2).max(1);
    let t = chain.table::<R>(n + 2, prec)?;
    let qs = positive_q_values(&t, n + 1, eta)?;
    let pis = potential_scaled(&t, n + 1)?;
    let terms: Vec<Scaled<R>> = (0..=n)
        .map(|j| pis[j].mul(&qs[j]).mul(&qs[j + 1]).mul_real(&t.p[j]).recip(prec))
        .collect();
    Ok(verdict_from_terms(&terms, prec, &HeuristicConfig::default()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlumenthalEdges {
    pub beta: f64,
    pub eta: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BlumenthalOutcome {
    Predicted(BlumenthalEdges),
    NotApplicable { reason: String },
}

/// Edges `+-2 sqrt(beta)` when `r_n -> 0`, `p_{n-1} q_n -> beta` and `L~` is
/// finite at `2 sqrt(beta)`. The limits come from the tail rule.
pub fn blumenthal_edges(chain: &ChainSpec, horizon: usize, prec: Precision) -> Result<BlumenthalOutcome> {
    let na = |reason: &str| Ok(BlumenthalOutcome::NotApplicable { reason: reason.into() });
    let Some(tail) = &chain.tail else {
        return na("chain has no tail rule");
    };
    let finite = |e: &crate::expr::Expr| match e.limit_at_infinity() {
        Some(Limit::Finite(v)) => Some(v),
        _ => None,
    };
    let (Some(r), Some(p), Some(q)) = (finite(&tail.r), finite(&tail.p), finite(&tail.q)) else {
        return na("tail limits of r, p, q are not decidable");
    };
    if r.abs() > 1e-15 {
        return na(&format!("r_n tends to {r}, not 0"));
    }
    let beta = p * q;
    if beta <= 0.0 {
        return na("p_(n-1) q_n tends to 0");
    }
    let eta = 2.0 * beta.sqrt();
    let eta_r: Float = blumenthal_eta(chain, beta, prec);
    match l_tilde_sum(chain, &eta_r, horizon, prec) {
        Ok(v) if v.verdict == Verdict::Converges => Ok(BlumenthalOutcome::Predicted(BlumenthalEdges {
            beta,
            eta,
            zeta: -eta,
        })),
        Ok(v) => na(&format!("L~ at 2 sqrt(beta) is {}", v.verdict)),
        Err(e) => na(&format!("L~ at 2 sqrt(beta) failed: {e}")),
    }
}

/// `2 sqrt(beta)` at working precision, exact when the tail moves are constants.
fn blumenthal_eta<R: Real>(chain: &ChainSpec, beta: f64, prec: Precision) -> R {
    let exact = chain
        .tail
        .as_ref()
        .and_then(|t| Some(rug::Rational::from(t.p.as_rational()? * t.q.as_rational()?)));
    let b = match exact {
        Some(r) => R::from_rational(&r, prec),
        None => R::from_f64(beta, prec),
    };
    b.sqrt() * R::from_f64(2.0, prec)
}

fn positive_through<R: Real>(t: &crate::chain::CoeffTable<R>, h: usize, x: &R) -> Result<bool> {
    Ok(q_values(t, h, x)?.iter().all(|q| q.sign() > 0))
}

/// Smallest `x >= eta_hat` (to working precision) with `Q_0(x)..Q_h(x) > 0`.
/// Edge estimates from truncations lie below the edge; sums over `h` terms
/// need a point where every `Q_j` is positive.
pub fn edge_for_sums<R: Real>(t: &crate::chain::CoeffTable<R>, h: usize, eta_hat: f64, prec: Precision) -> Result<R> {
    let mut lo = R::from_f64(eta_hat, prec);
    if positive_through(t, h, &lo)? {
        return Ok(lo);
    }
    let mut hi = R::one(prec);
    let mut step = 1e-6;
    while !positive_through(t, h, &hi)? || hi <= lo {
        hi = R::from_f64(eta_hat.max(1.0) + step, prec);
        step *= 2.0;
        if step > 4.0 {
            return Err(Error::NonpositiveQ {
                index: h,
                value: f64::NAN,
            });
        }
    }
    let tol = 16.0 * R::epsilon(prec);
    for _ in 0..400 {
        if (hi.clone() - &lo).to_f64() <= tol * hi.to_f64().abs() {
            break;
        }
        let mid = (lo.clone() + &hi) * R::from_f64(0.5, prec);
        if positive_through(t, h, &mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Upper support edge used for evaluations at `eta`.
#[derive(Debug, Clone)]
pub struct WorkingEdge<R> {
    pub eta: R,
    pub zeta: f64,
    pub source: String,
    pub notes: Vec<String>,
}

/// `eta` from the weight when one is given, else `2 sqrt(beta)` from the
/// tail limits when that is an edge, else the smallest point above the
/// numerical edge estimate where `Q_0..Q_h` are all positive.
pub fn working_edge<R: Real>(
    chain: &ChainSpec,
    weight: Option<&WeightSpec>,
    truncation: usize,
    h: usize,
    prec: Precision,
) -> Result<WorkingEdge<R>> {
    let mut notes = Vec::new();
    if let Some(w) = weight {
        let eta = R::from_rational(&w.eta, prec);
        let zeta = -eta.to_f64();
        return Ok(WorkingEdge {
            eta,
            zeta,
            source: "weight".into(),
            notes,
        });
    }
    let h = chain.available(h + 1).saturating_sub(1);
    let t = chain.table::<R>(h + 1, prec)?;
    let trunc = chain.available(truncation.max(50)).max(2);
    let edges = match support_edges::<R>(chain, trunc, 1e-3, prec) {
        Ok(e) => e,
        Err(Error::MethodsDisagree { eigen, .. }) => {
            notes.push("edge methods disagree; using the eigenvalue estimate".into());
            let e = support_edges::<R>(chain, trunc, f64::INFINITY, prec)?;
            crate::polynomials::SupportEdges { eta_hat: eigen, ..e }
        }
        Err(e) => return Err(e),
    };
    if let BlumenthalOutcome::Predicted(b) = blumenthal_edges(chain, h.max(1000), prec)? {
        let e: R = blumenthal_eta(chain, b.beta, prec);
        if positive_through(&t, h, &e)? {
            return Ok(WorkingEdge {
                eta: e,
                zeta: edges.zeta_hat,
                source: "tail limits".into(),
                notes,
            });
        }
    }
    let eta = edge_for_sums(&t, h, edges.eta_hat, prec)?;
    notes.push(format!("eta_hat = {} from {:?}", edges.eta_hat, edges.method));
    Ok(WorkingEdge {
        eta,
        zeta: edges.zeta_hat,
        source: format!("positivity of Q_j up to j = {h}"),
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityCheck {
    /// `gamma_k^(1/k)` for `k = 1..=n`.
    pub sequence: Vec<f64>,
    pub limit: LimitEstimate,
    pub eta: f64,
    /// `|lim - 2 eta|` and `|lim - 2/eta|`.
    pub distance_to_two_eta: f64,
    pub distance_to_two_over_eta: f64,
}

pub fn regularity_check<R: Real>(chain: &ChainSpec, eta: f64, n: usize, prec: Precision) -> Result<RegularityCheck> {
    let n = chain.available(n + 1).saturating_sub(1);
    let t = chain.table::<R>(n + 1, prec)?;
    if let Some(index) = t.first_killing() {
        return Err(Error::ChainHasKilling {
            label: chain.label.clone(),
            index,
        });
    }
    let gammas = leading_coefficients(&t, n)?;
    let sequence: Vec<f64> = (1..=n).map(|k| (gammas[k].log / k as f64).exp()).collect();
    let limit = estimate_limit(&sequence)?;
    let v = limit.finite().unwrap_or(f64::NAN);
    Ok(RegularityCheck {
        sequence,
        limit,
        eta,
        distance_to_two_eta: (v - 2.0 * eta).abs(),
        distance_to_two_over_eta: (v - 2.0 / eta).abs(),
    })
}

/// `(2 eta)^(-a-1) w Gamma(a+1) Gamma(a+2)`, the constant as printed in
/// the source of the edge asymptotics.
pub fn danka_totik_constant(eta: f64, a: f64, w: f64) -> f64 {
    let bits = 128;
    let g = |v: f64| Float::with_val(bits, v).gamma();
    let base = Float::with_val(bits, 2.0 * eta);
    let c = rug::ops::Pow::pow(base, -a - 1.0) * w * g(a + 1.0) * g(a + 2.0);
    c.to_f64()
}

/// Exact limit of `n^3 rho_n(1)` for the semicircle divided by the printed
/// constant for the same measure.
pub fn semicircle_calibration() -> f64 {
    3.0 / danka_totik_constant(1.0, 0.5, 2.0 / std::f64::consts::PI)
}

#[derive(Debug, Clone, Serialize)]
pub struct DankaTotikCheck {
    /// `n^(2 alpha + 2) rho_n(eta)` for `n = 1..=n_max`.
    pub scaled_plus: Vec<f64>,
    /// `n^(2 beta + 2) rho_n(-eta)`.
    pub scaled_minus: Vec<f64>,
    pub limit_plus: LimitEstimate,
    pub limit_minus: LimitEstimate,
    pub paper_constant_plus: f64,
    pub paper_constant_minus: f64,
    pub calibration_factor: f64,
}

pub fn danka_totik_check<R: Real>(
    chain: &ChainSpec,
    e: &EdgeExponents,
    eta: &R,
    n_max: usize,
    prec: Precision,
) -> Result<DankaTotikCheck> {
    let n_max = chain.available(n_max + 1).saturating_sub(1);
    let t = chain.table::<R>(n_max + 1, prec)?;
    let scale = |rho: Vec<Scaled<R>>, a: f64| -> Vec<f64> {
        rho.iter()
            .enumerate()
            .map(|(i, r)| ((i + 1) as f64).ln() * (2.0 * a + 2.0) + r.ln_abs_f64())
            .map(f64::exp)
            .collect()
    };
    let scaled_plus = scale(christoffel_series(&t, n_max, eta)?, e.alpha);
    let scaled_minus = scale(christoffel_series(&t, n_max, &(-eta.clone()))?, e.beta);
    let eta_f = eta.to_f64();
    Ok(DankaTotikCheck {
        limit_plus: estimate_limit(&scaled_plus)?,
        limit_minus: estimate_limit(&scaled_minus)?,
        scaled_plus,
        scaled_minus,
        paper_constant_plus: danka_totik_constant(eta_f, e.alpha, e.w_at_eta),
        paper_constant_minus: danka_totik_constant(eta_f, e.beta, e.w_at_minus_eta),
        calibration_factor: semicircle_calibration(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionA {
    pub horizon: usize,
    pub partial_sum: f64,
    pub tail_estimate: f64,
    pub verdict: Verdict,
    pub holds: bool,
}

/// `sum_j |p_j q_{j+1} - p_{j-1} q_j|` to `horizon`; holds when the sum
/// converges with an extrapolated remainder below `1e-6`.
pub fn condition_a<R: Real>(chain: &ChainSpec, horizon: usize, prec: Precision) -> Result<ConditionA> {
    let len = chain.available(horizon + 2);
    let t = chain.table::<R>(len, prec)?;
    let floor = 1e4 * R::epsilon(prec);
    let terms: Vec<Scaled<R>> = (1..len - 1)
        .map(|j| {
            let a = t.p[j].clone() * &t.q[j + 1];
            let b = t.p[j - 1].clone() * &t.q[j];
            let d = (a.clone() - &b).abs();
            if d.to_f64() <= floor * a.to_f64().abs().max(b.to_f64().abs()) {
                Scaled::zero(prec)
            } else {
                Scaled::new(d)
            }
        })
        .collect();
    let v = verdict_from_terms(&terms, prec, &HeuristicConfig::default());
    let partial_sum = v.partial_sums.last().copied().unwrap_or(0.0);
    let tail_estimate = match v.extrapolated {
        Some(x) => (x - partial_sum).abs(),
        None => f64::INFINITY,
    };
    Ok(ConditionA {
        horizon: len.saturating_sub(2),
        partial_sum,
        tail_estimate,
        verdict: v.verdict,
        holds: v.verdict == Verdict::Converges && tail_estimate < 1e-6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupCCheck {
    pub tail_start: usize,
    pub max_tail_cn: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `max_{n >= tail_start} C_n <= lim rho-ratio + 1e-3`.
pub fn sup_c_check(cn: &[f64], tail_start: usize, rho_limit: &LimitEstimate) -> Option<SupCCheck> {
    let limit = rho_limit.finite()?;
    let tail = cn.get(tail_start..)?;
    if tail.is_empty() {
        return None;
    }
    let max_tail_cn = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = limit + 1e-3;
    Some(SupCCheck {
        tail_start,
        max_tail_cn,
        bound,
        holds: max_tail_cn <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    I,
    Ii,
    Iii,
    NoneApplicable,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::I => "i",
            Branch::Ii => "ii",
            Branch::Iii => "iii",
            Branch::NoneApplicable => "none-applicable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

impl std::fmt::Display for ConsistencyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConsistencyVerdict::Consistent => "consistent",
            ConsistencyVerdict::Inconsistent => "inconsistent",
            ConsistencyVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// Parameters of a report run.
#[derive(Debug, Clone, Copy)]
pub struct HarnessConfig {
    pub prec: Precision,
    /// Quadrature size `N`; `C_n` is exact for `n <= 2N - 1`.
    pub truncation: usize,
    /// Largest `n` for both limit sequences.
    pub horizon: usize,
    /// Terms of the divergence sums.
    pub sum_horizon: usize,
    pub condition_a_horizon: usize,
    /// Grid for weight discretization.
    pub grid: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            prec: Precision::default(),
            truncation: 400,
            horizon: 799,
            sum_horizon: 10_000,
            condition_a_horizon: 100_000,
            grid: 2400,
        }
    }
}

/// Combined uncertainty of two estimates, or `None` when either is not finite.
fn combined(a: &LimitEstimate, b: &LimitEstimate) -> Option<(f64, f64, f64)> {
    let (x, y) = (a.finite()?, b.finite()?);
    let u = a.uncertainty + b.uncertainty;
    u.is_finite().then_some((x, y, u))
}

/// `max(5 u, 0.02)`.
pub fn tolerance_for(uncertainty: f64) -> f64 {
    (5.0 * uncertainty).max(0.02)
}

/// Agreement of two limits within `u + max(5 u, 0.02)`.
pub fn compare_limits(a: &LimitEstimate, b: &LimitEstimate) -> (ConsistencyVerdict, f64, f64) {
    match combined(a, b) {
        None => (ConsistencyVerdict::Inconclusive, f64::NAN, f64::NAN),
        Some((x, y, u)) => {
            let tol = tolerance_for(u);
            let v = if (x - y).abs() <= u + tol {
                ConsistencyVerdict::Consistent
            } else {
                ConsistencyVerdict::Inconsistent
            };
            (v, u, tol)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    pub label: String,
    pub periodic: bool,
    pub has_killing: bool,
    pub eta: f64,
    pub zeta: f64,
    pub eta_source: String,
    pub branch: Branch,
    pub branch_reason: String,
    pub lim_cn: LimitEstimate,
    pub lim_rho_ratio: LimitEstimate,
    pub lim_q_ratio: Option<LimitEstimate>,
    pub predicted: Option<f64>,
    pub prediction_source: Option<String>,
    pub verdict: ConsistencyVerdict,
    pub combined_uncertainty: f64,
    pub tolerance: f64,
    /// Agreement of both limits with `predicted`.
    pub prediction_check: Option<ConsistencyVerdict>,
    pub aperiodicity_sum: Option<Verdict>,
    pub killing_sum: Option<Verdict>,
    pub rho0_main: Option<Verdict>,
    pub l_tilde: Option<Verdict>,
    pub condition_a: Option<ConditionA>,
    pub exponents: Option<EdgeExponents>,
    pub sup_c: Option<SupCCheck>,
    /// Final ratio at `eta (1 - 1e-8)` and `eta (1 + 1e-8)`.
    pub rho_ratio_bracket: Option<(f64, f64)>,
    pub eps_windows: Vec<EpsWindow>,
    /// `C_0..C_{n}`.
    pub cn: Vec<f64>,
    /// `rho_k(-eta)/rho_k(eta)` for `k = 1..=n`.
    pub rho_ratio: Vec<f64>,
    pub notes: Vec<String>,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".into(), |x| x.to_string())
}

impl ConjectureReport {
    /// One `key=value` per line.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("label={}", self.label),
            format!("periodic={}", self.periodic),
            format!("killing={}", self.has_killing),
            format!("eta={}", self.eta),
            format!("zeta={}", self.zeta),
            format!("eta_source={}", self.eta_source),
            format!("branch={}", self.branch),
            format!("branch_reason={}", self.branch_reason),
            format!("lim_cn={}", self.lim_cn.describe()),
            format!("lim_cn_n_used={}..{}", self.lim_cn.n_used.0, self.lim_cn.n_used.1),
            format!("lim_rho_ratio={}", self.lim_rho_ratio.describe()),
            format!(
                "lim_rho_ratio_n_used={}..{}",
                self.lim_rho_ratio.n_used.0 + 1,
                self.lim_rho_ratio.n_used.1 + 1
            ),
            format!("lim_q_ratio={}", self.lim_q_ratio.map_or("none".into(), |l| l.describe())),
            format!("predicted={}", opt(&self.predicted)),
            format!("prediction_source={}", opt(&self.prediction_source)),
            format!("prediction_check={}", opt(&self.prediction_check)),
            format!("verdict={}", self.verdict),
            format!("combined_uncertainty={:e}", self.combined_uncertainty),
            format!("tolerance={}", self.tolerance),
            format!("aperiodicity_sum={}", opt(&self.aperiodicity_sum)),
            format!("killing_sum={}", opt(&self.killing_sum)),
            format!("rho0_sum={}", opt(&self.rho0_main)),
            format!("l_tilde={}", opt(&self.l_tilde)),
        ];
        if let Some(c) = &self.condition_a {
            lines.push(format!(
                "condition_a={} (sum {:e} to {}, tail {:e})",
                c.holds, c.partial_sum, c.horizon, c.tail_estimate
            ));
        }
        if let Some(e) = &self.exponents {
            lines.push(format!(
                "exponents=alpha {} beta {} w(eta-) {} w(-eta+) {}",
                e.alpha, e.beta, e.w_at_eta, e.w_at_minus_eta
            ));
        }
        if let Some(s) = &self.sup_c {
            lines.push(format!(
                "sup_c={} (max C_n for n >= {} is {:e}, bound {:e})",
                s.holds, s.tail_start, s.max_tail_cn, s.bound
            ));
        }
        if let Some((lo, hi)) = self.rho_ratio_bracket {
            lines.push(format!("rho_ratio_at_eta_minus={lo:e}"));
            lines.push(format!("rho_ratio_at_eta_plus={hi:e}"));
        }
        for w in &self.eps_windows {
            lines.push(format!("eps_window={:e} ratio={:e}", w.eps, w.ratio));
        }
        for n in &self.notes {
            lines.push(format!("note={n}"));
        }
        lines.join("\n") + "\n"
    }

    /// Columns `n, C_n, rho_ratio_n`; empty cells where a sequence stops.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,C_n,rho_ratio_n\n");
        let len = self.cn.len().max(self.rho_ratio.len() + 1);
        for n in 0..len {
            let c = self.cn.get(n).map_or(String::new(), |v| v.to_string());
            let r = if n == 0 {
                String::new()
            } else {
                self.rho_ratio.get(n - 1).map_or(String::new(), |v| v.to_string())
            };
            s.push_str(&format!("{n},{c},{r}\n"));
        }
        s
    }
}

/// Recovered chain and discretized measure of a weight, with
/// `n` recurrence coefficients.
pub fn weight_pipeline<R: Real>(spec: &WeightSpec, n: usize, grid: usize, prec: Precision) -> Result<(ChainSpec, DiscreteMeasure<R>)> {
    // Each order-60 panel resolves about degree 12.
    let grid = grid.max(12 * n);
    let measure = discretize_weight::<R>(spec, grid, prec)?;
    // Most failures show up in the first few coefficients.
    chain_from_recurrence(&stieltjes_recurrence(&measure, n.min(8))?, &spec.label)?.into_result()?;
    let coeffs = stieltjes_recurrence(&measure, n)?;
    let chain = chain_from_recurrence(&coeffs, &spec.label)?.into_result()?;
    Ok((chain, measure))
}

fn verdict_or_note(r: Result<DivergenceVerdict>, what: &str, notes: &mut Vec<String>) -> Option<Verdict> {
    match r {
        Ok(v) => Some(v.verdict),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

/// Full report for a chain. With a weight the chain should be its recovered
/// chain; `C_n` then comes from the discretized weight rather than from
/// Gaussian quadrature of the chain.
pub fn theorem_main_verdict<R: Real>(chain: &ChainSpec, weight: Option<&WeightSpec>, cfg: &HarnessConfig) -> Result<ConjectureReport> {
    let prec = cfg.prec;
    let mut notes = Vec::new();
    let periodic = chain.is_periodic()?;
    let has_killing = chain.has_killing()?;

    let rho_max = chain.available(cfg.horizon + 1).saturating_sub(1);
    let sum_n = chain.available(cfg.sum_horizon + 2).saturating_sub(2);
    let h = sum_n.max(rho_max) + 1;
    let t = chain.table::<R>(h + 1, prec)?;
    let edge = working_edge::<R>(chain, weight, cfg.truncation, h, prec)?;
    notes.extend(edge.notes.iter().cloned());
    let (eta, zeta_f, eta_source) = (edge.eta, edge.zeta, edge.source);
    let eta_f = eta.to_f64();

    // Limits.
    let measure: DiscreteMeasure<R> = match weight {
        Some(w) => discretize_weight(w, cfg.grid.max(6 * cfg.horizon), prec)?,
        None => {
            let n = chain.available(cfg.truncation).max(1);
            quadrature_from_chain(chain, n, prec)?
        }
    };
    let cn_max = match weight {
        Some(_) => cfg.horizon.min(measure.resolved_degree),
        None => cfg.horizon.min(2 * measure.len() - 1),
    };
    let cn: Vec<f64> = cn_series(&measure, cn_max)?.iter().map(|c| c.value).collect();
    let lim_cn = estimate_limit(&cn)?;

    let ratios = ratio_sequences(&t, rho_max, &eta)?;
    let lim_rho_ratio = estimate_limit(&ratios.rho_ratio)?;
    let lim_q_ratio = ratios
        .q_ratio
        .iter()
        .all(|v| v.is_finite())
        .then(|| estimate_limit(&ratios.q_ratio).ok())
        .flatten();
    let bracket = {
        let lo = eta.clone() * R::from_f64(1.0 - 1e-8, prec);
        let hi = eta.clone() * R::from_f64(1.0 + 1e-8, prec);
        match (ratio_sequences(&t, rho_max, &lo), ratio_sequences(&t, rho_max, &hi)) {
            (Ok(a), Ok(b)) => Some((*a.rho_ratio.last().unwrap_or(&f64::NAN), *b.rho_ratio.last().unwrap_or(&f64::NAN))),
            _ => None,
        }
    };

    // Divergence sums.
    let aperiodicity_sum = verdict_or_note(holding_double_sum::<R>(chain, sum_n, prec), "aperiodicity sum", &mut notes);
    let killing = if has_killing {
        verdict_or_note(killing_sum::<R>(chain, sum_n, prec), "killing sum", &mut notes)
    } else {
        None
    };
    let (rho0_main, l_tilde) = if has_killing {
        (None, verdict_or_note(l_tilde_sum(chain, &eta, sum_n, prec), "L~", &mut notes))
    } else {
        match lemma_rho0_criterion(chain, &eta, sum_n, prec) {
            Ok(c) => (Some(c.main.verdict), Some(c.l_tilde.verdict)),
            Err(e) => {
                notes.push(format!("ratio criterion: {e}"));
                (None, None)
            }
        }
    };

    // Branch.
    let exponents = match weight {
        Some(w) => Some(EdgeExponents::from_weight(w, cfg.grid)?),
        None => None,
    };
    let diverges = |v: Option<Verdict>| v == Some(Verdict::Diverges);
    let converges = |v: Option<Verdict>| v == Some(Verdict::Converges);
    let mut condition = None;
    let (branch, branch_reason, predicted, prediction_source) = if periodic {
        (Branch::I, "periodic chain".to_string(), Some(1.0), Some("branch i".to_string()))
    } else if !has_killing && (diverges(aperiodicity_sum) || diverges(l_tilde)) {
        let why = if diverges(aperiodicity_sum) {
            "aperiodicity sum diverges"
        } else {
            "L~ diverges"
        };
        (Branch::Ii, why.to_string(), Some(0.0), Some("branch ii".to_string()))
    } else if has_killing && diverges(aperiodicity_sum) && converges(killing) {
        (
            Branch::Ii,
            "aperiodicity sum diverges and absorption is not certain".to_string(),
            Some(0.0),
            Some("branch ii with killing".to_string()),
        )
    } else if !has_killing && converges(aperiodicity_sum) && converges(l_tilde) {
        match (&exponents, weight) {
            (Some(e), Some(_)) => {
                let c = condition_a::<R>(chain, cfg.condition_a_horizon, prec)?;
                let holds = c.holds;
                condition = Some(c);
                if !holds {
                    (Branch::NoneApplicable, "condition (a) not confirmed".to_string(), None, None)
                } else {
                    match prediction_cw(e) {
                        Ok(p) => (
                            Branch::Iii,
                            "both sums converge, condition (a) holds, edge exponents given".to_string(),
                            Some(p.value),
                            Some(if e.alpha < e.beta {
                                "alpha < beta".to_string()
                            } else {
                                "w(-eta+)/w(eta-)".to_string()
                            }),
                        ),
                        Err(err) => {
                            notes.push(err.to_string());
                            (Branch::NoneApplicable, "exponents inconsistent".to_string(), None, None)
                        }
                    }
                }
            }
            _ => (
                Branch::NoneApplicable,
                "both sums converge but no weight was supplied for the edge conditions".to_string(),
                None,
                None,
            ),
        }
    } else if has_killing && diverges(killing) {
        (
            Branch::NoneApplicable,
            "absorption is certain (killing sum diverges)".to_string(),
            None,
            None,
        )
    } else {
        (Branch::NoneApplicable, "sum verdicts undecided".to_string(), None, None)
    };

    if let (Some(e), true) = (&exponents, branch != Branch::Iii) {
        match prediction_cw(e) {
            Ok(p) => notes.push(format!("edge exponents alone predict {}", p.value)),
            Err(err) => notes.push(err.to_string()),
        }
    }
    if zeta_f > -eta_f + 0.01 {
        notes.push(format!(
            "zeta = {zeta_f} lies above -eta; both limits are expected to vanish"
        ));
    }
    if let Some(w) = weight {
        if let Some(p) = symmetric_cross_check(w, chain)? {
            if !p {
                notes.push("symmetric weight but the recovered chain is not periodic".into());
            }
        }
    }

    let (verdict, combined_uncertainty, tolerance) = compare_limits(&lim_cn, &lim_rho_ratio);
    let prediction_check = predicted.map(|p| {
        let fixed = |v: f64| LimitEstimate {
            value: LimitValue::Finite(v),
            uncertainty: 0.0,
            ..lim_cn
        };
        let (a, _, _) = compare_limits(&lim_cn, &fixed(p));
        let (b, _, _) = compare_limits(&lim_rho_ratio, &fixed(p));
        match (a, b) {
            (ConsistencyVerdict::Consistent, ConsistencyVerdict::Consistent) => ConsistencyVerdict::Consistent,
            (ConsistencyVerdict::Inconsistent, _) | (_, ConsistencyVerdict::Inconsistent) => {
                ConsistencyVerdict::Inconsistent
            }
            _ => ConsistencyVerdict::Inconclusive,
        }
    });

    let sup_c = if periodic {
        None
    } else {
        sup_c_check(&cn, cn.len() / 2, &lim_rho_ratio)
    };
    let eps_windows = prediction_thm_c(&measure, eta_f, 12);

    Ok(ConjectureReport {
        label: chain.label.clone(),
        periodic,
        has_killing,
        eta: eta_f,
        zeta: zeta_f,
        eta_source,
        branch,
        branch_reason,
        lim_cn,
        lim_rho_ratio,
        lim_q_ratio,
        predicted,
        prediction_source,
        verdict,
        combined_uncertainty,
        tolerance,
        prediction_check,
        aperiodicity_sum,
        killing_sum: killing,
        rho0_main,
        l_tilde,
        condition_a: condition,
        exponents,
        sup_c,
        rho_ratio_bracket: bracket,
        eps_windows,
        cn,
        rho_ratio: ratios.rho_ratio,
        notes,
    })
}
