//! Random walk polynomials `Q_n`, orthonormal polynomials `p_n = sqrt(pi_n) Q_n`,
//! Christoffel functions and support edges.
//!
//! Values are carried as [`Scaled`] numbers so that `Q_n(-eta)` and `pi_n`
//! never overflow, whatever the backend.

use serde::Serialize;

use crate::chain::{potential_scaled, ChainSpec, CoeffTable};
use crate::divergence::Verdict;
use crate::error::{Error, Result};
use crate::limits::{estimate_limit, LimitValue};
use crate::real::{Precision, Real, Scaled, SignLog};
use crate::tridiag::Jacobi;

/// Bits dropped by the shadow evaluation used for error estimates.
const SHADOW_DROP: u32 = 20;

/// Evaluations of `Q_0..Q_n` and `p_0..p_n` at one point.
#[derive(Debug, Clone, Serialize)]
pub struct EvalTrace {
    pub x: f64,
    pub values: Vec<SignLog>,
    pub orthonormal_values: Vec<SignLog>,
    pub chain_label: String,
    /// Estimated relative error of the last values.
    pub error_estimate: f64,
}

fn fmt_log10(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl EvalTrace {
    /// CSV with columns `n, sign_Q, log10_abs_Q, sign_p, log10_abs_p`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,sign_Q,log10_abs_Q,sign_p,log10_abs_p\n");
        for (n, (q, p)) in self.values.iter().zip(&self.orthonormal_values).enumerate() {
            s.push_str(&format!(
                "{n},{},{},{},{}\n",
                q.sign,
                fmt_log10(q.log10()),
                p.sign,
                fmt_log10(p.log10())
            ));
        }
        s
    }
}

/// `Q_0(x)..Q_n(x)` by the forward recurrence. Values lost in cancellation
/// noise are returned as exact zeros.
pub fn q_values<R: Real>(t: &CoeffTable<R>, n: usize, x: &R) -> Result<Vec<Scaled<R>>> {
    recurrence(t, n, x, None)
}

fn recurrence<R: Real>(t: &CoeffTable<R>, n: usize, x: &R, shadow_bits: Option<u32>) -> Result<Vec<Scaled<R>>> {
    t.require(n)?;
    let prec = t.prec;
    let rnd = |v: R| match shadow_bits {
        Some(b) => v.rounded_to_bits(b),
        None => v,
    };
    let x = rnd(x.clone());
    let noise = R::epsilon(prec) * 4.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(Scaled::one(prec));
    let mut prev = Scaled::zero(prec);
    let mut cur = Scaled::one(prec);
    for k in 0..n {
        let a = cur.mul_real(&rnd(x.clone() - &t.r[k]));
        let b = prev.mul_real(&rnd(t.q[k].clone()));
        let num = a.sub(&b, prec);
        let mag = a.abs().add(&b.abs(), prec);
        let mut next = if !num.is_zero() && num.ln_abs_f64() < mag.ln_abs_f64() + noise.ln() {
            Scaled::zero(prec)
        } else {
            num.div_real(&rnd(t.p[k].clone()))
        };
        if let Some(bits) = shadow_bits {
            next.mant = next.mant.rounded_to_bits(bits);
        }
        out.push(next.clone());
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// Values plus an estimate of their relative error, from a shadow run that
/// carries `SHADOW_DROP` fewer bits.
pub fn q_values_checked<R: Real>(t: &CoeffTable<R>, n: usize, x: &R) -> Result<(Vec<Scaled<R>>, f64)> {
    let full = recurrence(t, n, x, None)?;
    let carried = R::mantissa_bits(t.prec);
    let drop = SHADOW_DROP.min(carried / 3);
    let shadow = recurrence(t, n, x, Some(carried - drop))?;
    let amplification = f64::from(drop).exp2();
    let limit = 10f64.powf(-carried_digits::<R>(t.prec) / 2.0);
    let mut worst = 0.0f64;
    for k in 1..=n {
        let reference = if full[k].abs_cmp(&full[k - 1]).is_ge() {
            &full[k]
        } else {
            &full[k - 1]
        };
        if reference.is_zero() {
            continue;
        }
        let diff = full[k].sub(&shadow[k], t.prec);
        let rel = if diff.is_zero() {
            0.0
        } else {
            (diff.ln_abs_f64() - reference.ln_abs_f64()).exp() / amplification
        };
        worst = worst.max(rel);
        if rel > limit {
            return Err(Error::PrecisionExhausted {
                n: k,
                estimate: rel,
                limit,
            });
        }
    }
    Ok((full, worst))
}

/// Decimal digits actually carried at `prec`.
fn carried_digits<R: Real>(prec: Precision) -> f64 {
    f64::from(prec.decimal_digits()).min(f64::from(R::mantissa_bits(prec)) * std::f64::consts::LOG10_2)
}

/// Square root of a scaled value.
pub fn scaled_sqrt<R: Real>(v: &Scaled<R>) -> Scaled<R> {
    let mut mant = v.mant.clone();
    let mut e = v.exp2;
    if e % 2 != 0 {
        mant *= 2.0;
        e -= 1;
    }
    let mut s = Scaled::new(mant.sqrt());
    s.exp2 += e / 2;
    s
}

/// Trace of `Q_0..Q_n` and `p_0..p_n` at `x`.
pub fn eval_q<R: Real>(chain: &ChainSpec, n: usize, x: &R, prec: Precision) -> Result<EvalTrace> {
    let t = chain.table::<R>(n + 1, prec)?;
    let (qs, err) = q_values_checked(&t, n, x)?;
    let pis = potential_scaled(&t, n + 1)?;
    let ortho = qs
        .iter()
        .zip(&pis)
        .map(|(q, pi)| {
            if q.is_zero() {
                SignLog::ZERO
            } else {
                SignLog {
                    sign: q.sign(),
                    log: 0.5 * pi.ln_abs_f64() + q.ln_abs_f64(),
                }
            }
        })
        .collect();
    Ok(EvalTrace {
        x: x.to_f64(),
        values: qs.iter().map(|q| q.sign_log()).collect(),
        orthonormal_values: ortho,
        chain_label: chain.label.clone(),
        error_estimate: err,
    })
}

/// `gamma_n` with `p_n(x) = gamma_n x^n + ...`, as sign and log.
pub fn leading_coefficient<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<SignLog> {
    if n == 0 {
        return Ok(SignLog { sign: 1, log: 0.0 });
    }
    let t = chain.table::<R>(n + 1, prec)?;
    Ok(leading_coefficients(&t, n)?[n])
}

/// `gamma_0..gamma_n` from a table.
pub fn leading_coefficients<R: Real>(t: &CoeffTable<R>, n: usize) -> Result<Vec<SignLog>> {
    t.require(n + 1)?;
    let mut acc = R::zero(t.prec);
    let mut out = vec![SignLog { sign: 1, log: 0.0 }];
    for i in 1..=n {
        acc += t.offdiag_sq(i).ln();
        out.push(SignLog {
            sign: 1,
            log: -0.5 * acc.to_f64(),
        });
    }
    Ok(out)
}

/// Partial sums `sum_{j<k} p_j(x)^2` for `k = 1..=n`.
fn christoffel_sums<R: Real>(t: &CoeffTable<R>, n: usize, x: &R, checked: bool) -> Result<Vec<Scaled<R>>> {
    let qs = if checked {
        q_values_checked(t, n - 1, x)?.0
    } else {
        q_values(t, n - 1, x)?
    };
    let pis = potential_scaled(t, n)?;
    let mut acc = Scaled::zero(t.prec);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        acc = acc.add(&pis[j].mul(&qs[j]).mul(&qs[j]), t.prec);
        out.push(acc.clone());
    }
    Ok(out)
}

/// `rho_n(x) = 1 / sum_{j<n} p_j(x)^2`.
pub fn christoffel_scaled<R: Real>(chain: &ChainSpec, n: usize, x: &R, prec: Precision) -> Result<Scaled<R>> {
    if n == 0 {
        return Err(Error::InvalidInput("Christoffel function needs n >= 1".into()));
    }
    let t = chain.table::<R>(n, prec)?;
    let sums = christoffel_sums(&t, n, x, true)?;
    Ok(sums[n - 1].recip(prec))
}

pub fn christoffel<R: Real>(chain: &ChainSpec, n: usize, x: &R, prec: Precision) -> Result<R> {
    Ok(christoffel_scaled(chain, n, x, prec)?.to_real())
}

/// `rho_k(x)` for `k = 1..=n` from a table.
pub fn christoffel_series<R: Real>(t: &CoeffTable<R>, n: usize, x: &R) -> Result<Vec<Scaled<R>>> {
    Ok(christoffel_sums(t, n, x, true)?
        .iter()
        .map(|s| s.recip(t.prec))
        .collect())
}

/// `rho_k(-eta)/rho_k(eta)` and `Q_k(eta)^2/Q_k(-eta)^2` for `k = 1..=n_max`.
#[derive(Debug, Clone, Serialize)]
pub struct RatioSequences {
    pub eta: f64,
    pub rho_ratio: Vec<f64>,
    pub q_ratio: Vec<f64>,
}

pub fn christoffel_ratio_sequence<R: Real>(chain: &ChainSpec, n_max: usize, eta: &R, prec: Precision) -> Result<RatioSequences> {
    let t = chain.table::<R>(n_max + 1, prec)?;
    ratio_sequences(&t, n_max, eta)
}

pub fn ratio_sequences<R: Real>(t: &CoeffTable<R>, n_max: usize, eta: &R) -> Result<RatioSequences> {
    let plus = christoffel_sums(t, n_max, eta, true)?;
    let minus = christoffel_sums(t, n_max, &(-eta.clone()), true)?;
    let (q_plus, _) = q_values_checked(t, n_max, eta)?;
    let (q_minus, _) = q_values_checked(t, n_max, &(-eta.clone()))?;
    let mut rho_ratio = Vec::with_capacity(n_max);
    let mut q_ratio = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        rho_ratio.push(plus[k - 1].ratio(&minus[k - 1]).to_f64());
        let num = q_plus[k].mul(&q_plus[k]);
        let den = q_minus[k].mul(&q_minus[k]);
        q_ratio.push(if den.is_zero() {
            f64::INFINITY
        } else {
            num.ratio(&den).to_f64()
        });
    }
    Ok(RatioSequences {
        eta: eta.to_f64(),
        rho_ratio,
        q_ratio,
    })
}

/// Relative residual of the Christoffel-Darboux identity
/// `p_n pi_n (Q_n(x) Q_{n+1}(y) - Q_n(y) Q_{n+1}(x)) = (y - x) sum_{j<=n} pi_j Q_j(x) Q_j(y)`.
pub fn cd_identity_residual<R: Real>(chain: &ChainSpec, n: usize, x: &R, y: &R, prec: Precision) -> Result<f64> {
    if x == y {
        return Err(Error::InvalidInput("Christoffel-Darboux residual needs x != y".into()));
    }
    let t = chain.table::<R>(n + 1, prec)?;
    let qx = q_values(&t, n + 1, x)?;
    let qy = q_values(&t, n + 1, y)?;
    let pis = potential_scaled(&t, n + 1)?;
    let cross = qx[n].mul(&qy[n + 1]).sub(&qy[n].mul(&qx[n + 1]), prec);
    let lhs = cross.mul(&pis[n]).mul_real(&t.p[n]);
    let mut sum = Scaled::zero(prec);
    let mut mag = Scaled::zero(prec);
    for j in 0..=n {
        let term = pis[j].mul(&qx[j]).mul(&qy[j]);
        mag = mag.add(&term.abs(), prec);
        sum = sum.add(&term, prec);
    }
    let rhs = sum.mul_real(&(y.clone() - x));
    let diff = lhs.sub(&rhs, prec);
    if diff.is_zero() {
        return Ok(0.0);
    }
    // Relative to the larger side; the absolute sum guards against both sides
    // vanishing at a common root.
    let scale = [lhs.abs(), rhs.abs(), mag.mul_real(&(y.clone() - x).abs())]
        .into_iter()
        .max_by(|a, b| a.abs_cmp(b))
        .unwrap();
    Ok((diff.ln_abs_f64() - scale.ln_abs_f64()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMethod {
    JacobiEigen,
    BisectionPositivity,
    CrossChecked,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportEdges {
    pub eta_hat: f64,
    pub zeta_hat: f64,
    pub method: EdgeMethod,
    pub truncation_size: usize,
    pub discrepancy: f64,
    /// Extrapolated extreme eigenvalues of the truncated Jacobi matrix.
    pub eta_eigen: f64,
    pub zeta_eigen: f64,
    /// Bisection limits of the positivity predicates.
    pub eta_bisection: f64,
    pub zeta_bisection: f64,
    /// The same values at working precision, in decimal.
    pub eta_hat_text: String,
    pub zeta_hat_text: String,
}

/// Jacobi matrix of states `0..n`: diagonal `r_j`, off-diagonal `sqrt(p_{j-1} q_j)`.
pub fn jacobi_matrix<R: Real>(t: &CoeffTable<R>, n: usize) -> Result<Jacobi<R>> {
    t.require(n)?;
    Jacobi::new(t.r[..n].to_vec(), (1..n).map(|j| t.offdiag_sq(j)).collect(), t.prec)
}

/// Whether `s^k Q_k(x) > 0` for all `k <= n`, with `s = 1` or `s = -1`.
fn positivity<R: Real>(t: &CoeffTable<R>, n: usize, x: &R, alternate: bool) -> Result<bool> {
    let qs = q_values(t, n, x)?;
    Ok(qs.iter().enumerate().all(|(k, q)| {
        let s = if alternate && k % 2 == 1 { -q.sign() } else { q.sign() };
        s > 0
    }))
}

fn bisect_predicate<R: Real>(
    t: &CoeffTable<R>,
    n: usize,
    mut inside: R,
    mut outside: R,
    alternate: bool,
) -> Result<R> {
    let eps = R::epsilon(t.prec);
    for _ in 0..(R::mantissa_bits(t.prec) + 40) {
        let mid = (inside.clone() + &outside) * 0.5;
        if positivity(t, n, &mid, alternate)? {
            inside = mid;
        } else {
            outside = mid;
        }
        if (inside.clone() - &outside).abs() <= eps * 4.0 {
            break;
        }
    }
    Ok(inside)
}

/// Estimates of the extreme support points `eta` and `zeta`.
pub fn support_edges<R: Real>(chain: &ChainSpec, truncation: usize, tol: f64, prec: Precision) -> Result<SupportEdges> {
    if truncation < 50 {
        return Err(Error::InvalidInput("support edge estimation needs truncation >= 50".into()));
    }
    let t = chain.table::<R>(truncation, prec)?;
    support_edges_from_table(&t, truncation, tol)
}

pub fn support_edges_from_table<R: Real>(t: &CoeffTable<R>, truncation: usize, tol: f64) -> Result<SupportEdges> {
    let prec = t.prec;
    let full = jacobi_matrix(t, truncation)?;
    let half = full.leading(truncation / 2);
    let extrapolate = |a: R, b: R| a.clone() + (a - b) / 3.0;
    let one = R::one(prec);
    let eta_eig = extrapolate(full.largest_eigenvalue(), half.largest_eigenvalue()).min_of(one.clone());
    let zeta_eig = extrapolate(full.smallest_eigenvalue(), half.smallest_eigenvalue()).max_of(-one.clone());

    let (lo, hi) = full.gershgorin();
    let hi = hi + 1.0;
    let lo = lo - 1.0;
    let eta_bis = bisect_predicate(t, truncation, hi, lo.clone(), false)?;
    let zeta_bis = bisect_predicate(t, truncation, lo, eta_bis.clone(), true)?;

    let d_eta = (eta_eig.clone() - &eta_bis).abs().to_f64();
    let d_zeta = (zeta_eig.clone() - &zeta_bis).abs().to_f64();
    let discrepancy = d_eta.max(d_zeta);
    if discrepancy > 10.0 * tol {
        let (eigen, bisection) = if d_eta >= d_zeta {
            (eta_eig.to_f64(), eta_bis.to_f64())
        } else {
            (zeta_eig.to_f64(), zeta_bis.to_f64())
        };
        return Err(Error::MethodsDisagree { eigen, bisection, tol });
    }
    let method = if discrepancy <= tol {
        EdgeMethod::CrossChecked
    } else {
        EdgeMethod::JacobiEigen
    };
    let zeta_hat = zeta_eig.clone().max_of(-eta_eig.clone());
    Ok(SupportEdges {
        eta_hat: eta_eig.to_f64(),
        zeta_hat: zeta_hat.to_f64(),
        method,
        truncation_size: truncation,
        discrepancy,
        eta_eigen: eta_eig.to_f64(),
        zeta_eigen: zeta_eig.to_f64(),
        eta_bisection: eta_bis.to_f64(),
        zeta_bisection: zeta_bis.to_f64(),
        eta_hat_text: eta_eig.to_sci_string(),
        zeta_hat_text: zeta_hat.to_sci_string(),
    })
}

/// `Q_0(1)..Q_n(1)` by the recurrence, cross-checked against the killing
/// identity `Q_{k+1}(1) = 1 + sum_{j<=k} (1/(p_j pi_j)) sum_{m<=j} kappa_m pi_m Q_m(1)`.
pub fn q_at_one_growth<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<Vec<Scaled<R>>> {
    let t = chain.table::<R>(n + 1, prec)?;
    q_at_one_from_table(&t, n)
}

pub fn q_at_one_from_table<R: Real>(t: &CoeffTable<R>, n: usize) -> Result<Vec<Scaled<R>>> {
    let prec = t.prec;
    let rec = q_values(t, n, &R::one(prec))?;
    let pis = potential_scaled(t, n + 1)?;
    let tol = 10f64.powf(-carried_digits::<R>(prec) / 2.0);
    let mut inner = Scaled::zero(prec);
    let mut outer = Scaled::zero(prec);
    let one = Scaled::one(prec);
    for k in 0..n {
        inner = inner.add(&pis[k].mul(&rec[k]).mul_real(&t.kappa[k]), prec);
        outer = outer.add(&inner.div(&pis[k].mul_real(&t.p[k])), prec);
        let ident = one.add(&outer, prec);
        let diff = ident.sub(&rec[k + 1], prec);
        if !diff.is_zero() {
            let rel = (diff.ln_abs_f64() - ident.ln_abs_f64()).exp();
            if rel > tol {
                return Err(Error::IdentityMismatch { n: k + 1, mismatch: rel });
            }
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsorptionRoute {
    NoKilling,
    Divergence,
    Extrapolation,
}

#[derive(Debug, Clone, Serialize)]
pub struct Absorption {
    pub tau: Vec<f64>,
    /// `None` when `Q_n(1)` diverges.
    pub q_infinity: Option<f64>,
    pub route: AbsorptionRoute,
}

/// `tau_j = 1 - Q_j(1)/Q_inf(1)` for `j = 0..=j_max`.
pub fn absorption_probabilities<R: Real>(chain: &ChainSpec, j_max: usize, n_trunc: usize, prec: Precision) -> Result<Absorption> {
    let n_trunc = n_trunc.max(j_max + 16);
    let t = chain.table::<R>(n_trunc + 1, prec)?;
    if !t.has_killing() {
        return Ok(Absorption {
            tau: vec![0.0; j_max + 1],
            q_infinity: Some(1.0),
            route: AbsorptionRoute::NoKilling,
        });
    }
    let ks = crate::chain::killing_sum::<R>(chain, n_trunc, prec)?;
    if ks.verdict == Verdict::Diverges {
        return Ok(Absorption {
            tau: vec![1.0; j_max + 1],
            q_infinity: None,
            route: AbsorptionRoute::Divergence,
        });
    }
    let qs = q_at_one_from_table(&t, n_trunc)?;
    let vals: Vec<f64> = qs.iter().map(|q| q.to_f64()).collect();
    let est = estimate_limit(&vals)?;
    let q_inf = match est.value {
        LimitValue::Finite(v) if est.uncertainty <= 1e-6 * v.abs() || ks.verdict == Verdict::Converges => v,
        LimitValue::Infinite => {
            return Ok(Absorption {
                tau: vec![1.0; j_max + 1],
                q_infinity: None,
                route: AbsorptionRoute::Divergence,
            })
        }
        _ => {
            return Err(Error::UndecidedLimit(format!(
                "Q_n(1) limit is {} and the killing sum is {}",
                est.describe(),
                ks.verdict
            )))
        }
    };
    let tau = (0..=j_max)
        .map(|j| (1.0 - vals[j] / q_inf).clamp(0.0, 1.0))
        .collect();
    Ok(Absorption {
        tau,
        q_infinity: Some(q_inf),
        route: AbsorptionRoute::Extrapolation,
    })
}
