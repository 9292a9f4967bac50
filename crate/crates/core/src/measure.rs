//! Discrete approximations of the random walk measure and the quantities
//! computed from them: moments, `C_n`, the functional `L_n` and `n`-step
//! transition probabilities.

use serde::Serialize;

use crate::chain::{potential_scaled, ChainSpec, CoeffTable};
use crate::error::{Error, Result};
use crate::polynomials::{jacobi_matrix, q_values};
use crate::real::{CompensatedSum, Precision, Real, SignLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MeasureSource {
    FromChain { truncation: usize },
    FromWeightSpec { grid: usize },
}

#[derive(Debug, Clone)]
pub struct DiscreteMeasure<R> {
    pub label: String,
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
    pub source: MeasureSource,
    pub total_mass: R,
    /// Largest polynomial degree integrated to working precision.
    pub resolved_degree: usize,
    pub prec: Precision,
}

impl<R: Real> DiscreteMeasure<R> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs in decimal scientific notation.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node,weight\n");
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.push_str(&format!("{},{}\n", x.to_sci_string(), w.to_sci_string()));
        }
        s
    }
}

/// Gauss quadrature from the `N x N` truncated Jacobi matrix of the chain.
///
/// Killing is allowed: the representation of transition probabilities by
/// the measure holds for chains with killing as well.
pub fn quadrature_from_chain<R: Real>(chain: &ChainSpec, n: usize, prec: Precision) -> Result<DiscreteMeasure<R>> {
    if n < 2 {
        return Err(Error::InvalidInput("quadrature needs N >= 2".into()));
    }
    let t = chain.table::<R>(n, prec)?;
    quadrature_from_table(&t, n)
}

pub fn quadrature_from_table<R: Real>(t: &CoeffTable<R>, n: usize) -> Result<DiscreteMeasure<R>> {
    let (mut nodes, weights) = jacobi_matrix(t, n)?.gauss_rule()?;
    // A node within roundoff of zero is zero: it must not tip C_0 to one side.
    let zero_band = 16.0 * R::epsilon(t.prec);
    for x in nodes.iter_mut() {
        if x.clone().abs() <= zero_band {
            *x = R::zero(t.prec);
        }
    }
    let mut total = CompensatedSum::new(t.prec);
    for w in &weights {
        total.add(w.clone());
    }
    Ok(DiscreteMeasure {
        label: t.label.clone(),
        nodes,
        weights,
        source: MeasureSource::FromChain { truncation: n },
        total_mass: total.value(),
        resolved_degree: 2 * n - 1,
        prec: t.prec,
    })
}

/// `sum_k w_k x_k^n`.
pub fn moment<R: Real>(measure: &DiscreteMeasure<R>, n: usize) -> R {
    let mut s = CompensatedSum::new(measure.prec);
    for (x, w) in measure.nodes.iter().zip(&measure.weights) {
        s.add(x.clone().powi(n as i32) * w);
    }
    s.value()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CnValue {
    pub n: usize,
    pub value: f64,
    pub log_value: f64,
    pub negative_sum: SignLog,
    pub positive_sum: SignLog,
}

/// `C_n` for `n = 0..=n_max`; nodes at exactly zero are left out of both sums.
pub fn cn_series<R: Real>(measure: &DiscreteMeasure<R>, n_max: usize) -> Result<Vec<CnValue>> {
    let prec = measure.prec;
    let mut neg_x = Vec::new();
    let mut neg_u = Vec::new();
    let mut pos_x = Vec::new();
    let mut pos_u = Vec::new();
    for (x, w) in measure.nodes.iter().zip(&measure.weights) {
        if *x < 0.0 {
            neg_x.push(x.clone().abs());
            neg_u.push(w.clone());
        } else if *x > 0.0 {
            pos_x.push(x.clone());
            pos_u.push(w.clone());
        }
    }
    // The terms are stored as w |x|^n 2^shift; rescaling keeps the largest
    // term near one for the f64 backend.
    let mut shift: i64 = 0;
    let ln2 = std::f64::consts::LN_2;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            for (u, x) in neg_u.iter_mut().zip(&neg_x) {
                *u *= x;
            }
            for (u, x) in pos_u.iter_mut().zip(&pos_x) {
                *u *= x;
            }
        }
        let mut neg = R::zero(prec);
        let mut pos = R::zero(prec);
        let mut largest = 0.0f64;
        for u in &neg_u {
            neg += u;
            largest = largest.max(u.to_f64());
        }
        for u in &pos_u {
            pos += u;
            largest = largest.max(u.to_f64());
        }
        if largest > 0.0 && largest < 2f64.powi(-600) {
            let factor = 2f64.powi(600);
            for u in neg_u.iter_mut().chain(pos_u.iter_mut()) {
                *u *= factor;
            }
            neg *= factor;
            pos *= factor;
            shift += 600;
        }
        let sl = |v: &R| {
            if v.is_zero() {
                SignLog::ZERO
            } else {
                SignLog {
                    sign: 1,
                    log: v.clone().ln().to_f64() - shift as f64 * ln2,
                }
            }
        };
        let negative_sum = sl(&neg);
        let positive_sum = sl(&pos);
        if pos.is_zero() {
            return Err(Error::DenominatorUnderflow {
                n,
                log_value: positive_sum.log,
            });
        }
        let ratio = neg / &pos;
        let log_value = if ratio.is_zero() {
            f64::NEG_INFINITY
        } else {
            ratio.clone().ln().to_f64()
        };
        out.push(CnValue {
            n,
            value: ratio.to_f64(),
            log_value,
            negative_sum,
            positive_sum,
        });
    }
    Ok(out)
}

#[allow(non_snake_case)]
pub fn compute_Cn<R: Real>(measure: &DiscreteMeasure<R>, n: usize) -> Result<CnValue> {
    Ok(cn_series(measure, n)?[n])
}

/// `Q_0..Q_m` at every node of the measure.
fn q_at_nodes<R: Real>(t: &CoeffTable<R>, nodes: &[R], m: usize) -> Result<Vec<Vec<R>>> {
    nodes
        .iter()
        .map(|x| Ok(q_values(t, m, x)?.iter().map(|q| q.to_real()).collect()))
        .collect()
}

/// `L_n(f) = sum w x^n f(x) / sum w x^n` for `f = sum_t c_t Q_{i_t} Q_{j_t}`.
pub fn l_functional<R: Real>(
    measure: &DiscreteMeasure<R>,
    chain: &ChainSpec,
    terms: &[(R, usize, usize)],
    n: usize,
) -> Result<R> {
    let prec = measure.prec;
    let m = terms.iter().map(|(_, i, j)| (*i).max(*j)).max().unwrap_or(0);
    let t = chain.table::<R>(m + 1, prec)?;
    let qs = q_at_nodes(&t, &measure.nodes, m)?;
    let mut num = CompensatedSum::new(prec);
    let mut den = CompensatedSum::new(prec);
    let mut mag = R::zero(prec);
    for (k, (x, w)) in measure.nodes.iter().zip(&measure.weights).enumerate() {
        let base = x.clone().powi(n as i32) * w;
        mag += base.clone().abs();
        let mut f = R::zero(prec);
        for (c, i, j) in terms {
            f += c.clone() * &qs[k][*i] * &qs[k][*j];
        }
        num.add(base.clone() * &f);
        den.add(base);
    }
    let den = den.value();
    let noise = mag * (R::epsilon(prec) * 1e3 * (n as f64 + 1.0));
    if den.clone().abs() <= noise {
        return Err(Error::ZeroDenominator(n));
    }
    Ok(num.value() / den)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionQuery {
    pub i: usize,
    pub j: usize,
    pub n: usize,
    pub value_spectral: f64,
    pub value_matrix: f64,
    pub value_mc: Option<(f64, f64)>,
}

pub fn transition_csv(rows: &[TransitionQuery]) -> String {
    let mut s = String::from("i,j,n,spectral,matrix,mc_est,mc_se\n");
    for r in rows {
        let (e, se) = match r.value_mc {
            Some((e, se)) => (format!("{e}"), format!("{se}")),
            None => (String::new(), String::new()),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.i, r.j, r.n, r.value_spectral, r.value_matrix, e, se
        ));
    }
    s
}

/// Distribution after `steps` steps from state `i`, for every step count
/// up to `steps`: `out[n][j] = P_ij(n)`.
pub fn matrix_powers<R: Real>(t: &CoeffTable<R>, i: usize, steps: usize, dim: usize) -> Result<Vec<Vec<R>>> {
    t.require(dim)?;
    let prec = t.prec;
    let mut v = vec![R::zero(prec); dim];
    v[i] = R::one(prec);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(v.clone());
    for _ in 0..steps {
        let mut next = vec![R::zero(prec); dim];
        for k in 0..dim {
            if v[k].is_zero() {
                continue;
            }
            next[k] += v[k].clone() * &t.r[k];
            if k + 1 < dim {
                next[k + 1] += v[k].clone() * &t.p[k];
            }
            if k > 0 {
                next[k - 1] += v[k].clone() * &t.q[k];
            }
        }
        v = next;
        out.push(v.clone());
    }
    Ok(out)
}

/// `P_ij(n)` from the spectral representation and from matrix powers.
pub fn transition_probability<R: Real>(
    chain: &ChainSpec,
    i: usize,
    j: usize,
    n: usize,
    quad_n: usize,
    prec: Precision,
) -> Result<TransitionQuery> {
    Ok(transition_grid::<R>(chain, &[i], &[j], n, quad_n, prec)?
        .into_iter()
        .find(|q| q.n == n)
        .expect("grid contains the requested step count"))
}

/// `P_ij(n)` for all `i` in `is`, `j` in `js` and `n = 0..=max_n`.
pub fn transition_grid<R: Real>(
    chain: &ChainSpec,
    is: &[usize],
    js: &[usize],
    max_n: usize,
    quad_n: usize,
    prec: Precision,
) -> Result<Vec<TransitionQuery>> {
    let max_i = is.iter().copied().max().unwrap_or(0);
    let max_j = js.iter().copied().max().unwrap_or(0);
    let m = max_i.max(max_j);
    if 2 * quad_n < max_n + 2 * m + 2 {
        return Err(Error::InvalidInput(format!(
            "quadrature size {quad_n} cannot integrate degree {} exactly",
            max_n + 2 * m
        )));
    }
    let dim = max_i + max_j + max_n + 2;
    let t = chain.table::<R>(dim.max(quad_n).max(m + 1), prec)?;
    let measure = quadrature_from_table(&t, quad_n)?;
    let qs = q_at_nodes(&t, &measure.nodes, m)?;
    let pis: Vec<R> = potential_scaled(&t, m + 1)?.iter().map(|p| p.to_real()).collect();

    // spectral[n][i][j]
    let mut spectral = vec![vec![vec![R::zero(prec); js.len()]; is.len()]; max_n + 1];
    for (k, (x, w)) in measure.nodes.iter().zip(&measure.weights).enumerate() {
        let mut xn = w.clone();
        for row in spectral.iter_mut() {
            for (a, &i) in is.iter().enumerate() {
                let wi = xn.clone() * &qs[k][i];
                for (b, &j) in js.iter().enumerate() {
                    row[a][b] += wi.clone() * &qs[k][j];
                }
            }
            xn *= x;
        }
    }

    let mut out = Vec::with_capacity(is.len() * js.len() * (max_n + 1));
    for (a, &i) in is.iter().enumerate() {
        let powers = matrix_powers(&t, i, max_n, dim)?;
        for (b, &j) in js.iter().enumerate() {
            for n in 0..=max_n {
                out.push(TransitionQuery {
                    i,
                    j,
                    n,
                    value_spectral: (spectral[n][a][b].clone() * &pis[j]).to_f64(),
                    value_matrix: powers[n][j].to_f64(),
                    value_mc: None,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SrlpComparison {
    pub predicted: f64,
    /// `(n, P_ij(n)/P_kl(n))`; `None` where `P_kl(n) = 0`.
    pub empirical: Vec<(usize, Option<f64>)>,
}

/// Predicted `lim P_ij(n)/P_kl(n) = pi_j Q_i(eta) Q_j(eta) / (pi_l Q_k(eta) Q_l(eta))`
/// with the matrix-power ratios up to `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn srlp_predicted_limit<R: Real>(
    chain: &ChainSpec,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    eta: &R,
    horizon: usize,
    prec: Precision,
) -> Result<SrlpComparison> {
    if chain.is_periodic()? {
        return Err(Error::InvalidInput(
            "ratio limits of transition probabilities need an aperiodic chain".into(),
        ));
    }
    let m = i.max(j).max(k).max(l);
    let dim = m + m + horizon + 2;
    let t = chain.table::<R>(dim, prec)?;
    let q = q_values(&t, m, eta)?;
    for idx in [k, l] {
        if q[idx].is_zero() {
            return Err(Error::DivisionSentinel { index: idx });
        }
    }
    let pis = potential_scaled(&t, m + 1)?;
    let num = pis[j].mul(&q[i]).mul(&q[j]);
    let den = pis[l].mul(&q[k]).mul(&q[l]);
    let predicted = num.ratio(&den).to_f64();
    let from_i = matrix_powers(&t, i, horizon, dim)?;
    let from_k = if k == i { None } else { Some(matrix_powers(&t, k, horizon, dim)?) };
    let from_k = from_k.as_ref().unwrap_or(&from_i);
    let empirical = (0..=horizon)
        .map(|n| {
            let d = &from_k[n][l];
            let v = if d.is_zero() {
                None
            } else {
                Some((from_i[n][j].clone() / d).to_f64())
            };
            (n, v)
        })
        .collect();
    Ok(SrlpComparison { predicted, empirical })
}
