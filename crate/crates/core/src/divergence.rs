//! Trinary convergence verdicts for series with nonnegative terms.
//!
//! Exact divergence is not decidable from finitely many terms, so a series
//! is classified from its partial sums and the shape of its summands:
//!
//! * `Diverges` when the partial sums (or their Aitken extrapolation) pass
//!   `bound`, or when the summands over the last decade of indices decay no
//!   faster than `j^slope_threshold`;
//! * `Converges` when partial sums plus a fitted tail remainder agree to
//!   `rel_tol` at `n/100`, `n/10` and `n`;
//! * `Undecided` otherwise.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Diverges,
    Converges,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Diverges => "diverges",
            Verdict::Converges => "converges",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceVerdict {
    pub partial_sums: Vec<f64>,
    pub verdict: Verdict,
    pub tail_analysis: Option<String>,
    /// Extrapolated value of the full series when it converges.
    pub extrapolated: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct HeuristicConfig {
    pub bound: f64,
    pub slope_threshold: f64,
    pub rel_tol: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            bound: 1e8,
            slope_threshold: -1.02,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TailShape {
    Vanishing,
    Geometric { ratio: f64 },
    Power { slope: f64 },
}

/// Classify `sum_j t_j` from partial sums and `ln t_j` (`-inf` for zero terms).
pub fn classify(partial_sums: Vec<f64>, ln_terms: &[f64], cfg: &HeuristicConfig) -> DivergenceVerdict {
    assert_eq!(partial_sums.len(), ln_terms.len());
    let n = partial_sums.len();
    let done = |partial_sums, verdict, msg: String, ext| DivergenceVerdict {
        partial_sums,
        verdict,
        tail_analysis: Some(msg),
        extrapolated: ext,
    };
    if n == 0 {
        return done(partial_sums, Verdict::Undecided, "no terms".into(), None);
    }
    if ln_terms.iter().all(|l| *l == f64::NEG_INFINITY) {
        return done(partial_sums, Verdict::Converges, "all summands vanish".into(), Some(0.0));
    }
    let last = partial_sums[n - 1];
    if !last.is_finite() || last > cfg.bound {
        return done(
            partial_sums,
            Verdict::Diverges,
            format!("partial sums exceed {:e}", cfg.bound),
            None,
        );
    }
    if n >= 3 {
        let (s0, s1, s2) = (partial_sums[n - 3], partial_sums[n - 2], partial_sums[n - 1]);
        let d2 = s2 - 2.0 * s1 + s0;
        if d2 != 0.0 {
            let aitken = s2 - (s2 - s1) * (s2 - s1) / d2;
            if aitken.is_finite() && aitken > cfg.bound {
                return done(
                    partial_sums,
                    Verdict::Diverges,
                    format!("Aitken extrapolation {aitken:e} exceeds {:e}", cfg.bound),
                    None,
                );
            }
        }
    }

    let shape = tail_shape(ln_terms, n - 1);
    if let TailShape::Power { slope } = shape {
        if slope >= cfg.slope_threshold {
            return done(
                partial_sums,
                Verdict::Diverges,
                format!("summands decay like j^{slope:.3} over the last decade"),
                None,
            );
        }
    }

    let last_idx = n - 1;
    let mut checkpoints = vec![last_idx];
    if last_idx >= 10 {
        checkpoints.push(last_idx / 10);
    }
    // The offset-free power fit is only accurate to O(1/k^2), too coarse at n/100.
    let power = matches!(shape, TailShape::Power { .. });
    if last_idx >= 1000 && (!power || last_idx >= 100_000) {
        checkpoints.push(last_idx / 100);
    }
    let estimates: Vec<f64> = checkpoints
        .iter()
        .map(|&k| extrapolate(&partial_sums, ln_terms, k))
        .collect();
    let target = estimates[0];
    if checkpoints.len() >= 2 && target.is_finite() {
        let scale = target.abs().max(f64::MIN_POSITIVE);
        let agree = estimates
            .iter()
            .all(|e| e.is_finite() && (e - target).abs() <= cfg.rel_tol * scale);
        if agree {
            return done(
                partial_sums,
                Verdict::Converges,
                format!("tail-corrected sums agree to {:e} ({})", cfg.rel_tol, describe(shape)),
                Some(target),
            );
        }
    }
    done(
        partial_sums,
        Verdict::Undecided,
        format!("no stable extrapolation ({})", describe(shape)),
        None,
    )
}

fn describe(shape: TailShape) -> String {
    match shape {
        TailShape::Vanishing => "summands vanish".into(),
        TailShape::Geometric { ratio } => format!("geometric tail, ratio {ratio:.6}"),
        TailShape::Power { slope } => format!("power tail, slope {slope:.3}"),
    }
}

/// Fit the summands on the decade ending at `k`.
fn tail_shape(ln_terms: &[f64], k: usize) -> TailShape {
    if ln_terms[k] == f64::NEG_INFINITY {
        return TailShape::Vanishing;
    }
    let lo = (k / 10).max(1).min(k);
    if lo == k {
        return TailShape::Power { slope: 0.0 };
    }
    // Zero terms inside the window: fit over the nonzero stretch at the end.
    let mut start = lo;
    for j in (lo..=k).rev() {
        if ln_terms[j] == f64::NEG_INFINITY {
            start = j + 1;
            break;
        }
    }
    if start >= k {
        return TailShape::Power { slope: 0.0 };
    }
    let mid = (start + k) / 2;
    let per_index = |a: usize, b: usize| (ln_terms[b] - ln_terms[a]) / (b - a) as f64;
    let per_log = |a: usize, b: usize| (ln_terms[b] - ln_terms[a]) / ((b as f64).ln() - (a as f64).ln());
    if mid > start && mid < k {
        let g1 = per_index(start, mid);
        let g2 = per_index(mid, k);
        // A geometric tail has a constant log-ratio per index; a power tail
        // flattens as j grows.
        if g2 < 0.0 && (g2 - g1).abs() <= 0.1 * g2.abs() && g2 < -1.0 / k as f64 * 2.0 {
            return TailShape::Geometric { ratio: g2.exp() };
        }
        if g2 > 0.0 && (g2 - g1).abs() <= 0.1 * g2.abs() && g2 > 2.0 / k as f64 {
            return TailShape::Geometric { ratio: g2.exp() };
        }
    }
    TailShape::Power {
        slope: per_log(start, k),
    }
}

fn extrapolate(partial_sums: &[f64], ln_terms: &[f64], k: usize) -> f64 {
    let s = partial_sums[k];
    match tail_shape(ln_terms, k) {
        TailShape::Vanishing => s,
        TailShape::Geometric { ratio } => {
            if ratio >= 1.0 {
                f64::INFINITY
            } else {
                s + ln_terms[k].exp() * ratio / (1.0 - ratio)
            }
        }
        TailShape::Power { slope } => {
            if slope >= -1.0 {
                return f64::INFINITY;
            }
            if k >= 2 {
                if let Some(tail) = power_tail(ln_terms, k - 1) {
                    return partial_sums[k - 1] + tail;
                }
            }
            let kf = k as f64;
            s + ln_terms[k].exp() * (kf / (-slope - 1.0) - 0.5)
        }
    }
}

/// `sum_{j>k} t_j` for `t_j ~ c (j + a)^s` with `s` and `k + a` read off
/// the local log-derivatives, so an unknown index offset `a` does no harm.
fn power_tail(ln_terms: &[f64], k: usize) -> Option<f64> {
    let (g0, g1, g2) = (ln_terms[k - 1], ln_terms[k], *ln_terms.get(k + 1)?);
    if !(g0.is_finite() && g1.is_finite() && g2.is_finite()) {
        return None;
    }
    let d1 = 0.5 * (g2 - g0);
    let d2 = g2 - 2.0 * g1 + g0;
    if !(d1 < 0.0 && d2 > 0.0) {
        return None;
    }
    let x = -d1 / d2;
    let slope = -d1 * d1 / d2;
    if slope >= -1.0 {
        return Some(f64::INFINITY);
    }
    let t = g1.exp();
    // Euler-Maclaurin: integral minus half the first term minus t'/12.
    Some(t * x / (-slope - 1.0) - 0.5 * t - slope * t / (12.0 * x))
}

/// Partial sums and log-terms from nonnegative summands given as `f64`.
pub fn classify_terms(terms: &[f64], cfg: &HeuristicConfig) -> DivergenceVerdict {
    let mut acc = 0.0;
    let mut comp = 0.0;
    let mut sums = Vec::with_capacity(terms.len());
    for &t in terms {
        let y = acc + t;
        if acc.abs() >= t.abs() {
            comp += (acc - y) + t;
        } else {
            comp += (t - y) + acc;
        }
        acc = y;
        sums.push(acc + comp);
    }
    let logs: Vec<f64> = terms.iter().map(|t| if *t > 0.0 { t.ln() } else { f64::NEG_INFINITY }).collect();
    classify(sums, &logs, cfg)
}
