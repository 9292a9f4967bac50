//! Limit estimation for slowly converging sequences.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitValue {
    Finite(f64),
    Infinite,
    Oscillating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitMethod {
    TailWindow,
    Aitken,
    Richardson,
}

impl std::fmt::Display for LimitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitMethod::TailWindow => "tail-window",
            LimitMethod::Aitken => "aitken",
            LimitMethod::Richardson => "richardson",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: LimitValue,
    pub uncertainty: f64,
    pub method: LimitMethod,
    /// Half-open index range of the input the estimate is built from.
    pub n_used: (usize, usize),
    /// Range of the (possibly accelerated) values the estimate was taken from.
    pub window: (f64, f64),
}

impl LimitEstimate {
    pub fn finite(&self) -> Option<f64> {
        match self.value {
            LimitValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self.value {
            LimitValue::Finite(v) => format!("{v:.10e} +/- {:.3e} ({})", self.uncertainty, self.method),
            LimitValue::Infinite => "+inf".into(),
            LimitValue::Oscillating => "oscillating".into(),
        }
    }
}

pub const MIN_LENGTH: usize = 16;

/// Estimate `lim s_n` from the tail of `seq`.
pub fn estimate_limit(seq: &[f64]) -> Result<LimitEstimate> {
    let n = seq.len();
    if n < MIN_LENGTH {
        return Err(Error::InvalidInput(format!(
            "limit estimation needs at least {MIN_LENGTH} terms, got {n}"
        )));
    }
    if seq.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("sequence contains NaN".into()));
    }
    let lo = n / 2;
    let tail = &seq[lo..];
    let (tmin, tmax) = min_max(tail);
    let scale = tmax.abs().max(tmin.abs()).max(f64::MIN_POSITIVE);

    if tail.iter().any(|v| v.is_infinite()) {
        let last = seq[n - 1];
        if last == f64::INFINITY {
            return Ok(LimitEstimate {
                value: LimitValue::Infinite,
                uncertainty: 0.0,
                method: LimitMethod::TailWindow,
                n_used: (lo, n),
                window: (tmin, tmax),
            });
        }
        return Err(Error::InvalidInput("sequence tail contains infinities".into()));
    }

    if tmax == tmin {
        return Ok(LimitEstimate {
            value: LimitValue::Finite(tmax),
            uncertainty: 0.0,
            method: LimitMethod::TailWindow,
            n_used: (lo, n),
            window: (tmin, tmax),
        });
    }

    if oscillates(seq, lo) {
        return Ok(LimitEstimate {
            value: LimitValue::Oscillating,
            uncertainty: f64::INFINITY,
            method: LimitMethod::TailWindow,
            n_used: (lo, n),
            window: (tmin, tmax),
        });
    }

    let monotone = is_monotone(tail);
    if monotone {
        let d_first = (tail[1] - tail[0]).abs();
        let d_last = (tail[tail.len() - 1] - tail[tail.len() - 2]).abs();
        if d_last >= 0.9 * d_first && d_last > 1e-12 * scale {
            return Ok(LimitEstimate {
                value: LimitValue::Infinite,
                uncertainty: 0.0,
                method: LimitMethod::TailWindow,
                n_used: (lo, n),
                window: (tmin, tmax),
            });
        }
        let mut best: Option<LimitEstimate> = None;
        for cand in [aitken(seq), richardson(seq)].into_iter().flatten() {
            if best.map_or(true, |b| cand.uncertainty < b.uncertainty) {
                best = Some(cand);
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
    }

    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    Ok(LimitEstimate {
        value: LimitValue::Finite(mean),
        uncertainty: 0.5 * (tmax - tmin),
        method: LimitMethod::TailWindow,
        n_used: (lo, n),
        window: (tmin, tmax),
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

fn is_monotone(v: &[f64]) -> bool {
    let mut up = false;
    let mut down = false;
    for w in v.windows(2) {
        if w[1] > w[0] {
            up = true;
        } else if w[1] < w[0] {
            down = true;
        }
    }
    !(up && down)
}

/// Even and odd subsequences settle on different values.
fn oscillates(seq: &[f64], lo: usize) -> bool {
    let n = seq.len();
    let even: Vec<f64> = (lo..n).filter(|k| k % 2 == 0).map(|k| seq[k]).collect();
    let odd: Vec<f64> = (lo..n).filter(|k| k % 2 == 1).map(|k| seq[k]).collect();
    if even.len() < 4 || odd.len() < 4 {
        return false;
    }
    let last_half = |v: &[f64]| {
        let h = &v[v.len() / 2..];
        let (a, b) = min_max(h);
        (h[h.len() - 1], b - a)
    };
    let (e_last, e_var) = last_half(&even);
    let (o_last, o_var) = last_half(&odd);
    let gap = (e_last - o_last).abs();
    let scale = e_last.abs().max(o_last.abs());
    gap > 10.0 * (e_var + o_var) && gap > 1e-9 * scale && !is_monotone(&seq[lo..])
}

/// Aitken transform of the last stretch of the sequence. The uncertainty
/// includes the drift against the same transform at half the length, which
/// exposes slowly (logarithmically) converging input.
fn aitken(seq: &[f64]) -> Option<LimitEstimate> {
    let n = seq.len();
    let (lo, acc) = aitken_tail(seq)?;
    let recent = &acc[acc.len() - 4..];
    let (a, b) = min_max(recent);
    let value = acc[acc.len() - 1];
    let drift = if n >= 2 * MIN_LENGTH {
        aitken_tail(&seq[..n / 2]).map_or(f64::INFINITY, |(_, h)| (h[h.len() - 1] - value).abs())
    } else {
        0.0
    };
    Some(LimitEstimate {
        value: LimitValue::Finite(value),
        uncertainty: (b - a).max(drift) + 1e-15 * value.abs(),
        method: LimitMethod::Aitken,
        n_used: (lo, n),
        window: (a, b),
    })
}

fn aitken_tail(seq: &[f64]) -> Option<(usize, Vec<f64>)> {
    let n = seq.len();
    let lo = n - n.min(64);
    let s = &seq[lo..];
    let mut acc = Vec::with_capacity(s.len());
    for k in 2..s.len() {
        let d1 = s[k] - s[k - 1];
        let d0 = s[k - 1] - s[k - 2];
        let d2 = d1 - d0;
        let scale = s[k].abs().max(f64::MIN_POSITIVE);
        if d2.abs() <= 1e-14 * scale || d1.abs() <= 1e-15 * scale {
            acc.push(s[k]);
        } else {
            acc.push(s[k] - d1 * d1 / d2);
        }
    }
    if acc.len() < 4 || acc.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((lo, acc))
}

/// `s_n = L + c n^-p` fitted on indices `n/4, n/2, n` and on `n/8, n/4, n/2`.
fn richardson(seq: &[f64]) -> Option<LimitEstimate> {
    let n = seq.len() - 1;
    let fit = |k: usize| -> Option<f64> {
        let (s1, s2, s3) = (seq[k / 4], seq[k / 2], seq[k]);
        let d_a = s2 - s1;
        let d_b = s3 - s2;
        if d_b == 0.0 {
            return Some(s3);
        }
        let ratio = d_a / d_b;
        if !(ratio > 1.0) {
            return None;
        }
        // Doubling the index divides the error by 2^p.
        let factor = ratio;
        Some(s3 + d_b / (factor - 1.0))
    };
    let l1 = fit(n)?;
    let l2 = fit(n / 2)?;
    if !l1.is_finite() || !l2.is_finite() {
        return None;
    }
    Some(LimitEstimate {
        value: LimitValue::Finite(l1),
        uncertainty: (l1 - l2).abs() + 1e-15 * l1.abs(),
        method: LimitMethod::Richardson,
        n_used: (n / 8, n + 1),
        window: (l1.min(l2), l1.max(l2)),
    })
}
