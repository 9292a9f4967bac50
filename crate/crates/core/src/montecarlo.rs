//! Trajectory simulation of a chain.
//!
//! Trajectories run in batches of [`BATCH`]; batch `b` draws from the
//! ChaCha8 stream `b` of the seed, so results do not depend on the number
//! of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::real::Precision;

pub const BATCH: u64 = 10_000;
pub const MIN_SAMPLES: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Cumulative thresholds `p, p + q, p + q + r` per state.
struct Steps {
    up: Vec<f64>,
    down: Vec<f64>,
    hold: Vec<f64>,
}

impl Steps {
    fn new(chain: &ChainSpec, states: usize) -> Result<Steps> {
        let t = chain.table::<f64>(states, Precision::double())?;
        let mut s = Steps {
            up: Vec::with_capacity(states),
            down: Vec::with_capacity(states),
            hold: Vec::with_capacity(states),
        };
        for j in 0..states {
            s.up.push(t.p[j]);
            s.down.push(t.p[j] + t.q[j]);
            s.hold.push(t.p[j] + t.q[j] + t.r[j]);
        }
        Ok(s)
    }

    /// Next state, or `None` when the trajectory is killed.
    #[inline]
    fn step(&self, s: usize, u: f64) -> Option<usize> {
        if u < self.up[s] {
            Some(s + 1)
        } else if u < self.down[s] {
            Some(s - 1)
        } else if u < self.hold[s] {
            Some(s)
        } else {
            None
        }
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// Counts over all batches; `f` simulates `count` trajectories with `rng`.
fn run_batches<F>(samples: u64, seed: u64, f: F) -> Vec<(u64, u64)>
where
    F: Fn(&mut ChaCha8Rng, u64) -> (u64, u64) + Sync,
{
    let batches = samples.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(samples - b * BATCH);
            f(&mut rng, count)
        })
        .collect()
}

fn binomial(hits: u64, samples: u64) -> McEstimate {
    let p = hits as f64 / samples as f64;
    McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    }
}

/// Fraction of `samples` trajectories from `i` that sit at `j` after `n` steps.
pub fn monte_carlo_transition(
    chain: &ChainSpec,
    i: usize,
    j: usize,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(samples)?;
    let steps = Steps::new(chain, i + n + 1)?;
    let counts = run_batches(samples, seed, |rng, count| {
        let mut hits = 0;
        for _ in 0..count {
            let mut s = Some(i);
            for _ in 0..n {
                match s {
                    Some(state) => s = steps.step(state, rng.random::<f64>()),
                    None => break,
                }
            }
            if s == Some(j) {
                hits += 1;
            }
        }
        (hits, 0)
    });
    let hits = counts.iter().map(|c| c.0).sum();
    Ok(binomial(hits, samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McAbsorption {
    pub absorbed: McEstimate,
    /// Fraction of trajectories still alive at the horizon.
    pub unresolved_fraction: f64,
    pub horizon: usize,
}

/// Fraction of trajectories from `start` killed within `horizon` steps.
pub fn monte_carlo_absorption(
    chain: &ChainSpec,
    start: usize,
    horizon: usize,
    samples: u64,
    seed: u64,
) -> Result<McAbsorption> {
    check_samples(samples)?;
    let steps = Steps::new(chain, start + horizon + 1)?;
    let counts = run_batches(samples, seed, |rng, count| {
        let mut killed = 0;
        let mut alive = 0;
        for _ in 0..count {
            let mut s = start;
            let mut dead = false;
            for _ in 0..horizon {
                match steps.step(s, rng.random::<f64>()) {
                    Some(next) => s = next,
                    None => {
                        dead = true;
                        break;
                    }
                }
            }
            if dead {
                killed += 1;
            } else {
                alive += 1;
            }
        }
        (killed, alive)
    });
    let killed = counts.iter().map(|c| c.0).sum();
    let alive: u64 = counts.iter().map(|c| c.1).sum();
    Ok(McAbsorption {
        absorbed: binomial(killed, samples),
        unresolved_fraction: alive as f64 / samples as f64,
        horizon,
    })
}
