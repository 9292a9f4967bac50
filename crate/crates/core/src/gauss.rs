//! Gauss-Legendre rules at working precision.

use crate::real::{Precision, Real};

/// Nodes (ascending) and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<R: Real>(m: usize, prec: Precision) -> (Vec<R>, Vec<R>) {
    assert!(m >= 1);
    let pi = R::pi(prec);
    let eps = R::epsilon(prec);
    let mut nodes = vec![R::zero(prec); m];
    let mut weights = vec![R::zero(prec); m];
    for i in 0..m.div_ceil(2) {
        let guess = (pi.clone() * ((i as f64 + 0.75) / (m as f64 + 0.5))).cos();
        let mut x = guess;
        let mut dp = R::one(prec);
        for _ in 0..100 {
            let (p, d) = legendre(m, &x, prec);
            dp = d;
            let step = p / &dp;
            x -= &step;
            if step.abs() <= eps * 4.0 {
                let (_, d) = legendre(m, &x, prec);
                dp = d;
                break;
            }
        }
        let w = R::from_f64(2.0, prec) / ((R::one(prec) - x.clone() * &x) * &dp * &dp);
        nodes[m - 1 - i] = x.clone();
        weights[m - 1 - i] = w.clone();
        nodes[i] = -x;
        weights[i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = R::zero(prec);
    }
    (nodes, weights)
}

/// `P_m(x)` and `P_m'(x)`.
fn legendre<R: Real>(m: usize, x: &R, prec: Precision) -> (R, R) {
    let mut p0 = R::one(prec);
    let mut p1 = x.clone();
    for k in 2..=m {
        let kf = k as f64;
        let p2 = (x.clone() * &p1 * (2.0 * kf - 1.0) - p0.clone() * (kf - 1.0)) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 1 {
        p0 = R::one(prec);
    }
    let d = (x.clone() * &p1 - &p0) * (m as f64) / (x.clone() * x - 1.0);
    (p1, d)
}
