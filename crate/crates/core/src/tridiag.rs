//! Symmetric tridiagonal eigenproblems at working precision.

use crate::error::{Error, Result};
use crate::real::{Precision, Real};

/// Symmetric tridiagonal matrix: `diag[k]` and squared off-diagonals
/// `off_sq[k]` between rows `k` and `k + 1`.
#[derive(Debug, Clone)]
pub struct Jacobi<R> {
    pub diag: Vec<R>,
    pub off_sq: Vec<R>,
    pub prec: Precision,
}

impl<R: Real> Jacobi<R> {
    pub fn new(diag: Vec<R>, off_sq: Vec<R>, prec: Precision) -> Result<Self> {
        if diag.is_empty() || off_sq.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "tridiagonal matrix needs n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off_sq.len()
            )));
        }
        Ok(Jacobi { diag, off_sq, prec })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn leading(&self, n: usize) -> Jacobi<R> {
        Jacobi {
            diag: self.diag[..n].to_vec(),
            off_sq: self.off_sq[..n - 1].to_vec(),
            prec: self.prec,
        }
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (R, R) {
        let n = self.dim();
        let mut lo: Option<R> = None;
        let mut hi: Option<R> = None;
        let off: Vec<R> = self.off_sq.iter().map(|b| b.clone().sqrt()).collect();
        for k in 0..n {
            let mut rad = R::zero(self.prec);
            if k > 0 {
                rad += &off[k - 1];
            }
            if k + 1 < n {
                rad += &off[k];
            }
            let a = self.diag[k].clone() - &rad;
            let b = self.diag[k].clone() + &rad;
            lo = Some(match lo {
                None => a,
                Some(l) => l.min_of(a),
            });
            hi = Some(match hi {
                None => b,
                Some(h) => h.max_of(b),
            });
        }
        (lo.unwrap(), hi.unwrap())
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: &R) -> usize {
        let tiny = R::from_f64(R::epsilon(self.prec) * 1e-30, self.prec);
        let mut count = 0;
        let mut d = self.diag[0].clone() - x;
        if d < 0.0 {
            count += 1;
        }
        for k in 1..self.dim() {
            if d.is_zero() {
                d = tiny.clone();
            }
            let mut next = self.diag[k].clone() - x;
            next -= self.off_sq[k - 1].clone() / &d;
            d = next;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Bisection for the eigenvalue with `count` eigenvalues below it (0-based).
    fn bisect_index(&self, index: usize) -> R {
        let (mut lo, mut hi) = self.gershgorin();
        let eps = R::epsilon(self.prec);
        for _ in 0..(R::mantissa_bits(self.prec) as usize + 80) {
            let mid = (lo.clone() + &hi) * 0.5;
            if self.count_below(&mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            let width = (hi.clone() - &lo).abs();
            let scale = hi.clone().abs().max_of(lo.clone().abs()).max_of(R::one(self.prec));
            if width <= scale * (2.0 * eps) {
                break;
            }
        }
        (lo + hi) * 0.5
    }

    pub fn largest_eigenvalue(&self) -> R {
        self.bisect_index(self.dim() - 1)
    }

    pub fn smallest_eigenvalue(&self) -> R {
        self.bisect_index(0)
    }

    /// Eigenvalues and squared first eigenvector components (Golub-Welsch),
    /// sorted by eigenvalue.
    pub fn gauss_rule(&self) -> Result<(Vec<R>, Vec<R>)> {
        let n = self.dim();
        let prec = self.prec;
        let mut d = self.diag.clone();
        let mut e: Vec<R> = self.off_sq.iter().map(|b| b.clone().sqrt()).collect();
        e.push(R::zero(prec));
        let mut z = vec![R::zero(prec); n];
        z[0] = R::one(prec);
        let eps = R::epsilon(prec);
        let max_iter = 30 + R::mantissa_bits(prec) as usize / 2;

        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].clone().abs() + d[m + 1].clone().abs();
                    if e[m].clone().abs() <= dd * eps {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                if iter == max_iter {
                    return Err(Error::EigenFailure(format!(
                        "no convergence for eigenvalue {l} after {max_iter} iterations"
                    )));
                }
                iter += 1;
                let mut g = (d[l + 1].clone() - &d[l]) / (e[l].clone() * 2.0);
                let mut r = (g.clone() * &g + 1.0).sqrt();
                let signed_r = if g >= 0.0 { r.clone() } else { -r.clone() };
                g = d[m].clone() - &d[l] + e[l].clone() / (g + signed_r);
                let mut s = R::one(prec);
                let mut c = R::one(prec);
                let mut p = R::zero(prec);
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s.clone() * &e[i];
                    let b = c.clone() * &e[i];
                    if f.clone().abs() >= g.clone().abs() {
                        c = g.clone() / &f;
                        r = (c.clone() * &c + 1.0).sqrt();
                        e[i + 1] = f * &r;
                        s = R::one(prec) / &r;
                        c *= &s;
                    } else {
                        s = f / &g;
                        r = (s.clone() * &s + 1.0).sqrt();
                        e[i + 1] = g.clone() * &r;
                        c = R::one(prec) / &r;
                        s *= &c;
                    }
                    g = d[i + 1].clone() - &p;
                    r = (d[i].clone() - &g) * &s + c.clone() * &b * 2.0;
                    p = s.clone() * &r;
                    d[i + 1] = g + &p;
                    g = c.clone() * &r - &b;
                    let f = z[i + 1].clone();
                    z[i + 1] = s.clone() * &z[i] + c.clone() * &f;
                    z[i] = c.clone() * &z[i] - s.clone() * &f;
                }
                d[l] -= &p;
                e[l] = g;
                e[m] = R::zero(prec);
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
        let nodes = idx.iter().map(|&k| d[k].clone()).collect();
        let weights = idx.iter().map(|&k| z[k].clone() * &z[k]).collect();
        Ok((nodes, weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chebyshev_u(n: usize) -> Jacobi<f64> {
        Jacobi::new(vec![0.0; n], vec![0.25; n - 1], Precision::double()).unwrap()
    }

    #[test]
    fn extreme_eigenvalues_of_free_jacobi_matrix() {
        let j = chebyshev_u(50);
        let expected = (std::f64::consts::PI / 51.0).cos();
        assert!((j.largest_eigenvalue() - expected).abs() < 1e-14);
        assert!((j.smallest_eigenvalue() + expected).abs() < 1e-14);
    }

    #[test]
    fn gauss_rule_matches_chebyshev_nodes() {
        let n = 20;
        let (x, w) = chebyshev_u(n).gauss_rule().unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        for k in 0..n {
            let theta = std::f64::consts::PI * (n - k) as f64 / (n + 1) as f64;
            assert!((x[k] - theta.cos()).abs() < 1e-14);
            let wk = 2.0 / (n + 1) as f64 * theta.sin().powi(2);
            assert!((w[k] - wk).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_arcsine_rule() {
        let j = Jacobi::new(vec![0.0, 0.0], vec![0.5], Precision::double()).unwrap();
        let (x, w) = j.gauss_rule().unwrap();
        assert!((x[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((x[0] + 0.5f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn multiprecision_rule() {
        let prec = Precision::digits(40);
        let f = |v: f64| rug::Float::with_val(prec.bits(), v);
        let j = Jacobi::new(vec![f(0.0); 30], vec![f(0.25); 29], prec).unwrap();
        let (x, w) = j.gauss_rule().unwrap();
        let mut total = f(0.0);
        for wk in &w {
            total += wk;
        }
        assert!((total - 1.0f64).abs() < 1e-38);
        let top = rug::Float::with_val(prec.bits(), rug::Float::with_val(prec.bits(), rug::float::Constant::Pi) / 31).cos();
        assert!((x[29].clone() - top).abs() < 1e-38);
    }
}
