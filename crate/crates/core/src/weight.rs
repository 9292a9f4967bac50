//! Analytic weights `(eta - x)^alpha (eta + x)^beta s(x)` on `[-eta, eta]`
//! and their discretization.

use rug::Rational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::gauss::gauss_legendre;
use crate::measure::{moment, DiscreteMeasure, MeasureSource};
use crate::real::{CompensatedSum, Precision, Real};

/// Gauss-Legendre order used on every panel.
pub const PANEL_ORDER: usize = 60;
/// Number of geometrically shrinking panels at each end of the interval.
pub const GRADED_PANELS: usize = 8;

#[derive(Debug, Clone)]
pub struct WeightSpec {
    pub label: String,
    pub eta: Rational,
    /// Exponent at `+eta`.
    pub alpha: Rational,
    /// Exponent at `-eta`.
    pub beta: Rational,
    /// Smooth factor, variable `x`.
    pub smooth: Expr,
    /// `(location, mass)` pairs; masses are absolute.
    pub atoms: Vec<(Rational, Rational)>,
}

impl WeightSpec {
    pub fn new(
        label: impl Into<String>,
        eta: Rational,
        alpha: Rational,
        beta: Rational,
        smooth: Expr,
        atoms: Vec<(Rational, Rational)>,
    ) -> Result<WeightSpec> {
        let label = label.into();
        let context = format!("weight {label}");
        let bad = |msg: String| Error::Parse {
            context: context.clone(),
            msg,
        };
        if eta <= 0 || eta > 1 {
            return Err(bad(format!("eta must lie in (0, 1], got {eta}")));
        }
        if alpha < 0 || beta < 0 {
            return Err(bad(format!("exponents must be nonnegative, got alpha = {alpha}, beta = {beta}")));
        }
        let mut atom_mass = Rational::new();
        for (loc, mass) in &atoms {
            if *mass <= 0 {
                return Err(bad(format!("atom at {loc} has nonpositive mass {mass}")));
            }
            if *loc < -1 || *loc > 1 {
                return Err(bad(format!("atom at {loc} lies outside [-1, 1]")));
            }
            atom_mass += mass;
        }
        if atom_mass >= 1 {
            return Err(bad(format!("atoms carry total mass {atom_mass} >= 1")));
        }
        let spec = WeightSpec {
            label,
            eta,
            alpha,
            beta,
            smooth,
            atoms,
        };
        let prec = Precision::double();
        let eta_f = spec.eta.to_f64();
        for k in 0..=64 {
            let x = eta_f * (-1.0 + 2.0 * k as f64 / 64.0);
            let v: f64 = spec.smooth.eval(&x, prec)?;
            let interior = k > 0 && k < 64;
            if !v.is_finite() || v < 0.0 || (interior && v == 0.0) {
                return Err(bad(format!("smooth factor is {v} at x = {x}")));
            }
        }
        if spec.smooth.eval(&eta_f, prec)? <= 0.0 {
            return Err(bad("smooth factor must be positive at eta".into()));
        }
        Ok(spec)
    }

    pub fn density_mass(&self) -> Rational {
        let mut m = Rational::from(1);
        for (_, mass) in &self.atoms {
            m -= mass;
        }
        m
    }

    /// Unnormalized density at `x` in `(-eta, eta)`.
    pub fn density<R: Real>(&self, x: &R, prec: Precision) -> Result<R> {
        let eta = R::from_rational(&self.eta, prec);
        let a = R::from_rational(&self.alpha, prec);
        let b = R::from_rational(&self.beta, prec);
        let s = self.smooth.eval(x, prec)?;
        Ok((eta.clone() - x).powf(&a) * (eta + x).powf(&b) * s)
    }

    /// `(w(-eta+), w(eta-))` for the normalized weight: the smooth factor at
    /// the two edges divided by the normalization constant.
    pub fn edge_values<R: Real>(&self, m: usize, prec: Precision) -> Result<(f64, f64)> {
        let z = self.normalization::<R>(m, prec)?;
        let eta = R::from_rational(&self.eta, prec);
        let top = self.smooth.eval(&eta, prec)? / &z;
        let bottom = self.smooth.eval(&(-eta), prec)? / &z;
        Ok((bottom.to_f64(), top.to_f64()))
    }

    /// `Z` such that density / `Z` carries the non-atomic mass.
    fn normalization<R: Real>(&self, m: usize, prec: Precision) -> Result<R> {
        let (_, w) = self.raw_grid::<R>(m, prec)?;
        let mut s = CompensatedSum::new(prec);
        for v in w {
            s.add(v);
        }
        Ok(s.value() / R::from_rational(&self.density_mass(), prec))
    }

    /// Unnormalized grid in `x` (descending) with density-times-Jacobian weights.
    fn raw_grid<R: Real>(&self, m: usize, prec: Precision) -> Result<(Vec<R>, Vec<R>)> {
        let uniform = uniform_panels(m);
        let pi = R::pi(prec);
        let h = pi.clone() / (uniform as f64);
        let mut edges: Vec<R> = Vec::new();
        // [0, h] split geometrically, then uniform panels, then the mirror at pi.
        edges.push(R::zero(prec));
        for k in (0..GRADED_PANELS).rev() {
            edges.push(h.clone() * 2f64.powi(-(k as i32)));
        }
        for k in 2..uniform {
            edges.push(h.clone() * (k as f64));
        }
        for k in 0..GRADED_PANELS {
            edges.push(pi.clone() - h.clone() * 2f64.powi(-(k as i32) - 1) * 2.0);
        }
        edges.pop();
        for k in 1..=GRADED_PANELS {
            edges.push(pi.clone() - h.clone() * 2f64.powi(-(k as i32)));
        }
        edges.push(pi.clone());

        let (gx, gw) = gauss_legendre::<R>(PANEL_ORDER, prec);
        let eta = R::from_rational(&self.eta, prec);
        let two_eta = eta.clone() * 2.0;
        let a = R::from_rational(&self.alpha, prec);
        let b = R::from_rational(&self.beta, prec);
        let mut xs = Vec::with_capacity(gx.len() * edges.len());
        let mut ws = Vec::with_capacity(gx.len() * edges.len());
        for pair in edges.windows(2) {
            let half = (pair[1].clone() - &pair[0]) * 0.5;
            let mid = (pair[1].clone() + &pair[0]) * 0.5;
            for (t, w) in gx.iter().zip(&gw) {
                let theta = mid.clone() + half.clone() * t;
                let s_half = (theta.clone() * 0.5).sin();
                let c_half = (theta.clone() * 0.5).cos();
                let x = eta.clone() * theta.clone().cos();
                // eta - x = 2 eta sin^2(theta/2), eta + x = 2 eta cos^2(theta/2)
                let left = (two_eta.clone() * &s_half * &s_half).powf(&a);
                let right = (two_eta.clone() * &c_half * &c_half).powf(&b);
                let jac = eta.clone() * theta.sin();
                let smooth = self.smooth.eval(&x, prec)?;
                xs.push(x);
                ws.push(left * right * smooth * jac * &half * w);
            }
        }
        Ok((xs, ws))
    }
}

fn uniform_panels(m: usize) -> usize {
    m.div_ceil(PANEL_ORDER).max(2)
}

/// Degree up to which a grid with `uniform` panels integrates the
/// polynomial part of the integrand to working precision.
fn resolved_degree(uniform: usize, prec: Precision) -> usize {
    // An order-60 panel of width h resolves e^{ik theta} while k h / 2 stays
    // below ~20 at 34 digits; fewer digits allow a little more.
    let per_panel = if prec.decimal_digits() <= 16 { 14.0 } else { 12.0 };
    (per_panel * uniform as f64) as usize
}

/// Composite quadrature for the weight in `theta` with `x = eta cos(theta)`.
/// `m` sets the number of uniform panels (`ceil(m / 60)`); graded panels
/// and atoms are added on top.
pub fn discretize_weight<R: Real>(spec: &WeightSpec, m: usize, prec: Precision) -> Result<DiscreteMeasure<R>> {
    if m < 64 {
        return Err(Error::InvalidInput(format!("grid size must be at least 64, got {m}")));
    }
    let (mut xs, mut ws) = spec.raw_grid::<R>(m, prec)?;
    let mut total = CompensatedSum::new(prec);
    for w in &ws {
        total.add(w.clone());
    }
    let scale = R::from_rational(&spec.density_mass(), prec) / total.value();
    for w in ws.iter_mut() {
        *w *= &scale;
    }
    xs.reverse();
    ws.reverse();
    let mut pairs: Vec<(R, R)> = xs.into_iter().zip(ws).filter(|(_, w)| !w.is_zero()).collect();
    for (loc, mass) in &spec.atoms {
        pairs.push((R::from_rational(loc, prec), R::from_rational(mass, prec)));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut merged: Vec<(R, R)> = Vec::with_capacity(pairs.len());
    for (x, w) in pairs {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += &w,
            _ => merged.push((x, w)),
        }
    }
    let (nodes, weights): (Vec<R>, Vec<R>) = merged.into_iter().unzip();
    let mut total = CompensatedSum::new(prec);
    for w in &weights {
        total.add(w.clone());
    }
    Ok(DiscreteMeasure {
        label: spec.label.clone(),
        nodes,
        weights,
        source: MeasureSource::FromWeightSpec { grid: m },
        total_mass: total.value(),
        resolved_degree: resolved_degree(uniform_panels(m), prec),
        prec,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub grid: usize,
    pub max_moment_change: f64,
    pub doublings: usize,
}

/// Doubles the grid from `m` until the first `moments` moments move by
/// less than `tol`, or `max_doublings` is reached.
pub fn refinement_oracle<R: Real>(
    spec: &WeightSpec,
    m: usize,
    moments: usize,
    tol: f64,
    max_doublings: usize,
    prec: Precision,
) -> Result<RefinementReport> {
    let compute = |m: usize| -> Result<Vec<R>> {
        let d = discretize_weight::<R>(spec, m, prec)?;
        Ok((0..moments).map(|k| moment(&d, k)).collect())
    };
    let mut grid = m;
    let mut prev = compute(grid)?;
    let mut change = f64::INFINITY;
    for doublings in 1..=max_doublings {
        grid *= 2;
        let next = compute(grid)?;
        change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a.clone() - b).abs().to_f64())
            .fold(0.0, f64::max);
        if change < tol {
            return Ok(RefinementReport {
                grid,
                max_moment_change: change,
                doublings,
            });
        }
        prev = next;
    }
    Ok(RefinementReport {
        grid,
        max_moment_change: change,
        doublings: max_doublings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use rug::Float;

    #[test]
    fn semicircle_second_moment() {
        let prec = Precision::default();
        let d = discretize_weight::<Float>(&families::semicircle_weight(), 120, prec).unwrap();
        assert!((moment(&d, 0) - 1.0f64).abs() < 1e-30);
        assert!(moment(&d, 1).abs() < 1e-30);
        assert!((moment(&d, 2) - 0.25f64).abs() < 1e-30);
        assert!((moment(&d, 4) - 0.125f64).abs() < 1e-30);
        assert!(d.nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn weight_d_mean() {
        let prec = Precision::default();
        let d = discretize_weight::<Float>(&families::weight_d(), 120, prec).unwrap();
        assert!((moment(&d, 1) - 0.25f64).abs() < 1e-30);
    }

    #[test]
    fn general_exponents_converge() {
        let spec = WeightSpec::new(
            "odd",
            Rational::from(1),
            Rational::from((1, 3)),
            Rational::from((7, 5)),
            Expr::parse("1 + x^2", 'x').unwrap(),
            vec![],
        )
        .unwrap();
        let r = refinement_oracle::<f64>(&spec, 120, 50, 1e-13, 4, Precision::double()).unwrap();
        assert!(r.max_moment_change < 1e-13, "{r:?}");
    }

    #[test]
    fn atoms_are_exact_nodes() {
        let spec = WeightSpec::new(
            "atom",
            Rational::from(1),
            Rational::from((1, 2)),
            Rational::from((1, 2)),
            Expr::num(1),
            vec![(Rational::from((1, 2)), Rational::from((1, 4)))],
        )
        .unwrap();
        let d = discretize_weight::<f64>(&spec, 120, Precision::double()).unwrap();
        assert!((d.total_mass - 1.0).abs() < 1e-14);
        assert!(d.nodes.iter().zip(&d.weights).any(|(x, w)| *x == 0.5 && *w >= 0.25));
    }

    #[test]
    fn rejects_bad_specs() {
        let mk = |a: i64, atoms: Vec<(Rational, Rational)>| {
            WeightSpec::new("bad", Rational::from(1), Rational::from(a), Rational::from(0), Expr::num(1), atoms)
        };
        assert!(mk(-1, vec![]).is_err());
        assert!(mk(0, vec![(Rational::from(0), Rational::from(1))]).is_err());
    }

    #[test]
    fn weight_e_edge_ratio() {
        let (lo, hi) = families::weight_e().edge_values::<f64>(120, Precision::double()).unwrap();
        assert!((lo / hi - 1.0 / 3.0).abs() < 1e-14);
    }
}
