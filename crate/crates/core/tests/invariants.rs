//! Invariants on the reference families that need long chains or weights.

use rug::{Float, Rational};
use rwlab::chain::{ChainSpec, TailRule};
use rwlab::expr::Expr;
use rwlab::families as fam;
use rwlab::harness::{self, EdgeExponents};
use rwlab::limits::estimate_limit;
use rwlab::measure::{cn_series, quadrature_from_chain};
use rwlab::normalization::normalize;
use rwlab::polynomials::{christoffel_ratio_sequence, eval_q, support_edges};
use rwlab::recover::{chain_from_recurrence, stieltjes_recurrence};
use rwlab::weight::{discretize_weight, WeightSpec};
use rwlab::{Precision, Real};

fn prec() -> Precision {
    Precision::default()
}

fn fl(x: f64) -> Float {
    Float::from_f64(x, prec())
}

/// Tail `p = 3/5`, `q = 3/10`, `r = 1/10`: aperiodic with `eta = 1/10 + 2 sqrt(0.18) < 1`.
fn lazy_drift() -> ChainSpec {
    let tail = TailRule::parse("3/5", "3/10", Some("1/10"), None).unwrap();
    ChainSpec::new(
        "lazy-drift",
        vec![Rational::from((9, 10))],
        vec![Rational::from(0)],
        vec![Rational::from((1, 10))],
        vec![],
        Some(tail),
    )
    .unwrap()
}

fn lazy_drift_eta() -> Float {
    fl(0.18).sqrt() * 2.0 + fl(0.1)
}

#[test]
fn family_rows_sum_to_one() {
    let mut chains = fam::all_chains();
    chains.push(lazy_drift());
    for c in chains {
        let t = c.table::<f64>(100_001, Precision::double()).unwrap();
        for j in 0..=100_000 {
            let s = t.p[j] + t.q[j] + t.r[j] + t.kappa[j];
            assert!((s - 1.0).abs() <= 1e-14, "{} state {j}: {s}", c.label);
        }
    }
}

#[test]
fn periodic_families_are_symmetric() {
    for c in [fam::arcsine(), fam::semicircle(), fam::asymmetric(), fam::transient()] {
        for k in 1..=9 {
            let x = k as f64 / 10.0;
            let plus = eval_q::<Float>(&c, 100, &fl(x), prec()).unwrap();
            let minus = eval_q::<Float>(&c, 100, &fl(-x), prec()).unwrap();
            for (n, (a, b)) in plus.values.iter().zip(&minus.values).enumerate() {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let (a, b) = (a.value(), sign * b.value());
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} n={n} x={x}", c.label);
            }
        }
    }
}

#[test]
fn polynomials_decrease_above_the_edge() {
    let eta = 2.0 * 0.21f64.sqrt();
    for x in [eta + 1e-6, 0.93, 0.97, 0.999] {
        let v = eval_q::<Float>(&fam::asymmetric(), 200, &fl(x), prec()).unwrap();
        let vals: Vec<f64> = v.values.iter().map(|s| s.value()).collect();
        assert!(vals[0] <= 1.0);
        for n in 0..200 {
            assert!(vals[n + 1] <= vals[n] && vals[n + 1] > 0.0, "x={x} n={n}");
        }
    }
}

#[test]
fn q_ratio_decreases_for_aperiodic_families() {
    for c in [fam::shifted_arcsine(), fam::geometric_holding(), fam::inverse_square_holding()] {
        let s = christoffel_ratio_sequence::<Float>(&c, 400, &fl(1.0), prec()).unwrap();
        assert!(s.q_ratio.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{}", c.label);
        assert!(*s.q_ratio.last().unwrap() < 1.0, "{}", c.label);
    }
}

#[test]
fn christoffel_and_q_ratio_limits_agree() {
    for c in [fam::shifted_arcsine(), fam::geometric_holding()] {
        let s = christoffel_ratio_sequence::<Float>(&c, 2000, &fl(1.0), prec()).unwrap();
        let a = estimate_limit(&s.rho_ratio).unwrap();
        let b = estimate_limit(&s.q_ratio).unwrap();
        let (x, y) = (a.finite().unwrap(), b.finite().unwrap());
        assert!((x - y).abs() <= a.uncertainty + b.uncertainty + 1e-12, "{}: {x} vs {y}", c.label);
    }
}

#[test]
fn symmetric_weight_recovers_periodic_chain() {
    let m = discretize_weight::<Float>(&fam::semicircle_weight(), 2400, prec()).unwrap();
    let coeffs = stieltjes_recurrence(&m, 30).unwrap();
    assert!(coeffs.b.iter().all(|b| b.to_f64().abs() <= 1e-12));
    let chain = chain_from_recurrence(&coeffs, "S").unwrap().into_result().unwrap();
    assert!(chain.is_periodic().unwrap());
}

#[test]
fn weight_d_recovers_through_index_200() {
    let (chain, _) = harness::weight_pipeline::<Float>(&fam::weight_d(), 201, 2400, prec()).unwrap();
    let t = chain.table::<f64>(201, Precision::double()).unwrap();
    assert!(t.r.iter().all(|&r| r > 0.0));
}

/// `r_k` of weight E decays like `(2 - sqrt 3)^(2k)`, so `r_200` is near
/// `1e-230` and needs a few hundred digits to resolve.
#[test]
fn weight_e_recovers_through_index_200() {
    let p = Precision::digits(300);
    let (chain, _) = harness::weight_pipeline::<Float>(&fam::weight_e(), 201, 38_400, p).unwrap();
    let t = chain.table::<Float>(201, p).unwrap();
    assert!(t.r.iter().all(|r| *r > 0.0));
    let rate = (2.0 - 3f64.sqrt()).powi(2);
    for k in [100usize, 150, 199] {
        let ratio = (t.r[k + 1].clone() / &t.r[k]).to_f64();
        assert!((ratio - rate).abs() <= 1e-3, "r_{}/r_{k} = {ratio}", k + 1);
    }
}

#[test]
fn smooth_factor_scale_is_irrelevant() {
    let scaled = |w: &WeightSpec, factor: &str| {
        WeightSpec::new(
            format!("{} scaled", w.label),
            w.eta.clone(),
            w.alpha.clone(),
            w.beta.clone(),
            Expr::parse(&format!("{factor} * ({})", w.smooth.to_source('x')), 'x').unwrap(),
            vec![],
        )
        .unwrap()
    };
    for w in [fam::weight_d(), fam::weight_e()] {
        let rec = |w: &WeightSpec| {
            let m = discretize_weight::<Float>(w, 2400, prec()).unwrap();
            stieltjes_recurrence(&m, 30).unwrap()
        };
        let a = rec(&w);
        let b = rec(&scaled(&w, "7/3"));
        for k in 0..30 {
            assert!((a.a[k].to_f64() - b.a[k].to_f64()).abs() <= 1e-12);
            assert!((a.b[k].to_f64() - b.b[k].to_f64()).abs() <= 1e-12);
        }
    }
}

#[test]
fn normalization_transports_the_measure() {
    for (c, eta) in [(lazy_drift(), lazy_drift_eta()), (fam::asymmetric(), fl(0.21).sqrt() * 2.0)] {
        let n_quad = 40;
        let tilde = normalize::<Float>(&c, &eta, 60, prec()).unwrap();
        let base = quadrature_from_chain::<Float>(&c, n_quad, prec()).unwrap();
        let moved = quadrature_from_chain::<Float>(&tilde.chain, n_quad, prec()).unwrap();
        let e = eta.to_f64();
        for k in 0..n_quad {
            let want = base.nodes[k].to_f64() / e;
            assert!((moved.nodes[k].to_f64() - want).abs() <= 1e-8, "{} node {k}", c.label);
            assert!((moved.weights[k].to_f64() - base.weights[k].to_f64()).abs() <= 1e-8);
        }
        let cn_base = cn_series(&base, 2 * n_quad - 1).unwrap();
        let cn_moved = cn_series(&moved, 2 * n_quad - 1).unwrap();
        for (a, b) in cn_base.iter().zip(&cn_moved) {
            assert!((a.value - b.value).abs() <= 1e-8, "{} C_{}", c.label, a.n);
        }
    }
}

#[test]
fn normalization_keeps_the_christoffel_ratio() {
    let c = lazy_drift();
    let eta = lazy_drift_eta();
    let tilde = normalize::<Float>(&c, &eta, 1001, prec()).unwrap();
    let base = christoffel_ratio_sequence::<Float>(&c, 1000, &eta, prec()).unwrap();
    let moved = christoffel_ratio_sequence::<Float>(&tilde.chain, 1000, &fl(1.0), prec()).unwrap();
    let a = estimate_limit(&base.rho_ratio).unwrap();
    let b = estimate_limit(&moved.rho_ratio).unwrap();
    let (x, y) = (a.finite().unwrap(), b.finite().unwrap());
    assert!((x - y).abs() <= a.uncertainty + b.uncertainty + 1e-12, "{x} vs {y}");
}

#[test]
fn normalized_chain_has_top_edge_one() {
    let eta = fl(0.21).sqrt() * 2.0;
    let tilde = normalize::<Float>(&fam::asymmetric(), &eta, 2001, prec()).unwrap();
    let e = support_edges::<Float>(&tilde.chain, 2000, 1e-4, prec()).unwrap();
    assert!((e.eta_hat - 1.0).abs() <= 1e-6, "{}", e.eta_hat);
}

#[test]
fn unequal_exponents_need_alpha_at_most_beta() {
    let e = EdgeExponents::new(1.5, 0.5, 1.0, 1.0).unwrap();
    assert!(harness::prediction_cw(&e).is_err());
    assert!(harness::prediction_rhow(&e).is_err());
    let ok = EdgeExponents::new(0.5, 1.5, 1.0, 1.0).unwrap();
    assert_eq!(harness::prediction_cw(&ok).unwrap().value, 0.0);
}
