//! Closed-form and hand-derived values for the reference chains and weights.

use rug::Float;
use rwlab::chain::{self, ChainSpec};
use rwlab::divergence::Verdict;
use rwlab::families::{self as fam};
use rwlab::harness::{self, BlumenthalOutcome, EdgeExponents};
use rwlab::limits::{estimate_limit, LimitValue};
use rwlab::measure::{self, compute_Cn, moment, quadrature_from_chain};
use rwlab::montecarlo::monte_carlo_transition;
use rwlab::normalization::{normalize, tilde_polynomials};
use rwlab::polynomials::{self as poly, AbsorptionRoute};
use rwlab::recover::{chain_from_recurrence, stieltjes_recurrence, RecurrenceCoefficients};
use rwlab::weight::discretize_weight;
use rwlab::{Error, Precision, Real};

fn prec() -> Precision {
    Precision::default()
}

fn fl(x: f64) -> Float {
    Float::from_f64(x, prec())
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
}

fn q(chain: &ChainSpec, n: usize, x: f64) -> Vec<f64> {
    poly::eval_q::<Float>(chain, n, &fl(x), prec())
        .unwrap()
        .values
        .iter()
        .map(|v| v.value())
        .collect()
}

#[test]
fn potential_of_arcsine_and_shifted_arcsine() {
    let a: Vec<f64> = chain::potential_coefficients::<Float>(&fam::arcsine(), 3, prec())
        .unwrap()
        .iter()
        .map(|p| p.value)
        .collect();
    assert_eq!(a, vec![1.0, 2.0, 2.0, 2.0]);
    let b: Vec<f64> = chain::potential_coefficients::<Float>(&fam::shifted_arcsine(), 2, prec())
        .unwrap()
        .iter()
        .map(|p| p.value)
        .collect();
    assert_eq!(b, vec![1.0, 2.0, 2.0]);
}

#[test]
fn series_l_verdicts() {
    let a = chain::series_l::<Float>(&fam::arcsine(), 5, prec()).unwrap();
    assert_eq!(a.partial_sums, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(a.verdict, Verdict::Diverges);
    let b = chain::series_l::<Float>(&fam::shifted_arcsine(), 2000, prec()).unwrap();
    assert_eq!(b.verdict, Verdict::Diverges);
    let t = chain::series_l::<Float>(&fam::transient(), 2000, prec()).unwrap();
    assert_eq!(t.verdict, Verdict::Converges);
}

#[test]
fn aperiodicity_sum_verdicts() {
    let a = chain::asymptotic_aperiodicity_sum::<Float>(&fam::arcsine(), 2000, prec()).unwrap();
    assert!(a.partial_sums.iter().all(|&s| s == 0.0));
    assert_eq!(a.verdict, Verdict::Converges);
    let b = chain::asymptotic_aperiodicity_sum::<Float>(&fam::shifted_arcsine(), 2000, prec()).unwrap();
    assert_eq!(b.verdict, Verdict::Diverges);
    // r_j = 4^-j: the inner sum tends to a positive constant while
    // 1/(p_j pi_j) stays bounded below, so the outer sum grows linearly.
    let g = chain::asymptotic_aperiodicity_sum::<Float>(&fam::geometric_holding(), 2000, prec()).unwrap();
    assert_eq!(g.verdict, Verdict::Diverges);
}

#[test]
fn holding_over_up_sum_verdicts() {
    assert_eq!(
        chain::rj_over_pj_sum::<Float>(&fam::shifted_arcsine(), 2000, prec()).unwrap().verdict,
        Verdict::Diverges
    );
    let a = chain::rj_over_pj_sum::<Float>(&fam::arcsine(), 2000, prec()).unwrap();
    assert_eq!(a.verdict, Verdict::Converges);
    assert_eq!(*a.partial_sums.last().unwrap(), 0.0);
    assert_eq!(
        chain::rj_over_pj_sum::<Float>(&fam::inverse_square_holding(), 2000, prec()).unwrap().verdict,
        Verdict::Converges
    );
}

#[test]
fn periodicity() {
    assert!(fam::arcsine().is_periodic().unwrap());
    assert!(!fam::shifted_arcsine().is_periodic().unwrap());
    let c = ChainSpec::from_prefix::<f64>("r01", &[1.0, 0.45], &[0.0, 0.45], &[0.0, 0.1], &[]).unwrap();
    assert!(!c.is_periodic().unwrap());
}

#[test]
fn killing_sum_verdicts() {
    let a = chain::killing_sum::<Float>(&fam::arcsine(), 1000, prec()).unwrap();
    assert_eq!(a.verdict, Verdict::Converges);
    let kc = chain::killing_sum::<Float>(&fam::constant_killing(), 2000, prec()).unwrap();
    assert_eq!(kc.verdict, Verdict::Diverges);
    let tk = chain::killing_sum::<Float>(&fam::killed_transient(), 2000, prec()).unwrap();
    assert_eq!(tk.verdict, Verdict::Converges);
}

#[test]
fn polynomial_values() {
    close(q(&fam::arcsine(), 3, 0.5)[3], -1.0, 1e-25);
    for chain in [fam::arcsine(), fam::shifted_arcsine(), fam::asymmetric(), fam::semicircle()] {
        assert!(q(&chain, 30, 1.0).iter().all(|v| (v - 1.0).abs() < 1e-25));
    }
    close(q(&fam::shifted_arcsine(), 2, -1.0)[2], 17.0, 1e-25);
}

#[test]
fn leading_coefficients() {
    let g = |c: &ChainSpec, n| poly::leading_coefficient::<Float>(c, n, prec()).unwrap().value();
    close(g(&fam::arcsine(), 2), 2.0 * 2f64.sqrt(), 1e-14);
    close(g(&fam::arcsine(), 1), 2f64.sqrt(), 1e-14);
    close(g(&fam::semicircle(), 1), 2.0, 1e-14);
}

#[test]
fn christoffel_values() {
    let rho = |c: &ChainSpec, n, x: f64| poly::christoffel::<Float>(c, n, &fl(x), prec()).unwrap().to_f64();
    close(rho(&fam::arcsine(), 3, 1.0), 0.2, 1e-16);
    close(rho(&fam::asymmetric(), 1, 0.3), 1.0, 1e-16);
    for n in [1usize, 5, 40] {
        let nf = n as f64;
        close(rho(&fam::semicircle(), n, 1.0), 6.0 / (nf * (nf + 1.0) * (2.0 * nf + 1.0)), 1e-16);
    }
}

#[test]
fn christoffel_ratios() {
    let r = |c: &ChainSpec| poly::christoffel_ratio_sequence::<Float>(c, 40, &fl(1.0), prec()).unwrap().rho_ratio;
    assert!(r(&fam::arcsine()).iter().all(|v| (v - 1.0).abs() < 1e-25));
    assert!(r(&fam::semicircle()).iter().all(|v| (v - 1.0).abs() < 1e-25));
    let b = r(&fam::shifted_arcsine());
    assert!(b[39] < b[9]);
}

#[test]
fn cd_residuals() {
    let res = |c: &ChainSpec, n, x: f64, y: f64| poly::cd_identity_residual::<Float>(c, n, &fl(x), &fl(y), prec()).unwrap();
    assert!(res(&fam::arcsine(), 10, 0.3, 0.7) <= 1e-12);
    assert!(res(&fam::shifted_arcsine(), 25, -0.9, 0.9) <= 1e-10);
    assert!(res(&fam::semicircle(), 5, 0.0, 1.0) <= 1e-13);
}

#[test]
fn support_edges_at_moderate_truncation() {
    let e = poly::support_edges::<Float>(&fam::arcsine(), 400, 1e-3, prec()).unwrap();
    close(e.eta_hat, 1.0, 1e-4);
    close(e.zeta_hat, -1.0, 1e-4);
    let b = poly::support_edges::<Float>(&fam::shifted_arcsine(), 400, 1e-3, prec()).unwrap();
    close(b.eta_hat, 1.0, 1e-4);
    close(b.zeta_hat, 0.0, 1e-4);
}

#[test]
fn q_at_one() {
    let ones = poly::q_at_one_growth::<Float>(&fam::semicircle(), 50, prec()).unwrap();
    assert!(ones.iter().all(|v| (v.to_f64() - 1.0).abs() < 1e-25));
    let k = poly::q_at_one_growth::<Float>(&fam::killed_shifted_arcsine(), 3, prec()).unwrap();
    close(k[1].to_f64(), 1.5, 1e-25);
    let kc: Vec<f64> = poly::q_at_one_growth::<Float>(&fam::constant_killing(), 200, prec())
        .unwrap()
        .iter()
        .map(|v| v.to_f64())
        .collect();
    assert!(kc.windows(2).all(|w| w[1] > w[0]));
    assert!(kc[200] > 1e10);
}

#[test]
fn absorption() {
    let a = poly::absorption_probabilities::<Float>(&fam::arcsine(), 5, 100, prec()).unwrap();
    assert_eq!(a.route, AbsorptionRoute::NoKilling);
    assert!(a.tau.iter().all(|&t| t == 0.0));
    let kc = poly::absorption_probabilities::<Float>(&fam::constant_killing(), 5, 2000, prec()).unwrap();
    assert_eq!(kc.route, AbsorptionRoute::Divergence);
    assert!(kc.tau.iter().all(|&t| t == 1.0));
}

#[test]
fn small_quadratures() {
    let a = quadrature_from_chain::<Float>(&fam::arcsine(), 2, prec()).unwrap();
    let mut nodes: Vec<f64> = a.nodes.iter().map(|x| x.to_f64()).collect();
    nodes.sort_by(f64::total_cmp);
    close(nodes[0], -0.5f64.sqrt(), 1e-15);
    close(nodes[1], 0.5f64.sqrt(), 1e-15);
    assert!(a.weights.iter().all(|w| (w.to_f64() - 0.5).abs() < 1e-25));
    let b = quadrature_from_chain::<Float>(&fam::shifted_arcsine(), 100, prec()).unwrap();
    assert!(b.nodes.iter().all(|x| x.to_f64() >= -1e-8 && x.to_f64() <= 1.0 + 1e-8));
    close(b.weights.iter().map(|w| w.to_f64()).sum(), 1.0, 1e-14);
}

#[test]
fn moments() {
    let a = quadrature_from_chain::<Float>(&fam::arcsine(), 50, prec()).unwrap();
    close(moment(&a, 1).to_f64(), 0.0, 1e-25);
    close(moment(&a, 2).to_f64(), 0.5, 1e-25);
    let d = discretize_weight::<Float>(&fam::weight_d(), 2400, prec()).unwrap();
    close(moment(&d, 1).to_f64(), 0.25, 1e-12);
    let s = discretize_weight::<Float>(&fam::semicircle_weight(), 2400, prec()).unwrap();
    close(moment(&s, 2).to_f64(), 0.25, 1e-12);
}

#[test]
fn cn_on_reference_measures() {
    let a = quadrature_from_chain::<Float>(&fam::arcsine(), 100, prec()).unwrap();
    let b = quadrature_from_chain::<Float>(&fam::shifted_arcsine(), 100, prec()).unwrap();
    for n in [0usize, 1, 7, 50, 199] {
        close(compute_Cn(&a, n).unwrap().value, 1.0, 1e-10);
        assert_eq!(compute_Cn(&b, n).unwrap().value, 0.0);
    }
}

#[test]
fn l_functional() {
    let a = quadrature_from_chain::<Float>(&fam::arcsine(), 50, prec()).unwrap();
    let one = [(fl(1.0), 0usize, 0usize)];
    close(measure::l_functional(&a, &fam::arcsine(), &one, 4).unwrap().to_f64(), 1.0, 1e-25);
    assert!(measure::l_functional(&a, &fam::arcsine(), &one, 3).is_err());
    let b = quadrature_from_chain::<Float>(&fam::shifted_arcsine(), 400, prec()).unwrap();
    let q01 = [(fl(1.0), 0usize, 1usize)];
    let v = measure::l_functional(&b, &fam::shifted_arcsine(), &q01, 500).unwrap().to_f64();
    close(v, 1.0, 0.05);
}

#[test]
fn transitions() {
    let b = measure::transition_probability::<Float>(&fam::shifted_arcsine(), 0, 0, 1, 10, prec()).unwrap();
    close(b.value_spectral, 0.5, 1e-25);
    let a = measure::transition_probability::<Float>(&fam::arcsine(), 0, 0, 2, 10, prec()).unwrap();
    close(a.value_spectral, 0.5, 1e-25);
    close(a.value_matrix, 0.5, 1e-25);
    let odd = measure::transition_probability::<Float>(&fam::arcsine(), 0, 1, 2, 10, prec()).unwrap();
    assert!(odd.value_spectral.abs() < 1e-25);
    assert_eq!(odd.value_matrix, 0.0);
}

#[test]
fn monte_carlo_is_seeded() {
    let a = monte_carlo_transition(&fam::shifted_arcsine(), 0, 0, 1, 200_000, 11).unwrap();
    assert!((a.estimate - 0.5).abs() <= 4.0 * a.std_error);
    let b = monte_carlo_transition(&fam::shifted_arcsine(), 0, 0, 1, 200_000, 11).unwrap();
    assert_eq!(a, b);
    assert!(monte_carlo_transition(&fam::arcsine(), 0, 0, 2, 10, 1).is_err());
}

#[test]
fn srlp_predictions() {
    let b = fam::shifted_arcsine();
    let r = measure::srlp_predicted_limit::<Float>(&b, 0, 0, 0, 0, &fl(1.0), 10, prec()).unwrap();
    close(r.predicted, 1.0, 1e-25);
    let r = measure::srlp_predicted_limit::<Float>(&b, 0, 1, 0, 0, &fl(1.0), 200, prec()).unwrap();
    close(r.predicted, 2.0, 1e-25);
    let (_, last) = r.empirical.last().unwrap();
    close(last.unwrap(), 2.0, 0.02);
    let r = measure::srlp_predicted_limit::<Float>(&b, 1, 1, 0, 0, &fl(1.0), 10, prec()).unwrap();
    close(r.predicted, 2.0, 1e-25);
}

#[test]
fn stieltjes_coefficients() {
    let a = quadrature_from_chain::<Float>(&fam::arcsine(), 40, prec()).unwrap();
    let c = stieltjes_recurrence(&a, 10).unwrap();
    close(c.a[0].to_f64(), 0.5f64.sqrt(), 1e-12);
    assert!(c.a[1..].iter().all(|v| (v.to_f64() - 0.5).abs() < 1e-12));
    assert!(c.b.iter().all(|v| v.to_f64().abs() < 1e-12));

    let s = discretize_weight::<Float>(&fam::semicircle_weight(), 2400, prec()).unwrap();
    let c = stieltjes_recurrence(&s, 10).unwrap();
    assert!(c.a.iter().all(|v| (v.to_f64() - 0.5).abs() < 1e-12));
    assert!(c.b.iter().all(|v| v.to_f64().abs() < 1e-12));

    let d = discretize_weight::<Float>(&fam::weight_d(), 2400, prec()).unwrap();
    close(stieltjes_recurrence(&d, 2).unwrap().b[0].to_f64(), 0.25, 1e-12);
}

#[test]
fn chains_from_coefficients() {
    let a = quadrature_from_chain::<Float>(&fam::arcsine(), 40, prec()).unwrap();
    let chain = chain_from_recurrence(&stieltjes_recurrence(&a, 10).unwrap(), "A")
        .unwrap()
        .into_result()
        .unwrap();
    let t = chain.table::<f64>(10, Precision::double()).unwrap();
    close(t.p[0], 1.0, 1e-12);
    for j in 1..10 {
        close(t.p[j], 0.5, 1e-12);
        close(t.q[j], 0.5, 1e-12);
    }

    let s = discretize_weight::<Float>(&fam::semicircle_weight(), 2400, prec()).unwrap();
    let chain = chain_from_recurrence(&stieltjes_recurrence(&s, 10).unwrap(), "S")
        .unwrap()
        .into_result()
        .unwrap();
    let t = chain.table::<f64>(10, Precision::double()).unwrap();
    for k in 0..10 {
        close(t.p[k], (k as f64 + 2.0) / (2.0 * (k as f64 + 1.0)), 1e-10);
    }

    let bad = RecurrenceCoefficients {
        a: vec![fl(0.4), fl(0.4)],
        b: vec![fl(-0.2), fl(0.0)],
        prec: prec(),
    };
    match chain_from_recurrence(&bad, "bad").unwrap().into_result() {
        Err(Error::NotARandomWalkMeasure { index, reason }) => {
            assert_eq!(index, 0);
            assert!(reason.contains("r_0 < 0"), "{reason}");
        }
        other => panic!("expected a failure at index 0, got {other:?}"),
    }
}

#[test]
fn normalization() {
    for c in [fam::shifted_arcsine(), fam::arcsine()] {
        let n = normalize::<Float>(&c, &fl(1.0), 20, prec()).unwrap();
        let t = c.table::<f64>(21, Precision::double()).unwrap();
        for j in 0..=20 {
            close(n.p[j], t.p[j], 1e-15);
            close(n.q[j], t.q[j], 1e-15);
            close(n.r[j], t.r[j], 1e-15);
        }
    }
    let eta = Float::from_f64(0.21, prec()).sqrt() * 2.0;
    let n = normalize::<Float>(&fam::asymmetric(), &eta, 30, prec()).unwrap();
    for j in 1..30 {
        close(n.p[j] * n.q[j + 1], 0.25, 1e-12);
    }
}

#[test]
fn tilde_polynomials_agree() {
    let eta = Float::from_f64(0.21, prec()).sqrt() * 2.0;
    let one = tilde_polynomials::<Float>(&fam::asymmetric(), &eta, 30, &fl(1.0), prec()).unwrap();
    assert!(one.trace.values.iter().all(|v| (v.value() - 1.0).abs() < 1e-20));
    let minus = tilde_polynomials::<Float>(&fam::asymmetric(), &eta, 30, &fl(-1.0), prec()).unwrap();
    assert!(minus.discrepancy <= 1e-10);
    let a = tilde_polynomials::<Float>(&fam::arcsine(), &fl(1.0), 30, &fl(-1.0), prec()).unwrap();
    for (n, v) in a.trace.values.iter().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        close(sign * v.value(), 1.0, 1e-20);
    }
}

#[test]
fn limit_estimates() {
    let c = estimate_limit(&[1.0; 40]).unwrap();
    assert_eq!(c.value, LimitValue::Finite(1.0));
    assert_eq!(c.uncertainty, 0.0);
    let s: Vec<f64> = (0..60).map(|n| 1.0 / 3.0 + 0.5f64.powi(n)).collect();
    close(estimate_limit(&s).unwrap().finite().unwrap(), 1.0 / 3.0, 1e-6);
    let o: Vec<f64> = (0..60).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
    assert_eq!(estimate_limit(&o).unwrap().value, LimitValue::Oscillating);
}

#[test]
fn edge_predictions() {
    let d = EdgeExponents::from_weight(&fam::weight_d(), 2400).unwrap();
    assert_eq!(harness::prediction_cw(&d).unwrap().value, 0.0);
    assert_eq!(harness::prediction_rhow(&d).unwrap().value, 0.0);
    let e = EdgeExponents::from_weight(&fam::weight_e(), 2400).unwrap();
    close(harness::prediction_cw(&e).unwrap().value, 1.0 / 3.0, 1e-10);
    close(harness::prediction_rhow(&e).unwrap().value, 1.0 / 3.0, 1e-10);
    let s = EdgeExponents::from_weight(&fam::semicircle_weight(), 2400).unwrap();
    close(harness::prediction_rhow(&s).unwrap().value, 1.0, 1e-10);
    assert!(EdgeExponents::new(-0.5, 0.5, 1.0, 1.0).is_err());
}

#[test]
fn ratio_criterion() {
    let b = harness::lemma_rho0_criterion::<Float>(&fam::shifted_arcsine(), &fl(1.0), 5000, prec()).unwrap();
    assert_eq!(b.main.verdict, Verdict::Diverges);
    let a = harness::lemma_rho0_criterion::<Float>(&fam::arcsine(), &fl(1.0), 5000, prec()).unwrap();
    assert_eq!(a.main.verdict, Verdict::Converges);
    assert!(a.main.partial_sums.iter().all(|&s| s == 0.0));
}

#[test]
fn blumenthal() {
    match harness::blumenthal_edges(&fam::asymmetric(), 5000, prec()).unwrap() {
        BlumenthalOutcome::Predicted(e) => {
            close(e.eta, 2.0 * 0.21f64.sqrt(), 1e-14);
            close(e.zeta, -2.0 * 0.21f64.sqrt(), 1e-14);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        harness::blumenthal_edges(&fam::shifted_arcsine(), 5000, prec()).unwrap(),
        BlumenthalOutcome::NotApplicable { .. }
    ));
    match harness::blumenthal_edges(&fam::semicircle(), 5000, prec()).unwrap() {
        BlumenthalOutcome::Predicted(e) => close(e.eta, 1.0, 1e-14),
        other => panic!("{other:?}"),
    }
}

#[test]
fn regularity() {
    for c in [fam::arcsine(), fam::semicircle()] {
        let r = harness::regularity_check::<Float>(&c, 1.0, 2000, prec()).unwrap();
        close(r.limit.finite().unwrap(), 2.0, 1e-2);
    }
    let c = harness::regularity_check::<Float>(&fam::asymmetric(), 2.0 * 0.21f64.sqrt(), 2000, prec()).unwrap();
    assert!(c.distance_to_two_eta.is_finite() && c.distance_to_two_over_eta.is_finite());
}

#[test]
fn danka_totik_constants() {
    let printed = harness::danka_totik_constant(1.0, 0.5, 2.0 / std::f64::consts::PI);
    close(printed, 0.2652, 1e-4);
    close(harness::semicircle_calibration(), 3.0 / printed, 1e-12);
}
