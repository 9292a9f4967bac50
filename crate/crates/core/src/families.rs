//! Reference chains and weights with known closed forms.

use rug::Rational;

use crate::chain::{parse_rationals, ChainSpec, TailRule};
use crate::expr::Expr;
use crate::weight::WeightSpec;

fn q(v: &[&str]) -> Vec<Rational> {
    parse_rationals(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>()).expect("literal rationals")
}

fn build(label: &str, p: &[&str], qq: &[&str], r: &[&str], k: &[&str], tail: (&str, &str, &str, &str)) -> ChainSpec {
    let tail = TailRule::parse(tail.0, tail.1, Some(tail.2), Some(tail.3)).expect("literal tail");
    ChainSpec::new(label, q(p), q(qq), q(r), q(k), Some(tail)).expect("reference chain is well formed")
}

/// Chain A: `p_0 = 1`, `p_j = q_j = 1/2`. `Q_n` are the Chebyshev polynomials `T_n`.
pub fn arcsine() -> ChainSpec {
    build("A", &["1"], &["0"], &["0"], &[], ("1/2", "1/2", "0", "0"))
}

/// Chain B: `r_j = 1/2`, `p_0 = 1/2`, `p_j = q_j = 1/4`; `Q_n(x) = T_n(2x - 1)`.
pub fn shifted_arcsine() -> ChainSpec {
    build("B", &["1/2"], &["0"], &["1/2"], &[], ("1/4", "1/4", "1/2", "0"))
}

/// Chain C: `p_0 = 1`, `p_j = 0.7`, `q_j = 0.3`.
pub fn asymmetric() -> ChainSpec {
    build("C", &["1"], &["0"], &["0"], &[], ("7/10", "3/10", "0", "0"))
}

/// Chain S: `p_j = (j+2)/(2(j+1))`, `q_j = j/(2(j+1))`; measure is the semicircle.
pub fn semicircle() -> ChainSpec {
    build("S", &[], &[], &[], &[], ("(j+2)/(2*(j+1))", "j/(2*(j+1))", "0", "0"))
}

/// Chain K: chain B with `r_0 = 1/4` and killing `kappa_0 = 1/4` at the origin.
pub fn killed_shifted_arcsine() -> ChainSpec {
    build("K", &["1/2"], &["0"], &["1/4"], &["1/4"], ("1/4", "1/4", "1/2", "0"))
}

/// Transient walk: `p_0 = 1`, `p_j = 2/3`, `q_j = 1/3`.
pub fn transient() -> ChainSpec {
    build("T", &["1"], &["0"], &["0"], &[], ("2/3", "1/3", "0", "0"))
}

/// Transient walk with killing `1/4` at the origin.
pub fn killed_transient() -> ChainSpec {
    build("TK", &["3/4"], &["0"], &["0"], &["1/4"], ("2/3", "1/3", "0", "0"))
}

/// Killing `0.1` in every state, `p = q = 0.45` away from the origin.
pub fn constant_killing() -> ChainSpec {
    build(
        "KC",
        &["9/10"],
        &["0"],
        &["0"],
        &["1/10"],
        ("9/20", "9/20", "0", "1/10"),
    )
}

/// `r_j = 4^(-j)` for `j >= 1`, symmetric moves otherwise.
pub fn geometric_holding() -> ChainSpec {
    build(
        "R4",
        &["1"],
        &["0"],
        &["0"],
        &[],
        ("(1 - 4^(-j))/2", "(1 - 4^(-j))/2", "4^(-j)", "0"),
    )
}

/// `r_j = 1/(j+1)^2` for `j >= 1`, symmetric moves otherwise.
pub fn inverse_square_holding() -> ChainSpec {
    build(
        "R2",
        &["1"],
        &["0"],
        &["0"],
        &[],
        ("(1 - 1/(j+1)^2)/2", "(1 - 1/(j+1)^2)/2", "1/(j+1)^2", "0"),
    )
}

fn weight(label: &str, alpha: &str, beta: &str, smooth: &str) -> WeightSpec {
    WeightSpec::new(
        label,
        Rational::from(1),
        q(&[alpha])[0].clone(),
        q(&[beta])[0].clone(),
        Expr::parse(smooth, 'x').expect("literal smooth factor"),
        vec![],
    )
    .expect("reference weight is well formed")
}

/// Semicircle density `(2/pi) sqrt(1 - x^2)`.
pub fn semicircle_weight() -> WeightSpec {
    weight("semicircle", "1/2", "1/2", "1")
}

/// Weight D: `(1 - x)^(1/2) (1 + x)^(3/2)`, mean `1/4`.
pub fn weight_d() -> WeightSpec {
    weight("D", "1/2", "3/2", "1")
}

/// Weight E: `(1 - x^2)^(1/2) (2 + x)`.
pub fn weight_e() -> WeightSpec {
    weight("E", "1/2", "1/2", "2 + x")
}

/// `(1 - x)^(3/2) (1 + x)^(1/2)`: mean `-1/4`, not a random walk measure.
pub fn negative_mean_weight() -> WeightSpec {
    weight("negative-mean", "3/2", "1/2", "1")
}

/// Every reference chain with its label.
pub fn all_chains() -> Vec<ChainSpec> {
    vec![
        arcsine(),
        shifted_arcsine(),
        asymmetric(),
        semicircle(),
        killed_shifted_arcsine(),
        transient(),
        killed_transient(),
        constant_killing(),
        geometric_holding(),
        inverse_square_holding(),
    ]
}
