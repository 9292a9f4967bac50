//! Birth-death chains, their random walk polynomials and spectral measures.
//!
//! The crate moves between three descriptions of the same object:
//!
//! * a chain given by its one-step probabilities ([`chain::ChainSpec`]),
//! * the polynomials `Q_n` generated by the chain ([`polynomials`]),
//! * the orthogonality measure of those polynomials ([`measure`], [`weight`]).
//!
//! [`harness`] uses all three to compare the limits of `C_n` and of the
//! Christoffel ratio `rho_n(-eta)/rho_n(eta)`.

pub mod chain;
pub mod divergence;
pub mod error;
pub mod expr;
pub mod families;
pub mod gauss;
pub mod harness;
pub mod limits;
pub mod measure;
pub mod montecarlo;
pub mod normalization;
pub mod polynomials;
pub mod real;
pub mod recover;
pub mod specfile;
pub mod tridiag;
pub mod weight;

pub mod cli;

pub use error::{Error, Result};
pub use real::{Backend, Precision, Real};
