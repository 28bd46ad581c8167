//! Scalar special functions behind the closed-form outage expressions.
//!
//! Everything here is restricted to the integer parameters the outage
//! formulas actually need: incomplete Gamma functions of integer order,
//! first-order Marcum-Q, `1F1(a; 2; x)` for integer `a`, integer-order
//! modified Bessel functions of the second kind, and the CDF of a product of
//! two integer-shape Gamma variables (a Meijer-G function with integer
//! parameters).

mod bessel;
mod gamma;
mod kummer;
mod marcum;
mod product_gamma;
pub mod quadrature;

use thiserror::Error;

pub use bessel::{bessel_k, bessel_k_int, meijer_g20_02};
pub use gamma::{ln_factorial, ln_gamma, regularized_gamma_pq, regularized_lower_gamma, regularized_upper_gamma};
pub use kummer::{kummer_1f1_c2, kummer_1f1_c2_scaled};
pub use marcum::{marcum_p1, marcum_q1};
pub use product_gamma::{product_gamma_cdf, product_gamma_pdf};
pub use quadrature::{integrate, integrate_to_infinity, Integral, QuadratureSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("result not representable: {0}")]
    Range(String),
    #[error("quadrature did not converge: estimated error {achieved:e} exceeds requested {requested:e} after {subdivisions} subdivisions")]
    NoConvergence {
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(String),
}
