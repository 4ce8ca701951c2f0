//! Special functions, Beta and Dirichlet helpers, seeded sampling and quadrature.

mod beta;
mod dirichlet;
mod quadrature;
pub mod rng;
mod special;

pub use beta::BetaParams;
pub use dirichlet::{dirichlet_mixed_moment, DirichletParams, SAMPLE_BLOCK};
pub(crate) use dirichlet::for_each_draw;
pub use quadrature::{adaptive_simpson, Integral, Quadrature};
pub use special::{compensated_sum, digamma, ln_beta, ln_gamma, regularized_incomplete_beta, rising_factorial};
pub(crate) use special::ln_gamma_unchecked;
