//! Order-sharp estimates for Kolmogorov widths of intersections of
//! weighted anisotropic balls in `l_q^k`, `1 <= q <= 2`.
//!
//! For a finite family `M = intersection of nu_a * B_{p_a}` on a grid of
//! shape `k = (k_1, ..., k_d)`, the width `d_n(M, l_q^k)` (for `n <= k/2`) is
//! of the order of `psi`, the minimum over interpolation certificates of
//! `prod_j nu_j^lambda_j * prod_i k_i^{(1/q - 1/theta_i)_+}`.
//!
//! The crate computes `psi` with its minimizing certificate
//! ([`certificate`]), builds an explicit box-indicator witness in `M` whose
//! `l_q` norm equals `psi` ([`extremal`]), and cross-checks `psi` against a
//! continuous minimization of the same bound over the weight simplex
//! ([`oracle`]).
//!
//! Exponents are handled in reciprocal form `u = 1/p` throughout; products
//! of powers are sums of logarithms.

pub mod certificate;
pub mod cli;
pub mod combin;
pub mod error;
pub mod exponents;
pub mod extremal;
pub mod family;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod oracle;

pub use certificate::{enumerate_certificates, psi, Certificate, PsiResult, SearchOptions};
pub use error::{Error, Result};
pub use exponents::{
    box_norm, mixed_norm, phi, ExponentVector, GridShape, LogValue, QParam, Tensor,
};
pub use extremal::{construct_witness, verify_membership, ExtremalWitness};
pub use family::{check_general_position, perturb, validate, BallFamily, BallSpec};
pub use oracle::{compare, minimize, objective, MinimizeOptions, OracleResult};
