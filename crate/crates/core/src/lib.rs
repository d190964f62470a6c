//! Sampling sets for phase retrieval in Fock spaces built from perturbed lattices.
//!
//! The crate constructs the point sets, certifies their geometric hypotheses
//! (closeness, angles, density, separation) and numerically checks the analytic
//! identities behind them: reproducing-kernel metrics, Wronskians, Weierstrass
//! sigma functions, Gabor/Bargmann transforms and lifted phaseless measurements.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod gabor;
pub mod json;
pub mod lattice;
pub mod phaseless;
pub mod pointset;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
