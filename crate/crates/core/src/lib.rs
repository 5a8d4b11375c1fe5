//! Rigid-body and geodesic flows on SO(n) with invariant relations.
//!
//! The crate provides the so(n) algebra kernel ([`liealg`]), the heavy
//! rigid-body vector fields and their Hess–Appel'rot restrictions
//! ([`dynamics`]), sectional-operator geodesic flows and their reductions to
//! adjoint orbits ([`geodesic`]), the so(n+1) Lax representation ([`lax`]),
//! fixed-step integrators ([`integrate`]) and drift/comparison diagnostics
//! ([`diagnostics`]).

// `!(x <= tol)` is deliberate throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod geodesic;
pub mod error;
pub mod integrate;
pub mod lax;
pub mod liealg;
pub mod sampling;

pub use error::{Error, Result};
