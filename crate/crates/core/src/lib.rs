//! Exterior-calculus toolkit for photon-like nonlinear connections on
//! Minkowski space: pointwise form algebra, field-level differential
//! operators, a scalar-field DSL, projection/curvature analysis, the PhLO
//! field model with its explicit solutions, and the invariant suite that
//! verifies them.

// Index loops mirror the tensor notation (η_μ, T_μ^ν, jet coefficients).
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod calculus;
pub mod config;
pub mod connections;
pub mod dsl;
pub mod exterior;
pub mod field;
pub mod jet;
pub mod phlo;
pub mod probes;
pub mod program;
pub mod quadrature;
pub mod report;
pub mod solutions;
pub mod tensor;

pub use exterior::{Form, Point4, Vector4};
pub use field::ScalarField;
pub use program::{DerivativeProvider, EvalError};
