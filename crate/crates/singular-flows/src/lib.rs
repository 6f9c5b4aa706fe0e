#![allow(clippy::needless_range_loop)]

//! Analysis of vector fields with divide-by-zero singularities.
//!
//! The library works with fields of the form `W = f^{-r}·V`, where `V` is
//! smooth and the scalar `f` cuts out a regular hypersurface `Γ = {f = 0}` on
//! which `W` blows up. It provides:
//!
//! - a truncated multivariate Taylor (jet) engine and an expression parser
//!   feeding it ([`jets`], [`expr`]);
//! - divergence identities, invariance and first-integral checks, and limit
//!   verification of the degeneracy conditions at singular points on `Γ`
//!   ([`fields`]);
//! - spectra, eigenvectors, and resonance detection at non-isolated singular
//!   points ([`spectral`]);
//! - constructive normal-form machinery: series flattening, the resonant-jet
//!   coefficient, and a smooth-classification decision tree ([`normalform`]);
//! - three families of singular 2D metrics (pseudo-Riemannian, Klein-type,
//!   almost-Riemannian) with desingularized geodesic flows integrated through
//!   their degeneracy curves and validated against closed-form curves
//!   ([`geometry`]);
//! - a JSON/CSV command-line front end ([`cli`]).
//!
//! Every runnable capability has a corresponding example under `examples/`;
//! start with `cargo run --example parse_and_jets`.

pub mod cli;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod jets;
pub mod linalg;
pub mod normalform;
pub mod ode;
pub mod spectral;
pub mod util;
