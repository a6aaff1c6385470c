//! Numerical toolkit for exact-growth Trudinger–Moser and Adams inequalities
//! on weighted radial Sobolev spaces.

pub mod error;
pub mod par;
pub mod radial;
pub mod operators;
pub mod special;
pub mod symmetrize;
pub mod functionals;
pub mod extremal;
pub mod ode;
pub mod corpus;

pub use error::{Error, Result};
