//! Adaptive P1 finite elements for linear-quadratic parameter estimation in
//! elliptic PDEs.
//!
//! The state `u(p)` of a linear elliptic problem depends affinely on a
//! finite-dimensional parameter `p`. It is split into state components
//! `u_0, u_1, .., u_nQ` and complemented by one co-state component per
//! measurement functional. Refinement is driven by a weighted product of the
//! state and co-state residual estimators, which bounds the parameter error
//! of the discrete least-squares fit.
//!
//! Module layout:
//!
//! * [`mesh`]: conforming triangulations and newest vertex bisection,
//! * [`space`]: the P1 space, assembly, quadrature and the SPD solver,
//! * [`components`]: state and co-state component solves,
//! * [`estimator`]: residual indicators and the weighted indicator,
//! * [`lsq`]: the least-squares system and parameter recovery,
//! * [`driver`]: marking, the adaptive loop, noise, CSV output and problem files.

pub mod components;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod lsq;
pub mod mesh;
pub mod space;

pub use error::{Error, Result};
