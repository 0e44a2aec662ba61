//! Max-CSP integrality gaps turned into hard streaming instances, plus
//! desk-scale verifiers for the Fourier-analytic machinery behind the
//! single-pass lower bound.
//!
//! The pipeline runs in this order:
//!
//! 1. [`csp`]: predicates, instances, exact values and brute-force optima.
//! 2. [`lp`]: the distributional basic LP, solved with an exact rational simplex.
//! 3. [`uniformize`]: lift a rational LP solution to one-wise uniform local
//!    distributions over a larger alphabet and assemble the gadget.
//! 4. [`dihp`]: sample YES/NO inputs of the hidden-partition game and emit the
//!    induced constraint streams.
//! 5. [`protocol`]: run blackboard protocols (and streaming algorithms wrapped
//!    as players) on those inputs.
//!
//! [`fourier`] and [`lemmas`] carry the analytic side: dense transforms over
//! `Z_q^N`, noise operators, posterior densities and the combinatorial bounds.
//! [`harness`] wires everything into reproducible, seeded runs.

pub mod csp;
pub mod dihp;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod lemmas;
pub mod lp;
pub mod protocol;
pub mod rational;
pub mod rng;
pub mod uniformize;

pub use error::{Error, Result};
