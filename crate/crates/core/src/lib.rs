//! Generalized Zeckendorf decompositions driven by a positive linear
//! recurrence, modeled as a conditioned Markov chain.
//!
//! The crate builds, for any admissible coefficient list, the digit system
//! over the recurrence's scale sequence, the finite chain whose conditioned
//! law is the uniform measure on fixed-length decompositions, and the
//! closed-form statistics that follow: mean/variance of the summand count,
//! the limiting gap distribution, and the maximal-gap law. Every closed form
//! is cross-checked against exact enumeration / transfer-matrix oracles and
//! importance-weighted Monte Carlo.

pub mod chain;
pub mod cli;
pub mod decomposer;
pub mod error;
pub mod functionals;
pub mod gaps;
pub mod oracle;
pub mod recurrence;
pub mod report;
pub mod sampler;
