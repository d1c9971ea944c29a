//! Exact verification toolkit for non-autonomous discrete dynamical systems.

pub mod chaos;
pub mod checkers;
pub mod cli;
pub mod convergence;
pub mod corpus;
pub mod hitting;
pub mod maps;
pub mod ndsl;
pub mod spaces;
