//! Solver toolkit for budgeted capacitated assignment with consecutive-ones
//! weight intervals.
//!
//! The pipeline: [`model`] holds instances and feasibility checks, [`colgen`]
//! solves the configuration-LP relaxation by column generation over the
//! [`lp`] simplex core, [`magician`] implements the conservative online
//! opening rule, [`rounding`] turns fractional solutions into feasible
//! assignments, [`exact`] provides brute-force oracles for tiny instances,
//! [`gen`] builds random, reduction, and line-planning instances, and
//! [`harness`] drives seeded Monte-Carlo experiments.

pub mod colgen;
pub mod exact;
pub mod gen;
pub mod harness;
pub mod lp;
pub mod magician;
pub mod model;
pub mod rounding;
pub mod stream;

#[cfg(test)]
pub(crate) mod testkit;
