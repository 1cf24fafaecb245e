//! Continuous-time dynamical-system (CTDS) solver for Boolean satisfiability,
//! together with the experimental toolkit around it: random instance
//! ensembles, adaptive Runge-Kutta integration, basin-of-attraction and
//! finite-size-Lyapunov maps, and decay-law fitting.
//!
//! The solver maps a CNF formula onto a gradient flow for analog spins
//! `s ∈ [-1,1]^N` driven by exponentially growing clause weights `a_m`.
//! Satisfying assignments are the only attractors; everything else in this
//! crate measures how trajectories reach them.

pub mod analysis;
pub mod dynamics;
pub mod formula;
pub mod generators;
pub mod integrator;
pub mod parallel;
pub mod rng;
pub mod solver;

pub use formula::{Assignment, Clause, CnfFormula, CoreReport, DpllResult, Literal};
pub use integrator::{RunOutcome, RunStatus, StepControl};
pub use solver::{SolveConfig, SolveRecord};
