//! Learning dynamics in harmonic games.
//!
//! This crate detects and generates harmonic games, integrates the
//! continuous-time dynamics of regularized learning (with their conserved
//! energy and recurrence diagnostics), and runs discrete-time FTRL together
//! with its extrapolated variant, checking constant-regret and
//! Nash-convergence certificates along the way.  The `hgames` binary wraps
//! the library in an experiment CLI.

pub mod discrete;
pub mod error;
pub mod flow;
pub mod game;
pub mod harmonic;
mod linalg;
mod lp;
pub mod regularizer;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use game::{FiniteGame, MixedProfile, PayoffVectors};
pub use harmonic::{
    find_harmonic_measure, generate_harmonic, harmonic_residual, is_uniform_harmonic,
    HarmonicStructure,
};
pub use regularizer::{RegularizerKind, RegularizerSpec, ScoreProfile};
