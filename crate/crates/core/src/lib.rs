//! Cost-aware runtime monitoring of Markov chains.
//!
//! A labelled Markov chain emits letters; a deterministic automaton describes
//! a reachability property of the emitted word. A monitor may skip letters to
//! save observation cost, and still has to reach a yes/no verdict whenever
//! full observation would. This crate decides the qualitative questions
//! (diagnosability, confusion, finiteness of the optimal cost), computes
//! exact expected costs, compiles procrastination monitors for non-hidden
//! chains, and simulates policies on sampled runs.
//!
//! All numeric code is generic over [`scalar::Scalar`]; decision procedures
//! are meant to run over exact [`Rational`]s, with `f64` available for quick
//! approximate sweeps.

pub mod batch;
pub mod cost;
pub mod error;
pub mod examples;
pub mod generate;
pub mod linalg;
pub mod model;
pub mod monitor;
pub mod nonhidden;
pub mod qualitative;
pub mod scalar;
pub mod simulation;

pub use error::{AnalysisError, ParseError};
pub use model::{load_model, write_model, Belief, BeliefNfa, Dfa, Observation};
pub use scalar::{Rational, Scalar};

/// Chain with exact probabilities.
pub type Mc = model::Mc<Rational>;
/// Product with exact probabilities.
pub type ProductMc = model::ProductMc<Rational>;
/// Chain with floating-point probabilities.
pub type McF64 = model::Mc<f64>;
/// Product with floating-point probabilities.
pub type ProductMcF64 = model::ProductMc<f64>;
