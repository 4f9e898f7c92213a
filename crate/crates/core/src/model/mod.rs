//! Chains, property automata, their product, and the belief automaton.

mod belief;
mod dfa;
mod mc;
mod parse;
mod product;

pub use belief::{Belief, BeliefNfa, Observation};
pub use dfa::Dfa;
pub use mc::{Edge, Mc};
pub use parse::{load_model, write_model};
pub use product::ProductMc;

pub(crate) use parse::{check_ident, syntax, tokenize};
