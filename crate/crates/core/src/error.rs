use thiserror::Error;

/// Errors raised while reading model, monitor, and flowgraph files.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("missing section [{0}]")]
    MissingSection(&'static str),

    #[error("state {state}: outgoing probabilities sum to {sum}, expected 1")]
    NotStochastic { state: String, sum: String },

    #[error("dfa state {state} has no transition on letter {letter}")]
    DfaNotTotal { state: String, letter: String },

    #[error("line {line}: unknown {kind} '{name}'")]
    UnknownReference {
        line: usize,
        kind: &'static str,
        name: String,
    },
}

/// Errors raised by analyses and compilers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("belief exploration exceeded the node cap of {cap}")]
    CapExceeded { cap: usize },

    #[error("the Markov chain is hidden: letter '{letter}' leads to several states")]
    NotNonHidden { letter: String },

    #[error("alphabet mismatch between chain and automaton")]
    AlphabetMismatch,

    #[error("pair ({state},{dfa_state}) has unbounded procrastination; a finite K is required to emit a monitor")]
    UnboundedSkip { state: String, dfa_state: String },

    #[error("unknown letter '{0}' in observation prefix")]
    UnknownLetter(String),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("monitor does not fit the model: {0}")]
    MonitorMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
