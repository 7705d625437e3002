use alloc::string::String;

/// Errors raised by the model-checking and case-study operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("state explosion: exploration exceeded the cap of {cap} states")]
    StateExplosion { cap: usize },
    #[error("foreign atom: {count} state(s) of an atom are not states of the Kripke structure")]
    ForeignAtom { count: usize },
    #[error("empty initial set")]
    EmptyInitialSet,
    #[error("not a leaf: no base attack at position {position}")]
    NotALeaf { position: String },
    #[error("endpoint mismatch: replacement does not attack the goal of the leaf it replaces")]
    EndpointMismatch,
    #[error("tree not valid")]
    TreeNotValid,
    #[error("partial state map: no image for a state of the refined structure")]
    PartialStateMap,
    #[error("not a refinement")]
    NotARefinement,
    #[error("initial-state coverage violated: some abstract initial state is not an image")]
    InitialCoverage,
    #[error("corrupt ledger: datum {datum:?} is held under more than one label")]
    CorruptLedger { datum: String },
    #[error("broken trace: no rule relates states {step} and {} of the trace", step + 1)]
    BrokenTrace { step: usize },
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
