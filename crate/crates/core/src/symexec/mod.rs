//! Forward symbolic execution of the IR.
//!
//! Every path carries its own [`SymState`]. Reverting paths are reported
//! separately and never contribute proof obligations. Loops are unrolled
//! up to a bound; paths that would exceed it end as
//! [`PathOutcome::Truncated`].

mod exec;
pub mod state;

pub use exec::Executor;
pub use state::{
    default_agg, default_scalar, leaf_suffix, leaf_type, leaves_of, Agg, LeafPath, LeafStep, MemObj, Obligation, Place,
    Root, Step, SymArg, SymState, TxRecord, Val,
};

use crate::frontend::span::Span;
use num_bigint::BigInt;
use std::fmt;

#[derive(Clone, Debug)]
pub struct ExecOptions {
    /// Maximum number of iterations explored per loop.
    pub loop_bound: usize,
    /// Internal call nesting beyond which callees are havocked.
    pub call_depth: usize,
    /// Restrict every fresh integer input to this inclusive range.
    pub input_domain: Option<(BigInt, BigInt)>,
    /// Upper bound on the length of fresh array inputs.
    pub max_array_len: Option<u64>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            loop_bound: 5,
            call_depth: 3,
            input_domain: None,
            max_array_len: None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum PathOutcome {
    Normal {
        state: SymState,
        returns: Vec<Val>,
    },
    Reverted {
        state: SymState,
        reason: String,
        span: Span,
    },
    /// The path reached the loop bound with the loop condition still
    /// satisfiable.
    Truncated {
        state: SymState,
        span: Span,
    },
}

impl PathOutcome {
    pub fn state(&self) -> &SymState {
        match self {
            PathOutcome::Normal { state, .. }
            | PathOutcome::Reverted { state, .. }
            | PathOutcome::Truncated { state, .. } => state,
        }
    }

    pub fn is_normal(&self) -> bool {
        matches!(self, PathOutcome::Normal { .. })
    }
}

/// Constructs the executor cannot model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecError {
    pub message: String,
    pub span: Span,
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}..{}", self.message, self.span.start, self.span.end)
    }
}

impl std::error::Error for ExecError {}
