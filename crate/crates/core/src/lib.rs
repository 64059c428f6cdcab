//! Compiler and prover for MiniSol contracts annotated with PSL properties.
//!
//! The crate is organised along the verification pipeline:
//!
//! - [`frontend`] lexes, parses and resolves contracts (`.msol`) and property
//!   specifications (`.psl`) into a typed [`ir::Program`].
//! - [`checker`] performs the static well-formedness checks on compiled
//!   specifications, including target-function coverage of rules.
//! - [`symexec`] executes the IR symbolically (strongest postcondition).
//! - [`solver`] bridges to any SMT-LIB v2 solver process.
//! - [`verifier`] discharges invariants, function specs and rules, and
//!   confirms violations with bounded model checking.
//! - [`interp`] is a concrete interpreter used to replay counterexamples.

pub mod checker;
pub mod frontend;
pub mod interp;
pub mod ir;
pub mod solver;
pub mod symexec;
pub mod term;
pub mod types;
pub mod verifier;

pub use frontend::diagnostics::{render_diagnostics, Diagnostic, Severity};
pub use frontend::span::{SourceFile, Span};
