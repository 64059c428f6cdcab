//! Bridge to SMT-LIB v2 solvers over standard input and output.

pub mod encode;
pub mod model;
pub mod process;
pub mod sexpr;

pub use encode::{encode_formula, sha3_name, Decl, EncodeError, Formula};
pub use model::{ArrayValue, Model, Value};
pub use process::{check_sat, check_sat_with, SolverConfig, SolverError, SolverVerdict};
