//! Pipeline driver behind the `ppgpt` binary.
//!
//! [`config`] reads the key=value configuration, [`pipeline`] runs the
//! retrieve, generate, revise, rank and verify stages, and [`report`]
//! renders their results.

pub mod config;
pub mod pipeline;
pub mod report;

/// An operational failure, tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(stage: &'static str, message: impl Into<String>) -> Self {
        CliError {
            stage,
            message: message.into(),
        }
    }

    pub fn at(stage: &'static str) -> impl Fn(ppgpt_rag::Error) -> CliError {
        move |e| CliError::new(stage, e.to_string())
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VIOLATED: u8 = 2;
