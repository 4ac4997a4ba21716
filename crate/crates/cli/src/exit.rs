//! Exit codes and the error type that carries them.

use std::fmt;

use vfp_core::Error;

/// The process exit codes; part of the command-line contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Ok = 0,
    Config = 1,
    Assumptions = 2,
    Cfl = 3,
    BlowUp = 4,
    NonConvergence = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub message: String,
}

impl Failure {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Failure::new(Code::Config, message.to_string())
    }

    pub fn assumptions(message: impl fmt::Display) -> Self {
        Failure::new(Code::Assumptions, message.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

/// Exit code for a library error raised while a command runs.
pub fn code_for(e: &Error) -> Code {
    match e {
        Error::Cfl { .. } => Code::Cfl,
        Error::NonFinite { .. } | Error::TridiagonalSolve { .. } => Code::BlowUp,
        Error::Quadrature { .. } => Code::NonConvergence,
        Error::InvalidPotential(_) | Error::OddInteraction { .. } => Code::Assumptions,
        _ => Code::Config,
    }
}

/// Walks the error chain for the first error that determines a code.
pub fn classify(err: &anyhow::Error) -> Code {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.code;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return code_for(e);
        }
    }
    Code::Config
}
