use std::fmt;

use mcf_core::Error;

pub const OK: u8 = 0;
pub const IO: u8 = 1;
pub const MODEL: u8 = 2;
pub const CONFIG: u8 = 3;
pub const NOT_CONVERGED: u8 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(IO, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(CONFIG, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Parse(_) => IO,
            Error::ConfigMismatch(_) => CONFIG,
            Error::Aliasing { .. }
            | Error::Contract(_)
            | Error::Domain(_)
            | Error::InvalidArgument(_) => MODEL,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::io(e.to_string())
    }
}
