use std::fmt;
use std::path::Path;

use geocons::Error;

/// A failure together with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    NoInput(String),
    CantCreate(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Parse(_) => 65,
            CliError::NoInput(_) => 66,
            CliError::CantCreate(_) => 73,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn read(path: &Path, err: std::io::Error) -> Self {
        CliError::NoInput(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: std::io::Error) -> Self {
        CliError::CantCreate(format!("cannot write {}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Usage(m)
        | CliError::Parse(m)
        | CliError::NoInput(m)
        | CliError::CantCreate(m)
        | CliError::Runtime(m)) = self;
        f.write_str(m)
    }
}

// Input-shaped errors become usage or parse failures; the rest are runtime.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse { .. } | Error::DuplicateEdge { .. } | Error::NonPositiveWeight { .. } => CliError::Parse(msg),
            Error::InvalidDegree { .. }
            | Error::UnknownProtocol(_)
            | Error::UnsupportedMetric(_)
            | Error::InvalidConfig(_)
            | Error::InvalidGraph(_)
            | Error::EmptyInput
            | Error::NonPositiveInput { .. }
            | Error::NonPositiveState { .. }
            | Error::LengthMismatch { .. }
            | Error::NotBalanced
            | Error::SineDomainViolation { .. }
            | Error::InfeasibleTarget(_) => CliError::Usage(msg),
            _ => CliError::Runtime(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
