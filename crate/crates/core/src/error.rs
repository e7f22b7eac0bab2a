use std::fmt;

/// Pipeline stage tags used in diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Plan,
    Kernels,
    Boundary,
    Align,
    Sample,
    Branches,
    Assemble,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Plan => "plan",
            Stage::Kernels => "kernels",
            Stage::Boundary => "boundary",
            Stage::Align => "align",
            Stage::Sample => "sample",
            Stage::Branches => "branches",
            Stage::Assemble => "assemble",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid case at `{path}`: {reason}")]
    InvalidCase { path: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolution plan needs {pixels} fine pixels, above the cap of {cap} (nx={nx}, ny={ny}, F_up={f_total})")]
    MemoryCap {
        pixels: usize,
        cap: usize,
        nx: usize,
        ny: usize,
        f_total: usize,
    },

    #[error("{stage}: {reason}")]
    Pipeline { stage: Stage, reason: String },

    #[error("insufficient constraints or disconnected load: {0}")]
    Singular(String),

    #[error("reference design has zero compliance-volume product")]
    ZeroReference,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn case(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidCase { path: path.into(), reason: reason.into() }
    }

    pub fn pipeline(stage: Stage, reason: impl Into<String>) -> Self {
        Error::Pipeline { stage, reason: reason.into() }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidCase { .. } | Error::InvalidArgument(_) | Error::Json(_) | Error::Io(_) => 2,
            Error::MemoryCap { .. } | Error::Pipeline { .. } => 3,
            Error::Singular(_) | Error::ZeroReference => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
