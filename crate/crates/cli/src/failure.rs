use std::fmt;

use momtail_core::artifact::ArtifactError;
use momtail_core::filters::FilterError;
use momtail_core::rational::ParseRationalError;
use momtail_core::{ConstructionError, GameError, MeasureError, TailError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Other = 1,
    Input = 2,
    Precision = 3,
    Construction = 4,
    Verify = 5,
}

impl Code {
    fn label(self) -> &'static str {
        match self {
            Code::Other => "other",
            Code::Input => "input",
            Code::Precision => "precision",
            Code::Construction => "construction",
            Code::Verify => "verify",
        }
    }
}

/// A check ran to completion and did not pass.
#[derive(Debug)]
pub struct VerifyFailed(pub String);

impl fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerifyFailed {}

/// Malformed command-line input that is not a parse error of a known type.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn measure_code(e: &MeasureError) -> Code {
    match e {
        MeasureError::PrecisionExceeded { .. } => Code::Precision,
        _ => Code::Input,
    }
}

fn tail_code(e: &TailError) -> Code {
    match e {
        TailError::Measure(m) => measure_code(m),
        TailError::Invalid(_) => Code::Input,
    }
}

fn construction_code(e: &ConstructionError) -> Code {
    match e {
        ConstructionError::Measure(MeasureError::PrecisionExceeded { .. }) => Code::Precision,
        ConstructionError::Tail(t) if tail_code(t) == Code::Precision => Code::Precision,
        ConstructionError::Invalid(_) => Code::Input,
        _ => Code::Construction,
    }
}

pub fn classify(err: &anyhow::Error) -> Code {
    for cause in err.chain() {
        if cause.is::<VerifyFailed>() {
            return Code::Verify;
        }
        if let Some(e) = cause.downcast_ref::<ArtifactError>() {
            return match e {
                ArtifactError::Construction(c) => construction_code(c),
                ArtifactError::Decode(_) => Code::Input,
            };
        }
        if let Some(e) = cause.downcast_ref::<ConstructionError>() {
            return construction_code(e);
        }
        if let Some(e) = cause.downcast_ref::<TailError>() {
            return tail_code(e);
        }
        if let Some(e) = cause.downcast_ref::<MeasureError>() {
            return measure_code(e);
        }
        if cause.is::<FilterError>()
            || cause.is::<GameError>()
            || cause.is::<ParseRationalError>()
            || cause.is::<serde_json::Error>()
            || cause.is::<csv::Error>()
            || cause.is::<std::io::Error>()
            || cause.is::<InputError>()
        {
            return Code::Input;
        }
    }
    Code::Other
}

/// One-line JSON diagnostic for stderr.
pub fn diagnostic(err: &anyhow::Error, code: Code) -> String {
    let chain: Vec<String> = err.chain().map(|c| c.to_string()).collect();
    serde_json::json!({ "error": code.label(), "exit_code": code as u8, "message": chain.join(": ") }).to_string()
}
