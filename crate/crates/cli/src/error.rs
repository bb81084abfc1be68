//! Error classes and their exit codes.

use std::fmt;

use bes_core::bf::BfError;
use bes_core::glm::GlmError;
use bes_core::hypothesis::HypothesisError;
use bes_core::io::IoError;
use bes_core::sim::SimError;
use bes_core::simgen::SimGenError;
use bes_core::synthesis::SynthesisError;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or unusable hypothesis (exit 3).
    Parse(String),
    /// Model fitting failed (exit 4).
    Fit(String),
    /// Bayes factor or synthesis arithmetic failed (exit 5).
    Numeric(String),
    /// Reading or writing files failed (exit 6).
    Io(String),
    /// Anything else (exit 1).
    Other(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Numeric(_) => 5,
            CliError::Io(_) => 6,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Parse(m) => ("hypothesis", m),
            CliError::Fit(m) => ("fit", m),
            CliError::Numeric(m) => ("numeric", m),
            CliError::Io(m) => ("io", m),
            CliError::Other(m) => ("", m),
        };
        if kind.is_empty() {
            f.write_str(msg)
        } else {
            write!(f, "{kind}: {msg}")
        }
    }
}

impl From<HypothesisError> for CliError {
    fn from(e: HypothesisError) -> Self {
        match e {
            HypothesisError::RankDeficientEquality | HypothesisError::Dist(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<GlmError> for CliError {
    fn from(e: GlmError) -> Self {
        CliError::Fit(e.to_string())
    }
}

impl From<BfError> for CliError {
    fn from(e: BfError) -> Self {
        match e {
            BfError::Hypothesis(h) => h.into(),
            BfError::InvalidFraction(_) => CliError::Other(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Dataset(g) => g.into(),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Bf(b) => b.into(),
            SynthesisError::ConflictingSentinels(_) => CliError::Numeric(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<SimGenError> for CliError {
    fn from(e: SimGenError) -> Self {
        match e {
            SimGenError::Glm(g) => g.into(),
            SimGenError::Io(i) => i.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Gen(g) => g.into(),
            SimError::Glm(g) => g.into(),
            SimError::Hypothesis(h) => h.into(),
            SimError::Bf(b) => b.into(),
            SimError::Synthesis(s) => s.into(),
            SimError::Io(i) => i.into(),
            SimError::CrossCheck(_) => CliError::Numeric(e.to_string()),
            SimError::Config(_) => CliError::Other(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
