use thiserror::Error;

use crate::families::Diagnostic;

/// Errors raised by evaluators, residual routines and transformations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum YbeError {
    #[error("evaluation point is within tolerance of a pole ({context})")]
    PoleProximity { context: String },

    #[error("elliptic modulus |k| = {modulus} is outside the supported domain |k| <= 1")]
    ModulusOutOfRange { modulus: f64 },

    #[error("invalid family specification: {}", summarize(.0))]
    InvalidSpec(Vec<Diagnostic>),

    #[error("family is not in gauge form at the sample point ({detail})")]
    NotGauge { detail: String },

    #[error("transformation payload vanishes at the requested point ({context})")]
    ZeroDivisor { context: String },

    #[error("weight a{index} vanishes identically on the samples")]
    NotEightVertex { index: usize },

    #[error("ratio a3/a2 violates the multiplicative cocycle (defect {defect:e})")]
    MultiplicativityViolation { defect: f64 },

    #[error("finite-difference step is unstable for m{index}: raw and extrapolated differ by {relative:e}")]
    StepUnstable { index: usize, relative: f64 },

    #[error("square-root argument crosses the negative real axis along the sweep ({context})")]
    BranchAmbiguity { context: String },

    #[error("chain size {sites} outside the supported range 2..=12")]
    SizeLimit { sites: usize },

    #[error("{0}")]
    Format(String),
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, YbeError>;

pub(crate) fn pole(context: impl Into<String>) -> YbeError {
    YbeError::PoleProximity {
        context: context.into(),
    }
}
