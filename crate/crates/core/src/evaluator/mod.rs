//! Turning configurations into objective values.
//!
//! [`CompiledEvaluator`] instantiates the mold, compiles it and times the
//! binary. [`MockEvaluator`] computes a synthetic objective with no
//! external processes, for tests and demonstrations.

mod mock;
mod process;

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::Configuration;

pub use mock::{mock_evaluate, MockEvaluator, MockObjective, CLIFF_PENALTY};
pub use process::{split_template, BuildCommands, CompiledEvaluator, EVAL_INDEX_ENV};

#[derive(Error, Debug)]
pub enum EvaluatorError {
    #[error("unknown mock objective `{0}` (expected sphere, plateau or cliff)")]
    UnknownObjective(String),
    #[error("unknown aggregation `{0}`")]
    UnknownAggregation(String),
    #[error("unknown status `{0}`")]
    UnknownStatus(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Template(#[from] crate::templater::TemplateError),
    #[error("command template is empty")]
    EmptyCommand,
}

impl EvaluatorError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Min,
    Mean,
    Median,
}

impl Aggregation {
    /// Reduces per-run times to one objective. `runs` must be non-empty.
    pub fn apply(self, runs: &[f64]) -> f64 {
        assert!(!runs.is_empty(), "aggregating zero runs");
        match self {
            Aggregation::Min => runs.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregation::Mean => runs.iter().sum::<f64>() / runs.len() as f64,
            Aggregation::Median => {
                let mut v = runs.to_vec();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                if v.len() % 2 == 1 {
                    v[m]
                } else {
                    (v[m - 1] + v[m]) / 2.0
                }
            }
        }
    }
}

impl FromStr for Aggregation {
    type Err = EvaluatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Aggregation::Min),
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            _ => Err(EvaluatorError::UnknownAggregation(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveSource {
    /// Last floating-point number printed by the program.
    ProgramStdout,
    /// Wall time of the run as measured by the harness.
    Walltime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPolicy {
    pub repeats: usize,
    pub aggregation: Aggregation,
    pub timeout_sec: f64,
    pub objective_source: ObjectiveSource,
}

impl Default for MeasurementPolicy {
    fn default() -> Self {
        Self {
            repeats: 3,
            aggregation: Aggregation::Min,
            timeout_sec: 300.0,
            objective_source: ObjectiveSource::ProgramStdout,
        }
    }
}

/// Outcome of one evaluation, or of one recorded proposal.
///
/// `Duplicate` never comes out of an evaluator; the optimizer uses it for
/// proposals that repeat an already-recorded configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CompileError,
    RunError,
    Timeout,
    Duplicate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::CompileError => "compile_error",
            Status::RunError => "run_error",
            Status::Timeout => "timeout",
            Status::Duplicate => "duplicate",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Status::CompileError | Status::RunError | Status::Timeout)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = EvaluatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Status::Ok,
            Status::CompileError,
            Status::RunError,
            Status::Timeout,
            Status::Duplicate,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| EvaluatorError::UnknownStatus(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Aggregated seconds; present iff `status` is `Ok`.
    pub objective: Option<f64>,
    pub runs: Vec<f64>,
    /// Wall-clock seconds for the whole evaluation, compile included.
    pub elapsed: f64,
    pub status: Status,
    /// Compiler or program diagnostics for failed evaluations.
    pub diagnostics: Option<String>,
}

impl Measurement {
    pub fn ok(runs: Vec<f64>, aggregation: Aggregation, elapsed: f64) -> Self {
        Self {
            objective: Some(aggregation.apply(&runs)),
            runs,
            elapsed,
            status: Status::Ok,
            diagnostics: None,
        }
    }

    pub fn failed(status: Status, elapsed: f64, diagnostics: impl Into<String>) -> Self {
        debug_assert!(status.is_failure());
        Self {
            objective: None,
            runs: Vec::new(),
            elapsed,
            status,
            diagnostics: Some(diagnostics.into()),
        }
    }
}

/// Anything that can score a configuration. `index` is the 1-based
/// evaluation index the result will be recorded under.
pub trait Evaluator {
    fn evaluate(&mut self, index: usize, config: &Configuration)
        -> Result<Measurement, EvaluatorError>;
}

static FLOAT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?").expect("valid float regex")
});

/// The last decimal number in `text`, as printed by PolyBench-style timers.
pub fn parse_last_float(text: &str) -> Option<f64> {
    FLOAT
        .find_iter(text)
        .filter_map(|m| m.as_str().parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .last()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn min_aggregation() {
        assert_eq!(Aggregation::Min.apply(&[0.30, 0.25, 0.27]), 0.25);
    }

    #[test]
    fn median_of_even_count_averages_middle_pair() {
        assert_eq!(Aggregation::Median.apply(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(Aggregation::Median.apply(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn last_float_wins() {
        assert_eq!(parse_last_float("a\n0.5\n0.123\n"), Some(0.123));
        assert_eq!(parse_last_float("0.229\n"), Some(0.229));
        assert_eq!(parse_last_float("time: 1.5e-3 s"), Some(1.5e-3));
        assert_eq!(parse_last_float("no numbers here"), None);
        assert_eq!(parse_last_float(""), None);
    }

    #[test]
    fn status_text_round_trips() {
        for s in ["ok", "compile_error", "run_error", "timeout", "duplicate"] {
            assert_eq!(s.parse::<Status>().unwrap().as_str(), s);
        }
        assert!("fine".parse::<Status>().is_err());
    }

    proptest! {
        #[test]
        fn aggregation_respects_its_name(runs in prop::collection::vec(0.0f64..100.0, 1..12)) {
            let lo = Aggregation::Min.apply(&runs);
            let hi = runs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let med = Aggregation::Median.apply(&runs);
            let mean = Aggregation::Mean.apply(&runs);
            prop_assert!(lo <= med && med <= hi);
            prop_assert!(lo - 1e-9 <= mean && mean <= hi + 1e-9);
        }
    }
}
