//! Problem files: one JSON document describing a tunable kernel.
//!
//! ```json
//! {
//!   "name": "syr2k",
//!   "mold": "../molds/syr2k.c",
//!   "params": [{"name": "P3", "kind": "ordinal", "values": ["4", "8"], "default": "4"}],
//!   "conditions": [],
//!   "compile": "clang {flags} {src} -o {bin} -lm",
//!   "run": "{bin}",
//!   "flag_preset": "polly",
//!   "repeats": 3,
//!   "aggregation": "min",
//!   "timeout_sec": 300,
//!   "objective_source": "program-stdout",
//!   "mock_objective": "sphere"
//! }
//! ```
//!
//! `mold` is resolved relative to the problem file. `seed` seeds the mock
//! objective's offsets and defaults to 1234.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::get_preset;
use crate::evaluator::{
    Aggregation, BuildCommands, CompiledEvaluator, EvaluatorError, MeasurementPolicy, MockEvaluator, MockObjective,
    ObjectiveSource,
};
use crate::perfdb::{PerfDb, PerfDbError};
use crate::space::{Condition, ParamSpace, Parameter, DEFAULT_SPACE_SEED};
use crate::templater::CodeMold;

#[derive(Error, Debug)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid problem:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("problem `{0}` has no mock_objective")]
    NoMockObjective(String),
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
}

fn default_seed() -> u64 {
    DEFAULT_SPACE_SEED
}
fn default_repeats() -> usize {
    MeasurementPolicy::default().repeats
}
fn default_aggregation() -> Aggregation {
    MeasurementPolicy::default().aggregation
}
fn default_timeout() -> f64 {
    MeasurementPolicy::default().timeout_sec
}
fn default_source() -> ObjectiveSource {
    MeasurementPolicy::default().objective_source
}

/// The on-disk form of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub mold: String,
    pub params: Vec<Parameter>,
    #[serde(default)]
    pub conditions: Vec<Condition>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub compile: String,
    pub run: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag_preset: Option<String>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_aggregation")]
    pub aggregation: Aggregation,
    #[serde(default = "default_timeout")]
    pub timeout_sec: f64,
    #[serde(default = "default_source")]
    pub objective_source: ObjectiveSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_objective: Option<MockObjective>,
}

/// A validated problem with its mold loaded.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub description: Option<String>,
    pub space: ParamSpace,
    pub mold: CodeMold,
    pub mold_path: PathBuf,
    pub commands: BuildCommands,
    pub policy: MeasurementPolicy,
    pub flag_preset: Option<String>,
    pub mock_objective: Option<MockObjective>,
}

impl Problem {
    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base, |p| std::fs::read_to_string(p))
    }

    /// Parses `text`, resolving the mold path against `base_dir` and reading
    /// it through `read_mold`.
    pub fn from_json(
        text: &str,
        base_dir: &Path,
        read_mold: impl FnOnce(&Path) -> io::Result<String>,
    ) -> Result<Self, ProblemError> {
        let (problem, diagnostics) = build(text, base_dir, read_mold);
        problem.ok_or(ProblemError::Invalid(diagnostics))
    }

    /// File name of the generated source, taken from the mold path.
    pub fn source_name(&self) -> String {
        self.mold_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("{}.c", self.name))
    }

    pub fn compiled_evaluator(&self, out_dir: &Path) -> Result<CompiledEvaluator, ProblemError> {
        Ok(CompiledEvaluator::new(
            self.space.clone(),
            self.mold.clone(),
            &self.source_name(),
            self.commands.clone(),
            self.policy.clone(),
            out_dir,
        )?)
    }

    pub fn mock_evaluator(&self) -> Result<MockEvaluator, ProblemError> {
        let objective = self
            .mock_objective
            .ok_or_else(|| ProblemError::NoMockObjective(self.name.clone()))?;
        Ok(MockEvaluator::new(&self.space, objective, self.space.seed()))
    }
}

/// Every problem with the text, one line per violation. Empty means clean.
pub fn validate(text: &str, base_dir: &Path, read_mold: impl FnOnce(&Path) -> io::Result<String>) -> Vec<String> {
    build(text, base_dir, read_mold).1
}

fn build(
    text: &str,
    base_dir: &Path,
    read_mold: impl FnOnce(&Path) -> io::Result<String>,
) -> (Option<Problem>, Vec<String>) {
    let file: ProblemFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => return (None, vec![format!("parse error: {e}")]),
    };
    let mut diags = Vec::new();

    let space = match ParamSpace::new(file.params.clone(), file.conditions.clone(), file.seed) {
        Ok(s) => Some(s),
        Err(e) => {
            diags.push(format!("space: {e}"));
            None
        }
    };
    if let Some(s) = &space {
        if let Err(PerfDbError::ReservedName(n)) = PerfDb::in_memory(s) {
            diags.push(format!("space: parameter name `{n}` is reserved for a results column"));
        }
    }

    let mold_path = base_dir.join(&file.mold);
    let mold = match read_mold(&mold_path) {
        Ok(t) => Some(CodeMold::new(t)),
        Err(e) => {
            diags.push(format!("mold: cannot read {}: {e}", mold_path.display()));
            None
        }
    };
    if let (Some(s), Some(m)) = (&space, &mold) {
        for t in m.tokens() {
            if s.index_of(t).is_none() {
                diags.push(format!("unbound token `#{t}`: no parameter named `{t}`"));
            }
        }
    }

    for (what, template, needed) in [
        ("compile", &file.compile, &["{src}", "{bin}"][..]),
        ("run", &file.run, &["{bin}"][..]),
    ] {
        if template.trim().is_empty() {
            diags.push(format!("{what} template is empty"));
            continue;
        }
        for p in needed {
            if !template.contains(p) {
                diags.push(format!("{what} template lacks the {p} placeholder"));
            }
        }
    }
    let flags = match &file.flag_preset {
        None => Vec::new(),
        Some(name) => match get_preset(name) {
            Ok(p) => {
                if !file.compile.split_whitespace().any(|w| w == "{flags}") {
                    diags.push(format!("flag_preset `{name}` is set but the compile template has no {{flags}} argument"));
                }
                p.flags.iter().map(|f| f.to_string()).collect()
            }
            Err(e) => {
                diags.push(format!("flag_preset: {e}"));
                Vec::new()
            }
        },
    };
    if file.repeats == 0 {
        diags.push("repeats must be at least 1".into());
    }
    if !(file.timeout_sec > 0.0 && file.timeout_sec.is_finite()) {
        diags.push("timeout_sec must be a positive number".into());
    }

    if !diags.is_empty() {
        return (None, diags);
    }
    let problem = Problem {
        name: file.name,
        description: file.description,
        space: space.expect("valid space"),
        mold: mold.expect("readable mold"),
        mold_path,
        commands: BuildCommands {
            compile: file.compile,
            run: file.run,
            flags,
        },
        policy: MeasurementPolicy {
            repeats: file.repeats,
            aggregation: file.aggregation,
            timeout_sec: file.timeout_sec,
            objective_source: file.objective_source,
        },
        flag_preset: file.flag_preset,
        mock_objective: file.mock_objective,
    };
    (Some(problem), diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r##"{
        "name": "toy",
        "mold": "toy.c",
        "params": [
            {"name": "P0", "kind": "categorical", "values": ["#pragma x", " "], "default": " "},
            {"name": "P1", "kind": "ordinal", "values": ["4", "8"], "default": "8"}
        ],
        "compile": "cc {flags} {src} -o {bin}",
        "run": "{bin}",
        "flag_preset": "baseline_O3"
    }"##;

    fn mold(text: &'static str) -> impl FnOnce(&Path) -> io::Result<String> {
        move |_| Ok(text.to_string())
    }

    #[test]
    fn minimal_problem_takes_defaults() {
        let p = Problem::from_json(MINIMAL, Path::new("/p"), mold("#P0\nint t = #P1;\n")).unwrap();
        assert_eq!(p.space.seed(), DEFAULT_SPACE_SEED);
        assert_eq!(p.policy, MeasurementPolicy::default());
        assert_eq!(p.commands.flags, ["-O3"]);
        assert_eq!(p.mold_path, Path::new("/p/toy.c"));
        assert_eq!(p.source_name(), "toy.c");
        assert!(p.mock_objective.is_none());
        assert!(matches!(p.mock_evaluator(), Err(ProblemError::NoMockObjective(_))));
    }

    #[test]
    fn unbound_token_is_reported() {
        let d = validate(MINIMAL, Path::new("."), mold("#P0 #P1 #P7"));
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("unbound token `#P7`"), "{d:?}");
    }

    #[test]
    fn missing_placeholders_are_reported() {
        let text = MINIMAL.replace("{src} -o {bin}", "main.c -o {bin}").replace(r#""run": "{bin}""#, r#""run": "./a.out""#);
        let d = validate(&text, Path::new("."), mold("#P0 #P1"));
        assert!(d.iter().any(|m| m.contains("compile template lacks the {src}")), "{d:?}");
        assert!(d.iter().any(|m| m.contains("run template lacks the {bin}")), "{d:?}");
    }

    #[test]
    fn several_problems_are_reported_together() {
        let text = MINIMAL
            .replace(r#""default": "8""#, r#""default": "16""#)
            .replace("baseline_O3", "turbo");
        let d = validate(&text, Path::new("."), |_| Err(io::Error::other("gone")));
        assert!(d.iter().any(|m| m.starts_with("space:")), "{d:?}");
        assert!(d.iter().any(|m| m.starts_with("mold:")), "{d:?}");
        assert!(d.iter().any(|m| m.starts_with("flag_preset:")), "{d:?}");
    }

    #[test]
    fn unknown_fields_and_bad_json_fail_to_parse() {
        let text = MINIMAL.replace(r#""name": "toy","#, r#""name": "toy", "colour": 1,"#);
        assert!(validate(&text, Path::new("."), mold("#P0 #P1"))[0].starts_with("parse error"));
        assert!(validate("{", Path::new("."), mold(""))[0].starts_with("parse error"));
        let text = MINIMAL.replace(r#""flag_preset""#, r#""mock_objective": "ackley", "flag_preset""#);
        assert!(validate(&text, Path::new("."), mold("#P0 #P1"))[0].starts_with("parse error"));
    }

    #[test]
    fn reserved_names_are_diagnosed() {
        let text = MINIMAL.replace(r#""name": "P1""#, r#""name": "status""#);
        let d = validate(&text, Path::new("."), mold("#P0"));
        assert!(d.iter().any(|m| m.contains("reserved")), "{d:?}");
    }
}
