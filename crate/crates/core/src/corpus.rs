//! Shipped problems, molds and compiler flag presets.
//!
//! The problem files under `problems/` and the molds under `molds/` are
//! embedded in the binary, so `pragmatune tune syr2k` works from any
//! directory.

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::problem::{Problem, ProblemError};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("unknown flag preset `{0}` (expected baseline_O3, polly or polly_noheuristic)")]
    UnknownPreset(String),
    #[error("no shipped problem named `{0}`")]
    UnknownProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlagPreset {
    pub name: &'static str,
    pub flags: &'static [&'static str],
}

const POLLY: &[&str] = &[
    "-std=c99",
    "-fno-unroll-loops",
    "-O3",
    "-mllvm",
    "-polly",
    "-mllvm",
    "-polly-process-unprofitable",
    "-mllvm",
    "-polly-use-llvm-names",
    "-ffast-math",
    "-march=native",
];

const POLLY_NOHEURISTIC: &[&str] = &[
    "-std=c99",
    "-fno-unroll-loops",
    "-O3",
    "-mllvm",
    "-polly",
    "-mllvm",
    "-polly-process-unprofitable",
    "-mllvm",
    "-polly-use-llvm-names",
    "-ffast-math",
    "-march=native",
    "-mllvm",
    "-polly-reschedule=0",
    "-mllvm",
    "-polly-postopts=0",
    "-mllvm",
    "-polly-pragma-ignore-depcheck",
];

pub const PRESETS: [FlagPreset; 3] = [
    FlagPreset {
        name: "baseline_O3",
        flags: &["-O3"],
    },
    FlagPreset {
        name: "polly",
        flags: POLLY,
    },
    FlagPreset {
        name: "polly_noheuristic",
        flags: POLLY_NOHEURISTIC,
    },
];

pub fn get_preset(name: &str) -> Result<FlagPreset, CorpusError> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .copied()
        .ok_or_else(|| CorpusError::UnknownPreset(name.to_string()))
}

const PROBLEMS: [(&str, &str); 8] = [
    ("syr2k", include_str!("../../../problems/syr2k.json")),
    ("3mm", include_str!("../../../problems/3mm.json")),
    ("lu", include_str!("../../../problems/lu.json")),
    ("heat-3d", include_str!("../../../problems/heat-3d.json")),
    ("covariance", include_str!("../../../problems/covariance.json")),
    ("floyd-warshall", include_str!("../../../problems/floyd-warshall.json")),
    ("mock_syr2k", include_str!("../../../problems/mock_syr2k.json")),
    ("mock_tiny", include_str!("../../../problems/mock_tiny.json")),
];

const MOLDS: [(&str, &str); 7] = [
    ("syr2k.c", include_str!("../../../molds/syr2k.c")),
    ("3mm.c", include_str!("../../../molds/3mm.c")),
    ("lu.c", include_str!("../../../molds/lu.c")),
    ("heat-3d.c", include_str!("../../../molds/heat-3d.c")),
    ("covariance.c", include_str!("../../../molds/covariance.c")),
    ("floyd-warshall.c", include_str!("../../../molds/floyd-warshall.c")),
    ("tiny.c", include_str!("../../../molds/tiny.c")),
];

pub fn list_problems() -> Vec<&'static str> {
    PROBLEMS.iter().map(|(n, _)| *n).collect()
}

pub fn problem_text(name: &str) -> Option<&'static str> {
    PROBLEMS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Reads an embedded mold by the file name of `path`.
pub fn read_embedded_mold(path: &Path) -> io::Result<String> {
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or("");
    MOLDS
        .iter()
        .find(|(n, _)| *n == file)
        .map(|(_, t)| t.to_string())
        .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("no embedded mold `{file}`")))
}

/// Loads a shipped problem from the embedded copies.
pub fn load(name: &str) -> Result<Problem, ProblemError> {
    let text = problem_text(name).ok_or_else(|| {
        ProblemError::Invalid(vec![CorpusError::UnknownProblem(name.to_string()).to_string()])
    })?;
    Problem::from_json(text, Path::new("problems"), read_embedded_mold)
}
