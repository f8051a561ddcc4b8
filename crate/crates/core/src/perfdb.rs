//! Append-only performance database backed by `results.csv` and
//! `results.json`.
//!
//! Every proposal becomes a record, including duplicates, which point at the
//! record they repeat through `duplicate_of`. Objectives and elapsed times
//! are rounded to six decimals before they are stored, so the in-memory
//! database and the files always agree.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::evaluator::Status;
use crate::space::{Configuration, ParamSpace};

pub const CSV_FILE: &str = "results.csv";
pub const JSON_FILE: &str = "results.json";

/// Columns that follow the parameter columns in `results.csv`.
pub const TRAILING_COLUMNS: [&str; 5] = ["objective", "elapsed_sec", "status", "duplicate_of", "timestamp"];

#[derive(Error, Debug)]
pub enum PerfDbError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("record index {got} does not follow {expected}")]
    IndexGap { expected: usize, got: usize },
    #[error("invalid record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error("parameter name `{0}` collides with a results column")]
    ReservedName(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{file} record {record}: {message}")]
    ParseError {
        file: &'static str,
        record: usize,
        message: String,
    },
    #[error("results.csv and results.json disagree: {0}")]
    ConsistencyError(String),
    #[error("no evaluation finished successfully")]
    NoSuccessfulEvaluation,
}

type Result<T> = std::result::Result<T, PerfDbError>;

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> PerfDbError {
    let context = context.into();
    move |source| PerfDbError::Io { context, source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// 1-based position in the database.
    pub index: usize,
    pub config: Configuration,
    pub objective: Option<f64>,
    pub elapsed: f64,
    pub status: Status,
    pub duplicate_of: Option<usize>,
    pub timestamp: DateTime<Utc>,
}

/// Source of record timestamps. `Logical` stamps record `i` with the epoch
/// plus `i` seconds, which keeps seeded mock runs byte-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    System,
    Logical,
}

impl Clock {
    pub fn stamp(self, index: usize) -> DateTime<Utc> {
        let secs = match self {
            Clock::System => Utc::now().timestamp(),
            Clock::Logical => index as i64,
        };
        DateTime::from_timestamp(secs, 0).expect("timestamp in range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub ok: usize,
    pub failed: usize,
    pub duplicate: usize,
}

#[derive(Debug, Clone)]
pub struct PerfDb {
    space: ParamSpace,
    records: Vec<EvalRecord>,
    first_by_config: HashMap<Configuration, usize>,
    dir: Option<PathBuf>,
}

/// Rounds to six decimals through the same text form the files use.
pub fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

/// Six-decimal text with trailing zeros trimmed, as written to the results files.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn fmt_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl PerfDb {
    /// A database that is never written to disk.
    pub fn in_memory(space: &ParamSpace) -> Result<Self> {
        for name in space.names() {
            if name == "index" || TRAILING_COLUMNS.contains(&name) {
                return Err(PerfDbError::ReservedName(name.to_string()));
            }
        }
        Ok(Self {
            space: space.clone(),
            records: Vec::new(),
            first_by_config: HashMap::new(),
            dir: None,
        })
    }

    /// Creates (or truncates) the results files in `dir`.
    pub fn create(space: &ParamSpace, dir: &Path) -> Result<Self> {
        let mut db = Self::in_memory(space)?;
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
        let csv_path = dir.join(CSV_FILE);
        let mut w = csv::Writer::from_path(&csv_path)
            .map_err(|e| csv_io(e, &csv_path))?;
        w.write_record(db.header()).map_err(|e| csv_io(e, &csv_path))?;
        w.flush().map_err(io_err(format!("writing {}", csv_path.display())))?;
        db.dir = Some(dir.to_path_buf());
        db.write_json()?;
        Ok(db)
    }

    /// Reads both results files and checks that they agree.
    pub fn load(space: &ParamSpace, dir: &Path) -> Result<Self> {
        let mut db = Self::in_memory(space)?;
        let from_csv = db.read_csv(&dir.join(CSV_FILE))?;
        let from_json = db.read_json(&dir.join(JSON_FILE))?;
        if from_csv.len() != from_json.len() {
            return Err(PerfDbError::ConsistencyError(format!(
                "{} CSV rows but {} JSON records",
                from_csv.len(),
                from_json.len()
            )));
        }
        if let Some((a, _)) = from_csv.iter().zip(&from_json).find(|(a, b)| a != b) {
            return Err(PerfDbError::ConsistencyError(format!("record {} differs", a.index)));
        }
        for r in from_csv {
            db.push(r)?;
        }
        db.dir = Some(dir.to_path_buf());
        Ok(db)
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn next_index(&self) -> usize {
        self.records.len() + 1
    }

    /// Directory holding the results files, if the database is persisted.
    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Validates, rounds and stores `record`, then persists it to both
    /// files before returning.
    pub fn append(&mut self, mut record: EvalRecord) -> Result<&EvalRecord> {
        record.objective = record.objective.map(round6);
        record.elapsed = round6(record.elapsed);
        self.push(record)?;
        if self.dir.is_some() {
            self.append_csv()?;
            self.write_json()?;
        }
        Ok(self.records.last().expect("just pushed"))
    }

    /// Index of the first record holding `config`.
    pub fn contains(&self, config: &Configuration) -> Option<usize> {
        self.first_by_config.get(config).copied()
    }

    /// The successful record with the smallest objective; the lowest index
    /// wins ties.
    pub fn find_min(&self) -> Result<&EvalRecord> {
        let mut best: Option<&EvalRecord> = None;
        for r in &self.records {
            if let (Status::Ok, Some(v)) = (r.status, r.objective) {
                if best.is_none_or(|b| v < b.objective.expect("ok record has objective")) {
                    best = Some(r);
                }
            }
        }
        best.ok_or(PerfDbError::NoSuccessfulEvaluation)
    }

    pub fn counts(&self) -> Counts {
        let mut c = Counts::default();
        for r in &self.records {
            match r.status {
                Status::Ok => c.ok += 1,
                Status::Duplicate => c.duplicate += 1,
                _ => c.failed += 1,
            }
        }
        c
    }

    fn push(&mut self, record: EvalRecord) -> Result<()> {
        let expected = self.next_index();
        if record.index != expected {
            return Err(PerfDbError::IndexGap {
                expected,
                got: record.index,
            });
        }
        let invalid = |reason: String| PerfDbError::InvalidRecord {
            index: record.index,
            reason,
        };
        self.space.check(&record.config).map_err(|e| invalid(e.to_string()))?;
        if !record.elapsed.is_finite() || record.elapsed < 0.0 {
            return Err(invalid(format!("elapsed time {}", record.elapsed)));
        }
        match (record.status, record.objective) {
            (Status::Ok, Some(v)) if v.is_finite() => {}
            (Status::Ok, _) => return Err(invalid("ok record needs a finite objective".into())),
            (_, Some(_)) => return Err(invalid(format!("{} record carries an objective", record.status))),
            (_, None) => {}
        }
        match (record.status, record.duplicate_of) {
            (Status::Duplicate, Some(d)) => {
                if self.contains(&record.config) != Some(d) {
                    return Err(invalid(format!("duplicate_of {d} is not the first record of this configuration")));
                }
            }
            (Status::Duplicate, None) => return Err(invalid("duplicate record needs duplicate_of".into())),
            (_, Some(_)) => return Err(invalid("only duplicate records carry duplicate_of".into())),
            (_, None) => {
                if let Some(first) = self.contains(&record.config) {
                    return Err(invalid(format!("configuration already evaluated as record {first}")));
                }
            }
        }
        self.first_by_config.entry(record.config.clone()).or_insert(record.index);
        self.records.push(record);
        Ok(())
    }

    fn header(&self) -> Vec<String> {
        self.space
            .names()
            .map(str::to_string)
            .chain(TRAILING_COLUMNS.iter().map(|s| s.to_string()))
            .collect()
    }

    fn csv_row(&self, r: &EvalRecord) -> Vec<String> {
        let mut row: Vec<String> = self
            .space
            .values_of(&r.config)
            .into_iter()
            .map(|v| v.unwrap_or("").to_string())
            .collect();
        row.push(r.objective.map(fmt6).unwrap_or_default());
        row.push(fmt6(r.elapsed));
        row.push(r.status.as_str().to_string());
        row.push(r.duplicate_of.map(|d| d.to_string()).unwrap_or_default());
        row.push(fmt_time(&r.timestamp));
        row
    }

    fn json_record(&self, r: &EvalRecord) -> Value {
        let mut obj = Map::new();
        obj.insert("index".into(), r.index.into());
        for (name, v) in self.space.names().zip(self.space.values_of(&r.config)) {
            obj.insert(name.into(), v.map_or(Value::Null, |s| Value::String(s.into())));
        }
        obj.insert("objective".into(), r.objective.map_or(Value::Null, Value::from));
        obj.insert("elapsed_sec".into(), r.elapsed.into());
        obj.insert("status".into(), r.status.as_str().into());
        obj.insert("duplicate_of".into(), r.duplicate_of.map_or(Value::Null, Value::from));
        obj.insert("timestamp".into(), fmt_time(&r.timestamp).into());
        Value::Object(obj)
    }

    fn append_csv(&self) -> Result<()> {
        let dir = self.dir.as_ref().expect("persisted db");
        let path = dir.join(CSV_FILE);
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(io_err(format!("opening {}", path.display())))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let last = self.records.last().expect("record to append");
        w.write_record(self.csv_row(last)).map_err(|e| csv_io(e, &path))?;
        w.flush().map_err(io_err(format!("writing {}", path.display())))
    }

    fn write_json(&self) -> Result<()> {
        let dir = self.dir.as_ref().expect("persisted db");
        let path = dir.join(JSON_FILE);
        let tmp = dir.join(format!("{JSON_FILE}.tmp"));
        let doc = Value::Array(self.records.iter().map(|r| self.json_record(r)).collect());
        let mut text = serde_json::to_string_pretty(&doc).expect("json values serialize");
        text.push('\n');
        let mut f = File::create(&tmp).map_err(io_err(format!("creating {}", tmp.display())))?;
        f.write_all(text.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(io_err(format!("writing {}", tmp.display())))?;
        fs::rename(&tmp, &path).map_err(io_err(format!("renaming to {}", path.display())))
    }

    fn read_csv(&self, path: &Path) -> Result<Vec<EvalRecord>> {
        let mut rd = csv::Reader::from_path(path).map_err(|e| csv_io(e, path))?;
        let header: Vec<String> = rd
            .headers()
            .map_err(|e| parse_err(CSV_FILE, 0, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let expected = self.header();
        if header != expected {
            let missing: Vec<&String> = expected.iter().filter(|c| !header.contains(c)).collect();
            let extra: Vec<&String> = header.iter().filter(|c| !expected.contains(c)).collect();
            return Err(PerfDbError::SchemaMismatch(format!(
                "expected columns {expected:?}; missing {missing:?}, unexpected {extra:?}"
            )));
        }
        let n = self.space.len();
        let mut out = Vec::new();
        for (i, row) in rd.records().enumerate() {
            let index = i + 1;
            let row = row.map_err(|e| parse_err(CSV_FILE, index, e))?;
            let field = |j: usize| row.get(j).unwrap_or("");
            let values: Vec<Option<&str>> = (0..n).map(|j| Some(field(j)).filter(|s| !s.is_empty())).collect();
            out.push(self.parse_record(
                CSV_FILE,
                index,
                &values,
                Some(field(n)).filter(|s| !s.is_empty()),
                field(n + 1),
                field(n + 2),
                Some(field(n + 3)).filter(|s| !s.is_empty()),
                field(n + 4),
            )?);
        }
        Ok(out)
    }

    fn read_json(&self, path: &Path) -> Result<Vec<EvalRecord>> {
        let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| parse_err(JSON_FILE, 0, e))?;
        let items = doc
            .as_array()
            .ok_or_else(|| parse_err(JSON_FILE, 0, "top level is not an array"))?;
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let index = i + 1;
            let obj = item
                .as_object()
                .ok_or_else(|| parse_err(JSON_FILE, index, "record is not an object"))?;
            let want: Vec<String> = std::iter::once("index".to_string()).chain(self.header()).collect();
            let keys: Vec<&String> = obj.keys().collect();
            if keys.len() != want.len() || want.iter().any(|k| !obj.contains_key(k)) {
                return Err(PerfDbError::SchemaMismatch(format!(
                    "JSON record {index} has keys {keys:?}, expected {want:?}"
                )));
            }
            if obj["index"].as_u64() != Some(index as u64) {
                return Err(parse_err(JSON_FILE, index, format!("index field is {}", obj["index"])));
            }
            let text_of = |v: &Value, what: &str| -> Result<Option<String>> {
                match v {
                    Value::Null => Ok(None),
                    Value::String(s) => Ok(Some(s.clone())),
                    Value::Number(n) => Ok(Some(n.to_string())),
                    other => Err(parse_err(JSON_FILE, index, format!("{what} has unexpected value {other}"))),
                }
            };
            let owned: Vec<Option<String>> = self
                .space
                .names()
                .map(|name| match &obj[name] {
                    Value::Null => Ok(None),
                    Value::String(s) => Ok(Some(s.clone())),
                    other => Err(parse_err(JSON_FILE, index, format!("`{name}` is {other}"))),
                })
                .collect::<Result<_>>()?;
            let values: Vec<Option<&str>> = owned.iter().map(|v| v.as_deref()).collect();
            let objective = text_of(&obj["objective"], "objective")?;
            let elapsed = text_of(&obj["elapsed_sec"], "elapsed_sec")?.unwrap_or_default();
            let status = text_of(&obj["status"], "status")?.unwrap_or_default();
            let dup = text_of(&obj["duplicate_of"], "duplicate_of")?;
            let stamp = text_of(&obj["timestamp"], "timestamp")?.unwrap_or_default();
            out.push(self.parse_record(
                JSON_FILE,
                index,
                &values,
                objective.as_deref(),
                &elapsed,
                &status,
                dup.as_deref(),
                &stamp,
            )?);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn parse_record(
        &self,
        file: &'static str,
        index: usize,
        values: &[Option<&str>],
        objective: Option<&str>,
        elapsed: &str,
        status: &str,
        duplicate_of: Option<&str>,
        timestamp: &str,
    ) -> Result<EvalRecord> {
        let bad = |m: String| parse_err(file, index, m);
        let config = self.space.parse_values(values).map_err(|e| bad(e.to_string()))?;
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(format!("{what} {s:?} is not a number")));
        Ok(EvalRecord {
            index,
            config,
            objective: objective.map(|s| num(s, "objective")).transpose()?,
            elapsed: num(elapsed, "elapsed_sec")?,
            status: status.parse().map_err(|_| bad(format!("unknown status {status:?}")))?,
            duplicate_of: duplicate_of
                .map(|s| s.parse::<usize>().map_err(|_| bad(format!("duplicate_of {s:?}"))))
                .transpose()?,
            timestamp: DateTime::parse_from_rfc3339(timestamp)
                .map_err(|e| bad(format!("timestamp {timestamp:?}: {e}")))?
                .with_timezone(&Utc),
        })
    }
}

fn csv_io(e: csv::Error, path: &Path) -> PerfDbError {
    let context = format!("accessing {}", path.display());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => PerfDbError::Io { context, source },
        other => PerfDbError::Io {
            context,
            source: std::io::Error::other(format!("{other:?}")),
        },
    }
}

fn parse_err(file: &'static str, record: usize, message: impl ToString) -> PerfDbError {
    PerfDbError::ParseError {
        file,
        record,
        message: message.to_string(),
    }
}
