//! The `pragmatune` command line.
//!
//! Every command writes its normal output to the supplied writer, so a run
//! with `--seed` and the mock evaluator produces the same bytes every time.
//! Progress goes through `log` to stderr.

mod plot;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use thiserror::Error;

use crate::corpus;
use crate::evaluator::{Evaluator, EvaluatorError};
use crate::optimizer::{
    self, OptimizerError, TuneOptions, DEFAULT_CANDIDATE_POOL, DEFAULT_KAPPA, DEFAULT_MAX_EVALS, DEFAULT_N_INIT,
    ENUMERATION_FALLBACK_LIMIT,
};
use crate::perfdb::{fmt6, Clock, EvalRecord, PerfDb, PerfDbError, CSV_FILE, JSON_FILE};
use crate::problem::{self, Problem, ProblemError};
use crate::space::{Configuration, ParamSpace, SpaceDef, SpaceError};
use crate::surrogate::Learner;

pub use plot::{render_svg, trace_rows, TraceRow};

pub const SPACE_FILE: &str = "space.json";
pub const TRACE_CSV: &str = "trace.csv";
pub const DEFAULT_PLOT: &str = "trace.svg";

#[derive(Error, Debug)]
pub enum CliError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{0}")]
    Usage(String),
    #[error("no evaluation finished successfully")]
    NoSuccessfulEvaluation,
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    PerfDb(PerfDbError),
    #[error(transparent)]
    Optimizer(OptimizerError),
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid {SPACE_FILE}: {0}")]
    SpaceFile(serde_json::Error),
    /// `validate` found problems; they have already been printed.
    #[error("{0} problem(s) found")]
    Diagnostics(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Problem(ProblemError::Invalid(_))
            | CliError::Problem(ProblemError::NoMockObjective(_))
            | CliError::Usage(_)
            | CliError::Diagnostics(_) => 2,
            CliError::NoSuccessfulEvaluation => 3,
            _ => 1,
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> Self {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

impl From<PerfDbError> for CliError {
    fn from(e: PerfDbError) -> Self {
        match e {
            PerfDbError::NoSuccessfulEvaluation => CliError::NoSuccessfulEvaluation,
            e => CliError::PerfDb(e),
        }
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::NoSuccessfulEvaluation | OptimizerError::EmptyTrace => CliError::NoSuccessfulEvaluation,
            OptimizerError::InvalidOptions(m) => CliError::Usage(m),
            OptimizerError::PerfDb(e) => e.into(),
            e => CliError::Optimizer(e),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pragmatune", version, about = "Autotune pragma parameters of C kernels")]
pub struct Cli {
    /// Seed for the optimizer's random choices.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for results files and per-evaluation build directories.
    #[arg(long, global = true, default_value = "results")]
    pub out_dir: PathBuf,
    /// Remove the per-evaluation build directories when done.
    #[arg(long, global = true)]
    pub clean: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Search a problem's space and record every evaluation.
    Tune(TuneArgs),
    /// Print the best configuration found in a results directory.
    Report {
        /// Results directory (defaults to --out-dir).
        dir: Option<PathBuf>,
    },
    /// Draw the evaluation trace as SVG and write trace.csv beside it.
    Plot {
        /// Results directory (defaults to --out-dir).
        dir: Option<PathBuf>,
        /// SVG path (defaults to trace.svg in the results directory).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a problem file and list every violation.
    Validate {
        /// Problem file, or the name of a shipped problem.
        problem: String,
    },
    /// Count the configurations of a problem's space.
    Enumerate(EnumerateArgs),
    /// List the shipped problems.
    List,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// Problem file, or the name of a shipped problem.
    pub problem: String,
    /// Number of proposals, duplicates included.
    #[arg(long, visible_alias = "max-vals", default_value_t = DEFAULT_MAX_EVALS)]
    pub max_evals: usize,
    /// Surrogate model: RF, ET, GBRT or GP.
    #[arg(long, default_value = "RF", value_parser = parse_learner)]
    pub learner: Learner,
    /// Size of the initial random design.
    #[arg(long, default_value_t = DEFAULT_N_INIT)]
    pub n_init: usize,
    /// Exploration weight of the lower confidence bound.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Candidates scored per proposal.
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_POOL)]
    pub candidate_pool: usize,
    /// Use the problem's synthetic objective instead of compiling.
    #[arg(long)]
    pub mock: bool,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    /// Problem file, or the name of a shipped problem.
    pub problem: String,
    /// Also count configurations that differ after inactive parameters are dropped.
    #[arg(long)]
    pub distinct: bool,
    /// Largest space --distinct will walk.
    #[arg(long, default_value_t = ENUMERATION_FALLBACK_LIMIT)]
    pub limit: u64,
    /// Print every distinct configuration, one per line.
    #[arg(long)]
    pub list: bool,
}

fn parse_learner(s: &str) -> Result<Learner, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// Runs one parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Tune(args) => cmd_tune(cli, args, out),
        Command::Report { dir } => cmd_report(dir.as_deref().unwrap_or(&cli.out_dir), cli.clean, out),
        Command::Plot { dir, output } => {
            let dir = dir.as_deref().unwrap_or(&cli.out_dir);
            let svg = output.clone().unwrap_or_else(|| dir.join(DEFAULT_PLOT));
            cmd_plot(dir, &svg, out)
        }
        Command::Validate { problem } => cmd_validate(problem, out),
        Command::Enumerate(args) => cmd_enumerate(args, out),
        Command::List => {
            for name in corpus::list_problems() {
                writeln!(out, "{name}").map_err(CliError::io("writing output"))?;
            }
            Ok(())
        }
    }
}

/// A problem argument is a path when such a file exists, else a shipped name.
pub fn load_problem(arg: &str) -> Result<Problem, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        Ok(Problem::load(path)?)
    } else if corpus::problem_text(arg).is_some() {
        Ok(corpus::load(arg)?)
    } else {
        Err(CliError::Usage(format!(
            "`{arg}` is neither a problem file nor a shipped problem ({})",
            corpus::list_problems().join(", ")
        )))
    }
}

fn cmd_tune(cli: &Cli, args: &TuneArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = load_problem(&args.problem)?;
    let use_mock = args.mock || problem.mock_objective.is_some();
    let mut evaluator: Box<dyn Evaluator> = if use_mock {
        Box::new(problem.mock_evaluator()?)
    } else {
        Box::new(problem.compiled_evaluator(&cli.out_dir)?)
    };
    let opts = TuneOptions {
        max_evals: args.max_evals,
        learner: args.learner,
        n_init: args.n_init,
        kappa: args.kappa,
        candidate_pool: args.candidate_pool,
        seed: cli.seed,
        clock: if use_mock { Clock::Logical } else { Clock::System },
        ..TuneOptions::default()
    };
    opts.validate()?;

    let dir = &cli.out_dir;
    for f in [CSV_FILE, JSON_FILE, SPACE_FILE] {
        if dir.join(f).exists() {
            return Err(CliError::Usage(format!(
                "{} already holds results; choose another --out-dir",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let space_json = serde_json::to_string_pretty(&problem.space.to_def()).map_err(CliError::SpaceFile)?;
    fs::write(dir.join(SPACE_FILE), space_json + "\n").map_err(CliError::io(format!("writing {SPACE_FILE}")))?;
    let mut db = PerfDb::create(&problem.space, dir)?;

    info!(
        "tuning {} with {} for {} proposals ({} evaluator)",
        problem.name,
        args.learner,
        args.max_evals,
        if use_mock { "mock" } else { "compiled" }
    );
    let result = optimizer::tune(&problem.space, &opts, evaluator.as_mut(), &mut db);
    if cli.clean {
        clean_eval_dirs(dir)?;
    }
    let counts = db.counts();
    let write = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(CliError::io("writing output"));
    write(out, format!("problem={} learner={}", problem.name, args.learner))?;
    let proposed = db.len();
    write(
        out,
        format!(
            "proposed={proposed} evaluated={} duplicates={} failed={}",
            proposed - counts.duplicate,
            counts.duplicate,
            counts.failed
        ),
    )?;
    let result = result?;
    write_best(out, &problem.space, &result.best)
}

fn write_best(out: &mut dyn Write, space: &ParamSpace, best: &EvalRecord) -> Result<(), CliError> {
    let objective = best.objective.expect("best record is ok");
    let mut text = format!("best={} at evaluation {}\n", fmt6(objective), best.index);
    text.push_str(&format_config(space, &best.config));
    out.write_all(text.as_bytes()).map_err(CliError::io("writing output"))
}

/// One `name=value` line per parameter.
pub fn format_config(space: &ParamSpace, config: &Configuration) -> String {
    space
        .names()
        .zip(space.values_of(config))
        .map(|(n, v)| format!("{n}={}\n", v.unwrap_or("<inactive>")))
        .collect()
}

/// Reads the space and database written by `tune`.
pub fn load_results(dir: &Path) -> Result<PerfDb, CliError> {
    let path = dir.join(SPACE_FILE);
    let text = fs::read_to_string(&path).map_err(CliError::io(format!("reading {}", path.display())))?;
    let def: SpaceDef = serde_json::from_str(&text).map_err(CliError::SpaceFile)?;
    let space = ParamSpace::from_def(&def)?;
    Ok(PerfDb::load(&space, dir)?)
}

fn cmd_report(dir: &Path, clean: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let db = load_results(dir)?;
    if clean {
        clean_eval_dirs(dir)?;
    }
    let c = db.counts();
    writeln!(
        out,
        "records={} ok={} failed={} duplicate={}",
        db.len(),
        c.ok,
        c.failed,
        c.duplicate
    )
    .map_err(CliError::io("writing output"))?;
    let best = db.find_min()?;
    write_best(out, db.space(), best)
}

fn cmd_plot(dir: &Path, svg_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let db = load_results(dir)?;
    let rows = trace_rows(db.records())?;
    let svg = render_svg(&rows);
    if let Some(parent) = svg_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(format!("creating {}", parent.display())))?;
    }
    fs::write(svg_path, svg).map_err(CliError::io(format!("writing {}", svg_path.display())))?;

    let csv_path = svg_path.with_file_name(TRACE_CSV);
    let mut csv = String::from("index,objective,best_so_far\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.index,
            r.objective.map(fmt6).unwrap_or_default(),
            r.best_so_far.map(fmt6).unwrap_or_default()
        ));
    }
    fs::write(&csv_path, csv).map_err(CliError::io(format!("writing {}", csv_path.display())))?;
    writeln!(out, "wrote {} and {}", svg_path.display(), csv_path.display()).map_err(CliError::io("writing output"))
}

fn cmd_validate(arg: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let path = Path::new(arg);
    let diagnostics = if path.is_file() {
        match fs::read_to_string(path) {
            Ok(text) => problem::validate(&text, path.parent().unwrap_or(Path::new(".")), |p| fs::read_to_string(p)),
            Err(e) => vec![format!("cannot read {}: {e}", path.display())],
        }
    } else if let Some(text) = corpus::problem_text(arg) {
        problem::validate(text, Path::new("problems"), corpus::read_embedded_mold)
    } else {
        vec![format!("`{arg}` is neither a problem file nor a shipped problem")]
    };
    let mut text = String::new();
    for d in &diagnostics {
        text.push_str(&format!("{arg}: {d}\n"));
    }
    if diagnostics.is_empty() {
        text.push_str(&format!("{arg}: ok\n"));
    }
    out.write_all(text.as_bytes()).map_err(CliError::io("writing output"))?;
    match diagnostics.len() {
        0 => Ok(()),
        n => Err(CliError::Diagnostics(n)),
    }
}

fn cmd_enumerate(args: &EnumerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = load_problem(&args.problem)?;
    let space = &problem.space;
    let mut text = format!("size={}\n", space.size()?);
    if args.distinct || args.list {
        let all = space.enumerate(args.limit)?;
        if args.distinct {
            text.push_str(&format!("distinct={}\n", all.len()));
        }
        if args.list {
            for c in &all {
                let vals: Vec<&str> = space.values_of(c).into_iter().map(|v| v.unwrap_or("<inactive>")).collect();
                text.push_str(&vals.join("\t"));
                text.push('\n');
            }
        }
    }
    out.write_all(text.as_bytes()).map_err(CliError::io("writing output"))
}

/// Removes the `eval_*` build directories under `dir`.
pub fn clean_eval_dirs(dir: &Path) -> Result<usize, CliError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(CliError::io(format!("listing {}", dir.display()))(e)),
    };
    let mut removed = 0;
    for entry in entries.flatten() {
        let is_eval = entry.file_name().to_string_lossy().starts_with("eval_");
        if is_eval && entry.path().is_dir() {
            match fs::remove_dir_all(entry.path()) {
                Ok(()) => removed += 1,
                Err(e) => warn!("could not remove {}: {e}", entry.path().display()),
            }
        }
    }
    Ok(removed)
}
