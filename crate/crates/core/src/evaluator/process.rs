//! Compile-and-run evaluation through child processes.
//!
//! Command templates are split on whitespace first and placeholders are
//! substituted per argument, so paths with spaces stay single arguments and
//! no shell is involved. A lone `{flags}` argument expands to the problem's
//! flag preset.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info};

use super::{parse_last_float, Evaluator, EvaluatorError, Measurement, MeasurementPolicy, ObjectiveSource, Status};
use crate::space::{Configuration, ParamSpace};
use crate::templater::{instantiate, CodeMold};

/// Set in the environment of every compile and run command.
pub const EVAL_INDEX_ENV: &str = "PRAGMATUNE_EVAL_INDEX";

const MAX_POLL: Duration = Duration::from_millis(10);

/// Splits `template` on whitespace and substitutes `{src}`, `{bin}` and a
/// standalone `{flags}` argument.
pub fn split_template(template: &str, src: &str, bin: &str, flags: &[String]) -> Vec<String> {
    let mut argv = Vec::new();
    for word in template.split_whitespace() {
        if word == "{flags}" {
            argv.extend(flags.iter().cloned());
        } else {
            argv.push(word.replace("{src}", src).replace("{bin}", bin));
        }
    }
    argv
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildCommands {
    pub compile: String,
    pub run: String,
    pub flags: Vec<String>,
}

/// Evaluates configurations by generating, compiling and timing code.
/// Each evaluation works in `<out_dir>/eval_<index>/`.
#[derive(Debug, Clone)]
pub struct CompiledEvaluator {
    space: ParamSpace,
    mold: CodeMold,
    source_name: String,
    commands: BuildCommands,
    policy: MeasurementPolicy,
    out_dir: PathBuf,
}

struct Outcome {
    status: Option<ExitStatus>,
    stdout: String,
    stderr: String,
    wall: f64,
}

impl CompiledEvaluator {
    pub fn new(
        space: ParamSpace,
        mold: CodeMold,
        source_name: &str,
        commands: BuildCommands,
        policy: MeasurementPolicy,
        out_dir: &Path,
    ) -> Result<Self, EvaluatorError> {
        if commands.compile.trim().is_empty() || commands.run.trim().is_empty() {
            return Err(EvaluatorError::EmptyCommand);
        }
        let out_dir = std::path::absolute(out_dir)
            .map_err(|e| EvaluatorError::io(format!("resolving {}", out_dir.display()), e))?;
        Ok(Self {
            space,
            mold,
            source_name: source_name.to_string(),
            commands,
            policy,
            out_dir,
        })
    }

    pub fn eval_dir(&self, index: usize) -> PathBuf {
        self.out_dir.join(format!("eval_{index}"))
    }

    fn binary_name(&self) -> &str {
        Path::new(&self.source_name)
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .unwrap_or("a.out")
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.policy.timeout_sec)
    }

    fn run_once(&self, index: usize, config: &Configuration) -> Result<Measurement, EvaluatorError> {
        let started = Instant::now();
        let elapsed = || started.elapsed().as_secs_f64();
        let dir = self.eval_dir(index);
        std::fs::create_dir_all(&dir)
            .map_err(|e| EvaluatorError::io(format!("creating {}", dir.display()), e))?;
        let src = dir.join(&self.source_name);
        let bin = dir.join(self.binary_name());
        let text = instantiate(&self.mold, &self.space.bindings(config))?;
        std::fs::write(&src, text)
            .map_err(|e| EvaluatorError::io(format!("writing {}", src.display()), e))?;

        let (src_s, bin_s) = (src.to_string_lossy(), bin.to_string_lossy());
        let compile = split_template(&self.commands.compile, &src_s, &bin_s, &self.commands.flags);
        let run = split_template(&self.commands.run, &src_s, &bin_s, &self.commands.flags);
        debug!("eval {index}: {}", compile.join(" "));

        let out = match run_command(&compile, self.timeout(), index) {
            Ok(o) => o,
            Err(e) => {
                return Ok(Measurement::failed(
                    Status::CompileError,
                    elapsed(),
                    format!("cannot start `{}`: {e}", compile[0]),
                ))
            }
        };
        match out.status {
            None => return Ok(Measurement::failed(Status::Timeout, elapsed(), "compile timed out")),
            Some(s) if !s.success() => {
                let diag = format!("{}{}", out.stderr, out.stdout);
                return Ok(Measurement::failed(Status::CompileError, elapsed(), diag));
            }
            Some(_) => {}
        }

        let mut runs = Vec::with_capacity(self.policy.repeats);
        for _ in 0..self.policy.repeats {
            let out = match run_command(&run, self.timeout(), index) {
                Ok(o) => o,
                Err(e) => {
                    return Ok(Measurement::failed(
                        Status::RunError,
                        elapsed(),
                        format!("cannot start `{}`: {e}", run[0]),
                    ))
                }
            };
            match out.status {
                None => return Ok(Measurement::failed(Status::Timeout, elapsed(), "run timed out")),
                Some(s) if !s.success() => {
                    let diag = format!("exit {s}: {}", out.stderr);
                    return Ok(Measurement::failed(Status::RunError, elapsed(), diag));
                }
                Some(_) => {}
            }
            let seconds = match self.policy.objective_source {
                ObjectiveSource::Walltime => out.wall,
                ObjectiveSource::ProgramStdout => match parse_last_float(&out.stdout) {
                    Some(v) => v,
                    None => {
                        return Ok(Measurement::failed(
                            Status::RunError,
                            elapsed(),
                            "program printed no number on stdout",
                        ))
                    }
                },
            };
            runs.push(seconds);
        }
        Ok(Measurement::ok(runs, self.policy.aggregation, elapsed()))
    }
}

impl Evaluator for CompiledEvaluator {
    fn evaluate(&mut self, index: usize, config: &Configuration) -> Result<Measurement, EvaluatorError> {
        let m = self.run_once(index, config)?;
        match m.objective {
            Some(v) => info!("eval {index}: {v} s"),
            None => info!("eval {index}: {}", m.status),
        }
        Ok(m)
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

/// Runs `argv` to completion or until `timeout`; `status` is `None` when the
/// child was killed.
fn run_command(argv: &[String], timeout: Duration, index: usize) -> std::io::Result<Outcome> {
    let (prog, args) = argv
        .split_first()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty command"))?;
    let mut cmd = Command::new(prog);
    cmd.args(args)
        .env(EVAL_INDEX_ENV, index.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
    let mut child = cmd.spawn()?;
    let started = Instant::now();
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());

    let mut poll = Duration::from_micros(100);
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break Some(s);
        }
        if started.elapsed() >= timeout {
            kill_tree(&mut child)?;
            child.wait()?;
            break None;
        }
        thread::sleep(poll);
        poll = (poll * 2).min(MAX_POLL);
    };
    let wall = started.elapsed().as_secs_f64();
    let (stdout, stderr) = match status {
        Some(_) => (out.join().unwrap_or_default(), err.join().unwrap_or_default()),
        None => (String::new(), String::new()),
    };
    Ok(Outcome {
        status,
        stdout,
        stderr,
        wall,
    })
}

/// Kills the child and everything it started.
fn kill_tree(child: &mut Child) -> std::io::Result<()> {
    #[cfg(unix)]
    {
        let pgid = child.id() as libc::pid_t;
        // SAFETY: kill(2) has no memory-safety preconditions.
        if unsafe { libc::kill(-pgid, libc::SIGKILL) } == 0 {
            return Ok(());
        }
    }
    child.kill()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::Aggregation;
    use crate::space::Parameter;

    #[test]
    fn placeholders_are_substituted_after_splitting() {
        let flags = vec!["-O3".to_string(), "-march=native".to_string()];
        let argv = split_template("cc {flags} {src} -o {bin} -lm", "/a b/x.c", "/a b/x", &flags);
        assert_eq!(argv, ["cc", "-O3", "-march=native", "/a b/x.c", "-o", "/a b/x", "-lm"]);
        assert_eq!(split_template("  {bin}  ", "s", "b", &[]), ["b"]);
    }

    fn shell_evaluator(
        dir: &Path,
        mold: &str,
        compile: &str,
        run: &str,
        policy: MeasurementPolicy,
    ) -> CompiledEvaluator {
        let space = ParamSpace::new(vec![Parameter::ordinal("PN", vec!["1", "2"], "1")], vec![], 0).unwrap();
        CompiledEvaluator::new(
            space,
            CodeMold::new(mold),
            "prog.sh",
            BuildCommands {
                compile: compile.into(),
                run: run.into(),
                flags: vec![],
            },
            policy,
            dir,
        )
        .unwrap()
    }

    fn config() -> Configuration {
        Configuration::from_slots(vec![Some(1)])
    }

    #[test]
    #[cfg(unix)]
    fn stdout_objective_is_aggregated() {
        let dir = tempfile::tempdir().unwrap();
        let mold = "echo start; echo 0.$((#PN + $PRAGMATUNE_EVAL_INDEX))\n";
        let mut ev = shell_evaluator(dir.path(), mold, "cp {src} {bin}", "sh {bin}", MeasurementPolicy::default());
        let m = ev.evaluate(4, &config()).unwrap();
        assert_eq!(m.status, Status::Ok);
        assert_eq!(m.runs, vec![0.6; 3]);
        assert_eq!(m.objective, Some(0.6));
        assert!(dir.path().join("eval_4/prog.sh").exists());
        assert!(dir.path().join("eval_4/prog").exists());
    }

    #[test]
    #[cfg(unix)]
    fn compile_failure_keeps_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let mold = "echo broken #PN >&2; exit 1\n";
        let mut ev = shell_evaluator(dir.path(), mold, "sh {src}", "true", MeasurementPolicy::default());
        let m = ev.evaluate(1, &config()).unwrap();
        assert_eq!(m.status, Status::CompileError);
        assert!(m.objective.is_none() && m.runs.is_empty());
        assert!(m.diagnostics.unwrap().contains("broken 2"));
    }

    #[test]
    #[cfg(unix)]
    fn missing_compiler_is_a_compile_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut ev = shell_evaluator(dir.path(), "#PN", "no-such-compiler-xyz {src}", "{bin}", MeasurementPolicy::default());
        assert_eq!(ev.evaluate(1, &config()).unwrap().status, Status::CompileError);
    }

    #[test]
    #[cfg(unix)]
    fn run_failure_and_silent_program() {
        let dir = tempfile::tempdir().unwrap();
        let mut ev = shell_evaluator(dir.path(), "#PN", "true", "false", MeasurementPolicy::default());
        assert_eq!(ev.evaluate(1, &config()).unwrap().status, Status::RunError);
        let mut ev = shell_evaluator(dir.path(), "#PN", "true", "true", MeasurementPolicy::default());
        let m = ev.evaluate(2, &config()).unwrap();
        assert_eq!(m.status, Status::RunError);
        assert!(m.diagnostics.unwrap().contains("no number"));
    }

    #[test]
    #[cfg(unix)]
    fn slow_run_times_out() {
        let dir = tempfile::tempdir().unwrap();
        let policy = MeasurementPolicy {
            timeout_sec: 0.2,
            ..Default::default()
        };
        let mut ev = shell_evaluator(dir.path(), "#PN", "true", "sleep 5", policy);
        let t = Instant::now();
        let m = ev.evaluate(1, &config()).unwrap();
        assert_eq!(m.status, Status::Timeout);
        assert!(t.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn timeout_kills_grandchildren_holding_the_pipes() {
        let dir = tempfile::tempdir().unwrap();
        let policy = MeasurementPolicy {
            timeout_sec: 0.2,
            ..Default::default()
        };
        let mut ev = shell_evaluator(dir.path(), "sleep 5\necho #PN\n", "cp {src} {bin}", "sh {bin}", policy);
        let t = Instant::now();
        let m = ev.evaluate(1, &config()).unwrap();
        assert_eq!(m.status, Status::Timeout);
        assert!(t.elapsed() < Duration::from_secs(2), "{:?}", t.elapsed());
    }

    #[test]
    #[cfg(unix)]
    fn walltime_source_measures_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let policy = MeasurementPolicy {
            repeats: 2,
            aggregation: Aggregation::Mean,
            objective_source: ObjectiveSource::Walltime,
            ..Default::default()
        };
        let mut ev = shell_evaluator(dir.path(), "#PN", "true", "sleep 0.05", policy);
        let m = ev.evaluate(1, &config()).unwrap();
        assert_eq!(m.status, Status::Ok);
        assert!(m.runs.iter().all(|&r| (0.04..2.0).contains(&r)), "{:?}", m.runs);
        assert!(m.elapsed >= m.runs.iter().sum::<f64>());
    }
}
