//! The tuning loop.
//!
//! An initial design (Latin hypercube when the space has ordinals, uniform
//! otherwise) is followed by model-guided proposals: fit a surrogate on the
//! successful records, score a candidate pool by lower confidence bound and
//! take the best configuration that has not been recorded yet. Every
//! proposal consumes one unit of budget, duplicates included.
//!
//! In GP mode proposals are plain random draws and the database is only
//! used to skip repeats, so a small space fills up with duplicates.

use std::collections::HashSet;

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::evaluator::{Evaluator, EvaluatorError, Status};
use crate::perfdb::{Clock, EvalRecord, PerfDb, PerfDbError};
use crate::space::{sample_lhs, sample_random, Configuration, ParamSpace, SpaceError};
use crate::surrogate::{
    self, Learner, Prediction, SurrogateError, SurrogateModel, SurrogateOptions, TargetTransform, TrainingSet,
};

pub const DEFAULT_MAX_EVALS: usize = 100;
pub const DEFAULT_N_INIT: usize = 10;
pub const DEFAULT_KAPPA: f64 = 1.96;
pub const DEFAULT_CANDIDATE_POOL: usize = 4096;

/// When the candidate pool holds no unseen configuration, spaces up to this
/// size are enumerated to look for one.
pub const ENUMERATION_FALLBACK_LIMIT: u64 = 1 << 20;

#[derive(Error, Debug)]
pub enum OptimizerError {
    #[error("invalid tuning options: {0}")]
    InvalidOptions(String),
    #[error("tuning needs an empty performance database")]
    DbNotEmpty,
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
    #[error(transparent)]
    PerfDb(#[from] PerfDbError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("no evaluation finished successfully")]
    NoSuccessfulEvaluation,
    #[error("trace has no successful evaluation")]
    EmptyTrace,
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    /// Number of proposals, duplicates included.
    pub max_evals: usize,
    pub learner: Learner,
    /// Initial design size, capped at `max_evals`.
    pub n_init: usize,
    pub kappa: f64,
    pub candidate_pool: usize,
    pub seed: u64,
    pub clock: Clock,
    pub surrogate: SurrogateOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            max_evals: DEFAULT_MAX_EVALS,
            learner: Learner::RandomForest,
            n_init: DEFAULT_N_INIT,
            kappa: DEFAULT_KAPPA,
            candidate_pool: DEFAULT_CANDIDATE_POOL,
            seed: 0,
            clock: Clock::System,
            surrogate: SurrogateOptions::default(),
        }
    }
}

impl TuneOptions {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::InvalidOptions(m.to_string()));
        if self.max_evals == 0 {
            return bad("max_evals must be at least 1");
        }
        if self.n_init == 0 {
            return bad("n_init must be at least 1");
        }
        if self.candidate_pool == 0 {
            return bad("candidate_pool must be at least 1");
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be a non-negative number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: EvalRecord,
    /// Index at which the best objective first appeared.
    pub best_index: usize,
    /// Proposals that were actually evaluated (not duplicates).
    pub evaluated: usize,
    pub proposed: usize,
    pub trace: Vec<EvalRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Proposal {
    Fresh(Configuration),
    /// Repeats the configuration already recorded at index `of`.
    Duplicate { config: Configuration, of: usize },
    /// Every configuration of the space has been recorded.
    Exhausted,
}

/// Lower confidence bound; smaller is more promising.
pub fn lcb(pred: Prediction, kappa: f64) -> f64 {
    pred.mean - kappa * pred.sigma
}

/// Position of the lowest score, first one on ties.
fn argmin(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

fn score(model: &SurrogateModel, space: &ParamSpace, pool: &[Configuration], kappa: f64) -> Result<Vec<f64>, SurrogateError> {
    let xs: Vec<Vec<f64>> = pool.iter().map(|c| space.encode(c)).collect();
    Ok(model
        .predict_latent(&xs)?
        .into_iter()
        .map(|p| {
            let s = lcb(p, kappa);
            if s.is_nan() {
                f64::INFINITY
            } else {
                s
            }
        })
        .collect())
}

/// Scores a candidate pool and returns the lowest-LCB configuration that is
/// not in `db`.
///
/// The pool is the whole space when it has at most `candidate_pool`
/// configurations, otherwise `candidate_pool` random draws. If every pool
/// member is already recorded, small spaces are enumerated for an unseen
/// configuration; in larger spaces the best pool member is returned as a
/// duplicate.
pub fn propose<R: Rng + ?Sized>(
    model: &SurrogateModel,
    space: &ParamSpace,
    db: &PerfDb,
    rng: &mut R,
    opts: &TuneOptions,
) -> Result<Proposal, OptimizerError> {
    let size = space.size()?;
    let full = size <= opts.candidate_pool as u64;
    let pool = if full {
        space.enumerate(size)?
    } else {
        let mut distinct = HashSet::new();
        let mut draws = sample_random(space, rng, opts.candidate_pool);
        draws.retain(|c| distinct.insert(c.clone()));
        draws
    };
    let fresh: Vec<Configuration> = pool.iter().filter(|c| db.contains(c).is_none()).cloned().collect();
    if !fresh.is_empty() {
        let scores = score(model, space, &fresh, opts.kappa)?;
        let i = argmin(&scores).expect("fresh pool is non-empty");
        return Ok(Proposal::Fresh(fresh[i].clone()));
    }
    if full {
        return Ok(Proposal::Exhausted);
    }
    if size <= ENUMERATION_FALLBACK_LIMIT {
        let unseen: Vec<Configuration> = space
            .enumerate(size)?
            .into_iter()
            .filter(|c| db.contains(c).is_none())
            .collect();
        let scores = score(model, space, &unseen, opts.kappa)?;
        return Ok(match argmin(&scores) {
            Some(i) => Proposal::Fresh(unseen[i].clone()),
            None => Proposal::Exhausted,
        });
    }
    let scores = score(model, space, &pool, opts.kappa)?;
    let i = argmin(&scores).expect("pool is non-empty");
    let of = db.contains(&pool[i]).expect("every pool member is recorded");
    Ok(Proposal::Duplicate {
        config: pool[i].clone(),
        of,
    })
}

/// Fits the learner on every successful record, or returns `None` when
/// there is none yet.
fn fit_on_db(db: &PerfDb, opts: &TuneOptions, seed: u64) -> Result<Option<SurrogateModel>, SurrogateError> {
    let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = db
        .records()
        .iter()
        .filter(|r| r.status == Status::Ok)
        .map(|r| (db.space().encode(&r.config), r.objective.expect("ok record has objective")))
        .unzip();
    if ys.is_empty() {
        return Ok(None);
    }
    let mut sopts = opts.surrogate.clone();
    if sopts.transform == TargetTransform::Log && ys.iter().any(|&y| y <= 0.0) {
        debug!("non-positive objective seen; fitting untransformed targets");
        sopts.transform = TargetTransform::Identity;
    }
    let data = TrainingSet::new(xs, ys)?;
    surrogate::fit(opts.learner, &data, seed, &sopts).map(Some)
}

fn random_proposal<R: Rng + ?Sized>(space: &ParamSpace, db: &PerfDb, rng: &mut R) -> Proposal {
    let config = sample_random(space, rng, 1).pop().expect("one draw");
    match db.contains(&config) {
        Some(of) => Proposal::Duplicate { config, of },
        None => Proposal::Fresh(config),
    }
}

fn record(
    config: Configuration,
    evaluator: &mut dyn Evaluator,
    db: &mut PerfDb,
    clock: Clock,
) -> Result<(), OptimizerError> {
    let index = db.next_index();
    let rec = match db.contains(&config) {
        Some(first) => {
            debug!("proposal {index} repeats record {first}");
            EvalRecord {
                index,
                config,
                objective: None,
                elapsed: 0.0,
                status: Status::Duplicate,
                duplicate_of: Some(first),
                timestamp: clock.stamp(index),
            }
        }
        None => {
            let m = evaluator.evaluate(index, &config)?;
            if let Some(d) = &m.diagnostics {
                warn!("evaluation {index}: {}: {}", m.status, d.lines().next().unwrap_or(""));
            }
            EvalRecord {
                index,
                config,
                objective: m.objective,
                elapsed: m.elapsed,
                status: m.status,
                duplicate_of: None,
                timestamp: clock.stamp(index),
            }
        }
    };
    db.append(rec)?;
    Ok(())
}

/// Runs the full loop, appending one record per proposal to `db`.
pub fn tune(
    space: &ParamSpace,
    opts: &TuneOptions,
    evaluator: &mut dyn Evaluator,
    db: &mut PerfDb,
) -> Result<TuneResult, OptimizerError> {
    opts.validate()?;
    if !db.is_empty() {
        return Err(OptimizerError::DbNotEmpty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n0 = opts.n_init.min(opts.max_evals);
    let init = if space.has_ordinal() {
        sample_lhs(space, &mut rng, n0)
    } else {
        sample_random(space, &mut rng, n0)
    };
    let mut proposed = 0;
    for config in init {
        record(config, evaluator, db, opts.clock)?;
        proposed += 1;
    }

    while proposed < opts.max_evals {
        let next = match opts.learner {
            Learner::GaussianProcess => random_proposal(space, db, &mut rng),
            _ => {
                let seed: u64 = rng.random();
                match fit_on_db(db, opts, seed)? {
                    Some(model) => propose(&model, space, db, &mut rng, opts)?,
                    None => random_proposal(space, db, &mut rng),
                }
            }
        };
        let config = match next {
            Proposal::Fresh(c) | Proposal::Duplicate { config: c, .. } => c,
            Proposal::Exhausted => {
                info!("space exhausted after {proposed} proposals");
                break;
            }
        };
        record(config, evaluator, db, opts.clock)?;
        proposed += 1;
    }

    let best = match db.find_min() {
        Ok(b) => b.clone(),
        Err(PerfDbError::NoSuccessfulEvaluation) => return Err(OptimizerError::NoSuccessfulEvaluation),
        Err(e) => return Err(e.into()),
    };
    Ok(TuneResult {
        best_index: best.index,
        best,
        evaluated: db.len() - db.counts().duplicate,
        proposed,
        trace: db.records().to_vec(),
    })
}

/// Prefix minimum of the successful objectives, one entry per record from
/// the first successful one onwards. Failed and duplicate records repeat the
/// current best.
pub fn best_so_far(trace: &[EvalRecord]) -> Result<Vec<(usize, f64)>, OptimizerError> {
    let mut best: Option<f64> = None;
    let mut out = Vec::with_capacity(trace.len());
    for r in trace {
        if let (Status::Ok, Some(v)) = (r.status, r.objective) {
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        if let Some(b) = best {
            out.push((r.index, b));
        }
    }
    if out.is_empty() {
        return Err(OptimizerError::EmptyTrace);
    }
    Ok(out)
}
