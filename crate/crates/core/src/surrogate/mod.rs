//! Uncertainty-bearing regressors over encoded configurations.
//!
//! Four learners are available: random forest, extra trees, gradient-boosted
//! quantile trees and a Gaussian process. Every model answers with a mean and
//! a standard deviation per input row.
//!
//! Targets are fitted in a latent space (by default `ln(seconds)`) because
//! runtimes span orders of magnitude. [`SurrogateModel::predict_latent`]
//! returns latent-space predictions, which is what the acquisition uses;
//! [`SurrogateModel::predict`] maps them back to seconds.

mod forest;
mod gbrt;
mod gp;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;
use forest::{Forest, ForestParams};
use gbrt::{BoostParams, QuantileBooster};
use gp::GaussianProcess;
use tree::Splitter;

pub use gp::{INITIAL_JITTER, LENGTH_SCALE_GRID, MAX_JITTER};

pub type FeatureVector = Vec<f64>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set has {x} feature rows but {y} targets")]
    LengthMismatch { x: usize, y: usize },
    #[error("feature row {0} has a different length from row 0")]
    RaggedFeatures(usize),
    #[error("target {0} is not finite")]
    NonFiniteTarget(usize),
    #[error("target {0} is not positive, so it has no logarithm")]
    NonPositiveTarget(usize),
    #[error("{n} training points exceed the Gaussian-process cap of {cap}")]
    TooManyPoints { n: usize, cap: usize },
    #[error("kernel matrix is singular even with the largest jitter")]
    SingularKernel,
    #[error("expected feature vectors of length {expected}, got {got}")]
    FeatureLengthMismatch { expected: usize, got: usize },
    #[error("unknown learner `{0}` (expected RF, ET, GBRT or GP)")]
    UnknownLearner(String),
    #[error("invalid surrogate options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Learner {
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "ET")]
    ExtraTrees,
    #[serde(rename = "GBRT")]
    GradientBoosting,
    #[serde(rename = "GP")]
    GaussianProcess,
}

impl Learner {
    pub const ALL: [Learner; 4] = [
        Learner::RandomForest,
        Learner::ExtraTrees,
        Learner::GradientBoosting,
        Learner::GaussianProcess,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Learner::RandomForest => "RF",
            Learner::ExtraTrees => "ET",
            Learner::GradientBoosting => "GBRT",
            Learner::GaussianProcess => "GP",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Learner {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Learner::ALL
            .into_iter()
            .find(|l| l.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| SurrogateError::UnknownLearner(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetTransform {
    Log,
    Identity,
}

impl TargetTransform {
    fn forward(self, y: f64) -> f64 {
        match self {
            TargetTransform::Log => y.ln(),
            TargetTransform::Identity => y,
        }
    }

    /// First-order mapping of a latent (mean, sigma) back to target units.
    fn backward(self, p: Prediction) -> Prediction {
        match self {
            TargetTransform::Log => {
                let mean = p.mean.exp();
                Prediction {
                    mean,
                    sigma: mean * p.sigma,
                }
            }
            TargetTransform::Identity => p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateOptions {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub gbrt_stages: usize,
    pub gbrt_learning_rate: f64,
    pub gbrt_max_depth: usize,
    pub gp_max_points: usize,
    pub transform: TargetTransform,
    pub execution: Execution,
}

impl Default for SurrogateOptions {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_leaf: 3,
            gbrt_stages: 30,
            gbrt_learning_rate: 0.1,
            gbrt_max_depth: 3,
            gp_max_points: 1000,
            transform: TargetTransform::Log,
            execution: Execution::default(),
        }
    }
}

/// Validated (features, objective) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    x: Vec<FeatureVector>,
    y: Vec<f64>,
}

impl TrainingSet {
    pub fn new(x: Vec<FeatureVector>, y: Vec<f64>) -> Result<Self, SurrogateError> {
        if x.len() != y.len() {
            return Err(SurrogateError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.is_empty() {
            return Err(SurrogateError::EmptyTrainingSet);
        }
        if let Some(i) = x.iter().position(|r| r.len() != x[0].len()) {
            return Err(SurrogateError::RaggedFeatures(i));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(SurrogateError::NonFiniteTarget(i));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[FeatureVector] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_len(&self) -> usize {
        self.x[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
enum Fitted {
    Forest(Forest),
    Boosted {
        lower: QuantileBooster,
        median: QuantileBooster,
        upper: QuantileBooster,
    },
    Gp(GaussianProcess),
}

#[derive(Debug, Clone)]
pub struct SurrogateModel {
    kind: Learner,
    feature_len: usize,
    transform: TargetTransform,
    execution: Execution,
    fitted: Fitted,
}

/// Quantile levels of the lower, median and upper boosted models.
pub const GBRT_QUANTILES: [f64; 3] = [0.16, 0.5, 0.84];

pub fn fit(
    kind: Learner,
    data: &TrainingSet,
    seed: u64,
    opts: &SurrogateOptions,
) -> Result<SurrogateModel, SurrogateError> {
    if opts.n_trees == 0 {
        return Err(SurrogateError::InvalidOptions("n_trees must be at least 1"));
    }
    if opts.min_leaf == 0 {
        return Err(SurrogateError::InvalidOptions("min_leaf must be at least 1"));
    }
    if opts.transform == TargetTransform::Log {
        if let Some(i) = data.y.iter().position(|&v| v <= 0.0) {
            return Err(SurrogateError::NonPositiveTarget(i));
        }
    }
    let y: Vec<f64> = data.y.iter().map(|&v| opts.transform.forward(v)).collect();
    let x = &data.x;
    let exec = opts.execution;

    let fitted = match kind {
        Learner::RandomForest | Learner::ExtraTrees => {
            let params = ForestParams {
                n_trees: opts.n_trees,
                bootstrap: kind == Learner::RandomForest,
                splitter: if kind == Learner::RandomForest {
                    Splitter::Best
                } else {
                    Splitter::Random
                },
                min_leaf: opts.min_leaf,
            };
            Fitted::Forest(Forest::fit(x, &y, &params, seed, exec))
        }
        Learner::GradientBoosting => {
            let params = BoostParams {
                n_stages: opts.gbrt_stages,
                learning_rate: opts.gbrt_learning_rate,
                max_depth: opts.gbrt_max_depth,
            };
            let mut models = exec
                .map(&GBRT_QUANTILES, |&tau| QuantileBooster::fit(x, &y, tau, &params))
                .into_iter();
            let (lower, median, upper) = (
                models.next().unwrap(),
                models.next().unwrap(),
                models.next().unwrap(),
            );
            Fitted::Boosted {
                lower,
                median,
                upper,
            }
        }
        Learner::GaussianProcess => {
            if data.len() > opts.gp_max_points {
                return Err(SurrogateError::TooManyPoints {
                    n: data.len(),
                    cap: opts.gp_max_points,
                });
            }
            Fitted::Gp(GaussianProcess::fit(x, &y, exec)?)
        }
    };

    Ok(SurrogateModel {
        kind,
        feature_len: data.feature_len(),
        transform: opts.transform,
        execution: exec,
        fitted,
    })
}

impl SurrogateModel {
    pub fn kind(&self) -> Learner {
        self.kind
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn transform(&self) -> TargetTransform {
        self.transform
    }

    /// Length scale chosen by the Gaussian process, if this is one.
    pub fn gp_length_scale(&self) -> Option<f64> {
        match &self.fitted {
            Fitted::Gp(gp) => Some(gp.length_scale()),
            _ => None,
        }
    }

    /// Prior standard deviation (latent units) of a Gaussian-process model.
    pub fn gp_prior_sigma(&self) -> Option<f64> {
        match &self.fitted {
            Fitted::Gp(gp) => Some(gp.prior_sigma()),
            _ => None,
        }
    }

    fn check_rows(&self, xs: &[FeatureVector]) -> Result<(), SurrogateError> {
        match xs.iter().find(|r| r.len() != self.feature_len) {
            Some(r) => Err(SurrogateError::FeatureLengthMismatch {
                expected: self.feature_len,
                got: r.len(),
            }),
            None => Ok(()),
        }
    }

    fn predict_row(&self, row: &[f64]) -> Prediction {
        let (mean, sigma) = match &self.fitted {
            Fitted::Forest(f) => f.predict(row),
            Fitted::Boosted {
                lower,
                median,
                upper,
            } => {
                let spread = (upper.predict(row) - lower.predict(row)) / 2.0;
                (median.predict(row), spread.max(0.0))
            }
            Fitted::Gp(gp) => gp.predict(row),
        };
        Prediction { mean, sigma }
    }

    /// Predictions in the latent (transformed) target space.
    pub fn predict_latent(&self, xs: &[FeatureVector]) -> Result<Vec<Prediction>, SurrogateError> {
        self.check_rows(xs)?;
        Ok(self.execution.map(xs, |r| self.predict_row(r)))
    }

    /// Predictions in target units (seconds).
    pub fn predict(&self, xs: &[FeatureVector]) -> Result<Vec<Prediction>, SurrogateError> {
        Ok(self
            .predict_latent(xs)?
            .into_iter()
            .map(|p| self.transform.backward(p))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_2d(n: usize, seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let y = x
            .iter()
            .map(|r| 2.0 + (3.0 * r[0]).sin() + r[1] * r[1])
            .collect();
        TrainingSet::new(x, y).unwrap()
    }

    fn r_squared(model: &SurrogateModel, data: &TrainingSet) -> f64 {
        let pred = model.predict(data.x()).unwrap();
        let mean = data.y().iter().sum::<f64>() / data.len() as f64;
        let ss_tot: f64 = data.y().iter().map(|y| (y - mean).powi(2)).sum();
        let ss_res: f64 = data
            .y()
            .iter()
            .zip(&pred)
            .map(|(y, p)| (y - p.mean).powi(2))
            .sum();
        1.0 - ss_res / ss_tot
    }

    #[test]
    fn learner_codes_parse_case_insensitively() {
        assert_eq!("rf".parse::<Learner>().unwrap(), Learner::RandomForest);
        assert_eq!("Gbrt".parse::<Learner>().unwrap(), Learner::GradientBoosting);
        assert_eq!("ET".parse::<Learner>().unwrap(), Learner::ExtraTrees);
        assert_eq!("gp".parse::<Learner>().unwrap(), Learner::GaussianProcess);
        assert!("svm".parse::<Learner>().is_err());
    }

    #[test]
    fn training_set_validation() {
        assert_eq!(
            TrainingSet::new(vec![], vec![]).unwrap_err(),
            SurrogateError::EmptyTrainingSet
        );
        assert!(matches!(
            TrainingSet::new(vec![vec![1.0]], vec![1.0, 2.0]),
            Err(SurrogateError::LengthMismatch { .. })
        ));
        assert_eq!(
            TrainingSet::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 2.0]).unwrap_err(),
            SurrogateError::RaggedFeatures(1)
        );
        assert_eq!(
            TrainingSet::new(vec![vec![1.0]], vec![f64::NAN]).unwrap_err(),
            SurrogateError::NonFiniteTarget(0)
        );
        let zero = TrainingSet::new(vec![vec![1.0]], vec![0.0]).unwrap();
        assert_eq!(
            fit(Learner::RandomForest, &zero, 0, &SurrogateOptions::default()).unwrap_err(),
            SurrogateError::NonPositiveTarget(0)
        );
        let one = TrainingSet::new(vec![vec![1.0]], vec![1.0]).unwrap();
        for opts in [
            SurrogateOptions { n_trees: 0, ..Default::default() },
            SurrogateOptions { min_leaf: 0, ..Default::default() },
        ] {
            assert!(matches!(fit(Learner::ExtraTrees, &one, 0, &opts), Err(SurrogateError::InvalidOptions(_))));
        }
    }

    #[test]
    fn forest_constant_targets_predict_constant_with_zero_sigma() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0, (i % 2) as f64]).collect();
        let data = TrainingSet::new(x, vec![0.42; 30]).unwrap();
        for kind in [Learner::RandomForest, Learner::ExtraTrees] {
            let m = fit(kind, &data, 3, &SurrogateOptions::default()).unwrap();
            for p in m.predict(&[vec![0.3, 1.0], vec![5.0, -1.0]]).unwrap() {
                assert!((p.mean - 0.42).abs() < 1e-12, "{kind}: {p:?}");
                assert!(p.sigma.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gp_interpolates_noise_free_line() {
        let x: Vec<Vec<f64>> = (1..=5).map(|i| vec![i as f64 / 5.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        let data = TrainingSet::new(x.clone(), y.clone()).unwrap();
        let opts = SurrogateOptions {
            transform: TargetTransform::Identity,
            ..Default::default()
        };
        let m = fit(Learner::GaussianProcess, &data, 0, &opts).unwrap();
        for (p, want) in m.predict(&x).unwrap().iter().zip(&y) {
            assert!((p.mean - want).abs() < 1e-6, "{} vs {want}", p.mean);
            assert!(p.sigma <= 1e-3);
        }
    }

    #[test]
    fn gp_far_from_data_reverts_to_prior() {
        let data = smooth_2d(20, 4);
        let opts = SurrogateOptions {
            transform: TargetTransform::Identity,
            ..Default::default()
        };
        let m = fit(Learner::GaussianProcess, &data, 0, &opts).unwrap();
        let ls = m.gp_length_scale().unwrap();
        let prior = m.gp_prior_sigma().unwrap();
        // inputs live in the unit square; go 5 length scales beyond it
        let far = vec![1.0 + 5.0 * ls, 1.0 + 5.0 * ls];
        let p = m.predict(&[far]).unwrap()[0];
        assert!((p.sigma - prior).abs() <= 0.01 * prior, "{} vs {prior}", p.sigma);
    }

    #[test]
    fn gbrt_fits_smooth_function() {
        let data = smooth_2d(200, 11);
        let m = fit(Learner::GradientBoosting, &data, 0, &SurrogateOptions::default()).unwrap();
        let r2 = r_squared(&m, &data);
        assert!(r2 >= 0.9, "R^2 = {r2}");
    }

    #[test]
    fn forests_fit_smooth_function() {
        let data = smooth_2d(200, 12);
        for kind in [Learner::RandomForest, Learner::ExtraTrees] {
            let m = fit(kind, &data, 1, &SurrogateOptions::default()).unwrap();
            let r2 = r_squared(&m, &data);
            assert!(r2 >= 0.9, "{kind}: R^2 = {r2}");
        }
    }

    #[test]
    fn predict_rejects_wrong_length() {
        let data = smooth_2d(10, 1);
        for kind in Learner::ALL {
            let m = fit(kind, &data, 0, &SurrogateOptions::default()).unwrap();
            assert_eq!(
                m.predict(&[vec![0.1]]).unwrap_err(),
                SurrogateError::FeatureLengthMismatch {
                    expected: 2,
                    got: 1
                }
            );
        }
    }

    #[test]
    fn gp_cap_is_enforced() {
        let data = smooth_2d(12, 1);
        let opts = SurrogateOptions {
            gp_max_points: 10,
            ..Default::default()
        };
        assert_eq!(
            fit(Learner::GaussianProcess, &data, 0, &opts).unwrap_err(),
            SurrogateError::TooManyPoints { n: 12, cap: 10 }
        );
    }

    #[test]
    fn fits_are_seed_deterministic() {
        let data = smooth_2d(60, 2);
        let probe: Vec<Vec<f64>> = smooth_2d(30, 99).x().to_vec();
        for kind in Learner::ALL {
            let a = fit(kind, &data, 17, &SurrogateOptions::default()).unwrap();
            let b = fit(kind, &data, 17, &SurrogateOptions::default()).unwrap();
            assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap(), "{kind}");
        }
    }

    #[test]
    fn execution_mode_does_not_change_predictions() {
        let data = smooth_2d(80, 5);
        let probe: Vec<Vec<f64>> = smooth_2d(40, 6).x().to_vec();
        for kind in Learner::ALL {
            let seq = SurrogateOptions {
                execution: Execution::Sequential,
                ..Default::default()
            };
            let par = SurrogateOptions {
                execution: Execution::Parallel,
                ..Default::default()
            };
            let a = fit(kind, &data, 8, &seq).unwrap().predict(&probe).unwrap();
            let b = fit(kind, &data, 8, &par).unwrap().predict(&probe).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }
}
