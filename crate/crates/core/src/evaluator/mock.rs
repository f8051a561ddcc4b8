//! Deterministic synthetic objectives over a parameter space.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Aggregation, Evaluator, EvaluatorError, Measurement};
use crate::space::{Configuration, ParamKind, ParamSpace};

/// Added by `cliff` whenever any parameter is inactive.
pub const CLIFF_PENALTY: f64 = 100.0;

const OFFSET_LO: f64 = 0.1;
const OFFSET_HI: f64 = 1.0;
const SPHERE_CENTER: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockObjective {
    /// Sum of `(x - 0.3)^2` over ordinal coordinates plus one offset per
    /// categorical choice.
    Sphere,
    /// `Sphere` rounded to two decimals.
    Plateau,
    /// `Sphere` plus [`CLIFF_PENALTY`] when any parameter is inactive.
    Cliff,
}

impl FromStr for MockObjective {
    type Err = EvaluatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sphere" => Ok(MockObjective::Sphere),
            "plateau" => Ok(MockObjective::Plateau),
            "cliff" => Ok(MockObjective::Cliff),
            _ => Err(EvaluatorError::UnknownObjective(s.to_string())),
        }
    }
}

/// A synthetic objective bound to one space. Categorical offsets are drawn
/// once from `seed`; index `k` of a parameter's offsets is used when it is
/// inactive.
#[derive(Debug, Clone)]
pub struct MockEvaluator {
    space: ParamSpace,
    objective: MockObjective,
    offsets: Vec<Vec<f64>>,
}

impl MockEvaluator {
    pub fn new(space: &ParamSpace, objective: MockObjective, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offsets = space
            .params()
            .iter()
            .map(|p| match p.kind {
                ParamKind::Categorical => (0..=p.values.len())
                    .map(|_| rng.random_range(OFFSET_LO..OFFSET_HI))
                    .collect(),
                ParamKind::Ordinal => Vec::new(),
            })
            .collect();
        Self {
            space: space.clone(),
            objective,
            offsets,
        }
    }

    pub fn objective(&self) -> MockObjective {
        self.objective
    }

    /// Offset table per parameter (empty for ordinals).
    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    pub fn value(&self, config: &Configuration) -> f64 {
        let mut sphere = 0.0;
        let mut any_inactive = false;
        for ((p, slot), offsets) in self.space.params().iter().zip(config.slots()).zip(&self.offsets) {
            any_inactive |= slot.is_none();
            match p.kind {
                ParamKind::Ordinal => {
                    let k = p.values.len();
                    let x = match slot {
                        Some(r) if k > 1 => *r as f64 / (k - 1) as f64,
                        Some(_) => 0.0,
                        None => -1.0,
                    };
                    sphere += (x - SPHERE_CENTER) * (x - SPHERE_CENTER);
                }
                ParamKind::Categorical => {
                    sphere += offsets[slot.unwrap_or(p.values.len())];
                }
            }
        }
        match self.objective {
            MockObjective::Sphere => sphere,
            MockObjective::Plateau => (sphere * 100.0).round() / 100.0,
            MockObjective::Cliff if any_inactive => sphere + CLIFF_PENALTY,
            MockObjective::Cliff => sphere,
        }
    }

    pub fn measure(&self, config: &Configuration) -> Measurement {
        Measurement::ok(vec![self.value(config)], Aggregation::Min, 0.0)
    }
}

impl Evaluator for MockEvaluator {
    fn evaluate(&mut self, _index: usize, config: &Configuration) -> Result<Measurement, EvaluatorError> {
        Ok(self.measure(config))
    }
}

/// One-shot form of [`MockEvaluator`]; a pure function of its arguments.
pub fn mock_evaluate(
    space: &ParamSpace,
    config: &Configuration,
    objective: MockObjective,
    seed: u64,
) -> Measurement {
    MockEvaluator::new(space, objective, seed).measure(config)
}
