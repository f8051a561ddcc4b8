//! Gradient-boosted regression trees under the pinball (quantile) loss.
//!
//! Each stage fits a tree to the negative gradient of the pinball loss and
//! then replaces every leaf value with the target quantile of the residuals
//! that fall into it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{Binned, RegressionTree, Splitter, TreeParams};

#[derive(Debug, Clone, Copy)]
pub(crate) struct BoostParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct QuantileBooster {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
    lo: f64,
    hi: f64,
}

impl QuantileBooster {
    pub fn fit(x: &[Vec<f64>], y: &[f64], tau: f64, params: &BoostParams) -> Self {
        let n = y.len();
        let d = x.first().map_or(0, Vec::len);
        let tree_params = TreeParams {
            max_features: d.max(1),
            min_leaf: 1,
            max_depth: params.max_depth,
            splitter: Splitter::Best,
        };
        // every feature is a candidate, so the rng only fixes scan order
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        let data = Binned::new(x);
        let init = quantile(&mut y.to_vec(), tau);
        let mut fitted = vec![init; n];
        let mut trees = Vec::with_capacity(params.n_stages);
        let mut grad = vec![0.0; n];
        for _ in 0..params.n_stages {
            for i in 0..n {
                grad[i] = if y[i] > fitted[i] { tau } else { tau - 1.0 };
            }
            let mut tree = RegressionTree::fit(&data, &grad, (0..n).collect(), &tree_params, &mut rng);

            let leaves: Vec<usize> = x.iter().map(|r| tree.leaf_of(r)).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| leaves[i]);
            let mut start = 0;
            while start < n {
                let leaf = leaves[order[start]];
                let end = start + order[start..].iter().take_while(|&&i| leaves[i] == leaf).count();
                let mut resid: Vec<f64> =
                    order[start..end].iter().map(|&i| y[i] - fitted[i]).collect();
                let step = quantile(&mut resid, tau);
                tree.set_leaf_value(leaf, step);
                for &i in &order[start..end] {
                    fitted[i] += params.learning_rate * step;
                }
                start = end;
            }
            trees.push(tree);
        }

        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            init,
            learning_rate: params.learning_rate,
            trees,
            lo,
            hi,
        }
    }

    /// Predictions are clamped to the training target range.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let raw = self.init
            + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        raw.clamp(self.lo, self.hi)
    }
}

/// Linear-interpolation quantile; reorders `values`.
pub(crate) fn quantile(values: &mut [f64], tau: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = tau * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    values[lo] + frac * (values[hi] - values[lo])
}
