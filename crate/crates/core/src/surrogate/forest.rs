//! Random forest and extra-trees ensembles. Uncertainty is the spread of
//! the per-tree predictions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{Binned, RegressionTree, Splitter, TreeParams};
use crate::par::Execution;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub splitter: Splitter,
    pub min_leaf: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        params: &ForestParams,
        seed: u64,
        exec: Execution,
    ) -> Self {
        let n = y.len();
        let d = x.first().map_or(0, Vec::len);
        let tree_params = TreeParams {
            max_features: ((d as f64).sqrt().ceil() as usize).max(1),
            min_leaf: params.min_leaf,
            max_depth: usize::MAX,
            splitter: params.splitter,
        };
        // per-tree seeds are fixed up front so the result does not depend on
        // scheduling
        let data = Binned::new(x);
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..params.n_trees).map(|_| master.random()).collect();
        let trees = exec.map(&seeds, |&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let samples = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            RegressionTree::fit(&data, y, samples, &tree_params, &mut rng)
        });
        Self { trees }
    }

    /// Mean and population standard deviation of the tree predictions.
    pub fn predict(&self, row: &[f64]) -> (f64, f64) {
        let n = self.trees.len() as f64;
        let p0 = self.trees[0].predict(row);
        let (mut s1, mut s2) = (0.0, 0.0);
        for t in &self.trees[1..] {
            let d = t.predict(row) - p0;
            s1 += d;
            s2 += d * d;
        }
        let var = (s2 - s1 * s1 / n) / n;
        (p0 + s1 / n, var.max(0.0).sqrt())
    }
}
