//! CART regression tree shared by the forest and boosting learners.
//!
//! Features are binned once per fit: each column is replaced by the rank of
//! its value among the column's distinct values. Split search on a node
//! then builds a per-bin histogram, or sorts the node's ranks when the node
//! has fewer samples than the column has bins. Both give the split an
//! exhaustive search over sorted values would.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Splitter {
    /// Exhaustive threshold search per candidate feature.
    Best,
    /// One uniform threshold per candidate feature.
    Random,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_features: usize,
    pub min_leaf: usize,
    pub max_depth: usize,
    pub splitter: Splitter,
}

/// Column-major bin codes of a feature matrix.
#[derive(Debug, Clone)]
pub(crate) struct Binned {
    /// Sorted distinct values of each feature.
    cuts: Vec<Vec<f64>>,
    /// `codes[f][i]` indexes `cuts[f]` for sample `i`.
    codes: Vec<Vec<u32>>,
}

impl Binned {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut cuts = Vec::with_capacity(d);
        let mut codes = Vec::with_capacity(d);
        for f in 0..d {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            codes.push(
                x.iter()
                    .map(|r| vals.partition_point(|&v| v < r[f]) as u32)
                    .collect(),
            );
            cuts.push(vals);
        }
        Self { cuts, codes }
    }

    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }
}

/// A leaf stores its value in `threshold`; a split sends rows with
/// `row[feature] <= threshold` to `left` and the rest to `left + 1`.
#[derive(Debug, Clone, Copy)]
struct Node {
    threshold: f64,
    feature: u32,
    left: u32,
}

const LEAF: u32 = u32::MAX;

impl Node {
    fn leaf(value: f64) -> Self {
        Self {
            threshold: value,
            feature: LEAF,
            left: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RegressionTree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    feature: usize,
    /// Samples with code `<= code` go left.
    code: u32,
    threshold: f64,
    score: f64,
}

#[derive(Default)]
struct Scratch {
    counts: Vec<usize>,
    sums: Vec<f64>,
    pairs: Vec<(u32, f64)>,
}

impl RegressionTree {
    /// Grows a tree on the rows listed in `samples`; repeated indices act as
    /// bootstrap weights.
    pub fn fit<R: Rng + ?Sized>(
        data: &Binned,
        y: &[f64],
        samples: Vec<usize>,
        params: &TreeParams,
        rng: &mut R,
    ) -> Self {
        let mut features: Vec<usize> = (0..data.n_features()).collect();
        let mut scratch = Scratch::default();
        let mut nodes = vec![Node::leaf(0.0)];
        let mut stack = vec![(0usize, samples, 0usize)];

        while let Some((id, idx, depth)) = stack.pop() {
            let value = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            nodes[id] = Node::leaf(value);

            if depth >= params.max_depth || idx.len() < 2 * params.min_leaf || is_pure(y, &idx) {
                continue;
            }

            features.shuffle(rng);
            let mut best: Option<Candidate> = None;
            let mut tried = 0;
            for &f in &features {
                if tried == params.max_features {
                    break;
                }
                let codes = &data.codes[f];
                let (lo, hi) = idx
                    .iter()
                    .fold((u32::MAX, 0), |(lo, hi), &i| (lo.min(codes[i]), hi.max(codes[i])));
                if lo >= hi {
                    continue;
                }
                tried += 1;
                let cand = match params.splitter {
                    Splitter::Best => {
                        best_split(data, y, &idx, f, (lo, hi), params.min_leaf, &mut scratch)
                    }
                    Splitter::Random => {
                        let cuts = &data.cuts[f];
                        let t = rng.random_range(cuts[lo as usize]..cuts[hi as usize]);
                        let code = cuts.partition_point(|&v| v <= t) as u32 - 1;
                        score_split(data, y, &idx, f, code, t, params.min_leaf)
                    }
                };
                if let Some(c) = cand {
                    if best.as_ref().is_none_or(|b| c.score > b.score) {
                        best = Some(c);
                    }
                }
            }

            let Some(split) = best else { continue };
            let codes = &data.codes[split.feature];
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| codes[i] <= split.code);
            let left = nodes.len();
            nodes.push(Node::leaf(0.0));
            nodes.push(Node::leaf(0.0));
            nodes[id] = Node {
                threshold: split.threshold,
                feature: split.feature as u32,
                left: left as u32,
            };
            stack.push((left + 1, right_idx, depth + 1));
            stack.push((left, left_idx, depth + 1));
        }

        Self { nodes }
    }

    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut id = 0;
        loop {
            let n = self.nodes[id];
            if n.feature == LEAF {
                return id;
            }
            id = n.left as usize + usize::from(row[n.feature as usize] > n.threshold);
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_of(row)].threshold
    }

    pub fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        debug_assert_eq!(self.nodes[leaf].feature, LEAF);
        self.nodes[leaf].threshold = value;
    }

    #[cfg(test)]
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }
}

fn is_pure(y: &[f64], idx: &[usize]) -> bool {
    let first = y[idx[0]];
    idx.iter().all(|&i| y[i] == first)
}

// Maximizing sum_l^2/n_l + sum_r^2/n_r is equivalent to minimizing the
// children's squared error.
fn best_split(
    data: &Binned,
    y: &[f64],
    idx: &[usize],
    feature: usize,
    (lo, hi): (u32, u32),
    min_leaf: usize,
    scratch: &mut Scratch,
) -> Option<Candidate> {
    let codes = &data.codes[feature];
    let cuts = &data.cuts[feature];
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let mut best: Option<Candidate> = None;
    let mut consider = |left_n: usize, left_sum: f64, code: u32, next: u32| {
        if left_n < min_leaf || n - left_n < min_leaf {
            return;
        }
        let right_sum = total - left_sum;
        let score = left_sum * left_sum / left_n as f64 + right_sum * right_sum / (n - left_n) as f64;
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Candidate {
                feature,
                code,
                threshold: 0.5 * (cuts[code as usize] + cuts[next as usize]),
                score,
            });
        }
    };

    let bins = (hi - lo + 1) as usize;
    if bins <= n {
        let Scratch { counts, sums, .. } = scratch;
        counts.clear();
        counts.resize(bins, 0);
        sums.clear();
        sums.resize(bins, 0.0);
        for &i in idx {
            let b = (codes[i] - lo) as usize;
            counts[b] += 1;
            sums[b] += y[i];
        }
        let (mut left_n, mut left_sum) = (0, 0.0);
        let mut prev: Option<usize> = None;
        for b in 0..bins {
            if counts[b] == 0 {
                continue;
            }
            if let Some(p) = prev {
                consider(left_n, left_sum, lo + p as u32, lo + b as u32);
            }
            left_n += counts[b];
            left_sum += sums[b];
            prev = Some(b);
        }
    } else {
        let pairs = &mut scratch.pairs;
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (codes[i], y[i])));
        pairs.sort_by_key(|p| p.0);
        let mut left_sum = 0.0;
        for k in 1..n {
            left_sum += pairs[k - 1].1;
            if pairs[k - 1].0 < pairs[k].0 {
                consider(k, left_sum, pairs[k - 1].0, pairs[k].0);
            }
        }
    }
    best
}

fn score_split(
    data: &Binned,
    y: &[f64],
    idx: &[usize],
    feature: usize,
    code: u32,
    threshold: f64,
    min_leaf: usize,
) -> Option<Candidate> {
    let codes = &data.codes[feature];
    let (mut nl, mut sl, mut sr) = (0usize, 0.0, 0.0);
    for &i in idx {
        if codes[i] <= code {
            nl += 1;
            sl += y[i];
        } else {
            sr += y[i];
        }
    }
    let nr = idx.len() - nl;
    if nl < min_leaf || nr < min_leaf {
        return None;
    }
    Some(Candidate {
        feature,
        code,
        threshold,
        score: sl * sl / nl as f64 + sr * sr / nr as f64,
    })
}
