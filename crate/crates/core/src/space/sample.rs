use rand::seq::SliceRandom;
use rand::Rng;

use super::{Configuration, ParamKind, ParamSpace};

/// Draws every parameter uniformly from its values, then resolves activity.
pub fn sample_random<R: Rng + ?Sized>(
    space: &ParamSpace,
    rng: &mut R,
    n: usize,
) -> Vec<Configuration> {
    let mut raw = vec![0usize; space.len()];
    (0..n)
        .map(|_| {
            for (slot, p) in raw.iter_mut().zip(space.params()) {
                *slot = rng.random_range(0..p.values.len());
            }
            space.resolve_indices(&raw)
        })
        .collect()
}

/// Latin hypercube draws over the ordinal ranks; categoricals are uniform.
///
/// For an ordinal with `k` values, each rank appears `n / k` or `n / k + 1`
/// times when `n >= k`, and the draws fall in distinct equal-width strata
/// when `n < k`.
pub fn sample_lhs<R: Rng + ?Sized>(
    space: &ParamSpace,
    rng: &mut R,
    n: usize,
) -> Vec<Configuration> {
    let columns: Vec<Vec<usize>> = space
        .params()
        .iter()
        .map(|p| {
            let k = p.values.len();
            match p.kind {
                ParamKind::Categorical => (0..n).map(|_| rng.random_range(0..k)).collect(),
                ParamKind::Ordinal => stratified_ranks(rng, n, k),
            }
        })
        .collect();

    let mut raw = vec![0usize; space.len()];
    (0..n)
        .map(|row| {
            for (slot, col) in raw.iter_mut().zip(&columns) {
                *slot = col[row];
            }
            space.resolve_indices(&raw)
        })
        .collect()
}

fn stratified_ranks<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut ranks = Vec::with_capacity(n);
    if n < k {
        let width = k as f64 / n as f64;
        for j in 0..n {
            let lo = (j as f64 * width).floor() as usize;
            let hi = (((j + 1) as f64 * width).floor() as usize).clamp(lo + 1, k);
            ranks.push(rng.random_range(lo..hi));
        }
    } else {
        let (full, rem) = (n / k, n % k);
        for r in 0..k {
            ranks.extend(std::iter::repeat_n(r, full));
        }
        let mut extra: Vec<usize> = (0..k).collect();
        extra.shuffle(rng);
        ranks.extend_from_slice(&extra[..rem]);
    }
    ranks.shuffle(rng);
    ranks
}
