//! Gaussian-process regression with a squared-exponential kernel.
//!
//! Targets are standardized. The kernel is `s2 * (R + jitter * I)` with a
//! single shared length scale in `R`. The length scale is picked from a
//! fixed log-spaced grid by log marginal likelihood; for each length scale
//! the signal variance `s2` takes its closed-form maximum-likelihood value
//! `y' R^-1 y / n`. The jitter is a nugget on coincident inputs, so the
//! posterior mean reproduces the training targets exactly.

use nalgebra::{DMatrix, DVector};

use super::SurrogateError;
use crate::par::Execution;

pub const LENGTH_SCALE_GRID: usize = 16;
const LOG10_MIN_LENGTH_SCALE: f64 = -2.0;
const LOG10_MAX_LENGTH_SCALE: f64 = 2.0;
pub const INITIAL_JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-2;

#[derive(Debug, Clone)]
pub(crate) struct GaussianProcess {
    x: Vec<Vec<f64>>,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
    length_scale: f64,
    signal_var: f64,
    y_mean: f64,
    y_scale: f64,
    jitter: f64,
}

struct Candidate {
    length_scale: f64,
    log_ml: f64,
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    signal_var: f64,
}

pub(crate) fn length_scale_grid() -> Vec<f64> {
    let step = (LOG10_MAX_LENGTH_SCALE - LOG10_MIN_LENGTH_SCALE) / (LENGTH_SCALE_GRID - 1) as f64;
    (0..LENGTH_SCALE_GRID)
        .map(|k| 10f64.powf(LOG10_MIN_LENGTH_SCALE + step * k as f64))
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

impl GaussianProcess {
    pub fn fit(x: &[Vec<f64>], y: &[f64], exec: Execution) -> Result<Self, SurrogateError> {
        let n = y.len();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
        let y_scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_scale));
        let d2 = DMatrix::from_fn(n, n, |i, j| sq_dist(&x[i], &x[j]));
        let grid = length_scale_grid();

        let mut jitter = INITIAL_JITTER;
        while jitter <= MAX_JITTER * (1.0 + 1e-9) {
            let fits = exec.map(&grid, |&ls| try_length_scale(&d2, &ys, ls, jitter));
            let best = fits
                .into_iter()
                .flatten()
                .fold(None::<Candidate>, |best, c| match best {
                    Some(b) if b.log_ml >= c.log_ml => Some(b),
                    _ => Some(c),
                });
            if let Some(c) = best {
                return Ok(Self {
                    x: x.to_vec(),
                    chol_l: c.l,
                    alpha: c.alpha,
                    length_scale: c.length_scale,
                    signal_var: c.signal_var,
                    y_mean,
                    y_scale,
                    jitter,
                });
            }
            jitter *= 10.0;
        }
        Err(SurrogateError::SingularKernel)
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    #[cfg(test)]
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Prior standard deviation in target units.
    pub fn prior_sigma(&self) -> f64 {
        self.y_scale * self.signal_var.sqrt()
    }

    pub fn predict(&self, row: &[f64]) -> (f64, f64) {
        let inv2l2 = 1.0 / (2.0 * self.length_scale * self.length_scale);
        let r = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| {
                let d = sq_dist(xi, row);
                (-d * inv2l2).exp() + if d == 0.0 { self.jitter } else { 0.0 }
            }),
        );
        let mean = r.dot(&self.alpha);
        let v = self
            .chol_l
            .solve_lower_triangular(&r)
            .expect("cholesky factor has a positive diagonal");
        let var = self.signal_var * (1.0 + self.jitter - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}

fn try_length_scale(
    d2: &DMatrix<f64>,
    ys: &DVector<f64>,
    length_scale: f64,
    jitter: f64,
) -> Option<Candidate> {
    let n = ys.len();
    let inv2l2 = 1.0 / (2.0 * length_scale * length_scale);
    let mut r = d2.map(|d| (-d * inv2l2).exp());
    for i in 0..n {
        r[(i, i)] += jitter;
    }
    let chol = r.cholesky()?;
    let alpha = chol.solve(ys);
    let quad = ys.dot(&alpha);
    let signal_var = (quad / n as f64).max(1e-12);
    let l = chol.unpack();
    let half_logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let log_ml = -0.5 * n as f64 * (signal_var.ln() + 1.0 + (2.0 * std::f64::consts::PI).ln())
        - half_logdet;
    if !log_ml.is_finite() {
        return None;
    }
    Some(Candidate {
        length_scale,
        log_ml,
        l,
        alpha,
        signal_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_sixteen_log_spaced_points() {
        let g = length_scale_grid();
        assert_eq!(g.len(), 16);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[15] - 100.0).abs() < 1e-9);
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }

    // Closed-form posterior for a single training point at the origin:
    // mean(x) = y0 * k(x) / (1 + j), var(x) = s2 * (1 + j - k(x)^2 / (1 + j)).
    #[test]
    fn single_point_posterior_matches_closed_form() {
        let x = vec![vec![0.0, 0.0]];
        let y = vec![3.0];
        let gp = GaussianProcess::fit(&x, &y, Execution::Sequential).unwrap();
        let ls = gp.length_scale();
        for q in [0.1, 0.5, 1.3] {
            let k = (-(q * q) / (2.0 * ls * ls)).exp();
            let (m, s) = gp.predict(&[q, 0.0]);
            // standardized target is 0, so the mean is the target itself
            assert!((m - 3.0).abs() < 1e-12);
            let j = gp.jitter();
            let expected = gp.prior_sigma() * (1.0 + j - k * k / (1.0 + j)).sqrt();
            assert!((s - expected).abs() < 1e-9);
        }
    }
}
