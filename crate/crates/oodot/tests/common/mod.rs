//! Shared helpers for the integration suites: an exhaustive transport oracle
//! and seeded random-instance generators, kept independent of the library's
//! solver path.
//!
//! Each integration target compiles its own copy, so not every helper is
//! used by every target.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oodot::{LabelMarginal, PredictionSet, ScoreKind};

/// Exhaustive minimum transport cost over every assignment consistent with
/// the demands, divided by the row count. No pruning, no shared code with
/// the solver.
pub fn brute_force_transport(costs: &[Vec<f64>], demands: &[usize]) -> f64 {
    fn recurse(
        costs: &[Vec<f64>],
        row: usize,
        remaining: &mut Vec<usize>,
        acc: f64,
        best: &mut f64,
    ) {
        if row == costs.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        for c in 0..remaining.len() {
            if remaining[c] > 0 {
                remaining[c] -= 1;
                recurse(costs, row + 1, remaining, acc + costs[row][c], best);
                remaining[c] += 1;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut remaining = demands.to_vec();
    recurse(costs, 0, &mut remaining, 0.0, &mut best);
    best / costs.len() as f64
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the (k-1)-simplex via normalized exponentials.
pub fn random_simplex_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random_range(1e-12..1.0);
            -u.ln()
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

pub fn random_marginal(rng: &mut ChaCha8Rng, k: usize) -> LabelMarginal {
    LabelMarginal::new(random_simplex_row(rng, k)).expect("simplex draw is a marginal")
}

pub fn random_prediction_set(rng: &mut ChaCha8Rng, n: usize, k: usize) -> PredictionSet {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_simplex_row(rng, k)).collect();
    PredictionSet::from_rows(rows, ScoreKind::Probabilities, None)
        .expect("random simplex rows are valid probabilities")
}

/// Random non-negative integer demands summing to `n`.
pub fn random_demands(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut demands = vec![0usize; k];
    for _ in 0..n {
        demands[rng.random_range(0..k)] += 1;
    }
    demands
}

/// Marginal on the 1/n grid: random integer counts summing to n, divided by n.
pub fn random_grid_marginal(rng: &mut ChaCha8Rng, k: usize, n: usize) -> LabelMarginal {
    let counts = random_demands(rng, n, k);
    LabelMarginal::new(counts.into_iter().map(|c| c as f64 / n as f64).collect())
        .expect("grid counts normalize")
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mean_x) * (b - mean_y);
        var_x += (a - mean_x) * (a - mean_x);
        var_y += (b - mean_y) * (b - mean_y);
    }
    cov / (var_x.sqrt() * var_y.sqrt())
}
