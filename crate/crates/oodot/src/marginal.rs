//! Label marginals and their realization as integer counts.

use crate::error::{Error, Result};

/// Marginal-sum tolerance.
pub const MARGINAL_SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over `k` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMarginal {
    mass: Vec<f64>,
}

impl LabelMarginal {
    /// Validate entries: finite, non-negative, summing to 1 within `1e-9`.
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        let sum: f64 = mass.iter().sum();
        let ok = !mass.is_empty()
            && mass.iter().all(|&m| m.is_finite() && m >= 0.0)
            && (sum - 1.0).abs() <= MARGINAL_SUM_TOLERANCE;
        if !ok {
            return Err(Error::InvalidMarginal { sum });
        }
        Ok(Self { mass })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            mass: vec![1.0 / k as f64; k],
        }
    }

    /// Empirical marginal of a label vector: `mass[c] = count(c) / n`.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyLabels);
        }
        let mut counts = vec![0usize; k];
        for (i, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(Error::LabelOutOfRange { row: i, label, k });
            }
            counts[label] += 1;
        }
        let n = labels.len() as f64;
        Ok(Self {
            mass: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Largest-remainder (Hamilton) apportionment of `n * mass` onto integer
    /// counts summing to `n`. Remainder ties go to the lowest class index.
    pub fn apportion(&self, n: usize) -> Vec<usize> {
        let k = self.mass.len();
        let mut counts = vec![0usize; k];
        let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(k);
        let mut assigned = 0usize;
        for (c, &m) in self.mass.iter().enumerate() {
            let quota = m * n as f64;
            let base = quota.floor();
            counts[c] = base as usize;
            assigned += counts[c];
            remainders.push((quota - base, c));
        }
        // Largest remainder first; ties by lowest class index.
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut leftover = n - assigned;
        for &(_, c) in &remainders {
            if leftover == 0 {
                break;
            }
            counts[c] += 1;
            leftover -= 1;
        }
        counts
    }
}
