//! Prediction sets: the raw material every estimator consumes.
//!
//! A [`PredictionSet`] holds an `n x k` score matrix — either logits or
//! probability rows on the `(k-1)`-simplex — plus optional ground-truth
//! labels. Probability rows are validated (entries in `[0,1]`, sum within
//! `1e-6` of one) and then renormalized so downstream code can rely on exact
//! simplex points.

use crate::error::{Error, Result};

/// Whether a score matrix holds raw logits or probability rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Logits,
    Probabilities,
}

/// Row-sum tolerance accepted before renormalization.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// An `n x k` matrix of classifier outputs with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    scores: Vec<f64>, // row-major, n * k
    n: usize,
    k: usize,
    kind: ScoreKind,
    labels: Option<Vec<usize>>,
}

impl PredictionSet {
    /// Build a prediction set from row vectors, validating shape, finiteness,
    /// label range, and (for probabilities) the simplex constraints.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        kind: ScoreKind,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyPredictions);
        }
        let k = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected: k,
                });
            }
        }
        let n = rows.len();
        let mut scores = Vec::with_capacity(n * k);
        for row in &rows {
            scores.extend_from_slice(row);
        }
        Self::from_flat(scores, k, kind, labels)
    }

    /// Build a prediction set from a flat row-major score vector.
    pub fn from_flat(
        mut scores: Vec<f64>,
        k: usize,
        kind: ScoreKind,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if scores.is_empty() || !scores.len().is_multiple_of(k) {
            return Err(Error::EmptyPredictions);
        }
        let n = scores.len() / k;
        for (idx, &s) in scores.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFiniteScore {
                    row: idx / k,
                    col: idx % k,
                });
            }
        }
        if kind == ScoreKind::Probabilities {
            for i in 0..n {
                let row = &mut scores[i * k..(i + 1) * k];
                let sum: f64 = row.iter().sum();
                let in_range = row.iter().all(|&p| (0.0..=1.0).contains(&p));
                if !in_range || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::NotAProbabilityRow { row: i, sum });
                }
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        if let Some(ref ls) = labels {
            if ls.len() != n {
                return Err(Error::LabelCountMismatch {
                    got: ls.len(),
                    expected: n,
                });
            }
            for (i, &label) in ls.iter().enumerate() {
                if label >= k {
                    return Err(Error::LabelOutOfRange { row: i, label, k });
                }
            }
        }
        Ok(Self {
            scores,
            n,
            k,
            kind,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks_exact(self.k)
    }

    /// Convert to probability rows.
    ///
    /// Logits are scaled by `1/temperature` and passed through a softmax with
    /// max-subtraction. Probability inputs pass through unchanged, and only
    /// accept `temperature == 1`: probabilities cannot be re-tempered without
    /// the original logits (zero entries make logs ill-defined), so anything
    /// else is rejected.
    pub fn to_probabilities(&self, temperature: f64) -> Result<PredictionSet> {
        if temperature <= 0.0 || !temperature.is_finite() {
            return Err(Error::NonPositiveTemperature(temperature));
        }
        match self.kind {
            ScoreKind::Probabilities => {
                if temperature != 1.0 {
                    return Err(Error::TemperatureOnProbabilities(temperature));
                }
                Ok(self.clone())
            }
            ScoreKind::Logits => {
                let mut probs = Vec::with_capacity(self.scores.len());
                for row in self.rows() {
                    let max = row
                        .iter()
                        .fold(f64::NEG_INFINITY, |m, &z| m.max(z / temperature));
                    let exps: Vec<f64> =
                        row.iter().map(|&z| (z / temperature - max).exp()).collect();
                    let sum: f64 = exps.iter().sum();
                    probs.extend(exps.into_iter().map(|e| e / sum));
                }
                Ok(PredictionSet {
                    scores: probs,
                    n: self.n,
                    k: self.k,
                    kind: ScoreKind::Probabilities,
                    labels: self.labels.clone(),
                })
            }
        }
    }

    /// Row-wise argmax; ties go to the lowest class index.
    pub fn pseudo_labels(&self) -> Vec<usize> {
        self.rows().map(argmax).collect()
    }

    /// Row-wise maximum score. Meaningful as a confidence only for
    /// probability rows.
    pub fn max_scores(&self) -> Vec<f64> {
        self.rows()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// New prediction set holding the given rows (repeats allowed), carrying
    /// labels along when present.
    pub fn select_rows(&self, indices: &[usize]) -> Result<PredictionSet> {
        if indices.is_empty() {
            return Err(Error::EmptyPredictions);
        }
        let mut scores = Vec::with_capacity(indices.len() * self.k);
        for &i in indices {
            scores.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|ls| indices.iter().map(|&i| ls[i]).collect());
        Ok(PredictionSet {
            scores,
            n: indices.len(),
            k: self.k,
            kind: self.kind,
            labels,
        })
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}
