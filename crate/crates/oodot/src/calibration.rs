//! Temperature scaling on validation logits.

use crate::error::{Error, Result};
use crate::estimators::PROB_CLAMP;
use crate::predictions::{PredictionSet, ScoreKind};

pub const TEMPERATURE_MIN: f64 = 0.01;
pub const TEMPERATURE_MAX: f64 = 100.0;

/// Absolute convergence tolerance of the search, in log-temperature.
const LOG_T_TOLERANCE: f64 = 1e-4;

/// Result of a temperature fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureFit {
    pub temperature: f64,
    /// Mean negative log-likelihood at the fitted temperature.
    pub nll: f64,
    /// Number of NLL evaluations performed.
    pub iterations: usize,
    /// True when the optimum sits on the search boundary.
    pub clamped: bool,
}

/// Mean NLL of `softmax(logits / t)` against the labels, computed with
/// log-sum-exp and max subtraction; per-row probabilities are clamped at
/// [`PROB_CLAMP`].
fn mean_nll(val: &PredictionSet, labels: &[usize], t: f64) -> f64 {
    let nll_cap = -(PROB_CLAMP.ln());
    let mut sum = 0.0;
    for (row, &label) in val.rows().zip(labels) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &z| m.max(z / t));
        let lse = max
            + row
                .iter()
                .map(|&z| (z / t - max).exp())
                .sum::<f64>()
                .ln();
        sum += (lse - row[label] / t).min(nll_cap);
    }
    sum / val.n() as f64
}

/// Fit a temperature on labeled validation logits by minimizing mean NLL
/// over `[0.01, 100]` with golden-section search on `log T` (absolute
/// tolerance `1e-4` in `log T`); returns the best evaluated point. The two
/// interval endpoints and `T = 1` are always evaluated, so the fit is never
/// worse than uncalibrated.
pub fn fit_temperature(val: &PredictionSet) -> Result<TemperatureFit> {
    if val.kind() != ScoreKind::Logits {
        return Err(Error::LogitsRequired);
    }
    let labels = val
        .labels()
        .ok_or(Error::MissingLabels("fit_temperature"))?;

    let mut evals = 0usize;
    let mut best_t = 1.0f64;
    let mut best_nll = f64::INFINITY;
    let eval = |t: f64, evals: &mut usize, best_t: &mut f64, best_nll: &mut f64| -> f64 {
        *evals += 1;
        let nll = mean_nll(val, labels, t);
        if nll < *best_nll {
            *best_nll = nll;
            *best_t = t;
        }
        nll
    };

    eval(TEMPERATURE_MIN, &mut evals, &mut best_t, &mut best_nll);
    eval(TEMPERATURE_MAX, &mut evals, &mut best_t, &mut best_nll);
    eval(1.0, &mut evals, &mut best_t, &mut best_nll);

    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (lo, hi) = (TEMPERATURE_MIN.ln(), TEMPERATURE_MAX.ln());
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c.exp(), &mut evals, &mut best_t, &mut best_nll);
    let mut fd = eval(d.exp(), &mut evals, &mut best_t, &mut best_nll);
    while b - a > LOG_T_TOLERANCE {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c.exp(), &mut evals, &mut best_t, &mut best_nll);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d.exp(), &mut evals, &mut best_t, &mut best_nll);
        }
    }

    let log_best = best_t.ln();
    let clamped = log_best <= lo + LOG_T_TOLERANCE || log_best >= hi - LOG_T_TOLERANCE;
    Ok(TemperatureFit {
        temperature: best_t,
        nll: best_nll,
        iterations: evals,
        clamped,
    })
}
