//! Error estimators over unlabeled target predictions.
//!
//! Confidence-based baselines (AC, DoC, IM, GDE, ATC) alongside the
//! transport-based estimators (COT, COTT). All estimators consume probability
//! rows, are pure functions of their inputs, and return values in `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::marginal::LabelMarginal;
use crate::predictions::{PredictionSet, ScoreKind};
use crate::transport::w_inf;

/// Probabilities are clamped here before taking logs (negative entropy,
/// calibration NLL).
pub const PROB_CLAMP: f64 = 1e-12;

/// Tie-breaking offset used when a threshold must sit above every cost.
const ABOVE_ALL_COSTS: f64 = 1.0 + 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ac,
    Doc,
    Im,
    Gde,
    AtcMc,
    AtcNe,
    Cot,
    Cott,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ac => "ac",
            Method::Doc => "doc",
            Method::Im => "im",
            Method::Gde => "gde",
            Method::AtcMc => "atc-mc",
            Method::AtcNe => "atc-ne",
            Method::Cot => "cot",
            Method::Cott => "cott",
        }
    }

    pub const ALL: [Method; 8] = [
        Method::Ac,
        Method::Doc,
        Method::Im,
        Method::Gde,
        Method::AtcMc,
        Method::AtcNe,
        Method::Cot,
        Method::Cott,
    ];
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMeta {
    pub n: usize,
    pub k: usize,
    pub batch_count: usize,
    pub seed: Option<u64>,
    pub temperature: Option<f64>,
}

/// A scalar error estimate in `[0, 1]` with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub method: Method,
    pub value: f64,
    pub meta: EstimateMeta,
}

fn single_shot_meta(p: &PredictionSet) -> EstimateMeta {
    EstimateMeta {
        n: p.n(),
        k: p.k(),
        batch_count: 1,
        seed: None,
        temperature: None,
    }
}

fn require_probs(p: &PredictionSet, op: &'static str) -> Result<()> {
    if p.kind() != ScoreKind::Probabilities {
        return Err(Error::ProbabilitiesRequired(op));
    }
    Ok(())
}

fn require_labels<'a>(p: &'a PredictionSet, op: &'static str) -> Result<&'a [usize]> {
    p.labels().ok_or(Error::MissingLabels(op))
}

fn mean_max_confidence(p: &PredictionSet) -> f64 {
    p.max_scores().iter().sum::<f64>() / p.n() as f64
}

/// Average Confidence: `1 - mean(max_j f_j)`.
pub fn ac_mc(target: &PredictionSet) -> Result<Estimate> {
    require_probs(target, "ac")?;
    Ok(Estimate {
        method: Method::Ac,
        value: (1.0 - mean_max_confidence(target)).clamp(0.0, 1.0),
        meta: single_shot_meta(target),
    })
}

/// Fraction of rows whose argmax disagrees with the ground-truth label.
pub fn true_error(p: &PredictionSet) -> Result<f64> {
    let labels = require_labels(p, "true_error")?;
    let wrong = p
        .pseudo_labels()
        .iter()
        .zip(labels)
        .filter(|(pred, label)| pred != label)
        .count();
    Ok(wrong as f64 / p.n() as f64)
}

/// Difference of Confidence: validation error plus the drop in mean
/// confidence from validation to target, clamped to `[0, 1]`.
pub fn doc(target: &PredictionSet, val: &PredictionSet) -> Result<Estimate> {
    require_probs(target, "doc")?;
    require_probs(val, "doc")?;
    let eps_val = true_error(val)?;
    let raw = eps_val + mean_max_confidence(val) - mean_max_confidence(target);
    Ok(Estimate {
        method: Method::Doc,
        value: raw.clamp(0.0, 1.0),
        meta: single_shot_meta(target),
    })
}

/// Importance re-weighting over equal-width max-confidence bins on
/// `[1/k, 1]`: the target fraction in each bin weights the validation error
/// observed in that bin. Bins with no validation mass fall back to the
/// overall validation error.
pub fn im(target: &PredictionSet, val: &PredictionSet, bins: usize) -> Result<Estimate> {
    require_probs(target, "im")?;
    require_probs(val, "im")?;
    if bins == 0 {
        return Err(Error::NoBins);
    }
    if target.k() != val.k() {
        return Err(Error::ClassMismatch {
            left: target.k(),
            right: val.k(),
        });
    }
    let val_labels = require_labels(val, "im")?;
    let k = target.k() as f64;
    let lo = 1.0 / k;
    let width = (1.0 - lo) / bins as f64;
    let bin_of = |score: f64| -> usize {
        (((score - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize
    };

    let eps_val = true_error(val)?;
    let mut val_total = vec![0usize; bins];
    let mut val_wrong = vec![0usize; bins];
    for ((score, pred), &label) in val
        .max_scores()
        .into_iter()
        .zip(val.pseudo_labels())
        .zip(val_labels)
    {
        let b = bin_of(score);
        val_total[b] += 1;
        if pred != label {
            val_wrong[b] += 1;
        }
    }

    let mut target_count = vec![0usize; bins];
    for score in target.max_scores() {
        target_count[bin_of(score)] += 1;
    }

    let mut value = 0.0;
    for b in 0..bins {
        let frac = target_count[b] as f64 / target.n() as f64;
        let bin_err = if val_total[b] > 0 {
            val_wrong[b] as f64 / val_total[b] as f64
        } else {
            eps_val
        };
        value += frac * bin_err;
    }
    Ok(Estimate {
        method: Method::Im,
        value: value.clamp(0.0, 1.0),
        meta: single_shot_meta(target),
    })
}

/// Generalized Disagreement Equality: fraction of rows where two models'
/// argmaxes differ.
pub fn gde(a: &PredictionSet, b: &PredictionSet) -> Result<Estimate> {
    require_probs(a, "gde")?;
    require_probs(b, "gde")?;
    if a.n() != b.n() || a.k() != b.k() {
        return Err(Error::ShapeMismatch {
            n_left: a.n(),
            k_left: a.k(),
            n_right: b.n(),
            k_right: b.k(),
        });
    }
    let disagree = a
        .pseudo_labels()
        .iter()
        .zip(b.pseudo_labels())
        .filter(|(x, y)| **x != *y)
        .count();
    Ok(Estimate {
        method: Method::Gde,
        value: disagree as f64 / a.n() as f64,
        meta: single_shot_meta(a),
    })
}

/// Scalar score ATC thresholds operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfidenceScore {
    /// Row maximum.
    MaxConfidence,
    /// `sum_j f_j log f_j` with entries clamped at [`PROB_CLAMP`].
    NegativeEntropy,
}

/// Per-sample scores for ATC.
pub fn atc_scores(p: &PredictionSet, score: ConfidenceScore) -> Result<Vec<f64>> {
    require_probs(p, "atc score")?;
    Ok(match score {
        ConfidenceScore::MaxConfidence => p.max_scores(),
        ConfidenceScore::NegativeEntropy => p
            .rows()
            .map(|row| {
                row.iter()
                    .map(|&f| {
                        let f = f.max(PROB_CLAMP);
                        f * f.ln()
                    })
                    .sum()
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMethod {
    AtcMc,
    AtcNe,
    Cott,
}

impl ThresholdMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdMethod::AtcMc => "atc-mc",
            ThresholdMethod::AtcNe => "atc-ne",
            ThresholdMethod::Cott => "cott",
        }
    }
}

/// A learned decision threshold with its fitting provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub method: ThresholdMethod,
    pub val_error: f64,
    pub val_n: usize,
}

/// Fit the ATC threshold on labeled validation scores: with
/// `r = floor(eps_val * n)`, the threshold is the `(r+1)`-th smallest score,
/// so the count strictly below it matches `eps_val * n` as closely as ties
/// permit.
pub fn atc_fit(val: &PredictionSet, score: ConfidenceScore) -> Result<Threshold> {
    require_labels(val, "atc_fit")?;
    let eps_val = true_error(val)?;
    let mut scores = atc_scores(val, score)?;
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = scores.len();
    let r = (eps_val * n as f64).floor() as usize;
    // r == n only when every validation row is wrong; no finite order
    // statistic puts all scores strictly below, so sit just above the top.
    let value = if r >= n {
        scores[n - 1] + 1e-9
    } else {
        scores[r]
    };
    Ok(Threshold {
        value,
        method: match score {
            ConfidenceScore::MaxConfidence => ThresholdMethod::AtcMc,
            ConfidenceScore::NegativeEntropy => ThresholdMethod::AtcNe,
        },
        val_error: eps_val,
        val_n: n,
    })
}

/// ATC estimate: fraction of target scores strictly below the threshold.
pub fn atc(
    target: &PredictionSet,
    threshold: &Threshold,
    score: ConfidenceScore,
) -> Result<Estimate> {
    let (expected, method) = match score {
        ConfidenceScore::MaxConfidence => (ThresholdMethod::AtcMc, Method::AtcMc),
        ConfidenceScore::NegativeEntropy => (ThresholdMethod::AtcNe, Method::AtcNe),
    };
    if threshold.method != expected {
        return Err(Error::ThresholdMismatch {
            fit: threshold.method.as_str(),
            applied: expected.as_str(),
        });
    }
    let scores = atc_scores(target, score)?;
    let below = scores.iter().filter(|&&s| s < threshold.value).count();
    Ok(Estimate {
        method,
        value: below as f64 / target.n() as f64,
        meta: single_shot_meta(target),
    })
}

/// Confidence Optimal Transport: the W-infinity distance between the target
/// confidence distribution and the source label marginal.
pub fn cot(target: &PredictionSet, source: &LabelMarginal) -> Result<Estimate> {
    require_probs(target, "cot")?;
    let result = w_inf(target, source)?;
    Ok(Estimate {
        method: Method::Cot,
        value: result.total.clamp(0.0, 1.0),
        meta: single_shot_meta(target),
    })
}

/// Fit the COTT threshold on labeled validation data: with
/// `r = ceil(eps_val * n)`, the threshold is the `r`-th largest per-sample
/// transport cost, so the fraction of costs at or above it matches `eps_val`
/// as closely as ties permit. A perfectly accurate validation set yields a
/// threshold above every possible cost.
pub fn cott_fit(val: &PredictionSet, source: &LabelMarginal) -> Result<Threshold> {
    require_labels(val, "cott_fit")?;
    require_probs(val, "cott_fit")?;
    let eps_val = true_error(val)?;
    let n = val.n();
    let value = if eps_val == 0.0 {
        ABOVE_ALL_COSTS
    } else {
        let mut costs = w_inf(val, source)?.per_sample_costs;
        costs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let r = (eps_val * n as f64).ceil() as usize;
        costs[r - 1]
    };
    Ok(Threshold {
        value,
        method: ThresholdMethod::Cott,
        val_error: eps_val,
        val_n: n,
    })
}

/// COTT estimate: fraction of target per-sample transport costs at or above
/// the threshold.
pub fn cott(
    target: &PredictionSet,
    threshold: &Threshold,
    source: &LabelMarginal,
) -> Result<Estimate> {
    if threshold.method != ThresholdMethod::Cott {
        return Err(Error::ThresholdMismatch {
            fit: threshold.method.as_str(),
            applied: ThresholdMethod::Cott.as_str(),
        });
    }
    require_probs(target, "cott")?;
    let costs = w_inf(target, source)?.per_sample_costs;
    let above = costs.iter().filter(|&&c| c >= threshold.value).count();
    Ok(Estimate {
        method: Method::Cott,
        value: above as f64 / target.n() as f64,
        meta: single_shot_meta(target),
    })
}

/// Batched-estimation plan: sample-with-replacement batches of at most
/// `batch_max` rows, `ceil(n / batch_max)` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    batch_max: usize,
    batch_count: usize,
    seed: u64,
}

impl BatchPlan {
    pub const DEFAULT_BATCH_MAX: usize = 10_000;

    pub fn for_n(n: usize, batch_max: usize, seed: u64) -> Result<Self> {
        if batch_max == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(Self {
            batch_max,
            batch_count: n.div_ceil(batch_max),
            seed,
        })
    }

    pub fn batch_max(&self) -> usize {
        self.batch_max
    }

    pub fn batch_count(&self) -> usize {
        self.batch_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Run an estimator on batches sampled with replacement and average the
/// batch estimates.
///
/// Small inputs (`n <= batch_max`) run the estimator once on the full set
/// with no sampling. Batch `b` draws its rows from ChaCha8 stream `b` of the
/// plan seed, so adding batches never reshuffles earlier ones.
pub fn batched<F>(estimator: F, target: &PredictionSet, plan: &BatchPlan) -> Result<Estimate>
where
    F: Fn(&PredictionSet) -> Result<Estimate>,
{
    let n = target.n();
    if n <= plan.batch_max {
        let mut estimate = estimator(target)?;
        estimate.meta.batch_count = 1;
        estimate.meta.seed = Some(plan.seed);
        return Ok(estimate);
    }
    let count = plan.batch_count;
    let mut sum = 0.0;
    let mut method = None;
    let mut temperature = None;
    for b in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(b as u64);
        let indices: Vec<usize> = (0..plan.batch_max)
            .map(|_| rng.random_range(0..n))
            .collect();
        let batch = target.select_rows(&indices)?;
        let estimate = estimator(&batch)?;
        method.get_or_insert(estimate.method);
        temperature = temperature.or(estimate.meta.temperature);
        sum += estimate.value;
    }
    Ok(Estimate {
        method: method.expect("at least one batch"),
        value: sum / count as f64,
        meta: EstimateMeta {
            n,
            k: target.k(),
            batch_count: count,
            seed: Some(plan.seed),
            temperature,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictions::{PredictionSet, ScoreKind};

    fn probs(rows: Vec<Vec<f64>>) -> PredictionSet {
        PredictionSet::from_rows(rows, ScoreKind::Probabilities, None).unwrap()
    }

    fn labeled(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> PredictionSet {
        PredictionSet::from_rows(rows, ScoreKind::Probabilities, Some(labels)).unwrap()
    }

    fn worked_instance() -> PredictionSet {
        probs(vec![
            vec![0.9, 0.1],
            vec![0.8, 0.2],
            vec![0.6, 0.4],
            vec![0.3, 0.7],
        ])
    }

    #[test]
    fn ac_mc_examples() {
        let p = probs(vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.7, 0.3]]);
        assert!((ac_mc(&p).unwrap().value - (1.0 - 1.7 / 3.0)).abs() < 1e-12);

        let one_hot = probs(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(ac_mc(&one_hot).unwrap().value, 0.0);

        assert!((ac_mc(&worked_instance()).unwrap().value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn true_error_examples() {
        let perfect = labeled(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![0, 1]);
        assert_eq!(true_error(&perfect).unwrap(), 0.0);

        let half = labeled(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![1, 1]);
        assert_eq!(true_error(&half).unwrap(), 0.5);

        let quarter = labeled(
            vec![
                vec![0.9, 0.1],
                vec![0.9, 0.1],
                vec![0.9, 0.1],
                vec![0.1, 0.9],
            ],
            vec![0, 0, 0, 0],
        );
        assert_eq!(true_error(&quarter).unwrap(), 0.25);

        assert!(matches!(
            true_error(&probs(vec![vec![0.5, 0.5]])),
            Err(Error::MissingLabels(_))
        ));
    }

    #[test]
    fn doc_examples() {
        // eps_val = 0.1, mean val confidence 0.85, mean target confidence
        // 0.75 -> 0.1 + 0.25 - 0.15 = 0.2.
        let val = labeled(
            vec![
                vec![0.9, 0.1],
                vec![0.8, 0.2],
                vec![0.9, 0.1],
                vec![0.8, 0.2],
                vec![0.85, 0.15],
                vec![0.85, 0.15],
                vec![0.85, 0.15],
                vec![0.85, 0.15],
                vec![0.85, 0.15],
                vec![0.85, 0.15],
            ],
            vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        );
        assert!((true_error(&val).unwrap() - 0.1).abs() < 1e-12);
        let target = probs(vec![vec![0.75, 0.25], vec![0.75, 0.25]]);
        assert!((doc(&target, &val).unwrap().value - 0.2).abs() < 1e-12);

        // Target identical to validation: terms cancel to eps_val.
        assert!((doc(&val, &val).unwrap().value - 0.1).abs() < 1e-12);

        // Raw value below zero clamps to 0.
        let confident_target = probs(vec![vec![0.99, 0.01]]);
        let easy_val = labeled(vec![vec![0.85, 0.15]], vec![0]);
        assert_eq!(doc(&confident_target, &easy_val).unwrap().value, 0.0);
    }

    #[test]
    fn im_examples() {
        // Two bins on [0.5, 1]: low bin [0.5, 0.75), high bin [0.75, 1].
        // Validation: low bin holds two rows, one wrong (error 0.5); high
        // bin holds two rows, none wrong.
        let val = labeled(
            vec![
                vec![0.6, 0.4],
                vec![0.7, 0.3],
                vec![0.9, 0.1],
                vec![0.95, 0.05],
            ],
            vec![0, 1, 0, 0],
        );
        // All target mass in the low bin -> estimate 0.5.
        let target = probs(vec![vec![0.6, 0.4], vec![0.55, 0.45]]);
        assert!((im(&target, &val, 2).unwrap().value - 0.5).abs() < 1e-12);

        // Target distribution identical to validation -> eps_val.
        let eps_val = true_error(&val).unwrap();
        assert!((im(&val, &val, 2).unwrap().value - eps_val).abs() < 1e-12);

        // All target mass in a bin with no validation rows -> eps_val.
        let sparse_val = labeled(vec![vec![0.95, 0.05], vec![0.9, 0.1]], vec![0, 1]);
        let low_target = probs(vec![vec![0.55, 0.45]]);
        let eps_sparse = true_error(&sparse_val).unwrap();
        assert!(
            (im(&low_target, &sparse_val, 2).unwrap().value - eps_sparse).abs() < 1e-12
        );
    }

    #[test]
    fn gde_examples() {
        let p = worked_instance();
        assert_eq!(gde(&p, &p).unwrap().value, 0.0);

        let a = probs(vec![
            vec![0.1, 0.9],
            vec![0.1, 0.9],
            vec![0.9, 0.1],
            vec![0.9, 0.1],
        ]);
        let b = probs(vec![
            vec![0.1, 0.9],
            vec![0.9, 0.1],
            vec![0.9, 0.1],
            vec![0.9, 0.1],
        ]);
        assert_eq!(gde(&a, &b).unwrap().value, 0.25);

        let flipped = probs(vec![
            vec![0.9, 0.1],
            vec![0.9, 0.1],
            vec![0.1, 0.9],
            vec![0.1, 0.9],
        ]);
        assert_eq!(gde(&a, &flipped).unwrap().value, 1.0);

        let three = probs(vec![vec![0.2, 0.3, 0.5]]);
        assert!(matches!(
            gde(&p, &three),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn atc_score_examples() {
        let p = probs(vec![vec![0.7, 0.3]]);
        assert_eq!(
            atc_scores(&p, ConfidenceScore::MaxConfidence).unwrap(),
            vec![0.7]
        );

        let even = probs(vec![vec![0.5, 0.5]]);
        let ne = atc_scores(&even, ConfidenceScore::NegativeEntropy).unwrap()[0];
        assert!((ne + std::f64::consts::LN_2).abs() < 1e-12);

        let one_hot = probs(vec![vec![1.0, 0.0]]);
        let ne = atc_scores(&one_hot, ConfidenceScore::NegativeEntropy).unwrap()[0];
        assert!(ne.abs() < 1e-9);
    }

    #[test]
    fn atc_fit_order_statistic() {
        let val = labeled(
            vec![
                vec![0.6, 0.4],
                vec![0.7, 0.3],
                vec![0.8, 0.2],
                vec![0.9, 0.1],
            ],
            vec![1, 0, 0, 0],
        );
        let th = atc_fit(&val, ConfidenceScore::MaxConfidence).unwrap();
        assert!((th.value - 0.7).abs() < 1e-12);
        assert!((th.val_error - 0.25).abs() < 1e-12);
        assert_eq!(th.val_n, 4);

        // eps_val = 0 -> smallest score; nothing falls strictly below.
        let clean = labeled(vec![vec![0.6, 0.4], vec![0.9, 0.1]], vec![0, 0]);
        let th = atc_fit(&clean, ConfidenceScore::MaxConfidence).unwrap();
        assert_eq!(th.value, 0.6);
        let self_est = atc(&clean, &th, ConfidenceScore::MaxConfidence).unwrap();
        assert_eq!(self_est.value, 0.0);

        // All scores equal: fraction below is 0 regardless of eps_val.
        let tied = labeled(vec![vec![0.7, 0.3], vec![0.7, 0.3]], vec![0, 1]);
        let th = atc_fit(&tied, ConfidenceScore::MaxConfidence).unwrap();
        let self_est = atc(&tied, &th, ConfidenceScore::MaxConfidence).unwrap();
        assert_eq!(self_est.value, 0.0);
    }

    #[test]
    fn atc_counts_strictly_below() {
        let th = Threshold {
            value: 0.7,
            method: ThresholdMethod::AtcMc,
            val_error: 0.25,
            val_n: 4,
        };
        let target = probs(vec![vec![0.65, 0.35], vec![0.95, 0.05]]);
        assert_eq!(
            atc(&target, &th, ConfidenceScore::MaxConfidence).unwrap().value,
            0.5
        );

        let high = probs(vec![vec![0.7, 0.3], vec![0.9, 0.1]]);
        assert_eq!(
            atc(&high, &th, ConfidenceScore::MaxConfidence).unwrap().value,
            0.0
        );

        assert!(matches!(
            atc(&target, &th, ConfidenceScore::NegativeEntropy),
            Err(Error::ThresholdMismatch { .. })
        ));
    }

    #[test]
    fn cot_examples() {
        let m = LabelMarginal::new(vec![0.5, 0.5]).unwrap();
        let target = worked_instance();
        let estimate = cot(&target, &m).unwrap();
        assert!((estimate.value - 0.3).abs() < 1e-12);

        let one_hot = probs(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(cot(&one_hot, &m).unwrap().value, 0.0);

        // COT never undercuts AC.
        assert!(estimate.value >= ac_mc(&target).unwrap().value);
    }

    #[test]
    fn cott_fit_order_statistic() {
        // Validation whose per-sample costs are {0.05, 0.1, 0.2, 0.4}:
        // one-hot-ish rows all pseudo-labeled to their own class, uniform
        // marginal, so every row pays its own linf cost.
        let val = labeled(
            vec![
                vec![0.95, 0.05],
                vec![0.9, 0.1],
                vec![0.8, 0.2],
                vec![0.4, 0.6],
            ],
            vec![0, 0, 0, 0],
        );
        let m = LabelMarginal::new(vec![0.75, 0.25]).unwrap();
        // eps_val = 0.25 (row 3 argmax is class 1), demands [3, 1]: rows
        // 0..2 stay on class 0 (costs .05, .1, .2), row 3 on class 1 (.4).
        let th = cott_fit(&val, &m).unwrap();
        assert!((th.value - 0.4).abs() < 1e-12);
        assert!((th.val_error - 0.25).abs() < 1e-12);

        // Self-application: fraction >= t recovers eps_val exactly here.
        let self_est = cott(&val, &th, &m).unwrap();
        assert!((self_est.value - th.val_error).abs() <= 1.0 / val.n() as f64);

        // eps_val = 0 -> threshold above any cost, estimate 0 on itself.
        let clean = labeled(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![0, 1]);
        let m2 = LabelMarginal::new(vec![0.5, 0.5]).unwrap();
        let th = cott_fit(&clean, &m2).unwrap();
        assert!(th.value > 1.0);
        assert_eq!(cott(&clean, &th, &m2).unwrap().value, 0.0);
    }

    #[test]
    fn cott_counts_at_or_above() {
        let m = LabelMarginal::new(vec![0.5, 0.5]).unwrap();
        // Target with per-sample costs {0.1, 0.2, 0.6, 0.3} (worked example).
        let target = worked_instance();
        let th = Threshold {
            value: 0.3,
            method: ThresholdMethod::Cott,
            val_error: 0.5,
            val_n: 4,
        };
        assert_eq!(cott(&target, &th, &m).unwrap().value, 0.5);

        let zero = Threshold {
            value: 0.0,
            method: ThresholdMethod::Cott,
            val_error: 1.0,
            val_n: 4,
        };
        assert_eq!(cott(&target, &zero, &m).unwrap().value, 1.0);

        let one_hot = probs(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let above = Threshold {
            value: 0.5,
            method: ThresholdMethod::Cott,
            val_error: 0.0,
            val_n: 2,
        };
        assert_eq!(cott(&one_hot, &above, &m).unwrap().value, 0.0);
    }

    #[test]
    fn batched_small_input_runs_once() {
        let p = worked_instance();
        let plan = BatchPlan::for_n(p.n(), BatchPlan::DEFAULT_BATCH_MAX, 7).unwrap();
        let estimate = batched(ac_mc, &p, &plan).unwrap();
        assert_eq!(estimate.meta.batch_count, 1);
        assert_eq!(estimate.meta.seed, Some(7));
        assert_eq!(estimate.value, ac_mc(&p).unwrap().value);
    }

    #[test]
    fn batched_count_and_determinism() {
        // 25 rows with batch_max 10 -> 3 batches.
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| {
                let p = 0.5 + 0.02 * i as f64;
                vec![p, 1.0 - p]
            })
            .collect();
        let p = probs(rows);
        let plan = BatchPlan::for_n(p.n(), 10, 3).unwrap();
        assert_eq!(plan.batch_count(), 3);
        let a = batched(ac_mc, &p, &plan).unwrap();
        let b = batched(ac_mc, &p, &plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.meta.batch_count, 3);
        assert!(a.value >= 0.0 && a.value <= 1.0);

        let other_seed = BatchPlan::for_n(p.n(), 10, 4).unwrap();
        let c = batched(ac_mc, &p, &other_seed).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn batch_plan_validation() {
        assert!(matches!(BatchPlan::for_n(10, 0, 0), Err(Error::EmptyBatch)));
        assert_eq!(BatchPlan::for_n(25_000, 10_000, 0).unwrap().batch_count(), 3);
    }
}
