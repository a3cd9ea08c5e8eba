//! Synthetic scenario generation: Dirichlet label shifts, resampling to a
//! target marginal, the two-hot tightness family, and a parametric synthetic
//! classifier for miscalibration / pseudo-label-shift sweeps.
//!
//! All generators draw from ChaCha8 seeded with the caller's seed and are
//! bit-reproducible for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::estimators::{ac_mc, cot, cott, cott_fit, true_error};
use crate::marginal::LabelMarginal;
use crate::predictions::{PredictionSet, ScoreKind};
use crate::transport::one_hot_w_inf;

/// A generated prediction set with the quantities sweeps plot.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScenario {
    pub predictions: PredictionSet,
    pub source_marginal: LabelMarginal,
    /// Exactly `true_error(predictions)`.
    pub true_error: f64,
    /// Exactly `one_hot_w_inf(pseudo-label marginal, label marginal)`.
    pub pseudo_shift: f64,
    pub seed: u64,
}

/// Stateless per-index seed derivation (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

/// One draw from `Dirichlet(alpha * base)`, via normalized Gamma draws.
/// Zero-mass classes are dropped from the Dirichlet and reinstated at mass 0.
pub fn dirichlet_shift(base: &LabelMarginal, alpha: f64, seed: u64) -> Result<LabelMarginal> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = vec![0.0f64; base.k()];
    let mut total = 0.0;
    for (c, &mass) in base.mass().iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let gamma = Gamma::new(alpha * mass, 1.0)
            .map_err(|_| Error::Numeric("invalid gamma shape"))?;
        let g: f64 = gamma.sample(&mut rng);
        draws[c] = g;
        total += g;
    }
    if total <= 0.0 || total.is_nan() {
        return Err(Error::Numeric("dirichlet draw underflowed to zero"));
    }
    for d in draws.iter_mut() {
        *d /= total;
    }
    LabelMarginal::new(draws)
}

/// Stratified resampling with replacement: apportion `n_out` by `target` and
/// draw that many rows per class, uniformly with replacement, from the rows
/// carrying that label.
pub fn resample_to_marginal(
    p: &PredictionSet,
    target: &LabelMarginal,
    n_out: usize,
    seed: u64,
) -> Result<PredictionSet> {
    let labels = p
        .labels()
        .ok_or(Error::MissingLabels("resample_to_marginal"))?;
    if p.k() != target.k() {
        return Err(Error::ClassMismatch {
            left: p.k(),
            right: target.k(),
        });
    }
    let counts = target.apportion(n_out);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); p.k()];
    for (i, &label) in labels.iter().enumerate() {
        by_class[label].push(i);
    }
    for (c, &mass) in target.mass().iter().enumerate() {
        if mass > 0.0 && by_class[c].is_empty() {
            return Err(Error::UnsampleableClass(c));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n_out);
    for (c, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let pool = &by_class[c];
            picked.push(pool[rng.random_range(0..pool.len())]);
        }
    }
    p.select_rows(&picked)
}

/// Emit `n` confidence rows realizing the two-hot tightness family: one-hot
/// rows on the overlap of `pseudo` and `target`, and rows with `0.5 + delta`
/// on a pseudo-surplus class and `0.5 - delta` on a target-deficit class,
/// paired greedily in ascending class order. The pseudo-label marginal of
/// the output equals `apportion(pseudo, n) / n` exactly; when the marginals
/// coincide the output is purely one-hot and `delta` is irrelevant.
pub fn tightness_family(
    pseudo: &LabelMarginal,
    target: &LabelMarginal,
    delta: f64,
    n: usize,
) -> Result<PredictionSet> {
    if pseudo.k() != target.k() {
        return Err(Error::ClassMismatch {
            left: pseudo.k(),
            right: target.k(),
        });
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let k = pseudo.k();
    let pseudo_counts = pseudo.apportion(n);
    let target_counts = target.apportion(n);
    let mut surplus = vec![0usize; k];
    let mut deficit = vec![0usize; k];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for c in 0..k {
        let overlap = pseudo_counts[c].min(target_counts[c]);
        surplus[c] = pseudo_counts[c] - overlap;
        deficit[c] = target_counts[c] - overlap;
        for _ in 0..overlap {
            let mut row = vec![0.0; k];
            row[c] = 1.0;
            rows.push(row);
        }
    }
    let (mut a, mut b) = (0usize, 0usize);
    while a < k && b < k {
        if surplus[a] == 0 {
            a += 1;
            continue;
        }
        if deficit[b] == 0 {
            b += 1;
            continue;
        }
        let m = surplus[a].min(deficit[b]);
        for _ in 0..m {
            let mut row = vec![0.0; k];
            row[a] = 0.5 + delta;
            row[b] = 0.5 - delta;
            rows.push(row);
        }
        surplus[a] -= m;
        deficit[b] -= m;
    }
    PredictionSet::from_rows(rows, ScoreKind::Probabilities, None)
}

/// Generate a synthetic classifier's outputs: draw `n` labels from
/// `label_marginal`, flip `floor(target_error * n)` predictions to a
/// uniformly random wrong class, and emit rows with `confidence` mass on the
/// predicted class and the remainder spread uniformly.
pub fn synth_classifier(
    k: usize,
    n: usize,
    target_error: f64,
    confidence: f64,
    label_marginal: &LabelMarginal,
    seed: u64,
) -> Result<SynthScenario> {
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    if n == 0 {
        return Err(Error::EmptyPredictions);
    }
    if !(0.0..=1.0).contains(&target_error) {
        return Err(Error::ParameterOutOfRange {
            name: "target_error",
            range: "[0, 1]",
            got: target_error,
        });
    }
    if !(confidence > 1.0 / k as f64 && confidence <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "confidence",
            range: "(1/k, 1]",
            got: confidence,
        });
    }
    if label_marginal.k() != k {
        return Err(Error::ClassMismatch {
            left: label_marginal.k(),
            right: k,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Inverse-CDF categorical draws; zero-width windows can never win.
    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &m in label_marginal.mass() {
        acc += m;
        cumulative.push(acc);
    }
    cumulative[k - 1] = 1.0;
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.partition_point(|&c| c <= u).min(k - 1)
        })
        .collect();

    // Partial Fisher-Yates picks the flipped rows.
    let flip_count = (target_error * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..flip_count.min(n) {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut flipped = vec![false; n];
    for &i in order.iter().take(flip_count) {
        flipped[i] = true;
    }

    let off_mass = (1.0 - confidence) / (k - 1) as f64;
    let mut rows = Vec::with_capacity(n);
    for (i, &label) in labels.iter().enumerate() {
        let predicted = if flipped[i] {
            let wrong = rng.random_range(0..k - 1);
            if wrong >= label {
                wrong + 1
            } else {
                wrong
            }
        } else {
            label
        };
        let mut row = vec![off_mass; k];
        row[predicted] = confidence;
        rows.push(row);
    }

    let predictions = PredictionSet::from_rows(rows, ScoreKind::Probabilities, Some(labels))?;
    let err = true_error(&predictions)?;
    let pseudo_marginal =
        LabelMarginal::from_labels(&predictions.pseudo_labels(), k)?;
    let label_marginal_emp =
        LabelMarginal::from_labels(predictions.labels().expect("labels set"), k)?;
    let pseudo_shift = one_hot_w_inf(&pseudo_marginal, &label_marginal_emp)?;
    Ok(SynthScenario {
        predictions,
        source_marginal: label_marginal.clone(),
        true_error: err,
        pseudo_shift,
        seed,
    })
}

/// Deterministic label shift: interpolate the base marginal toward a point
/// mass on class 0 with strength `s` in `[0, 1]`.
pub fn shift_marginal(base: &LabelMarginal, s: f64) -> Result<LabelMarginal> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ParameterOutOfRange {
            name: "shift",
            range: "[0, 1]",
            got: s,
        });
    }
    let mass: Vec<f64> = base
        .mass()
        .iter()
        .enumerate()
        .map(|(c, &m)| (1.0 - s) * m + if c == 0 { s } else { 0.0 })
        .collect();
    LabelMarginal::new(mass)
}

/// Geometric source marginal (`mass_c` proportional to `2^-c`), skewed so
/// uniform wrong-class flips visibly move the pseudo-label marginal.
pub fn default_base_marginal(k: usize) -> LabelMarginal {
    let mass: Vec<f64> = (0..k).map(|c| 0.5f64.powi(c as i32 + 1)).collect();
    let total: f64 = mass.iter().sum();
    LabelMarginal::new(mass.into_iter().map(|m| m / total).collect())
        .expect("geometric weights normalize")
}

/// Grid configuration for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k: usize,
    pub n: usize,
    pub target_errors: Vec<f64>,
    pub confidences: Vec<f64>,
    pub marginal_shifts: Vec<f64>,
    /// Error of the synthetic validation set used to fit COTT thresholds.
    pub val_error: f64,
    /// Source label marginal; geometric when absent.
    pub base_marginal: Option<LabelMarginal>,
}

impl Default for SweepConfig {
    /// 10 target errors x 1 confidence x 10 marginal shifts.
    fn default() -> Self {
        let ramp = |lo: f64, hi: f64| -> Vec<f64> {
            (0..10).map(|i| lo + (hi - lo) * i as f64 / 9.0).collect()
        };
        Self {
            k: 8,
            n: 1000,
            target_errors: ramp(0.05, 0.75),
            confidences: vec![0.9],
            marginal_shifts: ramp(0.0, 0.9),
            val_error: 0.1,
            base_marginal: None,
        }
    }
}

/// One sweep cell; recomputable from `(config cell, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pseudo_shift: f64,
    pub abs_err_ac: f64,
    pub abs_err_cot: f64,
    pub abs_err_cott: f64,
    pub true_error: f64,
    pub seed: u64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "pseudo_shift,abs_err_ac,abs_err_cot,abs_err_cott,true_error,seed";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.pseudo_shift,
            self.abs_err_ac,
            self.abs_err_cot,
            self.abs_err_cott,
            self.true_error,
            self.seed
        )
    }
}

/// Run the grid: for each (target_error, confidence, marginal_shift) cell,
/// draw target labels from the shifted marginal, estimate with AC, COT, and
/// COTT against the unshifted source marginal, and report absolute errors
/// next to the cell's pseudo-label shift.
pub fn sweep(config: &SweepConfig, seed: u64) -> Result<Vec<SweepRow>> {
    if !(0.0..=1.0).contains(&config.val_error) {
        return Err(Error::ParameterOutOfRange {
            name: "val_error",
            range: "[0, 1]",
            got: config.val_error,
        });
    }
    let base = config
        .base_marginal
        .clone()
        .unwrap_or_else(|| default_base_marginal(config.k));
    if base.k() != config.k {
        return Err(Error::ClassMismatch {
            left: base.k(),
            right: config.k,
        });
    }
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &target_error in &config.target_errors {
        for &confidence in &config.confidences {
            for &shift in &config.marginal_shifts {
                let scenario_seed = derive_seed(seed, 2 * cell);
                let val_seed = derive_seed(seed, 2 * cell + 1);
                cell += 1;

                let shifted = shift_marginal(&base, shift)?;
                let scenario = synth_classifier(
                    config.k,
                    config.n,
                    target_error,
                    confidence,
                    &shifted,
                    scenario_seed,
                )?;
                let val = synth_classifier(
                    config.k,
                    config.n,
                    config.val_error,
                    confidence,
                    &base,
                    val_seed,
                )?;

                let target = &scenario.predictions;
                let ac_value = ac_mc(target)?.value;
                let cot_value = cot(target, &base)?.value;
                let threshold = cott_fit(&val.predictions, &base)?;
                let cott_value = cott(target, &threshold, &base)?.value;

                let eps = scenario.true_error;
                rows.push(SweepRow {
                    pseudo_shift: scenario.pseudo_shift,
                    abs_err_ac: (eps - ac_value).abs(),
                    abs_err_cot: (eps - cot_value).abs(),
                    abs_err_cott: (eps - cott_value).abs(),
                    true_error: eps,
                    seed: scenario_seed,
                });
            }
        }
    }
    Ok(rows)
}
