//! Predict a classifier's error on unlabeled, distribution-shifted test sets
//! from its softmax outputs.
//!
//! The toolkit implements Confidence Optimal Transport (COT) — the
//! W-infinity distance between the target confidence distribution and the
//! source label marginal — its thresholded variant (COTT), and six
//! confidence-based baselines (AC, DoC, IM, GDE, ATC-MC, ATC-NE), all built
//! on an exact discrete optimal-transport core with L-infinity ground cost.
//!
//! # Layout
//!
//! - [`predictions`]: score matrices, probability validation, softmax with
//!   temperature, pseudo-labels.
//! - [`marginal`]: label marginals and largest-remainder apportionment.
//! - [`transport`]: L-infinity costs, the exact transportation solver,
//!   W-infinity distances.
//! - [`estimators`]: the eight error estimators, threshold fitting, batched
//!   estimation.
//! - [`calibration`]: temperature scaling on validation logits.
//! - [`synth`]: seeded scenario generators for property tests and sweeps.
//!
//! # Example
//!
//! ```
//! use oodot::{cot, ac_mc, LabelMarginal, PredictionSet, ScoreKind};
//!
//! let target = PredictionSet::from_rows(
//!     vec![
//!         vec![0.9, 0.1],
//!         vec![0.8, 0.2],
//!         vec![0.6, 0.4],
//!         vec![0.3, 0.7],
//!     ],
//!     ScoreKind::Probabilities,
//!     None,
//! )?;
//! let source = LabelMarginal::new(vec![0.5, 0.5])?;
//!
//! let optimistic = ac_mc(&target)?.value;
//! let transported = cot(&target, &source)?.value;
//! assert!((optimistic - 0.25).abs() < 1e-12);
//! assert!((transported - 0.30).abs() < 1e-12);
//! # Ok::<(), oodot::Error>(())
//! ```

pub mod calibration;
pub mod error;
pub mod estimators;
pub mod marginal;
pub mod predictions;
pub mod synth;
pub mod transport;

pub use calibration::{fit_temperature, TemperatureFit, TEMPERATURE_MAX, TEMPERATURE_MIN};
pub use error::{Error, Result};
pub use estimators::{
    ac_mc, atc, atc_fit, atc_scores, batched, cot, cott, cott_fit, doc, gde, im, true_error,
    BatchPlan, ConfidenceScore, Estimate, EstimateMeta, Method, Threshold, ThresholdMethod,
};
pub use marginal::LabelMarginal;
pub use predictions::{PredictionSet, ScoreKind};
pub use synth::{
    dirichlet_shift, resample_to_marginal, shift_marginal, sweep, synth_classifier,
    tightness_family, SweepConfig, SweepRow, SynthScenario,
};
pub use transport::{
    build_cost_matrix, linf_cost, one_hot_w_inf, solve_transport, w_inf, CostMatrix,
    TransportResult,
};
