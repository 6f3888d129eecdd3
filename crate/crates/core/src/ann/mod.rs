//! Single-hidden-layer networks mapping distance to path loss.
//!
//! All three network kinds share one output expression,
//! `y = F_o(sum_j v_j F_n(a_j))`, evaluated in a normalized space:
//!
//! | kind | `a_j`                      | `F_n`       | `F_o`     | trained by          |
//! |------|----------------------------|-------------|-----------|---------------------|
//! | BPN  | `w_j x`                    | logistic    | logistic  | per-sample gradient |
//! | ELM  | `w_j x`, `w_j` random      | logistic    | identity  | one ridge solve     |
//! | RBF  | `(w_j x - c_j)^2 / 2s_j^2` | `exp(-a)`   | identity  | K-means + ridge     |
//!
//! There are no bias terms. Inputs and targets are mapped into `[0.1, 0.9]`
//! by a [`Normalizer`] fitted on the training set.

pub mod bpn;
pub mod elm;
pub mod kmeans;
pub mod rbf;
mod record;
pub mod ridge;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bpn::train_bpn;
pub use elm::train_elm;
pub use kmeans::kmeans;
pub use rbf::train_rbf;

/// Default lower edge of the normalized band.
pub const TARGET_LO: f64 = 0.1;
/// Default upper edge of the normalized band.
pub const TARGET_HI: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Bpn,
    Elm,
    Rbf,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 3] = [NetworkKind::Bpn, NetworkKind::Elm, NetworkKind::Rbf];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Bpn => "bpn",
            NetworkKind::Elm => "elm",
            NetworkKind::Rbf => "rbf",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpn" => Ok(NetworkKind::Bpn),
            "elm" => Ok(NetworkKind::Elm),
            "rbf" | "rbf-nn" | "rbfnn" => Ok(NetworkKind::Rbf),
            other => Err(Error::invalid(format!("unknown network kind `{other}`"))),
        }
    }
}

/// Hyper-parameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    pub hidden_neurons: usize,
    /// BPN only.
    pub learning_rate: f64,
    pub error_threshold: f64,
    /// Epoch cap for BPN.
    pub max_iterations: usize,
    pub seed: u64,
}

impl NetworkConfig {
    pub const DEFAULT_LEARNING_RATE: f64 = 1e-6;
    pub const DEFAULT_ERROR_THRESHOLD: f64 = 1e-5;
    pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

    pub fn new(kind: NetworkKind, hidden_neurons: usize) -> Self {
        Self {
            kind,
            hidden_neurons,
            learning_rate: Self::DEFAULT_LEARNING_RATE,
            error_threshold: Self::DEFAULT_ERROR_THRESHOLD,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_neurons == 0 {
            return Err(Error::invalid("hidden_neurons must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.error_threshold.is_finite() && self.error_threshold > 0.0) {
            return Err(Error::invalid("error_threshold must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn expect_kind(&self, kind: NetworkKind) -> Result<()> {
        self.validate()?;
        if self.kind != kind {
            return Err(Error::invalid(format!(
                "config is for {} but the {kind} trainer was called",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Affine maps between physical units and the normalized band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub in_min: f64,
    pub in_max: f64,
    pub out_min: f64,
    pub out_max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
}

impl Normalizer {
    pub fn new(in_min: f64, in_max: f64, out_min: f64, out_max: f64) -> Result<Self> {
        Self::with_band(in_min, in_max, out_min, out_max, TARGET_LO, TARGET_HI)
    }

    pub fn with_band(
        in_min: f64,
        in_max: f64,
        out_min: f64,
        out_max: f64,
        target_lo: f64,
        target_hi: f64,
    ) -> Result<Self> {
        let n = Self {
            in_min,
            in_max,
            out_min,
            out_max,
            target_lo,
            target_hi,
        };
        n.validate()?;
        Ok(n)
    }

    /// Fits the input and output ranges of a training set.
    pub fn fit(inputs: &[f64], targets: &[f64]) -> Result<Self> {
        let (in_min, in_max) = min_max(inputs)?;
        let (out_min, out_max) = min_max(targets)?;
        if in_max <= in_min {
            return Err(Error::DegenerateRange(
                "training inputs span zero width".into(),
            ));
        }
        if out_max <= out_min {
            return Err(Error::DegenerateRange(
                "training targets are constant".into(),
            ));
        }
        Self::new(in_min, in_max, out_min, out_max)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.in_min,
            self.in_max,
            self.out_min,
            self.out_max,
            self.target_lo,
            self.target_hi,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("normalizer constants must be finite"));
        }
        if self.in_max <= self.in_min || self.out_max <= self.out_min {
            return Err(Error::DegenerateRange(
                "normalizer ranges must have positive width".into(),
            ));
        }
        if !(0.0 <= self.target_lo && self.target_lo < self.target_hi && self.target_hi <= 1.0) {
            return Err(Error::invalid(
                "normalized band must satisfy 0 <= lo < hi <= 1",
            ));
        }
        Ok(())
    }

    fn band(&self) -> f64 {
        self.target_hi - self.target_lo
    }

    pub fn normalize_input(&self, d: f64) -> f64 {
        self.target_lo + (d - self.in_min) / (self.in_max - self.in_min) * self.band()
    }

    pub fn denormalize_input(&self, x: f64) -> f64 {
        self.in_min + (x - self.target_lo) / self.band() * (self.in_max - self.in_min)
    }

    pub fn normalize_output(&self, y: f64) -> f64 {
        self.target_lo + (y - self.out_min) / (self.out_max - self.out_min) * self.band()
    }

    pub fn denormalize_output(&self, z: f64) -> f64 {
        self.out_min + (z - self.target_lo) / self.band() * (self.out_max - self.out_min)
    }

    /// dB per normalized output unit.
    pub fn output_scale(&self) -> f64 {
        (self.out_max - self.out_min) / self.band()
    }
}

fn min_max(v: &[f64]) -> Result<(f64, f64)> {
    if v.is_empty() {
        return Err(Error::invalid("empty sequence"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite value in training data"));
    }
    Ok(v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        }))
}

/// Distances and measured path loss used for training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::invalid(format!(
                "training set needs equal nonempty lengths (got {} inputs, {} targets)",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::invalid("training set contains non-finite values"));
        }
        if inputs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "training inputs must be strictly increasing",
            ));
        }
        Ok(Self { inputs, targets })
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// A training set already mapped into the normalized band.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSet {
    pub norm: Normalizer,
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
}

impl ScaledSet {
    pub fn from_training(data: &TrainingSet) -> Result<Self> {
        let norm = Normalizer::fit(&data.inputs, &data.targets)?;
        Ok(Self {
            xs: data
                .inputs
                .iter()
                .map(|&d| norm.normalize_input(d))
                .collect(),
            ts: data
                .targets
                .iter()
                .map(|&y| norm.normalize_output(y))
                .collect(),
            norm,
        })
    }

    /// Uses already-normalized samples with an explicit normalizer.
    pub fn new(norm: Normalizer, xs: Vec<f64>, ts: Vec<f64>) -> Result<Self> {
        norm.validate()?;
        if xs.is_empty() || xs.len() != ts.len() {
            return Err(Error::invalid("scaled set needs equal nonempty lengths"));
        }
        if xs.iter().chain(&ts).any(|v| !v.is_finite()) {
            return Err(Error::invalid("scaled set contains non-finite values"));
        }
        Ok(Self { norm, xs, ts })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Logistic function.
#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A network with its weights and normalization constants.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    kind: NetworkKind,
    input_weights: Vec<f64>,
    output_weights: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
    norm: Option<Normalizer>,
}

impl NetworkModel {
    /// Assembles a model and checks the per-kind shape invariants.
    ///
    /// `centers` and `widths` must be empty for BPN and ELM.
    pub fn from_parts(
        kind: NetworkKind,
        input_weights: Vec<f64>,
        output_weights: Vec<f64>,
        centers: Vec<f64>,
        widths: Vec<f64>,
        norm: Option<Normalizer>,
    ) -> Result<Self> {
        let m = output_weights.len();
        if m == 0 {
            return Err(Error::invalid("model needs at least one hidden neuron"));
        }
        if input_weights.len() != m {
            return Err(Error::invalid("input and output weight counts differ"));
        }
        match kind {
            NetworkKind::Rbf => {
                if centers.len() != m || widths.len() != m {
                    return Err(Error::invalid(
                        "RBF model needs one center and width per neuron",
                    ));
                }
                if input_weights.iter().any(|&w| w != 1.0) {
                    return Err(Error::invalid("RBF input weights must all equal 1"));
                }
                if widths.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                    return Err(Error::invalid("RBF widths must be positive"));
                }
            }
            NetworkKind::Bpn | NetworkKind::Elm => {
                if !centers.is_empty() || !widths.is_empty() {
                    return Err(Error::invalid(format!(
                        "{kind} model has no centers or widths"
                    )));
                }
            }
        }
        if input_weights
            .iter()
            .chain(&output_weights)
            .chain(&centers)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("model weights must be finite"));
        }
        if let Some(n) = &norm {
            n.validate()?;
        }
        Ok(Self {
            kind,
            input_weights,
            output_weights,
            centers,
            widths,
            norm,
        })
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn hidden_neurons(&self) -> usize {
        self.output_weights.len()
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.norm.as_ref()
    }

    pub fn is_trained(&self) -> bool {
        self.norm.is_some()
    }

    /// Output of hidden neuron `j` for a normalized input.
    #[inline]
    pub fn hidden_output(&self, j: usize, x: f64) -> f64 {
        match self.kind {
            NetworkKind::Bpn | NetworkKind::Elm => logistic(self.input_weights[j] * x),
            NetworkKind::Rbf => {
                let r = self.input_weights[j] * x - self.centers[j];
                let s = self.widths[j];
                (-(r * r) / (2.0 * s * s)).exp()
            }
        }
    }

    /// Network output in normalized units.
    pub fn forward_normalized(&self, x: f64) -> f64 {
        let s: f64 = (0..self.hidden_neurons())
            .map(|j| self.output_weights[j] * self.hidden_output(j, x))
            .sum();
        match self.kind {
            NetworkKind::Bpn => logistic(s),
            NetworkKind::Elm | NetworkKind::Rbf => s,
        }
    }

    /// Predicted path loss in dB at a distance in meters.
    pub fn forward(&self, distance_m: f64) -> Result<f64> {
        let norm = self
            .norm
            .as_ref()
            .ok_or_else(|| Error::State("model has not been trained".into()))?;
        Ok(norm.denormalize_output(self.forward_normalized(norm.normalize_input(distance_m))))
    }

    pub fn predict(&self, distances_m: &[f64]) -> Result<Vec<f64>> {
        distances_m.iter().map(|&d| self.forward(d)).collect()
    }

    /// Self-describing `key = value` text record.
    pub fn to_record(&self) -> String {
        record::write(self)
    }

    pub fn from_record(text: &str) -> Result<Self> {
        record::read(text)
    }
}

/// Bookkeeping from one training call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Full passes over the training set (BPN only).
    pub epochs: usize,
    /// Linear systems solved for output weights.
    pub linear_solves: usize,
    /// Normalized loss `E` before training and after every epoch (BPN only).
    pub loss_history: Vec<f64>,
    /// `E` of the returned model on the normalized training set.
    pub final_loss: f64,
}

/// A trained model together with its training report.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: NetworkModel,
    pub report: TrainReport,
}

/// `E = 1/2 sum (t_i - y_i)^2` over a normalized set.
pub fn half_sse(model: &NetworkModel, xs: &[f64], ts: &[f64]) -> f64 {
    0.5 * xs
        .iter()
        .zip(ts)
        .map(|(&x, &t)| {
            let e = t - model.forward_normalized(x);
            e * e
        })
        .sum::<f64>()
}

/// Trains the kind named in `cfg` on already-normalized data.
pub fn fit(set: &ScaledSet, cfg: &NetworkConfig) -> Result<Trained> {
    match cfg.kind {
        NetworkKind::Bpn => bpn::fit(set, cfg),
        NetworkKind::Elm => elm::fit(set, cfg),
        NetworkKind::Rbf => rbf::fit(set, cfg),
    }
}

/// Fits a normalizer on `data` and trains the kind named in `cfg`.
pub fn train(data: &TrainingSet, cfg: &NetworkConfig) -> Result<Trained> {
    cfg.validate()?;
    fit(&ScaledSet::from_training(data)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm() -> Normalizer {
        Normalizer::new(50.0, 4307.58, 80.0, 160.0).unwrap()
    }

    #[test]
    fn bpn_with_zero_output_weights_gives_midpoint() {
        let n = norm();
        let m = NetworkModel::from_parts(
            NetworkKind::Bpn,
            vec![0.3, -0.2, 0.1],
            vec![0.0; 3],
            vec![],
            vec![],
            Some(n),
        )
        .unwrap();
        assert_eq!(m.forward_normalized(0.37), 0.5);
        // 0.5 sits at the middle of [0.1, 0.9], i.e. the middle of [out_min, out_max]
        let y = m.forward(1234.0).unwrap();
        assert!((y - 120.0).abs() < 1e-12);
    }

    #[test]
    fn elm_single_neuron_matches_pair() {
        let n = norm();
        let (d1, y1) = (900.0, 131.25);
        let x1 = n.normalize_input(d1);
        let w = 0.7;
        let v = n.normalize_output(y1) / logistic(w * x1);
        let m =
            NetworkModel::from_parts(NetworkKind::Elm, vec![w], vec![v], vec![], vec![], Some(n))
                .unwrap();
        assert!((m.forward(d1).unwrap() - y1).abs() < 1e-9);
    }

    #[test]
    fn untrained_forward_is_a_state_error() {
        let m =
            NetworkModel::from_parts(NetworkKind::Elm, vec![1.0], vec![1.0], vec![], vec![], None)
                .unwrap();
        assert!(matches!(m.forward(1.0), Err(Error::State(_))));
    }

    #[test]
    fn rbf_shape_rules() {
        assert!(NetworkModel::from_parts(
            NetworkKind::Rbf,
            vec![0.5],
            vec![1.0],
            vec![0.2],
            vec![0.1],
            None
        )
        .is_err());
        assert!(NetworkModel::from_parts(
            NetworkKind::Rbf,
            vec![1.0],
            vec![1.0],
            vec![0.2],
            vec![0.0],
            None
        )
        .is_err());
        assert!(NetworkModel::from_parts(
            NetworkKind::Elm,
            vec![1.0],
            vec![1.0],
            vec![0.2],
            vec![0.1],
            None
        )
        .is_err());
    }

    #[test]
    fn normalizer_rejects_degenerate_ranges() {
        assert!(Normalizer::fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(Normalizer::fit(&[1.0, 2.0], &[3.0, 3.0]).is_err());
        assert!(Normalizer::with_band(0.0, 1.0, 0.0, 1.0, 0.5, 0.5).is_err());
        assert!(Normalizer::with_band(0.0, 1.0, 0.0, 1.0, -0.1, 0.5).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("BPN".parse::<NetworkKind>().unwrap(), NetworkKind::Bpn);
        assert_eq!("rbf".parse::<NetworkKind>().unwrap(), NetworkKind::Rbf);
        assert!("mlp".parse::<NetworkKind>().is_err());
        assert!(NetworkKind::Bpn < NetworkKind::Elm && NetworkKind::Elm < NetworkKind::Rbf);
    }

    #[test]
    fn training_set_requires_increasing_inputs() {
        assert!(TrainingSet::new(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(TrainingSet::new(vec![], vec![]).is_err());
        assert!(TrainingSet::new(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn normalization_round_trip(
            lo in -1e4f64..1e4, span in 1e-3f64..1e5,
            olo in -300f64..300.0, ospan in 1e-2f64..500.0,
            frac in -0.5f64..1.5,
        ) {
            let n = Normalizer::new(lo, lo + span, olo, olo + ospan).unwrap();
            let d = lo + frac * span;
            let y = olo + frac * ospan;
            let back = n.denormalize_input(n.normalize_input(d));
            prop_assert!((back - d).abs() <= 1e-12 * d.abs().max(span).max(lo.abs()));
            let back = n.denormalize_output(n.normalize_output(y));
            prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(ospan).max(olo.abs()));
        }
    }
}
