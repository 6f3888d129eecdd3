//! Equally spaced train/predict splits, single prediction runs and sweeps.
//!
//! Every `q + 1`-th sample is used for training, the `q` samples in between
//! are predicted by the trained network, and the last sample is always a
//! training anchor so predictions are interpolations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{self, NetworkConfig, NetworkKind, NetworkModel, TrainingSet};
use crate::error::{Error, Result};
use crate::evaluation::rmse;
use crate::pipeline::{fit_log_distance, fit_log_distance_points, ChannelTrace, LogDistanceModel};

/// Partition of `0..n` into training and predicted indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub q: usize,
    pub train_indices: Vec<usize>,
    pub predict_indices: Vec<usize>,
}

impl SplitSpec {
    pub fn n(&self) -> usize {
        self.train_indices.len() + self.predict_indices.len()
    }

    /// Fraction of samples used for training.
    pub fn realized_ratio(&self) -> f64 {
        self.train_indices.len() as f64 / self.n() as f64
    }

    /// Nominal ratio `1 / (q + 1)`.
    pub fn nominal_ratio(&self) -> f64 {
        1.0 / (self.q + 1) as f64
    }
}

/// Training indices `0, q+1, 2(q+1), ...` plus `n - 1`; the rest are predicted.
pub fn split_equally_spaced(n: usize, q: usize) -> Result<SplitSpec> {
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} samples")));
    }
    if q >= n {
        return Err(Error::invalid(format!(
            "q = {q} leaves no room for training points among {n} samples"
        )));
    }
    let mut train: Vec<usize> = (0..n).step_by(q + 1).collect();
    if *train.last().expect("index 0 is always present") != n - 1 {
        train.push(n - 1);
    }
    let mut is_train = vec![false; n];
    for &i in &train {
        is_train[i] = true;
    }
    let predict = (0..n).filter(|&i| !is_train[i]).collect();
    Ok(SplitSpec {
        q,
        train_indices: train,
        predict_indices: predict,
    })
}

/// Which points enter the RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseScope {
    /// Withheld points only.
    #[default]
    PredictedOnly,
    /// Every point, using the network output at training points too.
    AllPoints,
}

impl fmt::Display for RmseScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RmseScope::PredictedOnly => "predicted_only",
            RmseScope::AllPoints => "all_points",
        })
    }
}

impl FromStr for RmseScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "predicted_only" | "predicted" => Ok(RmseScope::PredictedOnly),
            "all_points" | "all" => Ok(RmseScope::AllPoints),
            other => Err(Error::invalid(format!("unknown rmse scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionOptions {
    pub trace_id: String,
    pub scope: RmseScope,
}

/// One (network, q) experiment on one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRun {
    pub config: NetworkConfig,
    pub q: usize,
    pub trace_id: String,
    pub scope: RmseScope,
    pub realized_ratio: f64,
    pub split: SplitSpec,
    /// Network output at `split.predict_indices`.
    pub predicted_pl_db: Vec<f64>,
    /// `predicted_pl_db` minus the log-distance model fitted on training points.
    pub predicted_lsf_db: Vec<f64>,
    /// Measured LSF at `split.predict_indices`, relative to the full-trace fit.
    pub measured_lsf_db: Vec<f64>,
    pub rmse_pl_db: Option<f64>,
    pub rmse_lsf_db: Option<f64>,
    pub train_seconds: f64,
    /// Log-distance fit on the training points.
    pub train_fit: Option<LogDistanceModel>,
    /// Log-distance fit on the full measured trace.
    pub reference_fit: Option<LogDistanceModel>,
    pub model: Option<NetworkModel>,
    pub error: Option<String>,
}

impl PredictionRun {
    pub fn run_id(&self) -> String {
        run_id(&self.config, self.q)
    }

    fn failed(cfg: &NetworkConfig, q: usize, opts: &PredictionOptions, err: &Error) -> Self {
        Self {
            config: cfg.clone(),
            q,
            trace_id: opts.trace_id.clone(),
            scope: opts.scope,
            realized_ratio: f64::NAN,
            split: SplitSpec {
                q,
                train_indices: vec![],
                predict_indices: vec![],
            },
            predicted_pl_db: vec![],
            predicted_lsf_db: vec![],
            measured_lsf_db: vec![],
            rmse_pl_db: None,
            rmse_lsf_db: None,
            train_seconds: 0.0,
            train_fit: None,
            reference_fit: None,
            model: None,
            error: Some(err.to_string()),
        }
    }
}

/// Stable file-name stem for a run.
pub fn run_id(cfg: &NetworkConfig, q: usize) -> String {
    format!("{}_m{}_q{}_s{}", cfg.kind, cfg.hidden_neurons, q, cfg.seed)
}

pub fn run_prediction(
    trace: &ChannelTrace,
    q: usize,
    cfg: &NetworkConfig,
) -> Result<PredictionRun> {
    run_prediction_with(trace, q, cfg, &PredictionOptions::default())
}

/// Trains on the training subset, predicts the withheld points and scores them.
///
/// Only training-index values reach the network and the train-side
/// log-distance fit.
pub fn run_prediction_with(
    trace: &ChannelTrace,
    q: usize,
    cfg: &NetworkConfig,
    opts: &PredictionOptions,
) -> Result<PredictionRun> {
    cfg.validate()?;
    let split = split_equally_spaced(trace.len(), q)?;
    let d = trace.distances_m();
    let pl = trace.pl_db();

    let train_d: Vec<f64> = split.train_indices.iter().map(|&i| d[i]).collect();
    let train_pl: Vec<f64> = split.train_indices.iter().map(|&i| pl[i]).collect();
    let train_fit = fit_log_distance_points(&train_d, &train_pl)?;
    let data = TrainingSet::new(train_d, train_pl)?;

    let started = Instant::now();
    let model = ann::train(&data, cfg)?.model;
    let train_seconds = started.elapsed().as_secs_f64();

    let reference_fit = fit_log_distance(trace)?;
    let reference_lsf = |i: usize| pl[i] - reference_fit.predict_db(d[i]);

    let pred_d: Vec<f64> = split.predict_indices.iter().map(|&i| d[i]).collect();
    let predicted_pl_db = model.predict(&pred_d)?;
    let predicted_lsf_db: Vec<f64> = pred_d
        .iter()
        .zip(&predicted_pl_db)
        .map(|(&x, &p)| p - train_fit.predict_db(x))
        .collect();
    let measured_pl: Vec<f64> = split.predict_indices.iter().map(|&i| pl[i]).collect();
    let measured_lsf_db: Vec<f64> = split
        .predict_indices
        .iter()
        .map(|&i| reference_lsf(i))
        .collect();

    let (rmse_pl_db, rmse_lsf_db) = match opts.scope {
        RmseScope::PredictedOnly if split.predict_indices.is_empty() => (None, None),
        RmseScope::PredictedOnly => (
            Some(rmse(&measured_pl, &predicted_pl_db)?),
            Some(rmse(&measured_lsf_db, &predicted_lsf_db)?),
        ),
        RmseScope::AllPoints => {
            let out = model.predict(d)?;
            let out_lsf: Vec<f64> = d
                .iter()
                .zip(&out)
                .map(|(&x, &p)| p - train_fit.predict_db(x))
                .collect();
            let ref_lsf: Vec<f64> = (0..trace.len()).map(reference_lsf).collect();
            (Some(rmse(pl, &out)?), Some(rmse(&ref_lsf, &out_lsf)?))
        }
    };

    Ok(PredictionRun {
        config: cfg.clone(),
        q,
        trace_id: opts.trace_id.clone(),
        scope: opts.scope,
        realized_ratio: split.realized_ratio(),
        split,
        predicted_pl_db,
        predicted_lsf_db,
        measured_lsf_db,
        rmse_pl_db,
        rmse_lsf_db,
        train_seconds,
        train_fit: Some(train_fit),
        reference_fit: Some(reference_fit),
        model: Some(model),
        error: None,
    })
}

/// Axes of a sweep. Duplicate values are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub kinds: Vec<NetworkKind>,
    pub neuron_counts: Vec<usize>,
    pub q_values: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    /// The neuron counts and q values the reference experiments use.
    pub fn reference(seeds: Vec<u64>) -> Self {
        Self {
            kinds: NetworkKind::ALL.to_vec(),
            neuron_counts: vec![10, 20, 30, 40, 50],
            q_values: vec![1, 2, 4, 6],
            seeds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty()
            || self.neuron_counts.is_empty()
            || self.q_values.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::invalid("every sweep axis needs at least one value"));
        }
        if self.neuron_counts.contains(&0) {
            return Err(Error::invalid("neuron counts must be positive"));
        }
        if self.q_values.contains(&0) {
            return Err(Error::invalid("sweep q values must be positive"));
        }
        Ok(())
    }

    /// Every (kind, M, q, seed) tuple in lexicographic order.
    pub fn points(&self) -> Vec<(NetworkKind, usize, usize, u64)> {
        let kinds: BTreeSet<_> = self.kinds.iter().copied().collect();
        let ms: BTreeSet<_> = self.neuron_counts.iter().copied().collect();
        let qs: BTreeSet<_> = self.q_values.iter().copied().collect();
        let seeds: BTreeSet<_> = self.seeds.iter().copied().collect();
        let mut out = Vec::with_capacity(kinds.len() * ms.len() * qs.len() * seeds.len());
        for &k in &kinds {
            for &m in &ms {
                for &q in &qs {
                    for &s in &seeds {
                        out.push((k, m, q, s));
                    }
                }
            }
        }
        out
    }
}

/// Training hyper-parameters shared by every run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub learning_rate: f64,
    pub error_threshold: f64,
    pub max_iterations: usize,
    pub scope: RmseScope,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            learning_rate: NetworkConfig::DEFAULT_LEARNING_RATE,
            error_threshold: NetworkConfig::DEFAULT_ERROR_THRESHOLD,
            max_iterations: NetworkConfig::DEFAULT_MAX_ITERATIONS,
            scope: RmseScope::PredictedOnly,
        }
    }
}

pub fn sweep(trace: &ChannelTrace, grid: &SweepGrid) -> Result<Vec<PredictionRun>> {
    sweep_with(trace, grid, &SweepSettings::default(), "")
}

/// Runs every grid point in parallel; results come back in grid order.
///
/// A failing run is kept, with `error` set and no metrics.
pub fn sweep_with(
    trace: &ChannelTrace,
    grid: &SweepGrid,
    settings: &SweepSettings,
    trace_id: &str,
) -> Result<Vec<PredictionRun>> {
    grid.validate()?;
    let opts = PredictionOptions {
        trace_id: trace_id.to_string(),
        scope: settings.scope,
    };
    let runs = grid
        .points()
        .into_par_iter()
        .map(|(kind, m, q, seed)| {
            let cfg = NetworkConfig {
                kind,
                hidden_neurons: m,
                learning_rate: settings.learning_rate,
                error_threshold: settings.error_threshold,
                max_iterations: settings.max_iterations,
                seed,
            };
            run_prediction_with(trace, q, &cfg, &opts)
                .unwrap_or_else(|e| PredictionRun::failed(&cfg, q, &opts, &e))
        })
        .collect();
    Ok(runs)
}

/// One row of the sweep report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub kind: NetworkKind,
    pub hidden_neurons: usize,
    pub q: usize,
    pub realized_ratio: Option<f64>,
    pub seed: u64,
    pub learning_rate: f64,
    pub error_threshold: f64,
    pub max_iterations: usize,
    pub rmse_pl_db: Option<f64>,
    pub rmse_lsf_db: Option<f64>,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn from_run(r: &PredictionRun) -> Self {
        Self {
            kind: r.config.kind,
            hidden_neurons: r.config.hidden_neurons,
            q: r.q,
            realized_ratio: r.realized_ratio.is_finite().then_some(r.realized_ratio),
            seed: r.config.seed,
            learning_rate: r.config.learning_rate,
            error_threshold: r.config.error_threshold,
            max_iterations: r.config.max_iterations,
            rmse_pl_db: r.rmse_pl_db,
            rmse_lsf_db: r.rmse_lsf_db,
            error: r.error.clone(),
        }
    }

    pub fn config(&self) -> NetworkConfig {
        NetworkConfig {
            kind: self.kind,
            hidden_neurons: self.hidden_neurons,
            learning_rate: self.learning_rate,
            error_threshold: self.error_threshold,
            max_iterations: self.max_iterations,
            seed: self.seed,
        }
    }

    /// Metrics-only run, enough for [`crate::evaluation::compare_runs`].
    pub fn to_run(&self, trace_id: &str, scope: RmseScope) -> PredictionRun {
        let cfg = self.config();
        let mut r = PredictionRun::failed(
            &cfg,
            self.q,
            &PredictionOptions {
                trace_id: trace_id.to_string(),
                scope,
            },
            &Error::invalid(""),
        );
        r.realized_ratio = self.realized_ratio.unwrap_or(f64::NAN);
        r.rmse_pl_db = self.rmse_pl_db;
        r.rmse_lsf_db = self.rmse_lsf_db;
        r.error = self.error.clone();
        r
    }
}

/// Deterministic sweep report. Wall-clock timings live in [`SweepTimings`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub trace_id: String,
    pub n_points: usize,
    pub rmse_scope: RmseScope,
    pub runs: Vec<RunSummary>,
}

impl SweepReport {
    pub fn new(trace_id: &str, n_points: usize, scope: RmseScope, runs: &[PredictionRun]) -> Self {
        Self {
            trace_id: trace_id.to_string(),
            n_points,
            rmse_scope: scope,
            runs: runs.iter().map(RunSummary::from_run).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<sweep report>".into(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_runs(&self) -> Vec<PredictionRun> {
        self.runs
            .iter()
            .map(|r| r.to_run(&self.trace_id, self.rmse_scope))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub run_id: String,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTimings {
    pub runs: Vec<RunTiming>,
}

impl SweepTimings {
    pub fn new(runs: &[PredictionRun]) -> Self {
        Self {
            runs: runs
                .iter()
                .map(|r| RunTiming {
                    run_id: r.run_id(),
                    train_seconds: r.train_seconds,
                })
                .collect(),
        }
    }
}
