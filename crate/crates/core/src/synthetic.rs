//! Measurement-like synthetic traces: log-distance path loss, first-order
//! autoregressive shadowing and flat Rayleigh per-tone fading.
//!
//! The default intercept, exponent and shadowing statistics are synthetic
//! values, not measured ones.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{ChannelTrace, LinkBudget, LogDistanceModel, TransferFunctionRecord};

/// Substream used for the shadowing sequence; transfer functions use
/// `TF_STREAM_BASE + position`.
const SHADOW_STREAM: u64 = 0;
const TF_STREAM_BASE: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    pub n_points: usize,
    pub spacing_m: f64,
    pub start_m: f64,
    pub carrier_hz: f64,
    pub intercept_db: f64,
    pub exponent: f64,
    pub shadow_sigma_db: f64,
    pub decorrelation_m: f64,
    pub ssf_enabled: bool,
    pub n_f: usize,
    pub link: LinkBudget,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_points: 3000,
            spacing_m: 1.42,
            start_m: 50.0,
            carrier_hz: 460e6,
            intercept_db: 30.0,
            exponent: 3.5,
            shadow_sigma_db: 4.0,
            decorrelation_m: 150.0,
            ssf_enabled: true,
            n_f: 1024,
            link: LinkBudget::default(),
            seed: 0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::invalid("n_points must be at least 2"));
        }
        let positive = [
            ("spacing_m", self.spacing_m),
            ("start_m", self.start_m),
            ("carrier_hz", self.carrier_hz),
            ("decorrelation_m", self.decorrelation_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return Err(Error::invalid("shadow_sigma_db must be non-negative"));
        }
        if !(self.intercept_db.is_finite() && self.exponent.is_finite()) {
            return Err(Error::invalid("path-loss model parameters must be finite"));
        }
        if self.n_f == 0 {
            return Err(Error::invalid("n_f must be positive"));
        }
        self.link.validate()
    }

    pub fn model(&self) -> LogDistanceModel {
        LogDistanceModel::new(self.intercept_db, self.exponent)
    }

    pub fn distances(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|i| self.start_m + i as f64 * self.spacing_m)
            .collect()
    }

    /// Lag-1 correlation of the shadowing sequence.
    pub fn shadow_correlation(&self) -> f64 {
        (-self.spacing_m / self.decorrelation_m).exp()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Zero-mean AR(1) shadowing with marginal std `shadow_sigma_db`.
pub fn shadowing(p: &SyntheticParams) -> Result<Vec<f64>> {
    p.validate()?;
    let mut rng = rng_for(p.seed, SHADOW_STREAM);
    let rho = p.shadow_correlation();
    let innovation = p.shadow_sigma_db * (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(p.n_points);
    let mut s = p.shadow_sigma_db * rng.sample::<f64, _>(StandardNormal);
    out.push(s);
    for _ in 1..p.n_points {
        s = rho * s + innovation * rng.sample::<f64, _>(StandardNormal);
        out.push(s);
    }
    Ok(out)
}

/// `PL_i = A + 10 n log10(d_i) + S_i` on the configured grid.
pub fn generate_trace(p: &SyntheticParams) -> Result<ChannelTrace> {
    let shadow = shadowing(p)?;
    let model = p.model();
    let d = p.distances();
    let pl = d
        .iter()
        .zip(&shadow)
        .map(|(&x, &s)| model.predict_db(x) + s)
        .collect();
    ChannelTrace::new(d, pl, p.carrier_hz)
}

/// Per-position frequency responses whose mean power matches each PL value.
///
/// Tone powers are unit-mean exponential with uniform phase when small-scale
/// fading is enabled, and exactly the deterministic amplitude otherwise.
pub fn generate_transfer_functions(
    trace: &ChannelTrace,
    p: &SyntheticParams,
) -> Result<Vec<TransferFunctionRecord>> {
    p.validate()?;
    trace
        .distances_m()
        .iter()
        .zip(trace.pl_db())
        .enumerate()
        .map(|(i, (&d, &pl))| transfer_function_at(i, d, pl, p))
        .collect()
}

/// Response at grid position `index`, drawn from its own `(seed, index)`
/// substream so positions can be generated in any order.
pub fn transfer_function_at(
    index: usize,
    distance_m: f64,
    pl_db: f64,
    p: &SyntheticParams,
) -> Result<TransferFunctionRecord> {
    let mean_power = 10f64.powf((p.link.eirp_plus_rx_gain_db() - pl_db) / 10.0);
    let response = if p.ssf_enabled {
        let mut rng = rng_for(p.seed, TF_STREAM_BASE + index as u64);
        (0..p.n_f)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar((mean_power * e).sqrt(), phase)
            })
            .collect()
    } else {
        vec![Complex64::new(mean_power.sqrt(), 0.0); p.n_f]
    };
    TransferFunctionRecord::new(distance_m, response)
}
