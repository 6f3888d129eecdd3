//! Channel pipeline: received power from transfer functions, raw path loss,
//! 40-wavelength smoothing and extraction of the large-scale fading term.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Smoothing window length in wavelengths.
pub const WINDOW_WAVELENGTHS: f64 = 40.0;

/// Relative tolerance on the common difference of a trace's distance grid.
const SPACING_REL_TOL: f64 = 1e-9;

/// Complex frequency response recorded at one Tx-Rx separation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunctionRecord {
    pub distance_m: f64,
    pub response: Vec<Complex64>,
}

impl TransferFunctionRecord {
    pub fn new(distance_m: f64, response: Vec<Complex64>) -> Result<Self> {
        let rec = Self {
            distance_m,
            response,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn n_f(&self) -> usize {
        self.response.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.response.is_empty() {
            return Err(Error::invalid("transfer function has no frequency points"));
        }
        if !self.distance_m.is_finite() {
            return Err(Error::invalid("transfer function distance is not finite"));
        }
        if let Some(l) = self
            .response
            .iter()
            .position(|h| !(h.re.is_finite() && h.im.is_finite()))
        {
            return Err(Error::invalid(format!(
                "transfer function entry {l} at d = {} m is not finite",
                self.distance_m
            )));
        }
        Ok(())
    }
}

/// Transmit power and antenna gains of the measured link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_t_dbm: f64,
    pub g_tx_db: f64,
    pub g_rx_db: f64,
}

impl LinkBudget {
    pub fn new(p_t_dbm: f64, g_tx_db: f64, g_rx_db: f64) -> Result<Self> {
        let b = Self {
            p_t_dbm,
            g_tx_db,
            g_rx_db,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.p_t_dbm, self.g_tx_db, self.g_rx_db]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::invalid("link budget values must be finite"))
        }
    }

    /// P_t + G_Tx + G_Rx in dB.
    pub fn eirp_plus_rx_gain_db(&self) -> f64 {
        self.p_t_dbm + self.g_tx_db + self.g_rx_db
    }
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            p_t_dbm: 30.0,
            g_tx_db: 0.0,
            g_rx_db: 0.0,
        }
    }
}

/// Path loss sampled on an equally spaced distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    distances_m: Vec<f64>,
    pl_db: Vec<f64>,
    carrier_hz: f64,
    spacing_m: f64,
}

impl ChannelTrace {
    /// Builds a trace, deriving the grid spacing from the distances.
    pub fn new(distances_m: Vec<f64>, pl_db: Vec<f64>, carrier_hz: f64) -> Result<Self> {
        if distances_m.len() != pl_db.len() {
            return Err(Error::invalid(format!(
                "trace has {} distances but {} path-loss values",
                distances_m.len(),
                pl_db.len()
            )));
        }
        if distances_m.len() < 2 {
            return Err(Error::invalid("trace needs at least two samples"));
        }
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::invalid(format!(
                "carrier {carrier_hz} Hz must be positive"
            )));
        }
        if let Some(i) = distances_m
            .iter()
            .chain(pl_db.iter())
            .position(|v| !v.is_finite())
        {
            return Err(Error::invalid(format!("trace value {i} is not finite")));
        }
        let n = distances_m.len();
        let spacing_m = (distances_m[n - 1] - distances_m[0]) / (n - 1) as f64;
        if spacing_m <= 0.0 {
            return Err(Error::invalid(
                "trace distances must be strictly increasing",
            ));
        }
        for (i, w) in distances_m.windows(2).enumerate() {
            let step = w[1] - w[0];
            if step <= 0.0 {
                return Err(Error::invalid(format!(
                    "trace distances must be strictly increasing (row {})",
                    i + 1
                )));
            }
            if ((step - spacing_m) / spacing_m).abs() > SPACING_REL_TOL {
                return Err(Error::invalid(format!(
                    "trace distances are not equally spaced at row {}: step {step} vs mean {spacing_m}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            distances_m,
            pl_db,
            carrier_hz,
            spacing_m,
        })
    }

    pub fn distances_m(&self) -> &[f64] {
        &self.distances_m
    }

    pub fn pl_db(&self) -> &[f64] {
        &self.pl_db
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn len(&self) -> usize {
        self.pl_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pl_db.is_empty()
    }

    /// Same grid, new path-loss values.
    pub fn with_pl(&self, pl_db: Vec<f64>) -> Result<Self> {
        if pl_db.len() != self.len() {
            return Err(Error::invalid("replacement path loss has the wrong length"));
        }
        if pl_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("replacement path loss is not finite"));
        }
        Ok(Self {
            pl_db,
            ..self.clone()
        })
    }
}

/// Log-distance model `A + 10 n log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDistanceModel {
    pub intercept_db: f64,
    pub exponent: f64,
    pub reference_m: f64,
}

impl LogDistanceModel {
    pub fn new(intercept_db: f64, exponent: f64) -> Self {
        Self {
            intercept_db,
            exponent,
            reference_m: 1.0,
        }
    }

    pub fn predict_db(&self, distance_m: f64) -> f64 {
        self.intercept_db + 10.0 * self.exponent * (distance_m / self.reference_m).log10()
    }
}

/// Large-scale fading `X_sigma` on a distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfSeries {
    pub distances_m: Vec<f64>,
    pub x_sigma_db: Vec<f64>,
}

/// Mean of `|H|^2` over the frequency points, as a linear power.
pub fn received_power(rec: &TransferFunctionRecord) -> Result<f64> {
    rec.validate()?;
    let sum: f64 = rec.response.iter().map(|h| h.norm_sqr()).sum();
    Ok(sum / rec.response.len() as f64)
}

/// Linear power to dBm, treating the linear quantity as milliwatts.
pub fn power_to_dbm(p_linear: f64) -> Result<f64> {
    if !(p_linear.is_finite() && p_linear > 0.0) {
        return Err(Error::invalid(format!(
            "received power {p_linear} has no dB value"
        )));
    }
    Ok(10.0 * p_linear.log10())
}

/// `PL = P_t + G_Tx + G_Rx - P_r`.
pub fn raw_path_loss(budget: &LinkBudget, p_r_dbm: f64) -> Result<f64> {
    budget.validate()?;
    if !p_r_dbm.is_finite() {
        return Err(Error::invalid("received power must be finite"));
    }
    Ok(budget.eirp_plus_rx_gain_db() - p_r_dbm)
}

/// Raw path-loss trace from transfer functions recorded on an equally spaced grid.
pub fn path_loss_trace(
    records: &[TransferFunctionRecord],
    budget: &LinkBudget,
    carrier_hz: f64,
) -> Result<ChannelTrace> {
    let mut distances = Vec::with_capacity(records.len());
    let mut pl = Vec::with_capacity(records.len());
    for rec in records {
        let p_r = power_to_dbm(received_power(rec)?)?;
        distances.push(rec.distance_m);
        pl.push(raw_path_loss(budget, p_r)?);
    }
    ChannelTrace::new(distances, pl, carrier_hz)
}

/// Number of samples in the 40-wavelength window, forced odd.
pub fn window_length(carrier_hz: f64, spacing_m: f64) -> Result<usize> {
    if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
        return Err(Error::invalid("carrier frequency must be positive"));
    }
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(Error::invalid("sample spacing must be positive"));
    }
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    let w = (WINDOW_WAVELENGTHS * wavelength / spacing_m)
        .round()
        .max(1.0) as usize;
    Ok(if w.is_multiple_of(2) { w + 1 } else { w })
}

/// Centered moving average over the 40-wavelength window.
///
/// Windows shrink at both ends so the output stays on the input grid.
pub fn sliding_window_average(trace: &ChannelTrace) -> Result<ChannelTrace> {
    let w = window_length(trace.carrier_hz, trace.spacing_m)?;
    let n = trace.len();
    if w > n {
        return Err(Error::invalid(format!(
            "smoothing window of {w} samples exceeds trace length {n}"
        )));
    }
    let half = w / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in &trace.pl_db {
        acc += v;
        prefix.push(acc);
    }
    let smoothed = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64
        })
        .collect();
    trace.with_pl(smoothed)
}

/// Least-squares log-distance fit on a trace.
pub fn fit_log_distance(trace: &ChannelTrace) -> Result<LogDistanceModel> {
    fit_log_distance_points(&trace.distances_m, &trace.pl_db)
}

/// Least-squares log-distance fit on arbitrary (distance, PL) pairs.
pub fn fit_log_distance_points(distances_m: &[f64], pl_db: &[f64]) -> Result<LogDistanceModel> {
    if distances_m.len() != pl_db.len() {
        return Err(Error::invalid("distance and path-loss lengths differ"));
    }
    if distances_m.len() < 2 {
        return Err(Error::invalid("log-distance fit needs at least two points"));
    }
    if distances_m.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        return Err(Error::invalid("log-distance fit needs positive distances"));
    }
    let reference_m = 1.0;
    let u: Vec<f64> = distances_m
        .iter()
        .map(|&d| 10.0 * (d / reference_m).log10())
        .collect();
    let n = u.len() as f64;
    let u_mean = u.iter().sum::<f64>() / n;
    let p_mean = pl_db.iter().sum::<f64>() / n;
    let (mut suu, mut sup) = (0.0, 0.0);
    for (&ui, &pi) in u.iter().zip(pl_db) {
        let du = ui - u_mean;
        suu += du * du;
        sup += du * (pi - p_mean);
    }
    let first = distances_m[0];
    if suu == 0.0 || distances_m.iter().all(|&d| d == first) {
        return Err(Error::SingularFit(
            "all distances are equal; exponent is undetermined".into(),
        ));
    }
    let exponent = sup / suu;
    Ok(LogDistanceModel {
        intercept_db: p_mean - exponent * u_mean,
        exponent,
        reference_m,
    })
}

/// `X_sigma = PL - PL_model` at every trace point.
pub fn extract_lsf(trace: &ChannelTrace, model: &LogDistanceModel) -> Result<LsfSeries> {
    if model.reference_m.is_nan() || model.reference_m <= 0.0 {
        return Err(Error::invalid("model reference distance must be positive"));
    }
    let x_sigma_db = trace
        .distances_m
        .iter()
        .zip(&trace.pl_db)
        .map(|(&d, &pl)| pl - model.predict_db(d))
        .collect();
    Ok(LsfSeries {
        distances_m: trace.distances_m.clone(),
        x_sigma_db,
    })
}
