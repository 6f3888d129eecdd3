//! Radial-basis-function network: Gaussian hidden units at K-means centers,
//! input weights fixed at 1, output weights from a ridge solve.

use super::kmeans::{distinct_values, kmeans};
use super::ridge::{self, RIDGE_LAMBDA};
use super::{
    half_sse, NetworkConfig, NetworkKind, NetworkModel, ScaledSet, TrainReport, Trained,
    TrainingSet,
};
use crate::error::{Error, Result};

/// Common Gaussian width `c_max / sqrt(2M)`.
///
/// With coincident centers the width falls back to half the mean
/// nearest-neighbour gap, and for a single center to half the normalized band.
pub fn common_width(centers: &[f64], band: f64) -> f64 {
    let m = centers.len();
    let (lo, hi) = centers
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| {
            (a.min(c), b.max(c))
        });
    let c_max = hi - lo;
    if c_max > 0.0 {
        return c_max / (2.0 * m as f64).sqrt();
    }
    let gaps: Vec<f64> = (0..m)
        .filter_map(|i| {
            centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &c)| (c - centers[i]).abs())
                .filter(|&d| d > 0.0)
                .min_by(f64::total_cmp)
        })
        .collect();
    if gaps.is_empty() {
        0.5 * band
    } else {
        0.5 * gaps.iter().sum::<f64>() / gaps.len() as f64
    }
}

pub fn fit(set: &ScaledSet, cfg: &NetworkConfig) -> Result<Trained> {
    cfg.expect_kind(NetworkKind::Rbf)?;
    let m = cfg.hidden_neurons;
    let distinct = distinct_values(&set.xs).len();
    if m > distinct {
        return Err(Error::invalid(format!(
            "RBF with {m} neurons needs at least {m} distinct inputs, found {distinct}"
        )));
    }
    let centers = kmeans(&set.xs, m, cfg.seed)?.centers;
    let width = common_width(&centers, set.norm.target_hi - set.norm.target_lo);
    let widths = vec![width; m];
    let inv = 1.0 / (2.0 * width * width);
    let g = ridge::design_matrix(set.len(), m, |i, j| {
        let r = set.xs[i] - centers[j];
        (-r * r * inv).exp()
    });
    let v = ridge::solve(&g, &set.ts, RIDGE_LAMBDA)?;
    let model = NetworkModel::from_parts(
        NetworkKind::Rbf,
        vec![1.0; m],
        v,
        centers,
        widths,
        Some(set.norm),
    )?;
    let final_loss = half_sse(&model, &set.xs, &set.ts);
    Ok(Trained {
        model,
        report: TrainReport {
            epochs: 0,
            linear_solves: 1,
            loss_history: Vec::new(),
            final_loss,
        },
    })
}

pub fn train_rbf(data: &TrainingSet, cfg: &NetworkConfig) -> Result<NetworkModel> {
    cfg.expect_kind(NetworkKind::Rbf)?;
    Ok(fit(&ScaledSet::from_training(data)?, cfg)?.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::Normalizer;

    fn unit_norm() -> Normalizer {
        Normalizer::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn width_heuristic() {
        let w = common_width(&[0.1, 0.5, 0.9], 0.8);
        assert!((w - 0.8 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(common_width(&[0.3], 0.8), 0.4);
    }

    #[test]
    fn single_pair_single_neuron() {
        let t = 0.73;
        let set = ScaledSet::new(unit_norm(), vec![0.42], vec![t]).unwrap();
        let out = fit(&set, &NetworkConfig::new(NetworkKind::Rbf, 1)).unwrap();
        let y = out.model.forward_normalized(0.42);
        // ridge shrinkage: exactly t / (1 + lambda)
        assert!((y - t / (1.0 + RIDGE_LAMBDA)).abs() < 1e-15);
        assert!((y - t).abs() <= RIDGE_LAMBDA * t);
    }

    #[test]
    fn interpolates_with_one_center_per_input() {
        // smooth PL-like targets, M = N; beyond N ~ 5 the 1e-8 ridge term
        // dominates the small eigenvalues of G'G and the residual grows to ~1e-3
        for n in 2..=5 {
            let xs: Vec<f64> = (0..n)
                .map(|i| 0.1 + 0.8 * i as f64 / (n - 1) as f64)
                .collect();
            let ts: Vec<f64> = xs
                .iter()
                .map(|&x| 0.1 + 0.8 * (1.0 + 20.0 * (x - 0.1)).ln() / 17f64.ln())
                .collect();
            let set = ScaledSet::new(unit_norm(), xs.clone(), ts.clone()).unwrap();
            let out = fit(&set, &NetworkConfig::new(NetworkKind::Rbf, n).with_seed(2)).unwrap();
            let mut c = out.model.centers().to_vec();
            c.sort_by(f64::total_cmp);
            assert_eq!(c, xs);
            let rmse = (xs
                .iter()
                .zip(&ts)
                .map(|(&x, &t)| (out.model.forward_normalized(x) - t).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt();
            assert!(rmse < 1e-4, "n {n}: rmse {rmse}");
        }
    }

    #[test]
    fn input_weights_are_one() {
        let xs: Vec<f64> = (0..50).map(|i| 0.1 + 0.016 * i as f64).collect();
        let ts: Vec<f64> = xs.iter().map(|x| 0.5 + 0.3 * (9.0 * x).sin()).collect();
        let set = ScaledSet::new(unit_norm(), xs, ts).unwrap();
        let out = fit(&set, &NetworkConfig::new(NetworkKind::Rbf, 8).with_seed(1)).unwrap();
        assert!(out.model.input_weights().iter().all(|&w| w == 1.0));
        assert_eq!(out.report.linear_solves, 1);
    }

    #[test]
    fn more_neurons_than_inputs_rejected() {
        let set = ScaledSet::new(unit_norm(), vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert!(fit(&set, &NetworkConfig::new(NetworkKind::Rbf, 3)).is_err());
    }
}
