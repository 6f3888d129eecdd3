//! Extreme learning machine: random logistic hidden weights, output weights
//! from a single ridge solve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ridge::{self, RIDGE_LAMBDA};
use super::{
    half_sse, logistic, NetworkConfig, NetworkKind, NetworkModel, ScaledSet, TrainReport, Trained,
    TrainingSet,
};
use crate::error::Result;

/// Half-width of the uniform interval for hidden weights.
pub const INIT_RANGE: f64 = 1.0;

pub fn hidden_weights(hidden_neurons: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..hidden_neurons)
        .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
        .collect()
}

pub fn fit(set: &ScaledSet, cfg: &NetworkConfig) -> Result<Trained> {
    cfg.expect_kind(NetworkKind::Elm)?;
    let w = hidden_weights(cfg.hidden_neurons, cfg.seed);
    let g = ridge::design_matrix(set.len(), w.len(), |i, j| logistic(w[j] * set.xs[i]));
    let v = ridge::solve(&g, &set.ts, RIDGE_LAMBDA)?;
    let model = NetworkModel::from_parts(NetworkKind::Elm, w, v, vec![], vec![], Some(set.norm))?;
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

pub fn train_elm(data: &TrainingSet, cfg: &NetworkConfig) -> Result<NetworkModel> {
    cfg.expect_kind(NetworkKind::Elm)?;
    Ok(fit(&ScaledSet::from_training(data)?, cfg)?.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::Normalizer;

    fn set(xs: Vec<f64>, ts: Vec<f64>) -> ScaledSet {
        ScaledSet::new(Normalizer::new(0.0, 1.0, 0.0, 1.0).unwrap(), xs, ts).unwrap()
    }

    #[test]
    fn constant_target_is_reproduced() {
        for seed in 0..10 {
            let xs: Vec<f64> = (0..40).map(|i| 0.1 + 0.02 * i as f64).collect();
            let s = set(xs, vec![0.5; 40]);
            let out = fit(
                &s,
                &NetworkConfig::new(NetworkKind::Elm, 12).with_seed(seed),
            )
            .unwrap();
            for &x in &s.xs {
                assert!(
                    (out.model.forward_normalized(x) - 0.5).abs() < 1e-6,
                    "seed {seed}"
                );
            }
        }
    }

    #[test]
    fn solution_satisfies_normal_equations() {
        for seed in 0..5 {
            let xs: Vec<f64> = (0..80).map(|i| 0.1 + 0.01 * i as f64).collect();
            let ts: Vec<f64> = xs
                .iter()
                .map(|x| 0.1 + 0.8 * (3.0 * x).sin().abs())
                .collect();
            let s = set(xs.clone(), ts.clone());
            let cfg = NetworkConfig::new(NetworkKind::Elm, 20).with_seed(seed);
            let out = fit(&s, &cfg).unwrap();
            assert_eq!(out.report.linear_solves, 1);
            assert_eq!(out.report.epochs, 0);
            let w = out.model.input_weights();
            let g = ridge::design_matrix(xs.len(), w.len(), |i, j| logistic(w[j] * xs[i]));
            let r =
                ridge::normal_equation_residual(&g, &ts, out.model.output_weights(), RIDGE_LAMBDA);
            let gt_t = (g.transpose() * nalgebra::DVector::from_column_slice(&ts)).norm();
            assert!(r < 1e-8 * gt_t, "seed {seed}: residual {r} vs {gt_t}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let xs: Vec<f64> = (0..20).map(|i| 0.1 + 0.04 * i as f64).collect();
        let ts: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let s = set(xs, ts);
        let cfg = NetworkConfig::new(NetworkKind::Elm, 7).with_seed(4);
        assert_eq!(fit(&s, &cfg).unwrap(), fit(&s, &cfg).unwrap());
        let other = fit(&s, &cfg.clone().with_seed(5)).unwrap();
        assert_ne!(fit(&s, &cfg).unwrap().model, other.model);
    }
}
