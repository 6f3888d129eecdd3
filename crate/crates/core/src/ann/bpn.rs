//! Back-propagation network: logistic hidden and output layers, trained by
//! per-sample gradient descent on `E = 1/2 sum (t - y)^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    half_sse, logistic, NetworkConfig, NetworkKind, NetworkModel, ScaledSet, TrainReport, Trained,
    TrainingSet,
};
use crate::error::{Error, Result};

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.5;

/// Initial `(w, v)` drawn uniformly from `[-0.5, 0.5]`.
pub fn initial_weights(hidden_neurons: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = (0..hidden_neurons)
        .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    let v = (0..hidden_neurons)
        .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    (w, v)
}

/// The untrained network produced by [`initial_weights`].
pub fn initial_model(hidden_neurons: usize, seed: u64) -> Result<NetworkModel> {
    let (w, v) = initial_weights(hidden_neurons, seed);
    NetworkModel::from_parts(NetworkKind::Bpn, w, v, vec![], vec![], None)
}

/// Loss and its gradient with respect to `w` and `v`, summed over all samples.
pub fn loss_and_gradient(
    w: &[f64],
    v: &[f64],
    xs: &[f64],
    ts: &[f64],
) -> (f64, Vec<f64>, Vec<f64>) {
    let m = w.len();
    let mut grad_w = vec![0.0; m];
    let mut grad_v = vec![0.0; m];
    let mut hidden = vec![0.0; m];
    let mut loss = 0.0;
    for (&x, &t) in xs.iter().zip(ts) {
        let mut s = 0.0;
        for j in 0..m {
            hidden[j] = logistic(w[j] * x);
            s += v[j] * hidden[j];
        }
        let y = logistic(s);
        let e = y - t;
        loss += 0.5 * e * e;
        let delta = e * y * (1.0 - y);
        for j in 0..m {
            let h = hidden[j];
            grad_v[j] += delta * h;
            grad_w[j] += delta * v[j] * h * (1.0 - h) * x;
        }
    }
    (loss, grad_w, grad_v)
}

/// One epoch of per-sample updates `theta -= eta * dE_i/dtheta`, in sample order.
fn epoch(w: &mut [f64], v: &mut [f64], hidden: &mut [f64], xs: &[f64], ts: &[f64], eta: f64) {
    let m = w.len();
    for (&x, &t) in xs.iter().zip(ts) {
        let mut s = 0.0;
        for j in 0..m {
            hidden[j] = logistic(w[j] * x);
            s += v[j] * hidden[j];
        }
        let y = logistic(s);
        let delta = (y - t) * y * (1.0 - y);
        for j in 0..m {
            let h = hidden[j];
            let gw = delta * v[j] * h * (1.0 - h) * x;
            v[j] -= eta * delta * h;
            w[j] -= eta * gw;
        }
    }
}

fn loss(w: &[f64], v: &[f64], xs: &[f64], ts: &[f64]) -> f64 {
    xs.iter()
        .zip(ts)
        .map(|(&x, &t)| {
            let s: f64 = w
                .iter()
                .zip(v)
                .map(|(&wj, &vj)| vj * logistic(wj * x))
                .sum();
            let e = t - logistic(s);
            0.5 * e * e
        })
        .sum()
}

/// Trains on normalized data and returns the lowest-loss weights seen.
///
/// `E` is checked before the first epoch and after every epoch; training
/// stops once `E < error_threshold` or after `max_iterations` epochs.
pub fn fit(set: &ScaledSet, cfg: &NetworkConfig) -> Result<Trained> {
    cfg.expect_kind(NetworkKind::Bpn)?;
    if set.len() < 2 {
        return Err(Error::invalid("BPN training needs at least two samples"));
    }
    let (mut w, mut v) = initial_weights(cfg.hidden_neurons, cfg.seed);
    let mut hidden = vec![0.0; cfg.hidden_neurons];

    let mut e = loss(&w, &v, &set.xs, &set.ts);
    if !e.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0, loss: e });
    }
    let mut history = vec![e];
    let (mut best_e, mut best_w, mut best_v) = (e, w.clone(), v.clone());
    let mut epochs = 0;
    while e >= cfg.error_threshold && epochs < cfg.max_iterations {
        epoch(
            &mut w,
            &mut v,
            &mut hidden,
            &set.xs,
            &set.ts,
            cfg.learning_rate,
        );
        epochs += 1;
        e = loss(&w, &v, &set.xs, &set.ts);
        if !e.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch: epochs,
                loss: e,
            });
        }
        history.push(e);
        if e < best_e {
            best_e = e;
            best_w.clone_from(&w);
            best_v.clone_from(&v);
        }
    }

    let model = NetworkModel::from_parts(
        NetworkKind::Bpn,
        best_w,
        best_v,
        vec![],
        vec![],
        Some(set.norm),
    )?;
    debug_assert!((half_sse(&model, &set.xs, &set.ts) - best_e).abs() <= 1e-9 * best_e.max(1.0));
    Ok(Trained {
        model,
        report: TrainReport {
            epochs,
            linear_solves: 0,
            loss_history: history,
            final_loss: best_e,
        },
    })
}

pub fn train_bpn(data: &TrainingSet, cfg: &NetworkConfig) -> Result<NetworkModel> {
    cfg.expect_kind(NetworkKind::Bpn)?;
    Ok(fit(&ScaledSet::from_training(data)?, cfg)?.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::Normalizer;

    fn scaled(n: usize, f: impl Fn(f64) -> f64) -> ScaledSet {
        let xs: Vec<f64> = (0..n)
            .map(|i| 0.1 + 0.8 * i as f64 / (n - 1) as f64)
            .collect();
        let ts = xs.iter().map(|&x| f(x)).collect();
        ScaledSet::new(Normalizer::new(0.0, 1.0, 0.0, 1.0).unwrap(), xs, ts).unwrap()
    }

    #[test]
    fn own_output_is_already_converged() {
        let init = initial_model(8, 21).unwrap();
        let set = scaled(40, |x| init.forward_normalized(x));
        let cfg = NetworkConfig::new(NetworkKind::Bpn, 8).with_seed(21);
        let out = fit(&set, &cfg).unwrap();
        assert_eq!(out.report.epochs, 0);
        assert!(out.report.final_loss < cfg.error_threshold);
        assert_eq!(out.model.input_weights(), init.input_weights());
        assert_eq!(out.model.output_weights(), init.output_weights());
    }

    #[test]
    fn returned_loss_never_exceeds_initial() {
        let set = scaled(60, |x| 0.1 + 0.8 * x.sqrt());
        let mut cfg = NetworkConfig::new(NetworkKind::Bpn, 10).with_seed(3);
        cfg.learning_rate = 0.5;
        cfg.max_iterations = 200;
        let out = fit(&set, &cfg).unwrap();
        let first = out.report.loss_history[0];
        assert!(out.report.final_loss <= first);
        assert_eq!(out.report.loss_history.len(), out.report.epochs + 1);
        let min = out
            .report
            .loss_history
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.report.final_loss, min);
        assert!(out.report.final_loss < 0.5 * first);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let set = scaled(30, |x| 0.2 + 0.5 * x * x);
        let mut cfg = NetworkConfig::new(NetworkKind::Bpn, 6).with_seed(9);
        cfg.max_iterations = 50;
        let a = fit(&set, &cfg).unwrap().model.to_record();
        let b = fit(&set, &cfg).unwrap().model.to_record();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_learning_rate_is_reported_as_divergence_or_finite() {
        let set = scaled(20, |x| x);
        let mut cfg = NetworkConfig::new(NetworkKind::Bpn, 4).with_seed(1);
        cfg.learning_rate = 1e300;
        cfg.max_iterations = 5;
        match fit(&set, &cfg) {
            Err(Error::TrainingDiverged { .. }) => {}
            Ok(t) => assert!(t.report.final_loss.is_finite()),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn wrong_kind_and_tiny_sets_rejected() {
        let set = scaled(20, |x| x);
        assert!(fit(&set, &NetworkConfig::new(NetworkKind::Elm, 4)).is_err());
        let one = ScaledSet::new(
            Normalizer::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            vec![0.5],
            vec![0.5],
        )
        .unwrap();
        assert!(fit(&one, &NetworkConfig::new(NetworkKind::Bpn, 4)).is_err());
    }
}
