//! Prediction accuracy: RMSE, zero-mean Gaussian fits of the large-scale
//! fading, empirical densities and per-kind comparison tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ann::NetworkKind;
use crate::error::{Error, Result};
use crate::harness::PredictionRun;

/// Default histogram resolution for LSF densities.
pub const DEFAULT_BIN_COUNT: usize = 20;

/// Root-mean-square error between equal-length sequences.
pub fn rmse(measured: &[f64], predicted: &[f64]) -> Result<f64> {
    if measured.is_empty() || measured.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "rmse needs equal nonempty lengths (got {} and {})",
            measured.len(),
            predicted.len()
        )));
    }
    let sse: f64 = measured
        .iter()
        .zip(predicted)
        .map(|(m, p)| (m - p) * (m - p))
        .sum();
    Ok((sse / measured.len() as f64).sqrt())
}

/// Zero-mean normal model of the large-scale fading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu_db: f64,
    pub sigma_db: f64,
}

impl GaussianFit {
    pub fn pdf(&self, x: f64) -> f64 {
        if self.sigma_db == 0.0 {
            return if x == 0.0 { f64::INFINITY } else { 0.0 };
        }
        let z = x / self.sigma_db;
        (-0.5 * z * z).exp() / (self.sigma_db * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// Maximum-likelihood sigma with the mean fixed at zero (divides by N).
pub fn fit_zero_mean_gaussian(lsf: &[f64]) -> Result<GaussianFit> {
    if lsf.is_empty() {
        return Err(Error::invalid("cannot fit a Gaussian to no samples"));
    }
    let ms = lsf.iter().map(|x| x * x).sum::<f64>() / lsf.len() as f64;
    Ok(GaussianFit {
        mu_db: 0.0,
        sigma_db: ms.sqrt(),
    })
}

/// Histogram normalized to unit area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub bin_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<usize>,
}

impl DensityEstimate {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|e| 0.5 * (e[0] + e[1]))
            .collect()
    }

    /// `sum density_k * width_k`.
    pub fn integral(&self) -> f64 {
        self.bin_edges
            .windows(2)
            .zip(&self.density)
            .map(|(e, d)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Equal-width bins over `[min, max]`; the last bin is closed on both sides.
pub fn empirical_density(samples: &[f64], bin_count: usize) -> Result<DensityEstimate> {
    if bin_count == 0 {
        return Err(Error::invalid("bin_count must be positive"));
    }
    if samples.len() < 2 {
        return Err(Error::invalid("density needs at least two samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("density samples must be finite"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if hi <= lo {
        return Err(Error::DegenerateRange(format!(
            "all {} samples equal {lo}",
            samples.len()
        )));
    }
    let width = (hi - lo) / bin_count as f64;
    let mut edges: Vec<f64> = (0..=bin_count).map(|k| lo + k as f64 * width).collect();
    edges[bin_count] = hi;
    let mut counts = vec![0usize; bin_count];
    for &x in samples {
        let mut k = ((x - lo) / width).floor() as usize;
        if k >= bin_count {
            k = bin_count - 1;
        }
        // floating rounding can put x a hair across an edge
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < bin_count && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (n * (e[1] - e[0])))
        .collect();
    Ok(DensityEstimate {
        bin_edges: edges,
        density,
        counts,
    })
}

/// Mean RMSE over seeds for one (kind, M, q) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub hidden_neurons: usize,
    pub q: usize,
    pub realized_ratio: f64,
    pub runs: usize,
    pub failed_runs: usize,
    pub mean_rmse_pl_db: Option<f64>,
    pub mean_rmse_lsf_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: NetworkKind,
    pub cells: Vec<ComparisonCell>,
    pub smallest_neurons: usize,
    pub largest_neurons: usize,
    /// Mean PL RMSE over all q at the smallest and the largest neuron count.
    pub rmse_at_smallest_neurons_db: Option<f64>,
    pub rmse_at_largest_neurons_db: Option<f64>,
    /// Whether the largest neuron count beats the smallest one.
    pub more_neurons_lower_rmse: Option<bool>,
    /// Mean over neuron counts of RMSE(smallest r) - RMSE(largest r).
    pub ratio_improvement_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub kinds: Vec<KindSummary>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Groups runs by kind and tabulates mean RMSE against (M, r).
pub fn compare_runs(runs: &[PredictionRun]) -> ComparisonTable {
    type Key = (NetworkKind, usize, usize);
    let mut groups: BTreeMap<Key, Vec<&PredictionRun>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.config.kind, r.config.hidden_neurons, r.q))
            .or_default()
            .push(r);
    }

    let mut by_kind: BTreeMap<NetworkKind, Vec<ComparisonCell>> = BTreeMap::new();
    for ((kind, m, q), rs) in &groups {
        let pl: Vec<f64> = rs.iter().filter_map(|r| r.rmse_pl_db).collect();
        let lsf: Vec<f64> = rs.iter().filter_map(|r| r.rmse_lsf_db).collect();
        by_kind.entry(*kind).or_default().push(ComparisonCell {
            hidden_neurons: *m,
            q: *q,
            realized_ratio: rs[0].realized_ratio,
            runs: rs.len(),
            failed_runs: rs.iter().filter(|r| r.error.is_some()).count(),
            mean_rmse_pl_db: mean(&pl),
            mean_rmse_lsf_db: mean(&lsf),
        });
    }

    let kinds = by_kind
        .into_iter()
        .map(|(kind, cells)| summarize(kind, cells))
        .collect();
    ComparisonTable { kinds }
}

fn summarize(kind: NetworkKind, cells: Vec<ComparisonCell>) -> KindSummary {
    let smallest = cells.iter().map(|c| c.hidden_neurons).min().unwrap_or(0);
    let largest = cells.iter().map(|c| c.hidden_neurons).max().unwrap_or(0);
    let at = |m: usize| {
        let v: Vec<f64> = cells
            .iter()
            .filter(|c| c.hidden_neurons == m)
            .filter_map(|c| c.mean_rmse_pl_db)
            .collect();
        mean(&v)
    };
    let (lo, hi) = (at(smallest), at(largest));
    let more_neurons_lower_rmse = match (lo, hi) {
        (Some(a), Some(b)) if largest > smallest => Some(b < a),
        _ => None,
    };

    // per M: RMSE at the largest q (smallest r) minus RMSE at the smallest q
    let mut deltas = Vec::new();
    let ms: std::collections::BTreeSet<usize> = cells.iter().map(|c| c.hidden_neurons).collect();
    for m in ms {
        let row: Vec<&ComparisonCell> = cells.iter().filter(|c| c.hidden_neurons == m).collect();
        let q_min = row.iter().map(|c| c.q).min();
        let q_max = row.iter().map(|c| c.q).max();
        if let (Some(q_min), Some(q_max)) = (q_min, q_max) {
            if q_max > q_min {
                let get = |q: usize| {
                    row.iter()
                        .find(|c| c.q == q)
                        .and_then(|c| c.mean_rmse_pl_db)
                };
                if let (Some(sparse), Some(dense)) = (get(q_max), get(q_min)) {
                    deltas.push(sparse - dense);
                }
            }
        }
    }

    KindSummary {
        kind,
        cells,
        smallest_neurons: smallest,
        largest_neurons: largest,
        rmse_at_smallest_neurons_db: lo,
        rmse_at_largest_neurons_db: hi,
        more_neurons_lower_rmse,
        ratio_improvement_db: mean(&deltas),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn rmse_closed_forms() {
        let a = [1.0, -2.0, 3.5];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x - 1.25).collect();
        assert!((rmse(&a, &b).unwrap() - 1.25).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.53553).abs() < 1e-5);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn gaussian_fit_cases() {
        assert_eq!(fit_zero_mean_gaussian(&[0.0; 5]).unwrap().sigma_db, 0.0);
        assert_eq!(fit_zero_mean_gaussian(&[1.0, -1.0]).unwrap().sigma_db, 1.0);
        assert!(fit_zero_mean_gaussian(&[]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(0.0, 4.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let fit = fit_zero_mean_gaussian(&xs).unwrap();
        assert_eq!(fit.mu_db, 0.0);
        assert!((fit.sigma_db - 4.0).abs() < 0.02 * 4.0);
    }

    #[test]
    fn single_bin_density() {
        let d = empirical_density(&[2.0, 2.5, 3.0, 4.0], 1).unwrap();
        assert_eq!(d.density, vec![1.0 / 2.0]);
        assert_eq!(d.counts, vec![4]);
    }

    #[test]
    fn degenerate_density_rejected() {
        assert!(matches!(
            empirical_density(&[1.0, 1.0, 1.0], 4),
            Err(Error::DegenerateRange(_))
        ));
        assert!(empirical_density(&[1.0], 4).is_err());
        assert!(empirical_density(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn density_counts_match_naive_loop() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random_range(-12.0..9.0)).collect();
        let d = empirical_density(&xs, 20).unwrap();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = (hi - lo) / 20.0;
        let mut naive = vec![0usize; 20];
        for &x in &xs {
            // half-open [lo + k w, lo + (k+1) w), last bin closed
            let mut placed = false;
            for k in 0..20 {
                let a = lo + k as f64 * w;
                let b = if k == 19 { hi } else { lo + (k + 1) as f64 * w };
                if x >= a && (x < b || (k == 19 && x <= b)) {
                    naive[k] += 1;
                    placed = true;
                    break;
                }
            }
            assert!(placed);
        }
        assert_eq!(d.counts, naive);
    }

    proptest! {
        #[test]
        fn density_integrates_to_one(xs in proptest::collection::vec(-50.0f64..50.0, 2..200), bins in 1usize..40) {
            prop_assume!(xs.iter().any(|&x| x != xs[0]));
            let d = empirical_density(&xs, bins).unwrap();
            prop_assert!((d.integral() - 1.0).abs() < 1e-9);
            prop_assert_eq!(d.counts.iter().sum::<usize>(), xs.len());
        }

        #[test]
        fn rmse_symmetry_and_scaling(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..50),
            k in -10.0f64..10.0,
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&a, &b).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert!((rmse(&b, &a).unwrap() - r).abs() <= 1e-12 * r.max(1.0));
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            let ka: Vec<f64> = a.iter().map(|x| k * x).collect();
            let kb: Vec<f64> = b.iter().map(|x| k * x).collect();
            prop_assert!((rmse(&ka, &kb).unwrap() - k.abs() * r).abs() <= 1e-9 * (k.abs() * r).max(1e-12));
        }

        #[test]
        fn gaussian_fit_permutation_and_sign(xs in proptest::collection::vec(-20.0f64..20.0, 1..100)) {
            let s = fit_zero_mean_gaussian(&xs).unwrap().sigma_db;
            let mut rev = xs.clone();
            rev.reverse();
            let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
            prop_assert!((fit_zero_mean_gaussian(&rev).unwrap().sigma_db - s).abs() <= 1e-12 * s.max(1.0));
            prop_assert_eq!(fit_zero_mean_gaussian(&flipped).unwrap().sigma_db, s);
        }
    }
}
