//! One-dimensional Lloyd's K-means.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<f64>,
    pub assignments: Vec<usize>,
    /// Update steps performed.
    pub iterations: usize,
    /// `sum_x min_j (x - c_j)^2` after the initial and every later assignment.
    pub distortion_history: Vec<f64>,
    pub converged: bool,
}

impl KMeansResult {
    pub fn distortion(&self) -> f64 {
        *self.distortion_history.last().unwrap_or(&0.0)
    }
}

/// Sorted distinct values.
pub fn distinct_values(points: &[f64]) -> Vec<f64> {
    let mut v = points.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Lloyd's algorithm seeded by `k` distinct data values drawn uniformly.
pub fn kmeans(points: &[f64], k: usize, seed: u64) -> Result<KMeansResult> {
    validate(points)?;
    let distinct = distinct_values(points);
    if k == 0 || k > distinct.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be between 1 and the {} distinct points",
            distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = rand::seq::index::sample(&mut rng, distinct.len(), k)
        .into_iter()
        .map(|i| distinct[i])
        .collect();
    kmeans_from(points, init)
}

/// Lloyd's algorithm from explicit initial centers.
pub fn kmeans_from(points: &[f64], init: Vec<f64>) -> Result<KMeansResult> {
    validate(points)?;
    if init.is_empty() || init.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(
            "initial centers must be finite and nonempty",
        ));
    }
    let k = init.len();
    let mut centers = init;
    let mut assignments = vec![0; points.len()];
    let mut history = vec![assign(points, &centers, &mut assignments)];
    let mut converged = false;
    let mut iterations = 0;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (&x, &a) in points.iter().zip(&assignments) {
            sums[a] += x;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                centers[j] = farthest_point(points, &centers);
            }
        }
        let mut next = vec![0; points.len()];
        history.push(assign(points, &centers, &mut next));
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }

    Ok(KMeansResult {
        centers,
        assignments,
        iterations,
        distortion_history: history,
        converged,
    })
}

fn validate(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("k-means needs at least one point"));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("k-means points must be finite"));
    }
    Ok(())
}

/// Index of the nearest center; ties go to the lower index.
#[inline]
fn nearest(x: f64, centers: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centers.iter().enumerate() {
        let d = (x - c) * (x - c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[f64], centers: &[f64], out: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (x, a) in points.iter().zip(out.iter_mut()) {
        let (j, d) = nearest(*x, centers);
        *a = j;
        total += d;
    }
    total
}

/// The point farthest from its nearest center (first such point on ties).
fn farthest_point(points: &[f64], centers: &[f64]) -> f64 {
    let mut best = (points[0], -1.0);
    for &x in points {
        let d = nearest(x, centers).1;
        if d > best.1 {
            best = (x, d);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn k_equal_distinct_count_is_exact() {
        let pts = [3.0, 1.0, 2.0, 3.0, 5.0, 1.0];
        let r = kmeans(&pts, 4, 7).unwrap();
        assert_eq!(r.distortion(), 0.0);
        let mut c = r.centers.clone();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![1.0, 2.0, 3.0, 5.0]);
    }

    #[test]
    fn too_many_clusters_rejected() {
        assert!(kmeans(&[1.0, 1.0, 2.0], 3, 0).is_err());
        assert!(kmeans(&[1.0, 2.0], 0, 0).is_err());
        assert!(kmeans(&[], 1, 0).is_err());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // the center at 100 attracts nothing; it must move onto a data point
        let pts = [0.0, 0.1, 0.2, 5.0, 5.1];
        let r = kmeans_from(&pts, vec![0.0, 100.0, 5.0]).unwrap();
        assert!(r.centers.iter().all(|c| *c <= 5.1));
        assert!(r.distortion() < 0.1);
        assert!(r.converged);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let r = kmeans_from(&[1.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(r.assignments, vec![0]);
    }

    #[test]
    fn distortion_never_increases() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<f64> = (0..300)
                .map(|_| rng.random_range(0.0..1.0f64).powi(3))
                .collect();
            let r = kmeans(&pts, 12, seed).unwrap();
            for w in r.distortion_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "seed {seed}: {w:?}");
            }
        }
    }
}
