use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major feature matrix: `len()` vectors of `dim` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Features {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "feature buffer not a multiple of dim");
        Features { dim, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn count_distinct_up_to(&self, limit: usize) -> usize {
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for i in 0..self.len() {
            seen.insert(self.row(i).iter().map(|v| v.to_bits()).collect());
            if seen.len() >= limit {
                break;
            }
        }
        seen.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub iters: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 3,
            seed: 0,
            iters: 100,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_seeds(features: &Features, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut centroids = vec![features.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(features.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // roundoff can leave us on a zero-weight tail
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap();
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = features.row(next).to_vec();
        for (i, slot) in d2.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(features.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding. An emptied cluster is moved onto
/// the point currently farthest from its own centroid.
pub fn kmeans(features: &Features, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let k = cfg.k;
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    let distinct = features.count_distinct_up_to(k);
    if distinct < k {
        return Err(Error::TooFewDistinct { k, distinct });
    }
    let n = features.len();
    let dim = features.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = plus_plus_seeds(features, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let mut objective = Vec::new();
    let mut iterations = 0;

    let assign = |centroids: &[Vec<f64>], assignments: &mut [usize], dists: &mut [f64]| {
        let mut total = 0.0;
        for i in 0..n {
            let (j, d) = nearest(features.row(i), centroids);
            assignments[i] = j;
            dists[i] = d;
            total += d;
        }
        total
    };

    for _ in 0..cfg.iters {
        iterations += 1;
        objective.push(assign(&centroids, &mut assignments, &mut dists));

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &j) in assignments.iter().enumerate() {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(features.row(i)) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for j in 0..k {
            let next: Vec<f64> = if counts[j] > 0 {
                sums[j].iter().map(|s| s / counts[j] as f64).collect()
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap();
                dists[far] = 0.0;
                features.row(far).to_vec()
            };
            shift = shift.max(sq_dist(&next, &centroids[j]).sqrt());
            centroids[j] = next;
        }
        if shift < cfg.tol {
            break;
        }
    }
    objective.push(assign(&centroids, &mut assignments, &mut dists));

    Ok(KMeansResult {
        assignments,
        centroids,
        objective,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> (Features, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]];
        let noise = Normal::new(0.0, 0.7).unwrap();
        let mut data = Vec::new();
        let mut truth = Vec::new();
        for (label, c) in centers.iter().enumerate() {
            for _ in 0..150 {
                data.push(c[0] + noise.sample(&mut rng));
                data.push(c[1] + noise.sample(&mut rng));
                truth.push(label);
            }
        }
        (Features::new(2, data), truth)
    }

    #[test]
    fn separated_blobs_are_pure() {
        let (features, truth) = blobs(1);
        let result = kmeans(&features, &KMeansConfig::default()).unwrap();
        for label in 0..3 {
            let members: HashSet<usize> = truth
                .iter()
                .zip(&result.assignments)
                .filter(|(t, _)| **t == label)
                .map(|(_, a)| *a)
                .collect();
            assert_eq!(members.len(), 1, "blob {label} split across clusters");
        }
        let used: HashSet<usize> = result.assignments.iter().copied().collect();
        assert_eq!(used.len(), 3);
    }

    #[test]
    fn identical_features_error() {
        let features = Features::new(2, vec![1.0; 40]);
        assert!(matches!(
            kmeans(&features, &KMeansConfig::default()),
            Err(Error::TooFewDistinct { k: 3, distinct: 1 })
        ));
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..10 {
            let (features, _) = blobs(seed + 100);
            let cfg = KMeansConfig {
                seed,
                tol: 0.0,
                iters: 30,
                ..KMeansConfig::default()
            };
            let result = kmeans(&features, &cfg).unwrap();
            for w in result.objective.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", result.objective);
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let (features, _) = blobs(4);
        let cfg = KMeansConfig {
            seed: 9,
            ..KMeansConfig::default()
        };
        let a = kmeans(&features, &cfg).unwrap();
        let b = kmeans(&features, &cfg).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn exactly_k_distinct_points() {
        let features = Features::new(1, vec![0.0, 0.0, 5.0, 9.0, 9.0]);
        let result = kmeans(&features, &KMeansConfig::default()).unwrap();
        let used: HashSet<usize> = result.assignments.iter().copied().collect();
        assert_eq!(used.len(), 3);
    }
}
