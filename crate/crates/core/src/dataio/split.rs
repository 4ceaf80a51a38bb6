use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How to split a training set between the two co-trained learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    /// Fraction of the dataset placed in both subsets.
    pub overlap_ratio: f64,
}

impl SplitSpec {
    pub fn disjoint(seed: u64) -> Self {
        SplitSpec {
            seed,
            overlap_ratio: 0.0,
        }
    }

    /// Number of ids shared by both subsets for a dataset of `n` ids.
    pub fn shared_count(&self, n: usize) -> usize {
        // guard against 0.6 * 30 = 17.999...
        ((self.overlap_ratio * n as f64) + 1e-9).floor().min(n as f64) as usize
    }

    /// Sizes of `(X_a, X_b)` for `n` ids.
    pub fn subset_sizes(&self, n: usize) -> (usize, usize) {
        let shared = self.shared_count(n);
        let rest = n - shared;
        (shared + rest.div_ceil(2), shared + rest / 2)
    }
}

/// Shuffles `ids` with `spec.seed`, puts `shared_count` of them in both
/// subsets and deals the remainder into two halves (`X_a` takes the odd one).
/// Each subset keeps the input order.
pub fn split_dataset<T: Clone>(ids: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..=1.0).contains(&spec.overlap_ratio) {
        return Err(Error::OutOfRange(format!(
            "overlap ratio {} outside [0, 1]",
            spec.overlap_ratio
        )));
    }
    let n = ids.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));

    let shared = spec.shared_count(n);
    let a_only = (n - shared).div_ceil(2);
    // 0 = shared, 1 = X_a only, 2 = X_b only
    let mut owner = vec![0u8; n];
    for (rank, &idx) in order.iter().enumerate() {
        owner[idx] = if rank < shared {
            0
        } else if rank < shared + a_only {
            1
        } else {
            2
        };
    }
    let pick = |keep: u8| {
        ids.iter()
            .zip(&owner)
            .filter(|(_, &o)| o == 0 || o == keep)
            .map(|(id, _)| id.clone())
            .collect::<Vec<T>>()
    };
    Ok((pick(1), pick(2)))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn disjoint_halves() {
        let ids: Vec<u32> = (1..=30).collect();
        let (a, b) = split_dataset(&ids, &SplitSpec::disjoint(0)).unwrap();
        assert_eq!((a.len(), b.len()), (15, 15));
        let sa: HashSet<_> = a.iter().collect();
        let sb: HashSet<_> = b.iter().collect();
        assert!(sa.is_disjoint(&sb));
        assert_eq!(sa.union(&sb).count(), 30);
    }

    #[test]
    fn odd_count_gives_ceil_and_floor() {
        let ids: Vec<u32> = (0..7).collect();
        let (a, b) = split_dataset(&ids, &SplitSpec::disjoint(3)).unwrap();
        assert_eq!((a.len(), b.len()), (4, 3));
    }

    #[test]
    fn complete_overlap() {
        let ids: Vec<u32> = (1..=30).collect();
        let spec = SplitSpec {
            seed: 5,
            overlap_ratio: 1.0,
        };
        let (a, b) = split_dataset(&ids, &spec).unwrap();
        assert_eq!(a, ids);
        assert_eq!(b, ids);
    }

    #[test]
    fn partial_overlap_sizes() {
        let ids: Vec<u32> = (1..=20).collect();
        let spec = SplitSpec {
            seed: 7,
            overlap_ratio: 0.4,
        };
        let (a, b) = split_dataset(&ids, &spec).unwrap();
        assert_eq!((a.len(), b.len()), (14, 14));
        let sa: HashSet<_> = a.iter().collect();
        let sb: HashSet<_> = b.iter().collect();
        assert_eq!(sa.intersection(&sb).count(), 8);
        assert_eq!(sa.union(&sb).count(), 20);
    }

    #[test]
    fn seed_determinism() {
        let ids: Vec<u32> = (0..25).collect();
        let spec = SplitSpec {
            seed: 11,
            overlap_ratio: 0.2,
        };
        assert_eq!(split_dataset(&ids, &spec).unwrap(), split_dataset(&ids, &spec).unwrap());
        let other = SplitSpec { seed: 12, ..spec };
        assert_ne!(split_dataset(&ids, &spec).unwrap(), split_dataset(&ids, &other).unwrap());
    }

    #[test]
    fn rejects_ratio_above_one() {
        let spec = SplitSpec {
            seed: 0,
            overlap_ratio: 1.5,
        };
        assert!(split_dataset(&[1, 2], &spec).is_err());
    }
}
