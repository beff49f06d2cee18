use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// `B` random partitions of `{0..n}` into an estimation half `D1` of size
/// `n1` and a selection half `D2` of size `n - n1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n: usize,
    pub n1: usize,
    pub q: f64,
    pub seed: u64,
    /// Sorted `D1` indices, one row per split.
    pub d1: Vec<Vec<usize>>,
}

/// `round(q * n)`.
pub fn estimation_size(n: usize, q: f64) -> usize {
    (q * n as f64).round() as usize
}

/// Draw `b` independent uniform `round(q n)`-subsets; split `k` uses the
/// substream `(seed, k)`.
pub fn make_splits(n: usize, q: f64, b: usize, seed: u64) -> Result<SplitPlan> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("split proportion must lie in (0, 1), got {q}")));
    }
    let n1 = estimation_size(n, q);
    if n1 < 2 || n - n1.min(n) < 2 {
        return Err(Error::InvalidArgument(format!(
            "degenerate split sizes: n = {n}, n1 = {n1}"
        )));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("need at least one split".into()));
    }
    let root = Stream::new(seed);
    let d1 = (0..b)
        .map(|k| {
            let mut rng = root.child(k as u64).named("split").rng();
            let mut idx = sample(&mut rng, n, n1).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();
    Ok(SplitPlan { n, n1, q, seed, d1 })
}

impl SplitPlan {
    pub fn n_splits(&self) -> usize {
        self.d1.len()
    }

    /// Row `b` of the membership matrix: `J_bi = 1` iff `i` is in `D1^b`.
    pub fn membership(&self, b: usize) -> Vec<u8> {
        let mut row = vec![0u8; self.n];
        for &i in &self.d1[b] {
            row[i] = 1;
        }
        row
    }

    /// Full `B x n` membership matrix.
    pub fn membership_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.n_splits()).map(|b| self.membership(b)).collect()
    }

    /// Sorted complement of `D1^b`.
    pub fn d2(&self, b: usize) -> Vec<usize> {
        let row = self.membership(b);
        (0..self.n).filter(|&i| row[i] == 0).collect()
    }

    /// Restrict to the splits listed in `keep`, in that order.
    pub fn subset(&self, keep: &[usize]) -> SplitPlan {
        SplitPlan {
            d1: keep.iter().map(|&b| self.d1[b].clone()).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_have_exact_size() {
        let plan = make_splits(500, 0.5, 20, 1).unwrap();
        assert_eq!(plan.n1, 250);
        for b in 0..20 {
            assert_eq!(plan.membership(b).iter().map(|&v| v as usize).sum::<usize>(), 250);
            let d2 = plan.d2(b);
            assert_eq!(d2.len(), 250);
            assert!(d2.iter().all(|i| plan.d1[b].binary_search(i).is_err()));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(make_splits(40, 0.5, 2, 9).unwrap(), make_splits(40, 0.5, 2, 9).unwrap());
        assert_ne!(make_splits(40, 0.5, 2, 9).unwrap(), make_splits(40, 0.5, 2, 10).unwrap());
    }

    #[test]
    fn inclusion_frequencies_are_uniform() {
        let (n, q, b) = (60, 0.3, 10_000);
        let plan = make_splits(n, q, b, 3).unwrap();
        let mut counts = vec![0usize; n];
        for row in &plan.d1 {
            for &i in row {
                counts[i] += 1;
            }
        }
        let target = plan.n1 as f64 / n as f64;
        for c in counts {
            assert!((c as f64 / b as f64 - target).abs() < 0.02);
        }
    }

    #[test]
    fn degenerate_sizes_rejected() {
        assert!(make_splits(10, 0.0, 1, 0).is_err());
        assert!(make_splits(10, 1.0, 1, 0).is_err());
        assert!(make_splits(10, 0.05, 1, 0).is_err());
        assert!(make_splits(10, 0.95, 1, 0).is_err());
        assert!(make_splits(10, 0.5, 0, 0).is_err());
    }
}
