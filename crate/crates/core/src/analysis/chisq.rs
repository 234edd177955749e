use std::collections::{BTreeMap, BTreeSet};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Bins whose pooled count is below this are merged before testing.
pub const MIN_POOLED_COUNT: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after merging sparse outcomes.
    pub bins: usize,
}

impl ChiSquareTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Two-sample chi-square test of homogeneity between outcome counts.
///
/// Outcomes whose pooled count falls below [`MIN_POOLED_COUNT`] are lumped
/// into one bin (itself folded into the smallest regular bin if still sparse).
pub fn two_sample_chi_square<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<ChiSquareTest> {
    let total_a: u64 = a.values().sum();
    let total_b: u64 = b.values().sum();
    if total_a == 0 || total_b == 0 {
        return Err(Error::domain("chi-square test needs two nonempty samples"));
    }
    let keys: BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut sparse = (0u64, 0u64);
    for k in keys {
        let x = a.get(k).copied().unwrap_or(0);
        let y = b.get(k).copied().unwrap_or(0);
        if x + y < MIN_POOLED_COUNT {
            sparse.0 += x;
            sparse.1 += y;
        } else {
            bins.push((x, y));
        }
    }
    if sparse.0 + sparse.1 > 0 {
        if sparse.0 + sparse.1 >= MIN_POOLED_COUNT || bins.is_empty() {
            bins.push(sparse);
        } else {
            let smallest = (0..bins.len())
                .min_by_key(|&i| bins[i].0 + bins[i].1)
                .expect("nonempty");
            bins[smallest].0 += sparse.0;
            bins[smallest].1 += sparse.1;
        }
    }
    if bins.len() < 2 {
        return Ok(ChiSquareTest {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins: bins.len(),
        });
    }
    let ra = (total_b as f64 / total_a as f64).sqrt();
    let rb = (total_a as f64 / total_b as f64).sqrt();
    let statistic: f64 = bins
        .iter()
        .map(|&(x, y)| {
            let d = x as f64 * ra - y as f64 * rb;
            d * d / (x + y) as f64
        })
        .sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::domain(format!("chi-square: {e}")))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
        bins: bins.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_do_not_reject() {
        let a: BTreeMap<u32, u64> = [(1, 500), (2, 300), (3, 200)].into_iter().collect();
        let t = two_sample_chi_square(&a, &a).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(!t.rejects_at(0.01));
    }

    #[test]
    fn different_samples_reject() {
        let a: BTreeMap<u32, u64> = [(1, 500), (2, 500)].into_iter().collect();
        let b: BTreeMap<u32, u64> = [(1, 700), (2, 300)].into_iter().collect();
        assert!(two_sample_chi_square(&a, &b).unwrap().rejects_at(0.01));
    }

    #[test]
    fn sparse_bins_merge() {
        let a: BTreeMap<u32, u64> = [(1, 500), (2, 500), (3, 2), (4, 1)].into_iter().collect();
        let b: BTreeMap<u32, u64> = [(1, 1000), (2, 1000), (5, 3)].into_iter().collect();
        let t = two_sample_chi_square(&a, &b).unwrap();
        assert_eq!(t.bins, 2);
        assert_eq!(t.dof, 1);
    }
}
