//! Finite sections of the operator `M` on `l2` with kernel `1/(i∨j)^2`.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, top_eigenvalues, DenseOptions, LanczosOptions, MaxKernel};
use crate::oracle::{OracleParams, OracleSpectrum, Provenance};
use crate::Real;

/// Sections up to this size go through the dense solver.
const DENSE_LIMIT: usize = 1200;

/// The `N × N` section `a_ij = 1/(i∨j)^2` (1-based ranks).
pub fn m_kernel<T: Real>(truncation: usize) -> MaxKernel<T> {
    let profile = (1..=truncation)
        .map(|u| {
            let u = T::from_count(u);
            T::one() / (u * u)
        })
        .collect();
    MaxKernel::uniform(profile)
}

/// Top `count` eigenvalues of the `N × N` section. The discarded trace
/// `Σ_{i>N} 1/i^2 < 1/N` is reported as `params.tail_bound`.
pub fn m_spectrum_truncated<T: Real>(truncation: usize, count: usize) -> Result<OracleSpectrum<T>> {
    if count == 0 || truncation < count {
        return Err(Error::domain(format!(
            "truncated M spectrum needs 1 <= count <= N, got count {count}, N {truncation}"
        )));
    }
    let kernel = m_kernel::<T>(truncation);
    let values = if truncation <= DENSE_LIMIT {
        let mut all = symmetric_eigen(&kernel.to_dense(), false, &DenseOptions::default())?.values;
        all.truncate(count);
        all
    } else {
        let opts = LanczosOptions {
            tol: 1e-12,
            ..LanczosOptions::default()
        };
        top_eigenvalues(&kernel, count, &opts)?.values
    };
    let params = OracleParams {
        truncation: Some(truncation),
        tail_bound: Some(1.0 / truncation as f64),
        ..OracleParams::default()
    };
    OracleSpectrum::new(values, Provenance::MTruncated, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricOperator;

    #[test]
    fn single_entry_section() {
        let s = m_spectrum_truncated::<f64>(1, 1).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0]);
    }

    #[test]
    fn top_eigenvalue_grows_with_truncation() {
        let mut prev = 0.0;
        for n in [1, 2, 5, 20, 100, 400] {
            let top = m_spectrum_truncated::<f64>(n, 1).unwrap().eigenvalues[0];
            assert!(top >= prev - 1e-14, "N = {n}: {top} < {prev}");
            prev = top;
        }
    }

    #[test]
    fn trace_is_basel_partial_sum() {
        let k = m_kernel::<f64>(1000);
        let basel: f64 = (1..=1000).map(|i| 1.0 / (i as f64).powi(2)).sum();
        assert!((k.trace() - basel).abs() < 1e-13);
        assert!(std::f64::consts::PI.powi(2) / 6.0 - basel < 1e-3);
    }

    #[test]
    fn dense_and_iterative_paths_agree() {
        let n = DENSE_LIMIT + 1;
        let lanczos = m_spectrum_truncated::<f64>(n, 3).unwrap();
        let dense = symmetric_eigen(&m_kernel::<f64>(n).to_dense(), false, &DenseOptions::default()).unwrap();
        for i in 0..3 {
            assert!((lanczos.eigenvalues[i] - dense.values[i]).abs() <= 1e-10 * dense.values[0]);
        }
        assert_eq!(m_kernel::<f64>(n).dim(), n);
    }

    #[test]
    fn rejects_count_above_truncation() {
        assert!(m_spectrum_truncated::<f64>(3, 4).is_err());
    }
}
