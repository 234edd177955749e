//! Theory-side reference values.
//!
//! Everything here is computed from the limit operators or from the exact
//! single-unit transfer law, never from simulated graphs:
//! - zeros of `J1` and the closed-form spectrum `8 / j_{1,k}^2` of the
//!   integral operator with kernel `1/(s∨t)^2` on `[1, ∞)`,
//! - its eigenfunctions and the residual of the eigen-equation,
//! - a Nyström discretization of the same operator,
//! - the truncated discrete operator with kernel `1/(i∨j)^2`,
//! - exact finite-n visit and edge probabilities,
//! - limit trace moments.

pub mod bessel;
mod edge_prob;
mod kernel_k;
mod m_operator;
mod moments;
mod quad;

use serde::{Deserialize, Serialize};

use crate::dynamics::LeakSemantics;
use crate::error::{Error, Result};
use crate::Real;

pub use bessel::{bessel_j, j1_zero, j1_zeros, mcmahon_estimate, BesselOrder, BesselZero};
pub use edge_prob::{exact_edge_probability, visit_probability_closed_form, EdgeProbabilities};
pub use kernel_k::{
    eigen_residual, k_eigenvalue, k_spectrum, k_spectrum_nystrom, log_grid, nystrom_k, EigenResidual, EigenfunctionK,
    NystromK, DEFAULT_CUTOFF,
};
pub use m_operator::{m_kernel, m_spectrum_truncated};
pub use moments::{limit_moment, LimitKernel, LimitMoment};
pub use quad::adaptive_simpson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BesselClosedForm,
    Nystrom,
    MTruncated,
    ExactKernelMatrix,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::BesselClosedForm => "bessel_closed_form",
            Provenance::Nystrom => "nystrom",
            Provenance::MTruncated => "m_truncated",
            Provenance::ExactKernelMatrix => "exact_kernel_matrix",
        }
    }
}

/// Parameters that produced an oracle spectrum; unset fields do not apply.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub grid: Option<usize>,
    pub cutoff: Option<f64>,
    pub truncation: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<u64>,
    pub semantics: Option<LeakSemantics>,
    pub eps: Option<f64>,
    /// Upper bound on the trace discarded by truncation.
    pub tail_bound: Option<f64>,
    /// Multiplier applied after computation (charge density, `1/n`, or `ε`).
    pub scale: Option<f64>,
}

/// Theoretical eigenvalues, descending, with where they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpectrum<T> {
    pub eigenvalues: Vec<T>,
    pub provenance: Provenance,
    pub params: OracleParams,
}

impl<T: Real> OracleSpectrum<T> {
    /// Validates that the values are strictly positive and strictly
    /// decreasing, which holds for every operator modelled here.
    pub fn new(eigenvalues: Vec<T>, provenance: Provenance, params: OracleParams) -> Result<Self> {
        if let Some(bad) = eigenvalues.iter().position(|&x| !(x > T::zero())) {
            return Err(Error::numeric(
                format!(
                    "{} eigenvalue {} is not positive: {}",
                    provenance.as_str(),
                    bad + 1,
                    eigenvalues[bad]
                ),
                0,
            ));
        }
        if let Some(w) = eigenvalues.windows(2).position(|w| !(w[0] > w[1])) {
            return Err(Error::numeric(
                format!(
                    "{} eigenvalues {} and {} are not strictly decreasing",
                    provenance.as_str(),
                    w + 1,
                    w + 2
                ),
                0,
            ));
        }
        Ok(OracleSpectrum {
            eigenvalues,
            provenance,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Multiplies every eigenvalue by `s > 0`, composing with any earlier scale.
    pub fn scaled(&self, s: T) -> Self {
        let mut params = self.params.clone();
        params.scale = Some(params.scale.unwrap_or(1.0) * s.to_f64_lossy());
        OracleSpectrum {
            eigenvalues: self.eigenvalues.iter().map(|&x| x * s).collect(),
            provenance: self.provenance,
            params,
        }
    }

    pub fn sum_of_powers(&self, k: i32) -> T {
        self.eigenvalues.iter().map(|&x| x.powi(k)).sum()
    }
}
