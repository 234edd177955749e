//! Winner-take-all charge-flow graphs and their spectra.
//!
//! - [`dynamics`]: charge units descending through ranked vertices, with
//!   three engines and a coupling across system sizes.
//! - [`graph`]: the multiplicity matrix, degrees, rank truncation, and the
//!   expected adjacency kernels.
//! - [`spectra`]: spectral measures `μ` and `κ` and trace moments.
//! - [`oracle`]: reference spectra from Bessel zeros, quadrature, truncated
//!   operators, and the exact finite-n transfer law.
//! - [`analysis`]: Monte Carlo comparisons, sweeps, frequency tests, and
//!   power-law fits.
//! - [`experiment`]: run manifests and reproducible CSV output.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the exact
//! transfer recursion also runs over [`Rational`]. The aliases below fix the
//! scalar to `f64`.

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod gates;
pub mod graph;
pub mod linalg;
pub mod oracle;
mod scalar;
pub mod spectra;

pub use dynamics::{Engine, LeakSemantics, SimulationConfig, Start, Trajectory};
pub use error::{Error, Result};
pub use graph::{ChargeFlowGraph, DegreeSummary, GraphMeta, KernelKind};
pub use scalar::{Field, Rational, Real};
pub use spectra::{Solver, SpectralKind};

pub type Measure = spectra::SpectralMeasure<f64>;
pub type Moment = spectra::MomentEstimate<f64>;
pub type Oracle = oracle::OracleSpectrum<f64>;
pub type EdgeLaw = oracle::EdgeProbabilities<f64>;
pub type ExactEdgeLaw = oracle::EdgeProbabilities<Rational>;
pub type Eigenfunction = oracle::EigenfunctionK<f64>;
pub type Matrix = linalg::SymMatrix<f64>;
pub type Kernel = linalg::MaxKernel<f64>;
pub type Report = analysis::ComparisonReport;

/// Locale-independent real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}
