//! Monte Carlo against theory: rank-matched spectral comparisons, size
//! sweeps, semantics robustness, frequency z-tests, two-sample tests and
//! power-law fits of the degree sequence.

mod chisq;
mod compare;
mod eps;
mod frequency;
mod pipeline;
mod powerlaw;

pub use chisq::{two_sample_chi_square, ChiSquareTest, MIN_POOLED_COUNT};
pub use compare::{
    compare_spectra, write_comparison_csv, CompareMeta, ComparisonReport, RankComparison, COMPARISON_HEADER,
};
pub use eps::{parse_ratio, EpsSchedule};
pub use frequency::{sample_paths, visit_frequency_test, FrequencyRow, PathSample, MIN_SAMPLES};
pub use pipeline::{
    convergence_sweep, expected_spectrum, kappa_comparison, kappa_oracles, map_replicates, measures_for, mu_comparison,
    mu_oracles, robustness_experiment, run_replicates, RobustnessReport, SweepPoint, SweepTable,
};
pub use powerlaw::{fit_degrees, fit_power_law, FitMethod, FitRange, PowerLawFit, MIN_SAMPLES_IN_RANGE};
