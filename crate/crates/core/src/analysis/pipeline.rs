//! Simulate, take spectra, and compare against oracles, replicate-parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::compare::{compare_spectra, CompareMeta, ComparisonReport};
use crate::analysis::eps::EpsSchedule;
use crate::dynamics::{simulate, with_threads, LeakSemantics, SimulationConfig};
use crate::error::{Error, Result};
use crate::graph::{expected_adjacency_operator, truncation_rank, ChargeFlowGraph, KernelKind};
use crate::linalg::{top_eigenvalues, LanczosOptions};
use crate::oracle::{k_spectrum, m_spectrum_truncated, OracleParams, OracleSpectrum, Provenance};
use crate::spectra::{spectral_measure_kappa, spectral_measure_mu, Solver, SpectralKind, SpectralMeasure};

/// All replicates of `config`, on a pool of `config.threads` workers.
pub fn run_replicates(config: &SimulationConfig) -> Result<Vec<ChargeFlowGraph>> {
    config.validate()?;
    with_threads(config.threads, || {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| simulate(config, r))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Runs `f` on every replicate graph without keeping the graphs.
pub fn map_replicates<R: Send>(
    config: &SimulationConfig,
    f: impl Fn(ChargeFlowGraph) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    config.validate()?;
    with_threads(config.threads, || {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| f(simulate(config, r)?))
            .collect::<Result<Vec<_>>>()
    })?
}

fn oracle_lanczos() -> LanczosOptions {
    LanczosOptions {
        tol: 1e-12,
        ..LanczosOptions::default()
    }
}

/// Top `k` eigenvalues of `scale · E A^{n,m}` with ranks `1..=r` removed.
pub fn expected_spectrum(
    n: usize,
    m: u64,
    kind: KernelKind,
    r: usize,
    scale: f64,
    k: usize,
) -> Result<OracleSpectrum<f64>> {
    if r >= n {
        return Err(Error::domain("truncation removes every rank"));
    }
    let op = expected_adjacency_operator::<f64>(n, m, kind)?
        .with_start(r)
        .scaled(scale);
    let values = top_eigenvalues(&op, k.min(n - r), &oracle_lanczos())?.values;
    let semantics = match kind {
        KernelKind::ExactStay => Some(LeakSemantics::Stay),
        KernelKind::ExactRemove => Some(LeakSemantics::Remove),
        KernelKind::Asymptotic => None,
    };
    OracleSpectrum::new(
        values,
        Provenance::ExactKernelMatrix,
        OracleParams {
            n: Some(n),
            m: Some(m),
            semantics,
            scale: Some(scale),
            ..OracleParams::default()
        },
    )
}

/// Finite-n and limit oracles for the top `k` atoms of `μ`.
pub fn mu_oracles(config: &SimulationConfig, k: usize) -> Result<(OracleSpectrum<f64>, OracleSpectrum<f64>)> {
    let n = config.n;
    let finite = expected_spectrum(
        n,
        config.m(),
        KernelKind::exact_for(config.semantics),
        0,
        1.0 / n as f64,
        k,
    )?;
    let limit = m_spectrum_truncated::<f64>(n, k.min(n))?.scaled(config.alpha);
    Ok((finite, limit))
}

/// Finite-n and limit oracles for the top `k` atoms of `κ` at `eps`.
pub fn kappa_oracles(
    config: &SimulationConfig,
    eps: f64,
    k: usize,
) -> Result<(OracleSpectrum<f64>, OracleSpectrum<f64>)> {
    let n = config.n;
    let r = truncation_rank(n, eps)?;
    let mut finite = expected_spectrum(n, config.m(), KernelKind::exact_for(config.semantics), r, eps, k)?;
    finite.params.eps = Some(eps);
    let limit = k_spectrum::<f64>(k)?.scaled(config.alpha);
    Ok((finite, limit))
}

fn meta(config: &SimulationConfig) -> CompareMeta {
    CompareMeta {
        alpha: config.alpha,
        seed: Some(config.seed),
    }
}

pub fn mu_comparison(config: &SimulationConfig, k: usize) -> Result<ComparisonReport> {
    let measures = map_replicates(config, |g| spectral_measure_mu::<f64>(&g, Solver::Top(k)))?;
    let (finite, limit) = mu_oracles(config, k)?;
    compare_spectra(&measures, &finite, &limit, k, meta(config))
}

pub fn kappa_comparison(config: &SimulationConfig, schedule: &EpsSchedule, k: usize) -> Result<ComparisonReport> {
    let eps = schedule.eps(config.n);
    let measures = map_replicates(config, |g| spectral_measure_kappa::<f64>(&g, eps, Solver::Top(k)))?;
    let (finite, limit) = kappa_oracles(config, eps, k)?;
    compare_spectra(&measures, &finite, &limit, k, meta(config))
}

/// Both measures from the same replicate graphs.
pub fn measures_for(
    config: &SimulationConfig,
    kind: SpectralKind,
    schedule: &EpsSchedule,
    solver: Solver,
) -> Result<Vec<SpectralMeasure<f64>>> {
    let eps = schedule.eps(config.n);
    map_replicates(config, |g| match kind {
        SpectralKind::Mu => spectral_measure_mu(&g, solver),
        SpectralKind::Kappa => spectral_measure_kappa(&g, eps, solver),
    })
}

/// Remove vs stay on matched seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub mu_remove: ComparisonReport,
    pub mu_stay: ComparisonReport,
    pub kappa_remove: ComparisonReport,
    pub kappa_stay: ComparisonReport,
    /// `|remove - stay|` of the mean top `κ` atom.
    pub kappa_top_gap: f64,
    /// `sqrt((s_remove^2 + s_stay^2) / 2)` of the per-replicate spread.
    pub kappa_pooled_std: f64,
    /// Relative gap `|remove - stay| / max` of the mean `μ` atom, per rank.
    pub mu_rank_gaps: Vec<f64>,
}

impl RobustnessReport {
    pub fn kappa_gap_in_sigmas(&self) -> f64 {
        self.kappa_top_gap / self.kappa_pooled_std
    }

    pub fn mu_max_gap(&self) -> f64 {
        self.mu_rank_gaps.iter().copied().fold(0.0, f64::max)
    }
}

pub fn robustness_experiment(base: &SimulationConfig, schedule: &EpsSchedule, k: usize) -> Result<RobustnessReport> {
    if base.replicates < 2 {
        return Err(Error::domain("robustness needs at least two replicates per semantics"));
    }
    let with = |s: LeakSemantics| SimulationConfig {
        semantics: s,
        ..base.clone()
    };
    let remove = with(LeakSemantics::Remove);
    let stay = with(LeakSemantics::Stay);
    let mu_remove = mu_comparison(&remove, k)?;
    let mu_stay = mu_comparison(&stay, k)?;
    let kappa_remove = kappa_comparison(&remove, schedule, k)?;
    let kappa_stay = kappa_comparison(&stay, schedule, k)?;
    let (a, b) = (&kappa_remove.rows[0], &kappa_stay.rows[0]);
    let sa = a.emp_std.expect("two or more replicates");
    let sb = b.emp_std.expect("two or more replicates");
    let mu_rank_gaps = mu_remove
        .rows
        .iter()
        .zip(&mu_stay.rows)
        .map(|(x, y)| (x.emp_mean - y.emp_mean).abs() / x.emp_mean.abs().max(y.emp_mean.abs()))
        .collect();
    Ok(RobustnessReport {
        kappa_top_gap: (a.emp_mean - b.emp_mean).abs(),
        kappa_pooled_std: ((sa * sa + sb * sb) / 2.0).sqrt(),
        mu_rank_gaps,
        mu_remove,
        mu_stay,
        kappa_remove,
        kappa_stay,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub report: ComparisonReport,
    /// Replicate mean of `Σ atoms^2`, computed from the matrix entries.
    pub second_moment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: SpectralKind,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn reports(&self) -> Vec<ComparisonReport> {
        self.points.iter().map(|p| p.report.clone()).collect()
    }

    /// Limit relative error at `rank` for each `n`.
    pub fn limit_errors(&self, rank: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.report.row(rank).and_then(|r| r.rel_err_limit).unwrap_or(f64::NAN))
            .collect()
    }

    /// Consecutive steps over which the limit error at `rank` decreased.
    pub fn decreasing_steps(&self, rank: usize) -> usize {
        self.limit_errors(rank).windows(2).filter(|w| w[1] < w[0]).count()
    }

    /// Standard error of each limit error, from the replicate spread of the
    /// mean atom. `NaN` where a point has a single replicate.
    pub fn limit_error_std(&self, rank: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| {
                let rep = &p.report;
                rep.row(rank)
                    .and_then(|r| {
                        r.emp_std
                            .map(|s| s / (rep.replicates as f64).sqrt() / r.oracle_limit.abs())
                    })
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    /// Steps where the limit error grows by more than `sigmas` combined
    /// standard errors.
    pub fn noisy_increases(&self, rank: usize, sigmas: f64) -> usize {
        let e = self.limit_errors(rank);
        let s = self.limit_error_std(rank);
        (1..e.len())
            .filter(|&i| !(e[i] - e[i - 1] <= sigmas * (s[i] * s[i] + s[i - 1] * s[i - 1]).sqrt()))
            .count()
    }
}

/// `Σ_{i,j} A_ij^2` over ranks above `r`.
fn squared_mass(g: &ChargeFlowGraph, r: usize) -> f64 {
    g.entries()
        .iter()
        .filter(|(&(_, j), _)| j > r)
        .map(|(&(i, j), &a)| {
            let a = a as f64;
            if i == j {
                a * a
            } else {
                2.0 * a * a
            }
        })
        .sum()
}

/// One comparison per `n` (ascending). `μ` when `kind` is `Mu`, otherwise
/// `κ` at `ε = schedule.eps(n)`.
pub fn convergence_sweep(
    n_grid: &[usize],
    base: &SimulationConfig,
    kind: SpectralKind,
    schedule: &EpsSchedule,
    k: usize,
) -> Result<SweepTable> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("sweep grid must be nonempty and strictly ascending"));
    }
    let points = n_grid
        .iter()
        .map(|&n| {
            let config = SimulationConfig { n, ..base.clone() };
            let eps = schedule.eps(n);
            let (r, scale, solver_eps) = match kind {
                SpectralKind::Mu => (0, 1.0 / n as f64, None),
                SpectralKind::Kappa => (truncation_rank(n, eps)?, eps, Some(eps)),
            };
            let per = map_replicates(&config, |g| {
                let measure = match solver_eps {
                    None => spectral_measure_mu::<f64>(&g, Solver::Top(k))?,
                    Some(e) => spectral_measure_kappa::<f64>(&g, e, Solver::Top(k))?,
                };
                Ok((measure, squared_mass(&g, r) * scale * scale))
            })?;
            let (measures, moments): (Vec<_>, Vec<f64>) = per.into_iter().unzip();
            let (finite, limit) = match kind {
                SpectralKind::Mu => mu_oracles(&config, k)?,
                SpectralKind::Kappa => kappa_oracles(&config, eps, k)?,
            };
            let mut sorted = moments;
            sorted.sort_by(f64::total_cmp);
            Ok(SweepPoint {
                report: compare_spectra(&measures, &finite, &limit, k, meta(&config))?,
                second_moment: sorted.iter().sum::<f64>() / sorted.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { kind, points })
}
