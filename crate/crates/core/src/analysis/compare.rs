use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::LeakSemantics;
use crate::error::{Error, Result};
use crate::oracle::OracleSpectrum;
use crate::spectra::{SpectralKind, SpectralMeasure};
use crate::{format_real, Real};

/// Empirical vs oracle values at one rank (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub rank: usize,
    pub emp_mean: f64,
    /// Sample standard deviation across replicates; needs two or more.
    pub emp_std: Option<f64>,
    pub oracle_finite: f64,
    pub oracle_limit: f64,
    pub rel_err_finite: Option<f64>,
    pub rel_err_limit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub kind: SpectralKind,
    pub n: usize,
    pub m: u64,
    pub alpha: f64,
    pub eps: Option<f64>,
    pub semantics: LeakSemantics,
    pub replicates: usize,
    pub seed: Option<u64>,
    pub rows: Vec<RankComparison>,
}

impl ComparisonReport {
    pub fn row(&self, rank: usize) -> Option<&RankComparison> {
        self.rows.iter().find(|r| r.rank == rank)
    }
}

/// Run-level labels carried into the report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareMeta {
    pub alpha: f64,
    pub seed: Option<u64>,
}

/// Rank-matched comparison of the top `k` atoms.
///
/// Per-rank samples are sorted before summation, so the report does not
/// depend on replicate order.
pub fn compare_spectra<T: Real>(
    measures: &[SpectralMeasure<T>],
    oracle_finite: &OracleSpectrum<T>,
    oracle_limit: &OracleSpectrum<T>,
    k: usize,
    meta: CompareMeta,
) -> Result<ComparisonReport> {
    let first = measures
        .first()
        .ok_or_else(|| Error::domain("no spectral measures to compare"))?;
    for mu in measures {
        if mu.kind != first.kind
            || mu.n != first.n
            || mu.m != first.m
            || mu.eps != first.eps
            || mu.semantics != first.semantics
        {
            return Err(Error::domain(
                "spectral measures disagree on kind, n, m, eps or semantics",
            ));
        }
        if mu.atoms.len() < k {
            return Err(Error::domain(format!(
                "a measure has {} atoms, fewer than {k}",
                mu.atoms.len()
            )));
        }
    }
    if oracle_finite.len() < k || oracle_limit.len() < k {
        return Err(Error::domain(format!("oracle spectra provide fewer than {k} values")));
    }

    let rows = (0..k)
        .map(|rank| {
            let mut samples: Vec<f64> = measures.iter().map(|mu| mu.atoms[rank].to_f64_lossy()).collect();
            samples.sort_by(f64::total_cmp);
            let count = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / count;
            let std = (samples.len() >= 2).then(|| {
                let mut dev: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
                dev.sort_by(f64::total_cmp);
                (dev.iter().sum::<f64>() / (count - 1.0)).sqrt()
            });
            let finite = oracle_finite.eigenvalues[rank].to_f64_lossy();
            let limit = oracle_limit.eigenvalues[rank].to_f64_lossy();
            RankComparison {
                rank: rank + 1,
                emp_mean: mean,
                emp_std: std,
                oracle_finite: finite,
                oracle_limit: limit,
                rel_err_finite: relative_error(mean, finite),
                rel_err_limit: relative_error(mean, limit),
            }
        })
        .collect();

    Ok(ComparisonReport {
        kind: first.kind,
        n: first.n,
        m: first.m,
        alpha: meta.alpha,
        eps: first.eps,
        semantics: first.semantics,
        replicates: measures.len(),
        seed: meta.seed,
        rows,
    })
}

fn relative_error(value: f64, reference: f64) -> Option<f64> {
    (reference != 0.0).then(|| (value - reference).abs() / reference.abs())
}

pub const COMPARISON_HEADER: [&str; 12] = [
    "kind",
    "n",
    "alpha",
    "eps",
    "semantics",
    "rank",
    "emp_mean",
    "emp_std",
    "oracle_finite",
    "oracle_limit",
    "rel_err_finite",
    "rel_err_limit",
];

/// One row per (report, rank); a sweep is several reports in one file.
pub fn write_comparison_csv<W: Write>(w: W, reports: &[ComparisonReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COMPARISON_HEADER)?;
    let opt = |x: Option<f64>| x.map(format_real).unwrap_or_default();
    for rep in reports {
        for row in &rep.rows {
            out.write_record([
                rep.kind.as_str().to_string(),
                rep.n.to_string(),
                format_real(rep.alpha),
                opt(rep.eps),
                rep.semantics.to_string(),
                row.rank.to_string(),
                format_real(row.emp_mean),
                opt(row.emp_std),
                format_real(row.oracle_finite),
                format_real(row.oracle_limit),
                opt(row.rel_err_finite),
                opt(row.rel_err_limit),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
