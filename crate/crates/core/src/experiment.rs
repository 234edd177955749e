//! Reproducible runs: a [`RunSpec`] fully determines the CSV outputs, and
//! the [`RunManifest`] written next to them records the spec so a run can
//! be replayed byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    compare_spectra, convergence_sweep, fit_degrees, kappa_oracles, measures_for, mu_oracles, run_replicates,
    write_comparison_csv, CompareMeta, ComparisonReport, EpsSchedule, FitMethod, FitRange,
};
use crate::dynamics::{LeakSemantics, SimulationConfig};
use crate::error::{Error, Result};
use crate::format_real;
use crate::gates::{GateResult, Gates};
use crate::graph::{ChargeFlowGraph, GraphMeta};
use crate::oracle::{
    exact_edge_probability, j1_zeros, k_spectrum_nystrom, m_spectrum_truncated, OracleSpectrum, Provenance,
};
use crate::spectra::{
    spectral_measure_kappa, spectral_measure_mu, write_spectra_csv, Solver, SpectralKind, SpectralMeasure,
};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Which oracle table to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleTarget {
    KSpectrum,
    MSpectrum,
    Nystrom,
    EdgeProb,
}

impl std::str::FromStr for OracleTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k-spectrum" => Ok(OracleTarget::KSpectrum),
            "m-spectrum" => Ok(OracleTarget::MSpectrum),
            "nystrom" => Ok(OracleTarget::Nystrom),
            "edge-prob" => Ok(OracleTarget::EdgeProb),
            other => Err(Error::domain(format!(
                "unknown oracle target '{other}' (k-spectrum|m-spectrum|nystrom|edge-prob)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub what: OracleTarget,
    pub count: usize,
    pub truncation: usize,
    pub grid: usize,
    pub cutoff: f64,
    pub n: usize,
    pub semantics: LeakSemantics,
}

/// The operation a run performs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Spectrum {
        kind: SpectralKind,
        solver: Solver,
        /// Directory of stored `graph_r*.csv` files; simulate when absent.
        #[serde(default)]
        input: Option<PathBuf>,
    },
    Compare {
        kind: SpectralKind,
        ranks: usize,
        /// Score against the exact kernel of another semantics.
        oracle_semantics: Option<LeakSemantics>,
        /// Use the empirical means as the finite-n oracle.
        self_check: bool,
    },
    Sweep {
        kind: SpectralKind,
        ranks: usize,
        n_grid: Vec<usize>,
    },
    Degrees {
        decades: f64,
    },
    Oracle(OracleRequest),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Spectrum { .. } => "spectrum",
            Command::Compare { .. } => "compare",
            Command::Sweep { .. } => "sweep",
            Command::Degrees { .. } => "degrees",
            Command::Oracle(_) => "oracle",
        }
    }
}

/// Everything that determines the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: Command,
    /// Absent for oracle tables.
    pub config: Option<SimulationConfig>,
    pub schedule: Option<EpsSchedule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub spec: RunSpec,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub gates: Vec<GateResult>,
    pub reports: Vec<ComparisonReport>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>> {
    outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn needs_config(spec: &RunSpec) -> Result<&SimulationConfig> {
    let cfg = spec
        .config
        .as_ref()
        .ok_or_else(|| Error::domain(format!("'{}' needs a simulation config", spec.command.name())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn schedule_of(spec: &RunSpec, kind: SpectralKind) -> Result<EpsSchedule> {
    match (kind, spec.schedule) {
        (SpectralKind::Kappa, None) => Err(Error::domain("kappa needs an eps schedule")),
        (_, s) => Ok(s.unwrap_or_default()),
    }
}

/// Runs `spec`, writing every output plus the manifest into `dir`.
pub fn execute(spec: &RunSpec, dir: &Path, gates: &Gates) -> Result<RunOutcome> {
    std::fs::create_dir_all(dir)?;
    let started = Instant::now();
    let mut outputs = Vec::new();
    let mut results = Vec::new();
    let mut reports = Vec::new();

    match &spec.command {
        Command::Simulate => {
            let cfg = needs_config(spec)?;
            for (r, g) in run_replicates(cfg)?.iter().enumerate() {
                let stem = format!("graph_r{r}");
                g.save(dir, &stem, &graph_meta(cfg, g))?;
                outputs.push(format!("{stem}.csv"));
                outputs.push(format!("{stem}.json"));
            }
        }
        Command::Spectrum { kind, solver, input } => {
            let schedule = schedule_of(spec, *kind)?;
            let (alpha, measures) = match input {
                Some(from) => stored_measures(from, *kind, &schedule, *solver)?,
                None => {
                    let cfg = needs_config(spec)?;
                    (cfg.alpha, measures_for(cfg, *kind, &schedule, *solver)?)
                }
            };
            let rows: Vec<_> = measures.iter().enumerate().map(|(r, m)| (r as u64, m)).collect();
            write_spectra_csv(create(dir, "spectra.csv", &mut outputs)?, alpha, &rows)?;
        }
        Command::Compare {
            kind,
            ranks,
            oracle_semantics,
            self_check,
        } => {
            let cfg = needs_config(spec)?;
            let schedule = schedule_of(spec, *kind)?;
            let measures = measures_for(cfg, *kind, &schedule, Solver::Top(*ranks))?;
            let oracle_cfg = SimulationConfig {
                semantics: oracle_semantics.unwrap_or(cfg.semantics),
                ..cfg.clone()
            };
            let (mut finite, limit) = match kind {
                SpectralKind::Mu => mu_oracles(&oracle_cfg, *ranks)?,
                SpectralKind::Kappa => kappa_oracles(&oracle_cfg, schedule.eps(cfg.n), *ranks)?,
            };
            if *self_check {
                finite = empirical_oracle(&measures, *ranks)?;
            }
            let meta = CompareMeta {
                alpha: cfg.alpha,
                seed: Some(cfg.seed),
            };
            let report = compare_spectra(&measures, &finite, &limit, *ranks, meta)?;
            write_comparison_csv(
                create(dir, "comparison.csv", &mut outputs)?,
                std::slice::from_ref(&report),
            )?;
            let tol = match kind {
                SpectralKind::Mu => gates.mu.finite_rel_tol,
                SpectralKind::Kappa => gates.kappa.finite_rel_tol,
            };
            results.extend(finite_gates(&report, tol));
            reports.push(report);
        }
        Command::Sweep { kind, ranks, n_grid } => {
            let cfg = needs_config(spec)?;
            let schedule = schedule_of(spec, *kind)?;
            let table = convergence_sweep(n_grid, cfg, *kind, &schedule, *ranks)?;
            write_comparison_csv(create(dir, "sweep.csv", &mut outputs)?, &table.reports())?;
            let mut w = csv::Writer::from_writer(create(dir, "moments.csv", &mut outputs)?);
            w.write_record(["kind", "n", "alpha", "eps", "semantics", "order", "moment"])?;
            for p in &table.points {
                let rep = &p.report;
                w.write_record([
                    rep.kind.as_str().to_string(),
                    rep.n.to_string(),
                    format_real(rep.alpha),
                    rep.eps.map(format_real).unwrap_or_default(),
                    rep.semantics.to_string(),
                    "2".to_string(),
                    format_real(p.second_moment),
                ])?;
            }
            w.flush()?;
            let tol = match kind {
                SpectralKind::Mu => gates.mu.finite_rel_tol,
                SpectralKind::Kappa => gates.kappa.finite_rel_tol,
            };
            for p in &table.points {
                results.extend(finite_gates(&p.report, tol).into_iter().take(1));
            }
            if *kind == SpectralKind::Kappa {
                let errs = table.limit_errors(1);
                let sigmas = gates.kappa.trend_sigmas;
                results.push(GateResult::new(
                    "limit error decreases with n",
                    table.noisy_increases(1, sigmas) == 0 && errs[errs.len() - 1] <= errs[0],
                    format!(
                        "top-atom limit errors {errs:.4?}, standard errors {:.4?}, allowed growth {sigmas} sigma",
                        table.limit_error_std(1)
                    ),
                ));
                // The limit tolerance is pinned at the top of the gate grid.
                let pinned = gates.kappa.n_grid.last().copied().unwrap_or(0);
                let last = *errs.last().expect("nonempty grid");
                if n_grid.last().is_some_and(|&n| n >= pinned) {
                    results.push(GateResult::new(
                        "limit error at largest n",
                        last <= gates.kappa.limit_rel_tol,
                        format!("{last:.4} vs {}", gates.kappa.limit_rel_tol),
                    ));
                }
            }
            reports.extend(table.reports());
        }
        Command::Degrees { decades } => {
            let cfg = needs_config(spec)?;
            let mut w = csv::Writer::from_writer(create(dir, "powerlaw.csv", &mut outputs)?);
            w.write_record([
                "replicate",
                "method",
                "exponent",
                "std_error",
                "slope",
                "range_lo",
                "range_hi",
                "samples",
            ])?;
            for (r, g) in run_replicates(cfg)?.iter().enumerate() {
                let d = g.degrees();
                d.write_csv(create(dir, &format!("degrees_r{r}.csv"), &mut outputs)?)?;
                let fit = fit_degrees(&d, FitRange::MiddleDecades(*decades), FitMethod::CcdfRegression)?;
                let slope = fit.slope.expect("regression slope");
                w.write_record([
                    r.to_string(),
                    "ccdf_regression".to_string(),
                    format_real(fit.exponent),
                    format_real(fit.std_error),
                    format_real(slope),
                    format_real(fit.range.0),
                    format_real(fit.range.1),
                    fit.samples.to_string(),
                ])?;
                results.push(GateResult::new(
                    format!("degree CCDF slope, replicate {r}"),
                    (gates.power_law.slope_min..=gates.power_law.slope_max).contains(&slope),
                    format!(
                        "{slope:.4} in [{}, {}]",
                        gates.power_law.slope_min, gates.power_law.slope_max
                    ),
                ));
            }
            w.flush()?;
        }
        Command::Oracle(req) => write_oracle(req, create(dir, "oracle.csv", &mut outputs)?)?,
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.save(dir)?;
    Ok(RunOutcome {
        manifest,
        gates: results,
        reports,
    })
}

/// Re-runs the spec stored in a manifest.
pub fn replay(manifest: &Path, dir: &Path, gates: &Gates) -> Result<RunOutcome> {
    execute(&RunManifest::load(manifest)?.spec, dir, gates)
}

fn stored_measures(
    from: &Path,
    kind: SpectralKind,
    schedule: &EpsSchedule,
    solver: Solver,
) -> Result<(f64, Vec<SpectralMeasure<f64>>)> {
    let stems = graph_stems(from)?;
    if stems.is_empty() {
        return Err(Error::domain(format!("no graph_r*.csv files in {}", from.display())));
    }
    let mut alpha = None;
    let mut measures = Vec::with_capacity(stems.len());
    for stem in &stems {
        let (g, meta) = ChargeFlowGraph::load(from, stem)?;
        if alpha.is_some_and(|a| a != meta.alpha) {
            return Err(Error::domain("stored graphs disagree on alpha"));
        }
        alpha = Some(meta.alpha);
        measures.push(match kind {
            SpectralKind::Mu => spectral_measure_mu(&g, solver)?,
            SpectralKind::Kappa => spectral_measure_kappa(&g, schedule.eps(g.n), solver)?,
        });
    }
    Ok((alpha.expect("nonempty"), measures))
}

fn graph_meta(cfg: &SimulationConfig, g: &ChargeFlowGraph) -> GraphMeta {
    GraphMeta {
        n: g.n,
        m: g.m,
        alpha: cfg.alpha,
        semantics: g.semantics,
        seed: cfg.seed,
    }
}

fn finite_gates(report: &ComparisonReport, tol: f64) -> Vec<GateResult> {
    report
        .rows
        .iter()
        .map(|row| {
            let err = row.rel_err_finite.unwrap_or(f64::INFINITY);
            GateResult::new(
                format!("{} n={} rank {} vs finite-n oracle", report.kind, report.n, row.rank),
                err <= tol,
                format!("relative error {err:.4} (tolerance {tol})"),
            )
        })
        .collect()
}

fn empirical_oracle(measures: &[SpectralMeasure<f64>], k: usize) -> Result<OracleSpectrum<f64>> {
    let means = (0..k)
        .map(|r| {
            let mut v: Vec<f64> = measures.iter().map(|m| m.atoms[r]).collect();
            v.sort_by(f64::total_cmp);
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    OracleSpectrum::new(means, Provenance::ExactKernelMatrix, Default::default())
}

pub const ORACLE_HEADER: [&str; 5] = ["k", "j1_zero", "lambda_K", "lambda_M_truncN", "provenance"];

/// Spectrum targets use `k,j1_zero,lambda_K,lambda_M_truncN,provenance`;
/// the edge law uses `u,visit,step,leak,semantics`.
pub fn write_oracle<W: Write>(req: &OracleRequest, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    match req.what {
        OracleTarget::EdgeProb => {
            let p = exact_edge_probability::<f64>(req.n, req.semantics)?;
            out.write_record(["u", "visit", "step", "leak", "semantics"])?;
            for u in 0..req.n {
                out.write_record([
                    (u + 1).to_string(),
                    format_real(p.visit[u]),
                    format_real(p.step[u]),
                    format_real(p.leak[u]),
                    req.semantics.to_string(),
                ])?;
            }
        }
        target => {
            out.write_record(ORACLE_HEADER)?;
            let (zeros, k_vals, m_vals, provenance) = match target {
                OracleTarget::KSpectrum => {
                    let zeros: Vec<f64> = j1_zeros::<f64>(req.count)?.iter().map(|z| z.location).collect();
                    let k: Vec<f64> = zeros.iter().map(|x| 8.0 / (x * x)).collect();
                    (Some(zeros), Some(k), None, Provenance::BesselClosedForm)
                }
                OracleTarget::MSpectrum => {
                    let s = m_spectrum_truncated::<f64>(req.truncation, req.count)?;
                    (None, None, Some(s.eigenvalues), Provenance::MTruncated)
                }
                OracleTarget::Nystrom => {
                    let s = k_spectrum_nystrom::<f64>(req.cutoff, req.grid, req.count)?;
                    (None, Some(s.eigenvalues), None, Provenance::Nystrom)
                }
                OracleTarget::EdgeProb => unreachable!(),
            };
            let cell = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| format_real(v[i])).unwrap_or_default();
            for i in 0..req.count {
                out.write_record([
                    (i + 1).to_string(),
                    cell(&zeros, i),
                    cell(&k_vals, i),
                    cell(&m_vals, i),
                    provenance.as_str().to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Lists a directory's `graph_r*.csv` stems in replicate order.
pub fn graph_stems(dir: &Path) -> Result<Vec<String>> {
    let mut stems: Vec<(usize, String)> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let r = name.strip_prefix("graph_r")?.strip_suffix(".csv")?.parse().ok()?;
            Some((r, name.trim_end_matches(".csv").to_string()))
        })
        .collect();
    stems.sort();
    Ok(stems.into_iter().map(|(_, s)| s).collect())
}

/// Output directory: `explicit`, else `$WTA_OUT_DIR`, else `default`.
pub fn output_dir(explicit: Option<PathBuf>, default: &str) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("WTA_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default))
}
