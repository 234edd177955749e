//! Acceptance suite. Each test checks one numbered criterion, prints a
//! single `PASS`/`FAIL` line, and fails when the criterion does not hold.
//! Tolerances come from the built-in gate file.
//!
//! Criteria run one at a time (a shared lock) so their wall-clock budgets
//! are measured without interference from each other.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use wta_core::analysis::{
    convergence_sweep, fit_degrees, fit_power_law, kappa_comparison, mu_comparison, parse_ratio, sample_paths,
    two_sample_chi_square, EpsSchedule, FitMethod, FitRange,
};
use wta_core::dynamics::{coupled_family, simulate_global, simulate_units};
use wta_core::experiment::{execute, replay, Command, RunSpec, MANIFEST_FILE};
use wta_core::gates::{GateResult, Gates};
use wta_core::oracle::{
    eigen_residual, exact_edge_probability, j1_zeros, k_eigenvalue, k_spectrum, log_grid, nystrom_k, EigenfunctionK,
};
use wta_core::{Engine, LeakSemantics, SimulationConfig, Solver, SpectralKind};

static SERIAL: Mutex<()> = Mutex::new(());

/// A whole run, as its sorted list of edge multiplicities.
type Outcome = Vec<((usize, usize), u64)>;

fn run_criterion(id: u32, title: &str, budget: Duration, body: impl FnOnce(&Gates) -> Vec<GateResult>) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let gates = Gates::default();
    let start = Instant::now();
    let checks = body(&gates);
    let elapsed = start.elapsed();
    for c in &checks {
        println!("    {}", c.line());
    }
    let in_budget = elapsed <= budget;
    if !in_budget {
        println!("    FAIL runtime: {elapsed:.1?} over budget {budget:?}");
    }
    let passed = in_budget && checks.iter().all(|c| c.passed);
    println!(
        "{} criterion {id} ({title}) in {:.1?}",
        if passed { "PASS" } else { "FAIL" },
        elapsed
    );
    assert!(passed, "criterion {id} failed");
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rel(x: f64, reference: f64) -> f64 {
    ((x - reference) / reference).abs()
}

#[test]
fn criterion_01_bessel_oracle() {
    run_criterion(1, "Bessel zeros", Duration::from_secs(1), |g| {
        let b = &g.bessel;
        let zeros = j1_zeros::<f64>(b.zero_count.max(b.spacing_at + 1)).expect("zeros");
        let first = zeros[0].location;
        let worst = zeros[..b.zero_count]
            .iter()
            .map(|z| z.residual.abs())
            .fold(0.0, f64::max);
        let spacing = zeros[b.spacing_at].location - zeros[b.spacing_at - 1].location;
        vec![
            GateResult::new(
                "first zero",
                (first - b.first_zero).abs() <= b.first_zero_tol,
                format!("{first:.12} vs {}", b.first_zero),
            ),
            GateResult::new(
                "zero residuals",
                worst <= b.residual_max,
                format!("max |J1| = {worst:.2e} over k = 1..{}", b.zero_count),
            ),
            GateResult::new(
                "zero spacing",
                (spacing - std::f64::consts::PI).abs() <= b.spacing_tol,
                format!("x_{} - x_{} = {spacing:.6}", b.spacing_at + 1, b.spacing_at),
            ),
        ]
    });
}

#[test]
fn criterion_02_trace_identities() {
    run_criterion(2, "trace identities", Duration::from_secs(1), |g| {
        let s = k_spectrum::<f64>(g.trace.terms).expect("spectrum");
        let tr = s.sum_of_powers(1);
        let tr2 = s.sum_of_powers(2);
        vec![
            GateResult::new("tr K", (tr - 1.0).abs() <= g.trace.trace_tol, format!("{tr:.8} vs 1")),
            GateResult::new(
                "tr K^2",
                (tr2 - 1.0 / 3.0).abs() <= g.trace.trace_sq_tol,
                format!("{tr2:.10} vs 1/3"),
            ),
        ]
    });
}

#[test]
fn criterion_03_nystrom_cross_oracle() {
    run_criterion(3, "Nystrom cross-oracle", Duration::from_secs(30), |g| {
        let ny = &g.nystrom;
        let exact: Vec<f64> = (1..=ny.count).map(|k| k_eigenvalue(k).unwrap()).collect();
        let errors = |grid: usize| -> Vec<f64> {
            let top = nystrom_k(ny.cutoff, grid).unwrap().top(ny.count).unwrap();
            top.eigenvalues.iter().zip(&exact).map(|(a, b)| rel(*a, *b)).collect()
        };
        let coarse = errors(ny.grid / 2);
        let fine = errors(ny.grid);
        let worst = fine.iter().copied().fold(0.0, f64::max);
        vec![
            GateResult::new(
                format!("top {} within tolerance", ny.count),
                worst <= ny.rel_tol,
                format!("max relative error {worst:.2e} at grid {}", ny.grid),
            ),
            GateResult::new(
                "error shrinks under grid doubling",
                fine.iter().zip(&coarse).all(|(f, c)| f < c),
                format!(
                    "grid {}: {}, grid {}: {}",
                    ny.grid / 2,
                    sci(&coarse),
                    ny.grid,
                    sci(&fine)
                ),
            ),
        ]
    });
}

#[test]
fn criterion_04_eigenfunction_residual() {
    run_criterion(4, "eigenfunction residual", Duration::from_secs(10), |g| {
        let r = &g.residual;
        let cutoff = g.nystrom.cutoff;
        let grid = log_grid(r.grid_points, cutoff);
        let mut out = Vec::new();
        let mut worst = 0.0f64;
        for k in 1..=r.count {
            let lambda: f64 = k_eigenvalue(k).unwrap();
            let phi = EigenfunctionK::new(lambda, cutoff).unwrap();
            worst = worst.max(eigen_residual(&phi, &grid).unwrap().relative());
        }
        out.push(GateResult::new(
            format!("eigen-equation for k = 1..{}", r.count),
            worst <= r.rel_tol,
            format!("max relative residual {worst:.2e}"),
        ));
        let lambda: f64 = k_eigenvalue(1).unwrap();
        let probe = EigenfunctionK::trial(lambda * r.probe_factor, cutoff).unwrap();
        let bad = eigen_residual(&probe, &grid).unwrap().relative();
        out.push(GateResult::new(
            "non-eigenvalue probe",
            bad >= r.probe_min,
            format!("relative residual {bad:.2e} at {}·λ1", r.probe_factor),
        ));
        out
    });
}

#[test]
fn criterion_05_simulator_vs_exact_law() {
    run_criterion(5, "simulator vs exact law", Duration::from_secs(60), |g| {
        let f = &g.frequency;
        let mut out = Vec::new();
        for (k, sem) in [LeakSemantics::Remove, LeakSemantics::Stay].into_iter().enumerate() {
            let sample = sample_paths(f.n, sem, Engine::Unitwise, f.samples, 100 + k as u64, &f.edge_probes).unwrap();
            let oracle = exact_edge_probability::<f64>(f.n, sem).unwrap();
            let visits: Vec<_> = sample
                .visit_rows(&oracle)
                .into_iter()
                .filter(|r| f.visit_probes.contains(&r.i))
                .collect();
            let edges = sample.edge_rows(&oracle);
            let zmax = visits.iter().chain(&edges).map(|r| r.z.abs()).fold(0.0, f64::max);
            out.push(GateResult::new(
                format!("{sem}: probes within {} sigma", f.z_max),
                zmax <= f.z_max && visits.len() == f.visit_probes.len() && edges.len() == f.edge_probes.len(),
                format!(
                    "{} visit and {} edge probes, max |z| = {zmax:.2}",
                    visits.len(),
                    edges.len()
                ),
            ));
            if sem == LeakSemantics::Stay {
                let wrong = exact_edge_probability::<f64>(f.n, LeakSemantics::Remove).unwrap();
                let zmis = sample
                    .visit_rows(&wrong)
                    .iter()
                    .filter(|r| r.i <= f.mismatch_max_vertex)
                    .map(|r| r.z.abs())
                    .fold(0.0, f64::max);
                out.push(GateResult::new(
                    "mismatched semantics detected",
                    zmis > f.mismatch_z_min,
                    format!(
                        "stay paths vs remove law: max |z| = {zmis:.1} for U <= {}",
                        f.mismatch_max_vertex
                    ),
                ));
            }
        }
        out
    });
}

#[test]
fn criterion_06_structural_invariants() {
    run_criterion(6, "structural invariants", Duration::from_secs(60), |g| {
        let s = &g.structure;
        let mut trace_ok = true;
        let mut symmetric = true;
        let mut checked = 0usize;
        let mut violations = 0usize;
        for sem in [LeakSemantics::Remove, LeakSemantics::Freeze] {
            for r in 0..s.replicates as u64 {
                let cfg = SimulationConfig::new(s.n_large, s.alpha, sem, 7);
                let graph = simulate_units(&cfg, r).unwrap();
                trace_ok &= graph.trace() == cfg.m();
                symmetric &= graph.to_sparse::<f64>().to_dense().asymmetry() == 0.0;
            }
        }
        for sem in LeakSemantics::ALL {
            for r in 0..s.replicates as u64 {
                let family = coupled_family(&[s.n_small, s.n_large], s.alpha, sem, 11, r).unwrap();
                let (small, large) = (&family[0], &family[1]);
                for (&(i, j), &a) in small.entries() {
                    checked += 1;
                    if a > large.get(i, j) {
                        violations += 1;
                    }
                }
            }
        }
        vec![
            GateResult::new("trace equals m", trace_ok, "remove and freeze, every replicate"),
            GateResult::new("symmetry", symmetric, "dense expansion equals its transpose"),
            GateResult::new(
                "coupled family monotone",
                violations == 0 && checked > 0,
                format!(
                    "n = {} inside n = {}: {violations} of {checked} entries exceed",
                    s.n_small, s.n_large
                ),
            ),
        ]
    });
}

#[test]
fn criterion_07_engine_equivalence() {
    run_criterion(7, "engine equivalence", Duration::from_secs(120), |g| {
        let e = &g.engines;
        let mut out = Vec::new();
        for sem in [LeakSemantics::Remove, LeakSemantics::Stay] {
            let cfg = SimulationConfig::new(e.n, e.alpha, sem, 2024);
            let mut unitwise: BTreeMap<Outcome, u64> = BTreeMap::new();
            let mut global = unitwise.clone();
            for r in 0..e.runs {
                let key =
                    |g: &wta_core::ChargeFlowGraph| -> Outcome { g.entries().iter().map(|(&k, &v)| (k, v)).collect() };
                *unitwise.entry(key(&simulate_units(&cfg, r).unwrap())).or_default() += 1;
                let run = simulate_global(&cfg, e.runs + r, u64::MAX).unwrap();
                *global.entry(key(&run.graph)).or_default() += 1;
            }
            let t = two_sample_chi_square(&unitwise, &global).unwrap();
            out.push(GateResult::new(
                format!("{sem}: global vs unitwise"),
                !t.rejects_at(e.level),
                format!("chi2 = {:.2}, dof = {}, p = {:.3}", t.statistic, t.dof, t.p_value),
            ));
        }
        let direct = sample_paths(
            e.poisson_n,
            LeakSemantics::Stay,
            Engine::Unitwise,
            e.poisson_samples,
            5,
            &[],
        )
        .unwrap();
        let poisson = sample_paths(
            e.poisson_n,
            LeakSemantics::Stay,
            Engine::Poisson,
            e.poisson_samples,
            6,
            &[],
        )
        .unwrap();
        let t = two_sample_chi_square(&direct.lengths, &poisson.lengths).unwrap();
        out.push(GateResult::new(
            "poisson vs stay path lengths",
            !t.rejects_at(e.level),
            format!("chi2 = {:.2}, dof = {}, p = {:.3}", t.statistic, t.dof, t.p_value),
        ));
        out
    });
}

#[test]
fn criterion_08_mu_at_desk_scale() {
    run_criterion(8, "mu against finite-n oracle", Duration::from_secs(600), |g| {
        let m = &g.mu;
        let cfg = SimulationConfig {
            replicates: m.replicates,
            threads: 4,
            ..SimulationConfig::new(m.n, m.alpha, LeakSemantics::Remove, 8)
        };
        let report = mu_comparison(&cfg, m.ranks).unwrap();
        let mut out: Vec<GateResult> = report
            .rows
            .iter()
            .map(|r| {
                let err = r.rel_err_finite.unwrap();
                GateResult::new(
                    format!("rank {}", r.rank),
                    err <= m.finite_rel_tol,
                    format!(
                        "mean {:.5} vs E A/n {:.5} ({:.2}%); vs α·M_N {:.5} ({:.1}%, reported only)",
                        r.emp_mean,
                        r.oracle_finite,
                        100.0 * err,
                        r.oracle_limit,
                        100.0 * r.rel_err_limit.unwrap()
                    ),
                )
            })
            .collect();
        out.push(GateResult::new(
            "ranks compared",
            report.rows.len() == m.ranks,
            format!("{} replicates", report.replicates),
        ));
        out
    });
}

#[test]
fn criterion_09_kappa_sweep() {
    run_criterion(9, "kappa sweep", Duration::from_secs(1200), |g| {
        let k = &g.kappa;
        let schedule = EpsSchedule::with_exponent(parse_ratio(&k.eps_exponent).unwrap()).unwrap();
        let base = SimulationConfig {
            replicates: k.replicates,
            threads: 4,
            ..SimulationConfig::new(k.n_grid[0], k.alpha, LeakSemantics::Remove, 9)
        };
        let table = convergence_sweep(&k.n_grid, &base, SpectralKind::Kappa, &schedule, k.ranks).unwrap();
        let mut out = Vec::new();
        for p in &table.points {
            let top = &p.report.rows[0];
            let err = top.rel_err_finite.unwrap();
            out.push(GateResult::new(
                format!("(a) n = {} top atom vs finite-n oracle", p.report.n),
                err <= k.finite_rel_tol,
                format!("{:.5} vs {:.5} ({:.2}%)", top.emp_mean, top.oracle_finite, 100.0 * err),
            ));
        }
        let errs = table.limit_errors(1);
        let ses = table.limit_error_std(1);
        let pct = |v: &[f64]| {
            v.iter()
                .map(|e| format!("{:.2}", 100.0 * e))
                .collect::<Vec<_>>()
                .join(", ")
        };
        out.push(GateResult::new(
            "(b) limit error decreases up to noise",
            table.noisy_increases(1, k.trend_sigmas) == 0 && errs[errs.len() - 1] < errs[0],
            format!(
                "errors vs α·8/x1^2: [{}]% (standard errors [{}]%), {} of {} steps strictly down",
                pct(&errs),
                pct(&ses),
                table.decreasing_steps(1),
                errs.len() - 1
            ),
        ));
        let last = *errs.last().unwrap();
        out.push(GateResult::new(
            "(b) limit error at largest n",
            last <= k.limit_rel_tol,
            format!("{:.2}% vs {:.0}%", 100.0 * last, 100.0 * k.limit_rel_tol),
        ));
        let remove = &table.points.last().unwrap().report;
        let stay_cfg = SimulationConfig {
            n: remove.n,
            semantics: LeakSemantics::Stay,
            ..base.clone()
        };
        let stay = kappa_comparison(&stay_cfg, &schedule, k.ranks).unwrap();
        let (a, b) = (&remove.rows[0], &stay.rows[0]);
        let (sa, sb) = (a.emp_std.unwrap(), b.emp_std.unwrap());
        let pooled = ((sa * sa + sb * sb) / 2.0).sqrt();
        let sigmas = (a.emp_mean - b.emp_mean).abs() / pooled;
        out.push(GateResult::new(
            "(c) remove vs stay",
            sigmas <= k.robust_sigmas,
            format!(
                "n = {}: {:.4} vs {:.4}, gap {sigmas:.2} pooled sigma",
                remove.n, a.emp_mean, b.emp_mean
            ),
        ));
        out
    });
}

#[test]
fn criterion_10_eigenvalue_decay() {
    run_criterion(10, "eigenvalue decay", Duration::from_secs(1), |g| {
        let d = &g.decay;
        let s = k_spectrum::<f64>(d.k_max).unwrap();
        let ratio = |k: usize| s.eigenvalues[k - 1] * (k * k) as f64 * std::f64::consts::PI.powi(2) / 8.0;
        let at = ratio(d.k_check);
        let seq: Vec<f64> = (d.k_check..=d.k_max).map(ratio).collect();
        vec![
            GateResult::new(
                format!("ratio at k = {}", d.k_check),
                (d.lower..=d.upper).contains(&at),
                format!("{at:.6} in [{}, {}]", d.lower, d.upper),
            ),
            GateResult::new(
                "monotone approach to 1",
                seq.windows(2).all(|w| w[0] < w[1]) && seq.iter().all(|&x| x <= 1.0),
                format!("k = {}: {:.6}", d.k_max, seq.last().unwrap()),
            ),
        ]
    });
}

#[test]
fn criterion_11_degree_power_law() {
    run_criterion(11, "degree power law", Duration::from_secs(300), |g| {
        let p = &g.power_law;
        let cfg = SimulationConfig::new(p.n, p.alpha, LeakSemantics::Remove, 11);
        let graph = simulate_units(&cfg, 0).unwrap();
        let fit = fit_degrees(
            &graph.degrees(),
            FitRange::MiddleDecades(p.decades),
            FitMethod::CcdfRegression,
        )
        .unwrap();
        let slope = fit.slope.unwrap();

        let zipf = Zipf::new(1e7, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let control: Vec<f64> = (0..p.n * 10).map(|_| zipf.sample(&mut rng)).collect();
        let zfit = fit_power_law(&control, FitRange::MiddleDecades(p.decades), FitMethod::CcdfRegression).unwrap();
        vec![
            GateResult::new(
                "CCDF slope",
                (p.slope_min..=p.slope_max).contains(&slope),
                format!(
                    "{slope:.3} over [{:.0}, {:.0}] ({} vertices)",
                    fit.range.0, fit.range.1, fit.samples
                ),
            ),
            GateResult::new(
                "Zipf control",
                (zfit.exponent - 2.0).abs() <= p.zipf_tol,
                format!("exponent {:.3} from {} samples", zfit.exponent, control.len()),
            ),
        ]
    });
}

#[test]
fn criterion_12_determinism() {
    run_criterion(12, "determinism", Duration::from_secs(60), |g| {
        let d = &g.determinism;
        let mut out = Vec::new();
        let commands = [
            (Command::Simulate, None),
            (
                Command::Spectrum {
                    kind: SpectralKind::Kappa,
                    solver: Solver::Top(10),
                    input: None,
                },
                Some(EpsSchedule::default()),
            ),
        ];
        for (command, schedule) in commands {
            let name = command.name();
            let dirs: Vec<_> = d.threads.iter().map(|_| tempfile::tempdir().unwrap()).collect();
            let mut manifests = Vec::new();
            for (dir, &threads) in dirs.iter().zip(&d.threads) {
                let spec = RunSpec {
                    command: command.clone(),
                    config: Some(SimulationConfig {
                        replicates: d.replicates,
                        threads,
                        ..SimulationConfig::new(d.n, d.alpha, LeakSemantics::Remove, 12)
                    }),
                    schedule,
                };
                manifests.push(execute(&spec, dir.path(), g).unwrap().manifest);
            }
            let replayed = tempfile::tempdir().unwrap();
            replay(&dirs[0].path().join(MANIFEST_FILE), replayed.path(), g).unwrap();
            let files = &manifests[0].outputs;
            let read = |dir: &std::path::Path, f: &str| std::fs::read(dir.join(f)).unwrap();
            let identical = files.iter().all(|f| {
                let reference = read(dirs[0].path(), f);
                dirs.iter().all(|d| read(d.path(), f) == reference) && read(replayed.path(), f) == reference
            });
            out.push(GateResult::new(
                format!("{name}: byte-identical outputs"),
                identical && manifests.iter().all(|m| &m.outputs == files),
                format!("{} files, threads {:?}, plus a replay", files.len(), d.threads),
            ));
        }
        out
    });
}
