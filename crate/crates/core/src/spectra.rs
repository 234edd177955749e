//! Empirical spectral measures and trace moments of charge-flow graphs.
//!
//! `μ` places an atom at `λ_i / n` for every eigenvalue of `A^{n,m}`; `κ`
//! places one at `ε λ_i^ε` for every eigenvalue of the matrix with ranks
//! `1..=⌈εn⌉` removed. Both are non-normalized: `n` atoms in total.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::LeakSemantics;
use crate::error::{Error, Result};
use crate::graph::{truncation_rank, ChargeFlowGraph};
use crate::linalg::{
    dot, symmetric_eigen, top_eigenvalues, DenseOptions, LanczosOptions, SparseSym, SymmetricOperator,
};
use crate::{format_real, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralKind {
    Mu,
    Kappa,
}

impl SpectralKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectralKind::Mu => "mu",
            SpectralKind::Kappa => "kappa",
        }
    }
}

impl fmt::Display for SpectralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectralKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(SpectralKind::Mu),
            "kappa" => Ok(SpectralKind::Kappa),
            other => Err(Error::domain(format!("unknown spectral kind '{other}' (mu|kappa)"))),
        }
    }
}

/// How many eigenvalues to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Full spectrum with the dense solver.
    Dense,
    /// Largest `k` by Lanczos on the sparse matrix.
    Top(usize),
}

/// Atoms of `μ` or `κ`, largest first.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure<T> {
    pub kind: SpectralKind,
    pub atoms: Vec<T>,
    pub n: usize,
    pub m: u64,
    pub eps: Option<f64>,
    pub semantics: LeakSemantics,
    /// False when only the top atoms were computed.
    pub complete: bool,
}

impl<T: Real> SpectralMeasure<T> {
    pub fn atom_sum(&self) -> T {
        self.atoms.iter().copied().sum()
    }

    /// Atoms with `|x| <= tol`.
    pub fn zero_atoms(&self, tol: T) -> usize {
        self.atoms.iter().filter(|x| x.abs() <= tol).count()
    }

    pub fn top(&self, k: usize) -> &[T] {
        &self.atoms[..k.min(self.atoms.len())]
    }
}

fn lanczos_options() -> LanczosOptions {
    LanczosOptions {
        tol: 1e-11,
        ..LanczosOptions::default()
    }
}

/// Eigenvalues of the principal block on ranks `first..=n`, descending.
fn block_eigenvalues<T: Real>(graph: &ChargeFlowGraph, first: usize, solver: Solver) -> Result<Vec<T>> {
    let dim = graph.n + 1 - first;
    if dim == 0 {
        return Ok(Vec::new());
    }
    let block = SparseSym::from_lower_triplets(
        dim,
        graph
            .entries()
            .iter()
            .filter(|(&(_, j), _)| j >= first)
            .map(|(&(i, j), &a)| (i - first, j - first, T::from_u64(a).expect("count representable"))),
    );
    match solver {
        Solver::Dense => Ok(symmetric_eigen(&block.to_dense(), false, &DenseOptions::default())?.values),
        Solver::Top(k) => {
            if k == 0 {
                return Err(Error::domain("top-k solver needs k >= 1"));
            }
            Ok(top_eigenvalues(&block, k.min(dim), &lanczos_options())?.values)
        }
    }
}

pub fn spectral_measure_mu<T: Real>(graph: &ChargeFlowGraph, solver: Solver) -> Result<SpectralMeasure<T>> {
    let scale = T::one() / T::from_count(graph.n);
    let atoms: Vec<T> = block_eigenvalues::<T>(graph, 1, solver)?
        .into_iter()
        .map(|x| x * scale)
        .collect();
    Ok(SpectralMeasure {
        kind: SpectralKind::Mu,
        complete: atoms.len() == graph.n,
        atoms,
        n: graph.n,
        m: graph.m,
        eps: None,
        semantics: graph.semantics,
    })
}

/// Truncated ranks contribute exact zero atoms; the remaining block is
/// solved on its own.
pub fn spectral_measure_kappa<T: Real>(
    graph: &ChargeFlowGraph,
    eps: f64,
    solver: Solver,
) -> Result<SpectralMeasure<T>> {
    let r = truncation_rank(graph.n, eps)?;
    let scale = T::lit(eps);
    let mut atoms: Vec<T> = block_eigenvalues::<T>(graph, r + 1, solver)?
        .into_iter()
        .map(|x| x * scale)
        .collect();
    let complete = matches!(solver, Solver::Dense) || atoms.len() == graph.n - r;
    if complete {
        atoms.extend(std::iter::repeat_n(T::zero(), r));
        atoms.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    } else {
        // Only the top of the block is known; zeros belong above any
        // negative atoms.
        let pos = atoms.iter().position(|x| *x < T::zero()).unwrap_or(atoms.len());
        atoms.truncate(pos);
    }
    Ok(SpectralMeasure {
        kind: SpectralKind::Kappa,
        atoms,
        n: graph.n,
        m: graph.m,
        eps: Some(eps),
        semantics: graph.semantics,
        complete,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentEstimator {
    /// From all eigenvalues, or closed sums of entries for orders 1 and 2.
    Exact,
    /// Randomized trace with Rademacher probes.
    Hutchinson { probes: usize, seed: u64 },
}

pub const DEFAULT_PROBES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate<T> {
    pub order: u32,
    pub value: T,
    /// Standard error of the mean over probes (randomized estimator only).
    pub std_error: Option<T>,
    pub estimator: MomentEstimator,
}

pub enum MomentSource<'a, T> {
    Measure(&'a SpectralMeasure<T>),
    /// Moments of `A / n`.
    Graph(&'a ChargeFlowGraph),
}

/// `M_{k,n} = Σ atoms^k = tr((A/n)^k)`.
pub fn trace_moment<T: Real>(
    source: MomentSource<'_, T>,
    k: u32,
    estimator: MomentEstimator,
) -> Result<MomentEstimate<T>> {
    if k == 0 {
        return Err(Error::domain("moment order starts at 1"));
    }
    match (source, estimator) {
        (MomentSource::Measure(mu), MomentEstimator::Exact) => {
            if !mu.complete {
                return Err(Error::domain("exact moments need every atom of the measure"));
            }
            Ok(MomentEstimate {
                order: k,
                value: mu.atoms.iter().map(|x| x.powi(k as i32)).sum(),
                std_error: None,
                estimator,
            })
        }
        (MomentSource::Measure(_), MomentEstimator::Hutchinson { .. }) => {
            Err(Error::domain("randomized moments need the graph, not the measure"))
        }
        (MomentSource::Graph(g), MomentEstimator::Exact) => {
            let n = T::from_count(g.n);
            let value = match k {
                1 => T::from_u64(g.trace()).expect("count") / n,
                2 => {
                    let sq: T = g
                        .entries()
                        .iter()
                        .map(|(&(i, j), &a)| {
                            let a = T::from_u64(a).expect("count");
                            if i == j {
                                a * a
                            } else {
                                T::lit(2.0) * a * a
                            }
                        })
                        .sum();
                    sq / (n * n)
                }
                _ => {
                    let mu = spectral_measure_mu::<T>(g, Solver::Dense)?;
                    return trace_moment(MomentSource::Measure(&mu), k, MomentEstimator::Exact);
                }
            };
            Ok(MomentEstimate {
                order: k,
                value,
                std_error: None,
                estimator,
            })
        }
        (MomentSource::Graph(g), MomentEstimator::Hutchinson { probes, seed }) => hutchinson(g, k, probes, seed),
    }
}

fn hutchinson<T: Real>(g: &ChargeFlowGraph, k: u32, probes: usize, seed: u64) -> Result<MomentEstimate<T>> {
    if probes < 2 {
        return Err(Error::domain("randomized trace needs at least 2 probes"));
    }
    let a = g.to_sparse::<T>();
    let inv_n = T::one() / T::from_count(g.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(probes);
    let mut y = vec![T::zero(); g.n];
    let mut tmp = vec![T::zero(); g.n];
    for _ in 0..probes {
        let z: Vec<T> = (0..g.n)
            .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
            .collect();
        y.copy_from_slice(&z);
        for _ in 0..k {
            a.apply(&y, &mut tmp);
            for (yi, &t) in y.iter_mut().zip(&tmp) {
                *yi = t * inv_n;
            }
        }
        samples.push(dot(&z, &y));
    }
    let p = T::from_count(probes);
    let mean = samples.iter().copied().sum::<T>() / p;
    let var = samples.iter().map(|&s| (s - mean) * (s - mean)).sum::<T>() / (p - T::one());
    Ok(MomentEstimate {
        order: k,
        value: mean,
        std_error: Some((var / p).sqrt()),
        estimator: MomentEstimator::Hutchinson { probes, seed },
    })
}

pub const SPECTRA_HEADER: [&str; 8] = ["kind", "n", "alpha", "eps", "semantics", "replicate", "rank", "atom"];

/// Writes `kind,n,alpha,eps,semantics,replicate,rank,atom`; ranks are 1-based
/// and `eps` is empty for `μ`.
pub fn write_spectra_csv<T: Real, W: Write>(w: W, alpha: f64, measures: &[(u64, &SpectralMeasure<T>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SPECTRA_HEADER)?;
    for (replicate, mu) in measures {
        let eps = mu.eps.map(format_real).unwrap_or_default();
        for (rank, atom) in mu.atoms.iter().enumerate() {
            out.write_record([
                mu.kind.as_str().to_string(),
                mu.n.to_string(),
                format_real(alpha),
                eps.clone(),
                mu.semantics.to_string(),
                replicate.to_string(),
                (rank + 1).to_string(),
                format_real(atom.to_f64_lossy()),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
