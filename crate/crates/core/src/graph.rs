//! Charge-flow graphs: symmetric integer multiplicity matrices.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{LeakSemantics, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{MaxKernel, SparseSym, SymMatrix};
use crate::oracle::exact_edge_probability;
use crate::Real;

/// Sparse symmetric multiplicity matrix `A^{n,m}` with 1-based ranks.
///
/// Each unordered pair is stored once under `(max, min)`; the diagonal
/// holds recorded self-pick terminations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChargeFlowGraph {
    pub n: usize,
    pub m: u64,
    pub semantics: LeakSemantics,
    entries: BTreeMap<(usize, usize), u64>,
}

impl ChargeFlowGraph {
    pub fn new(n: usize, m: u64, semantics: LeakSemantics) -> Self {
        ChargeFlowGraph {
            n,
            m,
            semantics,
            entries: BTreeMap::new(),
        }
    }

    /// Adds `count` to `A_ij = A_ji`. Zero counts are not stored.
    pub fn add(&mut self, i: usize, j: usize, count: u64) -> Result<()> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::domain(format!("entry ({i}, {j}) outside 1..={}", self.n)));
        }
        if count > 0 {
            *self.entries.entry((i.max(j), i.min(j))).or_insert(0) += count;
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries.get(&(i.max(j), i.min(j))).copied().unwrap_or(0)
    }

    /// Stored `(i, j) → multiplicity` with `i >= j`, in row-major order.
    pub fn entries(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn trace(&self) -> u64 {
        self.entries.iter().filter(|((i, j), _)| i == j).map(|(_, &a)| a).sum()
    }

    /// `Σ_{i>j} A_ij`: the number of downward moves.
    pub fn off_diagonal_mass(&self) -> u64 {
        self.entries.iter().filter(|((i, j), _)| i != j).map(|(_, &a)| a).sum()
    }

    /// Zeroes rows and columns `1..=⌈eps·n⌉`.
    pub fn truncate(&self, eps: f64) -> Result<Self> {
        Ok(self.truncate_rank(truncation_rank(self.n, eps)?))
    }

    /// Zeroes rows and columns `1..=r`.
    pub fn truncate_rank(&self, r: usize) -> Self {
        ChargeFlowGraph {
            n: self.n,
            m: self.m,
            semantics: self.semantics,
            entries: self
                .entries
                .iter()
                .filter(|(&(_, j), _)| j > r)
                .map(|(&k, &v)| (k, v))
                .collect(),
        }
    }

    pub fn degrees(&self) -> DegreeSummary {
        let mut out_degree = vec![0u64; self.n];
        let mut in_degree = vec![0u64; self.n];
        for (&(i, j), &a) in &self.entries {
            out_degree[i - 1] += a;
            in_degree[j - 1] += a;
        }
        let total = out_degree.iter().zip(&in_degree).map(|(a, b)| a + b).collect();
        DegreeSummary {
            out_degree,
            in_degree,
            total,
        }
    }

    pub fn to_dense<T: Real>(&self) -> SymMatrix<T> {
        let mut a = SymMatrix::zeros(self.n);
        for (&(i, j), &v) in &self.entries {
            a.set_sym(i - 1, j - 1, T::from_u64(v).expect("count representable"));
        }
        a
    }

    pub fn to_sparse<T: Real>(&self) -> SparseSym<T> {
        SparseSym::from_lower_triplets(
            self.n,
            self.entries
                .iter()
                .map(|(&(i, j), &v)| (i - 1, j - 1, T::from_u64(v).expect("count representable"))),
        )
    }

    /// Writes `i,j,multiplicity` rows with `i >= j`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "multiplicity"])?;
        for (&(i, j), &a) in &self.entries {
            out.write_record([i.to_string(), j.to_string(), a.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, meta: &GraphMeta) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers()?.clone();
        if headers != vec!["i", "j", "multiplicity"] {
            return Err(Error::Format(format!("graph CSV header is {headers:?}")));
        }
        let mut g = ChargeFlowGraph::new(meta.n, meta.m, meta.semantics);
        for row in reader.deserialize::<(usize, usize, u64)>() {
            let (i, j, a) = row?;
            if i < j {
                return Err(Error::Format(format!("graph CSV row ({i}, {j}) is above the diagonal")));
            }
            g.add(i, j, a)?;
        }
        Ok(g)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str, meta: &GraphMeta) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?;
        let mut side = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
        serde_json::to_writer_pretty(&mut side, meta)?;
        side.write_all(b"\n")?;
        side.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<(Self, GraphMeta)> {
        let meta: GraphMeta = serde_json::from_reader(BufReader::new(File::open(dir.join(format!("{stem}.json")))?))?;
        let g = Self::read_csv(BufReader::new(File::open(dir.join(format!("{stem}.csv")))?), &meta)?;
        Ok((g, meta))
    }
}

/// `⌈eps·n⌉` for `0 < eps < 1`.
pub fn truncation_rank(n: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(((eps * n as f64).ceil() as usize).min(n))
}

/// JSON sidecar for a graph CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub n: usize,
    pub m: u64,
    pub alpha: f64,
    pub semantics: LeakSemantics,
    pub seed: u64,
}

/// Edge counts gathered from trajectories, mergeable in any order.
#[derive(Clone, Debug, Default)]
pub struct EdgeCounts(HashMap<(usize, usize), u64>);

impl EdgeCounts {
    pub fn add(&mut self, i: usize, j: usize, count: u64) {
        *self.0.entry((i.max(j), i.min(j))).or_insert(0) += count;
    }

    pub fn add_trajectory(&mut self, t: &Trajectory, semantics: LeakSemantics) {
        for (from, to) in t.moves() {
            self.add(from, to, 1);
        }
        if semantics.records_leak() {
            self.add(t.terminal, t.terminal, 1);
        }
    }

    pub fn merge(mut self, other: EdgeCounts) -> EdgeCounts {
        let (mut big, small) = if self.0.len() >= other.0.len() {
            (std::mem::take(&mut self.0), other.0)
        } else {
            (other.0, std::mem::take(&mut self.0))
        };
        for (k, v) in small {
            *big.entry(k).or_insert(0) += v;
        }
        EdgeCounts(big)
    }

    pub fn into_graph(self, n: usize, m: u64, semantics: LeakSemantics) -> ChargeFlowGraph {
        ChargeFlowGraph {
            n,
            m,
            semantics,
            entries: self.0.into_iter().filter(|&(_, v)| v > 0).collect(),
        }
    }
}

/// Per-vertex degrees, indexed by rank - 1. A diagonal event counts once
/// toward both the out- and the in-degree of its vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSummary {
    /// `Σ_{j <= i} A_ij`.
    pub out_degree: Vec<u64>,
    /// `Σ_{i >= j} A_ij`.
    pub in_degree: Vec<u64>,
    pub total: Vec<u64>,
}

impl DegreeSummary {
    pub fn events(&self) -> u64 {
        self.out_degree.iter().sum()
    }

    /// Writes `vertex,out_degree,in_degree,total_degree`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["vertex", "out_degree", "in_degree", "total_degree"])?;
        for v in 0..self.total.len() {
            out.write_record([
                (v + 1).to_string(),
                self.out_degree[v].to_string(),
                self.in_degree[v].to_string(),
                self.total[v].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `m / (i∨j)^2`, diagonal included.
    Asymptotic,
    /// `m` times the exact edge law with terminating self-picks.
    ExactRemove,
    /// `m` times the exact edge law with no-op self-picks.
    ExactStay,
}

impl KernelKind {
    /// The exact kernel matching a simulation semantics.
    pub fn exact_for(semantics: LeakSemantics) -> Self {
        if semantics.records_leak() {
            KernelKind::ExactRemove
        } else {
            KernelKind::ExactStay
        }
    }
}

/// `E A^{n,m}` as an O(n) structured operator.
pub fn expected_adjacency_operator<T: Real>(n: usize, m: u64, kind: KernelKind) -> Result<MaxKernel<T>> {
    if n == 0 || m == 0 {
        return Err(Error::domain("expected adjacency needs n >= 1 and m >= 1"));
    }
    let mf = T::from_u64(m).expect("count representable");
    Ok(match kind {
        KernelKind::Asymptotic => MaxKernel::uniform(
            (1..=n)
                .map(|u| {
                    let u = T::from_count(u);
                    mf / (u * u)
                })
                .collect(),
        ),
        KernelKind::ExactRemove => exact_edge_probability::<T>(n, LeakSemantics::Remove)?.to_kernel(mf),
        KernelKind::ExactStay => exact_edge_probability::<T>(n, LeakSemantics::Stay)?.to_kernel(mf),
    })
}

/// Largest dimension for which [`expected_adjacency`] builds a dense matrix.
pub const EXPECTED_DENSE_MAX: usize = 5000;

/// `E A^{n,m}` as a dense matrix.
pub fn expected_adjacency<T: Real>(n: usize, m: u64, kind: KernelKind) -> Result<SymMatrix<T>> {
    if n > EXPECTED_DENSE_MAX {
        return Err(Error::domain(format!(
            "dense expected adjacency limited to n <= {EXPECTED_DENSE_MAX}, got {n}; use the operator form"
        )));
    }
    Ok(expected_adjacency_operator(n, m, kind)?.to_dense())
}
