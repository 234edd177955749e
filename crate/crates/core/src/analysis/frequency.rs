use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    replicate_key, sample_trajectory, sample_trajectory_poisson, unit_stream, Engine, LeakSemantics, Start,
};
use crate::error::{Error, Result};
use crate::oracle::{exact_edge_probability, EdgeProbabilities};

pub const MIN_SAMPLES: u64 = 10_000;

const PATHS_PER_CHUNK: u64 = 16_384;

/// Visit and edge counts from independent single-unit paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub n: usize,
    pub semantics: LeakSemantics,
    pub samples: u64,
    /// `visits[U - 1]`: paths through `U`.
    pub visits: Vec<u64>,
    /// Traversal counts for the probed pairs `(i, j)`, `i >= j`; the
    /// diagonal counts recorded terminations.
    pub edges: BTreeMap<(usize, usize), u64>,
    /// Histogram of path lengths (distinct vertices visited).
    pub lengths: BTreeMap<usize, u64>,
}

/// Samples `samples` uniform-start paths on per-path streams of `seed`.
pub fn sample_paths(
    n: usize,
    semantics: LeakSemantics,
    engine: Engine,
    samples: u64,
    seed: u64,
    edge_probes: &[(usize, usize)],
) -> Result<PathSample> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    if engine == Engine::Poisson && semantics != LeakSemantics::Stay {
        return Err(Error::domain("the poisson sampler realizes stay semantics only"));
    }
    if engine == Engine::Global {
        return Err(Error::domain("single-path sampling has no global engine"));
    }
    let probes: Vec<(usize, usize)> = edge_probes.iter().map(|&(i, j)| (i.max(j), i.min(j))).collect();
    if probes.iter().any(|&(i, j)| j == 0 || i > n) {
        return Err(Error::domain("edge probe outside 1..=n"));
    }
    let key = replicate_key(seed, 0);
    let empty = || PathSample {
        n,
        semantics,
        samples: 0,
        visits: vec![0; n],
        edges: probes.iter().map(|&p| (p, 0)).collect(),
        lengths: BTreeMap::new(),
    };
    let chunks = samples.div_ceil(PATHS_PER_CHUNK);
    let out = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = empty();
            for s in c * PATHS_PER_CHUNK..((c + 1) * PATHS_PER_CHUNK).min(samples) {
                let mut rng = unit_stream(key, s);
                let t = match engine {
                    Engine::Poisson => sample_trajectory_poisson(n, &mut rng),
                    _ => sample_trajectory(n, Start::Uniform, semantics, &mut rng),
                }
                .expect("validated");
                acc.samples += 1;
                for &v in &t.visits {
                    acc.visits[v - 1] += 1;
                }
                for (from, to) in t.moves() {
                    if let Some(c) = acc.edges.get_mut(&(from, to)) {
                        *c += 1;
                    }
                }
                if semantics.records_leak() {
                    if let Some(c) = acc.edges.get_mut(&(t.terminal, t.terminal)) {
                        *c += 1;
                    }
                }
                *acc.lengths.entry(t.len()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(empty, |mut a, b| {
            a.samples += b.samples;
            for (x, y) in a.visits.iter_mut().zip(&b.visits) {
                *x += y;
            }
            for (k, v) in b.edges {
                *a.edges.entry(k).or_insert(0) += v;
            }
            for (k, v) in b.lengths {
                *a.lengths.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(out)
}

/// Empirical frequency against an exact probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub i: usize,
    pub j: usize,
    pub count: u64,
    pub frequency: f64,
    pub oracle: f64,
    /// `(frequency - oracle) / sqrt(oracle (1 - oracle) / samples)`.
    pub z: f64,
}

fn z_score(count: u64, samples: u64, p: f64) -> (f64, f64) {
    let f = count as f64 / samples as f64;
    let var = p * (1.0 - p) / samples as f64;
    let z = if var > 0.0 {
        (f - p) / var.sqrt()
    } else if f == p {
        0.0
    } else {
        f64::INFINITY.copysign(f - p)
    };
    (f, z)
}

impl PathSample {
    /// Per-vertex rows against `oracle.visit`; `i = j = U`.
    pub fn visit_rows(&self, oracle: &EdgeProbabilities<f64>) -> Vec<FrequencyRow> {
        (1..=self.n)
            .map(|u| {
                let p = oracle.visit[u - 1];
                let (frequency, z) = z_score(self.visits[u - 1], self.samples, p);
                FrequencyRow {
                    i: u,
                    j: u,
                    count: self.visits[u - 1],
                    frequency,
                    oracle: p,
                    z,
                }
            })
            .collect()
    }

    /// Rows for the probed pairs against `oracle.edge`.
    pub fn edge_rows(&self, oracle: &EdgeProbabilities<f64>) -> Vec<FrequencyRow> {
        self.edges
            .iter()
            .map(|(&(i, j), &count)| {
                let p = oracle.edge(i, j);
                let (frequency, z) = z_score(count, self.samples, p);
                FrequencyRow {
                    i,
                    j,
                    count,
                    frequency,
                    oracle: p,
                    z,
                }
            })
            .collect()
    }
}

/// Visit frequencies of paths simulated under `sample_semantics` scored
/// against the exact law of `oracle_semantics`. Mismatched semantics are
/// allowed on purpose: the test must tell them apart.
pub fn visit_frequency_test(
    n: usize,
    sample_semantics: LeakSemantics,
    oracle_semantics: LeakSemantics,
    samples: u64,
    seed: u64,
) -> Result<Vec<FrequencyRow>> {
    if samples < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "visit frequency test needs at least {MIN_SAMPLES} samples"
        )));
    }
    let sample = sample_paths(n, sample_semantics, Engine::Unitwise, samples, seed, &[])?;
    let oracle = exact_edge_probability::<f64>(n, oracle_semantics)?;
    Ok(sample.visit_rows(&oracle))
}
