//! Winner-take-all charge dynamics.
//!
//! `m = ⌊αn⌋` units start on uniformly chosen vertices `1..=n`. Each
//! effective event moves one unit from its vertex `v` to a uniform target in
//! `1..v`, or applies the self-pick rule when the target is `v` itself.
//! Picks that would move charge upward, or that hit an empty vertex, change
//! nothing, so a single unit's path can be sampled on its own.
//!
//! Three engines produce the same graph law:
//! - [`Engine::Unitwise`] samples units independently on per-unit random
//!   streams and merges their edge counts,
//! - [`Engine::Global`] runs the literal pick-two-vertices loop,
//! - [`Engine::Poisson`] reads each path off a unit-rate Poisson process
//!   (no-op self-picks only).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ChargeFlowGraph, EdgeCounts};

/// What happens when a unit picks its own vertex as target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakSemantics {
    /// The unit leaves the system; the event is recorded on the diagonal.
    #[default]
    Remove,
    /// No-op above vertex 1; at vertex 1 the unit ends, unrecorded.
    Stay,
    /// The unit stops where it is; same law and same records as `Remove`.
    Freeze,
}

impl LeakSemantics {
    pub const ALL: [LeakSemantics; 3] = [LeakSemantics::Remove, LeakSemantics::Stay, LeakSemantics::Freeze];

    /// Whether a self-pick ends the unit and adds a diagonal event.
    pub fn records_leak(self) -> bool {
        !matches!(self, LeakSemantics::Stay)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LeakSemantics::Remove => "remove",
            LeakSemantics::Stay => "stay",
            LeakSemantics::Freeze => "freeze",
        }
    }
}

impl fmt::Display for LeakSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LeakSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remove" => Ok(LeakSemantics::Remove),
            "stay" => Ok(LeakSemantics::Stay),
            "freeze" => Ok(LeakSemantics::Freeze),
            other => Err(Error::domain(format!(
                "unknown semantics '{other}' (remove|stay|freeze)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Unitwise,
    Global,
    Poisson,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Unitwise => "unitwise",
            Engine::Global => "global",
            Engine::Poisson => "poisson",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unitwise" => Ok(Engine::Unitwise),
            "global" => Ok(Engine::Global),
            "poisson" => Ok(Engine::Poisson),
            other => Err(Error::domain(format!(
                "unknown engine '{other}' (unitwise|global|poisson)"
            ))),
        }
    }
}

/// Distinct vertices visited by one unit, highest rank first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trajectory {
    pub visits: Vec<usize>,
    pub terminal: usize,
}

impl Trajectory {
    /// Downward moves `(from, to)` in order.
    pub fn moves(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.visits.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn visits_vertex(&self, u: usize) -> bool {
        // Visits are strictly decreasing.
        self.visits.binary_search_by(|v| u.cmp(v)).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Vertex(usize),
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub alpha: f64,
    pub semantics: LeakSemantics,
    pub seed: u64,
    pub engine: Engine,
    pub replicates: usize,
    pub threads: usize,
}

impl SimulationConfig {
    pub fn new(n: usize, alpha: f64, semantics: LeakSemantics, seed: u64) -> Self {
        SimulationConfig {
            n,
            alpha,
            semantics,
            seed,
            engine: Engine::Unitwise,
            replicates: 1,
            threads: 1,
        }
    }

    /// `⌊αn⌋`.
    pub fn m(&self) -> u64 {
        (self.alpha * self.n as f64).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n must be >= 1"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.m() == 0 {
            return Err(Error::domain(format!(
                "floor(alpha * n) = 0 for alpha {} and n {}",
                self.alpha, self.n
            )));
        }
        if self.replicates == 0 || self.threads == 0 {
            return Err(Error::domain("replicates and threads must be >= 1"));
        }
        if self.engine == Engine::Poisson && self.semantics != LeakSemantics::Stay {
            return Err(Error::domain(format!(
                "the poisson engine only realizes stay semantics, not {}",
                self.semantics
            )));
        }
        Ok(())
    }
}

/// Key for replicate `replicate` of master seed `seed`. Unit streams and the
/// global engine's stream are all derived from it.
pub fn replicate_key(seed: u64, replicate: u64) -> [u8; 32] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng.random()
}

/// Independent stream for unit `unit` under a replicate key.
pub fn unit_stream(key: [u8; 32], unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(unit);
    rng
}

// Unit indices never reach this value, so the global loop's stream is disjoint.
const GLOBAL_STREAM: u64 = u64::MAX;

/// Samples the distinct-visit path of one unit.
pub fn sample_trajectory<R: Rng + ?Sized>(
    n: usize,
    start: Start,
    semantics: LeakSemantics,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut v = match start {
        Start::Vertex(v) if (1..=n).contains(&v) => v,
        Start::Vertex(v) => return Err(Error::domain(format!("start vertex {v} outside 1..={n}"))),
        Start::Uniform if n == 0 => return Err(Error::domain("n must be >= 1")),
        Start::Uniform => rng.random_range(1..=n),
    };
    let mut visits = vec![v];
    loop {
        let next = rng.random_range(1..=v);
        if next < v {
            visits.push(next);
            v = next;
        } else if semantics.records_leak() || v == 1 {
            break;
        }
    }
    Ok(Trajectory { visits, terminal: v })
}

/// Path read off a unit-rate Poisson process: the point at `η` sits on
/// vertex `⌈n e^{-η}⌉`, and the visited set is the set of vertices whose
/// interval holds at least one point. Law equals the `stay` chain from a
/// uniform start.
pub fn sample_trajectory_poisson<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let nf = n as f64;
    let mut eta = 0.0f64;
    let mut visits = Vec::new();
    let mut last = usize::MAX;
    while last > 1 {
        eta += rng.sample::<f64, _>(Exp1);
        let v = poisson_vertex(nf, eta);
        if v < last {
            visits.push(v);
            last = v;
        }
    }
    Ok(Trajectory { visits, terminal: 1 })
}

/// Variant that rejects any realization placing two points on one vertex
/// above 1, instead of collapsing them. Its visit law is
/// `P(U) = μ/(1+μ)` with `μ = log(U/(U-1))`, not `1/U`.
pub fn sample_trajectory_poisson_conditioned<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let nf = n as f64;
    'draw: loop {
        let mut eta = 0.0f64;
        let mut visits = Vec::new();
        let mut last = usize::MAX;
        while last > 1 {
            eta += rng.sample::<f64, _>(Exp1);
            let v = poisson_vertex(nf, eta);
            if v == last && v > 1 {
                continue 'draw;
            }
            if v < last {
                visits.push(v);
                last = v;
            }
        }
        return Ok(Trajectory { visits, terminal: 1 });
    }
}

fn poisson_vertex(n: f64, eta: f64) -> usize {
    let x = (n * (-eta).exp()).ceil();
    if x < 1.0 {
        1
    } else {
        (x as usize).min(n as usize)
    }
}

/// Suffix of `traj` inside `1..=n_small`, or `None` if the unit never
/// enters it (possible only when it leaked above `n_small`).
pub fn restrict_trajectory(traj: &Trajectory, n_small: usize) -> Option<Trajectory> {
    let first = traj.visits.iter().position(|&v| v <= n_small)?;
    Some(Trajectory {
        visits: traj.visits[first..].to_vec(),
        terminal: traj.terminal,
    })
}

const UNITS_PER_CHUNK: u64 = 4096;

fn draw_unit(n: usize, semantics: LeakSemantics, engine: Engine, rng: &mut ChaCha8Rng) -> Trajectory {
    let t = match engine {
        Engine::Poisson => sample_trajectory_poisson(n, rng),
        _ => sample_trajectory(n, Start::Uniform, semantics, rng),
    };
    t.expect("validated configuration")
}

/// Unitwise engine for one replicate. Units are split into fixed chunks
/// sampled in parallel on the current rayon pool; counts merge by integer
/// addition, so the result is independent of the number of threads.
pub fn simulate_units(config: &SimulationConfig, replicate: u64) -> Result<ChargeFlowGraph> {
    config.validate()?;
    let key = replicate_key(config.seed, replicate);
    let m = config.m();
    let chunks = m.div_ceil(UNITS_PER_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = EdgeCounts::default();
            for unit in c * UNITS_PER_CHUNK..((c + 1) * UNITS_PER_CHUNK).min(m) {
                let mut rng = unit_stream(key, unit);
                local.add_trajectory(
                    &draw_unit(config.n, config.semantics, config.engine, &mut rng),
                    config.semantics,
                );
            }
            local
        })
        .reduce(EdgeCounts::default, EdgeCounts::merge);
    Ok(counts.into_graph(config.n, m, config.semantics))
}

#[derive(Clone, Debug)]
pub struct GlobalRun {
    pub graph: ChargeFlowGraph,
    /// Transfers plus terminations.
    pub effective_events: u64,
    /// All vertex-pair draws, including ones that changed nothing.
    pub steps: u64,
}

/// Default safety cap on global-loop draws: far above the expected
/// `m (log n + 1) n^2` for any configuration that terminates.
pub fn default_step_cap(n: usize, m: u64) -> u64 {
    let n = n as u64;
    let per_unit = (n as f64).ln().ceil() as u64 + 1;
    n.saturating_mul(n)
        .saturating_mul(m.saturating_add(1))
        .saturating_mul(per_unit)
        .saturating_mul(64)
        .saturating_add(10_000)
}

/// Literal event loop. Single-threaded by construction.
pub fn simulate_global(config: &SimulationConfig, replicate: u64, step_cap: u64) -> Result<GlobalRun> {
    config.validate()?;
    let n = config.n;
    let m = config.m();
    let mut rng = unit_stream(replicate_key(config.seed, replicate), GLOBAL_STREAM);
    // Active unit ids per vertex; the lowest id moves first.
    let mut at: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); n + 1];
    for unit in 0..m {
        at[rng.random_range(1..=n)].insert(unit);
    }
    let mut active = m;
    let mut counts = EdgeCounts::default();
    let mut effective = 0u64;
    let mut steps = 0u64;
    while active > 0 {
        if steps == step_cap {
            return Err(Error::numeric(
                format!("global engine hit the step cap with {active} of {m} units still active"),
                steps as usize,
            ));
        }
        steps += 1;
        let i = rng.random_range(1..=n);
        let j = rng.random_range(1..=n);
        if j > i || at[i].is_empty() {
            continue;
        }
        if j < i {
            let unit = at[i].pop_first().expect("nonempty");
            at[j].insert(unit);
            counts.add(i, j, 1);
            effective += 1;
        } else if config.semantics.records_leak() {
            at[i].pop_first();
            counts.add(i, i, 1);
            active -= 1;
            effective += 1;
        } else if i == 1 {
            at[1].pop_first();
            active -= 1;
            effective += 1;
        }
    }
    Ok(GlobalRun {
        graph: counts.into_graph(n, m, config.semantics),
        effective_events: effective,
        steps,
    })
}

/// Dispatches on `config.engine`, using the current rayon pool.
pub fn simulate(config: &SimulationConfig, replicate: u64) -> Result<ChargeFlowGraph> {
    match config.engine {
        Engine::Global => {
            config.validate()?;
            let cap = default_step_cap(config.n, config.m());
            Ok(simulate_global(config, replicate, cap)?.graph)
        }
        Engine::Unitwise | Engine::Poisson => simulate_units(config, replicate),
    }
}

/// Graphs for every `n` in `n_list` from one evolution at the largest size.
///
/// The first `⌊α n_i⌋` unit paths are cut to their part inside `1..=n_i`;
/// a unit that leaks above `n_i` is dropped. The last graph equals
/// [`simulate_units`] for the same seed and replicate.
pub fn coupled_family(
    n_list: &[usize],
    alpha: f64,
    semantics: LeakSemantics,
    seed: u64,
    replicate: u64,
) -> Result<Vec<ChargeFlowGraph>> {
    if n_list.is_empty() {
        return Err(Error::domain("coupled family needs at least one size"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("coupled family sizes must be strictly ascending"));
    }
    let largest = SimulationConfig::new(*n_list.last().expect("nonempty"), alpha, semantics, seed);
    largest.validate()?;
    for &n in n_list {
        SimulationConfig::new(n, alpha, semantics, seed).validate()?;
    }
    let key = replicate_key(seed, replicate);
    let m_big = largest.m();
    let paths: Vec<Trajectory> = (0..m_big)
        .into_par_iter()
        .map(|unit| draw_unit(largest.n, semantics, Engine::Unitwise, &mut unit_stream(key, unit)))
        .collect();
    Ok(n_list
        .iter()
        .map(|&n| {
            let m = (alpha * n as f64).floor() as u64;
            let mut counts = EdgeCounts::default();
            for t in &paths[..m as usize] {
                if let Some(r) = restrict_trajectory(t, n) {
                    counts.add_trajectory(&r, semantics);
                }
            }
            counts.into_graph(n, m, semantics)
        })
        .collect())
}

/// Runs `f` on a rayon pool with `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn start_at_one_is_forced() {
        for sem in LeakSemantics::ALL {
            let t = sample_trajectory(5, Start::Vertex(1), sem, &mut rng(1)).unwrap();
            assert_eq!(t.visits, vec![1]);
            assert_eq!(t.terminal, 1);
        }
    }

    #[test]
    fn bad_start_rejected() {
        assert!(sample_trajectory(5, Start::Vertex(6), LeakSemantics::Remove, &mut rng(1)).is_err());
        assert!(sample_trajectory(5, Start::Vertex(0), LeakSemantics::Remove, &mut rng(1)).is_err());
    }

    #[test]
    fn two_vertex_split() {
        let mut r = rng(7);
        let trials = 20_000;
        let leaks = (0..trials)
            .filter(|_| {
                sample_trajectory(2, Start::Vertex(2), LeakSemantics::Remove, &mut r)
                    .unwrap()
                    .visits
                    == [2]
            })
            .count();
        let p = leaks as f64 / trials as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn stay_always_reaches_one() {
        let mut r = rng(3);
        for _ in 0..200 {
            let t = sample_trajectory(50, Start::Uniform, LeakSemantics::Stay, &mut r).unwrap();
            assert_eq!(t.terminal, 1);
            assert_eq!(*t.visits.last().unwrap(), 1);
            let p = sample_trajectory_poisson(50, &mut r).unwrap();
            assert_eq!(*p.visits.last().unwrap(), 1);
            assert!(p.visits.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn restriction_examples() {
        let t = Trajectory {
            visits: vec![9, 4, 2],
            terminal: 2,
        };
        assert_eq!(restrict_trajectory(&t, 5).unwrap().visits, vec![4, 2]);
        assert_eq!(restrict_trajectory(&t, 10).unwrap(), t);
        let leak = Trajectory {
            visits: vec![9],
            terminal: 9,
        };
        assert!(restrict_trajectory(&leak, 5).is_none());
    }

    #[test]
    fn single_vertex_graph() {
        let cfg = SimulationConfig::new(1, 3.0, LeakSemantics::Remove, 11);
        let g = simulate_units(&cfg, 0).unwrap();
        assert_eq!(g.get(1, 1), 3);
        let run = simulate_global(&SimulationConfig::new(1, 2.0, LeakSemantics::Remove, 11), 0, 1000).unwrap();
        assert_eq!(run.graph.get(1, 1), 2);
        assert_eq!(run.effective_events, 2);
    }

    #[test]
    fn freeze_matches_remove_bit_for_bit() {
        let mut cfg = SimulationConfig::new(300, 1.0, LeakSemantics::Remove, 5);
        let a = simulate_units(&cfg, 2).unwrap();
        cfg.semantics = LeakSemantics::Freeze;
        let b = simulate_units(&cfg, 2).unwrap();
        assert_eq!(a.entries(), b.entries());
        cfg.engine = Engine::Global;
        let c = simulate(&cfg, 2).unwrap();
        cfg.semantics = LeakSemantics::Remove;
        let d = simulate(&cfg, 2).unwrap();
        assert_eq!(c.entries(), d.entries());
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut cfg = SimulationConfig::new(2000, 5.0, LeakSemantics::Remove, 99);
        let one = with_threads(1, || simulate_units(&cfg, 0)).unwrap().unwrap();
        cfg.threads = 4;
        let four = with_threads(4, || simulate_units(&cfg, 0)).unwrap().unwrap();
        assert_eq!(one.entries(), four.entries());
    }

    #[test]
    fn poisson_engine_needs_stay() {
        let mut cfg = SimulationConfig::new(10, 1.0, LeakSemantics::Remove, 1);
        cfg.engine = Engine::Poisson;
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
        cfg.semantics = LeakSemantics::Stay;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn invalid_configs() {
        assert!(SimulationConfig::new(0, 1.0, LeakSemantics::Remove, 0)
            .validate()
            .is_err());
        assert!(SimulationConfig::new(10, 0.05, LeakSemantics::Remove, 0)
            .validate()
            .is_err());
        assert!(SimulationConfig::new(10, f64::NAN, LeakSemantics::Remove, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn coupled_family_single_size_is_plain_simulation() {
        let fam = coupled_family(&[400], 1.0, LeakSemantics::Remove, 8, 3).unwrap();
        let direct = simulate_units(&SimulationConfig::new(400, 1.0, LeakSemantics::Remove, 8), 3).unwrap();
        assert_eq!(fam[0].entries(), direct.entries());
        assert!(coupled_family(&[10, 10], 1.0, LeakSemantics::Remove, 8, 3).is_err());
    }

    #[test]
    fn semantics_round_trip() {
        for s in LeakSemantics::ALL {
            assert_eq!(s.as_str().parse::<LeakSemantics>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("leak".parse::<LeakSemantics>().is_err());
    }
}
