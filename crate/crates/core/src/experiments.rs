//! Replica orchestration and the estimators built on the dynamics.
//!
//! Replica `i` under master seed `s` draws from `replica_rng(s, i)`, and all
//! reductions are counts or sums collected in replica order, so results do
//! not depend on the thread count.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::clocks::{ClockKind, Event, SuperposedClocks};
use crate::error::{Error, Result};
use crate::graphs::{build_tree, FiniteGraph, GraphKind, RootVariant, Vertex};
use crate::moments;
use crate::processes::{
    step_branch, step_dual, step_xi, BranchOutcome, CountConfig, RealConfig, VertexSet,
    ZetaDynamics,
};
use crate::rng::{exponential, index_below, mix2, open01, replica_rng};
use crate::stats::{binomial_estimate, RunningMoments};
use crate::walk;

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl Estimate {
    fn proportion(successes: u64, replicas: u64, seed: u64) -> Self {
        let (value, std_error) = binomial_estimate(successes, replicas);
        Estimate {
            value,
            std_error,
            replicas,
            seed,
        }
    }

    fn from_moments(m: &RunningMoments, seed: u64) -> Self {
        Estimate {
            value: m.mean(),
            std_error: m.std_error(),
            replicas: m.count(),
            seed,
        }
    }

    /// `|a - b|` in units of the combined standard error. Identical values
    /// with zero error give 0.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let se = self.std_error.hypot(other.std_error);
        if diff == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            diff / se
        }
    }
}

/// Default observed vertex: the torus origin and the tree root both have
/// index 0.
pub const OBSERVED_VERTEX: Vertex = Vertex(0);

fn check_common(graph: &FiniteGraph, lambda: f64, t: f64, x: Vertex, replicas: u64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "λ must be finite and ≥ 0, got {lambda}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t must be finite and ≥ 0, got {t}"
        )));
    }
    if !graph.contains(x) {
        return Err(Error::InvalidArgument(format!(
            "vertex {} is not in the graph",
            x.0
        )));
    }
    if replicas == 0 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    Ok(())
}

/// Runs `f` for replicas `0..replicas`, each with its own stream.
fn replicate<T, F>(replicas: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(&mut replica_rng(seed, i)))
        .collect()
}

/// Draws the number of rings of total rate `mean` in one time window.
fn ring_count<R: RngCore>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

/// One ring at a uniform vertex from a single 64-bit draw: the high half of
/// `r·V` is the vertex, the low half a uniform fraction used for the kind.
#[inline]
fn uniform_ring<R: RngCore>(rng: &mut R, vertices: u64) -> (usize, u64) {
    let prod = rng.next_u64() as u128 * vertices as u128;
    ((prod >> 64) as usize, prod as u64)
}

/// `u64` cut so that a uniform 64-bit fraction below it has probability `p`.
fn fraction_cut(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else {
        (p * 2f64.powi(64)) as u64
    }
}

/// Adjacency padded to the maximum degree with a sentinel vertex `V`
/// whose state is always 0, so the η kernels run without data-dependent
/// branches.
struct Adjacency {
    vertices: usize,
    width: usize,
    targets: Vec<u32>,
}

impl Adjacency {
    fn new(graph: &FiniteGraph) -> Self {
        let v = graph.vertex_count();
        let width = (0..v)
            .map(|y| graph.degree(Vertex(y as u32)))
            .max()
            .unwrap_or(0);
        let mut targets = vec![v as u32; v * width];
        for y in 0..v {
            for (slot, w) in targets[y * width..]
                .iter_mut()
                .zip(graph.neighbors(Vertex(y as u32)))
            {
                *slot = w.0;
            }
        }
        Adjacency {
            vertices: v,
            width,
            targets,
        }
    }

    /// OR of the neighbor states (1 iff some neighbor is infected).
    #[inline]
    fn neighbor_or(&self, y: usize, state: &[u8]) -> u8 {
        self.targets[y * self.width..(y + 1) * self.width]
            .iter()
            .fold(0, |acc, &w| acc | state[w as usize])
    }
}

/// Largest graph the η estimators will run on.
pub const MAX_ETA_VERTICES: usize = 1 << 26;

fn adjacency_for_eta(graph: &FiniteGraph) -> Result<Adjacency> {
    let v = graph.vertex_count();
    if v > MAX_ETA_VERTICES {
        return Err(Error::ResourceLimit {
            what: "vertices for the η estimator",
            value: v as u64,
            limit: MAX_ETA_VERTICES as u64,
        });
    }
    Ok(Adjacency::new(graph))
}

/// `η_t(x)` from all ones, sampled without event times: the number of rings
/// in `[0, t]` is Poisson(`V(1+λ)t`) and each ring is an independent uniform
/// (vertex, kind) pair.
fn eta_at_time<R: RngCore>(
    adj: &Adjacency,
    lambda: f64,
    t: f64,
    x: usize,
    rng: &mut R,
    state: &mut Vec<u8>,
) -> bool {
    let v = adj.vertices;
    state.clear();
    state.resize(v, 1);
    state.push(0);
    let mut ones = v as i64;
    let rings = ring_count(rng, v as f64 * (1.0 + lambda) * t);
    let heal_cut = fraction_cut(1.0 / (1.0 + lambda));
    for _ in 0..rings {
        let (y, frac) = uniform_ring(rng, v as u64);
        // heal: 0; infect: stays 1 or becomes 1 next to an infected site
        let old = state[y];
        let new = (frac >= heal_cut) as u8 & (old | adj.neighbor_or(y, state));
        state[y] = new;
        ones += new as i64 - old as i64;
        if ones == 0 {
            return false;
        }
    }
    state[x] == 1
}

/// `P(η_t(x) = 1)` from the all-ones start.
pub fn survival_probability(
    graph: &FiniteGraph,
    lambda: f64,
    t: f64,
    x: Vertex,
    replicas: u64,
    seed: u64,
) -> Result<Estimate> {
    check_common(graph, lambda, t, x, replicas)?;
    let adj = adjacency_for_eta(graph)?;
    let hits: u64 = (0..replicas)
        .into_par_iter()
        .map_init(Vec::new, |state, i| {
            let mut rng = replica_rng(seed, i);
            eta_at_time(&adj, lambda, t, x.index(), &mut rng, state) as u64
        })
        .sum();
    Ok(Estimate::proportion(hits, replicas, seed))
}

/// Outcome of the dual set process from `{x}` up to time `t`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DualOutcome {
    Extinct,
    Alive,
    /// Reached the size cap before `t`; counted as surviving.
    Saturated,
}

/// Gillespie simulation of `A` from `{x}`: only rings at members change the
/// set, at total rate `|A|(1+λ)`.
pub fn dual_run<R: RngCore>(
    graph: &FiniteGraph,
    lambda: f64,
    t: f64,
    x: Vertex,
    cap: usize,
    rng: &mut R,
) -> DualOutcome {
    let mut set = VertexSet::singleton(x);
    let mut now = 0.0;
    let heal_prob = 1.0 / (1.0 + lambda);
    loop {
        let n = set.len();
        if n == 0 {
            return DualOutcome::Extinct;
        }
        if n >= cap {
            return DualOutcome::Saturated;
        }
        now += exponential(rng, n as f64 * (1.0 + lambda));
        if now > t {
            return DualOutcome::Alive;
        }
        let y = set.get_index(index_below(rng, n as u64) as usize).unwrap();
        let kind = if open01(rng) < heal_prob {
            ClockKind::Heal
        } else {
            ClockKind::Infect
        };
        step_dual(
            &mut set,
            &Event {
                time: now,
                vertex: y,
                kind,
            },
            graph,
        );
    }
}

/// `P(A_t^{x} ≠ ∅)`, with sets reaching `cap` counted as surviving.
pub fn dual_survival(
    graph: &FiniteGraph,
    lambda: f64,
    t: f64,
    x: Vertex,
    replicas: u64,
    seed: u64,
    cap: usize,
) -> Result<Estimate> {
    check_common(graph, lambda, t, x, replicas)?;
    let hits: u64 = replicate(replicas, seed, |rng| {
        (dual_run(graph, lambda, t, x, cap, rng) != DualOutcome::Extinct) as u64
    })
    .into_iter()
    .sum();
    Ok(Estimate::proportion(hits, replicas, seed))
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct DualityCheck {
    pub p_eta: Estimate,
    pub p_dual: Estimate,
    pub z_score: f64,
}

/// Compares `P(η_t(x) = 1)` from all ones with `P(A_t^{x} ≠ ∅)` on
/// independent replica sets (seeds `mix2(seed, 0)` and `mix2(seed, 1)`).
pub fn duality_check(
    graph: &FiniteGraph,
    x: Vertex,
    lambda: f64,
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<DualityCheck> {
    let p_eta = survival_probability(graph, lambda, t, x, replicas, mix2(seed, 0))?;
    let p_dual = dual_survival(graph, lambda, t, x, replicas, mix2(seed, 1), usize::MAX)?;
    Ok(DualityCheck {
        p_eta,
        p_dual,
        z_score: p_eta.z_score(&p_dual),
    })
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct BranchingResult {
    /// `P(S_t ≠ ∅)` from the root.
    pub survival: Estimate,
    /// Sons per ring at members above the truncation depth; its mean is
    /// `nλ/(λ+1)`.
    pub offspring_mean: Estimate,
    pub interior_events: u64,
}

/// Gillespie simulation of the branching set `S` on the truncated tree with
/// a son-only root, from `{root}`. Returns whether `S_t ≠ ∅` and the
/// (events, sons) tally at interior members.
pub fn branching_run<R: RngCore>(
    graph: &FiniteGraph,
    lambda: f64,
    t: f64,
    depth: usize,
    rng: &mut R,
) -> (bool, u64, u64) {
    let mut set = VertexSet::singleton(Vertex(0));
    let mut now = 0.0;
    let heal_prob = 1.0 / (1.0 + lambda);
    let (mut events, mut sons) = (0u64, 0u64);
    loop {
        let n = set.len();
        if n == 0 {
            return (false, events, sons);
        }
        now += exponential(rng, n as f64 * (1.0 + lambda));
        if now > t {
            return (true, events, sons);
        }
        let y = set.get_index(index_below(rng, n as u64) as usize).unwrap();
        let kind = if open01(rng) < heal_prob {
            ClockKind::Heal
        } else {
            ClockKind::Infect
        };
        let interior = graph.tree_depth_of(y).is_some_and(|k| k < depth);
        let outcome = step_branch(
            &mut set,
            &Event {
                time: now,
                vertex: y,
                kind,
            },
            graph,
        )
        .expect("branching runs on trees");
        if interior {
            events += 1;
            if let BranchOutcome::Replaced(c) = outcome {
                sons += c as u64;
            }
        }
    }
}

/// Survival of `S` on `T^n` truncated at `depth` (son-only root).
pub fn branching_survival(
    n: usize,
    lambda: f64,
    t: f64,
    depth: usize,
    replicas: u64,
    seed: u64,
) -> Result<BranchingResult> {
    let graph = build_tree(n, depth, RootVariant::SonOnly)?;
    check_common(&graph, lambda, t, Vertex(0), replicas)?;
    let runs = replicate(replicas, seed, |rng| {
        branching_run(&graph, lambda, t, depth, rng)
    });
    let alive = runs.iter().filter(|r| r.0).count() as u64;
    let events: u64 = runs.iter().map(|r| r.1).sum();
    let sons: u64 = runs.iter().map(|r| r.2).sum();
    // each interior ring yields n sons with probability λ/(1+λ), else none
    let p = if events > 0 {
        sons as f64 / (n as f64 * events as f64)
    } else {
        0.0
    };
    let offspring_mean = Estimate {
        value: n as f64 * p,
        std_error: if events > 0 {
            n as f64 * (p * (1.0 - p) / events as f64).sqrt()
        } else {
            0.0
        },
        replicas,
        seed,
    };
    Ok(BranchingResult {
        survival: Estimate::proportion(alive, replicas, seed),
        offspring_mean,
        interior_events: events,
    })
}

/// Extinction probability of `S` from the root by time `t` on the truncated
/// tree, from the backward equations
/// `q_k' = 1 - q_k + λ(q_{k+1}^n - q_k)` (k < depth) and
/// `q_D' = (1+λ)(1 - q_D)`, integrated with classical RK4.
pub fn branching_extinction_ode(n: usize, lambda: f64, t: f64, depth: usize) -> f64 {
    let rhs = |q: &[f64], out: &mut [f64]| {
        for k in 0..depth {
            out[k] = 1.0 - q[k] + lambda * (q[k + 1].powi(n as i32) - q[k]);
        }
        out[depth] = (1.0 + lambda) * (1.0 - q[depth]);
    };
    let steps = ((t * (1.0 + lambda) * 200.0).ceil() as usize).max(1);
    let h = t / steps as f64;
    let m = depth + 1;
    let mut q = vec![0.0; m];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
    );
    for _ in 0..steps {
        rhs(&q, &mut k1);
        for i in 0..m {
            tmp[i] = q[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..m {
            tmp[i] = q[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..m {
            tmp[i] = q[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..m {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    q[0]
}

/// Monte Carlo `E ξ_t(x)` from all ones at each observation time.
pub fn mean_xi(
    graph: &FiniteGraph,
    lambda: f64,
    times: &[f64],
    x: Vertex,
    replicas: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    let horizon = check_times(times)?;
    check_common(graph, lambda, horizon, x, replicas)?;
    let v = graph.vertex_count();
    let per_replica = replicate(replicas, seed, |rng| {
        let clocks = SuperposedClocks::new(v, lambda, horizon, rng.clone());
        let mut state = CountConfig::all_ones(v);
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        for e in clocks {
            while next < times.len() && e.time > times[next] {
                out.push(state.get_f64(x));
                next += 1;
            }
            step_xi(&mut state, &e, graph);
        }
        while out.len() < times.len() {
            out.push(state.get_f64(x));
        }
        out
    });
    Ok(reduce_columns(&per_replica, times.len(), seed))
}

/// Monte Carlo `E ζ_t(x)` and `E ζ_t(x)²` from all ones.
pub fn zeta_statistics(
    graph: &FiniteGraph,
    lambda: f64,
    times: &[f64],
    x: Vertex,
    replicas: u64,
    seed: u64,
) -> Result<Vec<(Estimate, Estimate)>> {
    let horizon = check_times(times)?;
    check_common(graph, lambda, horizon, x, replicas)?;
    let z = ZetaDynamics::new(graph, lambda)?;
    let v = graph.vertex_count();
    let per_replica = replicate(replicas, seed, |rng| {
        let clocks = SuperposedClocks::new(v, lambda, horizon, rng.clone());
        let mut state = RealConfig::all_ones(v);
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        for e in clocks {
            while next < times.len() && e.time > times[next] {
                out.push(z.value_at(&state, x, times[next]));
                next += 1;
            }
            z.step(&mut state, &e, graph);
        }
        while out.len() < times.len() {
            out.push(z.value_at(&state, x, times[out.len()]));
        }
        out
    });
    let means = reduce_columns(&per_replica, times.len(), seed);
    let squares: Vec<Vec<f64>> = per_replica
        .iter()
        .map(|r| r.iter().map(|v| v * v).collect())
        .collect();
    let seconds = reduce_columns(&squares, times.len(), seed);
    Ok(means.into_iter().zip(seconds).collect())
}

fn check_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() || times.windows(2).any(|w| w[0] > w[1]) || times[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "times must be nonempty, sorted and ≥ 0".into(),
        ));
    }
    Ok(*times.last().unwrap())
}

fn reduce_columns(rows: &[Vec<f64>], columns: usize, seed: u64) -> Vec<Estimate> {
    (0..columns)
        .map(|c| {
            let mut m = RunningMoments::new();
            rows.iter().for_each(|r| m.push(r[c]));
            Estimate::from_moments(&m, seed)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub estimate: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Replicas where the survival indicator decreased along the grid.
    /// Zero under the thinning coupling.
    pub monotonicity_violations: u64,
}

/// Survival probability over an ascending λ grid, all grid points driven by
/// one set of clocks at `λ_max`: an infect ring with mark `u` is kept at
/// rate `λ` iff `u < λ/λ_max`.
pub fn lambda_scan(
    graph: &FiniteGraph,
    grid: &[f64],
    t: f64,
    x: Vertex,
    replicas: u64,
    seed: u64,
) -> Result<ScanResult> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "λ grid must be nonempty and ascending".into(),
        ));
    }
    let lambda_max = *grid.last().unwrap();
    check_common(graph, lambda_max, t, x, replicas)?;
    check_common(graph, grid[0], t, x, replicas)?;
    let adj = adjacency_for_eta(graph)?;
    let v = graph.vertex_count();
    let g = grid.len();
    // one extra always-0 slot per state for the padded adjacency
    let cuts: Vec<u64> = grid
        .iter()
        .map(|&l| {
            if lambda_max > 0.0 {
                fraction_cut(l / lambda_max)
            } else {
                u64::MAX
            }
        })
        .collect();
    let heal_prob = 1.0 / (1.0 + lambda_max);
    let runs: Vec<Vec<bool>> = replicate(replicas, seed, |rng| {
        let mut states: Vec<Vec<u8>> = (0..g)
            .map(|_| {
                let mut s = vec![1u8; v + 1];
                s[v] = 0;
                s
            })
            .collect();
        let rings = ring_count(rng, v as f64 * (1.0 + lambda_max) * t);
        for _ in 0..rings {
            let (y, _) = uniform_ring(rng, v as u64);
            if open01(rng) < heal_prob {
                states.iter_mut().for_each(|s| s[y] = 0);
            } else {
                let mark = rng.next_u64();
                for (s, &cut) in states.iter_mut().zip(&cuts) {
                    if mark < cut {
                        s[y] |= adj.neighbor_or(y, s);
                    }
                }
            }
        }
        states.iter().map(|s| s[x.index()] == 1).collect()
    });
    let violations = runs
        .iter()
        .filter(|r| r.windows(2).any(|w| w[0] && !w[1]))
        .count() as u64;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let hits = runs.iter().filter(|r| r[i]).count() as u64;
            ScanRow {
                lambda,
                estimate: Estimate::proportion(hits, replicas, seed),
            }
        })
        .collect();
    Ok(ScanResult {
        rows,
        monotonicity_violations: violations,
    })
}

/// Sets reaching this size count as surviving in the critical-value search.
pub const DEFAULT_SATURATION_CAP: usize = 2_000;

pub const FINITE_SIZE_DISCLAIMER: &str = "finite-size, finite-time proxy: survival of the dual from the observed vertex at fixed t crossing the threshold; sets reaching the saturation cap count as surviving; slack ±0.05 against infinite-graph bounds";

#[derive(Clone, Debug, Serialize)]
pub struct CriticalEstimate {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    /// `(λ, survival)` at every evaluated rate, in evaluation order.
    pub evaluations: Vec<(f64, Estimate)>,
    pub disclaimer: &'static str,
}

#[derive(Copy, Clone, Debug)]
pub struct CriticalParams {
    pub t: f64,
    pub replicas: u64,
    pub threshold: f64,
    pub tol: f64,
    pub seed: u64,
    pub cap: usize,
}

/// Bisection for the rate where `P(A_t^{x} ≠ ∅)` crosses `threshold`.
pub fn critical_estimate(
    graph: &FiniteGraph,
    bracket: (f64, f64),
    x: Vertex,
    p: CriticalParams,
) -> Result<CriticalEstimate> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || lo < 0.0 || !(p.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 ≤ lo < hi and tol > 0, got ({lo}, {hi}), tol {}",
            p.tol
        )));
    }
    let mut evaluations = Vec::new();
    let mut eval = |lambda: f64, step: u64| -> Result<Estimate> {
        let e = dual_survival(graph, lambda, p.t, x, p.replicas, mix2(p.seed, step), p.cap)?;
        evaluations.push((lambda, e));
        Ok(e)
    };
    let s_lo = eval(lo, 0)?;
    let s_hi = eval(hi, 1)?;
    if !(s_lo.value < p.threshold && s_hi.value >= p.threshold) {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            s_lo: s_lo.value,
            s_hi: s_hi.value,
            threshold: p.threshold,
        });
    }
    let mut step = 2;
    while hi - lo > p.tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid, step)?.value < p.threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        step += 1;
    }
    Ok(CriticalEstimate {
        lo,
        hi,
        estimate: 0.5 * (lo + hi),
        evaluations,
        disclaimer: FINITE_SIZE_DISCLAIMER,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsRow {
    /// "lattice" or "tree"
    pub family: &'static str,
    /// `d` for lattices, `n` for trees.
    pub parameter: usize,
    pub degree: usize,
    pub lower: f64,
    pub upper: Option<f64>,
    /// Why the upper bound is missing.
    pub upper_note: Option<String>,
    /// `2d·lower` or `n·lower`.
    pub product_lower: f64,
    pub product_upper: Option<f64>,
    /// `F_d(e_1)` behind the lattice upper bound.
    pub f_e1: Option<f64>,
}

pub enum Family<'a> {
    Lattice(&'a [usize]),
    Tree(&'a [usize]),
}

/// Critical-value bounds: `1/(2d) ≤ λ_c(Z^d) ≤ 1/(4d[1 - (d+1)F_d(e_1)])`
/// and `1/(n+1) ≤ λ_c(T^n) ≤ 1/(n-1)`.
pub fn bounds_report(family: Family<'_>) -> Result<Vec<BoundsRow>> {
    match family {
        Family::Tree(ns) => ns
            .iter()
            .map(|&n| {
                if n < 2 {
                    return Err(Error::InvalidArgument("tree rows need n ≥ 2".into()));
                }
                let nf = n as f64;
                Ok(BoundsRow {
                    family: "tree",
                    parameter: n,
                    degree: n + 1,
                    lower: 1.0 / (nf + 1.0),
                    upper: Some(1.0 / (nf - 1.0)),
                    upper_note: None,
                    product_lower: nf / (nf + 1.0),
                    product_upper: Some(nf / (nf - 1.0)),
                    f_e1: None,
                })
            })
            .collect(),
        Family::Lattice(ds) => ds
            .iter()
            .map(|&d| {
                if d == 0 {
                    return Err(Error::InvalidArgument("lattice rows need d ≥ 1".into()));
                }
                let df = d as f64;
                let f = walk::hitting_prob_e1(d)?;
                let (upper, upper_note) = match moments::lambda_threshold(d, f.value) {
                    Ok(u) => (Some(u), None),
                    Err(e) => (None, Some(format!("hypothesis fails: {e}"))),
                };
                Ok(BoundsRow {
                    family: "lattice",
                    parameter: d,
                    degree: 2 * d,
                    lower: 1.0 / (2.0 * df),
                    upper,
                    upper_note,
                    product_lower: 1.0,
                    product_upper: upper.map(|u| 2.0 * df * u),
                    f_e1: Some(f.value),
                })
            })
            .collect(),
    }
}

/// Whether `graph` is a torus (observable: origin) or tree (root).
pub fn describe_observed(graph: &FiniteGraph) -> &'static str {
    match graph.kind() {
        GraphKind::Torus { .. } => "origin",
        GraphKind::Tree { .. } => "root",
        GraphKind::Custom => "vertex 0",
    }
}
