//! The five coupled dynamics driven by one clock schedule.
//!
//! * `η` ([`SpinConfig`]): threshold-one contact process.
//! * `ξ` ([`CountConfig`]): counting linear system; `η = 1{ξ > 0}` under
//!   a shared schedule.
//! * `ζ` ([`RealConfig`]): `ξ` with the drift `dζ/dt = (1 - 2λd) ζ` between
//!   rings, so its mean stays at 1 on a `2d`-regular graph.
//! * `A` ([`VertexSet`] under [`step_dual`]): the additive dual.
//! * `S` ([`VertexSet`] under [`step_branch`]): the oriented branching set
//!   process on a tree.
//!
//! The state "at time t" is the state after every event with time `<= t`.

use std::hash::{BuildHasherDefault, Hasher};

use indexmap::IndexSet;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::clocks::{ClockKind, ClockSchedule, Event};
use crate::error::{Error, Result};
use crate::graphs::{FiniteGraph, GraphKind, Vertex};

/// Spin configuration in `{0,1}^V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    values: Vec<bool>,
}

impl SpinConfig {
    pub fn all_ones(n: usize) -> Self {
        SpinConfig {
            values: vec![true; n],
        }
    }

    pub fn all_zeros(n: usize) -> Self {
        SpinConfig {
            values: vec![false; n],
        }
    }

    pub fn from_bits(values: Vec<bool>) -> Self {
        SpinConfig { values }
    }

    #[inline]
    pub fn get(&self, x: Vertex) -> bool {
        self.values[x.index()]
    }

    pub fn set(&mut self, x: Vertex, value: bool) {
        self.values[x.index()] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.values
    }

    /// Pointwise `self >= other`.
    pub fn dominates(&self, other: &SpinConfig) -> bool {
        self.values.iter().zip(&other.values).all(|(&a, &b)| a >= b)
    }
}

/// Nonnegative integer configuration with exact arithmetic. Values live in
/// `u64` until an addition would overflow, then the whole configuration is
/// promoted to big integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountConfig {
    Small(Vec<u64>),
    Big(Vec<BigUint>),
}

impl CountConfig {
    pub fn all_ones(n: usize) -> Self {
        CountConfig::Small(vec![1; n])
    }

    pub fn from_values(values: Vec<u64>) -> Self {
        CountConfig::Small(values)
    }

    pub fn len(&self) -> usize {
        match self {
            CountConfig::Small(v) => v.len(),
            CountConfig::Big(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, x: Vertex) -> BigUint {
        match self {
            CountConfig::Small(v) => BigUint::from(v[x.index()]),
            CountConfig::Big(v) => v[x.index()].clone(),
        }
    }

    #[inline]
    pub fn is_positive(&self, x: Vertex) -> bool {
        match self {
            CountConfig::Small(v) => v[x.index()] > 0,
            CountConfig::Big(v) => !v[x.index()].is_zero(),
        }
    }

    /// Value as a double (rounded once the value exceeds 2^53).
    pub fn get_f64(&self, x: Vertex) -> f64 {
        match self {
            CountConfig::Small(v) => v[x.index()] as f64,
            CountConfig::Big(v) => v[x.index()].to_f64().unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_big(&self) -> bool {
        matches!(self, CountConfig::Big(_))
    }

    fn promote(&mut self) {
        if let CountConfig::Small(v) = self {
            *self = CountConfig::Big(v.iter().map(|&x| BigUint::from(x)).collect());
        }
    }
}

/// Nonnegative real configuration with lazily applied exponential drift:
/// `values[x]` is exact at time `last_update[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealConfig {
    values: Vec<f64>,
    last_update: Vec<f64>,
}

impl RealConfig {
    pub fn all_ones(n: usize) -> Self {
        RealConfig {
            values: vec![1.0; n],
            last_update: vec![0.0; n],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        RealConfig {
            values,
            last_update: vec![0.0; n],
        }
    }

    /// Stored value and the time it refers to.
    pub fn raw(&self, x: Vertex) -> (f64, f64) {
        (self.values[x.index()], self.last_update[x.index()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    fn sync(&mut self, x: usize, time: f64, drift: f64) {
        let dt = time - self.last_update[x];
        if dt > 0.0 {
            if drift != 0.0 {
                self.values[x] *= (drift * dt).exp();
            }
            self.last_update[x] = time;
        }
    }
}

/// Multiplicative hasher for vertex ids.
#[derive(Default)]
pub struct VertexHasher(u64);

impl Hasher for VertexHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }

    fn write_u32(&mut self, i: u32) {
        self.0 = (i as u64 ^ self.0).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
}

/// Finite set of vertices with O(1) insert, remove and uniform indexing.
#[derive(Clone, Debug, Default)]
pub struct VertexSet {
    members: IndexSet<Vertex, BuildHasherDefault<VertexHasher>>,
}

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(x: Vertex) -> Self {
        let mut s = Self::new();
        s.insert(x);
        s
    }

    pub fn insert(&mut self, x: Vertex) -> bool {
        self.members.insert(x)
    }

    pub fn remove(&mut self, x: Vertex) -> bool {
        self.members.swap_remove(&x)
    }

    #[inline]
    pub fn contains(&self, x: Vertex) -> bool {
        self.members.contains(&x)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member by position; positions change on removal.
    pub fn get_index(&self, i: usize) -> Option<Vertex> {
        self.members.get_index(i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.members.iter().copied()
    }

    pub fn is_superset(&self, other: &VertexSet) -> bool {
        other.iter().all(|x| self.contains(x))
    }

    pub fn sorted(&self) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.iter().collect();
        v.sort_unstable();
        v
    }
}

impl PartialEq for VertexSet {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.is_superset(other)
    }
}

impl Eq for VertexSet {}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        let mut s = VertexSet::new();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

/// Threshold-one contact update.
#[inline]
pub fn step_eta(config: &mut SpinConfig, event: &Event, graph: &FiniteGraph) {
    let x = event.vertex;
    match event.kind {
        ClockKind::Heal => config.values[x.index()] = false,
        ClockKind::Infect => {
            if !config.values[x.index()] && graph.neighbors(x).any(|y| config.values[y.index()]) {
                config.values[x.index()] = true;
            }
        }
    }
}

/// Counting-system update: heal resets to 0, infect adds the neighbor sum.
pub fn step_xi(config: &mut CountConfig, event: &Event, graph: &FiniteGraph) {
    let x = event.vertex;
    match event.kind {
        ClockKind::Heal => match config {
            CountConfig::Small(v) => v[x.index()] = 0,
            CountConfig::Big(v) => v[x.index()] = BigUint::zero(),
        },
        ClockKind::Infect => {
            if let CountConfig::Small(v) = config {
                let mut sum = Some(v[x.index()]);
                for y in graph.neighbors(x) {
                    sum = sum.and_then(|s| s.checked_add(v[y.index()]));
                }
                match sum {
                    Some(s) => {
                        v[x.index()] = s;
                        return;
                    }
                    None => config.promote(),
                }
            }
            if let CountConfig::Big(v) = config {
                let mut sum = v[x.index()].clone();
                for y in graph.neighbors(x) {
                    sum += &v[y.index()];
                }
                v[x.index()] = sum;
            }
        }
    }
}

/// Parameters of the drifted system `ζ` on a `2d`-regular graph.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ZetaDynamics {
    pub lambda: f64,
    pub d: usize,
    /// `1 - 2λd`
    pub drift: f64,
}

impl ZetaDynamics {
    /// Rejects graphs that are not regular of even degree `2d`.
    pub fn new(graph: &FiniteGraph, lambda: f64) -> Result<Self> {
        match graph.regular_degree() {
            Some(r) if r > 0 && r % 2 == 0 => Ok(ZetaDynamics {
                lambda,
                d: r / 2,
                drift: 1.0 - lambda * r as f64,
            }),
            _ => Err(Error::WrongGraph {
                expected: "regular of even degree 2d",
            }),
        }
    }

    /// Drift-synchronize `x` and its neighbors to the event time, then apply
    /// the ring.
    pub fn step(&self, config: &mut RealConfig, event: &Event, graph: &FiniteGraph) {
        let x = event.vertex.index();
        let t = event.time;
        config.sync(x, t, self.drift);
        match event.kind {
            ClockKind::Heal => config.values[x] = 0.0,
            ClockKind::Infect => {
                let mut sum = config.values[x];
                for y in graph.neighbors(event.vertex) {
                    config.sync(y.index(), t, self.drift);
                    sum += config.values[y.index()];
                }
                config.values[x] = sum;
            }
        }
    }

    /// Value of `ζ_t(x)` for `t` at or after the last update of `x`.
    pub fn value_at(&self, config: &RealConfig, x: Vertex, time: f64) -> f64 {
        let (v, last) = config.raw(x);
        if self.drift == 0.0 || time <= last {
            v
        } else {
            v * (self.drift * (time - last)).exp()
        }
    }

    /// Configuration with every coordinate synchronized to `time`.
    pub fn synced(&self, config: &RealConfig, time: f64) -> RealConfig {
        let mut c = config.clone();
        for x in 0..c.len() {
            c.sync(x, time, self.drift);
        }
        c
    }
}

/// `ζ` update for the free-function form; checks regularity on every call.
pub fn step_zeta(
    config: &mut RealConfig,
    event: &Event,
    graph: &FiniteGraph,
    lambda: f64,
    d: usize,
) -> Result<()> {
    let z = ZetaDynamics::new(graph, lambda)?;
    if z.d != d {
        return Err(Error::WrongGraph {
            expected: "regular of degree 2d for the given d",
        });
    }
    z.step(config, event, graph);
    Ok(())
}

/// Dual set update: heal removes `x`; infect at `x ∈ A` adds all neighbors.
#[inline]
pub fn step_dual(set: &mut VertexSet, event: &Event, graph: &FiniteGraph) {
    let x = event.vertex;
    match event.kind {
        ClockKind::Heal => {
            set.remove(x);
        }
        ClockKind::Infect => {
            if set.contains(x) {
                for y in graph.neighbors(x) {
                    set.insert(y);
                }
            }
        }
    }
}

/// What a ring did to the branching set.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BranchOutcome {
    /// The ringing vertex was not in the set.
    Idle,
    /// Heal at a member: removed without replacement.
    Removed,
    /// Infect at a member: replaced by this many sons (0 at truncation leaves).
    Replaced(usize),
}

/// Branching set update on a tree: heal removes `x`; infect replaces `x` by
/// its oriented sons. Truncation leaves have no sons, so an infect removes
/// them.
pub fn step_branch(
    set: &mut VertexSet,
    event: &Event,
    graph: &FiniteGraph,
) -> Result<BranchOutcome> {
    let x = event.vertex;
    let sons = graph
        .oriented_sons(x)
        .ok_or(Error::WrongGraph { expected: "a tree" })?;
    if !set.contains(x) {
        return Ok(BranchOutcome::Idle);
    }
    set.remove(x);
    Ok(match event.kind {
        ClockKind::Heal => BranchOutcome::Removed,
        ClockKind::Infect => {
            let count = sons.len();
            for s in sons {
                set.insert(Vertex(s));
            }
            BranchOutcome::Replaced(count)
        }
    })
}

/// A dynamics that can be driven by an event stream.
pub trait Dynamics {
    type State: Clone;

    fn apply(&self, state: &mut Self::State, event: &Event, graph: &FiniteGraph);

    /// State as observed at `time` (after all events `<= time`).
    fn observe(&self, state: &Self::State, _time: f64) -> Self::State {
        state.clone()
    }
}

#[derive(Copy, Clone, Debug, Default)]
pub struct Eta;

#[derive(Copy, Clone, Debug, Default)]
pub struct Xi;

#[derive(Copy, Clone, Debug, Default)]
pub struct Dual;

/// Branching dynamics; construct through [`Branch::new`] to check the graph.
#[derive(Copy, Clone, Debug)]
pub struct Branch(());

impl Branch {
    pub fn new(graph: &FiniteGraph) -> Result<Self> {
        match graph.kind() {
            GraphKind::Tree { .. } => Ok(Branch(())),
            _ => Err(Error::WrongGraph { expected: "a tree" }),
        }
    }
}

impl Dynamics for Eta {
    type State = SpinConfig;
    fn apply(&self, s: &mut SpinConfig, e: &Event, g: &FiniteGraph) {
        step_eta(s, e, g)
    }
}

impl Dynamics for Xi {
    type State = CountConfig;
    fn apply(&self, s: &mut CountConfig, e: &Event, g: &FiniteGraph) {
        step_xi(s, e, g)
    }
}

impl Dynamics for ZetaDynamics {
    type State = RealConfig;
    fn apply(&self, s: &mut RealConfig, e: &Event, g: &FiniteGraph) {
        self.step(s, e, g)
    }
    fn observe(&self, s: &RealConfig, time: f64) -> RealConfig {
        self.synced(s, time)
    }
}

impl Dynamics for Dual {
    type State = VertexSet;
    fn apply(&self, s: &mut VertexSet, e: &Event, g: &FiniteGraph) {
        step_dual(s, e, g)
    }
}

impl Dynamics for Branch {
    type State = VertexSet;
    fn apply(&self, s: &mut VertexSet, e: &Event, g: &FiniteGraph) {
        // the graph was checked to be a tree at construction
        let _ = step_branch(s, e, g);
    }
}

fn check_observe_times(times: &[f64], horizon: f64) -> Result<()> {
    for &t in times {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::ObservationTime { time: t, horizon });
        }
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "observation times must be sorted".into(),
        ));
    }
    Ok(())
}

/// Drives `dynamics` with an arbitrary time-ordered event stream.
pub fn run_events<D: Dynamics>(
    dynamics: &D,
    graph: &FiniteGraph,
    events: impl IntoIterator<Item = Event>,
    initial: D::State,
    observe_times: &[f64],
) -> Vec<D::State> {
    let mut state = initial;
    let mut out = Vec::with_capacity(observe_times.len());
    let mut pending = observe_times.iter().copied().peekable();
    for e in events {
        while let Some(&t) = pending.peek() {
            if e.time > t {
                out.push(dynamics.observe(&state, t));
                pending.next();
            } else {
                break;
            }
        }
        if pending.peek().is_none() {
            return out;
        }
        dynamics.apply(&mut state, &e, graph);
    }
    out.extend(pending.map(|t| dynamics.observe(&state, t)));
    out
}

/// Applies the schedule and returns the state at each observation time.
pub fn run<D: Dynamics>(
    dynamics: &D,
    graph: &FiniteGraph,
    schedule: &ClockSchedule,
    initial: D::State,
    observe_times: &[f64],
) -> Result<Vec<D::State>> {
    if !schedule.is_for(graph) {
        return Err(Error::InvalidArgument(
            "schedule was built for another graph".into(),
        ));
    }
    check_observe_times(observe_times, schedule.horizon())?;
    Ok(run_events(
        dynamics,
        graph,
        schedule.merged_events(),
        initial,
        observe_times,
    ))
}

/// Runs `η` from all ones and `ξ` from all ones on the same schedule and
/// counts vertices where `η_t(x) != 1{ξ_t(x) > 0}` at each observation time.
pub fn coupled_run_eta_xi(
    schedule: &ClockSchedule,
    graph: &FiniteGraph,
    observe_times: &[f64],
) -> Result<Vec<usize>> {
    let n = graph.vertex_count();
    let etas = run(
        &Eta,
        graph,
        schedule,
        SpinConfig::all_ones(n),
        observe_times,
    )?;
    let xis = run(
        &Xi,
        graph,
        schedule,
        CountConfig::all_ones(n),
        observe_times,
    )?;
    Ok(etas
        .iter()
        .zip(&xis)
        .map(|(eta, xi)| {
            (0..n)
                .filter(|&v| eta.get(Vertex::from(v)) != xi.is_positive(Vertex::from(v)))
                .count()
        })
        .collect())
}

/// Same as [`coupled_run_eta_xi`] for the drifted system `ζ`.
pub fn coupled_run_eta_zeta(
    schedule: &ClockSchedule,
    graph: &FiniteGraph,
    observe_times: &[f64],
) -> Result<Vec<usize>> {
    let n = graph.vertex_count();
    let z = ZetaDynamics::new(graph, schedule.lambda())?;
    let etas = run(
        &Eta,
        graph,
        schedule,
        SpinConfig::all_ones(n),
        observe_times,
    )?;
    let zetas = run(&z, graph, schedule, RealConfig::all_ones(n), observe_times)?;
    Ok(etas
        .iter()
        .zip(&zetas)
        .map(|(eta, zeta)| {
            (0..n)
                .filter(|&v| eta.get(Vertex::from(v)) != (zeta.values[v] > 0.0))
                .count()
        })
        .collect())
}

/// Runs two `η` configurations on the same schedule and reports, per
/// observation time, whether `upper ≥ lower` still holds pointwise.
pub fn coupled_attractiveness(
    schedule: &ClockSchedule,
    graph: &FiniteGraph,
    upper: SpinConfig,
    lower: SpinConfig,
    observe_times: &[f64],
) -> Result<Vec<bool>> {
    let hi = run(&Eta, graph, schedule, upper, observe_times)?;
    let lo = run(&Eta, graph, schedule, lower, observe_times)?;
    Ok(hi.iter().zip(&lo).map(|(a, b)| a.dominates(b)).collect())
}

/// Runs `A` and `S` from `{x}` on the same schedule over a tree and reports,
/// per observation time, whether `A_t ⊇ S_t`.
pub fn coupled_dual_branch(
    schedule: &ClockSchedule,
    graph: &FiniteGraph,
    x: Vertex,
    observe_times: &[f64],
) -> Result<Vec<bool>> {
    let branch = Branch::new(graph)?;
    let a = run(
        &Dual,
        graph,
        schedule,
        VertexSet::singleton(x),
        observe_times,
    )?;
    let s = run(
        &branch,
        graph,
        schedule,
        VertexSet::singleton(x),
        observe_times,
    )?;
    Ok(a.iter().zip(&s).map(|(a, s)| a.is_superset(s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clocks::build_schedule;
    use crate::graphs::{build_torus, build_tree, RootVariant};

    fn ev(time: f64, v: u32, kind: ClockKind) -> Event {
        Event::new(time, v, kind)
    }

    #[test]
    fn eta_rules() {
        let g = build_torus(1, 5).unwrap();
        let mut c = SpinConfig::from_bits(vec![true, false, false, false, false]);
        step_eta(&mut c, &ev(0.1, 0, ClockKind::Heal), &g);
        assert!(!c.get(Vertex(0)));
        // no infected neighbors: no flip
        let mut c = SpinConfig::from_bits(vec![false, false, false, true, false]);
        step_eta(&mut c, &ev(0.1, 0, ClockKind::Infect), &g);
        assert!(!c.get(Vertex(0)));
        // vertex 4 is a neighbor of 0 on the 5-cycle
        let mut c = SpinConfig::from_bits(vec![false, false, false, false, true]);
        step_eta(&mut c, &ev(0.1, 0, ClockKind::Infect), &g);
        assert!(c.get(Vertex(0)));
    }

    #[test]
    fn xi_rules() {
        let g = build_torus(1, 5).unwrap();
        let mut c = CountConfig::from_values(vec![2, 1, 0, 0, 2]);
        step_xi(&mut c, &ev(0.1, 0, ClockKind::Infect), &g);
        assert_eq!(c.get(Vertex(0)), BigUint::from(5u32));
        step_xi(&mut c, &ev(0.2, 0, ClockKind::Heal), &g);
        assert_eq!(c.get(Vertex(0)), BigUint::zero());
        let mut z = CountConfig::from_values(vec![0; 5]);
        step_xi(&mut z, &ev(0.3, 2, ClockKind::Infect), &g);
        assert_eq!(z.get(Vertex(2)), BigUint::zero());
    }

    #[test]
    fn xi_promotes_on_overflow() {
        let g = build_torus(1, 3).unwrap();
        let mut c = CountConfig::from_values(vec![u64::MAX, u64::MAX, 3]);
        step_xi(&mut c, &ev(0.1, 2, ClockKind::Infect), &g);
        assert!(c.is_big());
        let expect = BigUint::from(u64::MAX) * 2u32 + 3u32;
        assert_eq!(c.get(Vertex(2)), expect);
        assert_eq!(c.get(Vertex(0)), BigUint::from(u64::MAX));
    }

    #[test]
    fn zeta_rules() {
        // λ = 1/(2d): no drift
        let g = build_torus(2, 4).unwrap();
        let z = ZetaDynamics::new(&g, 0.25).unwrap();
        assert_eq!(z.drift, 0.0);
        let c = RealConfig::all_ones(16);
        assert_eq!(z.value_at(&c, Vertex(3), 7.5), 1.0);

        // 1 - 2λd = -1 with d = 1, λ = 1; elapsed ln 2 halves the value
        let g = build_torus(1, 5).unwrap();
        let z = ZetaDynamics::new(&g, 1.0).unwrap();
        assert_eq!(z.drift, -1.0);
        let mut c = RealConfig::all_ones(5);
        z.step(&mut c, &ev(std::f64::consts::LN_2, 2, ClockKind::Heal), &g);
        assert!((z.value_at(&c, Vertex(0), std::f64::consts::LN_2) - 0.5).abs() < 1e-15);

        // infect: 0.5 + (0.75 + 0.75) = 2.0
        let g = build_torus(1, 4).unwrap();
        let z = ZetaDynamics::new(&g, 0.5).unwrap();
        let mut c = RealConfig::from_values(vec![0.5, 0.75, 0.0, 0.75]);
        z.step(&mut c, &ev(0.3, 0, ClockKind::Infect), &g);
        assert_eq!(c.raw(Vertex(0)).0, 2.0);
    }

    #[test]
    fn zeta_rejects_irregular_graph() {
        let g = build_tree(3, 2, RootVariant::SonOnly).unwrap();
        assert!(ZetaDynamics::new(&g, 0.3).is_err());
        let mut c = RealConfig::all_ones(g.vertex_count());
        assert!(step_zeta(&mut c, &ev(0.1, 0, ClockKind::Heal), &g, 0.3, 2).is_err());
    }

    #[test]
    fn dual_rules() {
        let g = build_torus(2, 5).unwrap();
        let x = Vertex(0);
        let mut a = VertexSet::singleton(x);
        step_dual(&mut a, &ev(0.1, 0, ClockKind::Infect), &g);
        let mut expect: Vec<Vertex> = g.neighbors(x).collect();
        expect.push(x);
        expect.sort();
        assert_eq!(a.sorted(), expect);
        step_dual(&mut a, &ev(0.2, 0, ClockKind::Heal), &g);
        assert!(!a.contains(x));
        let before = a.clone();
        step_dual(&mut a, &ev(0.3, 12, ClockKind::Infect), &g);
        assert_eq!(a, before);
    }

    #[test]
    fn branch_rules() {
        let g = build_tree(3, 3, RootVariant::SonOnly).unwrap();
        let mut s = VertexSet::singleton(Vertex(1));
        let out = step_branch(&mut s, &ev(0.1, 1, ClockKind::Infect), &g).unwrap();
        assert_eq!(out, BranchOutcome::Replaced(3));
        assert_eq!(s.sorted(), vec![Vertex(4), Vertex(5), Vertex(6)]);
        let out = step_branch(&mut s, &ev(0.2, 5, ClockKind::Heal), &g).unwrap();
        assert_eq!(out, BranchOutcome::Removed);
        assert_eq!(s.len(), 2);
        assert_eq!(
            step_branch(&mut s, &ev(0.3, 0, ClockKind::Infect), &g).unwrap(),
            BranchOutcome::Idle
        );
        // leaf at the truncation depth: infect removes it
        let leaf = Vertex::from(g.vertex_count() - 1);
        let mut s = VertexSet::singleton(leaf);
        let out = step_branch(&mut s, &ev(0.4, leaf.0, ClockKind::Infect), &g).unwrap();
        assert_eq!(out, BranchOutcome::Replaced(0));
        assert!(s.is_empty());
        let torus = build_torus(1, 4).unwrap();
        assert!(step_branch(&mut s, &ev(0.1, 0, ClockKind::Infect), &torus).is_err());
        assert!(Branch::new(&torus).is_err());
    }

    #[test]
    fn observe_at_zero_returns_initial() {
        let g = build_torus(2, 4).unwrap();
        let s = build_schedule(&g, 0.8, 3.0, 1).unwrap();
        let init = SpinConfig::from_bits((0..16).map(|i| i % 3 == 0).collect());
        let out = run(&Eta, &g, &s, init.clone(), &[0.0]).unwrap();
        assert_eq!(out, vec![init]);
    }

    #[test]
    fn pure_death_from_all_ones() {
        let g = build_torus(2, 6).unwrap();
        let s = build_schedule(&g, 0.0, 4.0, 2).unwrap();
        let times = [0.5, 1.0, 2.5, 4.0];
        let out = run(&Eta, &g, &s, SpinConfig::all_ones(36), &times).unwrap();
        for (t, state) in times.iter().zip(&out) {
            for v in 0..36u32 {
                let healed = s.events().iter().any(|e| e.vertex.0 == v && e.time <= *t);
                assert_eq!(state.get(Vertex(v)), !healed);
            }
        }
    }

    #[test]
    fn hand_built_xi_replay() {
        // cycle of 4, all ones; hand-applied:
        // t=0.5 infect 0: ξ0 = 1 + ξ1 + ξ3 = 3
        // t=1.0 heal 1:   ξ1 = 0
        // t=1.5 infect 1: ξ1 = 0 + ξ0 + ξ2 = 4
        let g = build_torus(1, 4).unwrap();
        let events = vec![
            ev(0.5, 0, ClockKind::Infect),
            ev(1.0, 1, ClockKind::Heal),
            ev(1.5, 1, ClockKind::Infect),
        ];
        let s = ClockSchedule::from_events(&g, 1.0, 2.0, events).unwrap();
        let out = run(&Xi, &g, &s, CountConfig::all_ones(4), &[0.7, 1.2, 2.0]).unwrap();
        let vals = |c: &CountConfig| -> Vec<f64> { (0..4).map(|v| c.get_f64(Vertex(v))).collect() };
        assert_eq!(vals(&out[0]), vec![3.0, 1.0, 1.0, 1.0]);
        assert_eq!(vals(&out[1]), vec![3.0, 0.0, 1.0, 1.0]);
        assert_eq!(vals(&out[2]), vec![3.0, 4.0, 1.0, 1.0]);
    }

    #[test]
    fn observation_beyond_horizon_rejected() {
        let g = build_torus(1, 4).unwrap();
        let s = build_schedule(&g, 0.5, 1.0, 0).unwrap();
        assert!(run(&Eta, &g, &s, SpinConfig::all_ones(4), &[1.5]).is_err());
        assert!(run(&Eta, &g, &s, SpinConfig::all_ones(4), &[0.8, 0.2]).is_err());
        let other = build_torus(1, 5).unwrap();
        assert!(run(&Eta, &other, &s, SpinConfig::all_ones(5), &[0.5]).is_err());
    }

    #[test]
    fn coupling_at_time_zero() {
        let g = build_torus(1, 8).unwrap();
        let s = build_schedule(&g, 0.7, 5.0, 3).unwrap();
        assert_eq!(coupled_run_eta_xi(&s, &g, &[0.0]).unwrap(), vec![0]);
    }
}
