//! Graphical construction: per-vertex Poisson clocks.
//!
//! Every vertex carries a rate-1 heal clock and a rate-λ infect clock. A
//! [`ClockSchedule`] materializes all clock rings on `[0, horizon]` in the
//! global order `(time, vertex, Heal before Infect)`; the coupled dynamics in
//! [`crate::processes`] all consume the same schedule.
//!
//! [`SuperposedClocks`] samples the same law (superposition of the per-vertex
//! processes) in O(1) per event. It is used by replica estimators where only
//! the distribution of a single trajectory matters.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{FiniteGraph, Vertex};
use crate::rng::{self, Lane};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum ClockKind {
    Heal = 0,
    Infect = 1,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub vertex: Vertex,
    pub kind: ClockKind,
}

impl Event {
    pub fn new(time: f64, vertex: u32, kind: ClockKind) -> Self {
        Event {
            time,
            vertex: Vertex(vertex),
            kind,
        }
    }

    /// Global schedule order.
    #[inline]
    pub fn order(&self, other: &Event) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.vertex.cmp(&other.vertex))
            .then(self.kind.cmp(&other.kind))
    }
}

fn check_rates(lambda: f64, horizon: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be >= 0, got {horizon}"
        )));
    }
    Ok(())
}

/// Ring times of one clock on `[0, horizon]`.
pub struct VertexClock {
    rng: ChaCha8Rng,
    rate: f64,
    time: f64,
    horizon: f64,
    vertex: u32,
    kind: ClockKind,
}

impl VertexClock {
    pub fn new(seed: u64, vertex: u32, kind: ClockKind, rate: f64, horizon: f64) -> Self {
        let lane = match kind {
            ClockKind::Heal => Lane::Heal,
            ClockKind::Infect => Lane::Infect,
        };
        VertexClock {
            rng: rng::vertex_stream(seed, vertex, lane),
            rate,
            time: 0.0,
            horizon,
            vertex,
            kind,
        }
    }
}

impl Iterator for VertexClock {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        if self.rate <= 0.0 || self.time > self.horizon {
            return None;
        }
        self.time += rng::exponential(&mut self.rng, self.rate);
        if self.time > self.horizon {
            return None;
        }
        Some(Event::new(self.time, self.vertex, self.kind))
    }
}

/// Immutable, seed-deterministic event schedule shared by coupled runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockSchedule {
    graph_fingerprint: u64,
    vertex_count: usize,
    lambda: f64,
    horizon: f64,
    seed: u64,
    events: Vec<Event>,
}

/// Materializes the clock rings of every vertex on `[0, horizon]`.
pub fn build_schedule(
    graph: &FiniteGraph,
    lambda: f64,
    horizon: f64,
    seed: u64,
) -> Result<ClockSchedule> {
    check_rates(lambda, horizon)?;
    let mut events = Vec::new();
    for v in 0..graph.vertex_count() as u32 {
        events.extend(VertexClock::new(seed, v, ClockKind::Heal, 1.0, horizon));
        events.extend(VertexClock::new(
            seed,
            v,
            ClockKind::Infect,
            lambda,
            horizon,
        ));
    }
    events.sort_unstable_by(Event::order);
    Ok(ClockSchedule {
        graph_fingerprint: graph.fingerprint(),
        vertex_count: graph.vertex_count(),
        lambda,
        horizon,
        seed,
        events,
    })
}

impl ClockSchedule {
    /// Schedule from explicit events, e.g. a hand-built replay. Events are
    /// sorted into the global order.
    pub fn from_events(
        graph: &FiniteGraph,
        lambda: f64,
        horizon: f64,
        mut events: Vec<Event>,
    ) -> Result<Self> {
        check_rates(lambda, horizon)?;
        for e in &events {
            if !graph.contains(e.vertex) || !(0.0..=horizon).contains(&e.time) {
                return Err(Error::InvalidArgument(format!("event {e:?} out of range")));
            }
        }
        events.sort_unstable_by(Event::order);
        Ok(ClockSchedule {
            graph_fingerprint: graph.fingerprint(),
            vertex_count: graph.vertex_count(),
            lambda,
            horizon,
            seed: 0,
            events,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn is_for(&self, graph: &FiniteGraph) -> bool {
        self.graph_fingerprint == graph.fingerprint()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// All events in global order.
    pub fn merged_events(&self) -> impl Iterator<Item = Event> + '_ {
        self.events.iter().copied()
    }

    /// Keeps each infect event with probability `lambda / self.lambda`, using
    /// a fixed uniform mark per event, so thinned schedules are nested in
    /// `lambda`.
    pub fn thinned(&self, lambda: f64) -> Result<ClockSchedule> {
        if !(0.0..=self.lambda).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "thinning rate {lambda} outside [0, {}]",
                self.lambda
            )));
        }
        let keep = if self.lambda > 0.0 {
            lambda / self.lambda
        } else {
            0.0
        };
        let events = self
            .events
            .iter()
            .copied()
            .filter(|e| e.kind == ClockKind::Heal || self.mark(e) < keep)
            .collect();
        Ok(ClockSchedule {
            lambda,
            events,
            ..self.clone()
        })
    }

    /// Uniform mark attached to an event, fixed by the schedule seed.
    pub fn mark(&self, e: &Event) -> f64 {
        rng::hashed_unit(rng::mix2(
            rng::mix2(self.seed, e.vertex.0 as u64),
            e.time.to_bits(),
        ))
    }

    const MAGIC: &'static [u8; 8] = b"TCCLOCKS";
    const VERSION: u32 = 1;

    /// Binary dump: 8-byte magic `TCCLOCKS`, u32 version, u32 reserved, then
    /// u64 vertex count, u64 graph fingerprint, f64 lambda, f64 horizon,
    /// u64 seed, u64 event count, followed by 16-byte records
    /// `(f64 time, u32 vertex, u8 kind, 3 zero bytes)`. All little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.vertex_count as u64).to_le_bytes())?;
        w.write_all(&self.graph_fingerprint.to_le_bytes())?;
        w.write_all(&self.lambda.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.events.len() as u64).to_le_bytes())?;
        for e in &self.events {
            w.write_all(&e.time.to_le_bytes())?;
            w.write_all(&e.vertex.0.to_le_bytes())?;
            w.write_all(&[e.kind as u8, 0, 0, 0])?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<ClockSchedule> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &take::<8, _>(&mut r)? != Self::MAGIC {
            return Err(Error::ScheduleFormat("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != Self::VERSION {
            return Err(Error::ScheduleFormat(format!(
                "unsupported version {version}"
            )));
        }
        let _reserved = take::<4, _>(&mut r)?;
        let vertex_count = u64::from_le_bytes(take(&mut r)?) as usize;
        let graph_fingerprint = u64::from_le_bytes(take(&mut r)?);
        let lambda = f64::from_le_bytes(take(&mut r)?);
        let horizon = f64::from_le_bytes(take(&mut r)?);
        let seed = u64::from_le_bytes(take(&mut r)?);
        let count = u64::from_le_bytes(take(&mut r)?) as usize;
        let mut events = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let time = f64::from_le_bytes(take(&mut r)?);
            let vertex = u32::from_le_bytes(take(&mut r)?);
            let tail = take::<4, _>(&mut r)?;
            let kind = match tail[0] {
                0 => ClockKind::Heal,
                1 => ClockKind::Infect,
                k => return Err(Error::ScheduleFormat(format!("bad kind byte {k}"))),
            };
            events.push(Event::new(time, vertex, kind));
        }
        Ok(ClockSchedule {
            graph_fingerprint,
            vertex_count,
            lambda,
            horizon,
            seed,
            events,
        })
    }
}

struct HeapEntry {
    event: Event,
    source: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // min-heap on the schedule order
    fn cmp(&self, other: &Self) -> Ordering {
        other.event.order(&self.event)
    }
}

/// Lazily merged per-vertex clocks; yields exactly the events of
/// [`build_schedule`] with the same arguments, in the same order, without
/// materializing them.
pub struct LazyEvents {
    clocks: Vec<VertexClock>,
    heap: BinaryHeap<HeapEntry>,
}

pub fn lazy_events(
    graph: &FiniteGraph,
    lambda: f64,
    horizon: f64,
    seed: u64,
) -> Result<LazyEvents> {
    check_rates(lambda, horizon)?;
    let mut clocks = Vec::with_capacity(2 * graph.vertex_count());
    for v in 0..graph.vertex_count() as u32 {
        clocks.push(VertexClock::new(seed, v, ClockKind::Heal, 1.0, horizon));
        clocks.push(VertexClock::new(
            seed,
            v,
            ClockKind::Infect,
            lambda,
            horizon,
        ));
    }
    let mut heap = BinaryHeap::with_capacity(clocks.len());
    for (source, c) in clocks.iter_mut().enumerate() {
        if let Some(event) = c.next() {
            heap.push(HeapEntry { event, source });
        }
    }
    Ok(LazyEvents { clocks, heap })
}

impl Iterator for LazyEvents {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let HeapEntry { event, source } = self.heap.pop()?;
        if let Some(next) = self.clocks[source].next() {
            self.heap.push(HeapEntry {
                event: next,
                source,
            });
        }
        Some(event)
    }
}

/// O(1)-per-event sampler for the superposition of all clocks: total rate
/// `V (1 + λ)`, uniform vertex, Heal with probability `1 / (1 + λ)`.
///
/// When built with [`SuperposedClocks::with_max_rate`], infect rings carry a
/// uniform mark; a sub-run at rate `λ' <= λ_max` accepts the ring iff
/// `mark < λ' / λ_max` (thinning coupling).
pub struct SuperposedClocks {
    rng: ChaCha8Rng,
    vertex_count: u64,
    total_rate: f64,
    heal_prob: f64,
    time: f64,
    horizon: f64,
}

impl SuperposedClocks {
    pub fn new(vertex_count: usize, lambda: f64, horizon: f64, rng: ChaCha8Rng) -> Self {
        SuperposedClocks {
            rng,
            vertex_count: vertex_count as u64,
            total_rate: vertex_count as f64 * (1.0 + lambda),
            heal_prob: 1.0 / (1.0 + lambda),
            time: 0.0,
            horizon,
        }
    }

    pub fn with_max_rate(
        vertex_count: usize,
        lambda_max: f64,
        horizon: f64,
        rng: ChaCha8Rng,
    ) -> Self {
        Self::new(vertex_count, lambda_max, horizon, rng)
    }

    /// Next event and its thinning mark (the mark is 0 for heal rings).
    #[inline]
    pub fn next_marked(&mut self) -> Option<(Event, f64)> {
        if self.vertex_count == 0 {
            return None;
        }
        self.time += rng::exponential(&mut self.rng, self.total_rate);
        if self.time > self.horizon {
            self.time = f64::INFINITY;
            return None;
        }
        let v = rng::index_below(&mut self.rng, self.vertex_count) as u32;
        let u = rng::open01(&mut self.rng);
        if u < self.heal_prob {
            Some((Event::new(self.time, v, ClockKind::Heal), 0.0))
        } else {
            // conditional on Infect, (u - p) / (1 - p) is uniform
            let mark = (u - self.heal_prob) / (1.0 - self.heal_prob);
            Some((Event::new(self.time, v, ClockKind::Infect), mark))
        }
    }

    pub fn rng_mut(&mut self) -> &mut impl RngCore {
        &mut self.rng
    }
}

impl Iterator for SuperposedClocks {
    type Item = Event;

    #[inline]
    fn next(&mut self) -> Option<Event> {
        self.next_marked().map(|(e, _)| e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_torus, build_tree, RootVariant};
    use crate::stats::{ks_p_value, ks_statistic};

    #[test]
    fn zero_horizon_is_empty() {
        let g = build_torus(2, 4).unwrap();
        let s = build_schedule(&g, 0.5, 0.0, 11).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.merged_events().count(), 0);
    }

    #[test]
    fn zero_lambda_has_only_heals() {
        let g = build_torus(2, 4).unwrap();
        let s = build_schedule(&g, 0.0, 5.0, 11).unwrap();
        assert!(!s.is_empty());
        assert!(s.events().iter().all(|e| e.kind == ClockKind::Heal));
    }

    #[test]
    fn negative_arguments_rejected() {
        let g = build_torus(1, 4).unwrap();
        assert!(build_schedule(&g, -0.1, 1.0, 0).is_err());
        assert!(build_schedule(&g, 0.1, -1.0, 0).is_err());
        assert!(build_schedule(&g, f64::NAN, 1.0, 0).is_err());
    }

    #[test]
    fn total_count_is_poisson() {
        let g = build_torus(2, 8).unwrap();
        let s = build_schedule(&g, 0.5, 10.0, 7).unwrap();
        let k = s.len() as f64;
        assert!((k - 960.0).abs() < 4.0 * 960f64.sqrt(), "count {k}");
    }

    #[test]
    fn single_vertex_heal_stream_is_increasing() {
        let g = build_tree(2, 0, RootVariant::SonOnly).unwrap();
        let s = build_schedule(&g, 0.0, 20.0, 3).unwrap();
        let times: Vec<f64> = s.merged_events().map(|e| e.time).collect();
        assert!(!times.is_empty());
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        let direct: Vec<f64> = VertexClock::new(3, 0, ClockKind::Heal, 1.0, 20.0)
            .map(|e| e.time)
            .collect();
        assert_eq!(times, direct);
    }

    #[test]
    fn determinism_and_order() {
        let g = build_torus(2, 5).unwrap();
        let a = build_schedule(&g, 0.7, 3.0, 99).unwrap();
        let b = build_schedule(&g, 0.7, 3.0, 99).unwrap();
        assert_eq!(a, b);
        assert!(a
            .events()
            .windows(2)
            .all(|w| w[0].order(&w[1]) == Ordering::Less));
        let c = build_schedule(&g, 0.7, 3.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lazy_merge_matches_materialized() {
        let g = build_torus(2, 6).unwrap();
        let a = build_schedule(&g, 0.4, 4.0, 5).unwrap();
        let lazy: Vec<Event> = lazy_events(&g, 0.4, 4.0, 5).unwrap().collect();
        assert_eq!(a.events(), &lazy[..]);
    }

    #[test]
    fn adding_vertices_keeps_streams() {
        let small = build_torus(1, 4).unwrap();
        let big = build_torus(1, 9).unwrap();
        let a = build_schedule(&small, 0.6, 5.0, 42).unwrap();
        let b = build_schedule(&big, 0.6, 5.0, 42).unwrap();
        let sub: Vec<Event> = b.merged_events().filter(|e| e.vertex.0 < 4).collect();
        assert_eq!(a.events(), &sub[..]);
    }

    #[test]
    fn binary_roundtrip_is_byte_identical() {
        let g = build_torus(2, 4).unwrap();
        let s = build_schedule(&g, 0.3, 2.0, 8).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"TCCLOCKS");
        assert_eq!(buf.len(), 64 + 16 * s.len());
        let back = ClockSchedule::read_binary(&buf[..]).unwrap();
        assert_eq!(back, s);
        let mut again = Vec::new();
        back.write_binary(&mut again).unwrap();
        assert_eq!(buf, again);
        buf[8] = 9;
        assert!(ClockSchedule::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn thinning_is_nested() {
        let g = build_torus(2, 5).unwrap();
        let s = build_schedule(&g, 1.0, 5.0, 1).unwrap();
        let lo = s.thinned(0.3).unwrap();
        let hi = s.thinned(0.6).unwrap();
        let heals = |x: &ClockSchedule| {
            x.events()
                .iter()
                .filter(|e| e.kind == ClockKind::Heal)
                .count()
        };
        assert_eq!(heals(&lo), heals(&s));
        for e in lo.events() {
            assert!(hi.events().contains(e));
        }
        assert!(lo.len() < hi.len());
        assert!(s.thinned(1.5).is_err());
    }

    // Per-clock inter-arrival times are exponential (KS at level 1e-3, 1e5 samples).
    #[test]
    fn inter_arrivals_are_exponential() {
        for (kind, rate) in [(ClockKind::Heal, 1.0), (ClockKind::Infect, 0.35)] {
            // one clock on a horizon far beyond 1e5 rings, so no gap is censored
            let mut last = 0.0;
            let mut gaps: Vec<f64> = VertexClock::new(17, 3, kind, rate, 1e9)
                .take(100_000)
                .map(|e| {
                    let g = e.time - last;
                    last = e.time;
                    g
                })
                .collect();
            assert_eq!(gaps.len(), 100_000);
            let d = ks_statistic(&mut gaps, |x| 1.0 - (-rate * x).exp());
            let p = ks_p_value(d, gaps.len());
            assert!(p > 1e-3, "{kind:?}: D = {d}, p = {p}");
        }
    }

    #[test]
    fn per_vertex_counts_within_four_sigma() {
        let g = build_torus(1, 200).unwrap();
        let (t, lambda) = (3.0, 0.4);
        let s = build_schedule(&g, lambda, t, 23).unwrap();
        let mut heal = vec![0u32; 200];
        let mut inf = vec![0u32; 200];
        for e in s.events() {
            match e.kind {
                ClockKind::Heal => heal[e.vertex.index()] += 1,
                ClockKind::Infect => inf[e.vertex.index()] += 1,
            }
        }
        let mean = |xs: &[u32]| xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64;
        let (mh, mi) = (mean(&heal), mean(&inf));
        assert!((mh - t).abs() < 4.0 * (t / 200.0).sqrt());
        assert!((mi - lambda * t).abs() < 4.0 * (lambda * t / 200.0).sqrt());
    }

    #[test]
    fn superposition_rates() {
        let mut clocks = SuperposedClocks::new(50, 0.5, 100.0, rng::replica_rng(4, 0));
        let mut heals = 0u64;
        let mut infects = 0u64;
        let mut last = 0.0;
        for e in &mut clocks {
            assert!(e.time >= last && e.vertex.0 < 50);
            last = e.time;
            match e.kind {
                ClockKind::Heal => heals += 1,
                ClockKind::Infect => infects += 1,
            }
        }
        assert!((heals as f64 - 5000.0).abs() < 4.0 * 5000f64.sqrt());
        assert!((infects as f64 - 2500.0).abs() < 4.0 * 2500f64.sqrt());
    }
}
