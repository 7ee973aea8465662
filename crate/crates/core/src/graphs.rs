//! Finite graphs standing in for `Z^d` and the regular tree `T^n`.
//!
//! Vertices are dense `u32` indices. Torus vertices encode coordinates in
//! mixed radix with the first coordinate least significant, so vertex 0 is
//! the origin. Tree vertices are numbered level by level from the root
//! (vertex 0); tree adjacency is computed arithmetically rather than stored,
//! which keeps trees with tens of millions of vertices cheap to hold.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index into a [`FiniteGraph`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for Vertex {
    fn from(i: usize) -> Self {
        Vertex(u32::try_from(i).expect("vertex index exceeds u32"))
    }
}

/// How the root of a truncated tree is wired.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootVariant {
    /// Root has `n + 1` sons, so every interior vertex has degree `n + 1`.
    FullDegree,
    /// Root has `n` sons, matching the oriented branching process.
    SonOnly,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    Torus {
        d: usize,
        side: usize,
    },
    Tree {
        n: usize,
        depth: usize,
        root: RootVariant,
    },
    Custom,
}

#[derive(Clone, Debug)]
struct TreeLayout {
    n: u64,
    depth: usize,
    root: RootVariant,
    /// `level_start[k]` is the first vertex at depth `k`; the last entry is
    /// the vertex count.
    level_start: Vec<u64>,
}

impl TreeLayout {
    fn new(n: usize, depth: usize, root: RootVariant) -> Result<Self> {
        let n64 = n as u64;
        let mut level_start = vec![0u64];
        let mut size = 1u64;
        let mut total = 0u64;
        for level in 0..=depth {
            total = total
                .checked_add(size)
                .filter(|&t| t <= u32::MAX as u64)
                .ok_or(Error::ResourceLimit {
                    what: "tree vertex count",
                    value: u64::MAX,
                    limit: u32::MAX as u64,
                })?;
            level_start.push(total);
            let fan = if level == 0 && root == RootVariant::FullDegree {
                n64 + 1
            } else {
                n64
            };
            size = size.saturating_mul(fan);
        }
        Ok(TreeLayout {
            n: n64,
            depth,
            root,
            level_start,
        })
    }

    fn vertex_count(&self) -> u64 {
        self.level_start[self.depth + 1]
    }

    fn is_interior(&self, v: u64) -> bool {
        v < self.level_start[self.depth]
    }

    fn depth_of(&self, v: u64) -> usize {
        // level_start is strictly increasing
        self.level_start.partition_point(|&s| s <= v) - 1
    }

    fn parent(&self, v: u64) -> Option<u64> {
        if v == 0 {
            return None;
        }
        Some(match self.root {
            RootVariant::SonOnly => (v - 1) / self.n,
            RootVariant::FullDegree => {
                if v <= self.n + 1 {
                    0
                } else {
                    (v - 2) / self.n
                }
            }
        })
    }

    fn sons(&self, v: u64) -> Range<u64> {
        if !self.is_interior(v) {
            return v..v;
        }
        match self.root {
            RootVariant::SonOnly => self.n * v + 1..self.n * v + 1 + self.n,
            RootVariant::FullDegree => {
                if v == 0 {
                    1..self.n + 2
                } else {
                    self.n * v + 2..self.n * v + 2 + self.n
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Csr {
        offsets: Vec<usize>,
        targets: Vec<Vertex>,
    },
    Tree(TreeLayout),
}

/// Immutable simple undirected graph.
#[derive(Clone, Debug)]
pub struct FiniteGraph {
    kind: GraphKind,
    vertex_count: usize,
    storage: Storage,
    regular_degree: Option<usize>,
}

/// Iterator over the sorted neighbors of a vertex.
#[derive(Clone, Debug)]
pub enum Neighbors<'a> {
    Slice(std::slice::Iter<'a, Vertex>),
    Tree {
        parent: Option<u32>,
        sons: Range<u32>,
    },
}

impl Iterator for Neighbors<'_> {
    type Item = Vertex;

    #[inline]
    fn next(&mut self) -> Option<Vertex> {
        match self {
            Neighbors::Slice(it) => it.next().copied(),
            Neighbors::Tree { parent, sons } => match parent.take() {
                Some(p) => Some(Vertex(p)),
                None => sons.next().map(Vertex),
            },
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = match self {
            Neighbors::Slice(it) => it.len(),
            Neighbors::Tree { parent, sons } => parent.is_some() as usize + sons.len(),
        };
        (n, Some(n))
    }
}

impl ExactSizeIterator for Neighbors<'_> {}

/// Builds the `(Z/L)^d` torus. Requires `d >= 1`, `L >= 3`.
pub fn build_torus(d: usize, side: usize) -> Result<FiniteGraph> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "torus dimension must be >= 1".into(),
        ));
    }
    if side < 3 {
        return Err(Error::InvalidArgument(format!(
            "torus side {side} < 3 would create multi-edges"
        )));
    }
    let count = (side as u64)
        .checked_pow(d as u32)
        .filter(|&c| c <= u32::MAX as u64)
        .ok_or(Error::ResourceLimit {
            what: "torus vertex count",
            value: u64::MAX,
            limit: u32::MAX as u64,
        })? as usize;
    let degree = 2 * d;
    let mut offsets = Vec::with_capacity(count + 1);
    let mut targets = Vec::with_capacity(count * degree);
    let mut coords = vec![0usize; d];
    offsets.push(0);
    for v in 0..count {
        let start = targets.len();
        let mut stride = 1usize;
        for &c in &coords {
            let up = (c + 1) % side;
            let down = (c + side - 1) % side;
            targets.push(Vertex::from(v - c * stride + up * stride));
            targets.push(Vertex::from(v - c * stride + down * stride));
            stride *= side;
        }
        targets[start..].sort_unstable();
        offsets.push(targets.len());
        // advance mixed-radix counter
        for c in coords.iter_mut() {
            *c += 1;
            if *c < side {
                break;
            }
            *c = 0;
        }
    }
    Ok(FiniteGraph {
        kind: GraphKind::Torus { d, side },
        vertex_count: count,
        storage: Storage::Csr { offsets, targets },
        regular_degree: Some(degree),
    })
}

/// Builds a depth-truncated rooted tree in which interior vertices have `n`
/// sons (the root has `n + 1` under [`RootVariant::FullDegree`]).
pub fn build_tree(n: usize, depth: usize, root: RootVariant) -> Result<FiniteGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "tree branching n must be >= 2".into(),
        ));
    }
    let layout = TreeLayout::new(n, depth, root)?;
    let regular_degree = match depth {
        0 => Some(0),
        _ => None,
    };
    Ok(FiniteGraph {
        kind: GraphKind::Tree { n, depth, root },
        vertex_count: layout.vertex_count() as usize,
        storage: Storage::Tree(layout),
        regular_degree,
    })
}

impl FiniteGraph {
    /// Builds a graph from an undirected edge list, rejecting self-loops and
    /// repeated edges.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count == 0 || vertex_count > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "vertex count {vertex_count} out of range"
            )));
        }
        let mut lists: Vec<Vec<Vertex>> = vec![Vec::new(); vertex_count];
        for &(a, b) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range"
                )));
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at {a}")));
            }
            lists[a].push(Vertex::from(b));
            lists[b].push(Vertex::from(a));
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (v, mut list) in lists.into_iter().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "repeated edge at vertex {v}"
                )));
            }
            targets.extend(list);
            offsets.push(targets.len());
        }
        let d0 = offsets[1] - offsets[0];
        let regular = offsets.windows(2).all(|w| w[1] - w[0] == d0);
        Ok(FiniteGraph {
            kind: GraphKind::Custom,
            vertex_count,
            storage: Storage::Csr { offsets, targets },
            regular_degree: regular.then_some(d0),
        })
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn contains(&self, x: Vertex) -> bool {
        x.index() < self.vertex_count
    }

    #[inline]
    pub fn neighbors(&self, x: Vertex) -> Neighbors<'_> {
        match &self.storage {
            Storage::Csr { offsets, targets } => {
                let i = x.index();
                Neighbors::Slice(targets[offsets[i]..offsets[i + 1]].iter())
            }
            Storage::Tree(t) => {
                let v = x.0 as u64;
                let sons = t.sons(v);
                Neighbors::Tree {
                    parent: t.parent(v).map(|p| p as u32),
                    sons: sons.start as u32..sons.end as u32,
                }
            }
        }
    }

    #[inline]
    pub fn degree(&self, x: Vertex) -> usize {
        match &self.storage {
            Storage::Csr { offsets, .. } => offsets[x.index() + 1] - offsets[x.index()],
            Storage::Tree(t) => {
                let v = x.0 as u64;
                (v != 0) as usize + (t.sons(v).end - t.sons(v).start) as usize
            }
        }
    }

    /// Common degree when every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        self.regular_degree
    }

    /// Oriented sons of `x`; `None` for graphs that are not trees.
    pub fn oriented_sons(&self, x: Vertex) -> Option<Range<u32>> {
        match &self.storage {
            Storage::Tree(t) => {
                let r = t.sons(x.0 as u64);
                Some(r.start as u32..r.end as u32)
            }
            Storage::Csr { .. } => None,
        }
    }

    /// Oriented parent of `x` on trees.
    pub fn parent(&self, x: Vertex) -> Option<Vertex> {
        match &self.storage {
            Storage::Tree(t) => t.parent(x.0 as u64).map(|p| Vertex(p as u32)),
            Storage::Csr { .. } => None,
        }
    }

    /// Distance from the root on trees.
    pub fn tree_depth_of(&self, x: Vertex) -> Option<usize> {
        match &self.storage {
            Storage::Tree(t) => Some(t.depth_of(x.0 as u64)),
            Storage::Csr { .. } => None,
        }
    }

    /// Torus coordinates of `x` (first coordinate least significant).
    pub fn torus_coords(&self, x: Vertex) -> Option<Vec<usize>> {
        let GraphKind::Torus { d, side } = self.kind else {
            return None;
        };
        let mut rest = x.index();
        let mut out = Vec::with_capacity(d);
        for _ in 0..d {
            out.push(rest % side);
            rest /= side;
        }
        Some(out)
    }

    /// Inverse of [`torus_coords`](Self::torus_coords); coordinates are reduced mod `L`.
    pub fn torus_vertex(&self, coords: &[i64]) -> Option<Vertex> {
        let GraphKind::Torus { d, side } = self.kind else {
            return None;
        };
        if coords.len() != d {
            return None;
        }
        let mut idx = 0usize;
        for &c in coords.iter().rev() {
            idx = idx * side + c.rem_euclid(side as i64) as usize;
        }
        Some(Vertex::from(idx))
    }

    /// Stable identity used to tie schedules to the graph they were built for.
    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::rng::mix64(self.vertex_count as u64);
        match self.kind {
            GraphKind::Torus { d, side } => {
                h = crate::rng::mix2(h, 1);
                h = crate::rng::mix2(h, d as u64);
                h = crate::rng::mix2(h, side as u64);
            }
            GraphKind::Tree { n, depth, root } => {
                h = crate::rng::mix2(h, 2);
                h = crate::rng::mix2(h, n as u64);
                h = crate::rng::mix2(h, depth as u64);
                h = crate::rng::mix2(h, root as u64);
            }
            GraphKind::Custom => {
                h = crate::rng::mix2(h, 3);
                for v in 0..self.vertex_count {
                    for y in self.neighbors(Vertex::from(v)) {
                        h = crate::rng::mix2(h, ((v as u64) << 32) | y.0 as u64);
                    }
                }
            }
        }
        h
    }

    /// Exhaustive check of simplicity and symmetry. Linear in the edge count.
    pub fn check_simple_symmetric(&self) -> Result<()> {
        for v in 0..self.vertex_count {
            let x = Vertex::from(v);
            let nb: Vec<Vertex> = self.neighbors(x).collect();
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "neighbors of {v} not strictly sorted"
                )));
            }
            for y in nb {
                if y == x {
                    return Err(Error::InvalidArgument(format!("self-loop at {v}")));
                }
                if !self.contains(y) || !self.neighbors(y).any(|z| z == x) {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetric edge {v} -> {}",
                        y.0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parsed form of the CLI graph strings `torus:d=2,L=32` and
/// `tree:n=3,depth=10,root=son_only`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Torus {
        d: usize,
        side: usize,
    },
    Tree {
        n: usize,
        depth: usize,
        root: RootVariant,
    },
}

impl GraphSpec {
    pub fn build(&self) -> Result<FiniteGraph> {
        match *self {
            GraphSpec::Torus { d, side } => build_torus(d, side),
            GraphSpec::Tree { n, depth, root } => build_tree(n, depth, root),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::GraphSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (family, params) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let mut d = None;
        let mut side = None;
        let mut n = None;
        let mut depth = None;
        let mut root = RootVariant::FullDegree;
        for kv in params.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            let num = || v.trim().parse::<usize>().map_err(|_| bad("bad integer"));
            match (family, k.trim()) {
                ("torus", "d") => d = Some(num()?),
                ("torus", "L") => side = Some(num()?),
                ("tree", "n") => n = Some(num()?),
                ("tree", "depth") => depth = Some(num()?),
                ("tree", "root") => {
                    root = match v.trim() {
                        "son_only" => RootVariant::SonOnly,
                        "full_degree" | "full" => RootVariant::FullDegree,
                        _ => return Err(bad("root must be son_only or full_degree")),
                    }
                }
                _ => return Err(bad(&format!("unknown key {k}"))),
            }
        }
        match family {
            "torus" => Ok(GraphSpec::Torus {
                d: d.ok_or_else(|| bad("missing d"))?,
                side: side.ok_or_else(|| bad("missing L"))?,
            }),
            "tree" => Ok(GraphSpec::Tree {
                n: n.ok_or_else(|| bad("missing n"))?,
                depth: depth.ok_or_else(|| bad("missing depth"))?,
                root,
            }),
            _ => Err(bad("family must be torus or tree")),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Torus { d, side } => write!(f, "torus:d={d},L={side}"),
            GraphSpec::Tree { n, depth, root } => {
                let r = match root {
                    RootVariant::FullDegree => "full_degree",
                    RootVariant::SonOnly => "son_only",
                };
                write!(f, "tree:n={n},depth={depth},root={r}")
            }
        }
    }
}
