//! Streams through a box, the maximal flow `φ_B` from `F_0` to `F_m` with its
//! min-cut certificate, and unit-path decompositions in the parallel-edge
//! graph `G`.
//!
//! The solver attaches an artificial source to every vertex of `F_0` and an
//! artificial sink to every vertex of `F_m`, both through unbounded arcs.

pub mod solver;

use serde::{Deserialize, Serialize};

use crate::capacity::{check_level, CapacityField};
use crate::error::FlowError;
use crate::lattice::{BoxGraph, BoxSpec, OrientedEdge, Point};
pub use solver::Capacity;
use solver::{Network, NetworkBuilder};

/// A stream `(g, o)`: amounts in `1/R` units and orientations, one per edge id
/// of `scope`. `forward[e]` means `o(e)` runs from the edge's lexicographically
/// smaller endpoint to the larger one, which is also the default orientation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    scope: BoxSpec,
    resolution: u64,
    g: Vec<u64>,
    forward: Vec<bool>,
}

impl Stream {
    pub fn zero(graph: &BoxGraph, resolution: u64) -> Self {
        let m = graph.num_edges();
        Stream { scope: graph.spec().clone(), resolution, g: vec![0; m], forward: vec![true; m] }
    }

    pub fn new(scope: BoxSpec, resolution: u64, g: Vec<u64>, forward: Vec<bool>) -> Self {
        Stream { scope, resolution, g, forward }
    }

    /// Stream from signed net amounts, positive meaning tail to head.
    pub fn from_net(scope: BoxSpec, resolution: u64, net: &[i64]) -> Self {
        Stream {
            scope,
            resolution,
            g: net.iter().map(|x| x.unsigned_abs()).collect(),
            forward: net.iter().map(|&x| x >= 0).collect(),
        }
    }

    pub fn scope(&self) -> &BoxSpec {
        &self.scope
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn amounts(&self) -> &[u64] {
        &self.g
    }

    pub fn g(&self, e: usize) -> u64 {
        self.g[e]
    }

    pub fn is_forward(&self, e: usize) -> bool {
        self.forward[e]
    }

    /// Signed amount along the edge, tail to head.
    pub fn net(&self, e: usize) -> i64 {
        if self.forward[e] {
            self.g[e] as i64
        } else {
            -(self.g[e] as i64)
        }
    }

    pub fn set(&mut self, e: usize, g: u64, forward: bool) {
        self.g[e] = g;
        self.forward[e] = forward;
    }

    pub fn orientation(&self, graph: &BoxGraph, e: usize) -> OrientedEdge {
        let o = graph.edge(e).default_orientation();
        if self.forward[e] {
            o
        } else {
            o.reversed()
        }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

/// An edge set with its total capacity `V(E)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSet {
    pub edges: Vec<usize>,
    pub weight: u64,
}

impl CutSet {
    pub fn from_edges(field: &CapacityField, mut edges: Vec<usize>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let weight = edges.iter().map(|&e| field.get(e)).sum();
        CutSet { edges, weight }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxFlowResult {
    pub value: u64,
    pub stream: Stream,
    pub min_cut: CutSet,
    /// Residual-reachable side, indexed by vertex of the box closure.
    pub source_side: Vec<bool>,
}

/// Raw solver outcome over arbitrary per-edge capacities.
pub(crate) struct Solved {
    pub value: u64,
    pub net: Vec<i64>,
    pub source_side: Vec<bool>,
    pub cut_edges: Vec<usize>,
}

pub(crate) fn solve(graph: &BoxGraph, caps: &[Capacity]) -> Result<Solved, FlowError> {
    if caps.len() != graph.num_edges() {
        return Err(FlowError::Shape(format!("{} capacities for {} edges", caps.len(), graph.num_edges())));
    }
    let nv = graph.num_vertices();
    let (s, t) = (nv, nv + 1);
    let mut b = NetworkBuilder::new(nv + 2);
    for (e, &c) in caps.iter().enumerate() {
        let (u, v) = graph.ends(e);
        b.undirected(u, v, c);
    }
    for v in 0..nv {
        if graph.is_bottom(v) {
            b.directed(s, v, Capacity::Unbounded);
        } else if graph.is_top(v) {
            b.directed(v, t, Capacity::Unbounded);
        }
    }
    let mut net: Network = b.build()?;
    let value = net.max_flow(s, t)?;
    let reach = net.residual_reachable(s);
    let cut_edges = (0..graph.num_edges())
        .filter(|&e| {
            let (u, v) = graph.ends(e);
            reach[u] != reach[v]
        })
        .collect();
    Ok(Solved { value, net: net.net_flows().to_vec(), source_side: reach[..nv].to_vec(), cut_edges })
}

/// `φ_B` with a realizing stream and the canonical min cut (edges leaving the
/// residual-reachable side).
pub fn max_flow(graph: &BoxGraph, field: &CapacityField) -> Result<MaxFlowResult, FlowError> {
    field.check_shape(graph)?;
    let caps: Vec<Capacity> = field.units().iter().map(|&c| Capacity::Finite(c)).collect();
    let solved = solve(graph, &caps)?;
    let stream = Stream::from_net(graph.spec().clone(), field.resolution(), &solved.net);
    let min_cut = CutSet::from_edges(field, solved.cut_edges);
    debug_assert_eq!(min_cut.weight, solved.value);
    Ok(MaxFlowResult { value: solved.value, stream, min_cut, source_side: solved.source_side })
}

pub fn max_flow_value(graph: &BoxGraph, field: &CapacityField) -> Result<u64, FlowError> {
    Ok(max_flow(graph, field)?.value)
}

/// `flow(g, o)`: net amount entering `F_m` from `B ∖ F_m`. For a box of
/// height one that set is empty and the net amount leaving `F_0` is used
/// instead.
pub fn flow_value(graph: &BoxGraph, stream: &Stream) -> i64 {
    let m = graph.spec().height();
    let layer = if m >= 2 { m - 1 } else { 0 };
    (0..graph.spec().base_area())
        .filter_map(|x| graph.vertical_edge(x, layer))
        .map(|e| stream.net(e))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    Shape { expected: usize, got: usize },
    Capacity { edge: usize, flow: u64, capacity: u64 },
    /// Inflow minus outflow at a vertex of `B ∖ F_m`.
    Balance { vertex: Point, surplus: i64 },
}

/// Signed inflow minus outflow of every closure vertex.
fn surpluses(graph: &BoxGraph, stream: &Stream) -> Vec<i64> {
    let mut surplus = vec![0i64; graph.num_vertices()];
    for e in 0..graph.num_edges() {
        let (u, v) = graph.ends(e);
        let x = stream.net(e);
        surplus[u] -= x;
        surplus[v] += x;
    }
    surplus
}

fn balance_violations(graph: &BoxGraph, stream: &Stream) -> Vec<Violation> {
    surpluses(graph, stream)
        .into_iter()
        .enumerate()
        .filter(|&(v, s)| s != 0 && !graph.is_bottom(v) && !graph.is_top(v))
        .map(|(v, surplus)| Violation::Balance { vertex: graph.point(v), surplus })
        .collect()
}

/// Every capacity and balance violation of `stream`; empty when valid.
pub fn validate_stream(graph: &BoxGraph, field: &CapacityField, stream: &Stream) -> Vec<Violation> {
    let m = graph.num_edges();
    if field.len() != m || stream.len() != m || stream.scope() != graph.spec() {
        let got = if field.len() != m { field.len() } else { stream.len() };
        return vec![Violation::Shape { expected: m, got }];
    }
    let mut out: Vec<Violation> = (0..m)
        .filter(|&e| stream.g(e) > field.get(e))
        .map(|e| Violation::Capacity { edge: e, flow: stream.g(e), capacity: field.get(e) })
        .collect();
    out.extend(balance_violations(graph, stream));
    out
}

/// One copy `ẽ_copy` of edge `edge` in `G`, traversed tail to head when
/// `forward`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitArc {
    pub edge: usize,
    pub copy: u64,
    pub forward: bool,
}

/// A unit-capacity path of `G` from a vertex of `F_0` to a vertex of `F_m`
/// whose intermediate vertices avoid both faces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitPath {
    pub start: usize,
    pub arcs: Vec<UnitArc>,
}

impl UnitPath {
    /// Vertex sequence, starting at `start`.
    pub fn vertices(&self, graph: &BoxGraph) -> Vec<usize> {
        let mut out = vec![self.start];
        for a in &self.arcs {
            let (t, h) = graph.ends(a.edge);
            out.push(if a.forward { h } else { t });
        }
        out
    }

    pub fn end(&self, graph: &BoxGraph) -> usize {
        *self.vertices(graph).last().unwrap()
    }
}

fn check_discrete(graph: &BoxGraph, stream: &Stream, k: u64) -> Result<u64, FlowError> {
    check_level(k, stream.resolution())?;
    if stream.scope() != graph.spec() || stream.len() != graph.num_edges() {
        return Err(FlowError::Shape("stream does not cover the box".into()));
    }
    let step = stream.resolution() / k;
    if let Some(e) = (0..stream.len()).find(|&e| stream.g(e) % step != 0) {
        return Err(FlowError::NotDiscrete { edge: e, units: stream.g(e), step });
    }
    if let Some(v) = balance_violations(graph, stream).first() {
        return Err(FlowError::InvalidStream(format!("{v:?}")));
    }
    Ok(step)
}

/// Decomposes a level-`k` stream into `k · flow / R` edge-disjoint unit paths
/// of `G`. Cycles and any flow returning to `F_0` are discarded.
pub fn decompose_paths(graph: &BoxGraph, stream: &Stream, k: u64) -> Result<Vec<UnitPath>, FlowError> {
    let step = check_discrete(graph, stream, k)?;
    let value = flow_value(graph, stream);
    if value < 0 {
        return Err(FlowError::InvalidStream(format!("negative flow {value}")));
    }
    let wanted = (value as u64 / step) as usize;

    let nv = graph.num_vertices();
    let mut remaining: Vec<u64> = stream.amounts().iter().map(|g| g / step).collect();
    let mut used = vec![0u64; graph.num_edges()];
    // Outgoing edges per vertex, along the stream's orientation, by edge id.
    let mut out_start = vec![0usize; nv + 1];
    let flow_tail = |e: usize| {
        let (t, h) = graph.ends(e);
        if stream.is_forward(e) {
            (t, h)
        } else {
            (h, t)
        }
    };
    for e in 0..graph.num_edges() {
        if remaining[e] > 0 {
            out_start[flow_tail(e).0 + 1] += 1;
        }
    }
    for v in 0..nv {
        out_start[v + 1] += out_start[v];
    }
    let mut fill = out_start.clone();
    let mut out_edges = vec![0usize; out_start[nv]];
    for e in 0..graph.num_edges() {
        if remaining[e] > 0 {
            let t = flow_tail(e).0;
            out_edges[fill[t]] = e;
            fill[t] += 1;
        }
    }
    let mut cursor: Vec<usize> = out_start[..nv].to_vec();
    let mut next_arc = |v: usize, remaining: &mut [u64]| -> Option<usize> {
        while cursor[v] < out_start[v + 1] {
            let e = out_edges[cursor[v]];
            if remaining[e] > 0 {
                return Some(e);
            }
            cursor[v] += 1;
        }
        None
    };

    let mut on_path: Vec<Option<usize>> = vec![None; nv];
    let mut paths = Vec::new();
    for start in (0..nv).filter(|&v| graph.is_bottom(v)) {
        while let Some(first) = next_arc(start, &mut remaining) {
            let mut verts = vec![start];
            let mut arcs: Vec<UnitArc> = Vec::new();
            on_path[start] = Some(0);
            let mut e = first;
            let complete = loop {
                remaining[e] -= 1;
                let copy = used[e];
                used[e] += 1;
                let (from, to) = flow_tail(e);
                debug_assert_eq!(from, *verts.last().unwrap());
                let forward = stream.is_forward(e);
                if graph.is_bottom(to) {
                    break false;
                }
                if let Some(i) = on_path[to] {
                    for &w in &verts[i + 1..] {
                        on_path[w] = None;
                    }
                    verts.truncate(i + 1);
                    arcs.truncate(i);
                } else {
                    arcs.push(UnitArc { edge: e, copy, forward });
                    verts.push(to);
                    if graph.is_top(to) {
                        break true;
                    }
                    on_path[to] = Some(verts.len() - 1);
                }
                let here = *verts.last().unwrap();
                e = match next_arc(here, &mut remaining) {
                    Some(e) => e,
                    None => return Err(FlowError::InvalidStream(format!("walk stuck at {}", graph.point(here)))),
                };
            };
            for &w in &verts {
                on_path[w] = None;
            }
            if complete {
                paths.push(UnitPath { start, arcs });
            }
        }
    }
    if paths.len() < wanted {
        return Err(FlowError::InvalidStream(format!("found {} paths, expected {wanted}", paths.len())));
    }
    paths.truncate(wanted);
    Ok(paths)
}

/// The level-`k` stream carrying one `R/k` unit along each path.
pub fn stream_from_paths(graph: &BoxGraph, resolution: u64, k: u64, paths: &[UnitPath]) -> Result<Stream, FlowError> {
    check_level(k, resolution)?;
    let step = (resolution / k) as i64;
    let mut net = vec![0i64; graph.num_edges()];
    for p in paths {
        for a in &p.arcs {
            net[a.edge] += if a.forward { step } else { -step };
        }
    }
    Ok(Stream::from_net(graph.spec().clone(), resolution, &net))
}

/// Maximal number of edge-disjoint open paths from `F_0` to `F_m` on a field
/// whose capacities are all `0` or `R` (Menger's theorem read through
/// max-flow min-cut).
pub fn menger_count(graph: &BoxGraph, field: &CapacityField) -> Result<u64, FlowError> {
    let r = field.resolution();
    if let Some(e) = (0..field.len()).find(|&e| field.get(e) != 0 && field.get(e) != r) {
        return Err(FlowError::NotZeroOne { edge: e, units: field.get(e) });
    }
    Ok(max_flow_value(graph, field)? / r)
}

/// Whether removing `removed` disconnects `F_0` from `F_m` inside the box.
pub fn separates(graph: &BoxGraph, removed: &[bool]) -> bool {
    let nv = graph.num_vertices();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in 0..graph.num_edges() {
        if !removed[e] {
            let (u, v) = graph.ends(e);
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut seen = vec![false; nv];
    let mut stack: Vec<usize> = (0..nv).filter(|&v| graph.is_bottom(v)).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(u) = stack.pop() {
        if graph.is_top(u) {
            return false;
        }
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}
