//! Dinic's blocking-flow algorithm on integer capacities.
//!
//! Arcs are stored in CSR order, grouped by tail and otherwise in insertion
//! order, so every traversal is a deterministic function of the input.
//! Unbounded arcs are flagged rather than given a large capacity; they never
//! saturate and never enter a bottleneck.

use std::collections::VecDeque;

use crate::error::FlowError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Capacity {
    Finite(u64),
    Unbounded,
}

impl Capacity {
    pub fn finite(self) -> Option<u64> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

const NONE: u32 = u32::MAX;
const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Arc {
    to: u32,
    rev: u32,
    residual: u64,
    unbounded: bool,
    /// Undirected edge this arc belongs to, `NONE` for terminal arcs.
    edge: u32,
    /// Whether traversing this arc moves flow from the edge's tail to its head.
    forward: bool,
}

struct PendingArc {
    from: u32,
    arc: Arc,
}

/// A flow network under construction.
pub struct NetworkBuilder {
    n: usize,
    pending: Vec<PendingArc>,
    finite_total: u64,
    overflow: bool,
    edges: usize,
}

impl NetworkBuilder {
    pub fn new(n: usize) -> Self {
        NetworkBuilder { n, pending: Vec::new(), finite_total: 0, overflow: false, edges: 0 }
    }

    fn account(&mut self, c: Capacity) {
        if let Capacity::Finite(c) = c {
            match self.finite_total.checked_add(c) {
                Some(t) => self.finite_total = t,
                None => self.overflow = true,
            }
        }
    }

    fn push_pair(&mut self, u: usize, v: usize, uv: Capacity, vu: Capacity, edge: u32) {
        let i = self.pending.len() as u32;
        let mk = |to: usize, rev: u32, c: Capacity, forward: bool| Arc {
            to: to as u32,
            rev,
            residual: c.finite().unwrap_or(0),
            unbounded: c == Capacity::Unbounded,
            edge,
            forward,
        };
        self.pending.push(PendingArc { from: u as u32, arc: mk(v, i + 1, uv, true) });
        self.pending.push(PendingArc { from: v as u32, arc: mk(u, i, vu, false) });
    }

    /// Undirected edge of capacity `c` between `tail` and `head`; its net
    /// flow is reported from `tail` to `head`.
    pub fn undirected(&mut self, tail: usize, head: usize, c: Capacity) -> usize {
        self.account(c);
        self.account(c);
        let id = self.edges;
        self.edges += 1;
        self.push_pair(tail, head, c, c, id as u32);
        id
    }

    /// Directed terminal arc.
    pub fn directed(&mut self, from: usize, to: usize, c: Capacity) {
        self.account(c);
        self.push_pair(from, to, c, Capacity::Finite(0), NONE);
    }

    pub fn build(self) -> Result<Network, FlowError> {
        // Residuals of reverse arcs may reach twice a capacity; net flows are i64.
        if self.overflow || self.finite_total > i64::MAX as u64 {
            return Err(FlowError::Overflow);
        }
        let mut start = vec![0u32; self.n + 1];
        for p in &self.pending {
            start[p.from as usize + 1] += 1;
        }
        for i in 0..self.n {
            start[i + 1] += start[i];
        }
        let mut pos: Vec<u32> = start[..self.n].to_vec();
        let mut slot = vec![0u32; self.pending.len()];
        for (i, p) in self.pending.iter().enumerate() {
            slot[i] = pos[p.from as usize];
            pos[p.from as usize] += 1;
        }
        let mut arcs: Vec<Option<Arc>> = vec![None; self.pending.len()];
        for (i, p) in self.pending.into_iter().enumerate() {
            let mut a = p.arc;
            a.rev = slot[a.rev as usize];
            arcs[slot[i] as usize] = Some(a);
        }
        Ok(Network {
            start,
            arcs: arcs.into_iter().map(|a| a.expect("every slot filled")).collect(),
            net: vec![0; self.edges],
        })
    }
}

pub struct Network {
    start: Vec<u32>,
    arcs: Vec<Arc>,
    net: Vec<i64>,
}

impl Network {
    fn n(&self) -> usize {
        self.start.len() - 1
    }

    fn tail_of(&self, a: usize) -> usize {
        self.arcs[self.arcs[a].rev as usize].to as usize
    }

    fn has_residual(&self, a: usize) -> bool {
        let arc = &self.arcs[a];
        arc.unbounded || arc.residual > 0
    }

    fn push(&mut self, a: usize, amount: u64) {
        let rev = self.arcs[a].rev as usize;
        if !self.arcs[a].unbounded {
            self.arcs[a].residual -= amount;
        }
        if !self.arcs[rev].unbounded {
            self.arcs[rev].residual += amount;
        }
        let arc = &self.arcs[a];
        if arc.edge != NONE {
            let signed = amount as i64;
            self.net[arc.edge as usize] += if arc.forward { signed } else { -signed };
        }
    }

    fn levels(&self, s: usize) -> Vec<u32> {
        let mut level = vec![UNREACHED; self.n()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for a in self.start[u] as usize..self.start[u + 1] as usize {
                let v = self.arcs[a].to as usize;
                if level[v] == UNREACHED && self.has_residual(a) {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Runs Dinic from `s` to `t` and returns the total flow pushed.
    pub fn max_flow(&mut self, s: usize, t: usize) -> Result<u64, FlowError> {
        let mut total: u64 = 0;
        loop {
            let mut level = self.levels(s);
            if level[t] == UNREACHED {
                return Ok(total);
            }
            let mut next: Vec<u32> = self.start[..self.n()].to_vec();
            let mut path: Vec<usize> = Vec::new();
            let mut u = s;
            loop {
                if u == t {
                    let bottleneck = path
                        .iter()
                        .filter(|&&a| !self.arcs[a].unbounded)
                        .map(|&a| self.arcs[a].residual)
                        .min()
                        .ok_or(FlowError::Unbounded)?;
                    for &a in &path {
                        self.push(a, bottleneck);
                    }
                    total = total.checked_add(bottleneck).ok_or(FlowError::Overflow)?;
                    let keep = path
                        .iter()
                        .position(|&a| !self.has_residual(a))
                        .expect("bottleneck arc saturates");
                    path.truncate(keep);
                    u = match path.last() {
                        Some(&a) => self.arcs[a].to as usize,
                        None => s,
                    };
                    continue;
                }
                let end = self.start[u + 1];
                let mut advanced = false;
                while next[u] < end {
                    let a = next[u] as usize;
                    let v = self.arcs[a].to as usize;
                    if level[v] != UNREACHED && level[v] == level[u] + 1 && self.has_residual(a) {
                        path.push(a);
                        u = v;
                        advanced = true;
                        break;
                    }
                    next[u] += 1;
                }
                if !advanced {
                    if u == s {
                        break;
                    }
                    level[u] = UNREACHED;
                    let a = path.pop().expect("non-source vertex is reached by an arc");
                    u = self.tail_of(a);
                    next[u] += 1;
                }
            }
        }
    }

    /// Vertices reachable from `s` in the residual network.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        self.levels(s).into_iter().map(|l| l != UNREACHED).collect()
    }

    /// Net flow on each undirected edge, tail to head.
    pub fn net_flows(&self) -> &[i64] {
        &self.net
    }
}
