//! Brute-force references for the acceptance run.

use std::collections::{HashSet, VecDeque};

use fpp_core::capacity::{CapacityField, DistributionSpec};
use fpp_core::rng::mix64;
use fpp_core::{BoxGraph, Exact, Stream};

pub const R: u64 = 1 << 20;

pub struct Dice(u64);

impl Dice {
    pub fn new(seed: u64) -> Self {
        Dice(mix64(seed ^ 0xACCE_0000))
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.0 = mix64(self.0.wrapping_add(0x9E37_79B9_7F4A_7C15));
        self.0 % bound
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below((hi - lo + 1) as u64) as usize
    }
}

pub fn mixed_law(pick: u64) -> DistributionSpec {
    match pick % 5 {
        0 => DistributionSpec::bernoulli(Exact::ratio(7, 10), 0.0, 1.0),
        1 => DistributionSpec::Uniform { a: 0.0, b: 3.0 },
        2 => DistributionSpec::Exponential { rate: 1.5 },
        3 => DistributionSpec::HalfNormal { sigma: 1.0 },
        _ => DistributionSpec::bernoulli(Exact::ratio(1, 4), 0.5, 2.0),
    }
}

pub fn bernoulli_09() -> DistributionSpec {
    DistributionSpec::bernoulli(Exact::ratio(9, 10), 0.0, 1.0)
}

/// Vertices reachable from the bottom face through edges not in `removed`.
pub fn reaches_top(g: &BoxGraph, removed: &HashSet<usize>) -> bool {
    let nv = g.num_vertices();
    let mut adj = vec![Vec::new(); nv];
    for e in 0..g.num_edges() {
        if !removed.contains(&e) {
            let (u, v) = g.ends(e);
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut seen = vec![false; nv];
    let mut queue: VecDeque<usize> = (0..nv).filter(|&v| g.is_bottom(v)).collect();
    for &v in &queue {
        seen[v] = true;
    }
    while let Some(u) = queue.pop_front() {
        if g.is_top(u) {
            return true;
        }
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Capacity and balance of a stream checked edge by edge; returns the net
/// amount entering the top face.
pub fn checked_flow(g: &BoxGraph, caps: &CapacityField, s: &Stream) -> Result<i64, String> {
    let mut surplus = vec![0i64; g.num_vertices()];
    for e in 0..g.num_edges() {
        if s.g(e) > caps.get(e) {
            return Err(format!("edge {e} over capacity"));
        }
        let (u, v) = g.ends(e);
        let net = if s.is_forward(e) { s.g(e) as i64 } else { -(s.g(e) as i64) };
        surplus[u] -= net;
        surplus[v] += net;
    }
    let mut into_top = 0;
    for v in 0..g.num_vertices() {
        if g.is_top(v) {
            into_top += surplus[v];
        } else if !g.is_bottom(v) && surplus[v] != 0 {
            return Err(format!("vertex {v} unbalanced by {}", surplus[v]));
        }
    }
    Ok(into_top)
}

/// Largest family of pairwise edge-disjoint open bottom-to-top paths, by
/// listing every simple path and searching all packings.
pub fn brute_force_paths(g: &BoxGraph, open: &[bool]) -> u64 {
    let nv = g.num_vertices();
    let mut adj = vec![Vec::new(); nv];
    for e in 0..g.num_edges() {
        if open[e] {
            let (u, v) = g.ends(e);
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
    }
    let mut paths: HashSet<u64> = HashSet::new();
    fn walk(g: &BoxGraph, adj: &[Vec<(usize, usize)>], v: usize, seen: &mut Vec<bool>, used: u64, out: &mut HashSet<u64>) {
        if g.is_top(v) {
            out.insert(used);
            return;
        }
        for &(w, e) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                walk(g, adj, w, seen, used | 1 << e, out);
                seen[w] = false;
            }
        }
    }
    for v in (0..nv).filter(|&v| g.is_bottom(v)) {
        let mut seen = vec![false; nv];
        seen[v] = true;
        walk(g, &adj, v, &mut seen, 0, &mut paths);
    }
    let paths: Vec<u64> = paths.into_iter().collect();
    fn pack(paths: &[u64], used: u64) -> u64 {
        match paths.split_first() {
            None => 0,
            Some((&p, rest)) => {
                let skip = pack(rest, used);
                if p & used == 0 {
                    skip.max(1 + pack(rest, used | p))
                } else {
                    skip
                }
            }
        }
    }
    pack(&paths, 0)
}

pub fn zero_one_field(open: &[bool]) -> CapacityField {
    CapacityField::from_units(R, open.iter().map(|&o| if o { R } else { 0 }).collect()).unwrap()
}
