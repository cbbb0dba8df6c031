//! Seeded property suite: max-flow duality, Menger counts against a
//! brute-force path packing, cut subadditivity, side-by-side superadditivity,
//! the discretization sandwich, junctions, and the `q_μ` identity.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::capacity::{discretize, sample_field, sample_graph_field, DistributionSpec};
use crate::cuts::{check_subadditivity, slab_spec};
use crate::error::EstimateError;
use crate::estimators::{exact_tail_probability, par_map};
use crate::flow::{max_flow, max_flow_value, menger_count, separates, validate_stream};
use crate::junction::{join_streams, mirrored_pair, target_units};
use crate::lattice::{BoxGraph, BoxSpec, RectSpec};
use crate::rational::Exact;
use crate::rng::{mix64, replica_seed};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub duality: u64,
    pub menger: u64,
    pub subadditivity: u64,
    pub superadditivity: u64,
    pub sandwich: u64,
    pub junction: u64,
    pub resolution: u64,
    pub budget: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            duality: 200,
            menger: 100,
            subadditivity: 500,
            superadditivity: 200,
            sandwich: 200,
            junction: 100,
            resolution: crate::capacity::DEFAULT_RESOLUTION,
            budget: crate::estimators::DEFAULT_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub trials: u64,
    pub violations: u64,
    /// Replica index of the first violation.
    pub first_violation: Option<u64>,
}

/// Draws in `[0, bound)` from a trial seed.
struct Dice(u64);

impl Dice {
    fn roll(&mut self, bound: u64) -> u64 {
        self.0 = mix64(self.0.wrapping_add(0x9E37_79B9_7F4A_7C15));
        self.0 % bound
    }

    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.roll(hi - lo + 1)
    }
}

fn mixed_law(pick: u64) -> DistributionSpec {
    match pick % 4 {
        0 => DistributionSpec::bernoulli(Exact::ratio(1, 2), 0.0, 1.0),
        1 => DistributionSpec::Uniform { a: 0.0, b: 2.0 },
        2 => DistributionSpec::Exponential { rate: 1.0 },
        _ => DistributionSpec::HalfNormal { sigma: 1.0 },
    }
}

fn tally(
    name: &str,
    trials: u64,
    seed: u64,
    workers: usize,
    check: impl Fn(u64, u64, &mut Dice) -> Result<bool, EstimateError> + Sync + Send,
) -> Result<PropertyReport, EstimateError> {
    let salt = name.bytes().fold(0u64, |h, b| mix64(h ^ b as u64));
    let ok = par_map(trials, workers, |i| {
        let s = replica_seed(seed ^ salt, i);
        check(i, s, &mut Dice(s))
    })?;
    let violations = ok.iter().filter(|&&x| !x).count() as u64;
    Ok(PropertyReport {
        property: name.into(),
        trials,
        violations,
        first_violation: ok.iter().position(|&x| !x).map(|i| i as u64),
    })
}

/// Largest number of edge-disjoint paths from the bottom to the top face
/// using only edges with `open[e]`, by exhaustive search over simple paths.
pub fn brute_force_disjoint_paths(graph: &BoxGraph, open: &[bool]) -> u64 {
    let nv = graph.num_vertices();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for e in 0..graph.num_edges() {
        if open[e] {
            let (u, v) = graph.ends(e);
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
    }
    // Edge sets of simple paths whose interior avoids both faces.
    let mut paths: Vec<Vec<usize>> = Vec::new();
    fn walk(
        graph: &BoxGraph,
        adj: &[Vec<(usize, usize)>],
        u: usize,
        seen: &mut Vec<bool>,
        edges: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for &(v, e) in &adj[u] {
            if seen[v] || graph.is_bottom(v) {
                continue;
            }
            edges.push(e);
            if graph.is_top(v) {
                out.push(edges.clone());
            } else {
                seen[v] = true;
                walk(graph, adj, v, seen, edges, out);
                seen[v] = false;
            }
            edges.pop();
        }
    }
    let mut seen = vec![false; nv];
    for s in (0..nv).filter(|&v| graph.is_bottom(v)) {
        walk(graph, &adj, s, &mut seen, &mut Vec::new(), &mut paths);
    }
    fn pack(paths: &[Vec<usize>], used: &mut Vec<bool>, from: usize) -> u64 {
        let mut best = 0;
        for i in from..paths.len() {
            if paths[i].iter().all(|&e| !used[e]) {
                for &e in &paths[i] {
                    used[e] = true;
                }
                best = best.max(1 + pack(paths, used, i + 1));
                for &e in &paths[i] {
                    used[e] = false;
                }
            }
        }
        best
    }
    pack(&paths, &mut vec![false; graph.num_edges()], 0)
}

pub fn run_suite(config: &VerifyConfig, seed: u64, workers: usize) -> Result<Vec<PropertyReport>, EstimateError> {
    let r = config.resolution;
    crate::capacity::check_resolution(r)?;
    let mut out = Vec::new();

    out.push(tally("duality", config.duality, seed, workers, |_, s, dice| {
        let d = dice.range(2, 3) as usize;
        let side = if d == 2 { 12 } else { 5 };
        let dims = (1..d).map(|_| dice.range(1, side) as usize).collect();
        let spec = BoxSpec::new(dims, dice.range(1, if d == 2 { 16 } else { 6 }) as usize)?;
        let graph = BoxGraph::new(&spec);
        let field = sample_graph_field(&graph, &mixed_law(dice.roll(4)), r, s)?;
        let res = max_flow(&graph, &field)?;
        let mut removed = vec![false; graph.num_edges()];
        for &e in &res.min_cut.edges {
            removed[e] = true;
        }
        Ok(res.value == res.min_cut.weight
            && separates(&graph, &removed)
            && validate_stream(&graph, &field, &res.stream).is_empty())
    })?);

    out.push(tally("menger", config.menger, seed, workers, |_, s, dice| {
        // Boxes with at most 12 edges.
        let shapes: [(Vec<usize>, usize); 5] = [(vec![1], 4), (vec![2], 2), (vec![2], 3), (vec![3], 2), (vec![1, 2], 2)];
        let (dims, h) = shapes[dice.roll(shapes.len() as u64) as usize].clone();
        let graph = BoxGraph::new(&BoxSpec::new(dims, h)?);
        let law = DistributionSpec::bernoulli(Exact::ratio(dice.range(1, 9) as i64, 10), 0.0, 1.0);
        let field = sample_graph_field(&graph, &law, r, s)?;
        let open: Vec<bool> = field.units().iter().map(|&c| c == r).collect();
        Ok(menger_count(&graph, &field)? == brute_force_disjoint_paths(&graph, &open))
    })?);

    out.push(tally("subadditivity", config.subadditivity, seed, workers, |_, s, dice| {
        let a = dice.range(1, 5) as i64;
        let b = dice.range(1, 6 - a as u64) as i64;
        let k = dice.range(1, 4) as usize;
        let s1 = RectSpec::new(vec![0], vec![a])?;
        let s2 = RectSpec::new(vec![a], vec![a + b])?;
        let union = s1.union_with(&s2).expect("adjacent");
        let field = sample_field(&slab_spec(&union, k)?, &mixed_law(dice.roll(4)), r, s)?;
        let rep = check_subadditivity(&s1, &s2, k, &field)?;
        Ok(rep.holds && rep.glued_is_cut)
    })?);

    out.push(tally("superadditivity", config.superadditivity, seed, workers, |_, s, dice| {
        let a = dice.range(1, 5) as usize;
        let b = dice.range(1, 5) as usize;
        let w = dice.range(1, 3) as usize;
        let h = dice.range(1, 6) as usize;
        let whole = BoxSpec::new(vec![a + b, w], h)?;
        let left = BoxSpec::new(vec![a, w], h)?;
        let right = BoxSpec::with_offset(vec![b, w], h, vec![a as i64, 0, 0])?;
        let law = mixed_law(dice.roll(4));
        let phi = |spec: &BoxSpec| -> Result<u64, EstimateError> {
            let f = sample_field(spec, &law, r, s)?;
            Ok(max_flow_value(&BoxGraph::new(spec), &f)?)
        };
        Ok(phi(&whole)? >= phi(&left)? + phi(&right)?)
    })?);

    out.push(tally("sandwich", config.sandwich, seed, workers, |_, s, dice| {
        let spec = BoxSpec::new(vec![dice.range(1, 6) as usize], dice.range(1, 6) as usize)?;
        let graph = BoxGraph::new(&spec);
        let field = sample_graph_field(&graph, &mixed_law(dice.roll(4)), r, s)?;
        let k = 1u64 << dice.roll(r.trailing_zeros() as u64);
        let fk = discretize(&field, k)?;
        let at_k = max_flow(&graph, &fk)?;
        let at_2k = max_flow_value(&graph, &discretize(&field, 2 * k)?)?;
        let full = max_flow_value(&graph, &field)?;
        let gap = at_k.min_cut.len() as u64 * (r / k);
        Ok(at_k.value <= at_2k && at_2k <= full && full - at_k.value <= gap)
    })?);

    out.push(tally("junction", config.junction, seed, workers, |_, s, dice| {
        let n = dice.range(1, 3) as usize;
        let h = dice.range(1, 3) as usize;
        let spec = BoxSpec::cube(2, n, h)?;
        let graph = BoxGraph::new(&spec);
        let field = if dice.roll(2) == 0 {
            sample_graph_field(&graph, &mixed_law(dice.roll(4)), r, s)?
        } else {
            // One fat column over a weak background.
            let mut f = sample_graph_field(&graph, &DistributionSpec::Uniform { a: 0.0, b: 0.25 }, r, s)?;
            let x = dice.roll(n as u64) as usize;
            for z in 0..h {
                f.set(graph.vertical_edge(x, z).expect("in box"), (n as u64 + 1) * r);
            }
            f
        };
        let k = 1u64 << dice.range(0, 3);
        let pair = mirrored_pair(&spec, &field, k)?;
        let flow = pair.lower.flow();
        let denom = 8 * spec.base_area() as i64 * r as i64;
        let lambda = Exact(BigRational::new(BigInt::from(flow * dice.range(1, 8) as i64), BigInt::from(denom)));
        let joined = join_streams(&pair.lower, &pair.upper, &lambda)?;
        let gu = joined.stream.graph();
        let carried = joined.stream.flow();
        Ok(validate_stream(&gu, &pair.union_field, joined.stream.stream()).is_empty()
            && BigRational::from_integer(BigInt::from(carried)) >= target_units(&lambda, spec.base_area(), r)
            && carried as u64 <= max_flow_value(&gu, &pair.union_field)?)
    })?);

    let cases: [(i64, usize, usize); 4] = [(9, 2, 2), (9, 2, 3), (1, 3, 2), (7, 1, 4)];
    out.push(tally("q_mu_identity", cases.len() as u64, seed, workers, |i, _, _| {
        let (p, n, h) = cases[i as usize];
        let q = Exact::ratio(p, 10);
        let law = DistributionSpec::bernoulli(q.clone(), 0.0, 1.0);
        let spec = BoxSpec::cube(2, n, h)?;
        let got = exact_tail_probability(&law, &spec, &Exact::from_integer(1), r, config.budget)?;
        let want = num_traits::pow(q.0, spec.base_area() * h);
        Ok(got.0 == want)
    })?);
    Ok(out)
}

/// Total number of violations across a suite.
pub fn total_violations(reports: &[PropertyReport]) -> u64 {
    reports.iter().map(|r| r.violations).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_examples() {
        let g = BoxGraph::new(&BoxSpec::new(vec![3], 2).unwrap());
        assert_eq!(brute_force_disjoint_paths(&g, &vec![true; g.num_edges()]), 3);
        assert_eq!(brute_force_disjoint_paths(&g, &vec![false; g.num_edges()]), 0);
        // A zig-zag through the horizontal edge.
        let g = BoxGraph::new(&BoxSpec::new(vec![2], 2).unwrap());
        let mut open = vec![false; g.num_edges()];
        open[g.vertical_edge(0, 0).unwrap()] = true;
        open[g.edge_from(g.vertex(0, 1), 0).unwrap()] = true;
        open[g.vertical_edge(1, 1).unwrap()] = true;
        assert_eq!(brute_force_disjoint_paths(&g, &open), 1);
    }

    #[test]
    fn small_suite_is_clean_and_deterministic() {
        let cfg = VerifyConfig {
            duality: 10,
            menger: 10,
            subadditivity: 10,
            superadditivity: 10,
            sandwich: 10,
            junction: 10,
            ..VerifyConfig::default()
        };
        let a = run_suite(&cfg, 42, 1).unwrap();
        assert_eq!(total_violations(&a), 0, "{a:?}");
        assert_eq!(a, run_suite(&cfg, 42, 3).unwrap());
        assert_eq!(a.len(), 7);
    }
}
