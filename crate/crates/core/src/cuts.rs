//! Pinned cut values `τ(S,k)`: minimal cuts of the slab `S × ]−k,k]` whose
//! boundary is held on the perimeter of `S × {0}`.
//!
//! Edges with both endpoints in the inner boundary `∂^in(S × R)` are made
//! uncuttable, except the vertical edges from height 0 to height 1. The
//! minimum is then an ordinary max-flow problem between the faces at heights
//! `−k` and `k`.

use serde::{Deserialize, Serialize};

use crate::capacity::{sample_field, CapacityField, DistributionSpec};
use crate::error::{CutError, FlowError};
use crate::flow::{self, Capacity, CutSet};
use crate::lattice::{BoxGraph, BoxSpec, Edge, RectSpec};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlabProblem {
    pub base: RectSpec,
    pub half_height: usize,
    pub field: CapacityField,
    /// Enforce the perimeter pinning; when false the plain slab max flow is
    /// computed.
    pub pinned: bool,
}

/// The box `S × ]−k, k]`.
pub fn slab_spec(base: &RectSpec, k: usize) -> Result<BoxSpec, CutError> {
    if k == 0 {
        return Err(CutError::Infeasible);
    }
    Ok(base.slab_box(-(k as i64), k as i64)?)
}

/// Whether the pinning forbids `e` from a cut over `base`.
pub fn is_uncuttable(base: &RectSpec, e: &Edge) -> bool {
    let (a, b) = e.endpoints();
    let flat_layer = e.is_vertical() && a.height() == 0;
    !flat_layer && base.is_inner_boundary(a) && base.is_inner_boundary(b)
}

impl SlabProblem {
    pub fn new(base: RectSpec, half_height: usize, field: CapacityField) -> Result<Self, CutError> {
        let graph = BoxGraph::new(&slab_spec(&base, half_height)?);
        field.check_shape(&graph)?;
        Ok(SlabProblem { base, half_height, field, pinned: true })
    }

    pub fn sample(
        base: RectSpec,
        half_height: usize,
        dist: &DistributionSpec,
        resolution: u64,
        seed: u64,
    ) -> Result<Self, CutError> {
        let field = sample_field(&slab_spec(&base, half_height)?, dist, resolution, seed)?;
        Self::new(base, half_height, field)
    }

    pub fn unpinned(mut self) -> Self {
        self.pinned = false;
        self
    }

    pub fn spec(&self) -> BoxSpec {
        slab_spec(&self.base, self.half_height).expect("validated at construction")
    }

    pub fn graph(&self) -> BoxGraph {
        BoxGraph::new(&self.spec())
    }

    /// Per-edge mask of the uncuttable edges (all false when unpinned).
    pub fn uncuttable(&self, graph: &BoxGraph) -> Vec<bool> {
        (0..graph.num_edges()).map(|e| self.pinned && is_uncuttable(&self.base, &graph.edge(e))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauResult {
    pub value: u64,
    pub cut: CutSet,
}

pub fn tau_slab(problem: &SlabProblem) -> Result<TauResult, CutError> {
    let graph = problem.graph();
    problem.field.check_shape(&graph)?;
    let locked = problem.uncuttable(&graph);
    let caps: Vec<Capacity> = (0..graph.num_edges())
        .map(|e| if locked[e] { Capacity::Unbounded } else { Capacity::Finite(problem.field.get(e)) })
        .collect();
    let solved = match flow::solve(&graph, &caps) {
        Err(FlowError::Unbounded) => return Err(CutError::Infeasible),
        other => other?,
    };
    let cut = CutSet::from_edges(&problem.field, solved.cut_edges);
    debug_assert!(cut.edges.iter().all(|&e| !locked[e]));
    debug_assert_eq!(cut.weight, solved.value);
    Ok(TauResult { value: solved.value, cut })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub union: RectSpec,
    pub tau_union: u64,
    pub tau_first: u64,
    pub tau_second: u64,
    /// The two certificates placed side by side in the union slab.
    pub glued: CutSet,
    /// The glued cut separates the union slab and respects its pinning.
    pub glued_is_cut: bool,
    pub holds: bool,
}

/// Computes `τ(S1 ∪ S2, k)`, `τ(S1, k)` and `τ(S2, k)` on one field over the
/// union slab.
pub fn check_subadditivity(
    s1: &RectSpec,
    s2: &RectSpec,
    k: usize,
    field: &CapacityField,
) -> Result<SubadditivityReport, CutError> {
    let union = s1.union_with(s2).ok_or(CutError::Incompatible)?;
    let outer = BoxGraph::new(&slab_spec(&union, k)?);
    field.check_shape(&outer)?;
    let whole = tau_slab(&SlabProblem::new(union.clone(), k, field.clone())?)?;
    let mut parts = Vec::with_capacity(2);
    let mut glued_edges = Vec::new();
    for s in [s1, s2] {
        let inner = BoxGraph::new(&slab_spec(s, k)?);
        let map = inner.embed_into(&outer)?;
        let sub = field.restrict(&outer, &inner)?;
        let t = tau_slab(&SlabProblem::new(s.clone(), k, sub)?)?;
        glued_edges.extend(t.cut.edges.iter().map(|&e| map[e]));
        parts.push(t.value);
    }
    let glued = CutSet::from_edges(field, glued_edges);
    let mut removed = vec![false; outer.num_edges()];
    for &e in &glued.edges {
        removed[e] = true;
    }
    let glued_is_cut =
        flow::separates(&outer, &removed) && glued.edges.iter().all(|&e| !is_uncuttable(&union, &outer.edge(e)));
    Ok(SubadditivityReport {
        holds: whole.value <= parts[0] + parts[1],
        union,
        tau_union: whole.value,
        tau_first: parts[0],
        tau_second: parts[1],
        glued,
        glued_is_cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::separates;
    use crate::rational::Exact;
    use proptest::prelude::*;

    const R: u64 = 1 << 20;

    fn coin(p: i64) -> DistributionSpec {
        DistributionSpec::bernoulli(Exact::ratio(p, 10), 0.0, 1.0)
    }

    #[test]
    fn constant_field_gives_area_times_c() {
        for (d, n, k) in [(2, 3, 1), (2, 4, 3), (3, 2, 2)] {
            let s = RectSpec::cube(d, n).unwrap();
            let g = BoxGraph::new(&slab_spec(&s, k).unwrap());
            let p = SlabProblem::new(s, k, CapacityField::constant(&g, R, 3 * R).unwrap()).unwrap();
            let t = tau_slab(&p).unwrap();
            assert_eq!(t.value, 3 * R * n.pow(d as u32 - 1) as u64);
            assert_eq!(t.cut.weight, t.value);
        }
    }

    #[test]
    fn zero_field() {
        let s = RectSpec::cube(2, 3).unwrap();
        let g = BoxGraph::new(&slab_spec(&s, 2).unwrap());
        let p = SlabProblem::new(s, 2, CapacityField::constant(&g, R, 0).unwrap()).unwrap();
        assert_eq!(tau_slab(&p).unwrap().value, 0);
    }

    #[test]
    fn pinning_counts() {
        // Side 2 in d = 2: both columns are perimeter columns, so every edge
        // but the two flat-layer verticals is locked.
        let s = RectSpec::cube(2, 2).unwrap();
        let p = SlabProblem::sample(s, 2, &coin(5), R, 1).unwrap();
        let g = p.graph();
        assert_eq!(g.num_edges(), 12);
        assert_eq!(p.uncuttable(&g).iter().filter(|&&u| u).count(), 10);
        assert!(p.clone().unpinned().uncuttable(&g).iter().all(|&u| !u));
    }

    #[test]
    fn zero_half_height_rejected() {
        assert!(slab_spec(&RectSpec::cube(2, 2).unwrap(), 0).is_err());
    }

    /// Minimum weight over subsets that separate and avoid locked edges.
    fn brute_tau(p: &SlabProblem) -> u64 {
        let g = p.graph();
        let locked = p.uncuttable(&g);
        let free: Vec<usize> = (0..g.num_edges()).filter(|&e| !locked[e]).collect();
        let mut best = u64::MAX;
        for mask in 0u64..(1 << free.len()) {
            let mut removed = vec![false; g.num_edges()];
            let mut w = 0;
            for (i, &e) in free.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    removed[e] = true;
                    w += p.field.get(e);
                }
            }
            if w < best && separates(&g, &removed) {
                best = w;
            }
        }
        best
    }

    #[test]
    fn brute_force_on_small_slabs() {
        for seed in 0..10 {
            let p = SlabProblem::sample(RectSpec::cube(2, 2).unwrap(), 2, &coin(5), R, seed).unwrap();
            assert_eq!(tau_slab(&p).unwrap().value, brute_tau(&p), "seed {seed}");
        }
        for seed in 0..6 {
            let p = SlabProblem::sample(RectSpec::cube(2, 3).unwrap(), 2, &DistributionSpec::Uniform { a: 0.0, b: 1.0 }, 1 << 6, seed)
                .unwrap();
            assert_eq!(tau_slab(&p).unwrap().value, brute_tau(&p), "seed {seed}");
        }
    }

    #[test]
    fn subadditivity_examples() {
        let s1 = RectSpec::new(vec![0], vec![2]).unwrap();
        let s2 = RectSpec::new(vec![2], vec![5]).unwrap();
        let u = s1.union_with(&s2).unwrap();
        let g = BoxGraph::new(&slab_spec(&u, 2).unwrap());
        let r = check_subadditivity(&s1, &s2, 2, &CapacityField::constant(&g, R, 2 * R).unwrap()).unwrap();
        assert_eq!((r.tau_union, r.tau_first, r.tau_second), (10 * R, 4 * R, 6 * R));
        assert!(r.holds && r.glued_is_cut);
        let r = check_subadditivity(&s1, &s2, 2, &CapacityField::constant(&g, R, 0).unwrap()).unwrap();
        assert_eq!((r.tau_union, r.tau_first + r.tau_second), (0, 0));
        let far = RectSpec::new(vec![3], vec![5]).unwrap();
        assert_eq!(check_subadditivity(&s1, &far, 2, &CapacityField::constant(&g, R, 0).unwrap()), Err(CutError::Incompatible));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn cut_properties(seed in any::<u64>(), w in 1usize..5, k in 1usize..4, p in 1i64..10) {
            let s = RectSpec::new(vec![0], vec![w as i64]).unwrap();
            let prob = SlabProblem::sample(s.clone(), k, &coin(p), R, seed).unwrap();
            let g = prob.graph();
            let t = tau_slab(&prob).unwrap();
            let locked = prob.uncuttable(&g);
            prop_assert!(t.cut.edges.iter().all(|&e| !locked[e]));
            let mut removed = vec![false; g.num_edges()];
            for &e in &t.cut.edges { removed[e] = true; }
            prop_assert!(separates(&g, &removed));

            let plain = tau_slab(&prob.clone().unpinned()).unwrap();
            prop_assert!(plain.value <= t.value);
            prop_assert_eq!(plain.value, flow::max_flow_value(&g, &prob.field).unwrap());

            let deeper = SlabProblem::sample(s, k + 1, &coin(p), R, seed).unwrap();
            prop_assert!(tau_slab(&deeper).unwrap().value <= t.value);
        }

        #[test]
        fn glued_certificates(seed in any::<u64>(), a in 1i64..4, b in 1i64..4, k in 1usize..4) {
            let s1 = RectSpec::new(vec![0], vec![a]).unwrap();
            let s2 = RectSpec::new(vec![a], vec![a + b]).unwrap();
            let u = s1.union_with(&s2).unwrap();
            let field = sample_field(&slab_spec(&u, k).unwrap(), &coin(6), R, seed).unwrap();
            let r = check_subadditivity(&s1, &s2, k, &field).unwrap();
            prop_assert!(r.holds);
            prop_assert!(r.glued_is_cut);
            prop_assert_eq!(r.glued.weight, r.tau_first + r.tau_second);
        }
    }
}
