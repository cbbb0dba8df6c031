//! Discrete streams, truncated projections on vertical layers, boundary
//! conditions, and the junction of two discrete streams on stacked boxes.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::capacity::{check_level, discretize, CapacityField};
use crate::error::{FlowError, JunctionError};
use crate::flow::{self, decompose_paths, flow_value, stream_from_paths, Stream, UnitPath};
use crate::lattice::{BoxGraph, BoxSpec, Point};
use crate::rational::{floor_nonneg, Exact};

/// A stream with all amounts in `(R/k)·N`, faces crossed bottom-up and no
/// flow along edges inside the top face.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteStream {
    stream: Stream,
    level: u64,
}

impl DiscreteStream {
    /// Normalizes a level-`k` stream by decomposing it into unit paths and
    /// rebuilding it from them.
    pub fn from_stream(graph: &BoxGraph, stream: &Stream, k: u64) -> Result<Self, JunctionError> {
        let paths = decompose_paths(graph, stream, k)?;
        Self::from_paths(graph, stream.resolution(), k, &paths)
    }

    pub fn from_paths(graph: &BoxGraph, resolution: u64, k: u64, paths: &[UnitPath]) -> Result<Self, JunctionError> {
        let stream = stream_from_paths(graph, resolution, k, paths)?;
        let out = DiscreteStream { stream, level: k };
        out.check(graph)?;
        Ok(out)
    }

    /// Maximal discrete stream for `t^k`.
    pub fn maximal(graph: &BoxGraph, field: &CapacityField, k: u64) -> Result<Self, JunctionError> {
        let fk = discretize(field, k).map_err(FlowError::from)?;
        let res = flow::max_flow(graph, &fk)?;
        Self::from_stream(graph, &res.stream, k)
    }

    pub fn stream(&self) -> &Stream {
        &self.stream
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn resolution(&self) -> u64 {
        self.stream.resolution()
    }

    pub fn scope(&self) -> &BoxSpec {
        self.stream.scope()
    }

    pub fn graph(&self) -> BoxGraph {
        BoxGraph::new(self.scope())
    }

    pub fn flow(&self) -> i64 {
        flow_value(&self.graph(), &self.stream)
    }

    /// Verifies discreteness, balance and face normalization.
    pub fn check(&self, graph: &BoxGraph) -> Result<(), JunctionError> {
        let s = &self.stream;
        check_level(self.level, s.resolution()).map_err(|_| JunctionError::LevelMismatch)?;
        if s.scope() != graph.spec() || s.len() != graph.num_edges() {
            return Err(JunctionError::Geometry);
        }
        let step = s.resolution() / self.level;
        for e in 0..graph.num_edges() {
            let (t, h) = graph.ends(e);
            if s.g(e) % step != 0 {
                return Err(JunctionError::NotNormalized(format!("edge {e} carries {} units", s.g(e))));
            }
            if graph.is_top(t) && graph.is_top(h) && s.g(e) != 0 {
                return Err(JunctionError::NotNormalized(format!("top face edge {e} carries flow")));
            }
            let crosses = graph.is_bottom(t) || graph.is_top(h);
            if crosses && s.g(e) != 0 && !s.is_forward(e) {
                return Err(JunctionError::NotNormalized(format!("face edge {e} points downwards")));
            }
        }
        let mut surplus = vec![0i64; graph.num_vertices()];
        for e in 0..graph.num_edges() {
            let (t, h) = graph.ends(e);
            surplus[t] -= s.net(e);
            surplus[h] += s.net(e);
        }
        for v in 0..graph.num_vertices() {
            if surplus[v] != 0 && !graph.is_bottom(v) && !graph.is_top(v) {
                return Err(JunctionError::NotNormalized(format!("unbalanced at {}", graph.point(v))));
            }
        }
        Ok(())
    }

    /// The same stream on the box shifted vertically by `dz`.
    pub fn translated(&self, dz: i64) -> Self {
        let spec = self.scope();
        let mut delta = vec![0; spec.dim()];
        delta[spec.dim() - 1] = dz;
        let g = self.stream.amounts().to_vec();
        let fwd = (0..self.stream.len()).map(|e| self.stream.is_forward(e)).collect();
        DiscreteStream { stream: Stream::new(spec.translated(&delta), self.resolution(), g, fwd), level: self.level }
    }

    /// Reflection `z ↦ bottom + top − z` of the box with all orientations
    /// reversed, so that flow still runs from the bottom face to the top.
    pub fn flipped(&self) -> Self {
        let graph = self.graph();
        let perm = reflection(&graph);
        let mut out = Stream::zero(&graph, self.resolution());
        for e in 0..graph.num_edges() {
            if self.stream.g(e) == 0 {
                continue;
            }
            let (image, same_direction) = perm[e].expect("edges carrying flow avoid the top face");
            // Reflection keeps or swaps the index order of the endpoints;
            // the orientation reversal swaps it once more.
            let fwd = self.stream.is_forward(e) != same_direction;
            out.set(image, self.stream.g(e), fwd);
        }
        DiscreteStream { stream: out, level: self.level }
    }
}

/// Image of every edge under the vertical reflection of its box, with a flag
/// telling whether tail still maps before head. Top face edges have no image.
fn reflection(graph: &BoxGraph) -> Vec<Option<(usize, bool)>> {
    let spec = graph.spec();
    let sum = spec.bottom_z() + spec.top_z();
    let mirror = |p: Point| {
        let mut c = p.0;
        let d = c.len();
        c[d - 1] = sum - c[d - 1];
        Point(c)
    };
    (0..graph.num_edges())
        .map(|e| {
            let (t, h) = graph.ends(e);
            let mt = graph.vertex_index(&mirror(graph.point(t)))?;
            let mh = graph.vertex_index(&mirror(graph.point(h)))?;
            let edge = crate::lattice::Edge::new(graph.point(mt), graph.point(mh)).ok()?;
            let id = graph.edge_id(&edge)?;
            Some((id, mt < mh))
        })
        .collect()
}

/// `⌊λ · area⌋ + 1`, the truncation cap in whole capacity units.
pub fn truncation_cap(lambda: &Exact, area: usize) -> BigUint {
    floor_nonneg(&(lambda.value() * BigRational::from_integer(BigInt::from(area)))) + BigUint::one()
}

fn cap_units(lambda: &Exact, area: usize, resolution: u64) -> u64 {
    (truncation_cap(lambda, area) * BigUint::from(resolution)).to_u64().unwrap_or(u64::MAX)
}

/// `λ · area` in `1/R` units, exactly.
pub fn target_units(lambda: &Exact, area: usize, resolution: u64) -> BigRational {
    lambda.value() * BigRational::from_integer(BigInt::from(area as u128 * resolution as u128))
}

/// `π_z(g, x) = g(⟨(x,z),(x,z+1)⟩) ∧ (⌊λ·area⌋+1)` over the base points in
/// lexicographic order, `z` an absolute height.
pub fn truncated_projection(stream: &DiscreteStream, z: i64, lambda: &Exact) -> Result<Vec<u64>, JunctionError> {
    let graph = stream.graph();
    let spec = graph.spec();
    if z < spec.bottom_z() || z >= spec.top_z() {
        return Err(JunctionError::Layer(z));
    }
    let layer = (z - spec.bottom_z()) as usize;
    let cap = cap_units(lambda, spec.base_area(), stream.resolution());
    Ok((0..spec.base_area())
        .map(|x| stream.stream().g(graph.vertical_edge(x, layer).expect("layer in range")).min(cap))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub bottom: Vec<u64>,
    pub top: Vec<u64>,
    pub lambda: Exact,
    pub area: usize,
    pub level: u64,
}

impl BoundaryCondition {
    /// `(Π_2, Π_1)`.
    pub fn reflected(&self) -> Self {
        BoundaryCondition { bottom: self.top.clone(), top: self.bottom.clone(), ..self.clone() }
    }
}

pub fn boundary_condition(stream: &DiscreteStream, lambda: &Exact) -> Result<BoundaryCondition, JunctionError> {
    let spec = stream.scope();
    Ok(BoundaryCondition {
        bottom: truncated_projection(stream, spec.bottom_z(), lambda)?,
        top: truncated_projection(stream, spec.top_z() - 1, lambda)?,
        lambda: lambda.clone(),
        area: spec.base_area(),
        level: stream.level(),
    })
}

/// `(k(⌊λ n^{d−1}⌋+1)+1)^{2 n^{d−1}}`.
pub fn boundary_count_bound(lambda: &Exact, n: usize, k: u64, d: usize) -> BigUint {
    let area = n.pow(d as u32 - 1);
    let base = BigUint::from(k) * truncation_cap(lambda, area) + BigUint::one();
    num_traits::pow(base, 2 * area)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JoinBranch {
    Concatenated,
    Reglued { column: usize, paths: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Joined {
    pub stream: DiscreteStream,
    pub branch: JoinBranch,
}

/// Joins `lower` on `B_1` and `upper` on the box stacked directly above it
/// into one discrete stream on `B_1 ∪ B_2` carrying at least `λ·area`.
pub fn join_streams(lower: &DiscreteStream, upper: &DiscreteStream, lambda: &Exact) -> Result<Joined, JunctionError> {
    let (b1, b2) = (lower.scope(), upper.scope());
    if lower.level() != upper.level() || lower.resolution() != upper.resolution() {
        return Err(JunctionError::LevelMismatch);
    }
    if b1.dims() != b2.dims() || b2 != &b1.stacked_above(b2.height()) {
        return Err(JunctionError::Geometry);
    }
    let (g1, g2) = (lower.graph(), upper.graph());
    lower.check(&g1)?;
    upper.check(&g2)?;
    let area = b1.base_area();
    let r = lower.resolution();
    let target = target_units(lambda, area, r);
    for (which, s, g) in [(1u8, lower, &g1), (2, upper, &g2)] {
        let f = flow_value(g, s.stream());
        if BigRational::from_integer(BigInt::from(f)) < target {
            let required = target.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
            return Err(JunctionError::FlowShortfall { which, flow: f, required });
        }
    }
    let interface = b1.top_z();
    let below = truncated_projection(lower, interface - 1, lambda)?;
    let above = truncated_projection(upper, interface, lambda)?;
    let bases = b1.base_points();
    if let Some(x) = (0..area).find(|&x| below[x] != above[x]) {
        return Err(JunctionError::ProjectionMismatch { point: bases[x].clone(), lower: below[x], upper: above[x] });
    }

    let union_spec = BoxSpec::with_offset(b1.dims().to_vec(), b1.height() + b2.height(), b1.offset().to_vec())?;
    let gu = BoxGraph::new(&union_spec);
    let map1 = g1.embed_into(&gu)?;
    let map2 = g2.embed_into(&gu)?;
    let top_layer = b1.height() - 1;
    let e_at = |x: usize| g1.vertical_edge(x, top_layer).expect("top layer");
    let fat = (0..area).find(|&x| BigRational::from_integer(BigInt::from(lower.stream().g(e_at(x)))) > target);

    let (stream, branch) = match fat {
        None => {
            let mut s = Stream::zero(&gu, r);
            for (src, map) in [(lower, &map1), (upper, &map2)] {
                for (e, &img) in map.iter().enumerate() {
                    let st = src.stream();
                    if st.g(e) != 0 {
                        s.set(img, st.g(e), st.is_forward(e));
                    }
                }
            }
            (DiscreteStream { stream: s, level: lower.level() }, JoinBranch::Concatenated)
        }
        Some(x) => {
            let k = lower.level();
            let q = (target.clone() * BigRational::from_integer(BigInt::from(k)) / BigRational::from_integer(BigInt::from(r)))
                .ceil()
                .to_integer()
                .to_u64()
                .ok_or(JunctionError::LevelMismatch)? as usize;
            let e = e_at(x);
            let f = g2.vertical_edge(x, 0).expect("bottom layer");
            let ending: Vec<UnitPath> = decompose_paths(&g1, lower.stream(), k)?
                .into_iter()
                .filter(|p| p.arcs.last().map(|a| a.edge) == Some(e))
                .take(q)
                .collect();
            let starting: Vec<UnitPath> = decompose_paths(&g2, upper.stream(), k)?
                .into_iter()
                .filter(|p| p.arcs.first().map(|a| a.edge) == Some(f))
                .take(q)
                .collect();
            if ending.len() < q || starting.len() < q {
                return Err(JunctionError::NotNormalized(format!("fewer than {q} unit paths through column {x}")));
            }
            let glued: Vec<UnitPath> = ending
                .iter()
                .zip(&starting)
                .map(|(a, b)| {
                    let start = gu.vertex_index(&g1.point(a.start)).expect("embedded vertex");
                    let arcs = a
                        .arcs
                        .iter()
                        .map(|u| flow::UnitArc { edge: map1[u.edge], ..*u })
                        .chain(b.arcs.iter().map(|u| flow::UnitArc { edge: map2[u.edge], ..*u }))
                        .collect();
                    UnitPath { start, arcs }
                })
                .collect();
            let s = stream_from_paths(&gu, r, k, &glued)?;
            (DiscreteStream { stream: s, level: k }, JoinBranch::Reglued { column: x, paths: q as u64 })
        }
    };
    stream.check(&gu)?;
    Ok(Joined { stream, branch })
}

/// Capacities of `outer` taken from `field` on the vertical mirror image of
/// each edge; top face edges of the mirrored box receive `fill`.
pub fn reflect_field(graph: &BoxGraph, field: &CapacityField, fill: u64) -> CapacityField {
    let perm = reflection(graph);
    let mut caps = vec![fill; graph.num_edges()];
    for (e, img) in perm.iter().enumerate() {
        if let Some((i, _)) = img {
            caps[*i] = field.get(e);
        }
    }
    CapacityField::from_units(field.resolution(), caps).expect("resolution already validated")
}

/// A hypothesis-satisfying pair on `B_1` and the box stacked above it: the
/// maximal discrete stream of `field` and its mirror image, together with the
/// field on the union that supports both.
pub struct StackedPair {
    pub lower: DiscreteStream,
    pub upper: DiscreteStream,
    pub union_field: CapacityField,
}

pub fn mirrored_pair(b1: &BoxSpec, field: &CapacityField, k: u64) -> Result<StackedPair, JunctionError> {
    let g1 = BoxGraph::new(b1);
    let fk = discretize(field, k).map_err(FlowError::from)?;
    let lower = DiscreteStream::maximal(&g1, &fk, k)?;
    let upper = lower.flipped().translated(b1.height() as i64);
    let mirrored = reflect_field(&g1, &fk, 0);
    let b2 = b1.stacked_above(b1.height());
    let union_spec = BoxSpec::with_offset(b1.dims().to_vec(), 2 * b1.height(), b1.offset().to_vec())?;
    let gu = BoxGraph::new(&union_spec);
    let mut caps = vec![0u64; gu.num_edges()];
    for (e, &img) in g1.embed_into(&gu)?.iter().enumerate() {
        caps[img] = fk.get(e);
    }
    for (e, &img) in BoxGraph::new(&b2).embed_into(&gu)?.iter().enumerate() {
        caps[img] = mirrored.get(e);
    }
    let union_field = CapacityField::from_units(field.resolution(), caps).expect("resolution already validated");
    Ok(StackedPair { lower, upper, union_field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{sample_graph_field, DistributionSpec};
    use crate::flow::{max_flow_value, validate_stream};
    use proptest::prelude::*;
    use std::collections::HashSet;

    const R: u64 = 1 << 20;

    fn cube(n: usize, h: usize) -> BoxSpec {
        BoxSpec::cube(2, n, h).unwrap()
    }

    fn column_stream(g: &BoxGraph, x: usize, units: u64, k: u64) -> DiscreteStream {
        let mut s = Stream::zero(g, R);
        for z in 0..g.spec().height() {
            s.set(g.vertical_edge(x, z).unwrap(), units, true);
        }
        DiscreteStream::from_stream(g, &s, k).unwrap()
    }

    #[test]
    fn projection_examples() {
        let g = BoxGraph::new(&cube(2, 3));
        let zero = DiscreteStream::from_stream(&g, &Stream::zero(&g, R), 1).unwrap();
        assert_eq!(truncated_projection(&zero, 0, &Exact::from_integer(1)).unwrap(), vec![0, 0]);

        let col = column_stream(&g, 0, 2 * R, 1);
        // ⌊0 · 2⌋ + 1 = 1
        assert_eq!(truncated_projection(&col, 1, &Exact::from_integer(0)).unwrap(), vec![R, 0]);
        assert_eq!(truncated_projection(&col, 2, &Exact::from_integer(10)).unwrap(), vec![2 * R, 0]);
        assert!(truncated_projection(&col, 3, &Exact::from_integer(1)).is_err());

        let bc = boundary_condition(&col, &Exact::from_integer(0)).unwrap();
        assert_eq!((bc.bottom.clone(), bc.top.clone()), (vec![R, 0], vec![R, 0]));
        assert_eq!(bc.reflected().bottom, bc.top);
    }

    #[test]
    fn maximal_stream_is_untruncated_for_large_lambda() {
        let g = BoxGraph::new(&cube(3, 3));
        let f = sample_graph_field(&g, &DistributionSpec::Uniform { a: 0.0, b: 2.0 }, R, 9).unwrap();
        let s = DiscreteStream::maximal(&g, &f, 4).unwrap();
        let p = truncated_projection(&s, 0, &Exact::from_integer(100)).unwrap();
        let raw: Vec<u64> = (0..3).map(|x| s.stream().g(g.vertical_edge(x, 0).unwrap())).collect();
        assert_eq!(p, raw);
        let fk = discretize(&f, 4).unwrap();
        assert!(validate_stream(&g, &fk, s.stream()).is_empty());
        assert_eq!(s.flow() as u64, max_flow_value(&g, &fk).unwrap());
    }

    #[test]
    fn count_bound_examples() {
        assert_eq!(boundary_count_bound(&Exact::from_integer(1), 2, 2, 2), BigUint::from(2401u32));
        assert_eq!(boundary_count_bound(&Exact::from_integer(0), 1, 1, 2), BigUint::from(4u32));
        assert_eq!(boundary_count_bound(&Exact::from_integer(0), 1, 1, 4), BigUint::from(4u32));
    }

    #[test]
    fn distinct_boundary_conditions_within_bound() {
        // Every discrete stream on ]0,2] × ]0,2] (six edges) with amounts up
        // to `top` steps, level 1 and 2.
        let spec = cube(2, 2);
        let g = BoxGraph::new(&spec);
        assert_eq!(g.num_edges(), 6);
        for (k, lambda) in [(1u64, Exact::from_integer(1)), (2, Exact::ratio(1, 2)), (1, Exact::from_integer(0))] {
            let step = R / k;
            let cap = (truncation_cap(&lambda, 2).to_u64().unwrap()) as u64 * k;
            let top = cap + 1;
            let choices: Vec<i64> = (-(top as i64)..=top as i64).collect();
            let m = g.num_edges();
            let mut seen = HashSet::new();
            let total = choices.len().pow(m as u32);
            for mut code in 0..total {
                let mut net = vec![0i64; m];
                for e in net.iter_mut() {
                    *e = choices[code % choices.len()] * step as i64;
                    code /= choices.len();
                }
                let s = Stream::from_net(spec.clone(), R, &net);
                let ds = DiscreteStream { stream: s, level: k };
                if ds.check(&g).is_ok() {
                    let bc = boundary_condition(&ds, &lambda).unwrap();
                    seen.insert((bc.bottom, bc.top));
                }
            }
            let bound = boundary_count_bound(&lambda, 2, k, 2);
            assert!(BigUint::from(seen.len()) <= bound, "{} > {bound}", seen.len());
            assert!(seen.len() > 1);
        }
    }

    #[test]
    fn branch_one_concatenates() {
        let g1 = BoxGraph::new(&cube(2, 3));
        let s1 = column_stream(&g1, 1, R, 1);
        let s2 = s1.translated(3);
        let j = join_streams(&s1, &s2, &Exact::ratio(1, 2)).unwrap();
        assert_eq!(j.branch, JoinBranch::Concatenated);
        assert_eq!(j.stream.flow(), R as i64);
        assert_eq!(j.stream.scope(), &cube(2, 6));
    }

    fn fat_column(x: usize) -> (BoxSpec, CapacityField) {
        let b = cube(3, 3);
        let g = BoxGraph::new(&b);
        let mut f = CapacityField::constant(&g, R, 0).unwrap();
        for z in 0..3 {
            f.set(g.vertical_edge(x, z).unwrap(), 3 * R);
        }
        (b, f)
    }

    #[test]
    fn branch_two_reglues_through_the_fat_column() {
        let (b, f) = fat_column(1);
        let pair = mirrored_pair(&b, &f, 2).unwrap();
        let lambda = Exact::ratio(1, 2);
        let j = join_streams(&pair.lower, &pair.upper, &lambda).unwrap();
        assert_eq!(j.branch, JoinBranch::Reglued { column: 1, paths: 3 });
        assert_eq!(j.stream.flow(), (3 * R / 2) as i64);
        let gu = j.stream.graph();
        assert!(validate_stream(&gu, &pair.union_field, j.stream.stream()).is_empty());
        assert!(max_flow_value(&gu, &pair.union_field).unwrap() >= j.stream.flow() as u64);
    }

    #[test]
    fn hypothesis_violations() {
        let g1 = BoxGraph::new(&cube(2, 2));
        let a = column_stream(&g1, 0, R, 1);
        let b = column_stream(&g1, 1, R, 1).translated(2);
        match join_streams(&a, &b, &Exact::ratio(1, 2)) {
            Err(JunctionError::ProjectionMismatch { point, .. }) => assert_eq!(point, vec![1]),
            other => panic!("{other:?}"),
        }
        match join_streams(&a, &a.translated(2), &Exact::from_integer(1)) {
            Err(JunctionError::FlowShortfall { which: 1, required, .. }) => assert_eq!(required, 2 * R),
            other => panic!("{other:?}"),
        }
        assert_eq!(join_streams(&a, &a.translated(3), &Exact::ratio(1, 2)).unwrap_err(), JunctionError::Geometry);
        let a2 = column_stream(&g1, 0, R, 2);
        assert_eq!(join_streams(&a, &a2.translated(2), &Exact::ratio(1, 2)).unwrap_err(), JunctionError::LevelMismatch);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn flip_reflects_boundary_condition(seed in any::<u64>(), n in 1usize..4, h in 1usize..5, k in 0u32..3) {
            let g = BoxGraph::new(&cube(n, h));
            let f = sample_graph_field(&g, &DistributionSpec::Uniform { a: 0.0, b: 2.0 }, R, seed).unwrap();
            let k = 1u64 << k;
            let s = DiscreteStream::maximal(&g, &f, k).unwrap();
            let lambda = Exact::ratio(1, 3);
            let flipped = s.flipped();
            prop_assert!(flipped.check(&g).is_ok());
            prop_assert_eq!(flipped.flow(), s.flow());
            prop_assert_eq!(boundary_condition(&flipped, &lambda).unwrap(), boundary_condition(&s, &lambda).unwrap().reflected());
            prop_assert_eq!(flipped.flipped(), s);
        }

        #[test]
        fn truncation_monotone_in_lambda(seed in any::<u64>(), a in 0i64..8, b in 0i64..8) {
            let g = BoxGraph::new(&cube(3, 2));
            let f = sample_graph_field(&g, &DistributionSpec::Uniform { a: 0.0, b: 3.0 }, R, seed).unwrap();
            let s = DiscreteStream::maximal(&g, &f, 2).unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            let p = truncated_projection(&s, 0, &Exact::ratio(lo, 4)).unwrap();
            let q = truncated_projection(&s, 0, &Exact::ratio(hi, 4)).unwrap();
            prop_assert!(p.iter().zip(&q).all(|(x, y)| x <= y));
        }

        #[test]
        fn joined_streams_are_valid(seed in any::<u64>(), n in 1usize..4, h in 1usize..4, frac in 1i64..=8, fat in any::<bool>()) {
            let (b, f) = if fat {
                let (b, f) = fat_column(seed as usize % 3);
                (b, f)
            } else {
                let b = cube(n, h);
                let f = sample_graph_field(&BoxGraph::new(&b), &DistributionSpec::Uniform { a: 0.0, b: 2.0 }, R, seed).unwrap();
                (b, f)
            };
            let pair = mirrored_pair(&b, &f, 2).unwrap();
            let flow = pair.lower.flow();
            let area = b.base_area() as i64;
            let lambda = Exact(BigRational::new(BigInt::from(flow * frac), BigInt::from(8 * area * R as i64)));
            let j = join_streams(&pair.lower, &pair.upper, &lambda).unwrap();
            let gu = j.stream.graph();
            prop_assert!(validate_stream(&gu, &pair.union_field, j.stream.stream()).is_empty());
            let need = target_units(&lambda, b.base_area(), R);
            prop_assert!(BigRational::from_integer(BigInt::from(j.stream.flow())) >= need);
            prop_assert!(max_flow_value(&gu, &pair.union_field).unwrap() >= j.stream.flow() as u64);
        }
    }
}
