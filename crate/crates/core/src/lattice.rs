//! Cylinder geometry on `Z^d`: boxes `∏ ]0,k_i] × ]0,m]`, their edges and faces,
//! hyper-rectangular bases and the inner boundary of the infinite cylinder
//! over a base.
//!
//! Edge membership in a box follows the open-segment rule: an edge belongs to a
//! box when the segment joining its endpoints, endpoints excluded, lies in the
//! box. Along the vertical axis this admits the bottom edges `(x,0)–(x,1)`;
//! along horizontal axes both endpoints must sit on lattice points of the base.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// A lattice point of `Z^d`. The last coordinate is the height.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Point(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn height(&self) -> i64 {
        *self.0.last().expect("points have at least one coordinate")
    }

    /// The point shifted by `delta` along `axis`.
    pub fn shifted(&self, axis: usize, delta: i64) -> Point {
        let mut c = self.0.clone();
        c[axis] += delta;
        Point(c)
    }

    /// Base coordinates (all but the height).
    pub fn base(&self) -> &[i64] {
        &self.0[..self.0.len() - 1]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Axis along which two points differ, if they are nearest neighbours.
fn unit_axis(a: &Point, b: &Point) -> Option<usize> {
    if a.dim() != b.dim() {
        return None;
    }
    let mut axis = None;
    for (i, (x, y)) in a.0.iter().zip(&b.0).enumerate() {
        if x != y {
            if axis.is_some() || (x - y).abs() != 1 {
                return None;
            }
            axis = Some(i);
        }
    }
    axis
}

/// An unordered nearest-neighbour edge, stored with `tail < head`
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    tail: Point,
    head: Point,
}

impl Edge {
    pub fn new(a: Point, b: Point) -> Result<Self, LatticeError> {
        if unit_axis(&a, &b).is_none() {
            return Err(LatticeError::NotAdjacent(a.to_string(), b.to_string()));
        }
        Ok(if a < b { Edge { tail: a, head: b } } else { Edge { tail: b, head: a } })
    }

    /// The edge from `lower` to `lower + e_axis`.
    pub fn from_lower(lower: Point, axis: usize) -> Self {
        let head = lower.shifted(axis, 1);
        Edge { tail: lower, head }
    }

    pub fn endpoints(&self) -> (&Point, &Point) {
        (&self.tail, &self.head)
    }

    /// The lexicographically smaller endpoint.
    pub fn lower(&self) -> &Point {
        &self.tail
    }

    pub fn upper(&self) -> &Point {
        &self.head
    }

    pub fn axis(&self) -> usize {
        unit_axis(&self.tail, &self.head).expect("edge endpoints are adjacent")
    }

    pub fn dim(&self) -> usize {
        self.tail.dim()
    }

    pub fn is_vertical(&self) -> bool {
        self.axis() + 1 == self.dim()
    }

    /// The default orientation used wherever a stream carries nothing:
    /// from the lexicographically smaller endpoint to the larger one.
    pub fn default_orientation(&self) -> OrientedEdge {
        OrientedEdge { tail: self.tail.clone(), head: self.head.clone() }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}–{}", self.tail, self.head)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrientedEdge {
    pub tail: Point,
    pub head: Point,
}

impl OrientedEdge {
    pub fn new(tail: Point, head: Point) -> Result<Self, LatticeError> {
        if unit_axis(&tail, &head).is_none() {
            return Err(LatticeError::NotAdjacent(tail.to_string(), head.to_string()));
        }
        Ok(OrientedEdge { tail, head })
    }

    pub fn unoriented(&self) -> Edge {
        Edge::new(self.tail.clone(), self.head.clone()).expect("validated at construction")
    }

    pub fn reversed(&self) -> Self {
        OrientedEdge { tail: self.head.clone(), head: self.tail.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    Vertical,
    Horizontal,
}

pub fn classify_edge(e: &Edge) -> EdgeClass {
    if e.is_vertical() {
        EdgeClass::Vertical
    } else {
        EdgeClass::Horizontal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    Bottom,
    Top,
}

/// The cylinder `offset + ∏ ]0,k_i] × ]0,m]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxSpec {
    dims: Vec<usize>,
    height: usize,
    offset: Vec<i64>,
}

impl BoxSpec {
    pub fn new(dims: Vec<usize>, height: usize) -> Result<Self, LatticeError> {
        let offset = vec![0; dims.len() + 1];
        Self::with_offset(dims, height, offset)
    }

    pub fn with_offset(dims: Vec<usize>, height: usize, offset: Vec<i64>) -> Result<Self, LatticeError> {
        if dims.is_empty() {
            return Err(LatticeError::Dimension);
        }
        if dims.iter().any(|&k| k == 0) || height == 0 {
            return Err(LatticeError::EmptyBox);
        }
        if offset.len() != dims.len() + 1 {
            return Err(LatticeError::OffsetLength { expected: dims.len() + 1, got: offset.len() });
        }
        Ok(BoxSpec { dims, height, offset })
    }

    /// The cube-based cylinder `]0,n]^{d-1} × ]0,h]`.
    pub fn cube(d: usize, n: usize, h: usize) -> Result<Self, LatticeError> {
        if d < 2 {
            return Err(LatticeError::Dimension);
        }
        Self::new(vec![n; d - 1], h)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    /// Lattice dimension `d`.
    pub fn dim(&self) -> usize {
        self.dims.len() + 1
    }

    /// Number of base points, `∏ k_i`.
    pub fn base_area(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of lattice points of the box itself (bottom face excluded).
    pub fn vertex_count(&self) -> usize {
        self.base_area() * self.height
    }

    /// Height of the bottom face.
    pub fn bottom_z(&self) -> i64 {
        self.offset[self.dims.len()]
    }

    pub fn top_z(&self) -> i64 {
        self.bottom_z() + self.height as i64
    }

    /// Membership of a lattice point in the half-open box.
    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() {
            return false;
        }
        let base_ok = self
            .dims
            .iter()
            .zip(&self.offset)
            .zip(p.base())
            .all(|((&k, &o), &c)| c > o && c <= o + k as i64);
        let z = p.height();
        base_ok && z > self.bottom_z() && z <= self.top_z()
    }

    /// The same box translated by `delta`.
    pub fn translated(&self, delta: &[i64]) -> Self {
        let offset = self.offset.iter().zip(delta).map(|(o, t)| o + t).collect();
        BoxSpec { dims: self.dims.clone(), height: self.height, offset }
    }

    /// The box of the same base whose bottom face is this box's top face.
    pub fn stacked_above(&self, height: usize) -> Self {
        let mut offset = self.offset.clone();
        *offset.last_mut().unwrap() = self.top_z();
        BoxSpec { dims: self.dims.clone(), height, offset }
    }

    /// Base points in lexicographic order.
    pub fn base_points(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::with_capacity(self.dims.len())];
        for (&k, &o) in self.dims.iter().zip(&self.offset) {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (1..=k as i64).map(move |c| {
                        let mut v = prefix.clone();
                        v.push(o + c);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

pub fn edges_in_box(b: &BoxSpec) -> Vec<Edge> {
    BoxGraph::new(b).edges()
}

pub fn face_vertices(b: &BoxSpec, which: Face) -> Vec<Point> {
    let z = match which {
        Face::Bottom => b.bottom_z(),
        Face::Top => b.top_z(),
    };
    b.base_points()
        .into_iter()
        .map(|mut c| {
            c.push(z);
            Point(c)
        })
        .collect()
}

/// A hyper-rectangle `∏ ]lower_i, upper_i]` of `Z^{d-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RectSpec {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl RectSpec {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self, LatticeError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(LatticeError::Dimension);
        }
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            return Err(LatticeError::EmptyRect);
        }
        Ok(RectSpec { lower, upper })
    }

    /// `]0,n]^{d-1}`.
    pub fn cube(d: usize, n: usize) -> Result<Self, LatticeError> {
        if d < 2 {
            return Err(LatticeError::Dimension);
        }
        Self::new(vec![0; d - 1], vec![n as i64; d - 1])
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    /// Lattice dimension of the cylinder `S × R`.
    pub fn dim(&self) -> usize {
        self.lower.len() + 1
    }

    pub fn side_lengths(&self) -> Vec<usize> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| (b - a) as usize).collect()
    }

    pub fn area(&self) -> usize {
        self.side_lengths().iter().product()
    }

    /// The box `S × ]lo, hi]`.
    pub fn slab_box(&self, lo: i64, hi: i64) -> Result<BoxSpec, LatticeError> {
        if hi <= lo {
            return Err(LatticeError::EmptyBox);
        }
        let mut offset = self.lower.clone();
        offset.push(lo);
        BoxSpec::with_offset(self.side_lengths(), (hi - lo) as usize, offset)
    }

    pub fn contains_base(&self, base: &[i64]) -> bool {
        base.len() == self.lower.len()
            && base.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&c, (&a, &b))| c > a && c <= b)
    }

    /// Whether `p` lies in the inner vertex boundary of `S × R`: inside the
    /// cylinder with a nearest neighbour outside it.
    pub fn is_inner_boundary(&self, p: &Point) -> bool {
        let base = p.base();
        self.contains_base(base)
            && base
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .any(|(&c, (&a, &b))| c == a + 1 || c == b)
    }

    /// Union with a rectangle sharing a full side, if it is a rectangle.
    pub fn union_with(&self, other: &RectSpec) -> Option<RectSpec> {
        if self.lower.len() != other.lower.len() {
            return None;
        }
        let differing: Vec<usize> = (0..self.lower.len())
            .filter(|&i| self.lower[i] != other.lower[i] || self.upper[i] != other.upper[i])
            .collect();
        if differing.len() != 1 {
            return None;
        }
        let i = differing[0];
        let (lo, hi) = if self.upper[i] == other.lower[i] {
            (self.lower[i], other.upper[i])
        } else if other.upper[i] == self.lower[i] {
            (other.lower[i], self.upper[i])
        } else {
            return None;
        };
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower[i] = lo;
        upper[i] = hi;
        Some(RectSpec { lower, upper })
    }
}

/// Edges of `E(∂^in(S × R))` inside the slab `S × ]lo, hi]`.
pub fn inner_boundary_edges(s: &RectSpec, lo: i64, hi: i64) -> Result<Vec<Edge>, LatticeError> {
    let slab = s.slab_box(lo, hi)?;
    Ok(edges_in_box(&slab)
        .into_iter()
        .filter(|e| s.is_inner_boundary(e.lower()) && s.is_inner_boundary(e.upper()))
        .collect())
}

pub const NO_EDGE: usize = usize::MAX;

/// Dense indexing of a box's closure (bottom face included) and of its
/// edges.
///
/// Vertex indices follow lexicographic order of the points, with heights
/// running over `bottom_z ..= top_z`. Edge ids follow lexicographic order of
/// `(tail, head)`.
#[derive(Clone, Debug)]
pub struct BoxGraph {
    spec: BoxSpec,
    strides: Vec<usize>,
    layers: usize,
    ends: Vec<(usize, usize)>,
    edge_at: Vec<usize>,
}

impl BoxGraph {
    pub fn new(spec: &BoxSpec) -> Self {
        let d = spec.dim();
        let layers = spec.height + 1;
        let mut radix: Vec<usize> = spec.dims.clone();
        radix.push(layers);
        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * radix[i + 1];
        }
        let n_vertices = strides[0] * radix[0];
        let mut edge_at = vec![NO_EDGE; n_vertices * d];
        let mut ends = Vec::new();
        let mut coords = vec![0usize; d];
        for v in 0..n_vertices {
            // coords are relative: base in 0..k_i (point o_i + 1 + c), height 0..=m
            let mut rest = v;
            for i in 0..d {
                coords[i] = rest / strides[i];
                rest %= strides[i];
            }
            let z = coords[d - 1];
            for axis in 0..d {
                let ok = if axis + 1 == d {
                    z < spec.height
                } else {
                    z >= 1 && coords[axis] + 1 < spec.dims[axis]
                };
                if ok {
                    edge_at[v * d + axis] = ends.len();
                    ends.push((v, v + strides[axis]));
                }
            }
        }
        // Vertices are visited in lexicographic order; for a common tail the
        // head with the larger axis index is lexicographically smaller.
        let mut order: Vec<usize> = (0..ends.len()).collect();
        order.sort_by_key(|&i| ends[i]);
        let mut rank = vec![0usize; ends.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let ends: Vec<(usize, usize)> = order.iter().map(|&i| ends[i]).collect();
        for slot in edge_at.iter_mut() {
            if *slot != NO_EDGE {
                *slot = rank[*slot];
            }
        }
        BoxGraph { spec: spec.clone(), strides, layers, ends, edge_at }
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn num_vertices(&self) -> usize {
        self.edge_at.len() / self.dim()
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    /// `(tail, head)` vertex indices of an edge; `tail` is the lexicographically
    /// smaller endpoint.
    pub fn ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn all_ends(&self) -> &[(usize, usize)] {
        &self.ends
    }

    /// Height of a vertex relative to the bottom face (0 ..= m).
    pub fn layer(&self, v: usize) -> usize {
        v % self.layers
    }

    /// Index of the base point of a vertex, in lexicographic base order.
    pub fn base_index(&self, v: usize) -> usize {
        v / self.layers
    }

    pub fn vertex(&self, base_index: usize, layer: usize) -> usize {
        base_index * self.layers + layer
    }

    pub fn is_bottom(&self, v: usize) -> bool {
        self.layer(v) == 0
    }

    pub fn is_top(&self, v: usize) -> bool {
        self.layer(v) == self.spec.height
    }

    pub fn axis(&self, e: usize) -> usize {
        let (t, h) = self.ends[e];
        let diff = h - t;
        self.strides.iter().position(|&s| s == diff).expect("unit edge")
    }

    pub fn is_vertical(&self, e: usize) -> bool {
        self.axis(e) + 1 == self.dim()
    }

    /// Edge with lower endpoint `v` along `axis`.
    pub fn edge_from(&self, v: usize, axis: usize) -> Option<usize> {
        let id = self.edge_at[v * self.dim() + axis];
        (id != NO_EDGE).then_some(id)
    }

    /// Vertical edge `⟨(x, z), (x, z+1)⟩` with `z` relative to the bottom face.
    pub fn vertical_edge(&self, base_index: usize, layer: usize) -> Option<usize> {
        if layer >= self.spec.height {
            return None;
        }
        self.edge_from(self.vertex(base_index, layer), self.dim() - 1)
    }

    pub fn point(&self, v: usize) -> Point {
        let d = self.dim();
        let mut rest = v;
        let mut c = Vec::with_capacity(d);
        for i in 0..d {
            let r = rest / self.strides[i];
            rest %= self.strides[i];
            let base = if i + 1 == d { self.spec.bottom_z() } else { self.spec.offset[i] + 1 };
            c.push(base + r as i64);
        }
        Point(c)
    }

    pub fn vertex_index(&self, p: &Point) -> Option<usize> {
        let d = self.dim();
        if p.dim() != d {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..d {
            let (lo, extent) = if i + 1 == d {
                (self.spec.bottom_z(), self.layers)
            } else {
                (self.spec.offset[i] + 1, self.spec.dims[i])
            };
            let r = p.0[i] - lo;
            if r < 0 || r as usize >= extent {
                return None;
            }
            idx += r as usize * self.strides[i];
        }
        Some(idx)
    }

    pub fn edge(&self, e: usize) -> Edge {
        let (t, h) = self.ends[e];
        Edge { tail: self.point(t), head: self.point(h) }
    }

    pub fn edges(&self) -> Vec<Edge> {
        (0..self.ends.len()).map(|e| self.edge(e)).collect()
    }

    pub fn edge_id(&self, e: &Edge) -> Option<usize> {
        let v = self.vertex_index(e.lower())?;
        self.edge_from(v, e.axis())
    }

    /// Maps every edge of `self` to its id in the larger graph `outer`.
    pub fn embed_into(&self, outer: &BoxGraph) -> Result<Vec<usize>, LatticeError> {
        (0..self.num_edges())
            .map(|e| {
                let edge = self.edge(e);
                outer.edge_id(&edge).ok_or_else(|| LatticeError::NotContained(edge.to_string()))
            })
            .collect()
    }
}
