//! Capacity laws, seeded capacity fields in exact `1/R` units, and the
//! power-of-two discretization `t^k(e) = ⌊k t(e)⌋ / k`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::CapacityError;
use crate::lattice::{BoxGraph, BoxSpec};
use crate::rational::{u64_threshold, Exact};
use crate::rng::{edge_key, EdgeStreams};

/// Default number of capacity units per 1.0.
pub const DEFAULT_RESOLUTION: u64 = 1 << 20;

/// Largest value a sampled capacity may take, in units.
const MAX_UNITS: f64 = (1u64 << 52) as f64;

pub fn check_resolution(r: u64) -> Result<(), CapacityError> {
    if r == 0 || !r.is_power_of_two() {
        return Err(CapacityError::Resolution(r));
    }
    Ok(())
}

/// Checks that `k` is a power of two dividing the power of two `r`.
pub fn check_level(k: u64, r: u64) -> Result<(), CapacityError> {
    check_resolution(r)?;
    if k == 0 || !k.is_power_of_two() || k > r {
        return Err(CapacityError::Level { level: k, resolution: r });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: Exact,
}

/// A capacity law `F` on `[0, ∞[`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// `hi` with probability `p`, `lo` otherwise.
    Bernoulli { p: Exact, lo: f64, hi: f64 },
    FiniteDiscrete { atoms: Vec<Atom> },
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    /// `|N(0, sigma²)|`.
    HalfNormal { sigma: f64 },
}

fn nonneg_finite(x: f64, what: &str) -> Result<(), CapacityError> {
    if !x.is_finite() || x < 0.0 {
        return Err(CapacityError::Distribution(format!("{what} must be finite and non-negative, got {x}")));
    }
    Ok(())
}

fn probability(p: &Exact, what: &str) -> Result<(), CapacityError> {
    if p.0 < BigRational::zero() || p.0 > BigRational::one() {
        return Err(CapacityError::Distribution(format!("{what} = {p} is not a probability")));
    }
    Ok(())
}

impl DistributionSpec {
    pub fn bernoulli(p: Exact, lo: f64, hi: f64) -> Self {
        DistributionSpec::Bernoulli { p, lo, hi }
    }

    /// The degenerate law at `c`.
    pub fn constant(c: f64) -> Self {
        DistributionSpec::FiniteDiscrete { atoms: vec![Atom { value: c, prob: Exact::from_integer(1) }] }
    }

    pub fn validate(&self) -> Result<(), CapacityError> {
        match self {
            DistributionSpec::Bernoulli { p, lo, hi } => {
                probability(p, "p")?;
                nonneg_finite(*lo, "lo")?;
                nonneg_finite(*hi, "hi")?;
                if lo > hi {
                    return Err(CapacityError::Distribution(format!("lo = {lo} exceeds hi = {hi}")));
                }
            }
            DistributionSpec::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    return Err(CapacityError::Distribution("no atoms".into()));
                }
                let mut total = BigRational::zero();
                for a in atoms {
                    nonneg_finite(a.value, "atom value")?;
                    probability(&a.prob, "atom probability")?;
                    total += &a.prob.0;
                }
                if !total.is_one() {
                    return Err(CapacityError::Distribution(format!(
                        "atom probabilities sum to {}, not 1",
                        Exact(total)
                    )));
                }
            }
            DistributionSpec::Uniform { a, b } => {
                nonneg_finite(*a, "a")?;
                nonneg_finite(*b, "b")?;
                if a > b {
                    return Err(CapacityError::Distribution(format!("a = {a} exceeds b = {b}")));
                }
            }
            DistributionSpec::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(CapacityError::Distribution(format!("rate must be positive, got {rate}")));
                }
            }
            DistributionSpec::HalfNormal { sigma } => {
                if !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(CapacityError::Distribution(format!("sigma must be positive, got {sigma}")));
                }
            }
        }
        Ok(())
    }

    /// Atoms of a finite-support law with positive mass, keyed by their
    /// value in `1/r` units (coinciding units merged), in increasing order.
    pub fn unit_atoms(&self, r: u64) -> Option<Vec<(u64, BigRational)>> {
        let raw: Vec<(f64, BigRational)> = match self {
            DistributionSpec::Bernoulli { p, lo, hi } => {
                vec![(*lo, BigRational::one() - &p.0), (*hi, p.0.clone())]
            }
            DistributionSpec::FiniteDiscrete { atoms } => {
                atoms.iter().map(|a| (a.value, a.prob.0.clone())).collect()
            }
            _ => return None,
        };
        let mut out: Vec<(u64, BigRational)> = Vec::new();
        for (v, p) in raw {
            if p.is_zero() {
                continue;
            }
            let u = (v * r as f64).floor() as u64;
            match out.iter_mut().find(|(w, _)| *w == u) {
                Some((_, q)) => *q += p,
                None => out.push((u, p)),
            }
        }
        out.sort_by_key(|(u, _)| *u);
        Some(out)
    }
}

/// A law prepared for drawing at a fixed resolution.
#[derive(Clone, Debug)]
pub struct Sampler {
    resolution: u64,
    kind: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    /// Cumulative `u64` thresholds and the unit value of each atom.
    Finite { cumulative: Vec<u128>, units: Vec<u64> },
    Uniform { a: f64, width: f64 },
    Exponential { rate: f64 },
    HalfNormal { sigma: f64 },
}

fn quantize(v: f64, r: u64) -> Result<u64, CapacityError> {
    let scaled = (v * r as f64).floor();
    if !scaled.is_finite() || !(0.0..MAX_UNITS).contains(&scaled) {
        return Err(CapacityError::Overflow(v));
    }
    Ok(scaled as u64)
}

impl Sampler {
    pub fn new(dist: &DistributionSpec, resolution: u64) -> Result<Self, CapacityError> {
        check_resolution(resolution)?;
        dist.validate()?;
        let kind = match dist {
            DistributionSpec::Bernoulli { .. } | DistributionSpec::FiniteDiscrete { .. } => {
                let atoms = match dist {
                    DistributionSpec::Bernoulli { p, lo, hi } => vec![
                        Atom { value: *lo, prob: Exact(BigRational::one() - &p.0) },
                        Atom { value: *hi, prob: p.clone() },
                    ],
                    DistributionSpec::FiniteDiscrete { atoms } => atoms.clone(),
                    _ => unreachable!(),
                };
                let mut acc = BigRational::zero();
                let mut cumulative = Vec::with_capacity(atoms.len());
                let mut units = Vec::with_capacity(atoms.len());
                for a in &atoms {
                    acc += &a.prob.0;
                    cumulative.push(u64_threshold(&acc));
                    units.push(quantize(a.value, resolution)?);
                }
                SamplerKind::Finite { cumulative, units }
            }
            DistributionSpec::Uniform { a, b } => {
                quantize(*b, resolution)?;
                SamplerKind::Uniform { a: *a, width: b - a }
            }
            DistributionSpec::Exponential { rate } => SamplerKind::Exponential { rate: *rate },
            DistributionSpec::HalfNormal { sigma } => SamplerKind::HalfNormal { sigma: *sigma },
        };
        Ok(Sampler { resolution, kind })
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    /// Capacity of the edge selected by `key`, in units.
    pub fn draw(&self, streams: &EdgeStreams, key: u64) -> Result<u64, CapacityError> {
        let mut d = streams.stream(key);
        let r = self.resolution;
        match &self.kind {
            SamplerKind::Finite { cumulative, units } => {
                let x = d.next_u64() as u128;
                let i = cumulative.iter().position(|&c| x < c).unwrap_or(units.len() - 1);
                Ok(units[i])
            }
            SamplerKind::Uniform { a, width } => quantize(a + width * d.unit(), r),
            SamplerKind::Exponential { rate } => quantize(-libm::log1p(-d.unit()) / rate, r),
            SamplerKind::HalfNormal { sigma } => {
                let u1 = d.unit_open_zero();
                let u2 = d.unit();
                let radius = libm::sqrt(-2.0 * libm::log(u1));
                let z = radius * libm::cos(2.0 * std::f64::consts::PI * u2);
                quantize(sigma * z.abs(), r)
            }
        }
    }
}

/// Exact capacities, one count of `1/R` units per edge id of a box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityField {
    resolution: u64,
    caps: Vec<u64>,
    seed: Option<u64>,
}

impl CapacityField {
    pub fn from_units(resolution: u64, caps: Vec<u64>) -> Result<Self, CapacityError> {
        check_resolution(resolution)?;
        Ok(CapacityField { resolution, caps, seed: None })
    }

    pub fn constant(graph: &BoxGraph, resolution: u64, units: u64) -> Result<Self, CapacityError> {
        Self::from_units(resolution, vec![units; graph.num_edges()])
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn units(&self) -> &[u64] {
        &self.caps
    }

    pub fn get(&self, e: usize) -> u64 {
        self.caps[e]
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn set(&mut self, e: usize, units: u64) {
        self.caps[e] = units;
    }

    /// Capacity as a real number.
    pub fn value(&self, e: usize) -> f64 {
        self.caps[e] as f64 / self.resolution as f64
    }

    pub fn check_shape(&self, graph: &BoxGraph) -> Result<(), CapacityError> {
        if self.caps.len() != graph.num_edges() {
            return Err(CapacityError::Shape { expected: graph.num_edges(), got: self.caps.len() });
        }
        Ok(())
    }

    /// The field seen by the sub-box `inner` of the box `outer`.
    pub fn restrict(&self, outer: &BoxGraph, inner: &BoxGraph) -> Result<CapacityField, crate::error::LatticeError> {
        let map = inner.embed_into(outer)?;
        Ok(CapacityField { resolution: self.resolution, caps: map.iter().map(|&e| self.caps[e]).collect(), seed: self.seed })
    }
}

/// Draws the field of `graph` under `(dist, resolution, seed)`.
pub fn sample_graph_field(
    graph: &BoxGraph,
    dist: &DistributionSpec,
    resolution: u64,
    seed: u64,
) -> Result<CapacityField, CapacityError> {
    let sampler = Sampler::new(dist, resolution)?;
    let streams = EdgeStreams::new(seed);
    let caps = (0..graph.num_edges())
        .map(|e| {
            let (tail, _) = graph.ends(e);
            let lower = graph.point(tail);
            sampler.draw(&streams, edge_key(&lower.0, graph.axis(e)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CapacityField { resolution, caps, seed: Some(seed) })
}

pub fn sample_field(
    b: &BoxSpec,
    dist: &DistributionSpec,
    resolution: u64,
    seed: u64,
) -> Result<CapacityField, CapacityError> {
    sample_graph_field(&BoxGraph::new(b), dist, resolution, seed)
}

/// `t^k`: every capacity rounded down to a multiple of `R/k` units.
pub fn discretize(field: &CapacityField, k: u64) -> Result<CapacityField, CapacityError> {
    check_level(k, field.resolution)?;
    let step = field.resolution / k;
    Ok(CapacityField {
        resolution: field.resolution,
        caps: field.caps.iter().map(|c| c - c % step).collect(),
        seed: field.seed,
    })
}

/// Essential supremum of a law, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Supremum {
    Finite(f64),
    Infinite,
}

impl Supremum {
    pub fn is_finite(&self) -> bool {
        matches!(self, Supremum::Finite(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistConstants {
    /// `μ = sup{λ | F([0,λ[) < 1}`.
    pub mu: Supremum,
    /// Essential infimum.
    pub beta: f64,
    /// `P[t(e) = μ]`.
    pub q_mu: f64,
    /// `q_μ` as an exact rational, for finite-support laws.
    pub q_mu_exact: Option<Exact>,
}

pub fn dist_constants(dist: &DistributionSpec) -> DistConstants {
    let finite_atoms: Option<Vec<(f64, BigRational)>> = match dist {
        DistributionSpec::Bernoulli { p, lo, hi } => Some(vec![(*lo, BigRational::one() - &p.0), (*hi, p.0.clone())]),
        DistributionSpec::FiniteDiscrete { atoms } => {
            Some(atoms.iter().map(|a| (a.value, a.prob.0.clone())).collect())
        }
        _ => None,
    };
    match (dist, finite_atoms) {
        (_, Some(atoms)) => {
            let support: Vec<&(f64, BigRational)> = atoms.iter().filter(|(_, p)| !p.is_zero()).collect();
            let mu = support.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
            let beta = support.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
            let q: BigRational = support.iter().filter(|(v, _)| *v == mu).map(|(_, p)| p.clone()).sum();
            let q = Exact(q);
            DistConstants { mu: Supremum::Finite(mu), beta, q_mu: q.to_f64(), q_mu_exact: Some(q) }
        }
        (DistributionSpec::Uniform { a, b }, None) => {
            let q = if a == b { 1.0 } else { 0.0 };
            DistConstants { mu: Supremum::Finite(*b), beta: *a, q_mu: q, q_mu_exact: None }
        }
        _ => DistConstants { mu: Supremum::Infinite, beta: 0.0, q_mu: 0.0, q_mu_exact: None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> Exact {
        Exact::ratio(1, 2)
    }

    fn graph(dims: Vec<usize>, h: usize) -> BoxGraph {
        BoxGraph::new(&BoxSpec::new(dims, h).unwrap())
    }

    #[test]
    fn degenerate_bernoulli_is_constant() {
        let g = graph(vec![3, 2], 3);
        let f = sample_graph_field(&g, &DistributionSpec::bernoulli(Exact::from_integer(1), 0.0, 1.0), 1 << 20, 9).unwrap();
        assert!(f.units().iter().all(|&c| c == 1 << 20));
    }

    #[test]
    fn fair_coin_mean_within_four_sigma() {
        // 10^5 edges; the count of ones is Binomial(N, 1/2) with sd sqrt(N)/2.
        let g = graph(vec![100, 100], 5);
        let dist = DistributionSpec::FiniteDiscrete {
            atoms: vec![Atom { value: 0.0, prob: half() }, Atom { value: 1.0, prob: half() }],
        };
        let f = sample_graph_field(&g, &dist, 1 << 20, 2024).unwrap();
        let n = f.len() as f64;
        assert!(n >= 1e5);
        let ones = f.units().iter().filter(|&&c| c == 1 << 20).count() as f64;
        assert!(f.units().iter().all(|&c| c == 0 || c == 1 << 20));
        let mean = ones / n;
        let sd = 0.5 / n.sqrt();
        assert!((mean - 0.5).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn quantized_uniform_mean() {
        // floor(R·U)/R has mean 1/2 - 1/(2R) and variance close to 1/12.
        let r = 1u64 << 20;
        let g = graph(vec![100, 100], 5);
        let f = sample_graph_field(&g, &DistributionSpec::Uniform { a: 0.0, b: 1.0 }, r, 77).unwrap();
        assert!(f.units().iter().all(|&c| c < r));
        let n = f.len() as f64;
        let mean = f.units().iter().map(|&c| c as f64 / r as f64).sum::<f64>() / n;
        let expected = 0.5 - 0.5 / r as f64;
        let sd = (1.0f64 / 12.0).sqrt() / n.sqrt();
        assert!((mean - expected).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn continuous_laws_are_non_negative_and_finite() {
        let g = graph(vec![20], 20);
        for dist in [DistributionSpec::Exponential { rate: 1.0 }, DistributionSpec::HalfNormal { sigma: 2.0 }] {
            let f = sample_graph_field(&g, &dist, 1 << 20, 5).unwrap();
            let mean = f.units().iter().map(|&c| c as f64).sum::<f64>() / f.len() as f64 / (1u64 << 20) as f64;
            assert!(mean > 0.5 && mean < 2.5, "{dist:?} mean {mean}");
        }
    }

    #[test]
    fn sampling_rejects_bad_parameters() {
        let b = BoxSpec::new(vec![2], 2).unwrap();
        assert!(sample_field(&b, &DistributionSpec::Uniform { a: 0.0, b: 1.0 }, 0, 1).is_err());
        assert!(sample_field(&b, &DistributionSpec::Uniform { a: 0.0, b: 1.0 }, 3, 1).is_err());
        assert!(sample_field(&b, &DistributionSpec::Exponential { rate: -1.0 }, 1 << 4, 1).is_err());
        assert!(sample_field(&b, &DistributionSpec::Uniform { a: 2.0, b: 1.0 }, 1 << 4, 1).is_err());
        let bad = DistributionSpec::FiniteDiscrete {
            atoms: vec![Atom { value: 0.0, prob: half() }, Atom { value: 1.0, prob: Exact::ratio(1, 3) }],
        };
        assert!(sample_field(&b, &bad, 1 << 4, 1).is_err());
    }

    #[test]
    fn same_inputs_same_field() {
        let b = BoxSpec::new(vec![4, 3], 4).unwrap();
        let dist = DistributionSpec::Exponential { rate: 1.5 };
        assert_eq!(sample_field(&b, &dist, 1 << 20, 3).unwrap(), sample_field(&b, &dist, 1 << 20, 3).unwrap());
        assert_ne!(sample_field(&b, &dist, 1 << 20, 3).unwrap(), sample_field(&b, &dist, 1 << 20, 4).unwrap());
    }

    #[test]
    fn capacities_depend_only_on_the_edge() {
        // A sub-box sees exactly the parent's capacities on shared edges.
        let outer = graph(vec![5, 4], 6);
        let inner = BoxGraph::new(&BoxSpec::with_offset(vec![2, 3], 3, vec![1, 0, 2]).unwrap());
        let dist = DistributionSpec::Uniform { a: 0.0, b: 3.0 };
        let big = sample_graph_field(&outer, &dist, 1 << 16, 41).unwrap();
        let small = sample_graph_field(&inner, &dist, 1 << 16, 41).unwrap();
        assert_eq!(big.restrict(&outer, &inner).unwrap().units(), small.units());
    }

    #[test]
    fn discretize_examples() {
        let r = 1u64 << 20;
        let t = (0.7 * r as f64).floor() as u64;
        let f = CapacityField::from_units(r, vec![t]).unwrap();
        assert_eq!(discretize(&f, 2).unwrap().get(0), r / 2);
        assert_eq!(discretize(&f, r).unwrap(), f);
        assert!(discretize(&f, 3).is_err());
        assert!(discretize(&f, 2 * r).is_err());
    }

    #[test]
    fn finer_levels_dominate() {
        let g = graph(vec![6, 6], 6);
        let f = sample_graph_field(&g, &DistributionSpec::Exponential { rate: 1.0 }, 1 << 20, 8).unwrap();
        let f4 = discretize(&f, 4).unwrap();
        let f8 = discretize(&f, 8).unwrap();
        for e in 0..f.len() {
            assert!(f4.get(e) <= f8.get(e));
            assert!(f8.get(e) <= f.get(e));
        }
    }

    #[test]
    fn constants() {
        let c = dist_constants(&DistributionSpec::bernoulli(Exact::ratio(9, 10), 0.0, 1.0));
        assert_eq!(c.mu, Supremum::Finite(1.0));
        assert_eq!(c.beta, 0.0);
        assert_eq!(c.q_mu_exact, Some(Exact::ratio(9, 10)));
        assert!((c.q_mu - 0.9).abs() < 1e-15);
        let u = dist_constants(&DistributionSpec::Uniform { a: 2.0, b: 5.0 });
        assert_eq!((u.mu, u.beta, u.q_mu), (Supremum::Finite(5.0), 2.0, 0.0));
        let e = dist_constants(&DistributionSpec::Exponential { rate: 1.0 });
        assert_eq!((e.mu, e.beta, e.q_mu), (Supremum::Infinite, 0.0, 0.0));
        let zero_mass_top = DistributionSpec::FiniteDiscrete {
            atoms: vec![
                Atom { value: 1.0, prob: Exact::from_integer(1) },
                Atom { value: 5.0, prob: Exact::from_integer(0) },
            ],
        };
        let z = dist_constants(&zero_mass_top);
        assert_eq!((z.mu, z.beta, z.q_mu), (Supremum::Finite(1.0), 1.0, 1.0));
    }

    #[test]
    fn exact_atoms_are_stored_exactly() {
        let g = graph(vec![3], 3);
        let dist = DistributionSpec::FiniteDiscrete {
            atoms: vec![Atom { value: 0.25, prob: half() }, Atom { value: 1.5, prob: half() }],
        };
        let f = sample_graph_field(&g, &dist, 1 << 10, 1).unwrap();
        assert!(f.units().iter().all(|&c| c == 256 || c == 1536));
    }

    proptest! {
        #[test]
        fn discretize_composes(caps in proptest::collection::vec(0u64..1 << 24, 1..50), a in 0u32..=10, b in 0u32..=10) {
            let r = 1u64 << 10;
            let f = CapacityField::from_units(r, caps).unwrap();
            let (hi, lo) = (1u64 << a.max(b), 1u64 << a.min(b));
            let twice = discretize(&discretize(&f, hi).unwrap(), lo).unwrap();
            prop_assert_eq!(twice, discretize(&f, lo).unwrap());
            let once = discretize(&f, lo).unwrap();
            for e in 0..f.len() {
                prop_assert!(once.get(e) <= f.get(e));
            }
        }

        #[test]
        fn swapping_edges_swaps_capacities(seed in any::<u64>(), x in -50i64..50, y in -50i64..50) {
            let sampler = Sampler::new(&DistributionSpec::Uniform { a: 0.0, b: 1.0 }, 1 << 20).unwrap();
            let streams = EdgeStreams::new(seed);
            let ka = edge_key(&[x, 0], 0);
            let kb = edge_key(&[y, 1], 1);
            let forward = [sampler.draw(&streams, ka).unwrap(), sampler.draw(&streams, kb).unwrap()];
            let backward = [sampler.draw(&streams, kb).unwrap(), sampler.draw(&streams, ka).unwrap()];
            prop_assert_eq!(forward[0], backward[1]);
            prop_assert_eq!(forward[1], backward[0]);
        }
    }
}
