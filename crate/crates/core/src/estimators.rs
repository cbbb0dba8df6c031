//! Monte Carlo estimators of `ν` and `ψ(λ)`, exact enumeration for
//! finite-support laws on tiny boxes, and shape diagnostics of `ψ` curves.
//!
//! Replica `i` draws its field with seed `replica_seed(seed, i)`, so results
//! depend only on the parameters, never on the worker count.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{check_level, discretize, sample_field, CapacityField, DistributionSpec};
use crate::cuts::{slab_spec, tau_slab, SlabProblem};
use crate::error::EstimateError;
use crate::flow::max_flow_value;
use crate::lattice::{BoxGraph, BoxSpec, RectSpec};
use crate::rational::{ratio_to_f64, Exact};
use crate::rng::replica_seed;

/// Two-sided normal quantile used for Wilson intervals.
pub const DEFAULT_Z: f64 = 1.96;

/// Maps `f` over `0..count` on `workers` threads (0 picks the rayon
/// default), returning results in index order.
pub fn par_map<T, F>(count: u64, workers: usize, f: F) -> Result<Vec<T>, EstimateError>
where
    T: Send,
    F: Fn(u64) -> Result<T, EstimateError> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EstimateError::Parameter(e.to_string()))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuParams {
    pub dist: DistributionSpec,
    pub d: usize,
    pub n: usize,
    pub k_slab: usize,
    pub replications: u64,
    pub seed: u64,
    pub resolution: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub d: usize,
    pub n: usize,
    pub k_slab: usize,
    pub replications: u64,
    pub resolution: u64,
    pub seed: u64,
    /// `Σ τ` over replicas, in units.
    pub sum_units: BigUint,
    /// `Σ τ²` over replicas, in squared units.
    pub sum_sq_units: BigUint,
    /// Mean of `τ_{n^{d−1},k} / n^{d−1}`.
    pub mean: Exact,
    /// Standard error of the mean; NaN for a single replica.
    pub stderr: f64,
}

impl NuEstimate {
    pub fn from_sums(
        d: usize,
        n: usize,
        k_slab: usize,
        replications: u64,
        resolution: u64,
        seed: u64,
        sum_units: BigUint,
        sum_sq_units: BigUint,
    ) -> Self {
        let area = n.pow(d as u32 - 1) as u64;
        let scale = BigInt::from(area) * BigInt::from(resolution);
        let reps = BigInt::from(replications);
        let s = BigInt::from(sum_units.clone());
        let ss = BigInt::from(sum_sq_units.clone());
        let mean = BigRational::new(s.clone(), &reps * &scale);
        let stderr = if replications < 2 {
            f64::NAN
        } else {
            // Var of τ in units² with Bessel's correction, exactly.
            let var = BigRational::new(&ss * &reps - &s * &s, &reps * (&reps - 1));
            let var_x = var / BigRational::from_integer(&scale * &scale);
            libm::sqrt(ratio_to_f64(&var_x) / replications as f64)
        };
        NuEstimate { d, n, k_slab, replications, resolution, seed, sum_units, sum_sq_units, mean: Exact(mean), stderr }
    }

    /// Combines two runs over disjoint replica sets of the same parameters.
    pub fn merge(&self, other: &NuEstimate) -> Result<NuEstimate, EstimateError> {
        if (self.d, self.n, self.k_slab, self.resolution) != (other.d, other.n, other.k_slab, other.resolution) {
            return Err(EstimateError::Mismatch("nu estimates at different (d, n, k_slab, R)".into()));
        }
        Ok(NuEstimate::from_sums(
            self.d,
            self.n,
            self.k_slab,
            self.replications + other.replications,
            self.resolution,
            self.seed.min(other.seed),
            &self.sum_units + &other.sum_units,
            &self.sum_sq_units + &other.sum_sq_units,
        ))
    }
}

fn check_nu(p: &NuParams) -> Result<RectSpec, EstimateError> {
    if p.n == 0 || p.k_slab == 0 || p.replications == 0 {
        return Err(EstimateError::Parameter("n, k_slab and replications must be positive".into()));
    }
    crate::capacity::check_resolution(p.resolution)?;
    p.dist.validate()?;
    Ok(RectSpec::cube(p.d, p.n)?)
}

/// `τ_{n^{d−1},k}` of every replica, in units.
pub fn nu_replicas(p: &NuParams, workers: usize) -> Result<Vec<u64>, EstimateError> {
    let base = check_nu(p)?;
    par_map(p.replications, workers, |i| {
        let prob = SlabProblem::sample(base.clone(), p.k_slab, &p.dist, p.resolution, replica_seed(p.seed, i))?;
        Ok(tau_slab(&prob)?.value)
    })
}

pub fn estimate_nu(p: &NuParams, workers: usize) -> Result<NuEstimate, EstimateError> {
    let taus = nu_replicas(p, workers)?;
    let sum: BigUint = taus.iter().map(|&t| BigUint::from(t)).sum();
    let sum_sq: BigUint = taus.iter().map(|&t| BigUint::from(t) * BigUint::from(t)).sum();
    Ok(NuEstimate::from_sums(p.d, p.n, p.k_slab, p.replications, p.resolution, p.seed, sum, sum_sq))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiParams {
    pub dist: DistributionSpec,
    pub d: usize,
    pub n: usize,
    pub h: usize,
    pub k_disc: u64,
    pub samples: u64,
    pub seed: u64,
    pub resolution: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiEstimate {
    pub lambda: Exact,
    pub d: usize,
    pub n: usize,
    pub h: usize,
    pub k_disc: u64,
    pub samples: u64,
    pub hits: u64,
    pub seed: u64,
    /// `−ln(hits/samples) / (n^{d−1} h)`, or the one-sided bound
    /// `ln(samples) / (n^{d−1} h)` when there are no hits.
    pub psi_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Delta-method standard error of `psi_hat`; infinite without hits.
    pub psi_stderr: f64,
    pub infinite_flag: bool,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, samples: u64, z: f64) -> (f64, f64) {
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == samples { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

impl PsiEstimate {
    pub fn from_counts(
        lambda: Exact,
        d: usize,
        n: usize,
        h: usize,
        k_disc: u64,
        samples: u64,
        hits: u64,
        seed: u64,
    ) -> Self {
        let scale = (n.pow(d as u32 - 1) * h) as f64;
        let neg_log = |p: f64| if p <= 0.0 { f64::INFINITY } else { (-libm::log(p) / scale).max(0.0) };
        let (p_lo, p_hi) = wilson_interval(hits, samples, DEFAULT_Z);
        let infinite_flag = hits == 0;
        let psi_hat = if infinite_flag {
            libm::log(samples as f64) / scale
        } else {
            (libm::log(samples as f64) - libm::log(hits as f64)) / scale
        };
        let p = hits as f64 / samples as f64;
        let psi_stderr = if infinite_flag { f64::INFINITY } else { libm::sqrt((1.0 - p) / (samples as f64 * p)) / scale };
        PsiEstimate {
            lambda,
            d,
            n,
            h,
            k_disc,
            samples,
            hits,
            seed,
            psi_hat,
            ci_low: neg_log(p_hi),
            ci_high: neg_log(p_lo),
            psi_stderr,
            infinite_flag,
        }
    }

    pub fn hit_frequency(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }

    pub fn merge(&self, other: &PsiEstimate) -> Result<PsiEstimate, EstimateError> {
        let key = |e: &PsiEstimate| (e.lambda.clone(), e.d, e.n, e.h, e.k_disc);
        if key(self) != key(other) {
            return Err(EstimateError::Mismatch("psi estimates at different (λ, d, n, h, k_disc)".into()));
        }
        Ok(PsiEstimate::from_counts(
            self.lambda.clone(),
            self.d,
            self.n,
            self.h,
            self.k_disc,
            self.samples + other.samples,
            self.hits + other.hits,
            self.seed.min(other.seed),
        ))
    }
}

fn check_psi(p: &PsiParams) -> Result<BoxSpec, EstimateError> {
    if p.samples == 0 || p.h == 0 || p.n == 0 {
        return Err(EstimateError::Parameter("n, h and samples must be positive".into()));
    }
    check_level(p.k_disc, p.resolution)?;
    p.dist.validate()?;
    Ok(BoxSpec::cube(p.d, p.n, p.h)?)
}

/// `⌈λ · n^{d−1} · R⌉`, the least flow in units meeting `φ ≥ λ n^{d−1}`.
pub fn flow_threshold(lambda: &Exact, area: usize, resolution: u64) -> BigUint {
    let t = lambda.value() * BigRational::from_integer(BigInt::from(area as u128 * resolution as u128));
    t.ceil().to_integer().to_biguint().unwrap_or_default()
}

/// `φ^{k_disc}` of every replica, in units.
pub fn psi_replicas(p: &PsiParams, workers: usize) -> Result<Vec<u64>, EstimateError> {
    let spec = check_psi(p)?;
    let graph = BoxGraph::new(&spec);
    par_map(p.samples, workers, |i| {
        let field = sample_field(&spec, &p.dist, p.resolution, replica_seed(p.seed, i))?;
        let field = if p.k_disc == p.resolution { field } else { discretize(&field, p.k_disc)? };
        Ok(max_flow_value(&graph, &field)?)
    })
}

/// One estimate per `λ`, all from the same replicas.
pub fn estimate_psi_grid(p: &PsiParams, lambdas: &[Exact], workers: usize) -> Result<Vec<PsiEstimate>, EstimateError> {
    if lambdas.iter().any(|l| l.value() < &BigRational::zero()) {
        return Err(EstimateError::Parameter("λ must be non-negative".into()));
    }
    let flows = psi_replicas(p, workers)?;
    let area = p.n.pow(p.d as u32 - 1);
    Ok(lambdas
        .iter()
        .map(|l| {
            let need = flow_threshold(l, area, p.resolution);
            let hits = flows.iter().filter(|&&f| BigUint::from(f) >= need).count() as u64;
            PsiEstimate::from_counts(l.clone(), p.d, p.n, p.h, p.k_disc, p.samples, hits, p.seed)
        })
        .collect())
}

pub fn estimate_psi(p: &PsiParams, lambda: &Exact, workers: usize) -> Result<PsiEstimate, EstimateError> {
    Ok(estimate_psi_grid(p, std::slice::from_ref(lambda), workers)?.remove(0))
}

/// Default enumeration budget, `2^24` capacity assignments.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// `Σ P(t) · f(t)` over every capacity assignment `t` of `graph` under a
/// finite-support law. Values are summed per atom-count profile, so each
/// profile's probability is formed once.
fn enumerate_fields(
    graph: &BoxGraph,
    dist: &DistributionSpec,
    resolution: u64,
    budget: u64,
    mut f: impl FnMut(&CapacityField) -> Result<u64, EstimateError>,
) -> Result<BigRational, EstimateError> {
    crate::capacity::check_resolution(resolution)?;
    dist.validate()?;
    let atoms = dist.unit_atoms(resolution).ok_or(EstimateError::NotFinite)?;
    let m = graph.num_edges();
    let total = BigUint::from(atoms.len()).pow(m as u32);
    if total > BigUint::from(budget) {
        return Err(EstimateError::Budget { needed: total.to_string(), budget });
    }
    let total = total.to_u64().expect("within budget");
    let mut digits = vec![0usize; m];
    let mut counts = vec![0u32; atoms.len()];
    counts[0] = m as u32;
    let mut field = CapacityField::from_units(resolution, vec![atoms[0].0; m])?;
    let mut by_profile: std::collections::BTreeMap<Vec<u32>, u128> = std::collections::BTreeMap::new();
    for code in 0..total {
        if code > 0 {
            let mut e = 0;
            loop {
                counts[digits[e]] -= 1;
                digits[e] += 1;
                if digits[e] < atoms.len() {
                    counts[digits[e]] += 1;
                    field.set(e, atoms[digits[e]].0);
                    break;
                }
                digits[e] = 0;
                counts[0] += 1;
                field.set(e, atoms[0].0);
                e += 1;
            }
        }
        let v = f(&field)?;
        if v != 0 {
            *by_profile.entry(counts.clone()).or_default() += v as u128;
        }
    }
    let mut acc = BigRational::zero();
    for (profile, sum) in by_profile {
        let mut p = BigRational::from_integer(BigInt::from(sum));
        for (c, (_, q)) in profile.iter().zip(&atoms) {
            p *= num_traits::pow(q.clone(), *c as usize);
        }
        acc += p;
    }
    Ok(acc)
}

/// `P[φ_B ≥ λ · area(B)]` exactly, by enumeration of all assignments.
pub fn exact_tail_probability(
    dist: &DistributionSpec,
    spec: &BoxSpec,
    lambda: &Exact,
    resolution: u64,
    budget: u64,
) -> Result<Exact, EstimateError> {
    let graph = BoxGraph::new(spec);
    let need = flow_threshold(lambda, spec.base_area(), resolution);
    let p = enumerate_fields(&graph, dist, resolution, budget, |f| {
        Ok((BigUint::from(max_flow_value(&graph, f)?) >= need) as u64)
    })?;
    Ok(Exact(p))
}

/// `E[τ(S,k)] / |S|` exactly, by enumeration of all slab assignments.
pub fn exact_nu(
    dist: &DistributionSpec,
    base: &RectSpec,
    k: usize,
    resolution: u64,
    budget: u64,
) -> Result<Exact, EstimateError> {
    let graph = BoxGraph::new(&slab_spec(base, k)?);
    let sum = enumerate_fields(&graph, dist, resolution, budget, |f| {
        Ok(tau_slab(&SlabProblem::new(base.clone(), k, f.clone())?)?.value)
    })?;
    let scale = BigInt::from(base.area() as u128 * resolution as u128);
    Ok(Exact(sum / BigRational::from_integer(scale)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticThresholds {
    /// Largest `psi_hat` tolerated on `λ < nu_hat`.
    pub zero_tolerance: f64,
    /// Gap above `nu_hat` beyond which `psi_hat` must be positive.
    pub margin: f64,
    /// Smallest `psi_hat` accepted as positive there.
    pub positive_floor: f64,
}

impl Default for DiagnosticThresholds {
    fn default() -> Self {
        DiagnosticThresholds { zero_tolerance: 1e-3, margin: 0.1, positive_floor: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiDiagnostics {
    /// Consecutive pairs `(λ_a, λ_b)` whose intervals put `ψ(λ_b)` below
    /// `ψ(λ_a)`.
    pub monotonicity_violations: Vec<(Exact, Exact)>,
    /// Triples `(λ_a, λ_m, λ_b)`, `λ_m` the exact midpoint, where even the
    /// interval ends break midpoint convexity.
    pub convexity_violations: Vec<(Exact, Exact, Exact)>,
    pub max_below_nu: Option<f64>,
    pub min_above_nu: Option<f64>,
    pub vanishes_below_nu: bool,
    pub positive_above_nu: bool,
}

impl PsiDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.monotonicity_violations.is_empty()
            && self.convexity_violations.is_empty()
            && self.vanishes_below_nu
            && self.positive_above_nu
    }
}

pub fn psi_curve_diagnostics(
    estimates: &[PsiEstimate],
    nu_hat: f64,
    thresholds: &DiagnosticThresholds,
) -> Result<PsiDiagnostics, EstimateError> {
    if let Some(first) = estimates.first() {
        let key = |e: &PsiEstimate| (e.d, e.n, e.h, e.k_disc, e.samples);
        if estimates.iter().any(|e| key(e) != key(first)) {
            return Err(EstimateError::Mismatch("estimates do not share (d, n, h, k_disc, samples)".into()));
        }
        if estimates.windows(2).any(|w| w[0].lambda >= w[1].lambda) {
            return Err(EstimateError::Mismatch("λ grid is not strictly increasing".into()));
        }
    }
    let monotonicity_violations = estimates
        .windows(2)
        .filter(|w| w[1].ci_high < w[0].ci_low)
        .map(|w| (w[0].lambda.clone(), w[1].lambda.clone()))
        .collect();
    let two = BigRational::from_integer(BigInt::from(2));
    let mut convexity_violations = Vec::new();
    for (i, a) in estimates.iter().enumerate() {
        for (j, m) in estimates.iter().enumerate().skip(i + 1) {
            for b in estimates.iter().skip(j + 1) {
                if (a.lambda.value() + b.lambda.value()) / &two == *m.lambda.value()
                    && m.ci_low > (a.ci_high + b.ci_high) / 2.0
                {
                    convexity_violations.push((a.lambda.clone(), m.lambda.clone(), b.lambda.clone()));
                }
            }
        }
    }
    let fold = |it: &mut dyn Iterator<Item = f64>, max: bool| {
        it.fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |y| if max { y.max(x) } else { y.min(x) })))
    };
    let max_below_nu = fold(&mut estimates.iter().filter(|e| e.lambda.to_f64() < nu_hat).map(|e| e.psi_hat), true);
    let min_above_nu =
        fold(&mut estimates.iter().filter(|e| e.lambda.to_f64() > nu_hat + thresholds.margin).map(|e| e.psi_hat), false);
    Ok(PsiDiagnostics {
        monotonicity_violations,
        convexity_violations,
        vanishes_below_nu: max_below_nu.is_none_or(|x| x <= thresholds.zero_tolerance),
        positive_above_nu: min_above_nu.is_none_or(|x| x > thresholds.positive_floor),
        max_below_nu,
        min_above_nu,
    })
}
