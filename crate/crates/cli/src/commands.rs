//! Subcommand bodies. Each one builds its tables and sidecar from the
//! configuration alone; the worker count never changes a byte of output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fpp_core::capacity::{discretize, sample_field, CapacityField};
use fpp_core::cuts::{tau_slab, SlabProblem};
use fpp_core::estimators::{
    estimate_nu, estimate_psi_grid, exact_tail_probability, psi_curve_diagnostics, NuEstimate, NuParams, PsiDiagnostics,
    PsiEstimate, PsiParams,
};
use fpp_core::verify::{run_suite, total_violations, PropertyReport};
use fpp_core::{max_flow, BoxGraph, Exact};
use num_bigint::BigUint;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{coords, dec, units_dec, write_outputs, Table};

pub const PSI_COLUMNS: [&str; 13] = [
    "lambda",
    "d",
    "n",
    "h",
    "k_disc",
    "samples",
    "hits",
    "seed",
    "psi_hat",
    "ci_low",
    "ci_high",
    "psi_stderr",
    "infinite_flag",
];

pub const NU_COLUMNS: [&str; 11] = [
    "d",
    "n",
    "k_slab",
    "replications",
    "resolution",
    "seed",
    "sum_units",
    "sum_sq_units",
    "mean_exact",
    "mean",
    "stderr",
];

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub workers: usize,
    pub out: &'a Path,
}

fn edge_row(graph: &BoxGraph, e: usize) -> (String, String) {
    let (t, h) = graph.ends(e);
    (coords(&graph.point(t).0), coords(&graph.point(h).0))
}

fn drawn_field(cfg: &ExperimentConfig, graph: &BoxGraph) -> Result<(CapacityField, u64), CliError> {
    let r = cfg.resolution();
    let field = sample_field(graph.spec(), cfg.dist()?, r, cfg.seed()?)?;
    let k = cfg.k_disc.unwrap_or(r);
    Ok((discretize(&field, k)?, k))
}

pub fn sample(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let graph = BoxGraph::new(&cfg.box_spec()?);
    let (field, _) = drawn_field(cfg, &graph)?;
    let mut t = Table::new("sample", vec!["edge", "tail", "head", "axis", "units", "value"]);
    for e in 0..graph.num_edges() {
        let (a, b) = edge_row(&graph, e);
        t.push(vec![
            e.to_string(),
            a,
            b,
            graph.axis(e).to_string(),
            field.get(e).to_string(),
            units_dec(field.get(e), field.resolution()),
        ]);
    }
    write_outputs(cx.out, "sample", cfg.seed, &cfg.recorded(), &[t], ())
}

pub fn flow(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let spec = cfg.box_spec()?;
    let graph = BoxGraph::new(&spec);
    let (field, k) = drawn_field(cfg, &graph)?;
    let res = max_flow(&graph, &field)?;
    let r = field.resolution();
    let mut summary = Table::new(
        "flow",
        vec!["dims", "height", "offset", "resolution", "k_disc", "edges", "value_units", "value", "cut_edges", "cut_units"],
    );
    let dims: Vec<i64> = spec.dims().iter().map(|&x| x as i64).collect();
    summary.push(vec![
        coords(&dims),
        spec.height().to_string(),
        coords(spec.offset()),
        r.to_string(),
        k.to_string(),
        graph.num_edges().to_string(),
        res.value.to_string(),
        units_dec(res.value, r),
        res.min_cut.len().to_string(),
        res.min_cut.weight.to_string(),
    ]);
    let mut edges = Table::new("flow_edges", vec!["edge", "tail", "head", "capacity_units", "flow_units", "in_cut"]);
    let mut in_cut = vec![false; graph.num_edges()];
    for &e in &res.min_cut.edges {
        in_cut[e] = true;
    }
    for e in 0..graph.num_edges() {
        let (a, b) = edge_row(&graph, e);
        edges.push(vec![
            e.to_string(),
            a,
            b,
            field.get(e).to_string(),
            res.stream.net(e).to_string(),
            (in_cut[e] as u8).to_string(),
        ]);
    }
    write_outputs(cx.out, "flow", cfg.seed, &cfg.recorded(), &[summary, edges], ())
}

pub fn tau(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let base = cfg.base_rect()?;
    let k = cfg.positive(cfg.k_slab.map(|k| k as u64), "k_slab")? as usize;
    let r = cfg.resolution();
    let problem = SlabProblem::sample(base.clone(), k, cfg.dist()?, r, cfg.seed()?)?;
    let res = tau_slab(&problem)?;
    let graph = problem.graph();
    let mut summary = Table::new(
        "tau",
        vec!["base_lower", "base_upper", "k_slab", "resolution", "value_units", "value", "per_area", "cut_edges"],
    );
    summary.push(vec![
        coords(base.lower()),
        coords(base.upper()),
        k.to_string(),
        r.to_string(),
        res.value.to_string(),
        units_dec(res.value, r),
        dec(res.value as f64 / r as f64 / base.area() as f64),
        res.cut.len().to_string(),
    ]);
    let mut cut = Table::new("tau_cut", vec!["edge", "tail", "head", "capacity_units"]);
    for &e in &res.cut.edges {
        let (a, b) = edge_row(&graph, e);
        cut.push(vec![e.to_string(), a, b, problem.field.get(e).to_string()]);
    }
    write_outputs(cx.out, "tau", cfg.seed, &cfg.recorded(), &[summary, cut], ())
}

pub fn nu_row(e: &NuEstimate) -> Vec<String> {
    vec![
        e.d.to_string(),
        e.n.to_string(),
        e.k_slab.to_string(),
        e.replications.to_string(),
        e.resolution.to_string(),
        e.seed.to_string(),
        e.sum_units.to_string(),
        e.sum_sq_units.to_string(),
        e.mean.to_string(),
        dec(e.mean.to_f64()),
        dec(e.stderr),
    ]
}

pub fn nu(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let mut t = Table::new("nu", NU_COLUMNS.to_vec());
    for n in cfg.n_list()? {
        let p = NuParams {
            dist: cfg.dist()?.clone(),
            d: cfg.d(),
            n,
            k_slab: cfg.k_slab.unwrap_or(n),
            replications: cfg.positive(cfg.replications, "replications")?,
            seed: cfg.seed()?,
            resolution: cfg.resolution(),
        };
        t.push(nu_row(&estimate_nu(&p, cx.workers)?));
    }
    write_outputs(cx.out, "nu", cfg.seed, &cfg.recorded(), &[t], ())
}

pub fn psi_row(e: &PsiEstimate) -> Vec<String> {
    vec![
        e.lambda.to_string(),
        e.d.to_string(),
        e.n.to_string(),
        e.h.to_string(),
        e.k_disc.to_string(),
        e.samples.to_string(),
        e.hits.to_string(),
        e.seed.to_string(),
        dec(e.psi_hat),
        dec(e.ci_low),
        dec(e.ci_high),
        dec(e.psi_stderr),
        (e.infinite_flag as u8).to_string(),
    ]
}

#[derive(Serialize)]
struct CurveReport {
    n: usize,
    h: usize,
    diagnostics: PsiDiagnostics,
}

pub fn psi(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let grid = cfg.lambda_grid()?;
    let mut t = Table::new("psi", PSI_COLUMNS.to_vec());
    let mut curves = Vec::new();
    let thresholds = cfg.thresholds.clone().unwrap_or_default();
    for n in cfg.n_list()? {
        let h = cfg.h_for(n)?;
        let p = PsiParams {
            dist: cfg.dist()?.clone(),
            d: cfg.d(),
            n,
            h,
            k_disc: cfg.k_disc.unwrap_or(cfg.resolution()),
            samples: cfg.positive(cfg.samples, "samples")?,
            seed: cfg.seed()?,
            resolution: cfg.resolution(),
        };
        let est = estimate_psi_grid(&p, &grid, cx.workers)?;
        for e in &est {
            t.push(psi_row(e));
        }
        let diagnostics = psi_curve_diagnostics(&est, cfg.nu_hat.unwrap_or(f64::NAN), &thresholds)?;
        curves.push(CurveReport { n, h, diagnostics });
    }
    write_outputs(cx.out, "psi", cfg.seed, &cfg.recorded(), &[t], curves)
}

pub fn oracle(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let spec = cfg.box_spec()?;
    let r = cfg.resolution();
    let mut t = Table::new("oracle", vec!["lambda", "dims", "height", "resolution", "probability_exact", "probability"]);
    let dims: Vec<i64> = spec.dims().iter().map(|&x| x as i64).collect();
    for l in cfg.lambda_grid()? {
        let p = exact_tail_probability(cfg.dist()?, &spec, &l, r, cfg.budget())?;
        t.push(vec![l.to_string(), coords(&dims), spec.height().to_string(), r.to_string(), p.to_string(), dec(p.to_f64())]);
    }
    write_outputs(cx.out, "oracle", cfg.seed, &cfg.recorded(), &[t], ())
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    total_violations: u64,
    reports: &'a [PropertyReport],
}

pub fn verify(cx: &Context) -> Result<(), CliError> {
    let cfg = cx.config;
    let mut suite = cfg.verify.clone().unwrap_or_default();
    if let Some(r) = cfg.resolution {
        suite.resolution = r;
    }
    if let Some(b) = cfg.budget {
        suite.budget = b;
    }
    let reports = run_suite(&suite, cfg.seed()?, cx.workers)?;
    let mut t = Table::new("verify", vec!["property", "trials", "violations", "first_violation"]);
    for r in &reports {
        t.push(vec![
            r.property.clone(),
            r.trials.to_string(),
            r.violations.to_string(),
            r.first_violation.map_or_else(String::new, |i| i.to_string()),
        ]);
    }
    let total = total_violations(&reports);
    write_outputs(cx.out, "verify", cfg.seed, &cfg.recorded(), &[t], VerifySummary { total_violations: total, reports: &reports })?;
    if total > 0 {
        return Err(CliError::Violations(total));
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = rd.headers()?.iter().map(String::from).collect();
    let rows = rd.records().map(|r| r.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
    Ok((header, rows))
}

fn field<T: std::str::FromStr>(row: &[String], i: usize, path: &Path) -> Result<T, CliError> {
    row[i].parse().map_err(|_| CliError::Config(format!("{}: bad value {:?} in column {i}", path.display(), row[i])))
}

fn parse_psi(row: &[String], path: &Path) -> Result<PsiEstimate, CliError> {
    let lambda: Exact = row[0].parse().map_err(CliError::Config)?;
    Ok(PsiEstimate::from_counts(
        lambda,
        field(row, 1, path)?,
        field(row, 2, path)?,
        field(row, 3, path)?,
        field(row, 4, path)?,
        field(row, 5, path)?,
        field(row, 6, path)?,
        field(row, 7, path)?,
    ))
}

fn parse_nu(row: &[String], path: &Path) -> Result<NuEstimate, CliError> {
    Ok(NuEstimate::from_sums(
        field(row, 0, path)?,
        field(row, 1, path)?,
        field(row, 2, path)?,
        field(row, 3, path)?,
        field(row, 4, path)?,
        field(row, 5, path)?,
        field::<BigUint>(row, 6, path)?,
        field::<BigUint>(row, 7, path)?,
    ))
}

/// Merges `psi` or `nu` CSV files written by runs over disjoint replica
/// sets, summing hit and sample counts or replica sums per parameter key.
pub fn report(cx: &Context, extra_inputs: &[PathBuf]) -> Result<(), CliError> {
    let cfg = cx.config;
    let mut inputs: Vec<PathBuf> = cfg.inputs.clone().unwrap_or_default();
    inputs.extend_from_slice(extra_inputs);
    if inputs.is_empty() {
        return Err(CliError::Config("report needs at least one input file".into()));
    }
    let mut psi: BTreeMap<(Exact, usize, usize, usize, u64), PsiEstimate> = BTreeMap::new();
    let mut nu: BTreeMap<(usize, usize, usize, u64), NuEstimate> = BTreeMap::new();
    for path in &inputs {
        let (header, rows) = read_table(path)?;
        if header == PSI_COLUMNS {
            for row in &rows {
                let e = parse_psi(row, path)?;
                let key = (e.lambda.clone(), e.d, e.n, e.h, e.k_disc);
                let merged = match psi.get(&key) {
                    Some(prev) => prev.merge(&e)?,
                    None => e,
                };
                psi.insert(key, merged);
            }
        } else if header == NU_COLUMNS {
            for row in &rows {
                let e = parse_nu(row, path)?;
                let key = (e.d, e.n, e.k_slab, e.resolution);
                let merged = match nu.get(&key) {
                    Some(prev) => prev.merge(&e)?,
                    None => e,
                };
                nu.insert(key, merged);
            }
        } else {
            return Err(CliError::Config(format!("{}: not a psi or nu table", path.display())));
        }
    }
    if !psi.is_empty() && !nu.is_empty() {
        return Err(CliError::Config("cannot merge psi and nu tables together".into()));
    }
    let table = if nu.is_empty() {
        let mut t = Table::new("report", PSI_COLUMNS.to_vec());
        // Rows grouped by box, then by λ.
        let mut rows: Vec<&PsiEstimate> = psi.values().collect();
        rows.sort_by(|a, b| (a.d, a.n, a.h, a.k_disc, &a.lambda).cmp(&(b.d, b.n, b.h, b.k_disc, &b.lambda)));
        for e in rows {
            t.push(psi_row(e));
        }
        t
    } else {
        let mut t = Table::new("report", NU_COLUMNS.to_vec());
        for e in nu.values() {
            t.push(nu_row(e));
        }
        t
    };
    let listed: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    write_outputs(cx.out, "report", None, &listed, &[table], ())
}
