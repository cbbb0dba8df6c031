//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use fpp_core::estimators::{DiagnosticThresholds, DEFAULT_BUDGET};
use fpp_core::verify::VerifyConfig;
use fpp_core::{BoxSpec, DistributionSpec, Exact, RectSpec, DEFAULT_RESOLUTION};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every parameter any subcommand reads. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub resolution: Option<u64>,
    pub distribution: Option<DistributionSpec>,
    pub d: Option<usize>,
    pub n: Option<NList>,
    pub h: Option<HSpec>,
    /// Box side lengths, for `sample`, `flow` and `oracle`.
    pub dims: Option<Vec<usize>>,
    pub height: Option<usize>,
    pub offset: Option<Vec<i64>>,
    /// Base rectangle for `tau`.
    pub base: Option<RectConfig>,
    pub k_disc: Option<u64>,
    pub k_slab: Option<usize>,
    pub lambda: Option<Exact>,
    pub lambdas: Option<Vec<Exact>>,
    pub samples: Option<u64>,
    pub replications: Option<u64>,
    pub budget: Option<u64>,
    pub nu_hat: Option<f64>,
    pub thresholds: Option<DiagnosticThresholds>,
    pub verify: Option<VerifyConfig>,
    pub inputs: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NList {
    One(usize),
    Many(Vec<usize>),
}

/// `h` as a number, or the rule `⌈coef · (ln n)^log_exp · n^n_exp⌉` (at
/// least 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HSpec {
    Fixed(usize),
    Rule {
        coef: f64,
        #[serde(default = "one")]
        log_exp: f64,
        #[serde(default)]
        n_exp: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl HSpec {
    pub fn height(&self, n: usize) -> usize {
        match self {
            HSpec::Fixed(h) => *h,
            HSpec::Rule { coef, log_exp, n_exp } => {
                let x = n as f64;
                let v = coef * pow_or_one(x.ln(), *log_exp) * pow_or_one(x, *n_exp);
                (v.ceil() as usize).max(1)
            }
        }
    }
}

fn pow_or_one(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing required key `{key}`"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| missing("seed"))
    }

    pub fn resolution(&self) -> u64 {
        self.resolution.unwrap_or(DEFAULT_RESOLUTION)
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    pub fn dist(&self) -> Result<&DistributionSpec, CliError> {
        let d = self.distribution.as_ref().ok_or_else(|| missing("distribution"))?;
        d.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(d)
    }

    pub fn d(&self) -> usize {
        self.d.unwrap_or(2)
    }

    pub fn n_list(&self) -> Result<Vec<usize>, CliError> {
        let ns = match self.n.as_ref().ok_or_else(|| missing("n"))? {
            NList::One(n) => vec![*n],
            NList::Many(v) => v.clone(),
        };
        if ns.is_empty() || ns.contains(&0) {
            return Err(CliError::Config("`n` must list positive sizes".into()));
        }
        Ok(ns)
    }

    pub fn h_for(&self, n: usize) -> Result<usize, CliError> {
        let h = self.h.as_ref().ok_or_else(|| missing("h"))?.height(n);
        if h == 0 {
            return Err(CliError::Config("`h` must be positive".into()));
        }
        Ok(h)
    }

    pub fn lambda_grid(&self) -> Result<Vec<Exact>, CliError> {
        let grid = match (&self.lambdas, &self.lambda) {
            (Some(g), _) => g.clone(),
            (None, Some(l)) => vec![l.clone()],
            (None, None) => return Err(missing("lambdas")),
        };
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("`lambdas` must be strictly increasing".into()));
        }
        Ok(grid)
    }

    /// The explicit box, or the cube `]0,n]^{d−1} × ]0,h]` for a single `n`.
    pub fn box_spec(&self) -> Result<BoxSpec, CliError> {
        let spec = match (&self.dims, self.height) {
            (Some(dims), Some(h)) => match &self.offset {
                Some(off) => BoxSpec::with_offset(dims.clone(), h, off.clone()),
                None => BoxSpec::new(dims.clone(), h),
            },
            (Some(_), None) => return Err(missing("height")),
            _ => {
                let ns = self.n_list()?;
                if ns.len() != 1 {
                    return Err(CliError::Config("this command takes a single `n`".into()));
                }
                BoxSpec::cube(self.d(), ns[0], self.h_for(ns[0])?)
            }
        };
        spec.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn base_rect(&self) -> Result<RectSpec, CliError> {
        let rect = match &self.base {
            Some(b) => RectSpec::new(b.lower.clone(), b.upper.clone()),
            None => {
                let ns = self.n_list()?;
                if ns.len() != 1 {
                    return Err(CliError::Config("this command takes a single `n`".into()));
                }
                RectSpec::cube(self.d(), ns[0])
            }
        };
        rect.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn positive(&self, value: Option<u64>, key: &str) -> Result<u64, CliError> {
        match value {
            Some(0) => Err(CliError::Config(format!("`{key}` must be positive"))),
            Some(v) => Ok(v),
            None => Err(missing(key)),
        }
    }

    /// The configuration recorded in sidecars: everything that determines
    /// the CSV bytes.
    pub fn recorded(&self) -> ExperimentConfig {
        ExperimentConfig { workers: None, out: None, ..self.clone() }
    }
}

/// Worker count: command-line flag, then `FPPFLOW_WORKERS`, then config,
/// then all cores.
pub fn resolve_workers(flag: Option<usize>, env: Option<String>, config: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return Ok(w);
    }
    if let Some(v) = env.filter(|v| !v.trim().is_empty()) {
        return v.trim().parse().map_err(|_| CliError::Config(format!("FPPFLOW_WORKERS is not a count: {v:?}")));
    }
    Ok(config.unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_psi_config() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"seed": 3, "distribution": {"kind": "bernoulli", "p": 0.9, "lo": 0, "hi": 1},
                "n": [4, 8], "h": {"coef": 2.0}, "lambdas": ["0.2", "1/2", 1]}"#,
        )
        .unwrap();
        assert_eq!(c.n_list().unwrap(), vec![4, 8]);
        assert_eq!(c.h_for(8).unwrap(), 5);
        assert_eq!(c.h_for(1).unwrap(), 1);
        assert_eq!(c.lambda_grid().unwrap()[1], Exact::ratio(1, 2));
        assert_eq!(c.dist().unwrap(), &DistributionSpec::bernoulli(Exact::ratio(9, 10), 0.0, 1.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 1}"#).is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"lambdas": [1, 0.5]}"#).unwrap();
        assert!(c.lambda_grid().is_err());
        assert!(c.seed().is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"distribution": {"kind": "uniform", "a": 2, "b": 1}}"#).unwrap();
        assert!(c.dist().is_err());
    }

    #[test]
    fn worker_precedence() {
        assert_eq!(resolve_workers(Some(2), Some("5".into()), Some(7)).unwrap(), 2);
        assert_eq!(resolve_workers(None, Some("5".into()), Some(7)).unwrap(), 5);
        assert_eq!(resolve_workers(None, None, Some(7)).unwrap(), 7);
        assert_eq!(resolve_workers(None, None, None).unwrap(), 0);
        assert!(resolve_workers(None, Some("many".into()), None).is_err());
    }

    #[test]
    fn box_from_cube_parameters() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"d": 3, "n": 2, "h": 4}"#).unwrap();
        assert_eq!(c.box_spec().unwrap(), BoxSpec::cube(3, 2, 4).unwrap());
        let c: ExperimentConfig = serde_json::from_str(r#"{"dims": [2], "height": 3, "offset": [1, -1]}"#).unwrap();
        assert_eq!(c.box_spec().unwrap().offset(), &[1, -1]);
    }
}
