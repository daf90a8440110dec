//! Versioned JSON experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::exponent::ExponentFunction;
use crate::expr::Expression;
use crate::grid::{Domain, GridFunction, Shift};
use crate::weights::Weight;

use super::HarnessError;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 0x5EED_CAFE;

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub n: usize,
    pub l: i32,
    pub j: u32,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { n: 1, l: 0, j: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDecl {
    pub expr: String,
    #[serde(default)]
    pub p_inf: Option<f64>,
}

impl FunctionDecl {
    pub fn plain(expr: &str) -> Self {
        FunctionDecl { expr: expr.into(), p_inf: None }
    }

    pub fn with_limit(expr: &str, p_inf: f64) -> Self {
        FunctionDecl { expr: expr.into(), p_inf: Some(p_inf) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// "hilbert", "riesz1" or "fractional"
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub m: Option<u32>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// slack multiplier for theorem conclusion probes
    #[serde(default = "default_slack")]
    pub theorem_slack: f64,
    /// admissibility cap for the openness search
    #[serde(default = "default_cap")]
    pub openness_cap: f64,
    /// growth per +2 levels that flags a constant as divergent
    #[serde(default = "default_divergence")]
    pub divergence_factor: f64,
}

fn default_slack() -> f64 {
    8.0
}

fn default_cap() -> f64 {
    1000.0
}

fn default_divergence() -> f64 {
    1.5
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            theorem_slack: default_slack(),
            openness_cap: default_cap(),
            divergence_factor: default_divergence(),
        }
    }
}

/// Experiment configuration; every field has a default so suites run with an
/// empty config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub domain: DomainConfig,
    /// named expressions: exponents, weights, symbols, test functions
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionDecl>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// J values for resolution sweeps
    #[serde(default)]
    pub sweep: Option<Vec<u32>>,
    /// shifted grids for cube scans, per-axis thirds
    #[serde(default)]
    pub shifts: Option<Vec<[u8; 2]>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            domain: DomainConfig::default(),
            functions: BTreeMap::new(),
            operator: None,
            trials: None,
            seed: DEFAULT_SEED,
            sweep: None,
            shifts: None,
            tolerances: Tolerances::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(raw: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(raw).map_err(|e| HarnessError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.domain()?; // validate eagerly
        Ok(cfg)
    }

    pub fn domain(&self) -> Result<Domain, HarnessError> {
        Ok(Domain::new(self.domain.n, self.domain.l, self.domain.j)?)
    }

    /// Same box at a different resolution (for sweeps).
    pub fn domain_at(&self, j: u32) -> Result<Domain, HarnessError> {
        Ok(Domain::new(self.domain.n, self.domain.l, j)?)
    }

    pub fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    pub fn sweep(&self, default: &[u32]) -> Vec<u32> {
        self.sweep.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn shifts(&self) -> Result<Vec<Shift>, HarnessError> {
        match &self.shifts {
            None => Ok(vec![Shift::NONE]),
            Some(list) => list
                .iter()
                .map(|&t| Shift::new(t).map_err(HarnessError::from))
                .collect(),
        }
    }

    /// Parse a declared expression, falling back to `default_expr`.
    pub fn expression(
        &self,
        name: &str,
        default_expr: &str,
        dim: usize,
    ) -> Result<Expression, HarnessError> {
        let src = self.functions.get(name).map(|d| d.expr.as_str()).unwrap_or(default_expr);
        Ok(Expression::parse(src, dim)?)
    }

    pub fn grid_fn(
        &self,
        name: &str,
        default_expr: &str,
        dom: Domain,
    ) -> Result<GridFunction<f64>, HarnessError> {
        Ok(GridFunction::sample(&self.expression(name, default_expr, dom.dim())?, dom)?)
    }

    pub fn weight(
        &self,
        name: &str,
        default_expr: &str,
        dom: Domain,
    ) -> Result<Weight<f64>, HarnessError> {
        Ok(Weight::new(self.grid_fn(name, default_expr, dom)?)?)
    }

    pub fn exponent(
        &self,
        name: &str,
        default_expr: &str,
        default_p_inf: Option<f64>,
        dom: Domain,
    ) -> Result<ExponentFunction<f64>, HarnessError> {
        let decl = self.functions.get(name);
        let src = decl.map(|d| d.expr.as_str()).unwrap_or(default_expr);
        let p_inf = decl.and_then(|d| d.p_inf).or(default_p_inf);
        let expr = Expression::parse(src, dom.dim())?;
        Ok(ExponentFunction::from_expression(&expr, dom, p_inf)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(back.seed, DEFAULT_SEED);
        assert_eq!(back.domain.j, 8);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_versions() {
        assert!(ExperimentConfig::from_json("{\"bogus\": 1}").is_err());
        assert!(ExperimentConfig::from_json("{\"version\": 99}").is_err());
        assert!(ExperimentConfig::from_json("not json").is_err());
    }

    #[test]
    fn function_fallbacks_resolve() {
        let raw = r#"{
            "functions": {"p": {"expr": "2 + 1/log(e+abs(x1))", "p_inf": 2.0}},
            "domain": {"n": 1, "l": 0, "j": 4}
        }"#;
        let cfg = ExperimentConfig::from_json(raw).unwrap();
        let dom = cfg.domain().unwrap();
        let p = cfg.exponent("p", "2", None, dom).unwrap();
        assert!(p.lower() >= 2.0);
        assert_eq!(p.p_inf(), Some(2.0));
        let w = cfg.weight("w", "1", dom).unwrap();
        assert!(w.grid().values().iter().all(|&v| v == 1.0));
    }
}
