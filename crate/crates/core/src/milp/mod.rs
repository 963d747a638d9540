//! Solver-neutral mixed-integer model and backends.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub mod exhaustive;
#[cfg(feature = "highs")]
pub mod highs;
pub mod lp_format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub integer: bool,
    pub obj: f64,
}

/// `lo <= Σ coeffs <= hi`, tagged with the constraint family it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub family: String,
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// A maximisation problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    pub obj_offset: f64,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, integer: bool, obj: f64) -> VarId {
        self.vars.push(Var {
            name: name.into(),
            lb,
            ub,
            integer,
            obj,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> VarId {
        self.add_var(name, 0.0, 1.0, true, obj)
    }

    pub fn add_row(&mut self, family: &str, name: impl Into<String>, coeffs: Vec<(VarId, f64)>, lo: f64, hi: f64) {
        self.rows.push(Row {
            family: family.to_string(),
            name: name.into(),
            coeffs,
            lo,
            hi,
        });
    }

    pub fn add_le(&mut self, family: &str, name: impl Into<String>, coeffs: Vec<(VarId, f64)>, hi: f64) {
        self.add_row(family, name, coeffs, f64::NEG_INFINITY, hi);
    }

    pub fn add_ge(&mut self, family: &str, name: impl Into<String>, coeffs: Vec<(VarId, f64)>, lo: f64) {
        self.add_row(family, name, coeffs, lo, f64::INFINITY);
    }

    pub fn add_eq(&mut self, family: &str, name: impl Into<String>, coeffs: Vec<(VarId, f64)>, rhs: f64) {
        self.add_row(family, name, coeffs, rhs, rhs);
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.obj_offset + self.vars.iter().zip(values).map(|(v, x)| v.obj * x).sum::<f64>()
    }

    /// Rows violated by `values` beyond `tol`, plus variables out of bounds or fractional.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, &x) in self.vars.iter().zip(values) {
            if x < v.lb - tol || x > v.ub + tol {
                out.push(format!("bound {}", v.name));
            }
            if v.integer && (x - x.round()).abs() > tol {
                out.push(format!("integrality {}", v.name));
            }
        }
        for r in &self.rows {
            let act: f64 = r.coeffs.iter().map(|(id, a)| a * values[id.0]).sum();
            if act < r.lo - tol || act > r.hi + tol {
                out.push(format!("{}:{}", r.family, r.name));
            }
        }
        out
    }

    pub fn families(&self) -> Vec<String> {
        let mut f: Vec<String> = self.rows.iter().map(|r| r.family.clone()).collect();
        f.sort();
        f.dedup();
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    FeasibleWithGap,
    Infeasible,
    TimeLimitNoIncumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: Status,
    pub objective: f64,
    pub gap: f64,
    pub values: Vec<f64>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub time_limit: Duration,
    /// Relative gap at which the search may stop.
    pub gap: f64,
    /// Absolute objective gap at which the search may stop.
    pub abs_gap: f64,
    pub seed: u32,
    pub threads: Option<u32>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit: Duration::from_secs(600),
            gap: 0.0,
            abs_gap: 1e-6,
            seed: 0,
            threads: None,
        }
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn version(&self) -> String;
    fn solve(&self, model: &Model, opts: &SolveOptions) -> Result<MilpResult>;
}

/// The preferred exact backend available in this build.
pub fn default_backend() -> Box<dyn Backend> {
    #[cfg(feature = "highs")]
    {
        Box::new(highs::HighsBackend)
    }
    #[cfg(not(feature = "highs"))]
    {
        Box::new(exhaustive::Exhaustive::default())
    }
}

pub fn backend_by_name(name: &str) -> Option<Box<dyn Backend>> {
    match name {
        #[cfg(feature = "highs")]
        "highs" => Some(Box::new(highs::HighsBackend)),
        "exhaustive" => Some(Box::new(exhaustive::Exhaustive::default())),
        _ => None,
    }
}
