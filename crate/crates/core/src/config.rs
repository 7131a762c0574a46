//! TOML run configuration.
//!
//! A file names a scenario (`default`, `nonsmooth` or a figure stem such as
//! `lam5M6Feed14T4`) and may override any of its parameters:
//!
//! ```toml
//! scenario = "default"
//!
//! [mesh]
//! n_nodes = 401
//! bc = "neumann_homogeneous"
//!
//! [problem]
//! preset = "smooth"
//! nu = 0.1
//! k_my = [500.0, 1000.0]
//!
//! [control]
//! m = 5
//! lambda = 4.0
//! support_ratio = 0.1
//! feed_on = [[0.0, 4.0]]
//!
//! [time]
//! dt = 1e-4
//! t_final = 4.0
//! record_every = 100
//! contact_every = 100
//!
//! [output]
//! dir = "out"
//! contact_eps = 1e-3
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::stable_dt;
use crate::error::{invalid, Error, Result};
use crate::experiments::{scenario_default, scenario_nonsmooth, Preset, Scenario};
use crate::fem::BoundaryCondition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_nodes: usize,
    pub bc: BoundaryCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub preset: Preset,
    pub nu: f64,
    pub k_my: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub m: usize,
    pub lambda: f64,
    pub support_ratio: f64,
    pub feed_on: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub contact_eps: f64,
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub mesh: MeshConfig,
    pub problem: ProblemConfig,
    pub control: ControlConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    problem: RawProblem,
    #[serde(default)]
    control: RawControl,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    n_nodes: Option<usize>,
    bc: Option<BoundaryCondition>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    preset: Option<Preset>,
    nu: Option<f64>,
    k_my: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    m: Option<usize>,
    lambda: Option<f64>,
    support_ratio: Option<f64>,
    feed_on: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    t_final: Option<f64>,
    record_every: Option<usize>,
    contact_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    contact_eps: Option<f64>,
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub scenario: Option<String>,
    pub n_nodes: Option<usize>,
    pub bc: Option<BoundaryCondition>,
    pub preset: Option<Preset>,
    pub nu: Option<f64>,
    pub k_my: Option<Vec<f64>>,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub support_ratio: Option<f64>,
    pub feed_on: Option<Vec<(f64, f64)>>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub record_every: Option<usize>,
    pub contact_every: Option<usize>,
    pub out: Option<PathBuf>,
    pub contact_eps: Option<f64>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Starting point for a scenario name: `default`/`smooth`, `nonsmooth`, or
/// a figure stem decoded on top of the matching preset.
pub fn resolve_scenario(name: &str, preset: Option<Preset>) -> Result<Scenario> {
    let base = match name {
        "default" | "smooth" => scenario_default(),
        "nonsmooth" => scenario_nonsmooth(),
        stem if stem.starts_with("lam") => {
            Scenario::from_stem(stem, preset.unwrap_or(Preset::Smooth))?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown scenario `{other}` (expected `default`, `nonsmooth` or a stem like `lam5M6Feed14T4`)"
            )))
        }
    };
    Ok(match preset {
        Some(p) => Scenario { preset: p, ..base },
        None => base,
    })
}

impl RunConfig {
    /// Parses TOML text, then applies `overrides`.
    pub fn from_toml_str(text: &str, overrides: &ConfigOverrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(raw, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve(raw: RawConfig, o: &ConfigOverrides) -> Result<Self> {
        let name = o
            .scenario
            .clone()
            .or(raw.scenario)
            .unwrap_or_else(|| "default".into());
        let base = resolve_scenario(&name, o.preset.or(raw.problem.preset))?;
        let cfg = RunConfig {
            mesh: MeshConfig {
                n_nodes: o.n_nodes.or(raw.mesh.n_nodes).unwrap_or(base.n_nodes),
                bc: o.bc.or(raw.mesh.bc).unwrap_or(base.bc),
            },
            problem: ProblemConfig {
                preset: base.preset,
                nu: o.nu.or(raw.problem.nu).unwrap_or(base.nu),
                k_my: o.k_my.clone().or(raw.problem.k_my).unwrap_or(base.k_my.clone()),
            },
            control: ControlConfig {
                m: o.m.or(raw.control.m).unwrap_or(base.m),
                lambda: o.lambda.or(raw.control.lambda).unwrap_or(base.lambda),
                support_ratio: o
                    .support_ratio
                    .or(raw.control.support_ratio)
                    .unwrap_or(base.support_ratio),
                feed_on: o
                    .feed_on
                    .clone()
                    .or(raw.control.feed_on)
                    .unwrap_or(base.feed_on.clone()),
            },
            time: TimeConfig {
                dt: o.dt.or(raw.time.dt).unwrap_or(base.dt),
                t_final: o.t_final.or(raw.time.t_final).unwrap_or(base.t_final),
                record_every: o
                    .record_every
                    .or(raw.time.record_every)
                    .unwrap_or(base.record_every),
                contact_every: o
                    .contact_every
                    .or(raw.time.contact_every)
                    .or(base.contact_every),
            },
            output: OutputConfig {
                dir: o
                    .out
                    .clone()
                    .or(raw.output.dir)
                    .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()),
                contact_eps: o
                    .contact_eps
                    .or(raw.output.contact_eps)
                    .unwrap_or(base.contact_eps),
            },
            scenario: name,
        };
        cfg.validate()?;
        Ok(cfg.tighten())
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh.n_nodes < 3 {
            return Err(Error::TooFewNodes(self.mesh.n_nodes));
        }
        let r = self.control.support_ratio;
        if !(r > 0.0 && r <= 1.0) {
            return Err(invalid("support_ratio", format!("must lie in (0, 1], got {r}")));
        }
        if !(self.output.contact_eps > 0.0) {
            return Err(invalid("contact_eps", "must be positive"));
        }
        for &(a, b) in &self.control.feed_on {
            if b > self.time.t_final + 1e-12 {
                return Err(invalid(
                    "feed_on",
                    format!("window ({a}, {b}) ends after t_final = {}", self.time.t_final),
                ));
            }
        }
        self.to_scenario().validate()
    }

    /// Shrinks `dt` for the largest penalty parameter, scaling the strides so
    /// recorded times are unchanged.
    fn tighten(mut self) -> Self {
        let k_max = self.problem.k_my.iter().cloned().fold(0.0, f64::max);
        let (dt, tightened) = stable_dt(self.time.dt, k_max);
        if tightened {
            log::warn!(
                "dt = {:e} violates the penalty step limit for k_MY = {k_max}; using dt = {dt:e}",
                self.time.dt
            );
            let factor = (self.time.dt / dt).round() as usize;
            self.time.dt = dt;
            self.time.record_every *= factor;
            self.time.contact_every = self.time.contact_every.map(|c| c * factor);
        }
        self
    }

    /// Label used in output file names. Keeps the preset's stem unless the
    /// parameters it encodes were changed.
    pub fn label(&self) -> String {
        let stem = resolve_scenario(&self.scenario, Some(self.problem.preset)).ok();
        let c = &self.control;
        match stem {
            Some(s)
                if s.m == c.m
                    && s.lambda == c.lambda
                    && s.t_final == self.time.t_final
                    && s.feed_on == c.feed_on =>
            {
                s.name
            }
            _ => format!("lam{}M{}T{}", c.lambda, c.m, self.time.t_final),
        }
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            name: self.label(),
            preset: self.problem.preset,
            n_nodes: self.mesh.n_nodes,
            bc: self.mesh.bc,
            nu: self.problem.nu,
            m: self.control.m,
            lambda: self.control.lambda,
            support_ratio: self.control.support_ratio,
            k_my: self.problem.k_my.clone(),
            dt: self.time.dt,
            t_final: self.time.t_final,
            feed_on: self.control.feed_on.clone(),
            record_every: self.time.record_every,
            contact_every: self.time.contact_every,
            contact_eps: self.output.contact_eps,
        }
    }
}

/// Reads `path` (or starts from an empty file) and applies `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<RunConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    RunConfig::from_toml_str(&text, overrides)
}
