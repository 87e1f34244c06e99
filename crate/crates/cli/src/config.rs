//! Flat `key = value` experiment configuration.
//!
//! Every key has a default; a file only lists what it changes. Unknown keys,
//! duplicate keys and a missing or wrong `version` are errors.

use std::collections::BTreeMap;
use std::sync::Arc;

use phi4_core::flow::FlowSetup;
use phi4_core::torus::{make_grid, TimeGrid};
use phi4_core::variational::{DriftPolicy, ExplicitOptions, FSpec, FeedbackPolicy, OptimizeOptions, PotentialConfig};
use phi4_core::{Field, Grid};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeSpacing {
    Geometric,
    Dyadic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyFamily {
    Zero,
    Explicit,
    LinearFeedback,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub time_grid: TimeSpacing,
    /// Positive knots of the geometric grid.
    #[serde(rename = "M")]
    pub m: usize,
    /// Knots per octave of the dyadic grid.
    pub per_octave: usize,
    pub lambda: f64,
    /// `zero` or `linear`; the linear functional is `mean(phi g)`.
    pub f: String,
    /// Integer mode of `g(x) = amplitude cos(m . x / L)`.
    pub g_mode: Vec<i32>,
    pub g_amplitude: f64,
    pub policy: PolicyFamily,
    pub policy_blocks: usize,
    pub policy_shells: usize,
    pub explicit_cutoff: f64,
    pub explicit_regularity: f64,
    pub explicit_cap: f64,
    pub opt_iterations: usize,
    pub opt_train_samples: usize,
    pub opt_eval_samples: usize,
    pub opt_fd_step: f64,
    pub opt_learning_rate: f64,
    pub opt_max_step: f64,
    pub oracle_samples: usize,
    pub control_variates: bool,
    pub delta_samples: usize,
    /// Fields written by `sample`.
    pub samples: usize,
    pub t_list: Vec<f64>,
    pub seed: u64,
    pub workers: usize,
    pub out: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            d: 2,
            l: 1.0,
            n: 16,
            t: 4.0,
            time_grid: TimeSpacing::Geometric,
            m: 64,
            per_octave: 4,
            lambda: 0.5,
            f: "zero".into(),
            g_mode: vec![1, 0],
            g_amplitude: 1.0,
            policy: PolicyFamily::LinearFeedback,
            policy_blocks: 2,
            policy_shells: 3,
            explicit_cutoff: 1.0,
            explicit_regularity: 0.5,
            explicit_cap: 1e8,
            opt_iterations: 8,
            opt_train_samples: 64,
            opt_eval_samples: 200,
            opt_fd_step: 0.05,
            opt_learning_rate: 1.0,
            opt_max_step: 0.5,
            oracle_samples: 20000,
            control_variates: true,
            delta_samples: 400,
            samples: 4,
            t_list: vec![2.0, 4.0, 8.0, 16.0],
            seed: 1,
            workers: 1,
            out: "out".into(),
        }
    }
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Config(format!("{key} = {value}: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, "not a valid number"))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value.split(',').map(|s| num(key, s.trim())).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if seen.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {k}", lineno + 1)));
            }
        }
        match seen.get("version") {
            None => return Err(CliError::Config("missing version key".into())),
            Some(v) if v.parse::<u32>().ok() != Some(CONFIG_VERSION) => {
                return Err(bad("version", v, &format!("only version {CONFIG_VERSION} is understood")))
            }
            _ => {}
        }
        let mut c = Self::default();
        for (k, v) in &seen {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<(), CliError> {
        match k {
            "version" => self.version = num(k, v)?,
            "d" => self.d = num(k, v)?,
            "L" => self.l = num(k, v)?,
            "N" => self.n = num(k, v)?,
            "T" => self.t = num(k, v)?,
            "time_grid" => {
                self.time_grid = match v {
                    "geometric" => TimeSpacing::Geometric,
                    "dyadic" => TimeSpacing::Dyadic,
                    _ => return Err(bad(k, v, "expected geometric or dyadic")),
                }
            }
            "M" => self.m = num(k, v)?,
            "per_octave" => self.per_octave = num(k, v)?,
            "lambda" => self.lambda = num(k, v)?,
            "f" => self.f = v.to_string(),
            "g_mode" => self.g_mode = list(k, v)?,
            "g_amplitude" => self.g_amplitude = num(k, v)?,
            "policy" => {
                self.policy = match v {
                    "zero" => PolicyFamily::Zero,
                    "explicit" => PolicyFamily::Explicit,
                    "linear-feedback" => PolicyFamily::LinearFeedback,
                    _ => return Err(bad(k, v, "expected zero, explicit or linear-feedback")),
                }
            }
            "policy_blocks" => self.policy_blocks = num(k, v)?,
            "policy_shells" => self.policy_shells = num(k, v)?,
            "explicit_cutoff" => self.explicit_cutoff = num(k, v)?,
            "explicit_regularity" => self.explicit_regularity = num(k, v)?,
            "explicit_cap" => self.explicit_cap = num(k, v)?,
            "opt_iterations" => self.opt_iterations = num(k, v)?,
            "opt_train_samples" => self.opt_train_samples = num(k, v)?,
            "opt_eval_samples" => self.opt_eval_samples = num(k, v)?,
            "opt_fd_step" => self.opt_fd_step = num(k, v)?,
            "opt_learning_rate" => self.opt_learning_rate = num(k, v)?,
            "opt_max_step" => self.opt_max_step = num(k, v)?,
            "oracle_samples" => self.oracle_samples = num(k, v)?,
            "control_variates" => {
                self.control_variates = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad(k, v, "expected true or false")),
                }
            }
            "delta_samples" => self.delta_samples = num(k, v)?,
            "samples" => self.samples = num(k, v)?,
            "t_list" => self.t_list = list(k, v)?,
            "seed" => self.seed = num(k, v)?,
            "workers" => self.workers = num(k, v)?,
            "out" => self.out = v.to_string(),
            _ => return Err(CliError::Config(format!("unknown key {k}"))),
        }
        Ok(())
    }

    /// Checks the preconditions of the compute modules before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.d != 2 && self.d != 3 {
            return fail(format!("d = {} (only 2 and 3 are supported)", self.d));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return fail(format!("N = {} must be even and >= 2", self.n));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return fail(format!("L = {} must be positive", self.l));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda = {} must be >= 0", self.lambda));
        }
        for &t in std::iter::once(&self.t).chain(&self.t_list) {
            if !(t > 0.0 && t.is_finite()) {
                return fail(format!("cutoff time {t} must be positive"));
            }
        }
        if self.m == 0 || self.per_octave == 0 {
            return fail("M and per_octave must be >= 1".into());
        }
        if self.f != "zero" && self.f != "linear" {
            return fail(format!("f = {} (expected zero or linear)", self.f));
        }
        if self.f == "linear" && self.g_mode.len() != self.d {
            return fail(format!("g_mode has {} entries, expected d = {}", self.g_mode.len(), self.d));
        }
        if self.policy == PolicyFamily::Explicit && self.d != 3 {
            return fail("policy = explicit needs d = 3".into());
        }
        if self.policy_blocks == 0 || self.policy_shells == 0 {
            return fail("policy_blocks and policy_shells must be >= 1".into());
        }
        if self.opt_train_samples < 2 || self.opt_eval_samples < 2 {
            return fail("optimiser ensembles need at least 2 samples".into());
        }
        if self.workers == 0 {
            return fail("workers must be >= 1".into());
        }
        Ok(())
    }

    /// Canonical `key = value` listing; the basis of the config hash.
    pub fn canonical(&self) -> String {
        let v = serde_json::to_value(self).expect("config serialises");
        let obj = v.as_object().expect("config is an object");
        let mut keys: Vec<&String> = obj.keys().collect();
        keys.sort();
        keys.iter().map(|k| format!("{k} = {}\n", obj[*k])).collect()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        make_grid(self.d, self.l, self.n).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn time_grid_for(&self, t: f64) -> Result<TimeGrid, CliError> {
        let g = match self.time_grid {
            TimeSpacing::Geometric => TimeGrid::geometric(t, self.m),
            TimeSpacing::Dyadic => TimeGrid::dyadic(t, self.per_octave),
        };
        g.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn setup_for(&self, t: f64) -> Result<FlowSetup, CliError> {
        let grid = self.grid()?;
        FlowSetup::new(&grid, self.time_grid_for(t)?).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn g_field(&self, grid: &Arc<Grid>) -> Field {
        let m: Vec<f64> = self.g_mode.iter().map(|&x| x as f64 / self.l).collect();
        let a = self.g_amplitude;
        Field::from_fn(grid, |x| a * x.iter().zip(&m).map(|(xi, mi)| xi * mi).sum::<f64>().cos())
    }

    pub fn potential(&self, grid: &Arc<Grid>, lambda: f64) -> PotentialConfig {
        let f = if self.f == "linear" { FSpec::Linear(self.g_field(grid)) } else { FSpec::Zero };
        PotentialConfig { lambda, f }
    }

    pub fn drift_policy(&self) -> Result<DriftPolicy, CliError> {
        Ok(match self.policy {
            PolicyFamily::Zero => DriftPolicy::Zero,
            PolicyFamily::Explicit => DriftPolicy::Explicit(ExplicitOptions {
                cutoff: self.explicit_cutoff,
                regularity: self.explicit_regularity,
                cap: self.explicit_cap,
            }),
            PolicyFamily::LinearFeedback => DriftPolicy::Feedback(
                FeedbackPolicy::zero(self.policy_blocks, self.policy_shells)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            ),
        })
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            iterations: self.opt_iterations,
            train_samples: self.opt_train_samples,
            eval_samples: self.opt_eval_samples,
            fd_step: self.opt_fd_step,
            learning_rate: self.opt_learning_rate,
            max_step: self.opt_max_step,
            seed: self.seed,
            workers: self.workers,
        }
    }
}
