//! Experiment configuration: what the JSON file holds and what the flags build.

use exactgrowth::extremal::{SweepMode, DEFAULT_EPSILON, DEFAULT_N_LIST};
use exactgrowth::radial::{SpaceParams, DEFAULT_CELLS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Constants,
    Symmetrize,
    Verify,
    Sweep,
    MuH,
    SolveOde,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Constants => "constants",
            CommandKind::Symmetrize => "symmetrize",
            CommandKind::Verify => "verify",
            CommandKind::Sweep => "sweep",
            CommandKind::MuH => "mu-h",
            CommandKind::SolveOde => "solve-ode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceConfig {
    pub k: usize,
    pub p: f64,
    pub eta: f64,
    pub theta: f64,
    /// Defaults to the critical coupling `(2p − 1 + (p − 1)η)/p`.
    pub gamma: Option<f64>,
    /// Defaults to the critical weights `α_i = kp − 1 − (k − i)p`.
    pub alphas: Option<Vec<f64>>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self { k: 2, p: 2.0, eta: 3.0, theta: 3.0, gamma: None, alphas: None }
    }
}

impl SpaceConfig {
    pub fn resolve(&self) -> SpaceParams {
        let mut s = SpaceParams::critical(self.k, self.p, self.eta, self.theta);
        if let Some(g) = self.gamma {
            s.gamma = g;
        }
        if let Some(a) = &self.alphas {
            s.alphas = a.clone();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub cells: usize,
    pub radius: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { cells: DEFAULT_CELLS, radius: 1.0 }
    }
}

/// `q` as a number or the name `"crit"` for `p/(p−1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QValue {
    Number(f64),
    Named(String),
}

impl QValue {
    pub fn parse(s: &str) -> Self {
        s.parse().map(QValue::Number).unwrap_or_else(|_| QValue::Named(s.to_string()))
    }

    pub fn resolve(&self, p: f64) -> Result<f64, String> {
        match self {
            QValue::Number(q) => Ok(*q),
            QValue::Named(s) if s == "crit" => Ok(p / (p - 1.0)),
            QValue::Named(s) => Err(format!("params.q: expected a number or \"crit\", got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OdeMethod {
    Maximize,
    FixedPoint,
}

/// Command-specific settings; each command reads its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub beta_mult: f64,
    pub q: QValue,
    pub n: Vec<u64>,
    pub epsilon: f64,
    pub mode: SweepMode,
    pub h: Vec<f64>,
    /// Sequence length `K` for `mu-h`.
    pub terms: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub functions: usize,
    /// `ν` of the symmetrization; `η` comes from the space.
    pub nu: f64,
    /// Weight exponent `α` of the maximal-function bound; defaults to `η`.
    pub alpha: Option<f64>,
    /// Registered nonlinearity for `solve-ode`.
    pub nonlinearity: String,
    pub coefficient: f64,
    pub growth_beta: f64,
    pub method: OdeMethod,
    pub lambda: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta_mult: 1.0,
            q: QValue::Named("crit".into()),
            n: DEFAULT_N_LIST.to_vec(),
            epsilon: DEFAULT_EPSILON,
            mode: SweepMode::Ratio,
            h: vec![1.5, 2.0, 2.5, 3.0, 3.5],
            terms: 64,
            restarts: 20,
            iterations: 10_000,
            functions: 20,
            nu: 3.0,
            alpha: None,
            nonlinearity: "linear-exp".into(),
            coefficient: 2.0,
            growth_beta: 1.0,
            method: OdeMethod::Maximize,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: Params,
    /// Output stem: `<stem>.csv`, `<stem>.json` and `<stem>.timing.json`.
    pub output_path: String,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            space: SpaceConfig::default(),
            grid: GridConfig::default(),
            params: Params::default(),
            output_path: format!("exactgrowth-{}", command.name()),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    /// Checks that do not need the numerics: ranges and list shapes.
    pub fn check(&self) -> Result<(), String> {
        let p = &self.params;
        if self.output_path.is_empty() {
            return Err("output_path: must not be empty".into());
        }
        if self.grid.cells < 16 {
            return Err(format!("grid.cells: need at least 16, got {}", self.grid.cells));
        }
        if !(self.grid.radius > 0.0) {
            return Err(format!("grid.radius: must be positive, got {}", self.grid.radius));
        }
        match self.command {
            CommandKind::Sweep => {
                if p.n.len() < 3 {
                    return Err("params.n: need at least 3 values".into());
                }
                if !(p.beta_mult >= 0.0) {
                    return Err(format!("params.beta_mult: must be nonnegative, got {}", p.beta_mult));
                }
                p.q.resolve(self.space.p)?;
            }
            CommandKind::MuH if p.h.is_empty() => return Err("params.h: need at least one value".into()),
            CommandKind::Symmetrize if p.functions == 0 => return Err("params.functions: must be positive".into()),
            _ => {}
        }
        Ok(())
    }
}
