//! JSON run configuration.
//!
//! Every task shares one flat option table; [`parse_config`] checks that the
//! options a task needs are present and flags the ones it would ignore.

use serde::{Deserialize, Serialize};

use squeezed_arrays::analysis::{Constraints, Lock, Param, Tie};
use squeezed_arrays::array::{ModeBasis, SystemParams};
use squeezed_arrays::reservoir::PoParams;
use squeezed_arrays::steady::SourceKind;

use crate::error::CliError;

/// Absolute scale the rates are quoted in; echoed into every output file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Unit {
    /// Rates relative to the reservoir exchange rate.
    #[default]
    #[serde(rename = "zeta_a")]
    ZetaA,
    #[serde(rename = "GHz")]
    Ghz,
}

impl Unit {
    pub fn label(self) -> &'static str {
        match self {
            Unit::ZetaA => "zeta_a",
            Unit::Ghz => "GHz",
        }
    }
}

/// A scalar broadcast to every cavity, or one value per cavity (or link).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl Rates {
    fn expand(&self, len: usize, key: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Rates::Uniform(v) => Ok(vec![*v; len]),
            Rates::PerSite(list) if list.len() == len => Ok(list.clone()),
            Rates::PerSite(list) => Err(CliError::invalid(
                key,
                format!("needs {len} entries, got {}", list.len()),
            )),
        }
    }
}

fn default_n() -> usize {
    1
}
fn default_eta() -> Rates {
    Rates::Uniform(1.0)
}
fn default_kappa() -> Rates {
    Rates::Uniform(0.0)
}
fn default_zeta_a() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    6.48
}
fn default_zeta_b() -> f64 {
    10.0
}

/// System block; unspecified rates default to a broadband-friendly regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(default = "default_n")]
    pub n_cavities: usize,
    #[serde(default = "default_eta")]
    pub eta: Rates,
    #[serde(default = "default_kappa")]
    pub kappa: Rates,
    #[serde(default = "default_zeta_a")]
    pub zeta_a: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_zeta_b")]
    pub zeta_b: f64,
    #[serde(default)]
    pub kappa_0: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            n_cavities: default_n(),
            eta: default_eta(),
            kappa: default_kappa(),
            zeta_a: default_zeta_a(),
            alpha: default_alpha(),
            zeta_b: default_zeta_b(),
            kappa_0: 0.0,
        }
    }
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemParams, CliError> {
        let n = self.n_cavities;
        if n == 0 {
            return Err(CliError::invalid(
                "system.n_cavities",
                "must be >= 1".into(),
            ));
        }
        let eta = self.eta.expand(n - 1, "system.eta")?;
        let kappa = self.kappa.expand(n, "system.kappa")?;
        let po = PoParams::new(self.alpha, self.zeta_b, self.kappa_0)?;
        Ok(SystemParams::new(eta, kappa, self.zeta_a, po)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Steady,
    PairMap,
    NormalMap,
    Spectrum,
    Sweep,
    Transient,
    BroadbandCheck,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Steady => "steady",
            TaskKind::PairMap => "pair-map",
            TaskKind::NormalMap => "normal-map",
            TaskKind::Spectrum => "spectrum",
            TaskKind::Sweep => "sweep",
            TaskKind::Transient => "transient",
            TaskKind::BroadbandCheck => "broadband-check",
        }
    }

    fn options(self) -> &'static [&'static str] {
        match self {
            TaskKind::Steady | TaskKind::PairMap | TaskKind::BroadbandCheck => &[],
            TaskKind::NormalMap => &["basis"],
            TaskKind::Spectrum => &["omega"],
            TaskKind::Sweep => &["axis", "values", "ties", "locks"],
            TaskKind::Transient => &["times", "t_end", "samples", "step", "source"],
        }
    }
}

/// Evenly spaced frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(rename = "type")]
    pub kind: TaskKind,
    pub basis: Option<ModeBasis>,
    pub omega: Option<GridSpec>,
    pub axis: Option<Param>,
    pub values: Option<Vec<f64>>,
    pub ties: Option<Vec<Tie>>,
    pub locks: Option<Vec<Lock>>,
    pub times: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
    pub step: Option<f64>,
    pub source: Option<SourceKind>,
}

impl TaskSpec {
    fn present(&self) -> Vec<&'static str> {
        let flags = [
            ("basis", self.basis.is_some()),
            ("omega", self.omega.is_some()),
            ("axis", self.axis.is_some()),
            ("values", self.values.is_some()),
            ("ties", self.ties.is_some()),
            ("locks", self.locks.is_some()),
            ("times", self.times.is_some()),
            ("t_end", self.t_end.is_some()),
            ("samples", self.samples.is_some()),
            ("step", self.step.is_some()),
            ("source", self.source.is_some()),
        ];
        flags
            .iter()
            .filter(|(_, on)| *on)
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn constraints(&self) -> Constraints {
        Constraints {
            locks: self.locks.clone().unwrap_or_default(),
            ties: self.ties.clone().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    #[serde(default)]
    pub unit: Unit,
    #[serde(default)]
    pub system: SystemSpec,
    pub task: TaskSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub unit: Unit,
    pub system: SystemParams,
    pub task: TaskSpec,
    pub output: OutputSpec,
}

/// Parsed configuration plus keys that were present but not used.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: RunConfig,
    pub ignored: Vec<String>,
}

/// Parses and validates a configuration; with `strict`, any unused key is an error.
pub fn parse_config(text: &str, strict: bool) -> Result<Parsed, CliError> {
    let mut ignored = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_ignored::deserialize(&mut de, |path| ignored.push(path.to_string()))
        .map_err(CliError::from_json)?;
    de.end().map_err(CliError::from_json)?;

    let allowed = raw.task.kind.options();
    for key in raw.task.present() {
        if !allowed.contains(&key) {
            ignored.push(format!("task.{key}"));
        }
    }
    if strict {
        if let Some(key) = ignored.first() {
            return Err(CliError::UnknownKey {
                key: key.clone(),
                task: raw.task.kind.name(),
            });
        }
    }

    let system = raw.system.build()?;
    validate_task(&raw.task)?;
    Ok(Parsed {
        config: RunConfig {
            unit: raw.unit,
            system,
            task: raw.task,
            output: raw.output,
        },
        ignored,
    })
}

fn validate_task(task: &TaskSpec) -> Result<(), CliError> {
    match task.kind {
        TaskKind::Spectrum => {
            if let Some(g) = task.omega {
                if g.points < 2 || !(g.to > g.from) {
                    return Err(CliError::invalid(
                        "task.omega",
                        "needs from < to and at least 2 points".into(),
                    ));
                }
            }
        }
        TaskKind::Sweep => {
            let missing = |key: &str| CliError::invalid(key, "required by task sweep".into());
            task.axis.ok_or_else(|| missing("task.axis"))?;
            let values = task.values.as_ref().ok_or_else(|| missing("task.values"))?;
            if values.is_empty() {
                return Err(CliError::invalid("task.values", "must not be empty".into()));
            }
        }
        TaskKind::Transient => {
            if task.times.is_some() && (task.t_end.is_some() || task.samples.is_some()) {
                return Err(CliError::invalid(
                    "task.times",
                    "give either times or t_end/samples, not both".into(),
                ));
            }
            if let Some(times) = &task.times {
                if times.first() != Some(&0.0) {
                    return Err(CliError::invalid("task.times", "must start at 0".into()));
                }
            }
            if let Some(t) = task.t_end {
                if !(t > 0.0) || !t.is_finite() {
                    return Err(CliError::invalid(
                        "task.t_end",
                        "must be finite and > 0".into(),
                    ));
                }
            }
            if task.samples == Some(0) {
                return Err(CliError::invalid("task.samples", "must be >= 1".into()));
            }
        }
        TaskKind::NormalMap | TaskKind::Steady | TaskKind::PairMap | TaskKind::BroadbandCheck => {}
    }
    Ok(())
}
