//! Declarative scenario files (JSON) and the pre-run validation report.
//!
//! Sensor and node ids in files are one-based. Edges are written
//! `[from, to]`: information flows from `from` to `to`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ci_weights::AdaptiveSettings;
use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::harness::{ExperimentConfig, Scenario};
use crate::linalg::{self, Mat};
use crate::model::{AssumptionBounds, MatrixSeq, RegularityWindow, SensorModel, SystemModel, ValidationReport};
use crate::observability::{self, UcoReport, UcoThresholds};
use crate::topology::{self, Edge, NetworkTopology};

/// A constant matrix, or one matrix per step `k = 0, 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Constant(Vec<Vec<f64>>),
    Table(Vec<Vec<Vec<f64>>>),
}

impl MatrixSpec {
    fn build(&self, what: &str) -> Result<MatrixSeq> {
        let parse = |rows: &[Vec<f64>]| linalg::from_rows(rows).ok_or_else(|| Error::Scenario(format!("{what}: ragged matrix rows")));
        match self {
            MatrixSpec::Constant(rows) => Ok(MatrixSeq::Constant(parse(rows)?)),
            MatrixSpec::Table(steps) => {
                let mats = steps.iter().map(|m| parse(m)).collect::<Result<Vec<_>>>()?;
                let shape = mats.first().map(|m| m.shape()).ok_or_else(|| Error::Scenario(format!("{what}: empty matrix table")))?;
                if mats.iter().any(|m| m.shape() != shape) {
                    return Err(Error::Scenario(format!("{what}: table entries differ in shape")));
                }
                Ok(MatrixSeq::table(mats))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub h: MatrixSpec,
    pub r: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub state_dim: usize,
    pub a: MatrixSpec,
    pub q: MatrixSpec,
    pub sensors: Vec<SensorSpec>,
}

/// Exactly one of `preset` and `inline`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `"paper_example_1"` or `"paper_example_2"`.
    pub preset: Option<String>,
    /// Seed for the random observation rows of `paper_example_2`; defaults to the run seed.
    pub row_seed: Option<u64>,
    pub inline: Option<InlineModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeList {
    pub nodes: usize,
    /// One-based `[from, to]` pairs.
    pub links: Vec<[usize; 2]>,
    /// Adds the reverse of every link.
    #[serde(default)]
    pub undirected: bool,
}

/// Exactly one of `preset` and `edges`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    /// `"fig2_4cycle"` or `"fig7_20node"`.
    pub preset: Option<String>,
    pub edges: Option<EdgeList>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularitySpec {
    pub first: usize,
    pub period: usize,
    pub window_len: usize,
    pub lower_bound: f64,
}

/// Declared observability requirements. Without `window` the validator sweeps
/// `1..=24` and reports the smallest passing one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilitySpec {
    pub window: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl ObservabilitySpec {
    pub fn thresholds(&self) -> UcoThresholds {
        UcoThresholds {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

fn default_inflation() -> f64 {
    1.0
}

fn default_filters() -> Vec<FilterKind> {
    FilterKind::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub model: ModelSpec,
    pub topology: TopologySpec,
    /// `E{x_0 x_0ᵀ}`; the identity when omitted.
    #[serde(default)]
    pub p0: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_inflation")]
    pub p0_inflation: f64,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_filters")]
    pub filters: Vec<FilterKind>,
    #[serde(default)]
    pub weights: AdaptiveSettings,
    /// Overrides the preset's regularity anchors.
    #[serde(default)]
    pub regularity: Option<RegularitySpec>,
    /// Overrides the preset's declared bounds.
    #[serde(default)]
    pub bounds: Option<AssumptionBounds>,
    #[serde(default)]
    pub observability: ObservabilitySpec,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().or_else(|| self.model.preset.clone()).unwrap_or_else(|| "inline".into())
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            horizon: self.horizon,
            trials: self.trials,
            seed: self.seed,
            filters: self.filters.clone(),
            adaptive: self.weights.clone(),
        }
    }

    /// Builds the scenario with a model horizon of `self.horizon`.
    pub fn build(&self) -> Result<Scenario> {
        let mut scenario = match (&self.model.preset, &self.model.inline) {
            (Some(name), None) => match name.as_str() {
                "paper_example_1" => Scenario::paper_example_1(self.horizon),
                "paper_example_2" => Scenario::paper_example_2(self.horizon, self.model.row_seed.unwrap_or(self.seed)),
                other => return Err(Error::Scenario(format!("unknown model preset {other:?}"))),
            },
            (None, Some(inline)) => {
                let (model, sensors) = build_inline(inline, self.horizon)?;
                let n = model.state_dim();
                Scenario {
                    name: String::new(),
                    model,
                    sensors,
                    topology: topology::uniform_weights(&[], 1)?,
                    p0: Mat::identity(n, n),
                    p0_inflation: 1.0,
                    window: None,
                    bounds: AssumptionBounds::default(),
                    row_draw: None,
                }
            }
            _ => return Err(Error::Scenario("model needs exactly one of \"preset\" and \"inline\"".into())),
        };
        if self.model.row_seed.is_some() && self.model.preset.as_deref() != Some("paper_example_2") {
            return Err(Error::Scenario("row_seed only applies to the paper_example_2 preset".into()));
        }
        scenario.name = self.display_name();
        scenario.topology = build_topology(&self.topology)?;
        if let Some(p0) = &self.p0 {
            scenario.p0 = linalg::from_rows(p0).ok_or_else(|| Error::Scenario("p0: ragged matrix rows".into()))?;
        }
        scenario.p0_inflation = self.p0_inflation;
        if let Some(r) = &self.regularity {
            scenario.window = Some(RegularityWindow::periodic(r.first, r.period, self.horizon, r.window_len, r.lower_bound));
        }
        if let Some(b) = &self.bounds {
            scenario.bounds = b.clone();
        }
        scenario.check_structure()?;
        Ok(scenario)
    }
}

fn build_inline(spec: &InlineModel, horizon: usize) -> Result<(SystemModel, Vec<SensorModel>)> {
    let n = spec.state_dim;
    let model = SystemModel::new(n, spec.a.build("A")?, spec.q.build("Q")?, horizon)?;
    let sensors = spec
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| SensorModel::new(i + 1, n, s.h.build(&format!("H of sensor {}", i + 1))?, s.r.build(&format!("R of sensor {}", i + 1))?))
        .collect::<Result<Vec<_>>>()?;
    if sensors.is_empty() {
        return Err(Error::Scenario("inline model has no sensors".into()));
    }
    Ok((model, sensors))
}

fn build_topology(spec: &TopologySpec) -> Result<NetworkTopology> {
    match (&spec.preset, &spec.edges) {
        (Some(name), None) => topology::preset(name).ok_or_else(|| Error::Scenario(format!("unknown topology preset {name:?}"))),
        (None, Some(list)) => {
            let mut edges = Vec::with_capacity(list.links.len() * 2);
            for &[from, to] in &list.links {
                if from == 0 || to == 0 || from > list.nodes || to > list.nodes {
                    return Err(Error::Scenario(format!("link [{from}, {to}] outside nodes 1..={}", list.nodes)));
                }
                edges.push(Edge::flow(from - 1, to - 1));
                if list.undirected {
                    edges.push(Edge::flow(to - 1, from - 1));
                }
            }
            topology::uniform_weights(&edges, list.nodes)
        }
        _ => Err(Error::Scenario("topology needs exactly one of \"preset\" and \"edges\"".into())),
    }
}

/// Largest window the validator sweeps when none is declared.
pub const MAX_SWEEP_WINDOW: usize = 24;

/// Everything the validator checks before a run.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub assumptions: ValidationReport,
    pub strongly_connected: bool,
    /// `𝒜^{N−1}` entrywise positive.
    pub primitive: bool,
    /// The declared window's sweep, or the smallest passing window in `1..=24`.
    pub observability: Option<UcoReport>,
    pub observability_note: String,
}

impl ScenarioReport {
    /// Filters cannot run: a hard assumption failure.
    pub fn has_hard_failure(&self) -> bool {
        self.assumptions.has_hard_failure()
    }

    /// Warnings that void a guarantee but do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w: Vec<String> = self.assumptions.failures().filter(|f| f.severity == crate::model::Severity::Soft).map(|f| format!("{}: {}", f.check, f.detail)).collect();
        if !self.strongly_connected {
            w.push("topology: the network is not strongly connected".into());
        }
        if !self.primitive {
            w.push("topology: A^(N-1) has zero entries".into());
        }
        if self.observability.as_ref().is_none_or(|r| !r.passed) {
            w.push(format!("observability: {}", self.observability_note));
        }
        w
    }
}

pub fn validate_scenario(scenario: &Scenario, spec: &ObservabilitySpec) -> ScenarioReport {
    let assumptions = scenario.validate();
    let strongly_connected = topology::is_strongly_connected(&scenario.topology);
    let primitive = topology::check_primitivity(&scenario.topology, scenario.topology.len().saturating_sub(1).max(1));
    let horizon = scenario.horizon();
    let thresholds = spec.thresholds();
    let (observability, observability_note) = if assumptions.has_hard_failure() {
        (None, "skipped: the model failed hard checks".to_string())
    } else {
        match spec.window {
            Some(w) if w > horizon => (None, format!("declared window {w} exceeds the horizon {horizon}")),
            Some(w) => match observability::check_uco(&scenario.model, &scenario.sensors, w, 0..=horizon - w, thresholds) {
                Ok(r) => {
                    let note = format!("window {w}: {}", if r.passed { "uniformly observable" } else { "not uniformly observable" });
                    (Some(r), note)
                }
                Err(e) => (None, format!("evaluation failed: {e}")),
            },
            None => {
                let top = MAX_SWEEP_WINDOW.min(horizon);
                match observability::smallest_window(&scenario.model, &scenario.sensors, 1..=top, horizon - top, thresholds) {
                    Ok(Some(r)) => {
                        let note = format!("smallest passing window {} (swept 1..={top})", r.window);
                        (Some(r), note)
                    }
                    Ok(None) => (None, format!("no window in 1..={top} passes")),
                    Err(e) => (None, format!("evaluation failed: {e}")),
                }
            }
        }
    };
    ScenarioReport {
        scenario: scenario.name.clone(),
        assumptions,
        strongly_connected,
        primitive,
        observability,
        observability_note,
    }
}
