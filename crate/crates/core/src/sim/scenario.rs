//! Scenario files (TOML, schema version 1).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BeliefGrid, GaussianBlob, GridGeometry, TargetModel};
use crate::formula::{parse, Formula, ParseError};
use crate::planner::{Mission, PlanError, PlannerConfig, PlanningContext};
use crate::world::{Area, AgentState, ControlSet, SensorModel, WorldError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("formula: {0}")]
    Formula(#[from] ParseError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("target `{id}`: {source}")]
    Belief { id: String, source: BeliefError },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSpec {
    pub width: f64,
    pub height: f64,
    /// Belief grid resolution along x and y. Cells must be square.
    pub cells_x: usize,
    pub cells_y: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
    #[serde(default = "default_airspeed")]
    pub airspeed: f64,
    #[serde(default = "default_controls")]
    pub controls_deg: Vec<f64>,
}

fn default_airspeed() -> f64 {
    10.0
}

fn default_controls() -> Vec<f64> {
    vec![0.0, 20.0, -20.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    #[serde(default = "default_range")]
    pub range: f64,
    /// Full angle of view, degrees.
    #[serde(default = "default_fov")]
    pub fov_deg: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_range() -> f64 {
    20.0
}
fn default_fov() -> f64 {
    60.0
}
fn default_alpha() -> f64 {
    0.9
}
fn default_lambda() -> f64 {
    200.0
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            range: default_range(),
            fov_deg: default_fov(),
            alpha: default_alpha(),
            lambda: default_lambda(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Predicate name used for this target in the formula.
    pub id: String,
    pub max_speed: f64,
    /// True initial position, meters.
    pub position: [f64; 2],
    /// Initial belief as a Gaussian mixture; uniform when empty.
    #[serde(default)]
    pub prior: Vec<GaussianBlob>,
}

fn default_snapshot_every() -> usize {
    5
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub formula: String,
    pub horizon: usize,
    pub beam_width: usize,
    #[serde(default)]
    pub condition_on_no_detection: bool,
    /// Belief snapshot period in steps; 0 keeps only the first and last.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// End the mission early once the executed run satisfies an event
    /// mission with probability 1.
    #[serde(default = "yes")]
    pub stop_when_satisfied: bool,
    pub area: AreaSpec,
    pub agent: AgentSpec,
    #[serde(default)]
    pub sensor: SensorSpec,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
}

/// A validated scenario with everything the closed loop needs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub formula: Formula,
    pub mission: Mission,
    pub config: PlannerConfig,
    pub context: PlanningContext,
    pub area: Area,
    pub geometry: GridGeometry,
    pub initial: AgentState,
    pub priors: Vec<BeliefGrid>,
    pub target_ids: Vec<String>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        if scenario.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion(scenario.schema_version));
        }
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Validates and builds the runtime objects.
    pub fn prepare(&self) -> Result<Prepared, ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        let formula = parse(&self.formula)?;
        let target_ids: Vec<String> = self.targets.iter().map(|t| t.id.clone()).collect();
        for (i, id) in target_ids.iter().enumerate() {
            if target_ids[..i].contains(id) {
                return invalid(format!("duplicate target id `{id}`"));
            }
        }
        formula.check_predicates(&target_ids)?;
        if self.beam_width == 0 {
            return invalid("beam_width must be at least 1".into());
        }
        if self.horizon == 0 {
            return invalid("horizon must be at least 1".into());
        }
        let hrz = formula.horizon();
        if (self.horizon as u64) < hrz {
            log::warn!(
                "scenario `{}`: horizon {} is shorter than the formula horizon {}",
                self.name,
                self.horizon,
                hrz
            );
        }

        let a = &self.area;
        if !(a.width > 0.0 && a.height > 0.0) || a.cells_x == 0 || a.cells_y == 0 {
            return invalid("area dimensions and cell counts must be positive".into());
        }
        let cell = a.width / a.cells_x as f64;
        if ((a.height / a.cells_y as f64) - cell).abs() > 1e-9 * cell {
            return invalid("area must be divided into square cells".into());
        }
        let geometry = GridGeometry::new(a.cells_x, a.cells_y, cell, [0.0, 0.0])
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let area = Area {
            width: a.width,
            height: a.height,
        };

        let sensor = SensorModel::new(
            self.sensor.range,
            (self.sensor.fov_deg / 2.0).to_radians(),
            self.sensor.alpha,
            self.sensor.lambda,
        )?;
        let controls = ControlSet::from_degrees(&self.agent.controls_deg)?;
        if !(self.agent.airspeed >= 0.0) {
            return invalid("airspeed must be non-negative".into());
        }

        let mut priors = Vec::new();
        let mut models = Vec::new();
        for t in &self.targets {
            if !(t.max_speed >= 0.0) {
                return invalid(format!("target `{}`: max_speed must be non-negative", t.id));
            }
            if !area.contains(t.position) {
                return invalid(format!("target `{}` starts outside the mission area", t.id));
            }
            let prior = if t.prior.is_empty() {
                BeliefGrid::uniform(geometry)
            } else {
                BeliefGrid::from_gaussian_mixture(geometry, &t.prior).map_err(|source| {
                    ScenarioError::Belief {
                        id: t.id.clone(),
                        source,
                    }
                })?
            };
            priors.push(prior);
            models.push(TargetModel {
                max_speed: t.max_speed,
            });
        }

        let mission = Mission::new(formula.clone(), target_ids.clone())?;
        Ok(Prepared {
            formula,
            mission,
            config: PlannerConfig {
                beam_width: self.beam_width,
                horizon: self.horizon,
            },
            context: PlanningContext {
                sensor,
                controls,
                airspeed: self.agent.airspeed,
                models,
                condition_on_no_detection: self.condition_on_no_detection,
            },
            area,
            geometry,
            initial: AgentState::new(
                self.agent.x,
                self.agent.y,
                self.agent.heading_deg.to_radians(),
            ),
            priors,
            target_ids,
        })
    }
}
