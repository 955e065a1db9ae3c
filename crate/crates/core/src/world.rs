//! Unicycle agent at constant airspeed, a forward-facing camera, and the
//! ground-truth targets the camera looks for.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::TargetModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("control set is empty")]
    EmptyControlSet,
    #[error("control input {0} is not finite")]
    NonFiniteControl(f64),
    #[error("invalid sensor: {0}")]
    InvalidSensor(&'static str),
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar pose: position in meters, heading in radians within `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Advances one step: translate along the current heading, then turn by `u`.
pub fn step(s: &AgentState, u: f64, airspeed: f64) -> AgentState {
    AgentState {
        x: s.x + airspeed * s.heading.cos(),
        y: s.y + airspeed * s.heading.sin(),
        heading: normalize_angle(s.heading + u),
    }
}

/// States reached by applying `controls` in order; element `k` is the state
/// after `k + 1` steps.
pub fn rollout(s0: &AgentState, controls: &[f64], airspeed: f64) -> Vec<AgentState> {
    let mut out = Vec::with_capacity(controls.len());
    let mut s = *s0;
    for &u in controls {
        s = step(&s, u, airspeed);
        out.push(s);
    }
    out
}

/// Finite set of heading-rate inputs, radians per step. Order matters: ties
/// in planning are broken towards earlier entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSet(Vec<f64>);

impl ControlSet {
    pub fn new(controls: Vec<f64>) -> Result<Self, WorldError> {
        if controls.is_empty() {
            return Err(WorldError::EmptyControlSet);
        }
        if let Some(&bad) = controls.iter().find(|u| !u.is_finite()) {
            return Err(WorldError::NonFiniteControl(bad));
        }
        Ok(Self(controls))
    }

    pub fn from_degrees(controls: &[f64]) -> Result<Self, WorldError> {
        Self::new(controls.iter().map(|d| d.to_radians()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Default for ControlSet {
    /// Straight, left, right at 20 degrees per step.
    fn default() -> Self {
        Self::from_degrees(&[0.0, 20.0, -20.0]).expect("non-empty")
    }
}

/// Camera with a circular-sector field of view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Effective measuring distance, meters.
    pub range: f64,
    /// Half of the angle of view, radians.
    pub half_angle: f64,
    /// Detection probability at zero distance.
    pub alpha: f64,
    /// Distance decay, square meters.
    pub lambda: f64,
}

impl SensorModel {
    pub fn new(range: f64, half_angle: f64, alpha: f64, lambda: f64) -> Result<Self, WorldError> {
        let sensor = Self {
            range,
            half_angle,
            alpha,
            lambda,
        };
        sensor.validate()?;
        Ok(sensor)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(WorldError::InvalidSensor("alpha must lie in [0, 1]"));
        }
        if !(self.lambda > 0.0) {
            return Err(WorldError::InvalidSensor("lambda must be positive"));
        }
        if !(self.range > 0.0) {
            return Err(WorldError::InvalidSensor("range must be positive"));
        }
        if !(self.half_angle > 0.0 && self.half_angle <= PI) {
            return Err(WorldError::InvalidSensor("half angle must lie in (0, pi]"));
        }
        Ok(())
    }

    pub fn in_view(&self, agent: &AgentState, target: [f64; 2]) -> bool {
        let dx = target[0] - agent.x;
        let dy = target[1] - agent.y;
        let d2 = dx * dx + dy * dy;
        if d2 > self.range * self.range {
            return false;
        }
        if d2 == 0.0 {
            return true;
        }
        let off_axis = normalize_angle(dy.atan2(dx) - agent.heading);
        off_axis.abs() <= self.half_angle
    }
}

impl Default for SensorModel {
    /// 20 m range, 60 degree angle of view, alpha 0.9, lambda 200 m^2.
    fn default() -> Self {
        Self {
            range: 20.0,
            half_angle: PI / 6.0,
            alpha: 0.9,
            lambda: 200.0,
        }
    }
}

/// Probability that the camera on `agent` detects a target at `target`.
pub fn detection_likelihood(agent: &AgentState, target: [f64; 2], sensor: &SensorModel) -> f64 {
    if !sensor.in_view(agent, target) {
        return 0.0;
    }
    let dx = target[0] - agent.x;
    let dy = target[1] - agent.y;
    sensor.alpha * (-(dx * dx + dy * dy) / sensor.lambda).exp()
}

/// Bernoulli draw with the detection likelihood.
pub fn sample_observation<R: Rng>(
    agent: &AgentState,
    target: &GroundTruthTarget,
    sensor: &SensorModel,
    rng: &mut R,
) -> bool {
    let p = detection_likelihood(agent, target.position, sensor);
    rng.gen::<f64>() < p
}

/// Rectangular mission area `[0, width] x [0, height]`, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.width).contains(&p[0]) && (0.0..=self.height).contains(&p[1])
    }
}

fn reflect(v: f64, max: f64) -> f64 {
    let mut v = v;
    // A displacement never exceeds one area width in practice; loop for safety.
    for _ in 0..8 {
        if v < 0.0 {
            v = -v;
        } else if v > max {
            v = 2.0 * max - v;
        } else {
            return v;
        }
    }
    v.clamp(0.0, max)
}

/// The hidden true target, moving at random within a speed bound.
#[derive(Clone, Debug)]
pub struct GroundTruthTarget {
    pub position: [f64; 2],
    pub model: TargetModel,
    rng: ChaCha8Rng,
}

impl GroundTruthTarget {
    /// Each target draws its motion from its own stream so the order in which
    /// targets are advanced does not matter.
    pub fn new(position: [f64; 2], model: TargetModel, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            position,
            model,
            rng,
        }
    }

    /// Moves by a uniform draw from the disk of radius `max_speed`,
    /// reflecting off the area borders.
    pub fn step_truth(&mut self, area: &Area) {
        let radius = self.model.max_speed;
        if radius <= 0.0 {
            return;
        }
        let r = radius * self.rng.gen::<f64>().sqrt();
        let phi = 2.0 * PI * self.rng.gen::<f64>();
        self.position = [
            reflect(self.position[0] + r * phi.cos(), area.width),
            reflect(self.position[1] + r * phi.sin(), area.height),
        ];
    }
}
