//! Exhaustive search oracle for the beam planner: scores every control
//! sequence of a fixed depth with the reference evaluator.

use prstl::belief::{BeliefGrid, GaussianBlob, GridGeometry, TargetModel};
use prstl::formula::{EventFormula, Formula};
use prstl::planner::{plan_step, Mission, PlanOutcome, PlannerConfig, PlanningContext};
use prstl::semantics::Run;
use prstl::world::{step, AgentState, ControlSet, SensorModel};
use rand::Rng;

use super::{ref_prob, RefTable};

#[derive(Clone, Debug)]
pub struct PlanningInstance {
    pub formula: EventFormula,
    pub belief: BeliefGrid,
    pub model: TargetModel,
    pub sensor: SensorModel,
    pub controls: ControlSet,
    pub airspeed: f64,
    pub origin: AgentState,
    pub depth: usize,
}

fn random_mission<R: Rng>(rng: &mut R) -> EventFormula {
    let mu = || EventFormula::pred("mu");
    let mut b = || rng.gen_range(1..=8u32);
    let (x, y, z) = (b(), b(), b());
    match x % 5 {
        0 => EventFormula::eventually(0, y, mu()),
        1 => EventFormula::globally(0, y.min(3), EventFormula::eventually(0, z, mu())),
        2 => EventFormula::eventually(0, y, EventFormula::globally(0, z.min(2), mu())),
        3 => EventFormula::and(
            EventFormula::eventually(0, y, mu()),
            EventFormula::eventually(0, z, EventFormula::not(mu())),
        ),
        _ => EventFormula::eventually(
            0,
            y,
            EventFormula::and(mu(), EventFormula::eventually(0, z, mu())),
        ),
    }
}

/// Random single-target instance on a 20x20 grid with two controls.
pub fn random_planning_instance<R: Rng>(rng: &mut R, depth: usize) -> PlanningInstance {
    let geometry = GridGeometry::new(20, 20, 5.0, [0.0, 0.0]).unwrap();
    let s = rng.gen_range(20.0..200.0);
    let blob = GaussianBlob {
        mean: [rng.gen_range(10.0..90.0), rng.gen_range(10.0..90.0)],
        covariance: [[s, 0.0], [0.0, s * rng.gen_range(0.5..1.5)]],
        weight: 1.0,
    };
    let turn = rng.gen_range(10.0f64..40.0).to_radians();
    let controls = if rng.gen_bool(0.5) {
        vec![0.0, turn]
    } else {
        vec![turn, -turn]
    };
    PlanningInstance {
        formula: random_mission(rng),
        belief: BeliefGrid::from_gaussian_mixture(geometry, &[blob]).unwrap(),
        model: TargetModel {
            max_speed: rng.gen_range(0.0..3.0),
        },
        sensor: SensorModel::default(),
        controls: ControlSet::new(controls).unwrap(),
        airspeed: rng.gen_range(4.0..10.0),
        origin: AgentState::new(
            rng.gen_range(10.0..90.0),
            rng.gen_range(10.0..90.0),
            rng.gen_range(-3.1..3.1),
        ),
        depth,
    }
}

impl PlanningInstance {
    /// Relaxed time-0 score of a control sequence, computed from scratch.
    pub fn oracle_score(&self, sequence: &[usize]) -> f64 {
        let mut column = vec![0.0];
        let mut state = self.origin;
        for (d, &u) in sequence.iter().enumerate() {
            state = step(&state, self.controls.get(u), self.airspeed);
            let forecast = self.belief.predict(&self.model, d + 1);
            column.push(forecast.expected_detection(&state, &self.sensor));
        }
        let table = RefTable::new(&["mu"], vec![column]);
        ref_prob(&self.formula, 0, &table, true).expect("zero-start windows are never empty")
    }

    /// Best score over all `|U|^depth` sequences and every sequence reaching it.
    pub fn exhaustive(&self) -> (f64, Vec<Vec<usize>>) {
        let n = self.controls.len();
        let total = n.pow(self.depth as u32);
        let mut best = f64::NEG_INFINITY;
        let mut argmax = Vec::new();
        for code in 0..total {
            let mut seq = vec![0; self.depth];
            let mut c = code;
            for slot in seq.iter_mut().rev() {
                *slot = c % n;
                c /= n;
            }
            let s = self.oracle_score(&seq);
            if s > best {
                best = s;
                argmax = vec![seq];
            } else if s == best {
                argmax.push(seq);
            }
        }
        (best, argmax)
    }

    pub fn plan(&self, beam_width: usize) -> PlanOutcome {
        let mission = Mission::new(Formula::Event(self.formula.clone()), vec!["mu".into()]).unwrap();
        let ctx = PlanningContext {
            sensor: self.sensor,
            controls: self.controls.clone(),
            airspeed: self.airspeed,
            models: vec![self.model],
            condition_on_no_detection: false,
        };
        let config = PlannerConfig {
            beam_width,
            horizon: self.depth,
        };
        let run = Run::new(self.origin, vec![false]);
        plan_step(&run, std::slice::from_ref(&self.belief), &mission, &config, &ctx).unwrap()
    }
}
