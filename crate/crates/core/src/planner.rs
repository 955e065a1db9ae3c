//! Receding-horizon synthesis by N-best forward beam search.
//!
//! Starting from the executed past, every candidate is extended by every
//! control, each new candidate is scored by the relaxed satisfaction
//! probability of the mission at time 0, and only the `beam_width` best
//! survive. The search stops as soon as all survivors agree on the first
//! control, or when the mission horizon is reached.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefGrid, TargetModel};
use crate::formula::{EventFormula, Formula, Violation};
use crate::semantics::{EvalError, Mode, PredicateSource, Program, Run};
use crate::world::{step, AgentState, ControlSet, SensorModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("control set is empty")]
    EmptyControlSet,
    #[error("beam width must be at least 1")]
    ZeroBeamWidth,
    #[error("formula is not synthesizable: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    NotSynthesizable(Vec<Violation>),
    #[error("current time {time} is at or past the mission horizon {horizon}")]
    HorizonReached { time: usize, horizon: usize },
    #[error("{expected} targets expected, got {found} beliefs")]
    TargetCountMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Maximum number of candidates kept after each expansion.
    pub beam_width: usize,
    /// Mission horizon; planning from time `t` looks `horizon - t` steps ahead.
    pub horizon: usize,
}

/// A compiled mission formula bound to an ordered list of target ids.
#[derive(Clone, Debug)]
pub struct Mission {
    formula: Formula,
    targets: Vec<String>,
    program: Program,
    clauses: Vec<Program>,
}

fn conjuncts(f: &EventFormula, out: &mut Vec<EventFormula>) {
    match f {
        EventFormula::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        other => out.push(other.clone()),
    }
}

impl Mission {
    pub fn new(formula: Formula, targets: Vec<String>) -> Result<Self, PlanError> {
        let violations = formula.check_synthesizable();
        if !violations.is_empty() {
            return Err(PlanError::NotSynthesizable(violations));
        }
        let program = Program::compile(&formula, &targets)?;
        let mut parts = Vec::new();
        if let Formula::Event(e) = &formula {
            conjuncts(e, &mut parts);
        }
        let clauses = if parts.len() > 1 {
            parts
                .into_iter()
                .map(|p| Program::compile(&Formula::Event(p), &targets))
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            formula,
            targets,
            program,
            clauses,
        })
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Relaxed score at time 0: the probability for event missions, 0 or 1
    /// for instance missions.
    pub fn score<S: PredicateSource>(&self, source: &S) -> Result<f64, EvalError> {
        self.program.score(source, 0, Mode::Relaxed)
    }

    /// Relaxed score of each top-level conjunct of an event mission; empty
    /// when the mission is not a conjunction.
    pub fn clause_scores<S: PredicateSource>(&self, source: &S) -> Result<Vec<f64>, EvalError> {
        self.clauses
            .iter()
            .map(|c| c.score(source, 0, Mode::Relaxed))
            .collect()
    }
}

/// Dynamics, sensing and target motion the planner forecasts with.
#[derive(Clone, Debug)]
pub struct PlanningContext {
    pub sensor: SensorModel,
    pub controls: ControlSet,
    pub airspeed: f64,
    /// One motion model per target, in mission target order.
    pub models: Vec<TargetModel>,
    /// Condition forecast beliefs on not detecting the target along each
    /// candidate. Off by default.
    pub condition_on_no_detection: bool,
}

/// A past run extended by a hypothesized control sequence.
#[derive(Clone, Debug)]
pub struct CandidateTrajectory {
    /// Indices into the control set.
    pub controls: Vec<usize>,
    /// Future states; `states[k]` is reached after `controls[..=k]`.
    pub states: Vec<AgentState>,
    /// `forecast[i][k]` is the detection probability of target `i` at `states[k]`.
    pub forecast: Vec<Vec<f64>>,
    pub score: f64,
    conditioned: Option<Vec<BeliefGrid>>,
}

impl CandidateTrajectory {
    /// The empty extension of the past.
    pub fn root(targets: usize) -> Self {
        Self {
            controls: Vec::new(),
            states: Vec::new(),
            forecast: vec![Vec::new(); targets],
            score: f64::NAN,
            conditioned: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.controls.len()
    }
}

/// Observation columns of the executed past, as probabilities.
#[derive(Clone, Debug)]
pub struct PastColumns {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    len: usize,
}

impl PastColumns {
    pub fn new(run: &Run, names: &[String]) -> Self {
        let columns = (0..names.len())
            .map(|i| {
                run.observations
                    .iter()
                    .map(|z| if z[i] { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            names: names.to_vec(),
            columns,
            len: run.past.len(),
        }
    }
}

/// Past observations followed by one candidate's forecast.
pub struct CandidateView<'a> {
    past: &'a PastColumns,
    candidate: &'a CandidateTrajectory,
}

impl<'a> CandidateView<'a> {
    pub fn new(past: &'a PastColumns, candidate: &'a CandidateTrajectory) -> Self {
        Self { past, candidate }
    }
}

impl PredicateSource for CandidateView<'_> {
    fn predicate_index(&self, name: &str) -> Option<usize> {
        self.past.names.iter().position(|n| n == name)
    }

    fn predicate_name(&self, index: usize) -> &str {
        &self.past.names[index]
    }

    fn predicate_count(&self) -> usize {
        self.past.names.len()
    }

    fn value(&self, predicate: usize, time: usize) -> Option<f64> {
        if time < self.past.len {
            self.past.columns.get(predicate)?.get(time).copied()
        } else {
            self.candidate.forecast.get(predicate)?.get(time - self.past.len).copied()
        }
    }

    fn last_time(&self) -> usize {
        self.past.len + self.candidate.states.len() - 1
    }
}

/// Current beliefs advanced by motion prediction only, cached per depth.
pub struct Forecaster<'a> {
    beliefs: &'a [BeliefGrid],
    models: &'a [TargetModel],
    by_depth: Vec<Vec<BeliefGrid>>,
}

impl<'a> Forecaster<'a> {
    pub fn new(beliefs: &'a [BeliefGrid], models: &'a [TargetModel]) -> Self {
        Self {
            beliefs,
            models,
            by_depth: Vec::new(),
        }
    }

    /// Forecast beliefs `depth` steps ahead (depth >= 1).
    pub fn at(&mut self, depth: usize) -> &[BeliefGrid] {
        while self.by_depth.len() < depth {
            let d = self.by_depth.len() + 1;
            let layer = self
                .beliefs
                .par_iter()
                .zip(self.models)
                .map(|(b, m)| b.predict(m, d))
                .collect();
            self.by_depth.push(layer);
        }
        &self.by_depth[depth - 1]
    }
}

/// Extends every candidate by every control. New candidates are unscored.
pub fn expand(
    candidates: &[CandidateTrajectory],
    origin: &AgentState,
    ctx: &PlanningContext,
    forecaster: &mut Forecaster<'_>,
) -> Vec<CandidateTrajectory> {
    let Some(depth) = candidates.first().map(|c| c.depth() + 1) else {
        return Vec::new();
    };
    let shared = forecaster.at(depth);
    let n_controls = ctx.controls.len();
    (0..candidates.len() * n_controls)
        .into_par_iter()
        .map(|k| {
            let parent = &candidates[k / n_controls];
            let u = k % n_controls;
            let from = parent.states.last().unwrap_or(origin);
            let next = step(from, ctx.controls.get(u), ctx.airspeed);
            let mut child = CandidateTrajectory {
                controls: parent.controls.clone(),
                states: parent.states.clone(),
                forecast: parent.forecast.clone(),
                score: f64::NAN,
                conditioned: None,
            };
            child.controls.push(u);
            child.states.push(next);
            if ctx.condition_on_no_detection {
                let predicted: Vec<BeliefGrid> = match &parent.conditioned {
                    Some(posteriors) => posteriors
                        .iter()
                        .zip(&ctx.models)
                        .map(|(b, m)| b.predict(m, 1))
                        .collect(),
                    None => shared.to_vec(),
                };
                let mut posteriors = Vec::with_capacity(predicted.len());
                for (i, belief) in predicted.iter().enumerate() {
                    child.forecast[i].push(belief.expected_detection(&next, &ctx.sensor));
                    let field = belief.likelihood_field(&next, &ctx.sensor);
                    posteriors.push(belief.update_or_reset(&field, false));
                }
                child.conditioned = Some(posteriors);
            } else {
                for (i, belief) in shared.iter().enumerate() {
                    child.forecast[i].push(belief.expected_detection(&next, &ctx.sensor));
                }
            }
            child
        })
        .collect()
}

/// Scores every candidate in place; returns the number of evaluations.
pub fn score_candidates(
    candidates: &mut [CandidateTrajectory],
    mission: &Mission,
    past: &PastColumns,
) -> Result<usize, EvalError> {
    let scores: Vec<Result<f64, EvalError>> = candidates
        .par_iter()
        .map(|c| mission.score(&CandidateView::new(past, c)))
        .collect();
    for (c, s) in candidates.iter_mut().zip(scores) {
        c.score = s?;
    }
    Ok(candidates.len())
}

/// Best first: higher score, then lexicographically smaller control sequence.
fn rank(a: &CandidateTrajectory, b: &CandidateTrajectory) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.controls.cmp(&b.controls))
}

/// Keeps the `beam_width` best scored candidates, best first.
pub fn prune(mut candidates: Vec<CandidateTrajectory>, beam_width: usize) -> Vec<CandidateTrajectory> {
    candidates.sort_by(rank);
    candidates.truncate(beam_width);
    candidates
}

/// True when every candidate reaches the same first future state.
pub fn should_stop(candidates: &[CandidateTrajectory]) -> bool {
    match candidates.first().and_then(|c| c.states.first()) {
        None => true,
        Some(first) => candidates.iter().all(|c| c.states.first() == Some(first)),
    }
}

/// Per-step search statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    /// Depth the search stopped at.
    pub depth: usize,
    /// Candidate count after each expansion.
    pub candidates_per_depth: Vec<usize>,
    /// Total number of candidate scorings.
    pub evaluations: usize,
    pub peak_candidates: usize,
    pub best_score: f64,
    pub best_controls: Vec<usize>,
    /// Relaxed score of each top-level mission conjunct on the best candidate.
    pub clause_scores: Vec<f64>,
    /// Whether the beam agreed on a first control before the horizon.
    pub converged: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    /// Index into the control set.
    pub control_index: usize,
    /// Heading rate, radians per step.
    pub control: f64,
    pub diagnostics: PlanDiagnostics,
}

/// Chooses the next control for the executed `past` given current beliefs.
pub fn plan_step(
    past: &Run,
    beliefs: &[BeliefGrid],
    mission: &Mission,
    config: &PlannerConfig,
    ctx: &PlanningContext,
) -> Result<PlanOutcome, PlanError> {
    let started = Instant::now();
    if ctx.controls.is_empty() {
        return Err(PlanError::EmptyControlSet);
    }
    if config.beam_width == 0 {
        return Err(PlanError::ZeroBeamWidth);
    }
    let violations = mission.formula.check_synthesizable();
    if !violations.is_empty() {
        return Err(PlanError::NotSynthesizable(violations));
    }
    let targets = mission.targets.len();
    if beliefs.len() != targets || ctx.models.len() != targets {
        return Err(PlanError::TargetCountMismatch {
            expected: targets,
            found: beliefs.len().min(ctx.models.len()),
        });
    }
    let now = past.current_time();
    if now >= config.horizon {
        return Err(PlanError::HorizonReached {
            time: now,
            horizon: config.horizon,
        });
    }
    let max_depth = config.horizon - now;
    let origin = *past.past.last().expect("run has an initial state");
    let columns = PastColumns::new(past, &mission.targets);
    let mut forecaster = Forecaster::new(beliefs, &ctx.models);

    let mut beam = vec![CandidateTrajectory::root(targets)];
    let mut diagnostics = PlanDiagnostics {
        depth: 0,
        candidates_per_depth: Vec::new(),
        evaluations: 0,
        peak_candidates: 0,
        best_score: f64::NAN,
        best_controls: Vec::new(),
        clause_scores: Vec::new(),
        converged: false,
        elapsed: Duration::ZERO,
    };

    for depth in 1..=max_depth {
        let mut expanded = expand(&beam, &origin, ctx, &mut forecaster);
        diagnostics.candidates_per_depth.push(expanded.len());
        diagnostics.peak_candidates = diagnostics.peak_candidates.max(expanded.len());
        diagnostics.evaluations += score_candidates(&mut expanded, mission, &columns)?;
        beam = prune(expanded, config.beam_width);
        diagnostics.depth = depth;
        if should_stop(&beam) {
            diagnostics.converged = true;
            break;
        }
    }

    let best = &beam[0];
    diagnostics.best_score = best.score;
    diagnostics.best_controls = best.controls.clone();
    diagnostics.clause_scores = mission.clause_scores(&CandidateView::new(&columns, best))?;
    diagnostics.elapsed = started.elapsed();
    let control_index = best.controls[0];
    Ok(PlanOutcome {
        control_index,
        control: ctx.controls.get(control_index),
        diagnostics,
    })
}
