//! Closed-loop mission simulation: scenario files, the receding-horizon loop,
//! execution traces, post-hoc monitoring and plots.

pub mod monitor;
pub mod plot;
pub mod scenario;
pub mod trace;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::BeliefGrid;
use crate::formula::Formula;
use crate::planner::{plan_step, PlanError};
use crate::semantics::{EvalError, Mode, Run};
use crate::world::{sample_observation, step, AgentState, GroundTruthTarget, SensorModel};

pub use monitor::{monitor, replay_monitored, MonitorReport, MonitorRow};
pub use scenario::{Prepared, Scenario, ScenarioError};
pub use trace::{ExecutionTrace, PlanRecord, StepRecord, TraceError, TraceHeader, TraceSummary};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Stream ids for a target's motion and observation generators.
fn streams(target: usize) -> (u64, u64) {
    (2 * target as u64, 2 * target as u64 + 1)
}

fn observe(
    agent: &AgentState,
    truths: &[GroundTruthTarget],
    sensor: &SensorModel,
    rngs: &mut [ChaCha8Rng],
    beliefs: &mut [BeliefGrid],
) -> Vec<bool> {
    truths
        .iter()
        .zip(rngs.iter_mut())
        .zip(beliefs.iter_mut())
        .map(|((truth, rng), belief)| {
            let z = sample_observation(agent, truth, sensor, rng);
            let field = belief.likelihood_field(agent, sensor);
            *belief = belief.update_or_reset(&field, z);
            z
        })
        .collect()
}

/// Runs the receding-horizon loop: at each step plan, fly the first control,
/// move the true targets, predict and update each belief with the new
/// observation, and record the step.
///
/// Ends at the horizon, or earlier when `stop_when_satisfied` is set and the
/// executed run already satisfies an event mission with probability 1.
pub fn run_mission(scenario: &Scenario) -> Result<ExecutionTrace, SimError> {
    let prepared = scenario.prepare()?;
    let Prepared {
        formula,
        mission,
        config,
        context: ctx,
        area,
        geometry,
        initial,
        priors,
        target_ids,
    } = prepared;

    let mut truths: Vec<GroundTruthTarget> = scenario
        .targets
        .iter()
        .zip(&ctx.models)
        .enumerate()
        .map(|(i, (t, m))| GroundTruthTarget::new(t.position, *m, scenario.seed, streams(i).0))
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..truths.len())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(streams(i).1);
            rng
        })
        .collect();

    let header = TraceHeader {
        version: trace::TRACE_VERSION,
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        formula: formula.to_string(),
        targets: target_ids.clone(),
        horizon: config.horizon,
        beam_width: config.beam_width,
        controls: ctx.controls.as_slice().to_vec(),
        airspeed: ctx.airspeed,
        sensor: ctx.sensor,
        area,
        grid: geometry,
    };

    let mut agent = initial;
    let mut beliefs = priors;
    let first = observe(&agent, &truths, &ctx.sensor, &mut rngs, &mut beliefs);
    let mut run = Run::new(agent, first);
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut timings = Vec::new();
    let is_event = matches!(formula, Formula::Event(_));
    let ended_early;

    loop {
        let t = run.current_time();
        let table = run.predicate_table(&target_ids, &[])?;
        let monitored = mission.program().score(&table, 0, Mode::Relaxed)?;
        let satisfied = is_event && scenario.stop_when_satisfied && monitored == 1.0;
        let last = t >= config.horizon || satisfied;
        let snapshot = t == 0
            || last
            || (scenario.snapshot_every > 0 && t.is_multiple_of(scenario.snapshot_every));
        let mut record = StepRecord {
            time: t,
            agent,
            truth: truths.iter().map(|g| g.position).collect(),
            observations: run.observations[t].clone(),
            monitored,
            beliefs: snapshot.then(|| beliefs.clone()),
            plan: None,
        };
        if last {
            ended_early = t < config.horizon;
            steps.push(record);
            break;
        }

        let outcome = plan_step(&run, &beliefs, &mission, &config, &ctx)?;
        log::debug!(
            "t={t} control={} depth={} best={:.4}",
            outcome.control_index,
            outcome.diagnostics.depth,
            outcome.diagnostics.best_score
        );
        timings.push(outcome.diagnostics.elapsed);
        agent = step(&agent, outcome.control, ctx.airspeed);
        record.plan = Some(PlanRecord {
            control_index: outcome.control_index,
            control: outcome.control,
            diagnostics: outcome.diagnostics,
        });
        steps.push(record);

        for truth in &mut truths {
            truth.step_truth(&area);
        }
        for (belief, model) in beliefs.iter_mut().zip(&ctx.models) {
            *belief = belief.predict(model, 1);
        }
        let z = observe(&agent, &truths, &ctx.sensor, &mut rngs, &mut beliefs);
        run.past.push(agent);
        run.observations.push(z);
    }

    let summary = summarize(&steps, &target_ids, &config, ctx.controls.len(), ended_early);
    Ok(ExecutionTrace {
        header,
        steps,
        summary,
        timings,
    })
}

fn summarize(
    steps: &[StepRecord],
    targets: &[String],
    config: &crate::planner::PlannerConfig,
    controls: usize,
    ended_early: bool,
) -> TraceSummary {
    let first_detection = (0..targets.len())
        .map(|i| steps.iter().find(|s| s.observations[i]).map(|s| s.time))
        .collect();
    let detections = (0..targets.len())
        .map(|i| steps.iter().filter(|s| s.observations[i]).count())
        .collect();
    let mut peak = 0;
    let mut total = 0;
    let mut within = true;
    for s in steps {
        if let Some(plan) = &s.plan {
            let d = &plan.diagnostics;
            peak = peak.max(d.peak_candidates);
            total += d.evaluations;
            let width = config.beam_width * controls;
            within &= d.peak_candidates <= width
                && d.evaluations <= width * (config.horizon - s.time);
        }
    }
    let last = steps.last().expect("trace has at least one step");
    TraceSummary {
        steps: steps.len(),
        final_time: last.time,
        first_detection,
        detections,
        final_monitored: last.monitored,
        ended_early,
        peak_candidates: peak,
        total_evaluations: total,
        within_complexity_bound: within,
    }
}

/// Files written by [`run`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: PathBuf,
    pub timings: PathBuf,
}

/// Runs the mission and writes `<name>.trace.ndjson` and
/// `<name>.timings.csv` into `out_dir`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<(ExecutionTrace, RunOutput), SimError> {
    let trace = run_mission(scenario)?;
    std::fs::create_dir_all(out_dir)?;
    let stem = file_stem(&scenario.name);
    let output = RunOutput {
        trace: out_dir.join(format!("{stem}.trace.ndjson")),
        timings: out_dir.join(format!("{stem}.timings.csv")),
    };
    trace.save(&output.trace)?;
    std::fs::write(&output.timings, trace.timings_csv())?;
    Ok((trace, output))
}

fn file_stem(name: &str) -> String {
    let stem: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if stem.is_empty() {
        "mission".into()
    } else {
        stem
    }
}
