//! Post-hoc evaluation of a formula over an executed run.

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::semantics::{EvalError, Mode, PredicateTable, Program};

use super::trace::ExecutionTrace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub time: usize,
    /// Relaxed probability (event formulas) or 0/1 satisfaction (instance
    /// formulas); `None` when every window at this time lies past the run.
    pub value: Option<f64>,
    /// True when the run covers the formula horizon from this time, so the
    /// value needed no truncation.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub formula: String,
    pub horizon: u64,
    pub last_time: usize,
    pub rows: Vec<MonitorRow>,
}

impl MonitorReport {
    /// The value at time 0, which is the mission's satisfaction.
    pub fn overall(&self) -> Option<f64> {
        self.rows.first().and_then(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value,exact\n");
        for r in &self.rows {
            let v = r.value.map_or_else(String::new, |v| v.to_string());
            out.push_str(&format!("{},{},{}\n", r.time, v, r.exact));
        }
        out
    }
}

/// Observation table of the whole executed run.
pub fn observed_table(trace: &ExecutionTrace) -> Result<PredicateTable, EvalError> {
    let last = trace.steps.len() - 1;
    PredicateTable::new(
        trace.header.targets.clone(),
        trace.observation_columns(),
        Some(last),
    )
}

/// Evaluates `formula` at every time of the executed run. Windows reaching
/// past the end are truncated, and such rows are flagged inexact.
pub fn monitor(trace: &ExecutionTrace, formula: &Formula) -> Result<MonitorReport, EvalError> {
    let table = observed_table(trace)?;
    let program = Program::compile(formula, &trace.header.targets)?;
    let last = table.len() - 1;
    let horizon = formula.horizon();
    let rows = program
        .score_all(&table, Mode::Relaxed)
        .into_iter()
        .enumerate()
        .map(|(t, r)| {
            let value = match r {
                Ok(v) => Some(v),
                Err(EvalError::EmptyWindow { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(MonitorRow {
                time: t,
                value,
                exact: t as u64 + horizon <= last as u64,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(MonitorReport {
        formula: formula.to_string(),
        horizon,
        last_time: last,
        rows,
    })
}

/// Recomputes the per-step monitored values the simulator records live:
/// the time-0 relaxed value on each prefix of the executed run.
pub fn replay_monitored(trace: &ExecutionTrace, formula: &Formula) -> Result<Vec<f64>, EvalError> {
    let table = observed_table(trace)?;
    let program = Program::compile(formula, &trace.header.targets)?;
    (1..=table.len())
        .map(|n| program.score(&table.prefix(n), 0, Mode::Relaxed))
        .collect()
}
