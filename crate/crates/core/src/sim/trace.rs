//! Execution traces, stored as newline-delimited JSON: one header line, one
//! line per time step, one summary line.

use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefGrid, GridGeometry};
use crate::planner::PlanDiagnostics;
use crate::world::{AgentState, Area, SensorModel};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("malformed trace: {0}")]
    Structure(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    /// Mission formula in canonical concrete syntax.
    pub formula: String,
    pub targets: Vec<String>,
    pub horizon: usize,
    pub beam_width: usize,
    /// Heading rates in radians per step.
    pub controls: Vec<f64>,
    pub airspeed: f64,
    pub sensor: SensorModel,
    pub area: Area,
    pub grid: GridGeometry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub control_index: usize,
    pub control: f64,
    pub diagnostics: PlanDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: usize,
    pub agent: AgentState,
    pub truth: Vec<[f64; 2]>,
    pub observations: Vec<bool>,
    /// Relaxed mission value on the executed run up to this step.
    pub monitored: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<Vec<BeliefGrid>>,
    /// Planning decision taken at this step; absent on the final step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub steps: usize,
    pub final_time: usize,
    /// First time each target was detected.
    pub first_detection: Vec<Option<usize>>,
    pub detections: Vec<usize>,
    pub final_monitored: f64,
    pub ended_early: bool,
    pub peak_candidates: usize,
    pub total_evaluations: usize,
    /// Every step kept at most `N * |U|` candidates and scored at most
    /// `N * |U| * (H - t)` of them.
    pub within_complexity_bound: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(TraceHeader),
    Step(StepRecord),
    Summary(TraceSummary),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub summary: TraceSummary,
    /// Wall-clock planning time per planned step. Not part of the NDJSON
    /// form so that traces of the same seed are byte-identical.
    pub timings: Vec<Duration>,
}

impl ExecutionTrace {
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        let mut emit = |line: &Line| -> Result<(), TraceError> {
            serde_json::to_writer(&mut out, line).map_err(|source| TraceError::Json {
                line: 0,
                source,
            })?;
            out.write_all(b"\n")?;
            Ok(())
        };
        emit(&Line::Header(self.header.clone()))?;
        for step in &self.steps {
            emit(&Line::Step(step.clone()))?;
        }
        emit(&Line::Summary(self.summary.clone()))
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_ndjson<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|source| TraceError::Json {
                line: i + 1,
                source,
            })?;
            match parsed {
                Line::Header(h) if header.is_none() && steps.is_empty() => header = Some(h),
                Line::Step(s) if header.is_some() && summary.is_none() => steps.push(s),
                Line::Summary(s) if header.is_some() && summary.is_none() => summary = Some(s),
                _ => {
                    return Err(TraceError::Structure(format!(
                        "unexpected record on line {}",
                        i + 1
                    )))
                }
            }
        }
        let header = header.ok_or_else(|| TraceError::Structure("missing header".into()))?;
        if header.version != TRACE_VERSION {
            return Err(TraceError::Structure(format!(
                "unsupported trace version {}",
                header.version
            )));
        }
        let summary = summary.ok_or_else(|| TraceError::Structure("missing summary".into()))?;
        if steps.is_empty() {
            return Err(TraceError::Structure("trace has no steps".into()));
        }
        for (t, s) in steps.iter().enumerate() {
            if s.time != t || s.observations.len() != header.targets.len() {
                return Err(TraceError::Structure(format!("inconsistent step {t}")));
            }
        }
        Ok(Self {
            header,
            steps,
            summary,
            timings: Vec::new(),
        })
    }

    pub fn from_ndjson(text: &str) -> Result<Self, TraceError> {
        Self::read_ndjson(text.as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ndjson(file)
    }

    pub fn load(path: &Path) -> Result<Self, TraceError> {
        Self::read_ndjson(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Observation bits per target, indexed `[target][time]`.
    pub fn observation_columns(&self) -> Vec<Vec<f64>> {
        (0..self.header.targets.len())
            .map(|i| {
                self.steps
                    .iter()
                    .map(|s| if s.observations[i] { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Planning time per step as CSV, for the timing sidecar file.
    pub fn timings_csv(&self) -> String {
        let mut out = String::from("time,plan_seconds\n");
        for (t, d) in self.timings.iter().enumerate() {
            out.push_str(&format!("{t},{:.6}\n", d.as_secs_f64()));
        }
        out
    }
}
