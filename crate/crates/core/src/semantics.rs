//! Probabilistic evaluation of event formulas and boolean evaluation of
//! instance formulas over a run.
//!
//! Predicate probabilities come from a [`PredicateSource`]: for times up to
//! the current one they are observation bits, for later times they are the
//! expected detection probabilities under the forecast beliefs. Temporal
//! windows are anchored at the evaluation time, so `F[a,b]` evaluated at `t`
//! ranges over absolute times `t+a ..= t+b`.
//!
//! Two modes exist. [`Mode::Exact`] requires every touched entry to exist.
//! [`Mode::Relaxed`] truncates each window's upper end at the last time of the
//! run so that partial rollouts can be ranked; on a run long enough to cover
//! the formula both modes agree bit-for-bit.

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{Comparator, EventFormula, Formula, InstanceFormula, TimeBound};
use crate::world::AgentState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no probability for predicate `{predicate}` at time {time}")]
    MissingEntry { predicate: String, time: usize },
    #[error("formula references unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("window {bound} at time {time} lies entirely past the end of the run (last time {last})")]
    EmptyWindow {
        bound: TimeBound,
        time: usize,
        last: usize,
    },
    #[error("predicate `{predicate}` has probability {value} at time {time}, outside [0, 1]")]
    InvalidProbability {
        predicate: String,
        time: usize,
        value: f64,
    },
    #[error("predicate `{predicate}` at observed time {time} must be 0 or 1, found {value}")]
    NonBinaryObservation {
        predicate: String,
        time: usize,
        value: f64,
    },
    #[error("predicate columns have different lengths")]
    RaggedColumns,
}

/// Supplies the per-time predicate probabilities a formula is evaluated on.
pub trait PredicateSource {
    fn predicate_index(&self, name: &str) -> Option<usize>;
    fn predicate_name(&self, index: usize) -> &str;
    fn predicate_count(&self) -> usize;
    fn value(&self, predicate: usize, time: usize) -> Option<f64>;
    /// Last time index of the run, inclusive.
    fn last_time(&self) -> usize;
}

/// Dense `(predicate, time) -> probability` table.
#[derive(Clone, Debug, PartialEq)]
pub struct PredicateTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    observed_through: Option<usize>,
}

impl PredicateTable {
    /// `columns[i][k]` is the probability of predicate `names[i]` at time `k`.
    /// Entries at times `<= observed_through` are observations and must be
    /// exactly 0 or 1.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        observed_through: Option<usize>,
    ) -> Result<Self, EvalError> {
        assert_eq!(names.len(), columns.len(), "one column per predicate");
        if columns.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(EvalError::RaggedColumns);
        }
        for (name, column) in names.iter().zip(&columns) {
            for (time, &value) in column.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(EvalError::InvalidProbability {
                        predicate: name.clone(),
                        time,
                        value,
                    });
                }
                if observed_through.is_some_and(|t| time <= t) && value != 0.0 && value != 1.0 {
                    return Err(EvalError::NonBinaryObservation {
                        predicate: name.clone(),
                        time,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            names,
            columns,
            observed_through,
        })
    }

    /// Single-predicate table with no observed prefix.
    pub fn single(name: &str, values: &[f64]) -> Result<Self, EvalError> {
        Self::new(vec![name.to_owned()], vec![values.to_vec()], None)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, predicate: usize) -> &[f64] {
        &self.columns[predicate]
    }

    /// Number of time steps covered.
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn observed_through(&self) -> Option<usize> {
        self.observed_through
    }

    /// Keeps only the first `len` time steps.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| c[..len.min(c.len())].to_vec())
                .collect(),
            observed_through: self
                .observed_through
                .map(|t| t.min(len.saturating_sub(1))),
        }
    }

    /// Drops the first `offset` time steps, so old time `t` becomes `t - offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| c[offset.min(c.len())..].to_vec())
                .collect(),
            observed_through: self.observed_through.and_then(|t| t.checked_sub(offset)),
        }
    }
}

impl PredicateSource for PredicateTable {
    fn predicate_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn predicate_name(&self, index: usize) -> &str {
        &self.names[index]
    }

    fn predicate_count(&self) -> usize {
        self.names.len()
    }

    fn value(&self, predicate: usize, time: usize) -> Option<f64> {
        self.columns.get(predicate)?.get(time).copied()
    }

    fn last_time(&self) -> usize {
        self.len().saturating_sub(1)
    }
}

/// An executed past, with one observation bit per target per step, followed
/// by hypothesized future states.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub past: Vec<AgentState>,
    /// `observations[k][i]` is the bit for target `i` at time `k`.
    pub observations: Vec<Vec<bool>>,
    pub future: Vec<AgentState>,
}

impl Run {
    pub fn new(initial: AgentState, first_observation: Vec<bool>) -> Self {
        Self {
            past: vec![initial],
            observations: vec![first_observation],
            future: Vec::new(),
        }
    }

    /// Index of the last executed state.
    pub fn current_time(&self) -> usize {
        self.past.len() - 1
    }

    pub fn len(&self) -> usize {
        self.past.len() + self.future.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last_time(&self) -> usize {
        self.len() - 1
    }

    pub fn state(&self, time: usize) -> Option<&AgentState> {
        if time < self.past.len() {
            self.past.get(time)
        } else {
            self.future.get(time - self.past.len())
        }
    }

    /// Builds the predicate table for this run. Past times use the observation
    /// bits; `forecast[i][j]` is the probability for target `i` at the `j`-th
    /// future state.
    pub fn predicate_table(
        &self,
        names: &[String],
        forecast: &[Vec<f64>],
    ) -> Result<PredicateTable, EvalError> {
        let columns = names
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let mut column: Vec<f64> = self
                    .observations
                    .iter()
                    .map(|z| if z[i] { 1.0 } else { 0.0 })
                    .collect();
                column.extend(forecast.get(i).map_or(&[][..], Vec::as_slice));
                column
            })
            .collect();
        PredicateTable::new(names.to_vec(), columns, Some(self.current_time()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Relaxed,
}

/// Index of a node in a compiled [`Program`].
pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Op {
    Pred(usize),
    EventNot(NodeId),
    EventAnd(NodeId, NodeId),
    Gate(NodeId, NodeId),
    Eventually(TimeBound, NodeId),
    Globally(TimeBound, NodeId),
    True,
    Not(NodeId),
    And(NodeId, NodeId),
    Until(TimeBound, NodeId, NodeId),
    Prob(Comparator, u64, NodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Root {
    Event(NodeId),
    Instance(NodeId),
}

/// A formula flattened into a node arena with predicates resolved to
/// indices. Structurally equal subtrees share one node, so the per-call memo
/// table is keyed by structure.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    root: Root,
    predicates: Vec<String>,
    interned: HashMap<Op, NodeId>,
}

impl Program {
    /// Compiles `formula` against a fixed predicate ordering.
    pub fn compile<S: AsRef<str>>(formula: &Formula, predicates: &[S]) -> Result<Self, EvalError> {
        let mut program = Program {
            ops: Vec::new(),
            root: Root::Event(0),
            predicates: predicates.iter().map(|s| s.as_ref().to_owned()).collect(),
            interned: HashMap::new(),
        };
        program.root = match formula {
            Formula::Event(e) => Root::Event(program.event(e)?),
            Formula::Instance(i) => Root::Instance(program.instance(i)?),
        };
        Ok(program)
    }

    /// Compiles against the predicate ordering of `source`.
    pub fn compile_for<S: PredicateSource>(formula: &Formula, source: &S) -> Result<Self, EvalError> {
        let names: Vec<String> = (0..source.predicate_count())
            .map(|k| source.predicate_name(k).to_owned())
            .collect();
        Self::compile(formula, &names)
    }

    fn intern(&mut self, op: Op) -> NodeId {
        if let Some(&id) = self.interned.get(&op) {
            return id;
        }
        let id = self.ops.len();
        self.ops.push(op.clone());
        self.interned.insert(op, id);
        id
    }

    fn event(&mut self, f: &EventFormula) -> Result<NodeId, EvalError> {
        let op = match f {
            EventFormula::Pred(name) => {
                let idx = self
                    .predicates
                    .iter()
                    .position(|p| p == name)
                    .ok_or_else(|| EvalError::UnknownPredicate(name.clone()))?;
                Op::Pred(idx)
            }
            EventFormula::Not(inner) => Op::EventNot(self.event(inner)?),
            EventFormula::And(a, b) => Op::EventAnd(self.event(a)?, self.event(b)?),
            EventFormula::AndInstance(a, b) => Op::Gate(self.event(a)?, self.instance(b)?),
            EventFormula::Eventually(bound, inner) => Op::Eventually(*bound, self.event(inner)?),
            EventFormula::Globally(bound, inner) => Op::Globally(*bound, self.event(inner)?),
        };
        Ok(self.intern(op))
    }

    fn instance(&mut self, f: &InstanceFormula) -> Result<NodeId, EvalError> {
        let op = match f {
            InstanceFormula::True => Op::True,
            InstanceFormula::Not(inner) => Op::Not(self.instance(inner)?),
            InstanceFormula::And(a, b) => Op::And(self.instance(a)?, self.instance(b)?),
            InstanceFormula::Until(bound, a, b) => {
                Op::Until(*bound, self.instance(a)?, self.instance(b)?)
            }
            InstanceFormula::Prob {
                cmp,
                threshold,
                event,
            } => Op::Prob(*cmp, threshold.to_bits(), self.event(event)?),
        };
        Ok(self.intern(op))
    }

    pub fn root(&self) -> Root {
        self.root
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    /// Number of distinct nodes after sharing.
    pub fn node_count(&self) -> usize {
        self.ops.len()
    }

    /// Probability of the root event formula at time `t`.
    pub fn prob<S: PredicateSource>(&self, source: &S, t: usize, mode: Mode) -> Result<f64, EvalError> {
        match self.root {
            Root::Event(id) => Evaluation::new(self, source, mode).prob(id, t),
            Root::Instance(_) => panic!("prob called on an instance formula"),
        }
    }

    /// Truth of the root instance formula at time `t`.
    pub fn satisfies<S: PredicateSource>(
        &self,
        source: &S,
        t: usize,
        mode: Mode,
    ) -> Result<bool, EvalError> {
        match self.root {
            Root::Instance(id) => Evaluation::new(self, source, mode).holds(id, t),
            Root::Event(_) => panic!("satisfies called on an event formula"),
        }
    }

    /// Probability for event roots, 0 or 1 for instance roots.
    pub fn score<S: PredicateSource>(&self, source: &S, t: usize, mode: Mode) -> Result<f64, EvalError> {
        let mut eval = Evaluation::new(self, source, mode);
        match self.root {
            Root::Event(id) => eval.prob(id, t),
            Root::Instance(id) => Ok(if eval.holds(id, t)? { 1.0 } else { 0.0 }),
        }
    }

    /// Scores the root at every time `0..=last`, sharing one memo table.
    pub fn score_all<S: PredicateSource>(&self, source: &S, mode: Mode) -> Vec<Result<f64, EvalError>> {
        let mut eval = Evaluation::new(self, source, mode);
        (0..=source.last_time())
            .map(|t| match self.root {
                Root::Event(id) => eval.prob(id, t),
                Root::Instance(id) => eval.holds(id, t).map(|b| if b { 1.0 } else { 0.0 }),
            })
            .collect()
    }
}

/// One evaluation call: a program, its input, and a private memo table.
struct Evaluation<'a, S> {
    program: &'a Program,
    source: &'a S,
    mode: Mode,
    width: usize,
    // NaN marks "not yet computed"; instance nodes store 0.0 / 1.0.
    memo: Vec<f64>,
}

impl<'a, S: PredicateSource> Evaluation<'a, S> {
    fn new(program: &'a Program, source: &'a S, mode: Mode) -> Self {
        let width = source.last_time() + 1;
        Self {
            program,
            source,
            mode,
            width,
            memo: vec![f64::NAN; program.ops.len() * width],
        }
    }

    fn last(&self) -> usize {
        self.width - 1
    }

    /// Absolute window `[t+start, t+end]`, truncated in relaxed mode.
    fn window(&self, bound: TimeBound, t: usize) -> Result<(usize, usize), EvalError> {
        let lo = t + bound.start as usize;
        let hi = t + bound.end as usize;
        match self.mode {
            // Entries past the end surface as MissingEntry when touched.
            Mode::Exact => Ok((lo, hi)),
            Mode::Relaxed => {
                if lo > self.last() {
                    return Err(EvalError::EmptyWindow {
                        bound,
                        time: t,
                        last: self.last(),
                    });
                }
                Ok((lo, hi.min(self.last())))
            }
        }
    }

    fn cached(&self, id: NodeId, t: usize) -> Option<f64> {
        if t >= self.width {
            return None;
        }
        let v = self.memo[id * self.width + t];
        (!v.is_nan()).then_some(v)
    }

    fn store(&mut self, id: NodeId, t: usize, v: f64) {
        if t < self.width {
            self.memo[id * self.width + t] = v;
        }
    }

    fn prob(&mut self, id: NodeId, t: usize) -> Result<f64, EvalError> {
        if let Some(v) = self.cached(id, t) {
            return Ok(v);
        }
        let v = match self.program.ops[id] {
            Op::Pred(p) => self.source.value(p, t).ok_or_else(|| EvalError::MissingEntry {
                predicate: self.program.predicates[p].clone(),
                time: t,
            })?,
            Op::EventNot(inner) => 1.0 - self.prob(inner, t)?,
            Op::EventAnd(a, b) => self.prob(a, t)? * self.prob(b, t)?,
            Op::Gate(event, gate) => {
                if self.holds(gate, t)? {
                    self.prob(event, t)?
                } else {
                    0.0
                }
            }
            Op::Globally(bound, inner) => {
                let (lo, hi) = self.window(bound, t)?;
                let mut acc = 1.0;
                for k in lo..=hi {
                    acc *= self.prob(inner, k)?;
                }
                acc
            }
            Op::Eventually(bound, inner) => {
                let (lo, hi) = self.window(bound, t)?;
                let mut miss = 1.0;
                for k in lo..=hi {
                    miss *= 1.0 - self.prob(inner, k)?;
                }
                1.0 - miss
            }
            _ => unreachable!("instance node evaluated as event"),
        };
        self.store(id, t, v);
        Ok(v)
    }

    fn holds(&mut self, id: NodeId, t: usize) -> Result<bool, EvalError> {
        if let Some(v) = self.cached(id, t) {
            return Ok(v == 1.0);
        }
        let v = match self.program.ops[id] {
            Op::True => true,
            Op::Not(inner) => !self.holds(inner, t)?,
            Op::And(a, b) => self.holds(a, t)? && self.holds(b, t)?,
            Op::Until(bound, lhs, rhs) => {
                let (lo, hi) = self.window(bound, t)?;
                let mut found = false;
                for k in lo..=hi {
                    if self.holds(rhs, k)? {
                        found = true;
                        break;
                    }
                    // The left operand only matters before the last index.
                    if k == hi || !self.holds(lhs, k)? {
                        break;
                    }
                }
                found
            }
            Op::Prob(cmp, bits, event) => cmp.holds(self.prob(event, t)?, f64::from_bits(bits)),
            _ => unreachable!("event node evaluated as instance"),
        };
        self.store(id, t, if v { 1.0 } else { 0.0 });
        Ok(v)
    }
}

fn event_program<S: PredicateSource>(f: &EventFormula, source: &S) -> Result<Program, EvalError> {
    Program::compile_for(&Formula::Event(f.clone()), source)
}

fn instance_program<S: PredicateSource>(
    f: &InstanceFormula,
    source: &S,
) -> Result<Program, EvalError> {
    Program::compile_for(&Formula::Instance(f.clone()), source)
}

/// Satisfaction probability of `f` at time `t`; every touched entry must exist.
pub fn prob<S: PredicateSource>(f: &EventFormula, t: usize, source: &S) -> Result<f64, EvalError> {
    event_program(f, source)?.prob(source, t, Mode::Exact)
}

/// Like [`prob`], with every window truncated at the end of the run.
pub fn prob_relaxed<S: PredicateSource>(
    f: &EventFormula,
    t: usize,
    source: &S,
) -> Result<f64, EvalError> {
    event_program(f, source)?.prob(source, t, Mode::Relaxed)
}

pub fn satisfies<S: PredicateSource>(
    f: &InstanceFormula,
    t: usize,
    source: &S,
) -> Result<bool, EvalError> {
    instance_program(f, source)?.satisfies(source, t, Mode::Exact)
}

pub fn satisfies_relaxed<S: PredicateSource>(
    f: &InstanceFormula,
    t: usize,
    source: &S,
) -> Result<bool, EvalError> {
    instance_program(f, source)?.satisfies(source, t, Mode::Relaxed)
}

/// Probability of `gate -> consequent` at `t`: the consequent's probability
/// when the gate holds, 1 otherwise.
pub fn implication_prob<S: PredicateSource>(
    gate: &InstanceFormula,
    consequent: &EventFormula,
    t: usize,
    source: &S,
) -> Result<f64, EvalError> {
    let f = EventFormula::not(EventFormula::and_instance(
        EventFormula::not(consequent.clone()),
        gate.clone(),
    ));
    prob(&f, t, source)
}
