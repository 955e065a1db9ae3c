//! Abstract syntax for probabilistic signal temporal logic.
//!
//! Formulas come in two families. Event formulas are built from target
//! predicates and the `F`/`G` window operators and evaluate to a probability.
//! Instance formulas are boolean: constants, `Until`, and probability
//! thresholds over event formulas. The two families meet in the mixed
//! conjunction `event & instance`, which gates an event probability on an
//! instance formula holding.
//!
//! Derived operators (`|`, `->`, and `F`/`G` applied to instance formulas)
//! are rewritten by the parser, so the trees here only contain core nodes.

mod parser;
mod print;

use std::collections::BTreeSet;
use std::fmt;

pub use parser::{parse, parse_event, ParseError};

/// Closed window `[start, end]` of discrete time steps, relative to the
/// time a formula is evaluated at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeBound {
    pub start: u32,
    pub end: u32,
}

impl TimeBound {
    /// Returns `None` when `end < start`.
    pub fn new(start: u32, end: u32) -> Option<Self> {
        (end >= start).then_some(Self { start, end })
    }
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Le,
    Ge,
    Gt,
    Eq,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
        }
    }
}

/// Formula scored probabilistically over a run and the target beliefs.
#[derive(Clone, Debug, PartialEq)]
pub enum EventFormula {
    /// "target `name` is detected"
    Pred(String),
    Not(Box<EventFormula>),
    And(Box<EventFormula>, Box<EventFormula>),
    /// Event probability gated by an instance formula holding at the same time.
    AndInstance(Box<EventFormula>, Box<InstanceFormula>),
    Eventually(TimeBound, Box<EventFormula>),
    Globally(TimeBound, Box<EventFormula>),
}

/// Formula with a boolean truth value at each time of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceFormula {
    True,
    Not(Box<InstanceFormula>),
    And(Box<InstanceFormula>, Box<InstanceFormula>),
    Until(TimeBound, Box<InstanceFormula>, Box<InstanceFormula>),
    Prob {
        cmp: Comparator,
        threshold: f64,
        event: Box<EventFormula>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Instance(InstanceFormula),
    Event(EventFormula),
}

/// A temporal operator whose window does not start at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub operator: &'static str,
    pub bound: TimeBound,
    /// The offending subformula, pretty-printed.
    pub subformula: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} window {} does not start at 0 in `{}`",
            self.operator, self.bound, self.subformula
        )
    }
}

// hrz for the Until rule: t2 + max(hrz(lhs) - 1, hrz(rhs)).
fn until_horizon(bound: TimeBound, lhs: u64, rhs: u64) -> u64 {
    let inner = (lhs as i64 - 1).max(rhs as i64);
    bound.end as u64 + inner.max(0) as u64
}

impl EventFormula {
    pub fn pred(name: impl Into<String>) -> Self {
        EventFormula::Pred(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: EventFormula) -> Self {
        EventFormula::Not(Box::new(inner))
    }

    pub fn and(lhs: EventFormula, rhs: EventFormula) -> Self {
        EventFormula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn and_instance(event: EventFormula, gate: InstanceFormula) -> Self {
        EventFormula::AndInstance(Box::new(event), Box::new(gate))
    }

    pub fn eventually(start: u32, end: u32, inner: EventFormula) -> Self {
        let bound = TimeBound::new(start, end).expect("inverted time bound");
        EventFormula::Eventually(bound, Box::new(inner))
    }

    pub fn globally(start: u32, end: u32, inner: EventFormula) -> Self {
        let bound = TimeBound::new(start, end).expect("inverted time bound");
        EventFormula::Globally(bound, Box::new(inner))
    }

    /// Minimum run length (in steps past the evaluation time) needed to
    /// evaluate this formula without truncating any window.
    pub fn horizon(&self) -> u64 {
        match self {
            EventFormula::Pred(_) => 0,
            EventFormula::Not(inner) => inner.horizon(),
            EventFormula::And(a, b) => a.horizon().max(b.horizon()),
            EventFormula::AndInstance(a, b) => a.horizon().max(b.horizon()),
            // F = true U psi, and hrz(true) = 0; G = !F!psi.
            EventFormula::Eventually(bound, inner) | EventFormula::Globally(bound, inner) => {
                until_horizon(*bound, 0, inner.horizon())
            }
        }
    }

    fn collect_predicates<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            EventFormula::Pred(name) => {
                out.insert(name);
            }
            EventFormula::Not(inner)
            | EventFormula::Eventually(_, inner)
            | EventFormula::Globally(_, inner) => inner.collect_predicates(out),
            EventFormula::And(a, b) => {
                a.collect_predicates(out);
                b.collect_predicates(out);
            }
            EventFormula::AndInstance(a, b) => {
                a.collect_predicates(out);
                b.collect_predicates(out);
            }
        }
    }

    fn collect_violations(&self, out: &mut Vec<Violation>) {
        match self {
            EventFormula::Pred(_) => {}
            EventFormula::Not(inner) => inner.collect_violations(out),
            EventFormula::And(a, b) => {
                a.collect_violations(out);
                b.collect_violations(out);
            }
            EventFormula::AndInstance(a, b) => {
                a.collect_violations(out);
                b.collect_violations(out);
            }
            EventFormula::Eventually(bound, inner) | EventFormula::Globally(bound, inner) => {
                if bound.start != 0 {
                    let operator = if matches!(self, EventFormula::Eventually(..)) {
                        "F"
                    } else {
                        "G"
                    };
                    out.push(Violation {
                        operator,
                        bound: *bound,
                        subformula: self.to_string(),
                    });
                }
                inner.collect_violations(out);
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            EventFormula::Pred(_) => 1,
            EventFormula::Not(inner)
            | EventFormula::Eventually(_, inner)
            | EventFormula::Globally(_, inner) => 1 + inner.size(),
            EventFormula::And(a, b) => 1 + a.size() + b.size(),
            EventFormula::AndInstance(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl InstanceFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: InstanceFormula) -> Self {
        InstanceFormula::Not(Box::new(inner))
    }

    pub fn and(lhs: InstanceFormula, rhs: InstanceFormula) -> Self {
        InstanceFormula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn until(start: u32, end: u32, lhs: InstanceFormula, rhs: InstanceFormula) -> Self {
        let bound = TimeBound::new(start, end).expect("inverted time bound");
        InstanceFormula::Until(bound, Box::new(lhs), Box::new(rhs))
    }

    pub fn prob(cmp: Comparator, threshold: f64, event: EventFormula) -> Self {
        InstanceFormula::Prob {
            cmp,
            threshold,
            event: Box::new(event),
        }
    }

    pub fn horizon(&self) -> u64 {
        match self {
            InstanceFormula::True => 0,
            InstanceFormula::Not(inner) => inner.horizon(),
            InstanceFormula::And(a, b) => a.horizon().max(b.horizon()),
            InstanceFormula::Until(bound, a, b) => until_horizon(*bound, a.horizon(), b.horizon()),
            InstanceFormula::Prob { event, .. } => event.horizon(),
        }
    }

    fn collect_predicates<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            InstanceFormula::True => {}
            InstanceFormula::Not(inner) => inner.collect_predicates(out),
            InstanceFormula::And(a, b) | InstanceFormula::Until(_, a, b) => {
                a.collect_predicates(out);
                b.collect_predicates(out);
            }
            InstanceFormula::Prob { event, .. } => event.collect_predicates(out),
        }
    }

    fn collect_violations(&self, out: &mut Vec<Violation>) {
        match self {
            InstanceFormula::True => {}
            InstanceFormula::Not(inner) => inner.collect_violations(out),
            InstanceFormula::And(a, b) => {
                a.collect_violations(out);
                b.collect_violations(out);
            }
            InstanceFormula::Until(bound, a, b) => {
                if bound.start != 0 {
                    out.push(Violation {
                        operator: "U",
                        bound: *bound,
                        subformula: self.to_string(),
                    });
                }
                a.collect_violations(out);
                b.collect_violations(out);
            }
            InstanceFormula::Prob { event, .. } => event.collect_violations(out),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            InstanceFormula::True => 1,
            InstanceFormula::Not(inner) => 1 + inner.size(),
            InstanceFormula::And(a, b) | InstanceFormula::Until(_, a, b) => {
                1 + a.size() + b.size()
            }
            InstanceFormula::Prob { event, .. } => 1 + event.size(),
        }
    }
}

impl Formula {
    pub fn horizon(&self) -> u64 {
        match self {
            Formula::Instance(f) => f.horizon(),
            Formula::Event(f) => f.horizon(),
        }
    }

    /// Predicate names referenced anywhere in the formula, sorted.
    pub fn predicates(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        match self {
            Formula::Instance(f) => f.collect_predicates(&mut set),
            Formula::Event(f) => f.collect_predicates(&mut set),
        }
        set.into_iter().map(str::to_owned).collect()
    }

    /// Fails with [`ParseError::UnknownPredicate`] on the first predicate
    /// (in sorted order) that is not in `known`.
    pub fn check_predicates<S: AsRef<str>>(&self, known: &[S]) -> Result<(), ParseError> {
        for name in self.predicates() {
            if !known.iter().any(|k| k.as_ref() == name) {
                return Err(ParseError::UnknownPredicate(name));
            }
        }
        Ok(())
    }

    /// Every temporal operator whose window does not start at zero. The beam
    /// search planner only accepts formulas for which this is empty.
    pub fn check_synthesizable(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            Formula::Instance(f) => f.collect_violations(&mut out),
            Formula::Event(f) => f.collect_violations(&mut out),
        }
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Instance(f) => f.size(),
            Formula::Event(f) => f.size(),
        }
    }

    pub fn as_event(&self) -> Option<&EventFormula> {
        match self {
            Formula::Event(f) => Some(f),
            Formula::Instance(_) => None,
        }
    }
}

impl From<EventFormula> for Formula {
    fn from(f: EventFormula) -> Self {
        Formula::Event(f)
    }
}

impl From<InstanceFormula> for Formula {
    fn from(f: InstanceFormula) -> Self {
        Formula::Instance(f)
    }
}
