//! Pretty-printing back to the concrete syntax. Output re-parses to an equal
//! tree: binary nodes are parenthesized whenever they appear as an operand.

use std::fmt;

use super::{EventFormula, Formula, InstanceFormula};

fn is_binary_event(f: &EventFormula) -> bool {
    matches!(f, EventFormula::And(..) | EventFormula::AndInstance(..))
}

fn is_binary_instance(f: &InstanceFormula) -> bool {
    matches!(f, InstanceFormula::And(..) | InstanceFormula::Until(..))
}

struct EventOperand<'a>(&'a EventFormula);
struct InstanceOperand<'a>(&'a InstanceFormula);

impl fmt::Display for EventOperand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_binary_event(self.0) {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for InstanceOperand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_binary_instance(self.0) {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for EventFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventFormula::Pred(name) => f.write_str(name),
            EventFormula::Not(inner) => write!(f, "!{}", EventOperand(inner)),
            EventFormula::And(a, b) => write!(f, "{} & {}", EventOperand(a), EventOperand(b)),
            EventFormula::AndInstance(a, b) => {
                write!(f, "{} & {}", EventOperand(a), InstanceOperand(b))
            }
            EventFormula::Eventually(bound, inner) => {
                write!(f, "F{bound} {}", EventOperand(inner))
            }
            EventFormula::Globally(bound, inner) => {
                write!(f, "G{bound} {}", EventOperand(inner))
            }
        }
    }
}

impl fmt::Display for InstanceFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceFormula::True => f.write_str("true"),
            InstanceFormula::Not(inner) => write!(f, "!{}", InstanceOperand(inner)),
            InstanceFormula::And(a, b) => {
                write!(f, "{} & {}", InstanceOperand(a), InstanceOperand(b))
            }
            InstanceFormula::Until(bound, a, b) => {
                write!(f, "{} U{bound} {}", InstanceOperand(a), InstanceOperand(b))
            }
            InstanceFormula::Prob {
                cmp,
                threshold,
                event,
            } => write!(f, "P{}{}[{}]", cmp.symbol(), threshold, event),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Instance(i) => i.fmt(f),
            Formula::Event(e) => e.fmt(f),
        }
    }
}
