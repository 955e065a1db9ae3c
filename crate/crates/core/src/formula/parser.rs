//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! formula  := implies
//! implies  := or ( "->" implies )?
//! or       := and ( "|" and )*
//! and      := temporal ( "&" temporal )*
//! temporal := unary ( "U[" int "," int "]" unary )*
//! unary    := "!" unary | ("F" | "G") "[" int "," int "]" unary
//!           | "P" cmp prob "[" formula "]" | atom
//! atom     := "true" | ident | "(" formula ")"
//! ```
//!
//! Parsing is untyped; a second pass sorts every node into the event or
//! instance family and rewrites the derived operators.

use thiserror::Error;

use super::{Comparator, EventFormula, Formula, InstanceFormula, TimeBound};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("{line}:{column}: probability threshold {value} is outside [0, 1]")]
    ThresholdOutOfRange {
        line: usize,
        column: usize,
        value: f64,
    },
    #[error("{line}:{column}: time bound [{start},{end}] ends before it starts")]
    InvertedBound {
        line: usize,
        column: usize,
        start: u32,
        end: u32,
    },
    #[error("{line}:{column}: {message}")]
    Kind {
        line: usize,
        column: usize,
        message: String,
    },
}

impl ParseError {
    /// `(line, column)` of the error, both 1-based, when it has a location.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            ParseError::Syntax { line, column, .. }
            | ParseError::ThresholdOutOfRange { line, column, .. }
            | ParseError::InvertedBound { line, column, .. }
            | ParseError::Kind { line, column, .. } => Some((*line, *column)),
            ParseError::UnknownPredicate(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    True,
    Ident(String),
    Number { text: String, value: f64, integral: bool },
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eventually,
    Globally,
    Until,
    Prob,
    Cmp(Comparator),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::True => "`true`".into(),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Number { text, .. } => format!("number `{text}`"),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eventually => "`F`".into(),
            Tok::Globally => "`G`".into(),
            Tok::Until => "`U`".into(),
            Tok::Prob => "`P`".into(),
            Tok::Cmp(c) => format!("`{}`", c.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut column) = (1, 1);

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column };
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }

        let start = i;
        let tok = match c {
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '=' => Tok::Cmp(Comparator::Eq),
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Implies
            }
            '<' | '>' => {
                let or_equal = chars.get(i + 1) == Some(&'=');
                if or_equal {
                    i += 1;
                }
                Tok::Cmp(match (c, or_equal) {
                    ('<', false) => Comparator::Lt,
                    ('<', true) => Comparator::Le,
                    ('>', false) => Comparator::Gt,
                    _ => Comparator::Ge,
                })
            }
            '0'..='9' | '.' => {
                while i + 1 < chars.len() && (chars[i + 1].is_ascii_digit() || chars[i + 1] == '.')
                {
                    i += 1;
                }
                let literal: String = chars[start..=i].iter().collect();
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax(pos, format!("malformed number `{literal}`")))?;
                Tok::Number {
                    integral: !literal.contains('.'),
                    text: literal,
                    value,
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..=i].iter().collect();
                match word.as_str() {
                    "true" => Tok::True,
                    "F" => Tok::Eventually,
                    "G" => Tok::Globally,
                    "U" => Tok::Until,
                    "P" => Tok::Prob,
                    w if w.starts_with(|c: char| c.is_ascii_lowercase() || c == '_') => {
                        Tok::Ident(word)
                    }
                    _ => {
                        return Err(syntax(
                            pos,
                            format!("`{word}` is not an operator; predicate names are lowercase"),
                        ))
                    }
                }
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        };
        column += i - start + 1;
        i += 1;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, column }));
    Ok(out)
}

/// Untyped syntax tree, before event/instance classification.
#[derive(Debug)]
enum Node {
    True,
    Pred(String),
    Not(Box<Spanned>),
    And(Box<Spanned>, Box<Spanned>),
    Or(Box<Spanned>, Box<Spanned>),
    Implies(Box<Spanned>, Box<Spanned>),
    Until(TimeBound, Box<Spanned>, Box<Spanned>),
    Eventually(TimeBound, Box<Spanned>),
    Globally(TimeBound, Box<Spanned>),
    Prob(Comparator, f64, Box<Spanned>),
}

#[derive(Debug)]
struct Spanned {
    node: Node,
    pos: Pos,
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let tok = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        tok
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, ParseError> {
        let (tok, pos) = self.bump();
        if tok == want {
            Ok(pos)
        } else {
            Err(syntax(
                pos,
                format!("expected {}, found {}", want.describe(), tok.describe()),
            ))
        }
    }

    fn formula(&mut self) -> Result<Spanned, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.formula()?;
            let pos = lhs.pos;
            return Ok(Spanned {
                node: Node::Implies(Box::new(lhs), Box::new(rhs)),
                pos,
            });
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Spanned, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            let pos = lhs.pos;
            lhs = Spanned {
                node: Node::Or(Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Spanned, ParseError> {
        let mut lhs = self.temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.temporal()?;
            let pos = lhs.pos;
            lhs = Spanned {
                node: Node::And(Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<Spanned, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Until {
            self.bump();
            let bound = self.bound()?;
            let rhs = self.unary()?;
            let pos = lhs.pos;
            lhs = Spanned {
                node: Node::Until(bound, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Spanned, ParseError> {
        let pos = self.pos();
        let node = match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Node::Not(Box::new(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                let bound = self.bound()?;
                Node::Eventually(bound, Box::new(self.unary()?))
            }
            Tok::Globally => {
                self.bump();
                let bound = self.bound()?;
                Node::Globally(bound, Box::new(self.unary()?))
            }
            Tok::Prob => {
                self.bump();
                let (tok, cmp_pos) = self.bump();
                let Tok::Cmp(cmp) = tok else {
                    return Err(syntax(
                        cmp_pos,
                        format!("expected a comparator after `P`, found {}", tok.describe()),
                    ));
                };
                let (tok, num_pos) = self.bump();
                let Tok::Number { value, .. } = tok else {
                    return Err(syntax(
                        num_pos,
                        format!("expected a probability, found {}", tok.describe()),
                    ));
                };
                if !(0.0..=1.0).contains(&value) {
                    return Err(ParseError::ThresholdOutOfRange {
                        line: num_pos.line,
                        column: num_pos.column,
                        value,
                    });
                }
                self.expect(Tok::LBracket)?;
                let inner = self.formula()?;
                self.expect(Tok::RBracket)?;
                Node::Prob(cmp, value, Box::new(inner))
            }
            _ => return self.atom(),
        };
        Ok(Spanned { node, pos })
    }

    fn atom(&mut self) -> Result<Spanned, ParseError> {
        let (tok, pos) = self.bump();
        let node = match tok {
            Tok::True => Node::True,
            Tok::Ident(name) => Node::Pred(name),
            Tok::LParen => {
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                return Ok(inner);
            }
            other => {
                return Err(syntax(
                    pos,
                    format!("expected a formula, found {}", other.describe()),
                ))
            }
        };
        Ok(Spanned { node, pos })
    }

    fn bound(&mut self) -> Result<TimeBound, ParseError> {
        let open = self.expect(Tok::LBracket)?;
        let start = self.time()?;
        self.expect(Tok::Comma)?;
        let end = self.time()?;
        self.expect(Tok::RBracket)?;
        TimeBound::new(start, end).ok_or(ParseError::InvertedBound {
            line: open.line,
            column: open.column,
            start,
            end,
        })
    }

    fn time(&mut self) -> Result<u32, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Number {
                integral: true,
                value,
                text,
            } => {
                if value > u32::MAX as f64 {
                    Err(syntax(pos, format!("time bound `{text}` is too large")))
                } else {
                    Ok(value as u32)
                }
            }
            Tok::Number { text, .. } => Err(syntax(
                pos,
                format!("time bounds are whole steps, found `{text}`"),
            )),
            other => Err(syntax(
                pos,
                format!("expected a time bound, found {}", other.describe()),
            )),
        }
    }
}

fn kind_error(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Kind {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn negate(f: Formula) -> Formula {
    match f {
        Formula::Instance(i) => Formula::Instance(InstanceFormula::not(i)),
        Formula::Event(e) => Formula::Event(EventFormula::not(e)),
    }
}

fn conjoin(lhs: Formula, rhs: Formula) -> Formula {
    match (lhs, rhs) {
        (Formula::Instance(a), Formula::Instance(b)) => {
            Formula::Instance(InstanceFormula::and(a, b))
        }
        (Formula::Event(a), Formula::Event(b)) => Formula::Event(EventFormula::and(a, b)),
        (Formula::Event(e), Formula::Instance(i)) | (Formula::Instance(i), Formula::Event(e)) => {
            Formula::Event(EventFormula::and_instance(e, i))
        }
    }
}

fn lower(spanned: Spanned) -> Result<Formula, ParseError> {
    Ok(match spanned.node {
        Node::True => Formula::Instance(InstanceFormula::True),
        Node::Pred(name) => Formula::Event(EventFormula::Pred(name)),
        Node::Not(inner) => negate(lower(*inner)?),
        Node::And(a, b) => conjoin(lower(*a)?, lower(*b)?),
        // a | b == !(!a & !b)
        Node::Or(a, b) => negate(conjoin(negate(lower(*a)?), negate(lower(*b)?))),
        // a -> b == !(a & !b)
        Node::Implies(a, b) => negate(conjoin(lower(*a)?, negate(lower(*b)?))),
        Node::Until(bound, a, b) => {
            let (a_pos, b_pos) = (a.pos, b.pos);
            match (lower(*a)?, lower(*b)?) {
                (Formula::Instance(a), Formula::Instance(b)) => {
                    Formula::Instance(InstanceFormula::Until(bound, Box::new(a), Box::new(b)))
                }
                (Formula::Event(_), _) => {
                    return Err(kind_error(
                        a_pos,
                        "`U` takes instance formulas; wrap event formulas in `P~λ[...]`",
                    ))
                }
                (_, Formula::Event(_)) => {
                    return Err(kind_error(
                        b_pos,
                        "`U` takes instance formulas; wrap event formulas in `P~λ[...]`",
                    ))
                }
            }
        }
        Node::Eventually(bound, inner) => match lower(*inner)? {
            Formula::Event(e) => Formula::Event(EventFormula::Eventually(bound, Box::new(e))),
            // F phi == true U phi
            Formula::Instance(i) => Formula::Instance(InstanceFormula::Until(
                bound,
                Box::new(InstanceFormula::True),
                Box::new(i),
            )),
        },
        Node::Globally(bound, inner) => match lower(*inner)? {
            Formula::Event(e) => Formula::Event(EventFormula::Globally(bound, Box::new(e))),
            // G phi == !(true U !phi)
            Formula::Instance(i) => Formula::Instance(InstanceFormula::not(
                InstanceFormula::Until(
                    bound,
                    Box::new(InstanceFormula::True),
                    Box::new(InstanceFormula::not(i)),
                ),
            )),
        },
        Node::Prob(cmp, threshold, inner) => {
            let inner_pos = inner.pos;
            match lower(*inner)? {
                Formula::Event(e) => Formula::Instance(InstanceFormula::Prob {
                    cmp,
                    threshold,
                    event: Box::new(e),
                }),
                Formula::Instance(_) => {
                    return Err(kind_error(
                        inner_pos,
                        "`P` measures an event formula, found an instance formula",
                    ))
                }
            }
        }
    })
}

/// Parses a formula in the ASCII concrete syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        at: 0,
    };
    let tree = parser.formula()?;
    if *parser.peek() != Tok::Eof {
        let pos = parser.pos();
        return Err(syntax(
            pos,
            format!("unexpected {} after formula", parser.peek().describe()),
        ));
    }
    lower(tree)
}

/// Parses text that must denote an event formula.
pub fn parse_event(text: &str) -> Result<EventFormula, ParseError> {
    match parse(text)? {
        Formula::Event(e) => Ok(e),
        Formula::Instance(_) => Err(ParseError::Kind {
            line: 1,
            column: 1,
            message: "expected an event formula, found an instance formula".into(),
        }),
    }
}
