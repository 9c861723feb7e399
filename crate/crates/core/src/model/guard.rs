use std::fmt;

use super::thing::{Domain, ThingKind, Value};

/// Reserved name of the simulation clock inside guard expressions.
pub const CLOCK: &str = "tick";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl ClockOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ClockOp::Lt => "<",
            ClockOp::Le => "<=",
            ClockOp::Gt => ">",
            ClockOp::Ge => ">=",
        }
    }

    pub fn holds(self, tick: i64, bound: i64) -> bool {
        match self {
            ClockOp::Lt => tick < bound,
            ClockOp::Le => tick <= bound,
            ClockOp::Gt => tick > bound,
            ClockOp::Ge => tick >= bound,
        }
    }
}

/// Right-hand side of a clock comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClockBound {
    Literal(i64),
    /// An integer attribute of the token, or else a scenario deadline.
    Named(String),
}

/// Boolean condition attached to a trigger arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Equals { attribute: String, value: Value },
    Clock { op: ClockOp, bound: ClockBound },
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

impl Guard {
    pub fn equals(attribute: impl Into<String>, value: impl Into<Value>) -> Guard {
        Guard::Equals { attribute: attribute.into(), value: value.into() }
    }

    pub fn clock(op: ClockOp, bound: ClockBound) -> Guard {
        Guard::Clock { op, bound }
    }

    pub fn and(self, other: Guard) -> Guard {
        Guard::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Guard) -> Guard {
        Guard::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Guard {
        Guard::Not(Box::new(self))
    }

    /// Names of clock bounds that are not attributes of `kind`; these must be
    /// supplied as deadlines by the scenario.
    pub fn deadline_names<'g>(&'g self, kind: &ThingKind, out: &mut Vec<&'g str>) {
        match self {
            Guard::Equals { .. } | Guard::Clock { bound: ClockBound::Literal(_), .. } => {}
            Guard::Clock { bound: ClockBound::Named(name), .. } => {
                if kind.attribute(name).is_none() {
                    out.push(name);
                }
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.deadline_names(kind, out);
                b.deadline_names(kind, out);
            }
            Guard::Not(g) => g.deadline_names(kind, out),
        }
    }

    /// Type-checks the guard against the thing kind of the triggering token.
    pub fn check(&self, kind: &ThingKind) -> Vec<GuardIssue> {
        let mut issues = Vec::new();
        self.check_into(kind, &mut issues);
        issues
    }

    fn check_into(&self, kind: &ThingKind, issues: &mut Vec<GuardIssue>) {
        match self {
            Guard::Equals { attribute, value } => match kind.attribute(attribute) {
                None => issues.push(GuardIssue::UnknownAttribute(attribute.clone())),
                Some(attr) if !attr.domain.contains(value) => {
                    issues.push(GuardIssue::ValueOutsideDomain { attribute: attribute.clone(), value: value.clone() })
                }
                Some(_) => {}
            },
            Guard::Clock { bound: ClockBound::Named(name), .. } => {
                if let Some(attr) = kind.attribute(name) {
                    if attr.domain != Domain::Integer {
                        issues.push(GuardIssue::NonIntegerClockBound(name.clone()));
                    }
                }
            }
            Guard::Clock { .. } => {}
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.check_into(kind, issues);
                b.check_into(kind, issues);
            }
            Guard::Not(g) => g.check_into(kind, issues),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Guard::Or(..) => 0,
            Guard::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Symbol(s.to_string())
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

/// Canonical textual form, parseable by the DSL. Binary operators are
/// left-associative; a right operand of equal precedence gets parentheses.
impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Equals { attribute, value } => write!(f, "{attribute} = {value}"),
            Guard::Clock { op, bound } => match bound {
                ClockBound::Literal(n) => write!(f, "{CLOCK} {} {n}", op.as_str()),
                ClockBound::Named(name) => write!(f, "{CLOCK} {} {name}", op.as_str()),
            },
            Guard::And(a, b) => {
                a.fmt_operand(f, 1)?;
                f.write_str(" and ")?;
                b.fmt_operand(f, 2)
            }
            Guard::Or(a, b) => {
                a.fmt_operand(f, 0)?;
                f.write_str(" or ")?;
                b.fmt_operand(f, 1)
            }
            Guard::Not(g) => {
                f.write_str("not ")?;
                g.fmt_operand(f, 2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardIssue {
    UnknownAttribute(String),
    ValueOutsideDomain { attribute: String, value: Value },
    NonIntegerClockBound(String),
}

impl fmt::Display for GuardIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardIssue::UnknownAttribute(name) => write!(f, "unknown attribute `{name}`"),
            GuardIssue::ValueOutsideDomain { attribute, value } => {
                write!(f, "value `{value}` is not in the domain of `{attribute}`")
            }
            GuardIssue::NonIntegerClockBound(name) => {
                write!(f, "clock bound `{name}` is not an integer attribute")
            }
        }
    }
}
