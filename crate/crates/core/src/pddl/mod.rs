//! Lifted representation of the numeric PDDL subset: STRIPS with typing,
//! negative preconditions and numeric fluents.
//!
//! [`parse_domain`] and [`parse_problem`] return fully checked ASTs; the
//! `Display` impls print them back as PDDL that re-parses to the same AST.

mod parser;
mod print;

use std::fmt;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};

pub use parser::{parse_domain, parse_problem};

use crate::sexpr::{Span, SyntaxError};

/// Root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";

/// Zero-arity function whose increase effects define action costs.
pub const TOTAL_COST: &str = "total-cost";

/// Requirement flags understood by the parser. Others produce a warning.
pub const KNOWN_REQUIREMENTS: &[&str] =
    &[":strips", ":typing", ":numeric-fluents", ":fluents", ":negative-preconditions", ":action-costs"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

/// Predicate or function signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl SymbolDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

pub type PredicateDecl = SymbolDecl;
pub type FunctionDecl = SymbolDecl;

/// Argument of a lifted atom: a schema parameter (stored without `?`) or an object name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Object(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub symbol: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArithExpr {
    Const(Rational64),
    Fluent(Atom),
    Binary(BinOp, Box<ArithExpr>, Box<ArithExpr>),
    Neg(Box<ArithExpr>),
}

impl ArithExpr {
    pub fn constant(value: i64) -> Self {
        ArithExpr::Const(Rational64::from_integer(value))
    }

    /// Every fluent reference in the expression, in left-to-right order.
    pub fn fluents(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_fluents(&mut out);
        out
    }

    fn collect_fluents<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            ArithExpr::Const(_) => {}
            ArithExpr::Fluent(a) => out.push(a),
            ArithExpr::Binary(_, l, r) => {
                l.collect_fluents(out);
                r.collect_fluents(out);
            }
            ArithExpr::Neg(e) => e.collect_fluents(out),
        }
    }

    /// Value of a fluent-free expression, `None` when a fluent occurs or on division by zero.
    pub fn constant_value(&self) -> Option<Rational64> {
        match self {
            ArithExpr::Const(c) => Some(*c),
            ArithExpr::Fluent(_) => None,
            ArithExpr::Neg(e) => e.constant_value().map(|v| -v),
            ArithExpr::Binary(op, l, r) => {
                let (l, r) = (l.constant_value()?, r.constant_value()?);
                match op {
                    BinOp::Add => l.checked_add(&r),
                    BinOp::Sub => l.checked_sub(&r),
                    BinOp::Mul => l.checked_mul(&r),
                    BinOp::Div if *r.numer() == 0 => None,
                    BinOp::Div => l.checked_div(&r),
                }
            }
        }
    }
}

/// Normalized numeric comparators; `<=` and `<` are rewritten with swapped operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparator {
    Ge,
    Gt,
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
        }
    }

    pub fn holds(self, value: f64) -> bool {
        match self {
            Comparator::Ge => value >= 0.0,
            Comparator::Gt => value > 0.0,
            Comparator::Eq => value == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiftedCondition {
    Literal {
        atom: Atom,
        positive: bool,
    },
    /// `lhs cmp rhs`, i.e. `(lhs - rhs) cmp 0`.
    Numeric {
        cmp: Comparator,
        lhs: ArithExpr,
        rhs: ArithExpr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericOp {
    Assign,
    Increase,
    Decrease,
}

impl NumericOp {
    pub fn keyword(self) -> &'static str {
        match self {
            NumericOp::Assign => "assign",
            NumericOp::Increase => "increase",
            NumericOp::Decrease => "decrease",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiftedEffect {
    Add(Atom),
    Delete(Atom),
    Numeric { op: NumericOp, fluent: Atom, expr: ArithExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Vec<LiftedCondition>,
    pub effects: Vec<LiftedEffect>,
    /// Defaults to the constant 1 when the schema has no `total-cost` increase.
    pub cost: ArithExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDomain {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)` pairs; `object` itself is implicit.
    pub types: Vec<(String, String)>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<FunctionDecl>,
    pub schemata: Vec<ActionSchema>,
}

impl LiftedDomain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|p| p.name == name)
    }

    pub fn parent_of(&self, ty: &str) -> Option<&str> {
        self.types.iter().find(|(t, _)| t == ty).map(|(_, p)| p.as_str())
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.iter().any(|(t, _)| t == ty)
    }

    /// Reflexive-transitive subtype test. Type cycles are rejected at parse time.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.parent_of(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    pub fn unknown_requirements(&self) -> impl Iterator<Item = &str> {
        self.requirements.iter().map(String::as_str).filter(|r| !KNOWN_REQUIREMENTS.contains(r))
    }
}

/// Variable-free atom as written in `:init`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAtom {
    pub symbol: String,
    pub args: Vec<String>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.symbol)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init_atoms: Vec<GroundAtom>,
    pub init_numeric: Vec<(GroundAtom, Rational64)>,
    /// Conditions over objects only; every term is [`Term::Object`].
    pub goal: Vec<LiftedCondition>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown variable `?{0}`")]
    UnknownVariable(String),
    #[error("`{symbol}` expects {expected} argument(s), found {found}")]
    ArityMismatch { symbol: String, expected: usize, found: usize },
    #[error("object `{object}` of type `{found}` where `{expected}` is required")]
    TypeMismatch { object: String, expected: String, found: String },
    #[error("fluent `{0}` is used in the goal but has no initial value")]
    UndefinedGoalFluent(String),
    #[error("fluent `{0}` receives more than one numeric effect")]
    ConflictingEffects(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("cyclic type hierarchy at `{0}`")]
    CyclicType(String),
    #[error("invalid numeric literal `{0}`")]
    BadNumber(String),
}

/// Positioned parse or consistency error.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct PddlError {
    pub span: Span,
    pub kind: PddlErrorKind,
}

impl PddlError {
    pub(crate) fn new(span: Span, kind: PddlErrorKind) -> Self {
        PddlError { span, kind }
    }
}

impl From<SyntaxError> for PddlError {
    fn from(e: SyntaxError) -> Self {
        PddlError::new(e.span, PddlErrorKind::Syntax(e.message))
    }
}
