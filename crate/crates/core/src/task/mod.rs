//! Ground numeric planning tasks: states, condition evaluation, successor
//! generation and plan validation.

mod ground;
mod plan;
mod state;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use ground::ground;
pub use plan::{format_plan, parse_plan, PlanFormatError};
pub use state::State;

use crate::pddl::{BinOp, Comparator, NumericOp};

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInfo {
    pub name: Arc<str>,
    pub ty: Arc<str>,
    /// Declared as a domain constant rather than a problem object.
    pub is_constant: bool,
}

/// Predicate or function symbol applied to object indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundSymbol {
    pub symbol: Arc<str>,
    pub args: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundExpr {
    Const(f64),
    Var(u32),
    Binary(BinOp, Box<GroundExpr>, Box<GroundExpr>),
    Neg(Box<GroundExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

impl GroundExpr {
    pub fn eval(&self, s: &State) -> Result<f64, EvalError> {
        Ok(match self {
            GroundExpr::Const(c) => *c,
            GroundExpr::Var(v) => s.value(*v as usize),
            GroundExpr::Neg(e) => -e.eval(s)?,
            GroundExpr::Binary(op, l, r) => {
                let (l, r) = (l.eval(s)?, r.eval(s)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div if r == 0.0 => return Err(EvalError::DivisionByZero),
                    BinOp::Div => l / r,
                }
            }
        })
    }

    /// Numeric variables occurring in the expression, deduplicated, in first-occurrence order.
    pub fn variables(&self) -> Vec<u32> {
        fn walk(e: &GroundExpr, out: &mut Vec<u32>) {
            match e {
                GroundExpr::Const(_) => {}
                GroundExpr::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v)
                    }
                }
                GroundExpr::Neg(e) => walk(e, out),
                GroundExpr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundCondition {
    Prop {
        var: u32,
        positive: bool,
    },
    /// `(lhs - rhs) cmp 0`
    Numeric {
        cmp: Comparator,
        lhs: GroundExpr,
        rhs: GroundExpr,
    },
}

impl GroundCondition {
    /// Value of `lhs - rhs` for numeric conditions.
    pub fn error_value(&self, s: &State) -> Option<Result<f64, EvalError>> {
        match self {
            GroundCondition::Prop { .. } => None,
            GroundCondition::Numeric { lhs, rhs, .. } => Some(lhs.eval(s).and_then(|l| Ok(l - rhs.eval(s)?))),
        }
    }

    /// Evaluation errors count as unsatisfied.
    pub fn holds(&self, s: &State) -> bool {
        match self {
            GroundCondition::Prop { var, positive } => s.holds(*var as usize) == *positive,
            GroundCondition::Numeric { cmp, .. } => match self.error_value(s) {
                Some(Ok(v)) => cmp.holds(v),
                _ => false,
            },
        }
    }

    pub fn variables(&self) -> Vec<u32> {
        match self {
            GroundCondition::Prop { .. } => Vec::new(),
            GroundCondition::Numeric { lhs, rhs, .. } => {
                let mut v = lhs.variables();
                for x in rhs.variables() {
                    if !v.contains(&x) {
                        v.push(x);
                    }
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericEffect {
    pub fluent: u32,
    pub op: NumericOp,
    pub expr: GroundExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    /// Canonical `(schema arg1 arg2 ...)` form.
    pub name: String,
    pub schema: usize,
    pub args: Vec<u32>,
    pub precondition: Vec<GroundCondition>,
    pub adds: Vec<u32>,
    pub deletes: Vec<u32>,
    pub numeric_effects: Vec<NumericEffect>,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct GroundTask {
    pub domain_name: String,
    pub problem_name: String,
    pub objects: Vec<ObjectInfo>,
    /// Propositional variables.
    pub atoms: Vec<GroundSymbol>,
    /// Numeric variables; only fluents with an initial value exist.
    pub fluents: Vec<GroundSymbol>,
    pub actions: Vec<GroundAction>,
    pub initial: State,
    pub goal: Vec<GroundCondition>,
    action_index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("fluent `{0}` has no initial value")]
    UndefinedFluent(String),
    #[error("action `{0}` has a cost that is not a constant expression")]
    NonConstantCost(String),
    #[error("action `{0}` has a negative cost")]
    NegativeCost(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("step {step}: unknown action `{name}`")]
    UnknownAction { step: usize, name: String },
}

/// Why a plan failed validation.
#[derive(Debug, Clone, PartialEq)]
pub enum InvalidReason {
    Precondition { condition: String, numeric: bool },
    GoalNotReached { unsatisfied: Vec<String> },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::Precondition { condition, numeric: true } => {
                write!(f, "numeric precondition `{condition}` violated")
            }
            InvalidReason::Precondition { condition, numeric: false } => {
                write!(f, "precondition `{condition}` violated")
            }
            InvalidReason::GoalNotReached { unsatisfied } => {
                write!(f, "goal not reached: {}", unsatisfied.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanValidation {
    Valid {
        cost: f64,
        trace: Vec<State>,
    },
    /// `step` is 1-based; `plan.len() + 1` means the final state misses the goal.
    Invalid {
        step: usize,
        reason: InvalidReason,
    },
}

impl PlanValidation {
    pub fn is_valid(&self) -> bool {
        matches!(self, PlanValidation::Valid { .. })
    }
}

pub fn satisfies(s: &State, conditions: &[GroundCondition]) -> bool {
    conditions.iter().all(|c| c.holds(s))
}

impl GroundTask {
    pub fn num_props(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn action_by_name(&self, name: &str) -> Option<usize> {
        self.action_index.get(name).copied()
    }

    pub fn is_goal(&self, s: &State) -> bool {
        satisfies(s, &self.goal)
    }

    pub fn is_applicable(&self, s: &State, action: usize) -> bool {
        let pre = &self.actions[action].precondition;
        // Cheap propositional checks first.
        pre.iter().all(|c| !matches!(c, GroundCondition::Prop { .. }) || c.holds(s))
            && pre.iter().all(|c| matches!(c, GroundCondition::Prop { .. }) || c.holds(s))
    }

    /// Successor of `s` under `action`, or `None` if inapplicable. Numeric
    /// effects read the source state; deletes are applied before adds.
    pub fn apply(&self, s: &State, action: usize) -> Option<State> {
        if !self.is_applicable(s, action) {
            return None;
        }
        self.apply_unchecked(s, &self.actions[action])
    }

    fn apply_unchecked(&self, s: &State, a: &GroundAction) -> Option<State> {
        let mut next = s.clone();
        for &d in &a.deletes {
            next.set(d as usize, false);
        }
        for &ad in &a.adds {
            next.set(ad as usize, true);
        }
        for e in &a.numeric_effects {
            let v = e.expr.eval(s).ok()?;
            let old = s.value(e.fluent as usize);
            let new = match e.op {
                NumericOp::Assign => v,
                NumericOp::Increase => old + v,
                NumericOp::Decrease => old - v,
            };
            next.set_value(e.fluent as usize, new);
        }
        Some(next)
    }

    /// All `(action, successor)` pairs in ground-action index order.
    pub fn successors(&self, s: &State) -> Vec<(usize, State)> {
        (0..self.actions.len())
            .filter(|&i| self.is_applicable(s, i))
            .filter_map(|i| self.apply_unchecked(s, &self.actions[i]).map(|n| (i, n)))
            .collect()
    }

    pub fn atom_name(&self, var: usize) -> String {
        self.symbol_name(&self.atoms[var])
    }

    pub fn fluent_name(&self, var: usize) -> String {
        self.symbol_name(&self.fluents[var])
    }

    fn symbol_name(&self, s: &GroundSymbol) -> String {
        let mut out = format!("({}", s.symbol);
        for &a in &s.args {
            out.push(' ');
            out.push_str(&self.objects[a as usize].name);
        }
        out.push(')');
        out
    }

    pub fn describe_expr(&self, e: &GroundExpr) -> String {
        match e {
            GroundExpr::Const(c) => format!("{c}"),
            GroundExpr::Var(v) => self.fluent_name(*v as usize),
            GroundExpr::Neg(e) => format!("(- {})", self.describe_expr(e)),
            GroundExpr::Binary(op, l, r) => {
                format!("({} {} {})", op.symbol(), self.describe_expr(l), self.describe_expr(r))
            }
        }
    }

    pub fn describe_condition(&self, c: &GroundCondition) -> String {
        match c {
            GroundCondition::Prop { var, positive: true } => self.atom_name(*var as usize),
            GroundCondition::Prop { var, positive: false } => {
                format!("(not {})", self.atom_name(*var as usize))
            }
            GroundCondition::Numeric { cmp, lhs, rhs } => {
                format!("({} {} {})", cmp.symbol(), self.describe_expr(lhs), self.describe_expr(rhs))
            }
        }
    }

    /// Simulates `plan` (canonical action names) from the initial state.
    pub fn validate_plan<S: AsRef<str>>(&self, plan: &[S]) -> Result<PlanValidation, TaskError> {
        let ids = plan
            .iter()
            .enumerate()
            .map(|(i, name)| {
                self.action_by_name(name.as_ref())
                    .ok_or_else(|| TaskError::UnknownAction { step: i + 1, name: name.as_ref().to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.validate_action_ids(&ids))
    }

    pub fn validate_action_ids(&self, plan: &[usize]) -> PlanValidation {
        let mut state = self.initial.clone();
        let mut trace = vec![state.clone()];
        let mut cost = 0.0;
        for (i, &a) in plan.iter().enumerate() {
            let action = &self.actions[a];
            if let Some(c) = action.precondition.iter().find(|c| !c.holds(&state)) {
                return PlanValidation::Invalid {
                    step: i + 1,
                    reason: InvalidReason::Precondition {
                        condition: self.describe_condition(c),
                        numeric: matches!(c, GroundCondition::Numeric { .. }),
                    },
                };
            }
            match self.apply_unchecked(&state, action) {
                Some(next) => state = next,
                None => {
                    return PlanValidation::Invalid {
                        step: i + 1,
                        reason: InvalidReason::Precondition {
                            condition: "effect evaluation (division by zero)".into(),
                            numeric: true,
                        },
                    }
                }
            }
            cost += action.cost;
            trace.push(state.clone());
        }
        let unsatisfied: Vec<String> =
            self.goal.iter().filter(|g| !g.holds(&state)).map(|g| self.describe_condition(g)).collect();
        if unsatisfied.is_empty() {
            PlanValidation::Valid { cost, trace }
        } else {
            PlanValidation::Invalid { step: plan.len() + 1, reason: InvalidReason::GoalNotReached { unsatisfied } }
        }
    }
}
