//! Graph encoding of a numeric planning state together with its goal.
//!
//! Nodes are the task's objects, the propositions true in the state, the
//! propositional goals, every numeric variable and every numeric goal.
//! Proposition nodes connect to their argument objects with the argument
//! position (1-based) as edge label; numeric goal nodes connect to the
//! numeric variables they mention with label 0.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::pddl::{Comparator, LiftedDomain, TOTAL_COST};
use crate::task::{GroundCondition, GroundTask, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropStatus {
    AchievedGoal,
    UnachievedGoal,
    AchievedNonGoal,
}

impl PropStatus {
    fn code(self) -> &'static str {
        match self {
            PropStatus::AchievedGoal => "ag",
            PropStatus::UnachievedGoal => "ug",
            PropStatus::AchievedNonGoal => "an",
        }
    }
}

/// Categorical node feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CatFeature {
    /// `Some(name)` for domain constants, `None` for ordinary objects.
    Object(Option<Arc<str>>),
    Func(Arc<str>),
    Pred(Arc<str>, PropStatus),
    /// Numeric goal: comparator and whether the state achieves it.
    Comp(Comparator, bool),
}

/// Canonical textual form: `obj`, `obj:<c>`, `func:<f>`, `pred:<p>:<ag|ug|an>`,
/// `comp:<op>:<ag|ug>`.
impl fmt::Display for CatFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatFeature::Object(None) => f.write_str("obj"),
            CatFeature::Object(Some(c)) => write!(f, "obj:{c}"),
            CatFeature::Func(n) => write!(f, "func:{n}"),
            CatFeature::Pred(n, st) => write!(f, "pred:{n}:{}", st.code()),
            CatFeature::Comp(c, ach) => {
                write!(f, "comp:{}:{}", c.symbol(), if *ach { "ag" } else { "ug" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid categorical feature `{0}`")]
pub struct CatFeatureParseError(pub String);

impl FromStr for CatFeature {
    type Err = CatFeatureParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CatFeatureParseError(s.to_string());
        let non_empty = |x: &str| if x.is_empty() { Err(bad()) } else { Ok(Arc::from(x)) };
        if s == "obj" {
            return Ok(CatFeature::Object(None));
        }
        if let Some(c) = s.strip_prefix("obj:") {
            return Ok(CatFeature::Object(Some(non_empty(c)?)));
        }
        if let Some(n) = s.strip_prefix("func:") {
            return Ok(CatFeature::Func(non_empty(n)?));
        }
        if let Some(rest) = s.strip_prefix("pred:") {
            let (name, code) = rest.rsplit_once(':').ok_or_else(bad)?;
            let status = match code {
                "ag" => PropStatus::AchievedGoal,
                "ug" => PropStatus::UnachievedGoal,
                "an" => PropStatus::AchievedNonGoal,
                _ => return Err(bad()),
            };
            return Ok(CatFeature::Pred(non_empty(name)?, status));
        }
        if let Some(rest) = s.strip_prefix("comp:") {
            let (op, code) = rest.split_once(':').ok_or_else(bad)?;
            let cmp = match op {
                ">=" => Comparator::Ge,
                ">" => Comparator::Gt,
                "=" => Comparator::Eq,
                _ => return Err(bad()),
            };
            let achieved = match code {
                "ag" => true,
                "ug" => false,
                _ => return Err(bad()),
            };
            return Ok(CatFeature::Comp(cmp, achieved));
        }
        Err(bad())
    }
}

/// Size of the categorical alphabet for a domain: 5 fixed features, three
/// goal statuses per predicate, one per function and one per constant.
pub fn categorical_alphabet_size(domain: &LiftedDomain) -> usize {
    let functions = domain.functions.iter().filter(|f| f.name != TOTAL_COST).count();
    5 + 3 * domain.predicates.len() + functions + domain.constants.len()
}

/// Undirected graph with one categorical and one continuous attribute per
/// node and labeled edges. Parallel edges with distinct labels are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NilgGraph {
    cat: Vec<CatFeature>,
    con: Vec<f64>,
    edges: Vec<(u32, u32, u32)>,
}

impl NilgGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, cat: CatFeature, con: f64) -> u32 {
        self.cat.push(cat);
        self.con.push(con);
        (self.cat.len() - 1) as u32
    }

    /// Stored once; iterated in both directions by [`NilgGraph::neighbors`].
    pub fn add_edge(&mut self, u: u32, v: u32, label: u32) {
        assert!((u as usize) < self.cat.len() && (v as usize) < self.cat.len());
        self.edges.push((u, v, label));
    }

    pub fn num_nodes(&self) -> usize {
        self.cat.len()
    }

    pub fn cat(&self, u: usize) -> &CatFeature {
        &self.cat[u]
    }

    pub fn con(&self, u: usize) -> f64 {
        self.con[u]
    }

    pub fn cats(&self) -> &[CatFeature] {
        &self.cat
    }

    pub fn cons(&self) -> &[f64] {
        &self.con
    }

    pub fn edges(&self) -> &[(u32, u32, u32)] {
        &self.edges
    }

    /// Compressed adjacency: `(offsets, (neighbor, label) pairs)`.
    pub fn neighbors(&self) -> (Vec<usize>, Vec<(u32, u32)>) {
        let n = self.num_nodes();
        let mut degree = vec![0usize; n + 1];
        for &(u, v, _) in &self.edges {
            degree[u as usize + 1] += 1;
            if u != v {
                degree[v as usize + 1] += 1;
            }
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree.clone();
        let mut fill = degree;
        let mut adj = vec![(0u32, 0u32); offsets[n]];
        for &(u, v, l) in &self.edges {
            adj[fill[u as usize]] = (v, l);
            fill[u as usize] += 1;
            if u != v {
                adj[fill[v as usize]] = (u, l);
                fill[v as usize] += 1;
            }
        }
        (offsets, adj)
    }

    /// Disjoint union; nodes of `other` are shifted after this graph's nodes.
    pub fn disjoint_union(&self, other: &NilgGraph) -> NilgGraph {
        let shift = self.num_nodes() as u32;
        let mut g = self.clone();
        g.cat.extend(other.cat.iter().cloned());
        g.con.extend(other.con.iter().copied());
        g.edges.extend(other.edges.iter().map(|&(u, v, l)| (u + shift, v + shift, l)));
        g
    }

    /// Line format: `node <id> <catfeature> <con>` then `edge <u> <v> <label>`.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        for (i, (c, x)) in self.cat.iter().zip(&self.con).enumerate() {
            out.push_str(&format!("node {i} {c} {x}\n"));
        }
        for (u, v, l) in &self.edges {
            out.push_str(&format!("edge {u} {v} {l}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NilgError {
    #[error("negative propositional goal `{0}` has no graph encoding")]
    NegativeGoal(String),
}

struct NumericGoal {
    condition: GroundCondition,
    cmp: Comparator,
    vars: Vec<u32>,
}

/// Per-task precomputation; [`NilgEncoder::encode`] builds one graph per state.
pub struct NilgEncoder<'t> {
    task: &'t GroundTask,
    object_features: Vec<CatFeature>,
    goal_props: Vec<bool>,
    numeric_goals: Vec<NumericGoal>,
    func_features: Vec<CatFeature>,
}

impl<'t> NilgEncoder<'t> {
    pub fn new(task: &'t GroundTask) -> Result<Self, NilgError> {
        let mut goal_props = vec![false; task.num_props()];
        let mut numeric_goals: Vec<NumericGoal> = Vec::new();
        for g in &task.goal {
            match g {
                GroundCondition::Prop { var, positive: true } => goal_props[*var as usize] = true,
                GroundCondition::Prop { positive: false, .. } => {
                    return Err(NilgError::NegativeGoal(task.describe_condition(g)))
                }
                GroundCondition::Numeric { cmp, .. } => {
                    if !numeric_goals.iter().any(|n| n.condition == *g) {
                        numeric_goals.push(NumericGoal { condition: g.clone(), cmp: *cmp, vars: g.variables() });
                    }
                }
            }
        }
        let object_features =
            task.objects.iter().map(|o| CatFeature::Object(o.is_constant.then(|| o.name.clone()))).collect();
        let func_features = task.fluents.iter().map(|f| CatFeature::Func(f.symbol.clone())).collect();
        Ok(NilgEncoder { task, object_features, goal_props, numeric_goals, func_features })
    }

    pub fn task(&self) -> &'t GroundTask {
        self.task
    }

    /// Graph of the task with its initial state replaced by `s`.
    pub fn encode(&self, s: &State) -> NilgGraph {
        let task = self.task;
        let mut g = NilgGraph::new();
        for f in &self.object_features {
            g.add_node(f.clone(), 0.0);
        }
        // Propositions true in `s` merged with propositional goals, ascending.
        let mut true_iter = s.true_props().peekable();
        let mut goal_iter = self.goal_props.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).peekable();
        loop {
            let next = match (true_iter.peek(), goal_iter.peek()) {
                (None, None) => break,
                (Some(&t), None) => t,
                (None, Some(&gl)) => gl,
                (Some(&t), Some(&gl)) => t.min(gl),
            };
            let is_true = true_iter.next_if_eq(&next).is_some();
            let is_goal = goal_iter.next_if_eq(&next).is_some();
            let status = match (is_true, is_goal) {
                (true, true) => PropStatus::AchievedGoal,
                (false, true) => PropStatus::UnachievedGoal,
                _ => PropStatus::AchievedNonGoal,
            };
            let atom = &task.atoms[next];
            let node = g.add_node(CatFeature::Pred(atom.symbol.clone(), status), 0.0);
            for (pos, &obj) in atom.args.iter().enumerate() {
                g.add_edge(node, obj, pos as u32 + 1);
            }
        }
        let first_fluent = g.num_nodes() as u32;
        for (i, f) in self.func_features.iter().enumerate() {
            g.add_node(f.clone(), s.value(i));
        }
        for goal in &self.numeric_goals {
            let achieved = goal.condition.holds(s);
            let con = if achieved {
                0.0
            } else {
                match goal.condition.error_value(s) {
                    Some(Ok(v)) => v,
                    _ => 0.0,
                }
            };
            let node = g.add_node(CatFeature::Comp(goal.cmp, achieved), con);
            for &v in &goal.vars {
                g.add_edge(node, first_fluent + v, 0);
            }
        }
        g
    }
}

pub fn build_nilg(task: &GroundTask, s: &State) -> Result<NilgGraph, NilgError> {
    Ok(NilgEncoder::new(task)?.encode(s))
}
