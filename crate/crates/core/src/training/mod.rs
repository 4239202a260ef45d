//! Training data from optimal plan traces and linear heuristic fitting.
//!
//! A plan trace gives one regression row per visited state for cost-to-go
//! learning, and one parent constraint plus sibling constraints per step for
//! rank learning.

mod cost;
mod rank;

use std::fmt::Write as _;

pub use cost::{train_cost_to_go, CostConfig, CostLoss};
pub use rank::{hinge_objective, train_ranking, RankConfig, RankSolver, SubgradientSchedule};

use crate::ccwl::{CcwlModel, Pooling};
use crate::nilg::{NilgEncoder, NilgError, NilgGraph};
use crate::task::{GroundTask, InvalidReason, PlanValidation, State, TaskError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainingError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("plan fails at step {step}: {reason}")]
    InvalidPlan { step: usize, reason: InvalidReason },
    #[error(transparent)]
    Graph(#[from] NilgError),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("feature rows have inconsistent lengths")]
    DimensionMismatch,
}

/// States visited by a valid plan with the remaining plan cost at each.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanTrace {
    pub states: Vec<State>,
    pub actions: Vec<usize>,
    pub costs: Vec<f64>,
    /// `cost_to_go[j]` is the cost of actions `j+1..n`; the last entry is 0.
    pub cost_to_go: Vec<f64>,
}

impl PlanTrace {
    pub fn from_action_ids(task: &GroundTask, actions: &[usize]) -> Result<Self, TrainingError> {
        match task.validate_action_ids(actions) {
            PlanValidation::Valid { trace, .. } => {
                let costs: Vec<f64> = actions.iter().map(|&a| task.actions[a].cost).collect();
                let mut cost_to_go = vec![0.0; trace.len()];
                for j in (0..costs.len()).rev() {
                    cost_to_go[j] = cost_to_go[j + 1] + costs[j];
                }
                Ok(PlanTrace { states: trace, actions: actions.to_vec(), costs, cost_to_go })
            }
            PlanValidation::Invalid { step, reason } => Err(TrainingError::InvalidPlan { step, reason }),
        }
    }

    /// Builds a trace from canonical action names, e.g. from a plan file.
    pub fn from_plan<S: AsRef<str>>(task: &GroundTask, plan: &[S]) -> Result<Self, TrainingError> {
        let ids = plan
            .iter()
            .enumerate()
            .map(|(i, n)| {
                task.action_by_name(n.as_ref())
                    .ok_or_else(|| TaskError::UnknownAction { step: i + 1, name: n.as_ref().to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_action_ids(task, &ids)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// A task paired with one of its optimal plans.
#[derive(Debug, Clone)]
pub struct TrainingInstance {
    pub task: GroundTask,
    pub trace: PlanTrace,
}

/// Distinct successors of `s_{j-1}` other than `s_j`, in generation order.
pub fn siblings(task: &GroundTask, trace: &PlanTrace, step: usize) -> Vec<State> {
    let parent = &trace.states[step - 1];
    let on_trace = &trace.states[step];
    let mut out: Vec<State> = Vec::new();
    for (_, s) in task.successors(parent) {
        if &s != on_trace && !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Graphs the color table is fitted on: every trace state, plus every
/// sibling state when `with_siblings` is set.
pub fn training_graphs(instances: &[TrainingInstance], with_siblings: bool) -> Result<Vec<NilgGraph>, TrainingError> {
    let mut graphs = Vec::new();
    for inst in instances {
        let enc = NilgEncoder::new(&inst.task)?;
        for (j, s) in inst.trace.states.iter().enumerate() {
            graphs.push(enc.encode(s));
            if with_siblings && j + 1 < inst.trace.states.len() {
                graphs.extend(siblings(&inst.task, &inst.trace, j + 1).iter().map(|x| enc.encode(x)));
            }
        }
    }
    Ok(graphs)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostDataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl CostDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Header `feature_0,...,feature_k,target`, one row per state.
    pub fn to_csv(&self, dim: usize) -> String {
        let mut out = String::new();
        for i in 0..dim {
            let _ = write!(out, "feature_{i},");
        }
        out.push_str("target\n");
        for (x, y) in self.features.iter().zip(&self.targets) {
            for v in x {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }
}

pub fn build_cost_dataset(instances: &[TrainingInstance], ccwl: &CcwlModel) -> Result<CostDataset, TrainingError> {
    let mut data = CostDataset::default();
    for inst in instances {
        let enc = NilgEncoder::new(&inst.task)?;
        for (s, &h) in inst.trace.states.iter().zip(&inst.trace.cost_to_go) {
            data.features.push(ccwl.featurize(&enc.encode(s)));
            data.targets.push(h);
        }
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Parent,
    Sibling,
}

/// `w . dphi >= margin`, softened by a slack variable.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingConstraint {
    pub kind: ConstraintKind,
    /// Instance index.
    pub i: usize,
    /// Trace step, 1-based.
    pub j: usize,
    /// 0 for the parent constraint, 1.. for siblings.
    pub k: usize,
    pub margin: f64,
    pub dphi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankingConstraintSet {
    pub dim: usize,
    pub constraints: Vec<RankingConstraint>,
}

impl RankingConstraintSet {
    pub fn new(dim: usize) -> Self {
        RankingConstraintSet { dim, constraints: Vec::new() }
    }

    /// Adds a hand-built constraint with zeroed provenance.
    pub fn push(&mut self, kind: ConstraintKind, margin: f64, dphi: Vec<f64>) {
        assert_eq!(dphi.len(), self.dim, "constraint dimension");
        let k = usize::from(kind == ConstraintKind::Sibling);
        self.constraints.push(RankingConstraint { kind, i: 0, j: 0, k, margin, dphi });
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Header `kind,i,j,k,margin,dphi_0,...`, one row per constraint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,i,j,k,margin");
        for d in 0..self.dim {
            let _ = write!(out, ",dphi_{d}");
        }
        out.push('\n');
        for c in &self.constraints {
            let kind = match c.kind {
                ConstraintKind::Parent => "parent",
                ConstraintKind::Sibling => "sibling",
            };
            let _ = write!(out, "{kind},{},{},{},{}", c.i, c.j, c.k, c.margin);
            for v in &c.dphi {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn build_ranking_constraints(
    instances: &[TrainingInstance],
    ccwl: &CcwlModel,
) -> Result<RankingConstraintSet, TrainingError> {
    let mut set = RankingConstraintSet::new(ccwl.feature_len());
    for (i, inst) in instances.iter().enumerate() {
        let enc = NilgEncoder::new(&inst.task)?;
        let phi: Vec<Vec<f64>> = inst.trace.states.iter().map(|s| ccwl.featurize(&enc.encode(s))).collect();
        for j in 1..phi.len() {
            set.constraints.push(RankingConstraint {
                kind: ConstraintKind::Parent,
                i,
                j,
                k: 0,
                margin: inst.trace.costs[j - 1],
                dphi: diff(&phi[j - 1], &phi[j]),
            });
            for (k, sib) in siblings(&inst.task, &inst.trace, j).iter().enumerate() {
                set.constraints.push(RankingConstraint {
                    kind: ConstraintKind::Sibling,
                    i,
                    j,
                    k: k + 1,
                    margin: 0.0,
                    dphi: diff(&ccwl.featurize(&enc.encode(sib)), &phi[j]),
                });
            }
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cost,
    Rank,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cost => "cost",
            Method::Rank => "rank",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost" => Ok(Method::Cost),
            "rank" => Ok(Method::Rank),
            _ => Err(format!("unknown method `{s}` (expected cost or rank)")),
        }
    }
}

/// `h(s) = max(0, w . phi(s) + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHeuristic {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub method: Method,
    pub objective: f64,
    pub iterations: usize,
    /// False when an iterative solver stopped at its iteration cap.
    pub converged: bool,
}

impl LinearHeuristic {
    /// Unclamped linear score.
    pub fn score(&self, phi: &[f64]) -> f64 {
        self.weights.iter().zip(phi).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub pooling: Pooling,
    pub method: Method,
    pub cost: CostConfig,
    pub rank: RankConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1,
            pooling: Pooling::Sum,
            method: Method::Rank,
            cost: CostConfig::default(),
            rank: RankConfig::default(),
        }
    }
}

/// Fits colors on the training graphs, then the chosen linear model.
pub fn train(
    instances: &[TrainingInstance],
    config: &TrainConfig,
) -> Result<(CcwlModel, LinearHeuristic), TrainingError> {
    if instances.is_empty() {
        return Err(TrainingError::EmptyDataset);
    }
    let graphs = training_graphs(instances, config.method == Method::Rank)?;
    let ccwl = CcwlModel::fit(&graphs, config.iterations, config.pooling);
    let model = match config.method {
        Method::Cost => {
            let data = build_cost_dataset(instances, &ccwl)?;
            train_cost_to_go(&data, &config.cost)?
        }
        Method::Rank => {
            let set = build_ranking_constraints(instances, &ccwl)?;
            train_ranking(&set, &config.rank).0
        }
    };
    Ok((ccwl, model))
}

#[cfg(test)]
mod tests;
