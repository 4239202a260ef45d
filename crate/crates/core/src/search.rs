//! Greedy best-first search and A* over ground tasks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use indexmap::IndexSet;

use crate::ccwl::CcwlModel;
use crate::nilg::{NilgEncoder, NilgError};
use crate::task::{GroundCondition, GroundTask, State};
use crate::training::LinearHeuristic;

/// Maps a state to a non-negative estimate, or `f64::INFINITY` to prune it.
pub trait Heuristic {
    fn evaluate(&self, task: &GroundTask, s: &State) -> f64;
}

/// `h = 0` everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct Blind;

impl Heuristic for Blind {
    fn evaluate(&self, _: &GroundTask, _: &State) -> f64 {
        0.0
    }
}

/// Number of goal conditions not satisfied by the state.
#[derive(Debug, Clone, Copy, Default)]
pub struct GoalCount;

impl Heuristic for GoalCount {
    fn evaluate(&self, task: &GroundTask, s: &State) -> f64 {
        task.goal.iter().filter(|g| !g.holds(s)).count() as f64
    }
}

/// Wraps a closure as a heuristic.
pub struct FnHeuristic<F>(pub F);

impl<F: Fn(&GroundTask, &State) -> f64> Heuristic for FnHeuristic<F> {
    fn evaluate(&self, task: &GroundTask, s: &State) -> f64 {
        (self.0)(task, s)
    }
}

/// `max(0, w . phi(s) + b)` with `phi` the CCWL features of the state graph.
#[derive(Debug, Clone)]
pub struct LearnedHeuristic {
    pub ccwl: CcwlModel,
    pub model: LinearHeuristic,
}

impl LearnedHeuristic {
    pub fn new(ccwl: CcwlModel, model: LinearHeuristic) -> Self {
        assert_eq!(model.weights.len(), ccwl.feature_len(), "model and color table disagree");
        LearnedHeuristic { ccwl, model }
    }

    /// Tasks with negative propositional goals have no graph encoding.
    pub fn supports(&self, task: &GroundTask) -> Result<(), NilgError> {
        NilgEncoder::new(task).map(|_| ())
    }

    pub fn features(&self, task: &GroundTask, s: &State) -> Result<Vec<f64>, NilgError> {
        Ok(self.ccwl.featurize(&NilgEncoder::new(task)?.encode(s)))
    }
}

impl Heuristic for LearnedHeuristic {
    /// Unsupported tasks evaluate to infinity; check [`LearnedHeuristic::supports`] first.
    fn evaluate(&self, task: &GroundTask, s: &State) -> f64 {
        match self.features(task, s) {
            Ok(phi) => self.model.score(&phi).max(0.0),
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_expansions: u64,
    pub max_seconds: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_expansions: 1_000_000, max_seconds: 300.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Plan { actions: Vec<usize>, cost: f64 },
    Unsolvable,
    ResourceLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchStats {
    pub expansions: u64,
    pub evaluations: u64,
    pub generated: u64,
    pub peak_queue: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn plan(&self) -> Option<&[usize]> {
        match &self.outcome {
            Outcome::Plan { actions, .. } => Some(actions),
            _ => None,
        }
    }

    pub fn stats_json(&self) -> serde_json::Value {
        let (outcome, cost, length) = match &self.outcome {
            Outcome::Plan { actions, cost } => ("plan", Some(*cost), Some(actions.len())),
            Outcome::Unsolvable => ("unsolvable", None, None),
            Outcome::ResourceLimit => ("resource-limit", None, None),
        };
        serde_json::json!({
            "outcome": outcome,
            "cost": cost,
            "plan_length": length,
            "expansions": self.stats.expansions,
            "evaluations": self.stats.evaluations,
            "generated": self.stats.generated,
            "peak_queue": self.stats.peak_queue,
            "wall_seconds": self.stats.wall_seconds,
        })
    }
}

/// Min-heap entry ordered by `(primary, secondary, seq)`.
#[derive(Debug, Clone, Copy)]
struct Entry {
    primary: f64,
    secondary: f64,
    seq: u64,
    node: usize,
    g: f64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .primary
            .total_cmp(&self.primary)
            .then(other.secondary.total_cmp(&self.secondary))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Space {
    states: IndexSet<State>,
    /// `(parent node, action)`; the root points at itself.
    parents: Vec<(usize, usize)>,
}

impl Space {
    fn new(root: State) -> Self {
        let mut states = IndexSet::new();
        states.insert(root);
        Space { states, parents: vec![(0, usize::MAX)] }
    }

    fn plan_to(&self, mut node: usize) -> Vec<usize> {
        let mut plan = Vec::new();
        while node != 0 {
            let (p, a) = self.parents[node];
            plan.push(a);
            node = p;
        }
        plan.reverse();
        plan
    }
}

fn plan_outcome(task: &GroundTask, actions: Vec<usize>) -> Outcome {
    let cost = actions.iter().map(|&a| task.actions[a].cost).sum();
    Outcome::Plan { actions, cost }
}

struct Clock {
    start: Instant,
    limits: Limits,
}

impl Clock {
    fn exhausted(&self, expansions: u64) -> bool {
        expansions >= self.limits.max_expansions
            || (expansions.is_multiple_of(64) && self.start.elapsed().as_secs_f64() > self.limits.max_seconds)
    }
}

pub fn gbfs(task: &GroundTask, h: &dyn Heuristic, limits: Limits) -> SearchResult {
    gbfs_observed(task, h, limits, |_| {})
}

/// GBFS that reports every expanded state, in order, to `on_expand`.
///
/// Ties in `h` go to the earliest inserted state. Successors are goal-tested
/// when generated; states already generated are skipped.
pub fn gbfs_observed(
    task: &GroundTask,
    h: &dyn Heuristic,
    limits: Limits,
    mut on_expand: impl FnMut(&State),
) -> SearchResult {
    let clock = Clock { start: Instant::now(), limits };
    let mut stats = SearchStats::default();
    let finish = |outcome, mut stats: SearchStats| {
        stats.wall_seconds = clock.start.elapsed().as_secs_f64();
        SearchResult { outcome, stats }
    };
    if task.is_goal(&task.initial) {
        return finish(plan_outcome(task, Vec::new()), stats);
    }
    let mut space = Space::new(task.initial.clone());
    let mut open = BinaryHeap::new();
    let mut seq = 0;
    let h0 = h.evaluate(task, &task.initial);
    stats.evaluations += 1;
    if h0.is_finite() {
        open.push(Entry { primary: h0, secondary: 0.0, seq, node: 0, g: 0.0 });
        seq += 1;
    }
    stats.peak_queue = open.len();
    while let Some(entry) = open.pop() {
        if clock.exhausted(stats.expansions) {
            return finish(Outcome::ResourceLimit, stats);
        }
        stats.expansions += 1;
        let state = space.states[entry.node].clone();
        on_expand(&state);
        for (action, next) in task.successors(&state) {
            stats.generated += 1;
            let (node, fresh) = space.states.insert_full(next);
            if !fresh {
                continue;
            }
            space.parents.push((entry.node, action));
            let next = &space.states[node];
            if task.is_goal(next) {
                return finish(plan_outcome(task, space.plan_to(node)), stats);
            }
            let hv = h.evaluate(task, next);
            stats.evaluations += 1;
            if hv.is_finite() {
                open.push(Entry { primary: hv, secondary: 0.0, seq, node, g: 0.0 });
                seq += 1;
            }
        }
        stats.peak_queue = stats.peak_queue.max(open.len());
    }
    finish(Outcome::Unsolvable, stats)
}

/// A* ordered by `g + h`, ties by smaller `h` then insertion order. Goal
/// test on expansion; states reached more cheaply are reopened.
pub fn astar(task: &GroundTask, h: &dyn Heuristic, limits: Limits) -> SearchResult {
    let clock = Clock { start: Instant::now(), limits };
    let mut stats = SearchStats::default();
    let finish = |outcome, mut stats: SearchStats| {
        stats.wall_seconds = clock.start.elapsed().as_secs_f64();
        SearchResult { outcome, stats }
    };
    let mut space = Space::new(task.initial.clone());
    let mut g_best = vec![0.0f64];
    let mut h_cache = vec![h.evaluate(task, &task.initial)];
    stats.evaluations += 1;
    let mut open = BinaryHeap::new();
    let mut seq = 0;
    if h_cache[0].is_finite() {
        open.push(Entry { primary: h_cache[0], secondary: h_cache[0], seq, node: 0, g: 0.0 });
        seq += 1;
    }
    stats.peak_queue = open.len();
    while let Some(entry) = open.pop() {
        if entry.g > g_best[entry.node] {
            continue;
        }
        let state = space.states[entry.node].clone();
        if task.is_goal(&state) {
            return finish(plan_outcome(task, space.plan_to(entry.node)), stats);
        }
        if clock.exhausted(stats.expansions) {
            return finish(Outcome::ResourceLimit, stats);
        }
        stats.expansions += 1;
        for (action, next) in task.successors(&state) {
            stats.generated += 1;
            let g = entry.g + task.actions[action].cost;
            let (node, fresh) = space.states.insert_full(next);
            if fresh {
                space.parents.push((entry.node, action));
                g_best.push(g);
                let hv = h.evaluate(task, &space.states[node]);
                stats.evaluations += 1;
                h_cache.push(hv);
            } else if g < g_best[node] {
                space.parents[node] = (entry.node, action);
                g_best[node] = g;
            } else {
                continue;
            }
            let hv = h_cache[node];
            if hv.is_finite() {
                open.push(Entry { primary: g + hv, secondary: hv, seq, node, g });
                seq += 1;
            }
        }
        stats.peak_queue = stats.peak_queue.max(open.len());
    }
    finish(Outcome::Unsolvable, stats)
}

/// Number of unsatisfied propositional and numeric goals.
pub fn unsatisfied_goals(task: &GroundTask, s: &State) -> (usize, usize) {
    task.goal.iter().filter(|g| !g.holds(s)).fold((0, 0), |(p, n), g| match g {
        GroundCondition::Prop { .. } => (p + 1, n),
        GroundCondition::Numeric { .. } => (p, n + 1),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::{HashMap, VecDeque};

    use super::*;
    use crate::fixtures::*;
    use crate::pddl::{parse_domain, parse_problem};
    use crate::task::{ground, parse_plan, PlanValidation};

    fn task_from(domain: &str, problem: &str) -> GroundTask {
        let d = parse_domain(domain).unwrap();
        ground(&d, &parse_problem(problem, &d).unwrap()).unwrap()
    }

    /// Breadth-first distances from the initial state; unit costs only.
    fn bfs_depth(task: &GroundTask) -> Option<usize> {
        let mut dist = HashMap::from([(task.initial.clone(), 0usize)]);
        let mut queue = VecDeque::from([task.initial.clone()]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            if task.is_goal(&s) {
                return Some(d);
            }
            for (_, n) in task.successors(&s) {
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
        None
    }

    fn assert_valid(task: &GroundTask, r: &SearchResult) {
        let Outcome::Plan { actions, cost } = &r.outcome else { panic!("no plan: {r:?}") };
        match task.validate_action_ids(actions) {
            PlanValidation::Valid { cost: c, .. } => assert_eq!(c, *cost),
            other => panic!("invalid plan: {other:?}"),
        }
    }

    #[test]
    fn goal_at_start() {
        let t = task_from(
            "(define (domain d) (:predicates (p)) (:action a :effect (p)))",
            "(define (problem q) (:domain d) (:init (p)) (:goal (p)))",
        );
        for r in [gbfs(&t, &Blind, Limits::default()), astar(&t, &Blind, Limits::default())] {
            assert_eq!(r.outcome, Outcome::Plan { actions: vec![], cost: 0.0 });
            assert_eq!(r.stats.expansions, 0);
        }
    }

    #[test]
    fn exhausted_space_is_unsolvable() {
        let t = task_from(
            "(define (domain d) (:predicates (p) (g)) (:action a :precondition (not (p)) :effect (p)))",
            "(define (problem q) (:domain d) (:init) (:goal (g)))",
        );
        let r = gbfs(&t, &GoalCount, Limits::default());
        assert_eq!(r.outcome, Outcome::Unsolvable);
        assert_eq!(r.stats.expansions, 2);
        assert_eq!(astar(&t, &Blind, Limits::default()).outcome, Outcome::Unsolvable);
    }

    #[test]
    fn infinite_heuristic_prunes() {
        let t = running_example_task();
        let r = gbfs(&t, &FnHeuristic(|_: &GroundTask, _: &State| f64::INFINITY), Limits::default());
        assert_eq!(r.outcome, Outcome::Unsolvable);
        assert_eq!(r.stats.expansions, 0);
    }

    #[test]
    fn baseline_heuristic_values() {
        let t = running_example_task();
        assert_eq!(GoalCount.evaluate(&t, &t.initial), 2.0);
        assert_eq!(Blind.evaluate(&t, &t.initial), 0.0);
        let plan = parse_plan(RUNNING_EXAMPLE_PLAN).unwrap();
        let PlanValidation::Valid { trace, .. } = t.validate_plan(&plan).unwrap() else { panic!() };
        assert_eq!(GoalCount.evaluate(&t, trace.last().unwrap()), 0.0);
        assert_eq!(unsatisfied_goals(&t, &t.initial), (2, 0));
    }

    #[test]
    fn blind_astar_finds_cost_sixteen() {
        let t = running_example_task();
        let r = astar(&t, &Blind, Limits::default());
        assert_valid(&t, &r);
        assert!(matches!(r.outcome, Outcome::Plan { cost, .. } if cost == 16.0));
        assert_eq!(bfs_depth(&t), Some(16));
    }

    #[test]
    fn gbfs_plans_validate() {
        let t = running_example_task();
        let r = gbfs(&t, &GoalCount, Limits::default());
        assert_valid(&t, &r);
        let json = r.stats_json();
        assert_eq!(json["outcome"], "plan");
        assert_eq!(json["expansions"], r.stats.expansions);
    }

    #[test]
    fn expansion_limit_is_reported() {
        let t = running_example_task();
        let limits = Limits { max_expansions: 1, ..Limits::default() };
        assert_eq!(gbfs(&t, &Blind, limits).outcome, Outcome::ResourceLimit);
        assert_eq!(astar(&t, &Blind, limits).outcome, Outcome::ResourceLimit);
    }

    #[test]
    fn strictly_rank_consistent_heuristic_follows_the_trace() {
        let t = running_example_task();
        let plan = parse_plan(RUNNING_EXAMPLE_PLAN).unwrap();
        let PlanValidation::Valid { trace, .. } = t.validate_plan(&plan).unwrap() else { panic!() };
        let n = trace.len() - 1;
        let on_trace: HashMap<State, usize> = trace.iter().cloned().enumerate().map(|(j, s)| (s, j)).collect();
        let h = FnHeuristic(|_: &GroundTask, s: &State| match on_trace.get(s) {
            Some(j) => (n - j) as f64,
            None => (n + 1) as f64,
        });
        let mut expanded = Vec::new();
        let r = gbfs_observed(&t, &h, Limits::default(), |s| expanded.push(s.clone()));
        assert_eq!(expanded, trace[..n]);
        assert_eq!(r.stats.expansions, n as u64);
        assert_eq!(r.plan().unwrap().len(), n);
    }

    #[test]
    fn gbfs_never_expands_a_state_twice() {
        let t = running_example_task();
        let mut expanded = Vec::new();
        gbfs_observed(&t, &Blind, Limits { max_expansions: 2000, ..Limits::default() }, |s| expanded.push(s.clone()));
        let distinct: IndexSet<_> = expanded.iter().collect();
        assert_eq!(distinct.len(), expanded.len());
    }

    #[test]
    fn astar_prefers_cheap_detours() {
        let t = task_from(
            "(define (domain d) (:requirements :action-costs) (:predicates (m) (g)) (:functions (total-cost))
               (:action direct :effect (and (g) (increase (total-cost) 5)))
               (:action step :effect (and (m) (increase (total-cost) 1)))
               (:action finish :precondition (m) :effect (and (g) (increase (total-cost) 1))))",
            "(define (problem q) (:domain d) (:init (= (total-cost) 0)) (:goal (g)))",
        );
        let r = astar(&t, &Blind, Limits::default());
        assert_valid(&t, &r);
        assert!(matches!(r.outcome, Outcome::Plan { cost, .. } if cost == 2.0));
        // GBFS stops at the first generated goal.
        let r = gbfs(&t, &Blind, Limits::default());
        assert!(matches!(r.outcome, Outcome::Plan { cost, .. } if cost == 5.0));
    }

    #[test]
    fn zero_weight_learned_heuristic_is_zero() {
        let t = running_example_task();
        let g = crate::nilg::build_nilg(&t, &t.initial).unwrap();
        let ccwl = CcwlModel::fit(&[g], 1, crate::ccwl::Pooling::Sum);
        let model = LinearHeuristic {
            weights: vec![0.0; ccwl.feature_len()],
            bias: 0.0,
            method: crate::training::Method::Rank,
            objective: 0.0,
            iterations: 0,
            converged: true,
        };
        let h = LearnedHeuristic::new(ccwl, model);
        assert!(h.supports(&t).is_ok());
        assert_eq!(h.evaluate(&t, &t.initial), 0.0);
        assert_eq!(h.evaluate(&t, &t.initial), h.evaluate(&t, &t.initial));
    }
}
