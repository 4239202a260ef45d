use proptest::prelude::*;
use proptest::strategy::ValueTree;

use super::rank::{slacks, subgradient};
use super::*;
use crate::fixtures::*;
use crate::nilg::{build_nilg, CatFeature, PropStatus};
use crate::pddl::{parse_domain, parse_problem};
use crate::task::{ground, parse_plan};

fn task_from(domain: &str, problem: &str) -> GroundTask {
    let d = parse_domain(domain).unwrap();
    ground(&d, &parse_problem(problem, &d).unwrap()).unwrap()
}

fn running_instance() -> TrainingInstance {
    let task = running_example_task();
    let plan = parse_plan(RUNNING_EXAMPLE_PLAN).unwrap();
    let trace = PlanTrace::from_plan(&task, &plan).unwrap();
    TrainingInstance { task, trace }
}

#[test]
fn trace_targets_count_down() {
    let inst = running_instance();
    assert_eq!(inst.trace.states.len(), 17);
    let expected: Vec<f64> = (0..=16).rev().map(f64::from).collect();
    assert_eq!(inst.trace.cost_to_go, expected);
}

#[test]
fn empty_plan_gives_single_state_trace() {
    let t =
        task_from("(define (domain d) (:predicates (p)))", "(define (problem q) (:domain d) (:init (p)) (:goal (p)))");
    let trace = PlanTrace::from_plan::<&str>(&t, &[]).unwrap();
    assert_eq!(trace.states.len(), 1);
    assert_eq!(trace.cost_to_go, [0.0]);
}

#[test]
fn invalid_plan_is_rejected_with_its_step() {
    let t = running_example_task();
    let plan = parse_plan(RUNNING_EXAMPLE_UNCAPACITATED_PLAN).unwrap();
    assert!(matches!(PlanTrace::from_plan(&t, &plan), Err(TrainingError::InvalidPlan { step: 4, .. })));
}

#[test]
fn cost_dataset_rows() {
    let inst = running_instance();
    let instances = vec![inst.clone(), inst];
    let graphs = training_graphs(&instances[..1], false).unwrap();
    let ccwl = CcwlModel::fit(&graphs, 1, Pooling::Sum);
    let data = build_cost_dataset(&instances, &ccwl).unwrap();
    assert_eq!(data.len(), 34);
    assert!(data.features.iter().all(|x| x.len() == ccwl.feature_len()));
    assert_eq!(data.targets[16], 0.0);
    let goal = build_nilg(&instances[0].task, instances[0].trace.states.last().unwrap()).unwrap();
    assert!(!goal
        .cats()
        .iter()
        .any(|c| matches!(c, CatFeature::Pred(_, PropStatus::UnachievedGoal) | CatFeature::Comp(_, false))));
    let csv = data.to_csv(ccwl.feature_len());
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("feature_0,") && header.ends_with(",target"));
    assert_eq!(csv.lines().count(), 35);
}

#[test]
fn ranking_constraints_on_running_example() {
    let inst = running_instance();
    let instances = [inst];
    let ccwl = CcwlModel::fit(&training_graphs(&instances, true).unwrap(), 1, Pooling::Sum);
    let set = build_ranking_constraints(&instances, &ccwl).unwrap();
    let step1: Vec<_> = set.constraints.iter().filter(|c| c.j == 1).collect();
    assert_eq!(step1.len(), 3);
    assert_eq!(step1[0].kind, ConstraintKind::Parent);
    assert_eq!((step1[0].k, step1[0].margin), (0, 1.0));
    assert!(step1[1..].iter().all(|c| c.kind == ConstraintKind::Sibling && c.margin == 0.0));
    assert_eq!(set.constraints.iter().filter(|c| c.kind == ConstraintKind::Parent).count(), 16);
    assert!(set.constraints.iter().all(|c| c.dphi.len() == ccwl.feature_len()));
    let csv = set.to_csv();
    assert!(csv.starts_with("kind,i,j,k,margin,dphi_0,"));
    assert!(csv.lines().nth(1).unwrap().starts_with("parent,0,1,0,1,"));
}

const TOGGLE: &str = "(define (domain d) (:predicates (p) (q))
    (:action a :precondition (not (p)) :effect (p))
    (:action b :precondition (not (p)) :effect (p))
    (:action c :precondition (not (q)) :effect (q)))";

#[test]
fn siblings_are_distinct_states() {
    let t = task_from(TOGGLE, "(define (problem x) (:domain d) (:init) (:goal (and (p) (q))))");
    let a = t.action_by_name("(a)").unwrap();
    let c = t.action_by_name("(c)").unwrap();
    let trace = PlanTrace::from_action_ids(&t, &[a, c]).unwrap();
    // (b) reaches the same state as (a), so only (c)'s successor remains.
    assert_eq!(siblings(&t, &trace, 1).len(), 1);
    // From {p}, only (c) applies.
    assert!(siblings(&t, &trace, 2).is_empty());
}

#[test]
fn ridge_examples() {
    let exact = CostConfig { lambda: 0.0, ..CostConfig::default() };
    let data = CostDataset { features: vec![vec![1.0], vec![2.0]], targets: vec![2.0, 4.0] };
    let m = train_cost_to_go(&data, &exact).unwrap();
    assert!((m.weights[0] - 2.0).abs() < 1e-6 && m.bias.abs() < 1e-6);

    let zeros = CostDataset { features: vec![vec![1.0, 3.0], vec![2.0, 0.0]], targets: vec![0.0, 0.0] };
    let m = train_cost_to_go(&zeros, &CostConfig::default()).unwrap();
    assert!(m.weights.iter().all(|w| *w == 0.0) && m.bias == 0.0);

    let single = CostDataset { features: vec![vec![3.0, 1.0]], targets: vec![7.0] };
    let m = train_cost_to_go(&single, &exact).unwrap();
    assert!((m.score(&single.features[0]) - 7.0).abs() < 1e-6);

    assert_eq!(train_cost_to_go(&CostDataset::default(), &exact), Err(TrainingError::EmptyDataset));
}

#[test]
fn epsilon_insensitive_fit_is_close() {
    let features: Vec<Vec<f64>> = (0..8).map(|i| vec![f64::from(i)]).collect();
    let targets: Vec<f64> = (0..8).map(|i| 3.0 * f64::from(i) + 1.0).collect();
    let data = CostDataset { features, targets };
    let config = CostConfig { lambda: 0.0, loss: CostLoss::EpsilonInsensitive(0.1), ..CostConfig::default() };
    let m = train_cost_to_go(&data, &config).unwrap();
    assert!(m.objective < 0.05, "objective {}", m.objective);
    assert!((m.weights[0] - 3.0).abs() < 0.1);
}

proptest! {
    #[test]
    fn ridge_solves_normal_equations(
        rows in prop::collection::vec((prop::collection::vec(-3i32..4, 3), -5i32..6), 1..12),
        lambda in prop_oneof![Just(1e-4), Just(0.1), Just(1.0)],
    ) {
        let data = CostDataset {
            features: rows.iter().map(|(x, _)| x.iter().map(|&v| f64::from(v)).collect()).collect(),
            targets: rows.iter().map(|(_, y)| f64::from(*y)).collect(),
        };
        let m = train_cost_to_go(&data, &CostConfig { lambda, ..CostConfig::default() }).unwrap();
        let n = data.len() as f64;
        // Gradient of the objective vanishes at the optimum.
        let residuals: Vec<f64> = data.features.iter().zip(&data.targets).map(|(x, y)| m.score(x) - y).collect();
        for k in 0..3 {
            let g: f64 = data.features.iter().zip(&residuals).map(|(x, r)| x[k] * r).sum::<f64>() / n
                + lambda * m.weights[k];
            prop_assert!(g.abs() < 1e-8, "gradient {g}");
        }
        prop_assert!((residuals.iter().sum::<f64>() / n).abs() < 1e-8);
    }
}

fn set_of(dim: usize, rows: &[(ConstraintKind, f64, Vec<f64>)]) -> RankingConstraintSet {
    let mut set = RankingConstraintSet::new(dim);
    for (k, m, d) in rows {
        set.push(*k, *m, d.clone());
    }
    set
}

#[test]
fn ranking_examples() {
    let config = RankConfig::default();
    let one = set_of(1, &[(ConstraintKind::Parent, 1.0, vec![1.0])]);
    let (m, slack) = train_ranking(&one, &config);
    assert!((m.weights[0] - 1.0).abs() < 1e-9);
    assert!((m.objective - 0.01).abs() < 1e-9);
    assert!(slack[0].abs() < 1e-9);
    assert_eq!(m.bias, 0.0);

    let (m, slack) = train_ranking(&RankingConstraintSet::new(2), &config);
    assert_eq!((m.weights, m.objective, slack.len()), (vec![0.0, 0.0], 0.0, 0));

    let stuck = set_of(1, &[(ConstraintKind::Parent, 1.0, vec![0.0])]);
    let (m, slack) = train_ranking(&stuck, &config);
    assert_eq!((m.weights[0], slack[0], m.objective), (0.0, 1.0, 1.0));

    let sub = RankConfig { solver: RankSolver::Subgradient, ..config };
    let (m, _) = train_ranking(&one, &sub);
    assert!((m.objective - 0.01).abs() < 1e-2);
}

#[test]
fn best_iterate_never_gets_worse() {
    let set = set_of(
        2,
        &[
            (ConstraintKind::Parent, 1.0, vec![1.0, -1.0]),
            (ConstraintKind::Sibling, 0.0, vec![-1.0, 2.0]),
            (ConstraintKind::Parent, 2.0, vec![0.0, 1.0]),
        ],
    );
    let mut last = f64::INFINITY;
    for cap in [1, 2, 5, 10, 50, 200, 1000] {
        let sched = SubgradientSchedule { max_iterations: cap, window: usize::MAX, ..Default::default() };
        let (w, _, _) = subgradient(&set, 0.01, &sched);
        let f = hinge_objective(&set, &w, 0.01);
        assert!(f <= last);
        last = f;
    }
}

#[test]
fn larger_l1_weight_keeps_weights_sparse() {
    let set = set_of(
        3,
        &[
            (ConstraintKind::Parent, 1.0, vec![1.0, 1.0, 0.0]),
            (ConstraintKind::Parent, 1.0, vec![0.0, 2.0, 1.0]),
            (ConstraintKind::Sibling, 0.0, vec![-1.0, 1.0, 1.0]),
            (ConstraintKind::Parent, 1.0, vec![3.0, 0.0, -1.0]),
        ],
    );
    let mut zeros = 0;
    for lambda in [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0] {
        let (m, _) = train_ranking(&set, &RankConfig { lambda, ..Default::default() });
        let z = m.weights.iter().filter(|w| w.abs() < 1e-12).count();
        assert!(z >= zeros, "lambda {lambda}: {z} zeros after {zeros}");
        zeros = z;
    }
    assert_eq!(zeros, 3);
}

/// Minimum of `c . x` over `A x = b, x >= 0` by trying every basis.
fn vertex_enumeration(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let m = a.len();
    let n = c.len();
    let mut best = f64::INFINITY;
    let mut cols: Vec<usize> = (0..m).collect();
    loop {
        if let Some(x) = solve_square(a, b, &cols) {
            if x.iter().all(|v| *v >= -1e-9) {
                best = best.min(cols.iter().zip(&x).map(|(&j, v)| c[j] * v).sum());
            }
        }
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if cols[i] < n - m + i {
                cols[i] += 1;
                for k in i + 1..m {
                    cols[k] = cols[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(a: &[Vec<f64>], b: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut mat: Vec<Vec<f64>> = (0..m).map(|r| cols.iter().map(|&j| a[r][j]).chain([b[r]]).collect()).collect();
    for k in 0..m {
        let piv = (k..m).max_by(|&x, &y| mat[x][k].abs().total_cmp(&mat[y][k].abs()))?;
        if mat[piv][k].abs() < 1e-12 {
            return None;
        }
        mat.swap(k, piv);
        let pivot = mat[k].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != k {
                let f = row[k] / pivot[k];
                for (x, p) in row[k..].iter_mut().zip(&pivot[k..]) {
                    *x -= f * p;
                }
            }
        }
    }
    Some((0..m).map(|k| mat[k][m] / mat[k][k]).collect())
}

/// Slack LP with `w = u - v`: variables `(u, v, z, s)`.
fn lp_oracle(set: &RankingConstraintSet, lambda: f64) -> f64 {
    let (m, p) = (set.len(), set.dim);
    if m == 0 {
        return 0.0;
    }
    let n = 2 * p + 2 * m;
    let mut a = vec![vec![0.0; n]; m];
    for (i, con) in set.constraints.iter().enumerate() {
        for k in 0..p {
            a[i][k] = con.dphi[k];
            a[i][p + k] = -con.dphi[k];
        }
        a[i][2 * p + i] = 1.0;
        a[i][2 * p + m + i] = -1.0;
    }
    let b: Vec<f64> = set.constraints.iter().map(|c| c.margin).collect();
    let mut c = vec![lambda; 2 * p];
    c.extend(vec![1.0; m]);
    c.extend(vec![0.0; m]);
    vertex_enumeration(&a, &b, &c)
}

fn tiny_set() -> impl Strategy<Value = RankingConstraintSet> {
    (1usize..=3).prop_flat_map(|dim| {
        prop::collection::vec((any::<bool>(), 1i32..4, prop::collection::vec(-3i32..4, dim)), 0..=5).prop_map(
            move |rows| {
                let mut set = RankingConstraintSet::new(dim);
                for (parent, margin, d) in rows {
                    let dphi = d.into_iter().map(f64::from).collect();
                    if parent {
                        set.push(ConstraintKind::Parent, f64::from(margin), dphi);
                    } else {
                        set.push(ConstraintKind::Sibling, 0.0, dphi);
                    }
                }
                set
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn simplex_matches_vertex_enumeration(set in tiny_set(), lambda in prop_oneof![Just(0.0), Just(0.01), Just(0.5)]) {
        let (m, slack) = train_ranking(&set, &RankConfig { lambda, ..Default::default() });
        let exact = lp_oracle(&set, lambda);
        prop_assert!((m.objective - exact).abs() < 1e-9, "{} vs {}", m.objective, exact);
        prop_assert_eq!(slack, slacks(&set, &m.weights));
    }

    #[test]
    fn hinge_sum_equals_optimal_slacks(set in tiny_set(), w in prop::collection::vec(-2.0f64..2.0, 3)) {
        let w = &w[..set.dim];
        // Slack-only LP at fixed w: z - s = margin - w . dphi.
        let m = set.len();
        let mut a = vec![vec![0.0; 2 * m]; m];
        for i in 0..m {
            a[i][i] = 1.0;
            a[i][m + i] = -1.0;
        }
        let b: Vec<f64> = set
            .constraints
            .iter()
            .map(|c| c.margin - c.dphi.iter().zip(w).map(|(d, x)| d * x).sum::<f64>())
            .collect();
        let mut c = vec![1.0; m];
        c.extend(vec![0.0; m]);
        let lp = if m == 0 { 0.0 } else { vertex_enumeration(&a, &b, &c) };
        let hinge = hinge_objective(&set, w, 0.0);
        prop_assert!((lp - hinge).abs() < 1e-10);
    }

    #[test]
    fn zero_slack_models_rank_consistently(set in tiny_set()) {
        let (m, slack) = train_ranking(&set, &RankConfig::default());
        let l1: f64 = m.weights.iter().map(|w| w.abs()).sum();
        if m.objective < 0.01 * l1 + 1e-6 {
            for (c, z) in set.constraints.iter().zip(&slack) {
                prop_assert!(*z < 1e-9);
                let score: f64 = c.dphi.iter().zip(&m.weights).map(|(d, w)| d * w).sum();
                prop_assert!(score >= c.margin - 1e-9);
            }
        }
    }
}

#[test]
fn subgradient_gap_on_tiny_sets() {
    // Reports how close the plain subgradient method gets; the simplex is the default.
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let set = tiny_set().new_tree(&mut runner).unwrap().current();
        let (w, _, _) = subgradient(&set, 0.01, &SubgradientSchedule::default());
        worst = worst.max(hinge_objective(&set, &w, 0.01) - lp_oracle(&set, 0.01));
    }
    eprintln!("subgradient worst gap: {worst:e}");
    assert!(worst >= -1e-9);
}

#[test]
fn train_pipeline_runs_both_methods() {
    let instances = [running_instance()];
    for method in [Method::Cost, Method::Rank] {
        let config = TrainConfig { method, ..TrainConfig::default() };
        let (ccwl, model) = train(&instances, &config).unwrap();
        assert_eq!(model.weights.len(), ccwl.feature_len());
        assert_eq!(model.method, method);
    }
    assert!(matches!(train(&[], &TrainConfig::default()), Err(TrainingError::EmptyDataset)));
}
