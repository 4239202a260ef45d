use super::{LinearHeuristic, Method, RankingConstraintSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientSchedule {
    /// Step at iteration `t` is `eta0 / sqrt(t)`.
    pub eta0: f64,
    /// Stop once the best objective improved by less than this over `window` iterations.
    pub tolerance: f64,
    pub window: usize,
    pub max_iterations: usize,
}

impl Default for SubgradientSchedule {
    fn default() -> Self {
        SubgradientSchedule { eta0: 1.0, tolerance: 1e-6, window: 100, max_iterations: 50_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankSolver {
    /// Primal simplex on the slack formulation; exact up to rounding.
    #[default]
    Simplex,
    Subgradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankConfig {
    /// L1 weight.
    pub lambda: f64,
    pub solver: RankSolver,
    pub schedule: SubgradientSchedule,
    /// Tableaux above this many cells fall back to subgradient descent.
    pub max_tableau_cells: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            lambda: 0.01,
            solver: RankSolver::Simplex,
            schedule: SubgradientSchedule::default(),
            max_tableau_cells: 60_000_000,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hinge value of each constraint at `w`.
pub fn slacks(set: &RankingConstraintSet, w: &[f64]) -> Vec<f64> {
    set.constraints.iter().map(|c| (c.margin - dot(w, &c.dphi)).max(0.0)).collect()
}

/// `sum_c max(0, margin_c - w . dphi_c) + lambda |w|_1`.
pub fn hinge_objective(set: &RankingConstraintSet, w: &[f64], lambda: f64) -> f64 {
    slacks(set, w).iter().sum::<f64>() + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Returns the model and the slack of every constraint at the solution.
pub fn train_ranking(set: &RankingConstraintSet, config: &RankConfig) -> (LinearHeuristic, Vec<f64>) {
    debug_assert!(set.constraints.iter().all(|c| c.dphi.len() == set.dim));
    let m = set.len();
    let cells = m.saturating_mul(2 * set.dim + 2 * m + 1);
    let use_simplex = config.solver == RankSolver::Simplex && cells <= config.max_tableau_cells;
    if config.solver == RankSolver::Simplex && !use_simplex {
        log::warn!("{m} ranking constraints exceed the simplex size cap; using subgradient descent");
    }
    let (w, iterations, converged) = if m == 0 {
        (vec![0.0; set.dim], 0, true)
    } else if use_simplex {
        simplex(set, config.lambda)
    } else {
        subgradient(set, config.lambda, &config.schedule)
    };
    if !converged {
        log::warn!("ranking solver stopped at its iteration cap");
    }
    let slack = slacks(set, &w);
    let model = LinearHeuristic {
        objective: hinge_objective(set, &w, config.lambda),
        weights: w,
        bias: 0.0,
        method: Method::Rank,
        iterations,
        converged,
    };
    (model, slack)
}

/// Best iterate of subgradient descent with step `eta0 / sqrt(t)`.
pub(super) fn subgradient(
    set: &RankingConstraintSet,
    lambda: f64,
    sched: &SubgradientSchedule,
) -> (Vec<f64>, usize, bool) {
    let dim = set.dim;
    let mut w = vec![0.0; dim];
    let mut best_w = w.clone();
    let mut best = hinge_objective(set, &w, lambda);
    let mut reference = best;
    let mut since = 0;
    let mut g = vec![0.0; dim];
    for t in 1..=sched.max_iterations {
        g.iter_mut().zip(&w).for_each(|(gi, wi)| {
            *gi = if *wi > 0.0 {
                lambda
            } else if *wi < 0.0 {
                -lambda
            } else {
                0.0
            }
        });
        for c in &set.constraints {
            if c.margin - dot(&w, &c.dphi) > 0.0 {
                g.iter_mut().zip(&c.dphi).for_each(|(gi, d)| *gi -= d);
            }
        }
        let step = sched.eta0 / (t as f64).sqrt();
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= step * gi);
        let f = hinge_objective(set, &w, lambda);
        if f < best {
            best = f;
            best_w.copy_from_slice(&w);
        }
        since += 1;
        if reference - best >= sched.tolerance {
            reference = best;
            since = 0;
        } else if since >= sched.window {
            return (best_w, t, true);
        }
    }
    (best_w, sched.max_iterations, false)
}

const EPS: f64 = 1e-11;

/// Dense primal simplex on
/// `min sum z + lambda sum (u + v)` s.t. `dphi . (u - v) + z - s = margin`,
/// all variables non-negative. Each row starts with `z` basic, or `s` when
/// its margin is negative, which is a feasible basis.
fn simplex(set: &RankingConstraintSet, lambda: f64) -> (Vec<f64>, usize, bool) {
    let m = set.len();
    let p = set.dim;
    let n = 2 * p + 2 * m;
    let width = n + 1;
    let z0 = 2 * p;
    let s0 = 2 * p + m;
    let mut cost = vec![lambda; n];
    cost[z0..s0].iter_mut().for_each(|c| *c = 1.0);
    cost[s0..].iter_mut().for_each(|c| *c = 0.0);

    let mut tab = vec![0.0; m * width];
    let mut basis: Vec<usize> = (0..m).map(|i| z0 + i).collect();
    for (i, c) in set.constraints.iter().enumerate() {
        let row = &mut tab[i * width..(i + 1) * width];
        let sign = if c.margin < 0.0 { -1.0 } else { 1.0 };
        for k in 0..p {
            row[k] = sign * c.dphi[k];
            row[p + k] = -sign * c.dphi[k];
        }
        row[z0 + i] = sign;
        row[s0 + i] = -sign;
        row[n] = sign * c.margin;
        if c.margin < 0.0 {
            basis[i] = s0 + i;
        }
    }
    // Reduced costs: r_j = c_j - c_B . column_j.
    let mut reduced = cost.clone();
    for i in 0..m {
        let cb = cost[basis[i]];
        if cb != 0.0 {
            let row = &tab[i * width..(i + 1) * width];
            for j in 0..n {
                reduced[j] -= cb * row[j];
            }
        }
    }

    let max_pivots = 50 * (m + n) + 1000;
    let mut degenerate_run = 0usize;
    let mut pivots = 0;
    let mut converged = false;
    while pivots < max_pivots {
        let bland = degenerate_run > 50;
        let entering = if bland {
            (0..n).find(|&j| reduced[j] < -EPS)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for (j, &r) in reduced.iter().enumerate() {
                if r < -EPS && best.is_none_or(|(_, b)| r < b) {
                    best = Some((j, r));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(e) = entering else {
            converged = true;
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab[i * width + e];
            if a > EPS {
                let ratio = tab[i * width + n] / a;
                let better = match leave {
                    None => true,
                    Some((l, r)) => ratio < r - EPS || (ratio <= r + EPS && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // The objective is bounded below by zero, so some row always leaves.
        let Some((l, ratio)) = leave else {
            converged = true;
            break;
        };
        degenerate_run = if ratio.abs() <= EPS { degenerate_run + 1 } else { 0 };
        pivot(&mut tab, width, l, e, &mut reduced);
        basis[l] = e;
        pivots += 1;
    }
    let mut w = vec![0.0; p];
    for i in 0..m {
        let b = basis[i];
        let x = tab[i * width + n];
        if b < p {
            w[b] += x;
        } else if b < 2 * p {
            w[b - p] -= x;
        }
    }
    (w, pivots, converged)
}

fn pivot(tab: &mut [f64], width: usize, l: usize, e: usize, reduced: &mut [f64]) {
    let inv = 1.0 / tab[l * width + e];
    for v in &mut tab[l * width..(l + 1) * width] {
        *v *= inv;
    }
    tab[l * width + e] = 1.0;
    let (before, rest) = tab.split_at_mut(l * width);
    let (prow, after) = rest.split_at_mut(width);
    for row in before.chunks_exact_mut(width).chain(after.chunks_exact_mut(width)) {
        let f = row[e];
        if f != 0.0 {
            for (x, y) in row.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            row[e] = 0.0;
        }
    }
    let f = reduced[e];
    if f != 0.0 {
        for (x, y) in reduced.iter_mut().zip(prow.iter()) {
            *x -= f * y;
        }
        reduced[e] = 0.0;
    }
}
