use nalgebra::{DMatrix, DVector};

use super::{CostDataset, LinearHeuristic, Method, SubgradientSchedule, TrainingError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostLoss {
    Squared,
    EpsilonInsensitive(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig {
    /// Weight of the squared norm of `w`; the bias is not regularized.
    pub lambda: f64,
    pub loss: CostLoss,
    pub schedule: SubgradientSchedule,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig { lambda: 1e-4, loss: CostLoss::Squared, schedule: SubgradientSchedule::default() }
    }
}

fn check(data: &CostDataset) -> Result<usize, TrainingError> {
    let Some(first) = data.features.first() else {
        return Err(TrainingError::EmptyDataset);
    };
    let dim = first.len();
    if data.features.iter().any(|x| x.len() != dim) || data.features.len() != data.targets.len() {
        return Err(TrainingError::DimensionMismatch);
    }
    Ok(dim)
}

fn predict(w: &[f64], b: f64, x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b
}

fn objective(data: &CostDataset, w: &[f64], b: f64, config: &CostConfig) -> f64 {
    let n = data.len() as f64;
    let loss: f64 = data
        .features
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| {
            let r = y - predict(w, b, x);
            match config.loss {
                CostLoss::Squared => r * r,
                CostLoss::EpsilonInsensitive(eps) => (r.abs() - eps).max(0.0),
            }
        })
        .sum();
    loss / n + config.lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Minimizes `(1/N) sum loss(h* - w.phi - b) + lambda |w|^2` over the rows.
pub fn train_cost_to_go(data: &CostDataset, config: &CostConfig) -> Result<LinearHeuristic, TrainingError> {
    let dim = check(data)?;
    let (weights, bias, iterations, converged) = match config.loss {
        CostLoss::Squared => {
            let (w, b) = ridge(data, dim, config.lambda);
            (w, b, 1, true)
        }
        CostLoss::EpsilonInsensitive(eps) => epsilon_descent(data, dim, eps, config),
    };
    Ok(LinearHeuristic {
        objective: objective(data, &weights, bias, config),
        weights,
        bias,
        method: Method::Cost,
        iterations,
        converged,
    })
}

/// Solves `(A^T A + N lambda D) theta = A^T y` with `A = [X | 1]` and `D`
/// the identity without its bias entry.
fn ridge(data: &CostDataset, dim: usize, lambda: f64) -> (Vec<f64>, f64) {
    let n = data.len();
    let a = DMatrix::from_fn(n, dim + 1, |r, c| if c < dim { data.features[r][c] } else { 1.0 });
    let y = DVector::from_column_slice(&data.targets);
    let mut lhs = a.transpose() * &a;
    for i in 0..dim {
        lhs[(i, i)] += n as f64 * lambda;
    }
    let rhs = a.transpose() * y;
    let theta = match lhs.clone().cholesky() {
        Some(ch) if lambda > 0.0 => ch.solve(&rhs),
        _ => {
            // Minimum-norm solution when the system is singular.
            let svd = lhs.svd(true, true);
            svd.solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(dim + 1))
        }
    };
    (theta.as_slice()[..dim].to_vec(), theta[dim])
}

fn epsilon_descent(data: &CostDataset, dim: usize, eps: f64, config: &CostConfig) -> (Vec<f64>, f64, usize, bool) {
    let n = data.len() as f64;
    let sched = &config.schedule;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (w.clone(), b, objective(data, &w, b, config));
    let mut last_improvement = best.2;
    let mut since = 0;
    let mut g = vec![0.0; dim];
    for t in 1..=sched.max_iterations {
        g.iter_mut().zip(&w).for_each(|(gi, wi)| *gi = 2.0 * config.lambda * wi);
        let mut gb = 0.0;
        for (x, y) in data.features.iter().zip(&data.targets) {
            let r = y - predict(&w, b, x);
            if r.abs() > eps {
                let s = -r.signum() / n;
                g.iter_mut().zip(x).for_each(|(gi, xi)| *gi += s * xi);
                gb += s;
            }
        }
        let step = sched.eta0 / (t as f64).sqrt();
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= step * gi);
        b -= step * gb;
        let f = objective(data, &w, b, config);
        if f < best.2 {
            best = (w.clone(), b, f);
        }
        since += 1;
        if last_improvement - best.2 >= sched.tolerance {
            last_improvement = best.2;
            since = 0;
        } else if since >= sched.window {
            return (best.0, best.1, t, true);
        }
    }
    (best.0, best.1, sched.max_iterations, false)
}
