use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};
use crate::seed::rng;

/// Stopping rule of the dual solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Largest projected-gradient magnitude accepted at convergence.
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: 1e-4,
            max_epochs: 10_000,
        }
    }
}

/// Result of the dual coordinate ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    pub converged: bool,
    /// Dual objective after each epoch.
    pub dual_trace: Vec<f64>,
}

fn check_labels(x: &Mat, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::arg(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::arg("labels must be +1 or -1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::arg("both classes must be present"));
    }
    Ok(())
}

/// Dual objective `sum(alpha) - |w|^2 / 2` of the bias-augmented problem.
pub fn dual_objective(alpha: &[f64], weights: &[f64], bias: f64) -> f64 {
    alpha.iter().sum::<f64>() - 0.5 * (dot(weights, weights) + bias * bias)
}

/// Primal objective `|w|^2 / 2 + C sum(hinge)` of the bias-augmented
/// problem.
pub fn primal_objective(x: &Mat, y: &[f64], c: f64, weights: &[f64], bias: f64) -> f64 {
    let hinge: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(r, &yi)| (1.0 - yi * (dot(weights, r) + bias)).max(0.0))
        .sum();
    0.5 * (dot(weights, weights) + bias * bias) + c * hinge
}

/// Solves the L1-hinge soft-margin SVM dual by coordinate ascent.
///
/// The bias is learned as the weight of an implicit constant feature, so
/// the dual has box constraints only. Each step maximizes the dual exactly
/// in one coordinate and clips to `[0, C]`; coordinates are visited in a
/// fresh seeded permutation every epoch. Variables stuck at a bound are
/// temporarily shrunk away; convergence is only declared after a full,
/// unshrunk pass whose largest projected gradient is below the tolerance.
pub fn solve_dual(x: &Mat, y: &[f64], c: f64, seed: u64, params: &SolverParams) -> Result<DualSolution> {
    solve_dual_from(x, y, c, seed, params, None)
}

/// As [`solve_dual`], starting from `initial` multipliers (clipped to
/// `[0, C]`), e.g. the solution for a smaller C.
pub fn solve_dual_from(
    x: &Mat,
    y: &[f64],
    c: f64,
    seed: u64,
    params: &SolverParams,
    initial: Option<&[f64]>,
) -> Result<DualSolution> {
    check_labels(x, y)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::arg(format!("C must be positive, got {c}")));
    }
    let n = x.rows();
    let q_diag: Vec<f64> = x.iter_rows().map(|r| dot(r, r) + 1.0).collect();
    let mut alpha = match initial {
        Some(a) if a.len() == n => a.iter().map(|v| v.clamp(0.0, c)).collect(),
        Some(_) => return Err(Error::arg("initial multipliers have the wrong length")),
        None => vec![0.0; n],
    };
    let mut w = vec![0.0; x.cols()];
    let mut b = 0.0;
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            w.iter_mut().zip(x.row(i)).for_each(|(wj, xj)| *wj += a * y[i] * xj);
            b += a * y[i];
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut active_len = n;
    let (mut pg_max_old, mut pg_min_old) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rng = rng(seed);
    let mut dual_trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;
    while epochs < params.max_epochs {
        epochs += 1;
        let full_pass = active_len == n;
        active[..active_len].shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut s = 0;
        while s < active_len {
            let i = active[s];
            let xi = x.row(i);
            let g = y[i] * (dot(&w, xi) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                if g > pg_max_old {
                    active_len -= 1;
                    active.swap(s, active_len);
                    continue;
                }
                g.min(0.0)
            } else if alpha[i] >= c {
                if g < pg_min_old {
                    active_len -= 1;
                    active.swap(s, active_len);
                    continue;
                }
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                if step != 0.0 {
                    w.iter_mut().zip(xi).for_each(|(wj, xj)| *wj += step * xj);
                    b += step;
                }
            }
            s += 1;
        }
        dual_trace.push(dual_objective(&alpha, &w, b));
        let violation = pg_max.abs().max(pg_min.abs());
        if violation < params.tolerance || active_len == 0 {
            if full_pass && active_len == n {
                converged = true;
                break;
            }
            active_len = n;
            pg_max_old = f64::INFINITY;
            pg_min_old = f64::NEG_INFINITY;
            continue;
        }
        pg_max_old = if pg_max > 0.0 { pg_max } else { f64::INFINITY };
        pg_min_old = if pg_min < 0.0 { pg_min } else { f64::NEG_INFINITY };
    }
    Ok(DualSolution {
        alpha,
        weights: w,
        bias: b,
        epochs,
        converged,
        dual_trace,
    })
}
