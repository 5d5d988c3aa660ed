//! One-against-all linear SVMs with sigmoid-calibrated confidences and a
//! reject option.

mod dual;
mod platt;

pub use dual::{
    dual_objective, primal_objective, solve_dual, solve_dual_from, DualSolution, SolverParams,
};
pub use platt::{platt_calibrate, platt_nll, sigmoid_probability, PlattFit, MIN_SLOPE};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Emotion;
use crate::error::{Error, Result};
use crate::matrix::{dot, Mat};
use crate::seed::{derive_seed, rng};

/// Powers of two from 2^-5 to 2^5.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=5).map(|e| 2f64.powi(e)).collect()
}

/// A trained binary machine with its calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    /// False when the solver stopped at its epoch limit.
    pub converged: bool,
    /// True when the calibration slope was clamped.
    pub platt_clamped: bool,
}

impl BinarySvm {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid_probability(self.platt_a, self.platt_b, self.margin(x))
    }
}

/// Trains an uncalibrated machine (`platt_a = -1`, `platt_b = 0`).
pub fn train_binary(x: &Mat, y: &[f64], c: f64, seed: u64, params: &SolverParams) -> Result<BinarySvm> {
    let sol = solve_dual(x, y, c, seed, params)?;
    if !sol.converged {
        log::warn!("SVM solver hit {} epochs at C={c} without converging", sol.epochs);
    }
    Ok(BinarySvm {
        weights: sol.weights,
        bias: sol.bias,
        c,
        platt_a: -1.0,
        platt_b: 0.0,
        converged: sol.converged,
        platt_clamped: false,
    })
}

/// Assigns each row to one of `folds` inner folds, keeping rows that share
/// a group together and dealing groups of each label round-robin after a
/// seeded shuffle.
pub fn grouped_folds(y: &[f64], groups: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if groups.len() != y.len() {
        return Err(Error::arg("one group per row required"));
    }
    if folds < 2 {
        return Err(Error::arg("at least two folds required"));
    }
    let mut first_label: std::collections::BTreeMap<usize, f64> = Default::default();
    for (&g, &label) in groups.iter().zip(y) {
        let l = *first_label.entry(g).or_insert(label);
        if l != label {
            return Err(Error::arg(format!("group {g} mixes labels")));
        }
    }
    let mut rng = rng(seed);
    let mut fold_of_group = std::collections::BTreeMap::new();
    let mut next = 0;
    for target in [1.0, -1.0] {
        let mut members: Vec<usize> = first_label
            .iter()
            .filter(|(_, &l)| l == target)
            .map(|(&g, _)| g)
            .collect();
        if members.len() < 2 {
            return Err(Error::arg("each label needs at least two distinct samples"));
        }
        members.shuffle(&mut rng);
        for g in members {
            fold_of_group.insert(g, next % folds);
            next += 1;
        }
    }
    Ok(groups.iter().map(|g| fold_of_group[g]).collect())
}

/// Outcome of the inner cross-validated search over C.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best_c: f64,
    /// Mean inner-fold accuracy for each grid value.
    pub scores: Vec<f64>,
    /// Held-out margins of every training row under the chosen C.
    pub oof_margins: Vec<f64>,
    /// Inner fold of every training row.
    pub assignment: Vec<usize>,
}

/// Picks the C with the best mean inner-fold accuracy; ties go to the
/// smaller C.
pub fn grid_search_c(
    x: &Mat,
    y: &[f64],
    groups: &[usize],
    grid: &[f64],
    folds: usize,
    seed: u64,
    params: &SolverParams,
) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::arg("empty C grid"));
    }
    let mut grid_sorted = grid.to_vec();
    grid_sorted.sort_by(f64::total_cmp);
    let assignment = grouped_folds(y, groups, folds, derive_seed(seed, &[0]))?;
    let mut acc_sum = vec![0.0; grid_sorted.len()];
    let mut margins = vec![vec![0.0; y.len()]; grid_sorted.len()];
    let mut used = 0;
    for f in 0..folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == f).collect();
        if test.is_empty() {
            continue;
        }
        used += 1;
        let tx = x.select_rows(&train);
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let mut warm: Option<Vec<f64>> = None;
        for (ci, &c) in grid_sorted.iter().enumerate() {
            let sol = solve_dual_from(&tx, &ty, c, derive_seed(seed, &[1, ci as u64, f as u64]), params, warm.as_deref())?;
            let mut correct = 0;
            for &i in &test {
                let m = dot(&sol.weights, x.row(i)) + sol.bias;
                margins[ci][i] = m;
                if (m >= 0.0) == (y[i] > 0.0) {
                    correct += 1;
                }
            }
            acc_sum[ci] += correct as f64 / test.len() as f64;
            warm = Some(sol.alpha);
        }
    }
    let mut scores = vec![0.0; grid.len()];
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for (ci, (&c, m)) in grid_sorted.iter().zip(margins).enumerate() {
        let score = acc_sum[ci] / used as f64;
        for (slot, &g) in grid.iter().enumerate() {
            if g == c {
                scores[slot] = score;
            }
        }
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, c, m));
        }
    }
    let (_, best_c, oof_margins) = best.unwrap();
    Ok(GridOutcome {
        best_c,
        scores,
        oof_margins,
        assignment,
    })
}

/// Settings for one-against-all training.
#[derive(Debug, Clone, PartialEq)]
pub struct OvaTrainConfig {
    pub c_grid: Vec<f64>,
    pub inner_folds: usize,
    pub solver: SolverParams,
}

impl Default for OvaTrainConfig {
    fn default() -> Self {
        OvaTrainConfig {
            c_grid: default_c_grid(),
            inner_folds: 5,
            solver: SolverParams::default(),
        }
    }
}

/// Classifier output for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Class(usize),
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    /// Normalized class confidences in the model's class order.
    pub probs: Vec<f64>,
    pub decision: Decision,
}

impl Posterior {
    /// Class indices by decreasing confidence, ties in class order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probs.len()).collect();
        idx.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        idx
    }

    /// Re-applies the thresholding rule at another threshold.
    pub fn decide(&self, theta: f64) -> Decision {
        decide(&self.probs, theta)
    }
}

fn decide(probs: &[f64], theta: f64) -> Decision {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    if probs[best] >= theta {
        Decision::Class(best)
    } else {
        Decision::Reject
    }
}

/// One binary machine per emotion, in the corpus' class order.
#[derive(Debug, Clone, PartialEq)]
pub struct OvaSvmModel {
    pub emotions: Vec<Emotion>,
    pub machines: Vec<BinarySvm>,
    pub reject_threshold: f64,
}

impl OvaSvmModel {
    pub fn dims(&self) -> usize {
        self.machines.first().map_or(0, |m| m.weights.len())
    }

    pub fn predict(&self, x: &[f64]) -> Posterior {
        self.predict_with_threshold(x, self.reject_threshold)
    }

    /// Per-class sigmoid confidences normalized to sum to one; the argmax
    /// is emitted when it reaches `theta`, otherwise the sample is
    /// rejected.
    pub fn predict_with_threshold(&self, x: &[f64], theta: f64) -> Posterior {
        let raw: Vec<f64> = self.machines.iter().map(|m| m.probability(x)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = if total > 0.0 {
            raw.iter().map(|p| p / total).collect()
        } else {
            vec![1.0 / raw.len() as f64; raw.len()]
        };
        let decision = decide(&probs, theta);
        Posterior { probs, decision }
    }
}

/// Trains one calibrated machine per class.
///
/// `labels` are class indices into `emotions`; rows sharing a `groups` id
/// (duplicates from oversampling) stay in the same inner fold. Calibration
/// uses the held-out margins from the chosen C's inner folds.
pub fn train_ova(
    x: &Mat,
    labels: &[usize],
    groups: &[usize],
    emotions: &[Emotion],
    cfg: &OvaTrainConfig,
    seed: u64,
) -> Result<OvaSvmModel> {
    if labels.len() != x.rows() {
        return Err(Error::arg("one label per row required"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= emotions.len()) {
        return Err(Error::arg(format!("label {bad} out of range")));
    }
    let machines = (0..emotions.len())
        .into_par_iter()
        .map(|class| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let class_seed = derive_seed(seed, &[class as u64]);
            let search = grid_search_c(x, &y, groups, &cfg.c_grid, cfg.inner_folds, class_seed, &cfg.solver)?;
            let mut m = train_binary(x, &y, search.best_c, derive_seed(class_seed, &[2]), &cfg.solver)?;
            let fit = platt_calibrate(&search.oof_margins, &y)?;
            m.platt_a = fit.a;
            m.platt_b = fit.b;
            m.platt_clamped = fit.clamped;
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvaSvmModel {
        emotions: emotions.to_vec(),
        machines,
        reject_threshold: 0.0,
    })
}
