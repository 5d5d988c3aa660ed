//! Exact t-SNE embedding to two dimensions and cluster diagnostics.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::UtteranceMeta;
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Mat};
use crate::seed::{derive_seed, rng};

const BISECTION_STEPS: usize = 50;
const ENTROPY_TOL: f64 = 1e-5;
const DUPLICATE_JITTER: f64 = 1e-9;
const INIT_STD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    pub final_kl: f64,
    /// KL divergence (against the unexaggerated affinities) sampled every
    /// 50 iterations and at the end, as `(iteration, kl)`.
    pub kl_trace: Vec<(usize, f64)>,
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<()> {
    if n < 4 {
        return Err(Error::arg(format!("t-SNE needs at least 4 points, got {n}")));
    }
    if !(perplexity > 0.0 && perplexity < (n as f64 - 1.0) / 3.0) {
        return Err(Error::arg(format!(
            "perplexity {perplexity} infeasible for {n} points (must be below {})",
            (n as f64 - 1.0) / 3.0
        )));
    }
    Ok(())
}

/// Conditional distribution `P(j | i)` over the other points with the
/// Gaussian bandwidth found by bisection so its entropy is
/// `ln(perplexity)`. `dist` holds squared distances from point `i`.
pub fn conditional_row(dist: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let d_min = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut p = vec![0.0; dist.len()];
    for _ in 0..BISECTION_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for (j, (&d, pj)) in dist.iter().zip(p.iter_mut()).enumerate() {
            *pj = if j == i { 0.0 } else { (-(d - d_min) * beta).exp() };
            sum += *pj;
            weighted += (d - d_min) * *pj;
        }
        let entropy = sum.ln() + beta * weighted / sum;
        p.iter_mut().for_each(|v| *v /= sum);
        let diff = entropy - target;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    p
}

/// Symmetrized joint affinities `(P(j|i) + P(i|j)) / 2n`, row-major n x n.
pub fn perplexity_affinities(x: &Mat, perplexity: f64) -> Result<Vec<f64>> {
    let n = x.rows();
    check_perplexity(n, perplexity)?;
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = (0..n).map(|j| squared_distance(x.row(i), x.row(j))).collect();
            conditional_row(&dist, i, perplexity)
        })
        .collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i][j] + cond[j][i]) / (2.0 * n as f64);
        }
    }
    Ok(p)
}

/// Student-t kernel values `1 / (1 + |y_i - y_j|^2)` (zero diagonal) and
/// their sum.
fn kernel(y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len() / 2;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[2 * i] - y[2 * j];
                        let dy = y[2 * i + 1] - y[2 * j + 1];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let z = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    (rows.concat(), z)
}

/// Normalized low-dimensional affinities `Q` of a flat `n x 2`
/// embedding, row-major n x n.
pub fn embedding_affinities(y: &[f64]) -> Vec<f64> {
    let (num, z) = kernel(y);
    num.into_iter().map(|w| w / z).collect()
}

/// KL(P || Q) for a flat `n x 2` embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[f64]) -> f64 {
    let (num, z) = kernel(y);
    p.iter()
        .zip(&num)
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &w)| pij * (pij / (w / z)).ln())
        .sum()
}

/// Analytic gradient `4 sum_j (p_ij - q_ij) q_ij Z (y_i - y_j)`.
pub fn kl_gradient(p: &[f64], y: &[f64]) -> Vec<f64> {
    let (num, z) = kernel(y);
    gradient_from_kernel(p, y, &num, z, 1.0)
}

fn gradient_from_kernel(p: &[f64], y: &[f64], num: &[f64], z: f64, exaggeration: f64) -> Vec<f64> {
    let n = y.len() / 2;
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                let w = num[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - w / z) * w;
                gx += coeff * (y[2 * i] - y[2 * j]);
                gy += coeff * (y[2 * i + 1] - y[2 * j + 1]);
            }
            [4.0 * gx, 4.0 * gy]
        })
        .collect()
}

/// Row order that depends only on row contents.
fn canonical_order(x: &Mat) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    idx.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

/// Embeds the rows of `x` in the plane.
///
/// Rows are processed in a content-defined order, so permuting the input
/// permutes the output and nothing else. Exact duplicates get a seeded
/// jitter of 1e-9.
pub fn tsne_embed(x: &Mat, cfg: &TsneConfig) -> Result<Embedding2D> {
    let n = x.rows();
    check_perplexity(n, cfg.perplexity)?;
    let order = canonical_order(x);
    let mut sorted = x.select_rows(&order);
    let mut jitter = rng(derive_seed(cfg.seed, &[1]));
    for k in 1..n {
        if sorted.row(k) == sorted.row(k - 1) {
            for v in sorted.row_mut(k) {
                *v += DUPLICATE_JITTER * jitter.sample::<f64, _>(StandardNormal);
            }
        }
    }
    let p = perplexity_affinities(&sorted, cfg.perplexity)?;

    let mut init = rng(derive_seed(cfg.seed, &[2]));
    let mut y: Vec<f64> = (0..2 * n)
        .map(|_| INIT_STD * init.sample::<f64, _>(StandardNormal))
        .collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains: Vec<f64> = vec![1.0; 2 * n];
    let mut kl_trace = Vec::new();
    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iters { cfg.early_exaggeration } else { 1.0 };
        let momentum = if iter < cfg.exaggeration_iters { cfg.momentum } else { cfg.final_momentum };
        let (num, z) = kernel(&y);
        let grad = gradient_from_kernel(&p, &y, &num, z, exaggeration);
        for k in 0..2 * n {
            let gain = if (grad[k] > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                gains[k] * 0.8
            };
            gains[k] = gain.max(MIN_GAIN);
            update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        let (mx, my) = (0..n).fold((0.0, 0.0), |(a, b), i| (a + y[2 * i], b + y[2 * i + 1]));
        for i in 0..n {
            y[2 * i] -= mx / n as f64;
            y[2 * i + 1] -= my / n as f64;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("t-SNE diverged at iteration {}", iter + 1)));
        }
        let done = iter + 1;
        if done % 50 == 0 || done == cfg.iterations {
            let kl = kl_divergence(&p, &y);
            if !kl.is_finite() {
                return Err(Error::Numerical(format!("t-SNE KL is not finite at iteration {done}")));
            }
            kl_trace.push((done, kl));
        }
    }
    let final_kl = match kl_trace.last() {
        Some(&(_, kl)) => kl,
        None => kl_divergence(&p, &y),
    };
    let mut points = vec![[0.0; 2]; n];
    for (k, &orig) in order.iter().enumerate() {
        points[orig] = [y[2 * k], y[2 * k + 1]];
    }
    Ok(Embedding2D {
        points,
        final_kl: final_kl.max(0.0),
        kl_trace,
    })
}

/// Silhouette value of every point under `labels` (Euclidean distance).
/// Points alone in their cluster score 0.
pub fn silhouette_samples(points: &[[f64; 2]], labels: &[usize]) -> Vec<f64> {
    let n = points.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    (0..n)
        .map(|i| {
            let mut sum = vec![0.0; k];
            let mut count = vec![0usize; k];
            for j in 0..n {
                if i != j {
                    let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
                    sum[labels[j]] += d;
                    count[labels[j]] += 1;
                }
            }
            let own = labels[i];
            if count[own] == 0 {
                return 0.0;
            }
            let a = sum[own] / count[own] as f64;
            let b = (0..k)
                .filter(|&c| c != own && count[c] > 0)
                .map(|c| sum[c] / count[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let denom = a.max(b);
            if denom > 0.0 { (b - a) / denom } else { 0.0 }
        })
        .collect()
}

/// Mean silhouette over all points.
pub fn silhouette_score(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let s = silhouette_samples(points, labels);
    s.iter().sum::<f64>() / s.len().max(1) as f64
}

/// Writes `x,y,emotion,speaker,corpus` rows.
pub fn write_tsne_csv<W: Write>(out: W, points: &[[f64; 2]], metas: &[UtteranceMeta]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let err = |e: csv::Error| Error::Manifest(format!("t-SNE CSV: {e}"));
    w.write_record(["x", "y", "emotion", "speaker", "corpus"]).map_err(err)?;
    for (p, m) in points.iter().zip(metas) {
        w.write_record([
            format!("{:?}", p[0]),
            format!("{:?}", p[1]),
            m.emotion.to_string(),
            m.speaker_id.to_string(),
            m.corpus.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<t-SNE csv>", e))
}
