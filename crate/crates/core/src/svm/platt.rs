use crate::error::{Error, Result};

/// Lower bound on the fitted slope; steeper fits are clamped and flagged.
pub const MIN_SLOPE: f64 = -50.0;
const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
const MIN_STEP: f64 = 1e-10;
const RIDGE: f64 = 1e-12;

/// Sigmoid mapping `p(y = +1 | m) = 1 / (1 + exp(a m + b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattFit {
    pub a: f64,
    pub b: f64,
    /// Set when `a` hit [`MIN_SLOPE`].
    pub clamped: bool,
    pub iterations: usize,
}

pub fn sigmoid_probability(a: f64, b: f64, margin: f64) -> f64 {
    let z = a * margin + b;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

fn targets(labels: &[f64]) -> Vec<f64> {
    let pos = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    labels.iter().map(|&y| if y > 0.0 { hi } else { lo }).collect()
}

fn nll_with_targets(margins: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    margins
        .iter()
        .zip(t)
        .map(|(&m, &ti)| {
            let z = a * m + b;
            if z >= 0.0 {
                ti * z + (-z).exp().ln_1p()
            } else {
                (ti - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// Negative log-likelihood of `(a, b)` against the smoothed targets.
pub fn platt_nll(margins: &[f64], labels: &[f64], a: f64, b: f64) -> f64 {
    nll_with_targets(margins, &targets(labels), a, b)
}

/// Fits the sigmoid by Newton's method with backtracking line search on
/// smoothed targets `(N+ + 1) / (N+ + 2)` and `1 / (N- + 2)`.
pub fn platt_calibrate(margins: &[f64], labels: &[f64]) -> Result<PlattFit> {
    if margins.len() != labels.len() {
        return Err(Error::arg("one label per margin required"));
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    let neg = labels.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(Error::arg(format!(
            "calibration needs two samples per class, got {pos} positive and {neg} negative"
        )));
    }
    let t = targets(labels);
    let mut a = 0.0;
    let mut b = ((neg as f64 + 1.0) / (pos as f64 + 1.0)).ln();
    let mut f = nll_with_targets(margins, &t, a, b);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let (mut h11, mut h22, mut h21) = (RIDGE, RIDGE, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&m, &ti) in margins.iter().zip(&t) {
            let p = sigmoid_probability(a, b, m);
            let d2 = p * (1.0 - p);
            h11 += m * m * d2;
            h22 += d2;
            h21 += m * d2;
            let d1 = ti - p;
            g1 += m * d1;
            g2 += d1;
        }
        if g1.hypot(g2) < GRAD_TOL {
            break;
        }
        iterations += 1;
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut accepted = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = nll_with_targets(margins, &t, na, nb);
            if nf < f + 1e-4 * step * gd {
                a = na;
                b = nb;
                f = nf;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    let clamped = a < MIN_SLOPE;
    if clamped {
        a = MIN_SLOPE;
    }
    Ok(PlattFit {
        a,
        b,
        clamped,
        iterations,
    })
}
