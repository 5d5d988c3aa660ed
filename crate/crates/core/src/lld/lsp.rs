//! Line spectral frequencies from an LPC inverse filter.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of line spectral frequencies reported per frame.
pub const LSP_COUNT: usize = 8;

/// Coarse grid used to bracket roots before bisection.
const GRID: usize = 1024;

/// The two symmetric polynomials whose unit-circle roots are the LSFs.
#[derive(Debug, Clone)]
pub struct LspPolynomials {
    /// `A(z) + z^-(p+1) A(1/z)`, ascending powers of `z^-1`.
    pub sum: Vec<f64>,
    /// `A(z) - z^-(p+1) A(1/z)`.
    pub difference: Vec<f64>,
}

/// Builds P and Q from predictor coefficients `a_1..a_p`
/// (`A(z) = 1 - sum a_i z^-i`).
pub fn lsp_polynomials(lpc: &[f64]) -> LspPolynomials {
    let p = lpc.len();
    let mut a = vec![0.0; p + 2];
    a[0] = 1.0;
    for (i, c) in lpc.iter().enumerate() {
        a[i + 1] = -c;
    }
    let sum = (0..=p + 1).map(|k| a[k] + a[p + 1 - k]).collect();
    let difference = (0..=p + 1).map(|k| a[k] - a[p + 1 - k]).collect();
    LspPolynomials { sum, difference }
}

/// Evaluates a palindromic polynomial of even degree `2m` on the unit
/// circle with the linear phase removed: `c_m + 2 sum_{k<m} c_k cos((m-k)w)`.
fn palindromic_cosine_sum(c: &[f64], w: f64) -> f64 {
    let m = (c.len() - 1) / 2;
    c[m] + 2.0 * (0..m).map(|k| c[k] * ((m - k) as f64 * w).cos()).sum::<f64>()
}

/// Roots in `(0, pi)` of a palindromic cosine sum, by grid bracketing and
/// bisection.
fn cosine_roots(c: &[f64], grid: usize) -> Vec<f64> {
    let f = |w: f64| palindromic_cosine_sum(c, w);
    let mut roots = Vec::new();
    let mut w0 = 0.0;
    let mut f0 = f(w0);
    for i in 1..=grid {
        let w1 = PI * i as f64 / grid as f64;
        let f1 = f(w1);
        if f0 == 0.0 && w0 > 0.0 {
            roots.push(w0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (w0, w1, f0);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        w0 = w1;
        f0 = f1;
    }
    roots
}

/// All `p` line spectral frequencies in ascending order, for even order `p`.
pub fn line_spectral_frequencies(lpc: &[f64]) -> Result<Vec<f64>> {
    let p = lpc.len();
    if p == 0 || p % 2 != 0 {
        return Err(Error::arg(format!("LSP conversion needs an even LPC order, got {p}")));
    }
    let polys = lsp_polynomials(lpc);
    // Remove the fixed roots: z = -1 from P and z = +1 from Q.
    let mut p_red = vec![0.0; p + 1];
    let mut q_red = vec![0.0; p + 1];
    p_red[0] = polys.sum[0];
    q_red[0] = polys.difference[0];
    for k in 1..=p {
        p_red[k] = polys.sum[k] - p_red[k - 1];
        q_red[k] = polys.difference[k] + q_red[k - 1];
    }
    let half = p / 2;
    for grid in [GRID, 8 * GRID, 64 * GRID] {
        let rp = cosine_roots(&p_red, grid);
        let rq = cosine_roots(&q_red, grid);
        if rp.len() == half && rq.len() == half {
            let mut all: Vec<f64> = rp.into_iter().chain(rq).collect();
            all.sort_by(f64::total_cmp);
            return Ok(all);
        }
    }
    Err(Error::Numerical(format!(
        "could not isolate {p} line spectral frequencies"
    )))
}

/// The lowest [`LSP_COUNT`] line spectral frequencies (radians).
pub fn lsp_frequencies(lpc: &[f64]) -> Result<Vec<f64>> {
    let mut all = line_spectral_frequencies(lpc)?;
    all.truncate(LSP_COUNT);
    Ok(all)
}
