use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::SubsetLayout;
use crate::matrix::Mat;

/// Components kept per feature subset.
pub const DEFAULT_ALLOCATION: [usize; 3] = [90, 8, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaMode {
    /// One PCA per feature subset, outputs concatenated in subset order.
    PerSubset,
    /// A single PCA over all features.
    Joint,
}

impl PcaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PcaMode::PerSubset => "per_subset",
            PcaMode::Joint => "joint",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            PcaMode::PerSubset => 0,
            PcaMode::Joint => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(PcaMode::PerSubset),
            1 => Ok(PcaMode::Joint),
            _ => Err(Error::Decode(format!("unknown PCA mode byte {code}"))),
        }
    }
}

impl fmt::Display for PcaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PcaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_subset" => Ok(PcaMode::PerSubset),
            "joint" => Ok(PcaMode::Joint),
            _ => Err(Error::arg(format!("unknown PCA mode {s:?}"))),
        }
    }
}

/// Principal axes of one block of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetPca {
    /// First column of the block in the full feature vector.
    pub start: usize,
    pub dims: usize,
    pub k: usize,
    /// Training mean of the block.
    pub mean: Vec<f64>,
    /// Top-k eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `dims x k` row-major; column `j` is the `j`-th principal axis.
    pub components: Vec<f64>,
    /// Sum of all covariance eigenvalues.
    pub total_variance: f64,
}

impl SubsetPca {
    pub fn component(&self, j: usize) -> Vec<f64> {
        (0..self.dims).map(|i| self.components[i * self.k + j]).collect()
    }

    pub fn captured_variance(&self) -> f64 {
        if self.total_variance <= 0.0 {
            1.0
        } else {
            self.eigenvalues.iter().sum::<f64>() / self.total_variance
        }
    }

    /// Projects the block `x` (length `dims`) onto the kept axes.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (i, (&v, &m)) in x.iter().zip(&self.mean).enumerate() {
            let c = v - m;
            let row = &self.components[i * self.k..(i + 1) * self.k];
            out.iter_mut().zip(row).for_each(|(o, p)| *o += c * p);
        }
        out
    }
}

/// Fits the top `k` principal axes of `train` (rows are samples).
///
/// The covariance uses the population denominator. When there are fewer
/// rows than columns the eigenproblem is solved on the row Gram matrix and
/// mapped back. Each axis is signed so its largest-magnitude entry is
/// positive.
pub fn fit_pca(train: &Mat, k: usize) -> Result<SubsetPca> {
    let (n, d) = (train.rows(), train.cols());
    if n < 2 {
        return Err(Error::arg("PCA needs at least two rows"));
    }
    if k == 0 || k > d || k > n - 1 {
        return Err(Error::arg(format!(
            "cannot keep {k} components from {n} rows of {d} columns"
        )));
    }
    let mut mean = vec![0.0; d];
    for r in train.iter_rows() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let xc = DMatrix::from_fn(n, d, |i, j| train.get(i, j) - mean[j]);

    let (values, mut axes, total) = if d <= n {
        let cov = xc.tr_mul(&xc) / n as f64;
        let total = cov.trace();
        let eig = SymmetricEigen::new(cov);
        let order = descending(&eig.eigenvalues);
        let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let axes: Vec<Vec<f64>> = order[..k]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (values, axes, total)
    } else {
        let gram = &xc * xc.transpose() / n as f64;
        let total = gram.trace();
        let eig = SymmetricEigen::new(gram);
        let order = descending(&eig.eigenvalues);
        let mut values = Vec::with_capacity(k);
        let mut axes = Vec::with_capacity(k);
        for &i in &order[..k] {
            let lambda = eig.eigenvalues[i].max(0.0);
            let v = xc.tr_mul(&eig.eigenvectors.column(i).into_owned());
            let scale = (n as f64 * lambda).sqrt();
            let axis = if scale > 0.0 {
                v.iter().map(|x| x / scale).collect()
            } else {
                vec![0.0; d]
            };
            values.push(lambda);
            axes.push(axis);
        }
        orthonormalize(&mut axes);
        (values, axes, total)
    };

    for axis in &mut axes {
        let mut best = 0;
        for (i, v) in axis.iter().enumerate() {
            if v.abs() > axis[best].abs() {
                best = i;
            }
        }
        if axis[best] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut components = vec![0.0; d * k];
    for (j, axis) in axes.iter().enumerate() {
        for (i, v) in axis.iter().enumerate() {
            components[i * k + j] = *v;
        }
    }
    Ok(SubsetPca {
        start: 0,
        dims: d,
        k,
        mean,
        eigenvalues: values,
        components,
        total_variance: total.max(0.0),
    })
}

fn descending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Modified Gram-Schmidt in place. Axes that vanish (null-space directions
/// from a rank-deficient fit) are replaced by orthogonalized unit vectors.
fn orthonormalize(axes: &mut [Vec<f64>]) {
    let d = axes.first().map_or(0, Vec::len);
    let mut basis_probe = 0;
    for j in 0..axes.len() {
        let (done, rest) = axes.split_at_mut(j);
        let v = &mut rest[0];
        loop {
            for q in done.iter() {
                let p: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|x| *x /= norm);
                break;
            }
            *v = vec![0.0; d];
            v[basis_probe % d] = 1.0;
            basis_probe += 1;
        }
    }
}

/// Fitted projections for all subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBundle {
    pub mode: PcaMode,
    pub subsets: Vec<SubsetPca>,
}

impl PcaBundle {
    /// Fits per-subset (with `allocation` components each) or joint PCA on
    /// normalized training rows. Joint mode keeps the allocation's total.
    pub fn fit(train: &Mat, layout: &SubsetLayout, mode: PcaMode, allocation: [usize; 3]) -> Result<Self> {
        let blocks: Vec<(usize, usize, usize)> = match mode {
            PcaMode::PerSubset => layout
                .subsets
                .iter()
                .zip(allocation)
                .map(|(r, k)| (r.start, r.len(), k))
                .collect(),
            PcaMode::Joint => vec![(0, layout.subsets[2].end, allocation.iter().sum())],
        };
        if train.cols() != layout.subsets[2].end {
            return Err(Error::arg(format!(
                "PCA input has {} columns, layout expects {}",
                train.cols(),
                layout.subsets[2].end
            )));
        }
        let mut subsets = Vec::new();
        for (start, dims, k) in blocks {
            let mut p = fit_pca(&train.column_block(start, dims), k)?;
            p.start = start;
            subsets.push(p);
        }
        Ok(PcaBundle { mode, subsets })
    }

    pub fn input_dims(&self) -> usize {
        self.subsets.iter().map(|s| s.start + s.dims).max().unwrap_or(0)
    }

    pub fn output_dims(&self) -> usize {
        self.subsets.iter().map(|s| s.k).sum()
    }

    /// Projects a normalized vector and concatenates the subset outputs.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dims() {
            return Err(Error::arg(format!(
                "vector has {} values, projection expects {}",
                x.len(),
                self.input_dims()
            )));
        }
        let mut out = Vec::with_capacity(self.output_dims());
        for s in &self.subsets {
            out.extend(s.project(&x[s.start..s.start + s.dims]));
        }
        Ok(out)
    }
}
