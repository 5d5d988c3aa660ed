//! Feature normalization and principal component projection to the
//! 100-dimensional fused representation.

mod normalize;
mod pca;

pub use normalize::{ColumnStats, NormMode, Normalizer, ZERO_VARIANCE_STD};
pub use pca::{fit_pca, PcaBundle, PcaMode, SubsetPca, DEFAULT_ALLOCATION};

use crate::error::{Error, Result};
use crate::functionals::SubsetLayout;
use crate::matrix::Mat;

/// Normalizer and projections fitted together on one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Reducer {
    pub normalizer: Normalizer,
    pub pca: PcaBundle,
}

impl Reducer {
    pub fn fit(
        train: &Mat,
        speakers: &[u32],
        norm: NormMode,
        mode: PcaMode,
        allocation: [usize; 3],
    ) -> Result<Self> {
        let normalizer = Normalizer::fit(train, norm, Some(speakers))?;
        let normalized = normalizer.apply_matrix(train, Some(speakers))?;
        let pca = PcaBundle::fit(&normalized, &SubsetLayout::standard(), mode, allocation)?;
        Ok(Reducer { normalizer, pca })
    }

    pub fn output_dims(&self) -> usize {
        self.pca.output_dims()
    }

    pub fn transform(&self, row: &[f64], speaker: Option<u32>) -> Result<Vec<f64>> {
        project_and_fuse(row, speaker, &self.normalizer, &self.pca)
    }

    pub fn transform_matrix(&self, m: &Mat, speakers: &[u32]) -> Result<Mat> {
        let rows = (0..m.rows())
            .map(|i| self.transform(m.row(i), Some(speakers[i])))
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Ok(Mat::zeros(0, self.output_dims()));
        }
        Mat::from_rows(&rows)
    }
}

/// Normalizes a feature vector, projects each subset and concatenates the
/// results.
pub fn project_and_fuse(
    row: &[f64],
    speaker: Option<u32>,
    normalizer: &Normalizer,
    bundle: &PcaBundle,
) -> Result<Vec<f64>> {
    if normalizer.dims() != bundle.input_dims() {
        return Err(Error::arg("normalizer and projection disagree on dimensionality"));
    }
    bundle.project(&normalizer.apply(row, speaker)?)
}
