//! Statistical functionals over descriptor trajectories and the fixed
//! 1582-dimensional feature layout.
//!
//! Layout (format-breaking if changed):
//!
//! * `[0, 1428)`: 68 trajectories (34 general LLDs, then their 34 deltas)
//!   x 21 functionals, index `trajectory * 21 + functional`.
//! * `[1428, 1580)`: 8 trajectories (4 pitch LLDs, then their 4 deltas)
//!   x 19 functionals, index `1428 + trajectory * 19 + functional`.
//! * `1580`: number of pitch onsets; `1581`: voiced-speech duration in
//!   seconds (frames surviving silence removal times the hop).

use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lld::{descriptor_names, LldMatrix, GENERAL_LLDS, NUM_LLDS, PITCH_LLDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionalId {
    Mean,
    StdDev,
    Skewness,
    Kurtosis,
    Min,
    Max,
    Range,
    MaxPos,
    MinPos,
    Quartile1,
    Median,
    Quartile3,
    Iqr12,
    Iqr23,
    Iqr13,
    Percentile1,
    Percentile99,
    PctRange1To99,
    LinRegSlope,
    LinRegOffset,
    LinRegErrQ,
}

/// The 21 functionals applied to general descriptors, in output order.
pub const GENERAL_FUNCTIONALS: [FunctionalId; 21] = {
    use FunctionalId::*;
    [
        Mean, StdDev, Skewness, Kurtosis, Min, Max, Range, MaxPos, MinPos, Quartile1, Median,
        Quartile3, Iqr12, Iqr23, Iqr13, Percentile1, Percentile99, PctRange1To99, LinRegSlope,
        LinRegOffset, LinRegErrQ,
    ]
};

/// The 19 functionals applied to pitch descriptors: the general list
/// without `Min` and `MinPos`.
pub const PITCH_FUNCTIONALS: [FunctionalId; 19] = {
    use FunctionalId::*;
    [
        Mean, StdDev, Skewness, Kurtosis, Max, Range, MaxPos, Quartile1, Median, Quartile3,
        Iqr12, Iqr23, Iqr13, Percentile1, Percentile99, PctRange1To99, LinRegSlope, LinRegOffset,
        LinRegErrQ,
    ]
};

pub const SUBSET1_LEN: usize = 2 * GENERAL_LLDS * GENERAL_FUNCTIONALS.len();
pub const SUBSET2_LEN: usize = 2 * PITCH_LLDS * PITCH_FUNCTIONALS.len();
pub const SUBSET3_LEN: usize = 2;
pub const FEATURE_DIM: usize = SUBSET1_LEN + SUBSET2_LEN + SUBSET3_LEN;

impl FunctionalId {
    pub fn as_str(self) -> &'static str {
        use FunctionalId::*;
        match self {
            Mean => "amean",
            StdDev => "stddev",
            Skewness => "skewness",
            Kurtosis => "kurtosis",
            Min => "min",
            Max => "max",
            Range => "range",
            MaxPos => "maxPos",
            MinPos => "minPos",
            Quartile1 => "quartile1",
            Median => "quartile2",
            Quartile3 => "quartile3",
            Iqr12 => "iqr1-2",
            Iqr23 => "iqr2-3",
            Iqr13 => "iqr1-3",
            Percentile1 => "percentile1.0",
            Percentile99 => "percentile99.0",
            PctRange1To99 => "pctlrange0-1",
            LinRegSlope => "linregc1",
            LinRegOffset => "linregc2",
            LinRegErrQ => "linregerrQ",
        }
    }
}

/// Names of all 1582 features in layout order, e.g. `mfcc3_de_linregc1`.
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let lld = descriptor_names();
        let mut v = Vec::with_capacity(FEATURE_DIM);
        let mut push = |range: Range<usize>, funcs: &[FunctionalId]| {
            for suffix in ["", "_de"] {
                for name in &lld[range.clone()] {
                    v.extend(funcs.iter().map(|f| format!("{name}{suffix}_{}", f.as_str())));
                }
            }
        };
        push(0..GENERAL_LLDS, &GENERAL_FUNCTIONALS);
        push(GENERAL_LLDS..NUM_LLDS, &PITCH_FUNCTIONALS);
        v.push("f0Final_onsets".into());
        v.push("duration".into());
        v
    })
}

/// Index ranges of the three feature subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetLayout {
    pub subsets: [Range<usize>; 3],
}

impl SubsetLayout {
    pub fn standard() -> Self {
        SubsetLayout {
            subsets: [
                0..SUBSET1_LEN,
                SUBSET1_LEN..SUBSET1_LEN + SUBSET2_LEN,
                SUBSET1_LEN + SUBSET2_LEN..FEATURE_DIM,
            ],
        }
    }

    pub fn subset1_index(trajectory: usize, functional: usize) -> usize {
        trajectory * GENERAL_FUNCTIONALS.len() + functional
    }

    pub fn subset2_index(trajectory: usize, functional: usize) -> usize {
        SUBSET1_LEN + trajectory * PITCH_FUNCTIONALS.len() + functional
    }
}

/// One utterance's 1582 values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Order statistics and moments shared by all functionals of one track.
struct TrackStats<'a> {
    x: &'a [f64],
    sorted: Vec<f64>,
    constant: bool,
    mean: f64,
}

impl<'a> TrackStats<'a> {
    fn new(x: &'a [f64]) -> Self {
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let constant = sorted.first() == sorted.last();
        let mean = if constant { x[0] } else { x.iter().sum::<f64>() / x.len() as f64 };
        TrackStats { x, sorted, constant, mean }
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    fn percentile(&self, p: f64) -> f64 {
        let pos = p / 100.0 * (self.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo])
    }

    fn central_moment(&self, k: i32) -> f64 {
        self.x.iter().map(|v| (v - self.mean).powi(k)).sum::<f64>() / self.len() as f64
    }

    fn relative_position(&self, idx: usize) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            idx as f64 / (self.len() - 1) as f64
        }
    }

    /// (slope, offset, mean squared error) of the least-squares line over
    /// `t = 0..L-1`.
    fn regression(&self) -> (f64, f64, f64) {
        let n = self.len();
        if n < 2 || self.constant {
            return (0.0, self.x[0], 0.0);
        }
        let nf = n as f64;
        let t_mean = (nf - 1.0) / 2.0;
        let sxx = nf * (nf * nf - 1.0) / 12.0;
        let sxy: f64 = self
            .x
            .iter()
            .enumerate()
            .map(|(t, v)| (t as f64 - t_mean) * (v - self.mean))
            .sum();
        let slope = sxy / sxx;
        let offset = self.mean - slope * t_mean;
        let err = self
            .x
            .iter()
            .enumerate()
            .map(|(t, v)| {
                let r = v - (offset + slope * t as f64);
                r * r
            })
            .sum::<f64>()
            / nf;
        (slope, offset, err)
    }

    fn eval(&self, id: FunctionalId) -> f64 {
        use FunctionalId::*;
        let dispersion = |f: &dyn Fn() -> f64| if self.constant { 0.0 } else { f() };
        match id {
            Mean => self.mean,
            StdDev => dispersion(&|| self.central_moment(2).sqrt()),
            Skewness => dispersion(&|| {
                let var = self.central_moment(2);
                if var <= 0.0 { 0.0 } else { self.central_moment(3) / var.powf(1.5) }
            }),
            Kurtosis => dispersion(&|| {
                let var = self.central_moment(2);
                if var <= 0.0 { 0.0 } else { self.central_moment(4) / (var * var) }
            }),
            Min => self.sorted[0],
            Max => *self.sorted.last().unwrap(),
            Range => self.sorted.last().unwrap() - self.sorted[0],
            MaxPos => {
                let max = *self.sorted.last().unwrap();
                self.relative_position(self.x.iter().position(|&v| v == max).unwrap_or(0))
            }
            MinPos => {
                let min = self.sorted[0];
                self.relative_position(self.x.iter().position(|&v| v == min).unwrap_or(0))
            }
            Quartile1 => self.percentile(25.0),
            Median => self.percentile(50.0),
            Quartile3 => self.percentile(75.0),
            Iqr12 => self.percentile(50.0) - self.percentile(25.0),
            Iqr23 => self.percentile(75.0) - self.percentile(50.0),
            Iqr13 => self.percentile(75.0) - self.percentile(25.0),
            Percentile1 => self.percentile(1.0),
            Percentile99 => self.percentile(99.0),
            PctRange1To99 => self.percentile(99.0) - self.percentile(1.0),
            LinRegSlope => self.regression().0,
            LinRegOffset => self.regression().1,
            LinRegErrQ => self.regression().2,
        }
    }
}

/// Evaluates one functional on a non-empty track.
pub fn functional(track: &[f64], id: FunctionalId) -> Result<f64> {
    if track.is_empty() {
        return Err(Error::arg("functional of an empty track"));
    }
    Ok(TrackStats::new(track).eval(id))
}

/// Evaluates a list of functionals on one track, sharing the sort.
pub fn functionals(track: &[f64], ids: &[FunctionalId]) -> Result<Vec<f64>> {
    if track.is_empty() {
        return Err(Error::arg("functional of an empty track"));
    }
    let stats = TrackStats::new(track);
    Ok(ids.iter().map(|&id| stats.eval(id)).collect())
}

/// Counts unvoiced-to-voiced transitions (a voiced first frame counts as
/// one) and converts the frame count to seconds.
pub fn pitch_onsets_and_duration(f0: &[f64], hop_s: f64) -> (usize, f64) {
    let mut onsets = 0;
    let mut prev_voiced = false;
    for &f in f0 {
        let voiced = f > 0.0;
        if voiced && !prev_voiced {
            onsets += 1;
        }
        prev_voiced = voiced;
    }
    (onsets, f0.len() as f64 * hop_s)
}

/// Builds the 1582-dimensional vector from an utterance's descriptors.
pub fn assemble_feature_vector(llds: &LldMatrix, hop_s: f64) -> Result<FeatureVector> {
    if llds.num_frames == 0 {
        return Err(Error::arg("descriptor matrix has no frames"));
    }
    let mut values = Vec::with_capacity(FEATURE_DIM);
    for j in 0..GENERAL_LLDS {
        values.extend(functionals(&llds.column(j), &GENERAL_FUNCTIONALS)?);
    }
    for j in 0..GENERAL_LLDS {
        values.extend(functionals(&llds.delta_column(j), &GENERAL_FUNCTIONALS)?);
    }
    for j in GENERAL_LLDS..NUM_LLDS {
        values.extend(functionals(&llds.column(j), &PITCH_FUNCTIONALS)?);
    }
    for j in GENERAL_LLDS..NUM_LLDS {
        values.extend(functionals(&llds.delta_column(j), &PITCH_FUNCTIONALS)?);
    }
    let (onsets, duration) = pitch_onsets_and_duration(&llds.column(GENERAL_LLDS), hop_s);
    values.push(onsets as f64);
    values.push(duration);
    debug_assert_eq!(values.len(), FEATURE_DIM);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite functional value".into()));
    }
    Ok(FeatureVector { values })
}
