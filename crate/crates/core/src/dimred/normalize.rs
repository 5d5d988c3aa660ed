use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Columns whose standard deviation falls below this are treated as
/// constant and normalize to 0.
pub const ZERO_VARIANCE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Global,
    PerSpeaker,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::Global => "global",
            NormMode::PerSpeaker => "per_speaker",
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(NormMode::Global),
            "per_speaker" => Ok(NormMode::PerSpeaker),
            _ => Err(Error::arg(format!("unknown normalization mode {s:?}"))),
        }
    }
}

/// Per-column z-scoring statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl ColumnStats {
    fn fit<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, cols: usize) -> Self {
        let mut n = 0usize;
        let mut mean = vec![0.0; cols];
        for r in rows.clone() {
            n += 1;
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; cols];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n as f64).sqrt()).collect();
        ColumnStats { mean, std }
    }

    pub fn is_zero_variance(&self, j: usize) -> bool {
        self.std[j] < ZERO_VARIANCE_STD
    }

    fn apply_into(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, v)) in out.iter_mut().zip(row).enumerate() {
            *o = if self.is_zero_variance(j) {
                0.0
            } else {
                (v - self.mean[j]) / self.std[j]
            };
        }
    }
}

/// Feature z-scoring fitted on training rows, either globally or per
/// speaker. Speakers unseen during fitting fall back to the global
/// statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mode: NormMode,
    pub global: ColumnStats,
    pub per_speaker: BTreeMap<u32, ColumnStats>,
}

impl Normalizer {
    pub fn fit(train: &Mat, mode: NormMode, speakers: Option<&[u32]>) -> Result<Self> {
        if train.rows() < 2 {
            return Err(Error::arg("normalizer needs at least two rows"));
        }
        let global = ColumnStats::fit(train.iter_rows(), train.cols());
        let mut per_speaker = BTreeMap::new();
        if mode == NormMode::PerSpeaker {
            let speakers =
                speakers.ok_or_else(|| Error::arg("per-speaker normalization needs speaker ids"))?;
            if speakers.len() != train.rows() {
                return Err(Error::arg("one speaker id per row required"));
            }
            let mut ids: Vec<u32> = speakers.to_vec();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                let rows = speakers
                    .iter()
                    .enumerate()
                    .filter(move |(_, &s)| s == id)
                    .map(|(i, _)| train.row(i));
                per_speaker.insert(id, ColumnStats::fit(rows, train.cols()));
            }
        }
        Ok(Normalizer {
            mode,
            global,
            per_speaker,
        })
    }

    pub fn dims(&self) -> usize {
        self.global.mean.len()
    }

    fn stats_for(&self, speaker: Option<u32>) -> &ColumnStats {
        match (self.mode, speaker) {
            (NormMode::PerSpeaker, Some(s)) => self.per_speaker.get(&s).unwrap_or(&self.global),
            _ => &self.global,
        }
    }

    pub fn apply(&self, row: &[f64], speaker: Option<u32>) -> Result<Vec<f64>> {
        if row.len() != self.dims() {
            return Err(Error::arg(format!(
                "row has {} values, normalizer expects {}",
                row.len(),
                self.dims()
            )));
        }
        let mut out = vec![0.0; row.len()];
        self.stats_for(speaker).apply_into(row, &mut out);
        Ok(out)
    }

    /// Normalizes every row; `speakers` is required in per-speaker mode.
    pub fn apply_matrix(&self, m: &Mat, speakers: Option<&[u32]>) -> Result<Mat> {
        if m.cols() != self.dims() {
            return Err(Error::arg("column count differs from the fitted normalizer"));
        }
        let mut out = Mat::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            let speaker = speakers.map(|s| s[i]);
            self.stats_for(speaker).apply_into(m.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}
