use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svm::{Decision, Posterior};

/// Decision counts of a test set. Rejected samples count as neither hits
/// nor misses of their class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionStats {
    pub tp: Vec<usize>,
    #[serde(rename = "fn")]
    pub fn_: Vec<usize>,
    pub fp: Vec<usize>,
    pub rejected: usize,
    pub total: usize,
    /// `matrix[truth][predicted]`, with a final column for rejections.
    pub matrix: Vec<Vec<usize>>,
}

impl ConfusionStats {
    pub fn new(n_classes: usize) -> Self {
        ConfusionStats {
            tp: vec![0; n_classes],
            fn_: vec![0; n_classes],
            fp: vec![0; n_classes],
            rejected: 0,
            total: 0,
            matrix: vec![vec![0; n_classes + 1]; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.tp.len()
    }

    pub fn record(&mut self, truth: usize, decision: Decision) {
        self.total += 1;
        match decision {
            Decision::Reject => {
                let reject_col = self.n_classes();
                self.rejected += 1;
                self.matrix[truth][reject_col] += 1;
            }
            Decision::Class(p) => {
                self.matrix[truth][p] += 1;
                if p == truth {
                    self.tp[truth] += 1;
                } else {
                    self.fn_[truth] += 1;
                    self.fp[p] += 1;
                }
            }
        }
    }

    pub fn from_decisions(truth: &[usize], decisions: &[Decision], n_classes: usize) -> Result<Self> {
        if truth.len() != decisions.len() {
            return Err(Error::arg("one decision per sample required"));
        }
        let mut s = ConfusionStats::new(n_classes);
        for (&t, &d) in truth.iter().zip(decisions) {
            if t >= n_classes || matches!(d, Decision::Class(p) if p >= n_classes) {
                return Err(Error::arg("class index out of range"));
            }
            s.record(t, d);
        }
        Ok(s)
    }

    pub fn merge(&mut self, other: &ConfusionStats) {
        for c in 0..self.n_classes() {
            self.tp[c] += other.tp[c];
            self.fn_[c] += other.fn_[c];
            self.fp[c] += other.fp[c];
            for (a, b) in self.matrix[c].iter_mut().zip(&other.matrix[c]) {
                *a += b;
            }
        }
        self.rejected += other.rejected;
        self.total += other.total;
    }

    pub fn accepted(&self) -> usize {
        self.total - self.rejected
    }

    pub fn rejection_rate(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::arg("no test samples"));
        }
        Ok(self.rejected as f64 / self.total as f64)
    }
}

/// Correct decisions over all test samples, rejected ones included in the
/// denominator.
pub fn dl_classification_rate(stats: &ConfusionStats) -> Result<f64> {
    if stats.total == 0 {
        return Err(Error::arg("no test samples"));
    }
    Ok(stats.tp.iter().sum::<usize>() as f64 / stats.total as f64)
}

/// `tp / (tp + fn)` for one class; `None` when the class received no
/// accepted test samples.
pub fn dl_recall(stats: &ConfusionStats, class: usize) -> Option<f64> {
    let denom = stats.tp[class] + stats.fn_[class];
    (denom > 0).then(|| stats.tp[class] as f64 / denom as f64)
}

/// Mean of the applicable per-class recalls.
pub fn unweighted_average_recall(stats: &ConfusionStats) -> Option<f64> {
    let r: Vec<f64> = (0..stats.n_classes()).filter_map(|c| dl_recall(stats, c)).collect();
    (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
}

/// Share of samples whose true class is among the `k` most confident.
pub fn topk_accuracy(posteriors: &[Posterior], truth: &[usize], k: usize) -> Result<f64> {
    if posteriors.is_empty() {
        return Err(Error::arg("no samples"));
    }
    if posteriors.len() != truth.len() {
        return Err(Error::arg("one label per posterior required"));
    }
    let n_classes = posteriors[0].probs.len();
    if k == 0 || k > n_classes {
        return Err(Error::arg(format!("k={k} outside 1..={n_classes}")));
    }
    let hits = posteriors
        .iter()
        .zip(truth)
        .filter(|(p, &t)| p.ranking()[..k].contains(&t))
        .count();
    Ok(hits as f64 / posteriors.len() as f64)
}

/// One point of a rejection curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub theta: f64,
    pub rejection_rate: f64,
    /// Accuracy over accepted samples; `None` when everything is rejected.
    pub accuracy: Option<f64>,
}

/// Applies each threshold to the posteriors and reports the rejection rate
/// and the accuracy over the samples that were not rejected.
pub fn rejection_curve(posteriors: &[Posterior], truth: &[usize], thresholds: &[f64]) -> Result<Vec<CurvePoint>> {
    if posteriors.is_empty() || posteriors.len() != truth.len() {
        return Err(Error::arg("need one label per posterior and at least one sample"));
    }
    Ok(thresholds
        .iter()
        .map(|&theta| {
            let mut rejected = 0;
            let mut correct = 0;
            for (p, &t) in posteriors.iter().zip(truth) {
                match p.decide(theta) {
                    Decision::Reject => rejected += 1,
                    Decision::Class(c) if c == t => correct += 1,
                    Decision::Class(_) => {}
                }
            }
            let accepted = posteriors.len() - rejected;
            CurvePoint {
                theta,
                rejection_rate: rejected as f64 / posteriors.len() as f64,
                accuracy: (accepted > 0).then(|| correct as f64 / accepted as f64),
            }
        })
        .collect())
}

/// Thresholds `start, start + step, ...` up to `end` inclusive, computed by
/// index so the last point does not drift.
pub fn threshold_sweep(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || end < start {
        return Err(Error::arg("sweep needs start <= end and a positive step"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
