use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    dl_classification_rate, dl_recall, rejection_curve, topk_accuracy, unweighted_average_recall,
    ConfusionStats, CurvePoint,
};
use super::split::{oversample, speaker_kfold, stratified_holdout, stratified_kfold, Fold, OversampleMode};
use crate::corpus::{Emotion, Gender};
use crate::dimred::{NormMode, PcaMode, Reducer, DEFAULT_ALLOCATION};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::matrix::Mat;
use crate::persist::ModelBundle;
use crate::seed::derive_seed;
use crate::svm::{train_ova, OvaTrainConfig, Posterior};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Holdout { test_fraction: f64 },
    KFold { folds: usize },
}

/// How test sets are drawn and how often training is repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub mode: SplitMode,
    /// Oversampling repeats per fold.
    pub repeats: usize,
    pub gender: Option<Gender>,
    /// Keep each speaker's utterances in a single fold.
    pub speaker_independent: bool,
    pub seed: u64,
}

impl SplitPlan {
    pub fn kfold(folds: usize, seed: u64) -> Self {
        SplitPlan {
            mode: SplitMode::KFold { folds },
            repeats: 5,
            gender: None,
            speaker_independent: false,
            seed,
        }
    }

    pub fn holdout(seed: u64) -> Self {
        SplitPlan {
            mode: SplitMode::Holdout { test_fraction: 0.3 },
            ..SplitPlan::kfold(7, seed)
        }
    }
}

/// Modelling settings shared by all folds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub norm: NormMode,
    pub pca_mode: PcaMode,
    pub allocation: [usize; 3],
    pub svm: OvaTrainConfig,
    pub oversample: OversampleMode,
    /// Reject threshold for the headline metrics.
    pub theta: f64,
    /// Thresholds of the rejection curve.
    pub sweep: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            norm: NormMode::Global,
            pca_mode: PcaMode::PerSubset,
            allocation: DEFAULT_ALLOCATION,
            svm: OvaTrainConfig::default(),
            oversample: OversampleMode::Repeats,
            theta: 0.0,
            sweep: super::threshold_sweep(0.0, 1.0, 0.05).expect("valid sweep"),
        }
    }
}

/// Metrics of one (fold, repeat) round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub fold: usize,
    pub repeat: usize,
    pub train_size: usize,
    pub oversampled_size: usize,
    pub test_size: usize,
    pub dl_classification_rate: f64,
    pub top2: f64,
    pub top3: f64,
    pub rejection_rate: f64,
    pub chosen_c: Vec<f64>,
    pub unconverged_machines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDetail {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Share of variance kept by each subset projection.
    pub captured_variance: Vec<f64>,
    /// Means over the oversampling repeats.
    pub dl_classification_rate: f64,
    pub top2: f64,
    pub top3: f64,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionRecall {
    pub emotion: Emotion,
    /// `None` when the emotion had no accepted test samples.
    pub recall: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub scenario: String,
    pub corpus: String,
    pub utterances: usize,
    pub plan: SplitPlan,
    pub normalization: NormMode,
    pub pca_mode: PcaMode,
    pub theta: f64,
    /// Headline metrics: pooled over folds within a repeat, then averaged
    /// over repeats.
    pub dl_classification_rate: f64,
    pub unweighted_average_recall: f64,
    pub per_emotion_recall: Vec<EmotionRecall>,
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
    pub rejection_rate: f64,
    /// Summed over repeats.
    pub confusion: ConfusionStats,
    pub folds: Vec<FoldDetail>,
    pub rounds: Vec<RoundMetrics>,
    /// Pooled over all folds and repeats.
    pub rejection_curve: Vec<CurvePoint>,
}

struct RoundOutput {
    metrics: RoundMetrics,
    test: Vec<usize>,
    posteriors: Vec<Posterior>,
}

fn make_folds(plan: &SplitPlan, labels: &[usize], speakers: &[u32]) -> Result<Vec<Fold>> {
    let seed = derive_seed(plan.seed, &[0xF01D]);
    match plan.mode {
        SplitMode::KFold { folds } if plan.speaker_independent => speaker_kfold(speakers, folds, seed),
        SplitMode::KFold { folds } => stratified_kfold(labels, folds, seed),
        SplitMode::Holdout { test_fraction } => Ok(vec![stratified_holdout(labels, test_fraction, seed)?]),
    }
}

/// Runs one evaluation scenario: split, then per fold normalize, project,
/// oversample, tune, train and predict, then aggregate.
pub fn run_scenario(features: &FeatureMatrix, plan: &SplitPlan, cfg: &EvalConfig, name: &str) -> Result<EvaluationReport> {
    if plan.repeats == 0 {
        return Err(Error::arg("at least one repeat required"));
    }
    let data = match plan.gender {
        Some(g) => features.filter_rows(|m| m.gender == g),
        None => features.clone(),
    };
    let corpus = data.manifest.corpus;
    let emotions = corpus.emotions();
    let labels: Vec<usize> = (0..data.rows())
        .map(|i| {
            corpus
                .class_index(data.meta(i).emotion)
                .ok_or_else(|| Error::arg(format!("{} is not a {corpus} emotion", data.meta(i).emotion)))
        })
        .collect::<Result<_>>()?;
    let speakers: Vec<u32> = (0..data.rows()).map(|i| data.meta(i).speaker_id).collect();
    let x = Mat::new(data.data().to_vec(), data.rows(), data.cols())?;
    let folds = make_folds(plan, &labels, &speakers).map_err(|e| e.in_stage("split"))?;
    for f in &folds {
        f.assert_disjoint().map_err(|e| e.in_stage("split"))?;
    }

    let per_fold: Vec<(Vec<f64>, Vec<RoundOutput>)> = folds
        .par_iter()
        .enumerate()
        .map(|(fi, fold)| run_fold(&x, &labels, &speakers, fold, fi, plan, cfg, emotions))
        .collect::<Result<_>>()?;

    let n_classes = emotions.len();
    let mut rounds: Vec<&RoundOutput> = per_fold.iter().flat_map(|(_, r)| r).collect();
    rounds.sort_by_key(|r| (r.metrics.repeat, r.metrics.fold));
    let repeats = rounds.iter().map(|r| r.metrics.repeat).max().unwrap_or(0) + 1;

    let mut confusion = ConfusionStats::new(n_classes);
    let mut sums = [0.0f64; 5];
    let mut recall_sum = vec![(0.0, 0usize); n_classes];
    let mut all_post = Vec::new();
    let mut all_truth = Vec::new();
    for r in 0..repeats {
        let mut stats = ConfusionStats::new(n_classes);
        let mut post = Vec::new();
        let mut truth = Vec::new();
        for round in rounds.iter().filter(|o| o.metrics.repeat == r) {
            for (p, &i) in round.posteriors.iter().zip(&round.test) {
                stats.record(labels[i], p.decide(cfg.theta));
                post.push(p.clone());
                truth.push(labels[i]);
            }
        }
        sums[0] += dl_classification_rate(&stats)?;
        sums[1] += unweighted_average_recall(&stats).unwrap_or(0.0);
        sums[2] += topk_accuracy(&post, &truth, 1)?;
        sums[3] += topk_accuracy(&post, &truth, 2.min(n_classes))?;
        sums[4] += topk_accuracy(&post, &truth, 3.min(n_classes))?;
        for (c, slot) in recall_sum.iter_mut().enumerate() {
            if let Some(v) = dl_recall(&stats, c) {
                slot.0 += v;
                slot.1 += 1;
            }
        }
        confusion.merge(&stats);
        all_post.extend(post);
        all_truth.extend(truth);
    }
    let mean = |s: f64| s / repeats as f64;
    let per_emotion_recall = emotions
        .iter()
        .enumerate()
        .map(|(c, &emotion)| EmotionRecall {
            emotion,
            recall: (recall_sum[c].1 > 0).then(|| recall_sum[c].0 / recall_sum[c].1 as f64),
            support: labels.iter().filter(|&&l| l == c).count(),
        })
        .collect();
    let fold_details = per_fold
        .iter()
        .enumerate()
        .map(|(fi, (captured, rs))| {
            let n = rs.len() as f64;
            let avg = |f: fn(&RoundMetrics) -> f64| rs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
            FoldDetail {
                fold: fi,
                train_size: folds[fi].train.len(),
                test_size: folds[fi].test.len(),
                captured_variance: captured.clone(),
                dl_classification_rate: avg(|m| m.dl_classification_rate),
                top2: avg(|m| m.top2),
                top3: avg(|m| m.top3),
                rejection_rate: avg(|m| m.rejection_rate),
            }
        })
        .collect();
    let rejection_curve = rejection_curve(&all_post, &all_truth, &cfg.sweep)?;
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: name.to_string(),
        corpus: corpus.to_string(),
        utterances: data.rows(),
        plan: plan.clone(),
        normalization: cfg.norm,
        pca_mode: cfg.pca_mode,
        theta: cfg.theta,
        dl_classification_rate: mean(sums[0]),
        unweighted_average_recall: mean(sums[1]),
        per_emotion_recall,
        top1: mean(sums[2]),
        top2: mean(sums[3]),
        top3: mean(sums[4]),
        rejection_rate: confusion.rejected as f64 / confusion.total as f64,
        confusion,
        folds: fold_details,
        rounds: rounds.iter().map(|r| r.metrics.clone()).collect(),
        rejection_curve,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    x: &Mat,
    labels: &[usize],
    speakers: &[u32],
    fold: &Fold,
    fi: usize,
    plan: &SplitPlan,
    cfg: &EvalConfig,
    emotions: &[Emotion],
) -> Result<(Vec<f64>, Vec<RoundOutput>)> {
    fold.assert_disjoint()?;
    let train_x = x.select_rows(&fold.train);
    let train_spk: Vec<u32> = fold.train.iter().map(|&i| speakers[i]).collect();
    let reducer = Reducer::fit(&train_x, &train_spk, cfg.norm, cfg.pca_mode, cfg.allocation)
        .map_err(|e| e.in_stage("reduce"))?;
    let captured: Vec<f64> = reducer.pca.subsets.iter().map(|s| s.captured_variance()).collect();
    let train_r = reducer.transform_matrix(&train_x, &train_spk)?;
    let test_spk: Vec<u32> = fold.test.iter().map(|&i| speakers[i]).collect();
    let test_r = reducer
        .transform_matrix(&x.select_rows(&fold.test), &test_spk)
        .map_err(|e| e.in_stage("reduce"))?;
    let train_labels: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
    let test_labels: Vec<usize> = fold.test.iter().map(|&i| labels[i]).collect();

    let (rounds, draws_per_round) = match cfg.oversample {
        OversampleMode::Repeats => (plan.repeats, 1),
        OversampleMode::Pooled => (1, plan.repeats),
    };
    let outputs = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let mut idx = Vec::new();
            for d in 0..draws_per_round {
                idx.extend(oversample(&train_labels, derive_seed(plan.seed, &[fi as u64, (r + d) as u64, 1])));
            }
            let xs = train_r.select_rows(&idx);
            let ys: Vec<usize> = idx.iter().map(|&i| train_labels[i]).collect();
            let model = train_ova(&xs, &ys, &idx, emotions, &cfg.svm, derive_seed(plan.seed, &[fi as u64, r as u64, 2]))
                .map_err(|e| e.in_stage("train"))?;
            let posteriors: Vec<Posterior> =
                test_r.iter_rows().map(|row| model.predict_with_threshold(row, cfg.theta)).collect();
            let decisions: Vec<_> = posteriors.iter().map(|p| p.decision).collect();
            let stats = ConfusionStats::from_decisions(&test_labels, &decisions, emotions.len())?;
            let k2 = 2.min(emotions.len());
            let k3 = 3.min(emotions.len());
            let metrics = RoundMetrics {
                fold: fi,
                repeat: r,
                train_size: fold.train.len(),
                oversampled_size: idx.len(),
                test_size: fold.test.len(),
                dl_classification_rate: dl_classification_rate(&stats)?,
                top2: topk_accuracy(&posteriors, &test_labels, k2)?,
                top3: topk_accuracy(&posteriors, &test_labels, k3)?,
                rejection_rate: stats.rejection_rate()?,
                chosen_c: model.machines.iter().map(|m| m.c).collect(),
                unconverged_machines: model.machines.iter().filter(|m| !m.converged).count(),
            };
            Ok(RoundOutput {
                metrics,
                test: fold.test.clone(),
                posteriors,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((captured, outputs))
}

impl EvaluationReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Numerical(format!("report JSON: {e}")))
    }

    /// One row per (fold, repeat).
    pub fn write_rounds_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<rounds csv>", e);
        writeln!(out, "fold,repeat,train_size,oversampled_size,test_size,dl_classification_rate,top2,top3,rejection_rate").map_err(io)?;
        for r in &self.rounds {
            writeln!(
                out,
                "{},{},{},{},{},{:?},{:?},{:?},{:?}",
                r.fold, r.repeat, r.train_size, r.oversampled_size, r.test_size, r.dl_classification_rate, r.top2, r.top3, r.rejection_rate
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// `theta,rejection_rate,accuracy`; accuracy is empty when every
    /// sample was rejected.
    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<curve csv>", e);
        writeln!(out, "theta,rejection_rate,accuracy").map_err(io)?;
        for p in &self.rejection_curve {
            let acc = p.accuracy.map(|a| format!("{a:?}")).unwrap_or_default();
            writeln!(out, "{:?},{:?},{acc}", p.theta, p.rejection_rate).map_err(io)?;
        }
        Ok(())
    }
}

/// Fits the deployable model on every row of `features`: normalizer and
/// projections, one balanced oversampling draw, then the calibrated
/// one-vs-all machines.
pub fn fit_model(features: &FeatureMatrix, cfg: &EvalConfig, seed: u64) -> Result<ModelBundle> {
    let corpus = features.manifest.corpus;
    let labels: Vec<usize> = (0..features.rows())
        .map(|i| {
            corpus
                .class_index(features.meta(i).emotion)
                .ok_or_else(|| Error::arg(format!("{} is not a {corpus} emotion", features.meta(i).emotion)))
        })
        .collect::<Result<_>>()?;
    let speakers: Vec<u32> = (0..features.rows()).map(|i| features.meta(i).speaker_id).collect();
    let x = Mat::new(features.data().to_vec(), features.rows(), features.cols())?;
    let reducer = Reducer::fit(&x, &speakers, cfg.norm, cfg.pca_mode, cfg.allocation).map_err(|e| e.in_stage("reduce"))?;
    let reduced = reducer.transform_matrix(&x, &speakers)?;
    let idx = oversample(&labels, derive_seed(seed, &[0xFEED, 1]));
    let ys: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    let mut classifier = train_ova(&reduced.select_rows(&idx), &ys, &idx, corpus.emotions(), &cfg.svm, derive_seed(seed, &[0xFEED, 2]))
        .map_err(|e| e.in_stage("train"))?;
    classifier.reject_threshold = cfg.theta;
    Ok(ModelBundle { reducer, classifier })
}
