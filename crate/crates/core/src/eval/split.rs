use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng;

/// Train and test row indices of one evaluation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    /// Fails with [`Error::Leakage`] if any row is on both sides.
    pub fn assert_disjoint(&self) -> Result<()> {
        let mut seen = vec![false; self.train.iter().chain(&self.test).max().map_or(0, |m| m + 1)];
        for &i in &self.train {
            seen[i] = true;
        }
        if let Some(&i) = self.test.iter().find(|&&i| seen[i]) {
            return Err(Error::Leakage(format!("row {i} is in both train and test")));
        }
        Ok(())
    }
}

fn members_by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    by_class
}

fn folds_from_assignment(assign: &[usize], k: usize) -> Vec<Fold> {
    (0..k)
        .map(|f| Fold {
            train: (0..assign.len()).filter(|&i| assign[i] != f).collect(),
            test: (0..assign.len()).filter(|&i| assign[i] == f).collect(),
        })
        .collect()
}

/// Stratified k-fold split. Each class is shuffled and dealt round-robin,
/// the fold pointer carrying over from one class to the next, so fold
/// sizes differ by at most one and so do per-class counts.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || k > labels.len() {
        return Err(Error::arg(format!("cannot make {k} folds from {} rows", labels.len())));
    }
    let mut rng = rng(seed);
    let mut assign = vec![0; labels.len()];
    let mut next = 0;
    for (_, mut members) in members_by_class(labels) {
        members.shuffle(&mut rng);
        for i in members {
            assign[i] = next % k;
            next += 1;
        }
    }
    Ok(folds_from_assignment(&assign, k))
}

/// k-fold split in which every speaker's rows fall in a single fold.
pub fn speaker_kfold(speakers: &[u32], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let mut ids: Vec<u32> = speakers.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if k < 2 || k > ids.len() {
        return Err(Error::arg(format!("cannot make {k} speaker folds from {} speakers", ids.len())));
    }
    ids.shuffle(&mut rng(seed));
    let fold_of: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i % k)).collect();
    let assign: Vec<usize> = speakers.iter().map(|s| fold_of[s]).collect();
    Ok(folds_from_assignment(&assign, k))
}

/// Stratified holdout. The test size is `round(test_fraction * n)`,
/// distributed over classes by largest remainder (ties to the lower class
/// index).
pub fn stratified_holdout(labels: &[usize], test_fraction: f64, seed: u64) -> Result<Fold> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::arg("test fraction must lie in (0, 1)"));
    }
    let n = labels.len();
    let by_class = members_by_class(labels);
    let total_test = (test_fraction * n as f64).round() as usize;
    let mut quota: Vec<(usize, usize, f64)> = by_class
        .iter()
        .map(|(&c, m)| {
            let exact = test_fraction * m.len() as f64;
            (c, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(quota[a].0.cmp(&quota[b].0)));
    for &o in order.iter().take(total_test.saturating_sub(assigned)) {
        quota[o].1 += 1;
    }
    let mut rng = rng(seed);
    let mut is_test = vec![false; n];
    for ((_, members), (_, q, _)) in by_class.into_iter().zip(&quota) {
        let mut members = members;
        members.shuffle(&mut rng);
        for &i in members.iter().take(*q) {
            is_test[i] = true;
        }
    }
    Ok(Fold {
        train: (0..n).filter(|&i| !is_test[i]).collect(),
        test: (0..n).filter(|&i| is_test[i]).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OversampleMode {
    /// Each repeat balances the training set with its own seed; metrics
    /// are averaged over repeats.
    Repeats,
    /// One training set holding all repeats' balanced draws.
    Pooled,
}

/// Positions (into `labels`) of a class-balanced training set: every
/// original row once, plus minority rows drawn with replacement until each
/// class matches the largest.
pub fn oversample(labels: &[usize], seed: u64) -> Vec<usize> {
    let by_class = members_by_class(labels);
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut rng = rng(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for members in by_class.values() {
        for _ in members.len()..target {
            out.push(*members.choose(&mut rng).unwrap());
        }
    }
    out
}
