//! Run configuration as flat `key = value` text.
//!
//! Later sources override earlier ones: built-in defaults, then a config
//! file, then `--set key=value`, then dedicated command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use emoset::corpus::{Gender, Intensity};
use emoset::dimred::{NormMode, PcaMode};
use emoset::dsp::VadConfig;
use emoset::eval::{threshold_sweep, EvalConfig, OversampleMode, SplitMode, SplitPlan};
use emoset::extract::ExtractConfig;
use emoset::svm::{OvaTrainConfig, SolverParams};
use emoset::tsne::TsneConfig;

/// Every recognized key with its default value.
const DEFAULTS: &[(&str, &str)] = &[
    ("extract.frame_ms", "60"),
    ("extract.hop_ms", "10"),
    ("vad.energy_floor_db", "-60"),
    ("vad.rel_db", "30"),
    ("vad.voicing_min", "0.3"),
    ("manifest.intensity", "all"),
    ("scenario", "general"),
    ("gender", "both"),
    ("norm", "auto"),
    ("pca.mode", "per_subset"),
    ("pca.allocation", "90,8,2"),
    ("split", "kfold"),
    ("split.folds", "7"),
    ("split.test_fraction", "0.3"),
    ("split.repeats", "5"),
    ("split.speaker_independent", "false"),
    ("oversample", "repeats"),
    ("svm.c_grid", "0.03125,0.0625,0.125,0.25,0.5,1,2,4,8,16,32"),
    ("svm.inner_folds", "5"),
    ("svm.tolerance", "0.0001"),
    ("svm.max_epochs", "10000"),
    ("reject.threshold", "0"),
    ("reject.sweep", "0:1:0.05"),
    ("tsne.perplexity", "30"),
    ("tsne.iterations", "1000"),
    ("tsne.learning_rate", "200"),
    ("tsne.early_exaggeration", "12"),
    ("tsne.exaggeration_iters", "250"),
    ("tsne.after_pca", "false"),
    ("tsne.normalize", "true"),
    ("seed", "0"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.values.contains_key(key) {
            bail!("unknown configuration key {key:?}");
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key=value` text; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", n + 1))?;
            self.set(k.trim(), v).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.merge_text(&text)
    }

    pub fn get(&self, key: &str) -> &str {
        &self.values[key]
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .parse()
            .map_err(|e| anyhow::anyhow!("{key} = {:?}: {e}", self.get(key)))
    }

    /// The resolved configuration, one sorted `key = value` per line.
    pub fn render(&self) -> String {
        let mut out = format!("# emoset {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Validates every key by building all typed configurations.
    pub fn validate(&self) -> Result<()> {
        self.extract()?;
        self.intensity()?;
        self.gender()?;
        self.eval(self.get("scenario") == "gender")?;
        self.plan()?;
        self.tsne()?;
        match self.get("scenario") {
            "general" | "gender" => Ok(()),
            other => bail!("scenario must be general or gender, got {other:?}"),
        }
    }

    pub fn extract(&self) -> Result<ExtractConfig> {
        Ok(ExtractConfig {
            frame_ms: self.parse("extract.frame_ms")?,
            hop_ms: self.parse("extract.hop_ms")?,
            vad: VadConfig {
                energy_floor_db: self.parse("vad.energy_floor_db")?,
                rel_db: self.parse("vad.rel_db")?,
                voicing_min: self.parse("vad.voicing_min")?,
            },
        })
    }

    pub fn intensity(&self) -> Result<Option<Intensity>> {
        match self.get("manifest.intensity") {
            "all" => Ok(None),
            s => Ok(Some(s.parse()?)),
        }
    }

    pub fn gender(&self) -> Result<Option<Gender>> {
        match self.get("gender") {
            "both" => Ok(None),
            s => Ok(Some(s.parse()?)),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse("seed")
    }

    pub fn sweep(&self) -> Result<Vec<f64>> {
        parse_sweep(self.get("reject.sweep"))
    }

    /// Modelling settings; `auto` normalization means per-speaker for the
    /// gender-dependent scenario and global otherwise.
    pub fn eval(&self, gender_scenario: bool) -> Result<EvalConfig> {
        let norm = match self.get("norm") {
            "auto" if gender_scenario => NormMode::PerSpeaker,
            "auto" => NormMode::Global,
            s => s.parse()?,
        };
        let allocation: Vec<usize> = self
            .get("pca.allocation")
            .split(',')
            .map(|v| v.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .context("pca.allocation")?;
        let allocation: [usize; 3] = allocation
            .try_into()
            .map_err(|_| anyhow::anyhow!("pca.allocation needs three counts"))?;
        let c_grid: Vec<f64> = self
            .get("svm.c_grid")
            .split(',')
            .map(|v| v.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .context("svm.c_grid")?;
        if c_grid.is_empty() || c_grid.iter().any(|&c| !(c > 0.0)) {
            bail!("svm.c_grid needs positive values");
        }
        let theta: f64 = self.parse("reject.threshold")?;
        if !(0.0..=1.0).contains(&theta) {
            bail!("reject.threshold must lie in [0, 1]");
        }
        Ok(EvalConfig {
            norm,
            pca_mode: self.parse::<PcaMode>("pca.mode")?,
            allocation,
            svm: OvaTrainConfig {
                c_grid,
                inner_folds: self.parse("svm.inner_folds")?,
                solver: SolverParams {
                    tolerance: self.parse("svm.tolerance")?,
                    max_epochs: self.parse("svm.max_epochs")?,
                },
            },
            oversample: match self.get("oversample") {
                "repeats" => OversampleMode::Repeats,
                "pooled" => OversampleMode::Pooled,
                s => bail!("oversample must be repeats or pooled, got {s:?}"),
            },
            theta,
            sweep: self.sweep()?,
        })
    }

    pub fn plan(&self) -> Result<SplitPlan> {
        let mode = match self.get("split") {
            "kfold" => SplitMode::KFold {
                folds: self.parse("split.folds")?,
            },
            "holdout" => SplitMode::Holdout {
                test_fraction: self.parse("split.test_fraction")?,
            },
            s => bail!("split must be kfold or holdout, got {s:?}"),
        };
        Ok(SplitPlan {
            mode,
            repeats: self.parse("split.repeats")?,
            gender: self.gender()?,
            speaker_independent: self.parse("split.speaker_independent")?,
            seed: self.seed()?,
        })
    }

    pub fn tsne(&self) -> Result<TsneConfig> {
        Ok(TsneConfig {
            perplexity: self.parse("tsne.perplexity")?,
            iterations: self.parse("tsne.iterations")?,
            learning_rate: self.parse("tsne.learning_rate")?,
            early_exaggeration: self.parse("tsne.early_exaggeration")?,
            exaggeration_iters: self.parse("tsne.exaggeration_iters")?,
            seed: self.seed()?,
            ..TsneConfig::default()
        })
    }
}

/// Parses `start:end:step`.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("sweep {text:?} must be start:end:step"))?;
    let [start, end, step] = parts[..] else {
        bail!("sweep {text:?} must be start:end:step");
    };
    Ok(threshold_sweep(start, end, step)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn text_overrides_and_errors() {
        let mut c = RunConfig::default();
        c.merge_text("# comment\nsplit.folds = 5\n\nseed=9 # trailing\n").unwrap();
        assert_eq!(c.get("split.folds"), "5");
        assert_eq!(c.seed().unwrap(), 9);
        assert!(c.merge_text("nonsense = 1").is_err());
        assert!(c.merge_text("no equals sign").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut c = RunConfig::default();
        c.set("pca.mode", "joint").unwrap();
        let mut d = RunConfig::default();
        d.merge_text(&c.render()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn sweep_points() {
        assert_eq!(parse_sweep("0:1:0.05").unwrap().len(), 21);
        assert!(parse_sweep("0:1").is_err());
    }

    #[test]
    fn auto_normalization() {
        let c = RunConfig::default();
        assert_eq!(c.eval(false).unwrap().norm, NormMode::Global);
        assert_eq!(c.eval(true).unwrap().norm, NormMode::PerSpeaker);
    }
}
