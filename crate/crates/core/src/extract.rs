//! Audio-to-feature-vector pipeline and corpus-level extraction with a
//! content-addressed cache.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{parse_wav, resample_to_16k, AudioClip, CorpusManifest, ManifestEntry};
use crate::dsp::{frame_signal, remove_unvoiced_with, VadConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::functionals::{assemble_feature_vector, FeatureVector, FEATURE_DIM};
use crate::lld::{compute_llds, f0_and_voicing};

/// Bumped whenever extraction output changes for identical inputs; part of
/// the cache key.
pub const EXTRACTOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub vad: VadConfig,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            frame_ms: 60.0,
            hop_ms: 10.0,
            vad: VadConfig::default(),
        }
    }
}

impl ExtractConfig {
    /// Canonical text used in cache keys.
    fn fingerprint(&self) -> String {
        format!(
            "v{EXTRACTOR_VERSION};frame_ms={:?};hop_ms={:?};floor={:?};rel={:?};voicing={:?}",
            self.frame_ms,
            self.hop_ms,
            self.vad.energy_floor_db,
            self.vad.rel_db,
            self.vad.voicing_min
        )
    }
}

/// Runs resampling, framing, silence removal, descriptor extraction and
/// functional assembly on one clip.
pub fn extract_clip(clip: &AudioClip, cfg: &ExtractConfig) -> Result<FeatureVector> {
    let clip = resample_to_16k(clip).map_err(|e| e.in_stage("resample"))?;
    let frames = frame_signal(&clip, cfg.frame_ms, cfg.hop_ms).map_err(|e| e.in_stage("framing"))?;
    let pitch: Vec<_> = frames
        .iter()
        .map(|f| f0_and_voicing(f, frames.sample_rate_hz))
        .collect();
    let voicing: Vec<f64> = pitch.iter().map(|p| p.voicing_prob).collect();
    let (kept, mask) =
        remove_unvoiced_with(&frames, &voicing, &cfg.vad).map_err(|e| e.in_stage("vad"))?;
    let kept_pitch: Vec<_> = pitch
        .iter()
        .zip(&mask.keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| *p)
        .collect();
    let llds = compute_llds(&kept, &kept_pitch).map_err(|e| e.in_stage("lld"))?;
    assemble_feature_vector(&llds, kept.hop_s()).map_err(|e| e.in_stage("functionals"))
}

/// Hex SHA-256 over the extractor fingerprint and the file bytes.
pub fn cache_key(bytes: &[u8], cfg: &ExtractConfig) -> String {
    let mut h = Sha256::new();
    h.update(cfg.fingerprint().as_bytes());
    h.update([0u8]);
    h.update(bytes);
    hex::encode(h.finalize())
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.f64"))
}

fn cache_load(dir: &Path, key: &str) -> Option<FeatureVector> {
    let bytes = std::fs::read(cache_path(dir, key)).ok()?;
    if bytes.len() != FEATURE_DIM * 8 {
        return None;
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Some(FeatureVector { values })
}

fn cache_store(dir: &Path, key: &str, fv: &FeatureVector) -> Result<()> {
    let bytes: Vec<u8> = fv.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    let final_path = cache_path(dir, key);
    let tmp = dir.join(format!("{key}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &final_path).map_err(|e| Error::io(&final_path, e))
}

/// Extracts one file, consulting and filling the cache when given.
pub fn extract_file(path: &Path, cfg: &ExtractConfig, cache: Option<&Path>) -> Result<FeatureVector> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let key = cache.map(|_| cache_key(&bytes, cfg));
    if let (Some(dir), Some(key)) = (cache, &key) {
        if let Some(fv) = cache_load(dir, key) {
            return Ok(fv);
        }
    }
    let mut clip = parse_wav(&bytes).map_err(|e| e.in_stage("decode"))?;
    clip.source_path = path.display().to_string();
    let fv = extract_clip(&clip, cfg)?;
    if let (Some(dir), Some(key)) = (cache, &key) {
        if let Err(e) = cache_store(dir, key, &fv) {
            log::warn!("cache write failed: {e}");
        }
    }
    Ok(fv)
}

/// A file that could not be turned into a feature vector.
#[derive(Debug)]
pub struct ExtractionFailure {
    pub path: PathBuf,
    pub error: Error,
}

#[derive(Debug)]
pub struct ExtractionOutcome {
    pub features: FeatureMatrix,
    pub failures: Vec<ExtractionFailure>,
}

impl ExtractionOutcome {
    pub fn failure_rate(&self) -> f64 {
        let total = self.features.rows() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }
}

/// Extracts every manifest entry in parallel. Failed utterances are logged
/// and left out; row order follows the manifest regardless of scheduling.
pub fn extract_manifest(
    manifest: &CorpusManifest,
    cfg: &ExtractConfig,
    cache: Option<&Path>,
) -> Result<ExtractionOutcome> {
    if let Some(dir) = cache {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let results: Vec<Result<FeatureVector>> = manifest
        .entries
        .par_iter()
        .map(|e| extract_file(&e.path, cfg, cache))
        .collect();
    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut data = Vec::new();
    let mut failures = Vec::new();
    for (entry, res) in manifest.entries.iter().zip(results) {
        match res {
            Ok(fv) => {
                data.extend_from_slice(&fv.values);
                entries.push(entry.clone());
            }
            Err(error) => {
                log::warn!("skipping {}: {error}", entry.path.display());
                failures.push(ExtractionFailure {
                    path: entry.path.clone(),
                    error,
                });
            }
        }
    }
    let manifest = CorpusManifest {
        corpus: manifest.corpus,
        entries,
    };
    Ok(ExtractionOutcome {
        features: FeatureMatrix::new(data, FEATURE_DIM, manifest)?,
        failures,
    })
}
