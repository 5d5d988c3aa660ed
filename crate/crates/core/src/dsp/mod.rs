//! Framing, silence/unvoiced removal and the signal kernels shared by the
//! descriptor engine.

mod fft;
mod lpc;

use serde::{Deserialize, Serialize};

use crate::corpus::AudioClip;
use crate::error::{Error, Result};

pub use fft::{fft_in_place, fft_magnitude, hamming, power_spectrum};
pub use lpc::{autocorrelation, autocorrelation_direct, levinson_durbin, lpc_coefficients, Lpc};

pub const DEFAULT_FRAME_MS: f64 = 60.0;
pub const DEFAULT_HOP_MS: f64 = 10.0;

/// Overlapping analysis windows cut from a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    data: Vec<f64>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate_hz: u32,
    /// Start time of each frame in the source clip.
    pub timestamps_s: Vec<f64>,
}

impl FrameSeries {
    pub fn len(&self) -> usize {
        self.timestamps_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_s.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.frame_len)
    }

    pub fn hop_s(&self) -> f64 {
        self.hop as f64 / self.sample_rate_hz as f64
    }

    /// Keeps the frames whose mask entry is set, in order.
    pub fn select(&self, keep: &[bool]) -> FrameSeries {
        let mut data = Vec::new();
        let mut timestamps_s = Vec::new();
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            data.extend_from_slice(self.frame(i));
            timestamps_s.push(self.timestamps_s[i]);
        }
        FrameSeries {
            data,
            frame_len: self.frame_len,
            hop: self.hop,
            sample_rate_hz: self.sample_rate_hz,
            timestamps_s,
        }
    }
}

/// Samples in a window of `ms` milliseconds, rounded to nearest.
pub fn ms_to_samples(ms: f64, sample_rate_hz: u32) -> usize {
    (ms * 1e-3 * sample_rate_hz as f64).round() as usize
}

/// Cuts a clip into `frame_ms` windows every `hop_ms`. A trailing partial
/// frame is dropped.
pub fn frame_signal(clip: &AudioClip, frame_ms: f64, hop_ms: f64) -> Result<FrameSeries> {
    let frame_len = ms_to_samples(frame_ms, clip.sample_rate_hz);
    let hop = ms_to_samples(hop_ms, clip.sample_rate_hz);
    if frame_len == 0 || hop == 0 {
        return Err(Error::arg(format!(
            "frame {frame_ms} ms / hop {hop_ms} ms round to zero samples"
        )));
    }
    let n = clip.samples.len();
    if n < frame_len {
        return Err(Error::TooShort {
            samples: n,
            needed: frame_len,
        });
    }
    let count = (n - frame_len) / hop + 1;
    let mut data = Vec::with_capacity(count * frame_len);
    let mut timestamps_s = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * hop;
        data.extend_from_slice(&clip.samples[start..start + frame_len]);
        timestamps_s.push(start as f64 / clip.sample_rate_hz as f64);
    }
    Ok(FrameSeries {
        data,
        frame_len,
        hop,
        sample_rate_hz: clip.sample_rate_hz,
        timestamps_s,
    })
}

/// Thresholds of the unvoiced-segment filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadConfig {
    /// Absolute RMS floor in dBFS.
    pub energy_floor_db: f64,
    /// Frames more than this many dB below the loudest frame are candidates
    /// for removal.
    pub rel_db: f64,
    /// Candidates with voicing probability at or above this are kept.
    pub voicing_min: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            energy_floor_db: -60.0,
            rel_db: 30.0,
            voicing_min: 0.3,
        }
    }
}

/// Per-frame keep decisions of the unvoiced-segment filter.
#[derive(Debug, Clone, PartialEq)]
pub struct VoicingMask {
    pub keep: Vec<bool>,
    pub energy_db: Vec<f64>,
    pub voicing_prob: Vec<f64>,
}

/// RMS level in dBFS, floored at -200 dB.
pub fn frame_energy_db(frame: &[f64]) -> f64 {
    let ms = frame.iter().map(|v| v * v).sum::<f64>() / frame.len().max(1) as f64;
    10.0 * ms.max(1e-20).log10()
}

/// Drops frames that are both quiet and unvoiced.
///
/// A frame goes when its level is below `max(floor, loudest - rel_db)` and
/// its voicing probability is below `voicing_min`.
pub fn remove_unvoiced(frames: &FrameSeries, cfg: &VadConfig) -> Result<(FrameSeries, VoicingMask)> {
    let voicing: Vec<f64> = frames
        .iter()
        .map(|f| crate::lld::f0_and_voicing(f, frames.sample_rate_hz).voicing_prob)
        .collect();
    remove_unvoiced_with(frames, &voicing, cfg)
}

/// As [`remove_unvoiced`] with precomputed per-frame voicing probabilities.
pub fn remove_unvoiced_with(
    frames: &FrameSeries,
    voicing: &[f64],
    cfg: &VadConfig,
) -> Result<(FrameSeries, VoicingMask)> {
    if frames.is_empty() {
        return Err(Error::arg("no frames to filter"));
    }
    if voicing.len() != frames.len() {
        return Err(Error::arg(format!(
            "{} voicing values for {} frames",
            voicing.len(),
            frames.len()
        )));
    }
    let energy_db: Vec<f64> = frames.iter().map(frame_energy_db).collect();
    let loudest = energy_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = cfg.energy_floor_db.max(loudest - cfg.rel_db);
    let keep: Vec<bool> = energy_db
        .iter()
        .zip(voicing)
        .map(|(&e, &v)| !(e < threshold && v < cfg.voicing_min))
        .collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::AllUnvoiced);
    }
    let kept = frames.select(&keep);
    Ok((
        kept,
        VoicingMask {
            keep,
            energy_db,
            voicing_prob: voicing.to_vec(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn clip(samples: Vec<f64>) -> AudioClip {
        AudioClip::new(samples, 16_000)
    }

    fn sine(freq: f64, n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / 16_000.0).sin()).collect()
    }

    #[test]
    fn frame_counts() {
        let f = frame_signal(&clip(vec![0.0; 16_000]), 60.0, 10.0).unwrap();
        assert_eq!((f.len(), f.frame_len, f.hop), (95, 960, 160));
        assert_eq!(frame_signal(&clip(vec![0.0; 960]), 60.0, 10.0).unwrap().len(), 1);
        assert!(matches!(
            frame_signal(&clip(vec![0.0; 959]), 60.0, 10.0),
            Err(Error::TooShort { samples: 959, needed: 960 })
        ));
    }

    #[test]
    fn hop_prefixes_rebuild_signal() {
        let x: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        let f = frame_signal(&clip(x.clone()), 60.0, 10.0).unwrap();
        let mut rebuilt: Vec<f64> = f.iter().flat_map(|fr| fr[..f.hop].to_vec()).collect();
        rebuilt.extend_from_slice(&f.frame(f.len() - 1)[f.hop..]);
        assert_eq!(rebuilt, x[..rebuilt.len()].to_vec());
        assert_eq!(rebuilt.len(), (f.len() - 1) * f.hop + f.frame_len);
    }

    #[test]
    fn silence_is_all_unvoiced() {
        let f = frame_signal(&clip(vec![0.0; 8000]), 60.0, 10.0).unwrap();
        assert!(matches!(remove_unvoiced(&f, &VadConfig::default()), Err(Error::AllUnvoiced)));
    }

    #[test]
    fn full_scale_sine_fully_kept() {
        let f = frame_signal(&clip(sine(220.0, 16_000, 1.0)), 60.0, 10.0).unwrap();
        let (kept, mask) = remove_unvoiced(&f, &VadConfig::default()).unwrap();
        assert_eq!(kept.len(), f.len());
        assert!(mask.keep.iter().all(|&k| k));
    }

    #[test]
    fn sine_then_silence_boundary() {
        let mut x = sine(220.0, 8000, 0.5);
        x.extend(std::iter::repeat_n(0.0, 8000));
        let f = frame_signal(&clip(x), 60.0, 10.0).unwrap();
        let (kept, mask) = remove_unvoiced(&f, &VadConfig::default()).unwrap();
        // kept region is a prefix
        let last = mask.keep.iter().rposition(|&k| k).unwrap();
        assert!(mask.keep[..=last].iter().all(|&k| k));
        let centre = f.timestamps_s[last] + 0.030;
        assert!((centre - 0.5).abs() <= 0.060, "kept region ends at {centre}");
        assert_eq!(kept.len(), last + 1);
    }

    #[test]
    fn filter_is_idempotent() {
        let mut x = sine(150.0, 6000, 0.3);
        x.extend(std::iter::repeat_n(0.0, 3000));
        x.extend(sine(300.0, 4000, 0.01));
        x.extend(std::iter::repeat_n(1e-5, 3000));
        let f = frame_signal(&clip(x), 60.0, 10.0).unwrap();
        let cfg = VadConfig::default();
        let (once, _) = remove_unvoiced(&f, &cfg).unwrap();
        let (twice, _) = remove_unvoiced(&once, &cfg).unwrap();
        assert_eq!(once, twice);
    }
}
