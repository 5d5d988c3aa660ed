//! Frame-level low-level descriptors (LLDs).
//!
//! Column layout of [`LldMatrix`], fixed:
//!
//! | columns | descriptor |
//! |---------|------------|
//! | 0       | loudness |
//! | 1..=15  | mfcc0..mfcc14 |
//! | 16..=23 | logMelBand0..7 |
//! | 24..=31 | lspFreq0..7 |
//! | 32      | f0Env |
//! | 33      | voicingProb |
//! | 34      | f0Final |
//! | 35      | jitterLocal |
//! | 36      | jitterDDP |
//! | 37      | shimmerLocal |
//!
//! Columns 0..34 are the general descriptors, 34..38 the pitch-based ones.
//! Deltas share the layout.

mod delta;
mod lsp;
mod pitch;
mod spectral;

use std::io::Write;
use std::sync::OnceLock;

use crate::dsp::{hamming, lpc_coefficients, FrameSeries};
use crate::error::{Error, Result};

pub use delta::{delta_coefficients, DELTA_WINDOW};
pub use lsp::{line_spectral_frequencies, lsp_frequencies, lsp_polynomials, LspPolynomials, LSP_COUNT};
pub use pitch::{
    f0_and_voicing, f0_envelope, jitter_shimmer, loudness, PitchEstimate, VoiceQuality,
    ENVELOPE_ALPHA, F0_MAX_HZ, F0_MIN_HZ, VOICING_THRESHOLD,
};
pub use spectral::{
    band_filterbank, dct2, hz_to_mel, log_mel_bands, mel_to_hz, mfcc, mfcc_filterbank,
    MelFilterbank, LOG_FLOOR, LOG_MEL_BANDS, MFCC_COEFFS, MFCC_FILTERS, NFFT, PRE_EMPHASIS,
};

pub const GENERAL_LLDS: usize = 34;
pub const PITCH_LLDS: usize = 4;
pub const NUM_LLDS: usize = GENERAL_LLDS + PITCH_LLDS;
pub const LPC_ORDER: usize = 16;

/// Column names of [`LldMatrix`] in layout order.
pub fn descriptor_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut v = vec!["loudness".to_string()];
        v.extend((0..MFCC_COEFFS).map(|i| format!("mfcc{i}")));
        v.extend((0..LOG_MEL_BANDS).map(|i| format!("logMelBand{i}")));
        v.extend((0..LSP_COUNT).map(|i| format!("lspFreq{i}")));
        v.extend(
            ["f0Env", "voicingProb", "f0Final", "jitterLocal", "jitterDDP", "shimmerLocal"]
                .map(String::from),
        );
        debug_assert_eq!(v.len(), NUM_LLDS);
        v
    })
}

/// Per-frame descriptors and their deltas, row-major `frames x 38`.
#[derive(Debug, Clone, PartialEq)]
pub struct LldMatrix {
    pub num_frames: usize,
    pub values: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Frame start times in the source clip.
    pub timestamps_s: Vec<f64>,
}

impl LldMatrix {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(NUM_LLDS).copied().collect()
    }

    pub fn delta_column(&self, j: usize) -> Vec<f64> {
        self.deltas.iter().skip(j).step_by(NUM_LLDS).copied().collect()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * NUM_LLDS..(t + 1) * NUM_LLDS]
    }

    /// Writes one row per frame: `time`, 38 descriptors, 38 deltas.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let names = descriptor_names();
        let mut header = vec!["time".to_string()];
        header.extend(names.iter().cloned());
        header.extend(names.iter().map(|n| format!("{n}_de")));
        writeln!(out, "{}", header.join(","))?;
        for t in 0..self.num_frames {
            let mut row = vec![format!("{}", self.timestamps_s[t])];
            row.extend(self.row(t).iter().map(|v| v.to_string()));
            row.extend(self.deltas[t * NUM_LLDS..(t + 1) * NUM_LLDS].iter().map(|v| v.to_string()));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// LSFs of a frame, falling back to those of `A(z) = 1` (uniformly spaced)
/// when the frame admits no stable predictor.
fn frame_lsfs(frame: &[f64], window: &[f64]) -> Vec<f64> {
    let x: Vec<f64> = frame.iter().zip(window).map(|(a, b)| a * b).collect();
    lpc_coefficients(&x, LPC_ORDER)
        .and_then(|lpc| lsp_frequencies(&lpc.coeffs))
        .unwrap_or_else(|e| {
            log::trace!("LSP fallback: {e}");
            lsp_frequencies(&[0.0; LPC_ORDER]).expect("trivial predictor")
        })
}

/// Computes all descriptors for a (post-VAD) frame sequence.
///
/// `pitch` holds the per-frame pitch estimates of exactly these frames.
pub fn compute_llds(frames: &FrameSeries, pitch: &[PitchEstimate]) -> Result<LldMatrix> {
    let n = frames.len();
    if n == 0 {
        return Err(Error::arg("no frames"));
    }
    if pitch.len() != n {
        return Err(Error::arg(format!("{} pitch estimates for {n} frames", pitch.len())));
    }
    let sr = frames.sample_rate_hz;
    let window = hamming(frames.frame_len);
    let f0: Vec<f64> = pitch.iter().map(|p| p.f0_hz).collect();
    let envelope = f0_envelope(&f0);
    let peaks: Vec<f64> = frames
        .iter()
        .map(|f| f.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let quality = jitter_shimmer(&f0, &peaks);

    let mut values = Vec::with_capacity(n * NUM_LLDS);
    for (t, frame) in frames.iter().enumerate() {
        values.push(loudness(frame));
        values.extend(mfcc(frame, sr, MFCC_COEFFS));
        values.extend(log_mel_bands(frame, sr));
        values.extend(frame_lsfs(frame, &window));
        values.push(envelope[t]);
        values.push(pitch[t].voicing_prob);
        values.push(f0[t]);
        values.push(quality.jitter_local[t]);
        values.push(quality.jitter_ddp[t]);
        values.push(quality.shimmer_local[t]);
    }

    let mut deltas = vec![0.0; n * NUM_LLDS];
    for j in 0..NUM_LLDS {
        let col: Vec<f64> = values.iter().skip(j).step_by(NUM_LLDS).copied().collect();
        for (t, d) in delta_coefficients(&col).into_iter().enumerate() {
            deltas[t * NUM_LLDS + j] = d;
        }
    }
    if let Some(pos) = values.iter().chain(&deltas).position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite descriptor at flat index {pos}"
        )));
    }
    Ok(LldMatrix {
        num_frames: n,
        values,
        deltas,
        timestamps_s: frames.timestamps_s.clone(),
    })
}
