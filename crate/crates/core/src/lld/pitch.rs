//! Autocorrelation pitch tracking and the pitch-derived voice-quality
//! descriptors (jitter, shimmer).

use crate::dsp::autocorrelation;

pub const F0_MIN_HZ: f64 = 55.0;
pub const F0_MAX_HZ: f64 = 400.0;
/// Frames whose voicing probability falls below this report F0 = 0.
pub const VOICING_THRESHOLD: f64 = 0.3;
/// Smoothing factor of the F0 envelope.
pub const ENVELOPE_ALPHA: f64 = 0.1;
/// A local maximum within this fraction of the best one wins if it comes
/// at a shorter lag. Guards against picking a multiple of the period.
const PEAK_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    /// Fundamental frequency in Hz; 0 for unvoiced frames.
    pub f0_hz: f64,
    /// Clamped normalized autocorrelation at the chosen lag.
    pub voicing_prob: f64,
}

/// Normalized autocorrelation pitch estimate of one raw frame.
///
/// Lags covering 55..400 Hz are searched. Each lag's correlation is
/// normalized by the energies of the two overlapping segments, so the
/// measure is amplitude invariant and lies in `[-1, 1]`.
pub fn f0_and_voicing(frame: &[f64], sample_rate_hz: u32) -> PitchEstimate {
    let unvoiced = PitchEstimate {
        f0_hz: 0.0,
        voicing_prob: 0.0,
    };
    let sr = sample_rate_hz as f64;
    let min_lag = (sr / F0_MAX_HZ).floor().max(2.0) as usize;
    let max_lag = (sr / F0_MIN_HZ).ceil() as usize;
    if frame.len() <= max_lag + 2 {
        return unvoiced;
    }
    let energy: f64 = frame.iter().map(|v| v * v).sum();
    if energy <= 1e-12 * frame.len() as f64 {
        return unvoiced;
    }
    let r = autocorrelation(frame, max_lag + 1);
    // prefix sums of squares for the overlap energies
    let mut cum = Vec::with_capacity(frame.len() + 1);
    cum.push(0.0);
    for v in frame {
        cum.push(cum.last().unwrap() + v * v);
    }
    let n = frame.len();
    let nacf = |tau: usize| {
        let head = cum[n - tau];
        let tail = cum[n] - cum[tau];
        let d = (head * tail).sqrt();
        if d > 0.0 {
            r[tau] / d
        } else {
            0.0
        }
    };
    let values: Vec<f64> = (min_lag - 1..=max_lag + 1).map(nacf).collect();
    let at = |tau: usize| values[tau + 1 - min_lag];

    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&t| at(t) > at(t - 1) && at(t) >= at(t + 1) && at(t) > 0.0)
        .collect();
    let Some(best) = peaks.iter().map(|&t| at(t)).reduce(f64::max) else {
        return unvoiced;
    };
    let lag = peaks
        .iter()
        .copied()
        .find(|&t| at(t) >= PEAK_RATIO * best)
        .expect("best peak satisfies the ratio");

    let (y0, y1, y2) = (at(lag - 1), at(lag), at(lag + 1));
    let curvature = y0 - 2.0 * y1 + y2;
    let shift = if curvature < 0.0 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let voicing_prob = y1.clamp(0.0, 1.0);
    let f0_hz = if voicing_prob < VOICING_THRESHOLD {
        0.0
    } else {
        sr / (lag as f64 + shift)
    };
    PitchEstimate {
        f0_hz,
        voicing_prob,
    }
}

/// Exponentially smoothed F0 of voiced frames, held across unvoiced ones.
///
/// The envelope starts at the first voiced F0 and is 0 before it.
pub fn f0_envelope(f0: &[f64]) -> Vec<f64> {
    let mut env: Option<f64> = None;
    f0.iter()
        .map(|&f| {
            if f > 0.0 {
                env = Some(match env {
                    Some(e) => e + ENVELOPE_ALPHA * (f - e),
                    None => f,
                });
            }
            env.unwrap_or(0.0)
        })
        .collect()
}

/// Perceptual loudness proxy `rms^0.3`.
pub fn loudness(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    let ms = frame.iter().map(|v| v * v).sum::<f64>() / frame.len() as f64;
    ms.sqrt().powf(0.3)
}

/// Frame-level perturbation measures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoiceQuality {
    pub jitter_local: Vec<f64>,
    pub jitter_ddp: Vec<f64>,
    pub shimmer_local: Vec<f64>,
}

/// Jitter and shimmer from a per-frame F0 track and per-frame peak
/// amplitudes.
///
/// Periods are `1/f0` over voiced frames (`f0 > 0`). A measure is 0 where
/// any frame it spans is unvoiced and at the start of the sequence.
pub fn jitter_shimmer(f0: &[f64], peak_amplitudes: &[f64]) -> VoiceQuality {
    let n = f0.len();
    let voiced: Vec<bool> = f0.iter().map(|&f| f > 0.0).collect();
    let periods: Vec<f64> = f0.iter().map(|&f| if f > 0.0 { 1.0 / f } else { 0.0 }).collect();
    let count = voiced.iter().filter(|&&v| v).count();
    let mut out = VoiceQuality {
        jitter_local: vec![0.0; n],
        jitter_ddp: vec![0.0; n],
        shimmer_local: vec![0.0; n],
    };
    if count == 0 {
        return out;
    }
    let mean_t = periods.iter().sum::<f64>() / count as f64;
    let mean_a = (0..n).filter(|&i| voiced[i]).map(|i| peak_amplitudes[i]).sum::<f64>() / count as f64;
    for i in 1..n {
        if !(voiced[i] && voiced[i - 1]) {
            continue;
        }
        out.jitter_local[i] = (periods[i] - periods[i - 1]).abs() / mean_t;
        if mean_a > 0.0 {
            out.shimmer_local[i] = (peak_amplitudes[i] - peak_amplitudes[i - 1]).abs() / mean_a;
        }
        if i >= 2 && voiced[i - 2] {
            let d1 = periods[i] - periods[i - 1];
            let d0 = periods[i - 1] - periods[i - 2];
            out.jitter_ddp[i] = (d1 - d0).abs() / mean_t;
        }
    }
    out
}
