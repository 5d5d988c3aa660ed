//! Mel filterbank descriptors: MFCC and log Mel band energies.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::dsp::{hamming, power_spectrum};

pub const NFFT: usize = 1024;
pub const MFCC_FILTERS: usize = 26;
pub const MFCC_COEFFS: usize = 15;
pub const LOG_MEL_BANDS: usize = 8;
pub const PRE_EMPHASIS: f64 = 0.97;
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale, evaluated at the
/// exact centre frequency of every FFT bin.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Corner frequencies in Hz: filter `j` spans `edges[j]..edges[j + 2]`
    /// and peaks at `edges[j + 1]`.
    pub edges_hz: Vec<f64>,
    weights: Vec<Vec<(usize, f64)>>,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, nfft: usize, sample_rate_hz: f64, fmin: f64, fmax: f64) -> Self {
        let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges_hz: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_filters + 1) as f64))
            .collect();
        let bin_hz = sample_rate_hz / nfft as f64;
        let weights = (0..n_filters)
            .map(|j| {
                let (l, c, r) = (edges_hz[j], edges_hz[j + 1], edges_hz[j + 2]);
                (0..=nfft / 2)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = ((f - l) / (c - l)).min((r - f) / (r - c));
                        (w > 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect();
        MelFilterbank { edges_hz, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn centre_hz(&self, j: usize) -> f64 {
        self.edges_hz[j + 1]
    }

    /// Weighted power per filter.
    pub fn energies(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|taps| taps.iter().map(|&(k, w)| w * power[k]).sum())
            .collect()
    }

    /// `ln(max(E_j, 1e-10))` per filter.
    pub fn log_energies(&self, power: &[f64]) -> Vec<f64> {
        self.energies(power).into_iter().map(|e| e.max(LOG_FLOOR).ln()).collect()
    }
}

/// DCT-II with the `sqrt(2/N)` scaling, first `n_out` coefficients.
pub fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let scale = (2.0 / n).sqrt();
    (0..n_out)
        .map(|k| {
            scale
                * x.iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n).cos())
                    .sum::<f64>()
        })
        .collect()
}

#[derive(Clone)]
struct Banks {
    mfcc: MelFilterbank,
    bands: MelFilterbank,
}

fn banks_16k() -> &'static Banks {
    static BANKS: OnceLock<Banks> = OnceLock::new();
    BANKS.get_or_init(|| Banks {
        mfcc: MelFilterbank::new(MFCC_FILTERS, NFFT, 16_000.0, 0.0, 8_000.0),
        bands: MelFilterbank::new(LOG_MEL_BANDS, NFFT, 16_000.0, 0.0, 8_000.0),
    })
}

/// Filterbanks for a sample rate; the 16 kHz ones are cached.
fn banks(sample_rate_hz: u32) -> std::borrow::Cow<'static, Banks> {
    if sample_rate_hz == 16_000 {
        std::borrow::Cow::Borrowed(banks_16k())
    } else {
        let sr = sample_rate_hz as f64;
        std::borrow::Cow::Owned(Banks {
            mfcc: MelFilterbank::new(MFCC_FILTERS, NFFT, sr, 0.0, sr / 2.0),
            bands: MelFilterbank::new(LOG_MEL_BANDS, NFFT, sr, 0.0, sr / 2.0),
        })
    }
}

fn windowed_power(frame: &[f64], pre_emphasis: bool) -> Vec<f64> {
    let window = hamming(frame.len());
    let x: Vec<f64> = frame
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = if pre_emphasis && i > 0 { v - PRE_EMPHASIS * frame[i - 1] } else { v };
            v * window[i]
        })
        .collect();
    let nfft = frame.len().next_power_of_two().max(NFFT);
    power_spectrum(&x, nfft).expect("nfft is a power of two covering the frame")
}

/// Cepstral coefficients 0..`n_coeffs` of a raw frame.
///
/// Pre-emphasis (0.97) and a Hamming window are applied here; the power
/// spectrum is pooled by 26 mel filters over 0 Hz..Nyquist, floored at
/// 1e-10, log-compressed and DCT-II transformed.
pub fn mfcc(frame: &[f64], sample_rate_hz: u32, n_coeffs: usize) -> Vec<f64> {
    let power = windowed_power(frame, true);
    let b = banks(sample_rate_hz);
    dct2(&b.mfcc.log_energies(&power), n_coeffs)
}

/// Log energies of 8 mel bands over 0 Hz..Nyquist (Hamming window, no
/// pre-emphasis).
pub fn log_mel_bands(frame: &[f64], sample_rate_hz: u32) -> Vec<f64> {
    let power = windowed_power(frame, false);
    banks(sample_rate_hz).bands.log_energies(&power)
}

/// The band filterbank used by [`log_mel_bands`].
pub fn band_filterbank(sample_rate_hz: u32) -> MelFilterbank {
    banks(sample_rate_hz).bands.clone()
}

/// The cepstral filterbank used by [`mfcc`].
pub fn mfcc_filterbank(sample_rate_hz: u32) -> MelFilterbank {
    banks(sample_rate_hz).mfcc.clone()
}
