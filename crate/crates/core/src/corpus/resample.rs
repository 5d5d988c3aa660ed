//! Rational-ratio windowed-sinc resampling.

use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

pub const TARGET_RATE_HZ: u32 = 16_000;

/// Zero crossings of the sinc kernel kept on each side, counted at the
/// narrower of the two rates.
const ZERO_CROSSINGS: f64 = 16.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const PASSBAND: f64 = 0.9;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(x: f64, half_width: f64) -> f64 {
    if x.abs() >= half_width {
        return 0.0;
    }
    let r = PI * x / half_width;
    0.42 + 0.5 * r.cos() + 0.08 * (2.0 * r).cos()
}

/// Mirror an index into `[0, len)` without repeating the edge sample.
fn reflect(i: i64, len: usize) -> usize {
    let n = len as i64;
    if n == 1 {
        return 0;
    }
    let mut i = i;
    let period = 2 * (n - 1);
    i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Polyphase filter bank: one normalized tap set per output phase.
struct PolyphaseBank {
    up: u64,
    down: u64,
    taps_per_phase: usize,
    half: i64,
    table: Vec<f64>,
}

impl PolyphaseBank {
    fn new(from_hz: u32, to_hz: u32) -> Self {
        let g = gcd(from_hz as u64, to_hz as u64);
        let up = to_hz as u64 / g;
        let down = from_hz as u64 / g;
        let cutoff = PASSBAND * (to_hz as f64 / from_hz as f64).min(1.0);
        let half_width = ZERO_CROSSINGS / cutoff;
        let half = half_width.ceil() as i64;
        let taps_per_phase = 2 * half as usize;

        let mut table = vec![0.0; up as usize * taps_per_phase];
        for phase in 0..up as usize {
            let frac = phase as f64 / up as f64;
            let row = &mut table[phase * taps_per_phase..(phase + 1) * taps_per_phase];
            for (j, w) in row.iter_mut().enumerate() {
                // tap j multiplies input sample n0 - half + 1 + j
                let tau = frac + (half - 1 - j as i64) as f64;
                *w = cutoff * sinc(cutoff * tau) * blackman(tau, half_width);
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= sum);
        }
        PolyphaseBank {
            up,
            down,
            taps_per_phase,
            half,
            table,
        }
    }

    fn run(&self, input: &[f64]) -> Vec<f64> {
        let n_in = input.len() as u64;
        let n_out = (n_in * self.up).div_ceil(self.down) as usize;
        (0..n_out as u64)
            .map(|m| {
                let pos = m * self.down;
                let n0 = (pos / self.up) as i64;
                let phase = (pos % self.up) as usize;
                let taps = &self.table[phase * self.taps_per_phase..(phase + 1) * self.taps_per_phase];
                let first = n0 - self.half + 1;
                taps.iter()
                    .enumerate()
                    .map(|(j, w)| {
                        let idx = first + j as i64;
                        let x = if idx >= 0 && (idx as u64) < n_in {
                            input[idx as usize]
                        } else {
                            input[reflect(idx, input.len())]
                        };
                        w * x
                    })
                    .sum()
            })
            .collect()
    }
}

/// Resamples to an arbitrary rate. Identity when the rates already match.
pub fn resample(clip: &AudioClip, to_hz: u32) -> Result<AudioClip> {
    if clip.samples.is_empty() {
        return Err(Error::arg("cannot resample an empty clip"));
    }
    if clip.sample_rate_hz == 0 || to_hz == 0 {
        return Err(Error::arg("sample rates must be positive"));
    }
    if clip.sample_rate_hz == to_hz {
        return Ok(clip.clone());
    }
    let bank = PolyphaseBank::new(clip.sample_rate_hz, to_hz);
    Ok(AudioClip {
        samples: bank.run(&clip.samples),
        sample_rate_hz: to_hz,
        source_path: clip.source_path.clone(),
    })
}

/// Brings a clip to the common 16 kHz processing rate.
pub fn resample_to_16k(clip: &AudioClip) -> Result<AudioClip> {
    resample(clip, TARGET_RATE_HZ)
}
