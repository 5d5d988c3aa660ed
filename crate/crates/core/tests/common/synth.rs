//! Synthetic stand-ins for the corpora.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use emoset::corpus::{encode_wav_pcm16, CorpusId, CorpusManifest, Emotion, ManifestEntry, UtteranceMeta};
use emoset::corpus::{parse_emodb_filename, parse_ravdess_filename};
use emoset::features::FeatureMatrix;
use emoset::seed::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const EMODB_SPEAKER_IDS: [u32; 10] = [3, 8, 9, 10, 11, 12, 13, 14, 15, 16];
const EMODB_TEXTS: [&str; 10] = ["a01", "a02", "a04", "a05", "a07", "b01", "b02", "b03", "b09", "b10"];

/// Voice parameters of one emotion: pitch scale, pitch slope per second,
/// amplitude, harmonic roll-off and vibrato depth.
struct Voice {
    letter: char,
    pitch: f64,
    slope: f64,
    amplitude: f64,
    rolloff: f64,
    vibrato: f64,
}

const VOICES: [Voice; 7] = [
    Voice { letter: 'W', pitch: 1.35, slope: -0.20, amplitude: 0.60, rolloff: 0.80, vibrato: 0.02 },
    Voice { letter: 'L', pitch: 0.85, slope: -0.05, amplitude: 0.22, rolloff: 0.45, vibrato: 0.005 },
    Voice { letter: 'E', pitch: 0.95, slope: 0.10, amplitude: 0.35, rolloff: 0.55, vibrato: 0.03 },
    Voice { letter: 'A', pitch: 1.45, slope: 0.25, amplitude: 0.40, rolloff: 0.65, vibrato: 0.06 },
    Voice { letter: 'F', pitch: 1.25, slope: 0.30, amplitude: 0.55, rolloff: 0.75, vibrato: 0.015 },
    Voice { letter: 'T', pitch: 0.80, slope: -0.30, amplitude: 0.18, rolloff: 0.35, vibrato: 0.01 },
    Voice { letter: 'N', pitch: 1.00, slope: 0.00, amplitude: 0.32, rolloff: 0.55, vibrato: 0.0 },
];

pub const EMODB_LETTERS: [char; 7] = ['W', 'L', 'E', 'A', 'F', 'T', 'N'];

fn speaker_pitch(speaker: u32) -> f64 {
    let female = matches!(speaker, 8 | 9 | 13 | 14 | 16);
    let base = if female { 200.0 } else { 115.0 };
    base + 3.0 * (speaker % 7) as f64
}

/// A 16 kHz utterance: a short silence, a harmonic voiced segment shaped by
/// the emotion and speaker, another silence.
pub fn emodb_like_samples(letter: char, speaker: u32, variant: u64, seconds: f64) -> Vec<i16> {
    let voice = VOICES.iter().find(|v| v.letter == letter).expect("known emotion letter");
    let mut r = rng(variant ^ ((speaker as u64) << 32) ^ ((letter as u64) << 48));
    let noise = Normal::new(0.0, 1.0).unwrap();
    let rate = 16_000.0;
    let pad = (0.12 * rate) as usize;
    let voiced = (seconds * rate) as usize;
    let f0_base = speaker_pitch(speaker) * voice.pitch * (1.0 + 0.04 * r.random_range(-1.0..1.0));
    let amp = voice.amplitude * (1.0 + 0.1 * r.random_range(-1.0..1.0));
    let vib_rate = 5.0 + r.random_range(0.0..1.5);
    let mut out = Vec::with_capacity(voiced + 2 * pad);
    for _ in 0..pad {
        out.push(0.0005 * noise.sample(&mut r));
    }
    let mut phase = 0.0;
    for t in 0..voiced {
        let ts = t as f64 / rate;
        let f0 = f0_base * (1.0 + voice.slope * (ts - seconds / 2.0) + voice.vibrato * (2.0 * PI * vib_rate * ts).sin());
        phase += 2.0 * PI * f0 / rate;
        let env = (PI * t as f64 / voiced as f64).sin().powf(0.3);
        let mut s = 0.0;
        let mut h = 1;
        let mut gain = 1.0;
        while h as f64 * f0 < 4000.0 {
            s += gain * (h as f64 * phase).sin();
            gain *= voice.rolloff;
            h += 1;
        }
        out.push(amp * env * s / 2.5 + 0.002 * noise.sample(&mut r));
    }
    for _ in 0..pad {
        out.push(0.0005 * noise.sample(&mut r));
    }
    out.iter().map(|v| (v.clamp(-1.0, 1.0) * 32767.0).round() as i16).collect()
}

/// File name following the EMO-DB convention.
pub fn emodb_name(speaker: u32, letter: char, index: usize) -> String {
    let text = EMODB_TEXTS[index % EMODB_TEXTS.len()];
    let version = (b'a' + (index / EMODB_TEXTS.len()) as u8) as char;
    format!("{speaker:02}{text}{letter}{version}.wav")
}

/// Writes `per_cell` utterances for every (speaker, emotion) pair into
/// `dir` and returns the written paths.
pub fn write_emodb_like_corpus(dir: &Path, speakers: &[u32], per_cell: usize, seconds: f64) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    let mut paths = Vec::new();
    for &spk in speakers {
        for letter in EMODB_LETTERS {
            for k in 0..per_cell {
                let samples = emodb_like_samples(letter, spk, k as u64, seconds);
                let path = dir.join(emodb_name(spk, letter, k));
                std::fs::write(&path, encode_wav_pcm16(&samples, 1, 16_000)).unwrap();
                paths.push(path);
            }
        }
    }
    paths
}

fn ravdess_name(actor: u32, emotion_code: u32, k: usize) -> String {
    let intensity = if emotion_code == 1 { 1 } else { 1 + (k % 2) };
    let statement = 1 + (k / 2) % 2;
    let repetition = 1 + (k / 4) % 2;
    format!("03-01-{emotion_code:02}-{intensity:02}-{statement:02}-{repetition:02}-{actor:02}.wav")
}

/// Gaussian class clusters with per-speaker offsets, labeled like the
/// given corpus. `separation` scales the distance between class means
/// relative to unit within-class noise.
pub fn synthetic_features(
    corpus: CorpusId,
    speakers: &[u32],
    per_cell: usize,
    cols: usize,
    separation: f64,
    seed: u64,
) -> FeatureMatrix {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let emotions = corpus.emotions();
    let centres: Vec<Vec<f64>> = emotions
        .iter()
        .map(|_| (0..cols).map(|_| separation * normal.sample(&mut r)).collect())
        .collect();
    let mut entries = Vec::new();
    let mut data = Vec::new();
    for &spk in speakers {
        let offset: Vec<f64> = (0..cols).map(|_| 0.5 * normal.sample(&mut r)).collect();
        for (c, &emotion) in emotions.iter().enumerate() {
            for k in 0..per_cell {
                let name = match corpus {
                    CorpusId::EmoDb => emodb_name(spk, letter_of(emotion), k),
                    CorpusId::Ravdess => ravdess_name(spk, c as u32 + 1, k),
                };
                let meta: UtteranceMeta = match corpus {
                    CorpusId::EmoDb => parse_emodb_filename(&name).unwrap(),
                    CorpusId::Ravdess => parse_ravdess_filename(&name).unwrap(),
                };
                entries.push(ManifestEntry {
                    path: PathBuf::from(format!("synthetic/{name}")),
                    meta,
                });
                for j in 0..cols {
                    data.push(centres[c][j] + offset[j] + normal.sample(&mut r));
                }
            }
        }
    }
    FeatureMatrix::new(data, cols, CorpusManifest { corpus, entries }).unwrap()
}

fn letter_of(emotion: Emotion) -> char {
    match emotion {
        Emotion::Anger => 'W',
        Emotion::Boredom => 'L',
        Emotion::Disgust => 'E',
        Emotion::Fear => 'A',
        Emotion::Happiness => 'F',
        Emotion::Sadness => 'T',
        Emotion::Neutral => 'N',
        other => panic!("{other} is not an EMO-DB emotion"),
    }
}

/// Random normalized posteriors for `n` samples over `classes` classes,
/// biased towards the true class with probability `skill`.
pub fn random_posteriors(n: usize, classes: usize, skill: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let mut probs = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let t = r.random_range(0..classes);
        let mut p: Vec<f64> = (0..classes).map(|_| r.random_range(0.01..1.0)).collect();
        if r.random_bool(skill) {
            p[t] += 1.5;
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        probs.push(p);
        truth.push(t);
    }
    (probs, truth)
}
