//! Audio ingest and corpus bookkeeping.
//!
//! WAV decoding, resampling to the common 16 kHz processing rate, and the
//! filename conventions of the EMO-DB and RAVDESS corpora.

mod manifest;
mod names;
mod resample;
mod wav;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use manifest::{build_manifest, CorpusManifest, ManifestEntry, ManifestFilter};
pub use names::{
    emodb_label_table, parse_emodb_filename, parse_ravdess_filename, ravdess_label_table,
    EMODB_SPEAKERS,
};
pub use resample::{resample, resample_to_16k, TARGET_RATE_HZ};
pub use wav::{encode_wav_f32, encode_wav_pcm16, parse_wav, read_wav};

/// Sample rates accepted on ingest.
pub const INGEST_RATES_HZ: [u32; 4] = [16_000, 22_050, 44_100, 48_000];

/// Decoded mono audio, samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub source_path: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        AudioClip {
            samples,
            sample_rate_hz,
            source_path: String::new(),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusId {
    EmoDb,
    Ravdess,
}

impl CorpusId {
    /// The corpus' emotion inventory in its fixed class order.
    ///
    /// This order defines class indices everywhere downstream and breaks
    /// argmax ties.
    pub fn emotions(self) -> &'static [Emotion] {
        use Emotion::*;
        match self {
            CorpusId::EmoDb => &[Anger, Boredom, Disgust, Fear, Happiness, Neutral, Sadness],
            CorpusId::Ravdess => &[
                Neutral, Calm, Happiness, Sadness, Anger, Fear, Disgust, Surprise,
            ],
        }
    }

    pub fn class_index(self, emotion: Emotion) -> Option<usize> {
        self.emotions().iter().position(|&e| e == emotion)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusId::EmoDb => "emodb",
            CorpusId::Ravdess => "ravdess",
        }
    }
}

impl fmt::Display for CorpusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "emodb" | "emo-db" => Ok(CorpusId::EmoDb),
            "ravdess" => Ok(CorpusId::Ravdess),
            other => Err(Error::Manifest(format!("unknown corpus '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Boredom,
    Disgust,
    Fear,
    Happiness,
    Neutral,
    Sadness,
    Calm,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 9] = [
        Emotion::Anger,
        Emotion::Boredom,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happiness,
        Emotion::Neutral,
        Emotion::Sadness,
        Emotion::Calm,
        Emotion::Surprise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Boredom => "boredom",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happiness => "happiness",
            Emotion::Neutral => "neutral",
            Emotion::Sadness => "sadness",
            Emotion::Calm => "calm",
            Emotion::Surprise => "surprise",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Manifest(format!("unknown emotion '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            other => Err(Error::Manifest(format!("unknown gender '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intensity {
    Normal,
    Strong,
}

impl Intensity {
    pub fn as_str(self) -> &'static str {
        match self {
            Intensity::Normal => "normal",
            Intensity::Strong => "strong",
        }
    }
}

impl FromStr for Intensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "normal" => Ok(Intensity::Normal),
            "strong" => Ok(Intensity::Strong),
            other => Err(Error::Manifest(format!("unknown intensity '{other}'"))),
        }
    }
}

/// Labels recovered from a corpus filename.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UtteranceMeta {
    pub corpus: CorpusId,
    pub emotion: Emotion,
    pub speaker_id: u32,
    pub gender: Gender,
    pub intensity: Option<Intensity>,
    pub statement_id: u32,
}
