//! Filename label conventions of the two corpora.

use super::{CorpusId, Emotion, Gender, Intensity, UtteranceMeta};
use crate::error::{Error, Result};

/// EMO-DB speaker roster: (speaker id, gender).
pub const EMODB_SPEAKERS: [(u32, Gender); 10] = [
    (3, Gender::Male),
    (8, Gender::Female),
    (9, Gender::Female),
    (10, Gender::Male),
    (11, Gender::Male),
    (12, Gender::Male),
    (13, Gender::Female),
    (14, Gender::Female),
    (15, Gender::Male),
    (16, Gender::Female),
];

/// EMO-DB sentence codes; the statement id is the 1-based position here.
const EMODB_TEXTS: [&str; 10] = ["a01", "a02", "a04", "a05", "a07", "b01", "b02", "b03", "b09", "b10"];

/// Emotion letters (German initials).
const EMODB_EMOTIONS: [(char, Emotion); 7] = [
    ('W', Emotion::Anger),
    ('L', Emotion::Boredom),
    ('E', Emotion::Disgust),
    ('A', Emotion::Fear),
    ('F', Emotion::Happiness),
    ('T', Emotion::Sadness),
    ('N', Emotion::Neutral),
];

/// RAVDESS emotion codes 01..=08.
const RAVDESS_EMOTIONS: [Emotion; 8] = [
    Emotion::Neutral,
    Emotion::Calm,
    Emotion::Happiness,
    Emotion::Sadness,
    Emotion::Anger,
    Emotion::Fear,
    Emotion::Disgust,
    Emotion::Surprise,
];

fn strip_wav(name: &str) -> &str {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    match base.len().checked_sub(4) {
        Some(cut) if base[cut..].eq_ignore_ascii_case(".wav") => &base[..cut],
        _ => base,
    }
}

/// Parses an EMO-DB name such as `03a01Fa.wav`.
pub fn parse_emodb_filename(name: &str) -> Result<UtteranceMeta> {
    let stem = strip_wav(name);
    let bad = |why: &str| Error::Manifest(format!("'{name}' is not an EMO-DB name: {why}"));
    let chars: Vec<char> = stem.chars().collect();
    if chars.len() != 7 {
        return Err(bad("expected 7 characters before the extension"));
    }
    if !chars[..2].iter().all(|c| c.is_ascii_digit()) {
        return Err(bad("speaker must be two digits"));
    }
    let speaker_id: u32 = stem[..2].parse().map_err(|_| bad("speaker"))?;
    let gender = EMODB_SPEAKERS
        .iter()
        .find(|(id, _)| *id == speaker_id)
        .map(|&(_, g)| g)
        .ok_or_else(|| bad(&format!("unknown speaker {speaker_id:02}")))?;
    let text: String = chars[2..5].iter().collect();
    let statement_id = EMODB_TEXTS
        .iter()
        .position(|t| *t == text)
        .ok_or_else(|| bad(&format!("unknown text code '{text}'")))? as u32
        + 1;
    let emotion = EMODB_EMOTIONS
        .iter()
        .find(|(c, _)| *c == chars[5])
        .map(|&(_, e)| e)
        .ok_or_else(|| bad(&format!("unknown emotion letter '{}'", chars[5])))?;
    if !chars[6].is_ascii_lowercase() {
        return Err(bad("version must be a lowercase letter"));
    }
    Ok(UtteranceMeta {
        corpus: CorpusId::EmoDb,
        emotion,
        speaker_id,
        gender,
        intensity: None,
        statement_id,
    })
}

/// Parses a RAVDESS name such as `03-01-06-01-02-01-12.wav`.
///
/// Only audio-only speech files (modality 03, vocal channel 01) are
/// accepted; song and video files are rejected.
pub fn parse_ravdess_filename(name: &str) -> Result<UtteranceMeta> {
    let stem = strip_wav(name);
    let bad = |why: &str| Error::Manifest(format!("'{name}' is not a RAVDESS speech name: {why}"));
    let fields: Vec<&str> = stem.split('-').collect();
    if fields.len() != 7 {
        return Err(bad(&format!("expected 7 fields, found {}", fields.len())));
    }
    let mut codes = [0u32; 7];
    for (slot, f) in codes.iter_mut().zip(&fields) {
        if f.len() != 2 || !f.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(&format!("field '{f}' is not two digits")));
        }
        *slot = f.parse().map_err(|_| bad("field"))?;
    }
    let [modality, channel, emotion, intensity, statement, repetition, actor] = codes;
    if modality != 3 {
        return Err(bad("modality is not audio-only (03)"));
    }
    if channel != 1 {
        return Err(bad("vocal channel is not speech (01)"));
    }
    let emotion = match emotion {
        1..=8 => RAVDESS_EMOTIONS[emotion as usize - 1],
        _ => return Err(bad(&format!("emotion code {emotion:02} out of range"))),
    };
    let intensity = match intensity {
        1 => Intensity::Normal,
        2 if emotion != Emotion::Neutral => Intensity::Strong,
        _ => return Err(bad(&format!("intensity code {intensity:02} invalid for {emotion}"))),
    };
    if !(1..=2).contains(&statement) || !(1..=2).contains(&repetition) {
        return Err(bad("statement and repetition must be 01 or 02"));
    }
    if !(1..=24).contains(&actor) {
        return Err(bad(&format!("actor {actor:02} out of range")));
    }
    Ok(UtteranceMeta {
        corpus: CorpusId::Ravdess,
        emotion,
        speaker_id: actor,
        gender: if actor % 2 == 1 { Gender::Male } else { Gender::Female },
        intensity: Some(intensity),
        statement_id: statement,
    })
}

/// Canonical text form of the embedded EMO-DB label tables.
pub fn emodb_label_table() -> String {
    let mut out = String::new();
    for (c, e) in EMODB_EMOTIONS {
        out.push_str(&format!("emotion {c} {e}\n"));
    }
    for (id, g) in EMODB_SPEAKERS {
        out.push_str(&format!("speaker {id:02} {}\n", g.as_str()));
    }
    for (i, t) in EMODB_TEXTS.iter().enumerate() {
        out.push_str(&format!("text {t} {}\n", i + 1));
    }
    out
}

/// Canonical text form of the embedded RAVDESS label tables.
pub fn ravdess_label_table() -> String {
    let mut out = String::new();
    for (i, e) in RAVDESS_EMOTIONS.iter().enumerate() {
        out.push_str(&format!("emotion {:02} {e}\n", i + 1));
    }
    out.push_str("intensity 01 normal\nintensity 02 strong\n");
    out.push_str("actor odd male\nactor even female\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn emodb_examples() {
        let m = parse_emodb_filename("03a01Fa.wav").unwrap();
        assert_eq!((m.speaker_id, m.emotion, m.gender), (3, Emotion::Happiness, Gender::Male));
        assert_eq!(m.statement_id, 1);
        let m = parse_emodb_filename("16b10Wb.wav").unwrap();
        assert_eq!((m.speaker_id, m.emotion, m.gender), (16, Emotion::Anger, Gender::Female));
        assert_eq!(m.statement_id, 10);
        assert!(matches!(parse_emodb_filename("03a01Xa.wav"), Err(Error::Manifest(_))));
        assert!(matches!(parse_emodb_filename("04a01Fa.wav"), Err(Error::Manifest(_))));
        assert!(matches!(parse_emodb_filename("03a03Fa.wav"), Err(Error::Manifest(_))));
        assert!(parse_emodb_filename("wav/03a01Fa.WAV").is_ok());
    }

    #[test]
    fn ravdess_examples() {
        let m = parse_ravdess_filename("03-01-06-01-02-01-12.wav").unwrap();
        assert_eq!(m.emotion, Emotion::Fear);
        assert_eq!(m.intensity, Some(Intensity::Normal));
        assert_eq!((m.speaker_id, m.gender, m.statement_id), (12, Gender::Female, 2));
        let m = parse_ravdess_filename("03-01-01-01-01-01-01.wav").unwrap();
        assert_eq!((m.emotion, m.speaker_id, m.gender), (Emotion::Neutral, 1, Gender::Male));
        assert!(matches!(
            parse_ravdess_filename("03-01-09-01-01-01-01.wav"),
            Err(Error::Manifest(_))
        ));
        // song, video, strong neutral, too few fields
        for bad in [
            "03-02-01-01-01-01-01.wav",
            "01-01-03-01-01-01-01.wav",
            "03-01-01-02-01-01-01.wav",
            "03-01-01-01-01-01.wav",
            "03-01-01-01-01-01-25.wav",
        ] {
            assert!(parse_ravdess_filename(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        // Parsers are total: every string either parses into a label set
        // drawn from the corpus inventory or fails with a manifest error.
        #[test]
        fn parsers_are_total(name in "[0-9a-zA-Z-]{0,24}(\\.wav)?") {
            match parse_emodb_filename(&name) {
                Ok(m) => prop_assert!(CorpusId::EmoDb.class_index(m.emotion).is_some()),
                Err(e) => prop_assert!(matches!(e, Error::Manifest(_))),
            }
            match parse_ravdess_filename(&name) {
                Ok(m) => prop_assert!(CorpusId::Ravdess.class_index(m.emotion).is_some()),
                Err(e) => prop_assert!(matches!(e, Error::Manifest(_))),
            }
        }

        #[test]
        fn ravdess_grammar_round_trip(
            emo in 1u32..=8, strong in any::<bool>(), st in 1u32..=2, rep in 1u32..=2, actor in 1u32..=24
        ) {
            let intensity = if strong && emo != 1 { 2 } else { 1 };
            let name = format!("03-01-{emo:02}-{intensity:02}-{st:02}-{rep:02}-{actor:02}.wav");
            let m = parse_ravdess_filename(&name).unwrap();
            prop_assert_eq!(m.speaker_id, actor);
            prop_assert_eq!(m.gender == Gender::Male, actor % 2 == 1);
        }
    }
}
