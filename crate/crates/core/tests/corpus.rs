mod common;

use std::path::PathBuf;

use emoset::corpus::{
    build_manifest, emodb_label_table, encode_wav_pcm16, parse_emodb_filename, parse_ravdess_filename, parse_wav,
    ravdess_label_table, CorpusId, Emotion, Gender, Intensity,
};
use emoset::functionals::{functional, FunctionalId};
use proptest::prelude::*;
use sha2::{Digest, Sha256};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn committed_checksum(name: &str) -> String {
    let list = std::fs::read_to_string(fixture("labels.sha256")).unwrap();
    list.lines()
        .find_map(|l| l.strip_suffix(name).map(|h| h.trim().to_string()))
        .unwrap_or_else(|| panic!("no checksum for {name}"))
}

#[test]
fn label_tables_match_documented_fixtures() {
    for (name, table) in [("emodb_labels.txt", emodb_label_table()), ("ravdess_labels.txt", ravdess_label_table())] {
        let documented = std::fs::read_to_string(fixture(name)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(documented.as_bytes())), committed_checksum(name));
        assert_eq!(table, documented, "{name}");
    }
}

#[test]
fn filename_examples() {
    let m = parse_emodb_filename("03a01Fa.wav").unwrap();
    assert_eq!((m.speaker_id, m.emotion, m.gender), (3, Emotion::Happiness, Gender::Male));
    let m = parse_emodb_filename("16b10Wb.wav").unwrap();
    assert_eq!((m.speaker_id, m.emotion, m.gender), (16, Emotion::Anger, Gender::Female));
    assert!(parse_emodb_filename("03a01Xa.wav").is_err());

    let m = parse_ravdess_filename("03-01-06-01-02-01-12.wav").unwrap();
    assert_eq!(
        (m.emotion, m.intensity, m.speaker_id, m.gender),
        (Emotion::Fear, Some(Intensity::Normal), 12, Gender::Female)
    );
    let m = parse_ravdess_filename("03-01-01-01-01-01-01.wav").unwrap();
    assert_eq!((m.emotion, m.speaker_id, m.gender), (Emotion::Neutral, 1, Gender::Male));
    assert!(parse_ravdess_filename("03-01-09-01-01-01-01.wav").is_err());
}

fn reference_samples(name: &str) -> (u32, Vec<f64>) {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let mut rate = 0;
    let mut length = 0;
    let mut samples = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        if let Some(v) = line.strip_prefix("rate ") {
            rate = v.parse().unwrap();
        } else if let Some(v) = line.strip_prefix("length ") {
            length = v.parse().unwrap();
        } else {
            samples.push(line.parse().unwrap());
        }
    }
    assert_eq!(samples.len(), length);
    (rate, samples)
}

#[test]
fn decoding_agrees_with_reference_decoder() {
    for (wav, reference) in [
        ("stereo_pcm16_48k.wav", "stereo_pcm16_48k.reference.txt"),
        ("mono_f32_16k.wav", "mono_f32_16k.reference.txt"),
    ] {
        let clip = parse_wav(&std::fs::read(fixture(wav)).unwrap()).unwrap();
        let (rate, want) = reference_samples(reference);
        assert_eq!(clip.sample_rate_hz, rate);
        assert!(clip.samples.len().abs_diff(want.len()) <= 1);
        for (a, b) in clip.samples.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{wav}: {a} vs {b}");
        }
    }
}

#[test]
fn manifest_of_synthetic_ravdess_tree() {
    let tmp = tempfile::tempdir().unwrap();
    // two actors in nested folders, plus a song file and a stray text file
    let mut expected = 0;
    for actor in [1u32, 2] {
        let dir = tmp.path().join(format!("Actor_{actor:02}"));
        std::fs::create_dir_all(&dir).unwrap();
        for emotion in 1..=8u32 {
            let intensities: &[u32] = if emotion == 1 { &[1] } else { &[1, 2] };
            for &intensity in intensities {
                for statement in 1..=2 {
                    for rep in 1..=2 {
                        let name = format!("03-01-{emotion:02}-{intensity:02}-{statement:02}-{rep:02}-{actor:02}.wav");
                        std::fs::write(dir.join(name), encode_wav_pcm16(&[0; 16], 1, 48_000)).unwrap();
                        expected += 1;
                    }
                }
            }
        }
        std::fs::write(dir.join(format!("03-02-01-01-01-01-{actor:02}.wav")), encode_wav_pcm16(&[0; 16], 1, 48_000))
            .unwrap();
        std::fs::write(dir.join("notes.txt"), "x").unwrap();
    }
    let manifest = build_manifest(tmp.path(), CorpusId::Ravdess).unwrap();
    assert_eq!(manifest.len(), expected);
    assert_eq!(expected, 2 * 60);
    let counts = manifest.emotion_counts();
    let neutral = counts.iter().find(|(e, _)| *e == Emotion::Neutral).unwrap().1;
    assert!(counts.iter().filter(|(e, _)| *e != Emotion::Neutral).all(|&(_, c)| c == 2 * neutral));
    let paths: Vec<_> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
    assert_eq!(manifest, build_manifest(tmp.path(), CorpusId::Ravdess).unwrap());
}

proptest! {
    #[test]
    fn emodb_parser_is_total(name in "[0-9]{2}[ab][0-9]{2}[A-Z][a-z]\\.wav") {
        if let Ok(m) = parse_emodb_filename(&name) {
            prop_assert!(CorpusId::EmoDb.class_index(m.emotion).is_some());
        }
    }

    #[test]
    fn ravdess_parser_is_total(fields in prop::collection::vec(0u32..30, 7)) {
        let name = fields.iter().map(|f| format!("{f:02}")).collect::<Vec<_>>().join("-") + ".wav";
        if let Ok(m) = parse_ravdess_filename(&name) {
            prop_assert_eq!(m.speaker_id, fields[6]);
            prop_assert!(CorpusId::Ravdess.class_index(m.emotion).is_some());
        }
    }

    #[test]
    fn pcm16_round_trip_is_exact(samples in prop::collection::vec(any::<i16>(), 1..400)) {
        let clip = parse_wav(&encode_wav_pcm16(&samples, 1, 16_000)).unwrap();
        let back: Vec<i16> = clip.samples.iter().map(|v| (v * 32768.0).round() as i16).collect();
        prop_assert_eq!(back, samples);
    }

    #[test]
    fn shuffling_frames_keeps_order_free_functionals(track in prop::collection::vec(-50.0f64..50.0, 3..120),
                                                    rotate in 1usize..119) {
        let mut shuffled = track.clone();
        let r = rotate % track.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        for id in [FunctionalId::Mean, FunctionalId::StdDev, FunctionalId::Quartile1, FunctionalId::Median,
                   FunctionalId::Quartile3, FunctionalId::Max, FunctionalId::Min, FunctionalId::Percentile99] {
            let a = functional(&track, id).unwrap();
            let b = functional(&shuffled, id).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{:?}: {} vs {}", id, a, b);
        }
    }
}

#[test]
fn shuffling_frames_moves_order_sensitive_functionals() {
    let track: Vec<f64> = (0..50).map(|t| t as f64 * 0.5 + (t % 3) as f64).collect();
    let mut reversed = track.clone();
    reversed.reverse();
    for id in [FunctionalId::LinRegSlope, FunctionalId::MaxPos, FunctionalId::MinPos] {
        assert_ne!(functional(&track, id).unwrap(), functional(&reversed, id).unwrap(), "{id:?}");
    }
}
