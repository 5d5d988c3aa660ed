use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{
    parse_emodb_filename, parse_ravdess_filename, CorpusId, Emotion, Gender, Intensity,
    UtteranceMeta,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub meta: UtteranceMeta,
}

/// Labeled utterances of one corpus, ordered by path.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub corpus: CorpusId,
    pub entries: Vec<ManifestEntry>,
}

/// Optional restriction applied after scanning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ManifestFilter {
    pub intensity: Option<Intensity>,
    pub gender: Option<Gender>,
}

impl ManifestFilter {
    pub fn accepts(&self, meta: &UtteranceMeta) -> bool {
        // EMO-DB carries no intensity; the intensity filter only applies to
        // corpora that record one.
        let intensity_ok = match (self.intensity, meta.intensity) {
            (Some(want), Some(have)) => want == have,
            _ => true,
        };
        let gender_ok = self.gender.is_none_or(|g| g == meta.gender);
        intensity_ok && gender_ok
    }
}

/// Scans `root` recursively for `.wav` files whose names follow the corpus
/// convention. Files with foreign names are skipped.
pub fn build_manifest(root: &Path, corpus: CorpusId) -> Result<CorpusManifest> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let parse = match corpus {
        CorpusId::EmoDb => parse_emodb_filename,
        CorpusId::Ravdess => parse_ravdess_filename,
    };
    let mut entries = Vec::new();
    let mut skipped = 0usize;
    for item in WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let name = item.file_name().to_string_lossy();
        let is_wav = Path::new(name.as_ref())
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if !is_wav {
            continue;
        }
        match parse(&name) {
            Ok(meta) => entries.push(ManifestEntry {
                path: item.into_path(),
                meta,
            }),
            Err(e) => {
                skipped += 1;
                log::debug!("skipping {}: {e}", item.path().display());
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Manifest(format!(
            "no parsable {corpus} files under {} ({skipped} skipped)",
            root.display()
        )));
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(CorpusManifest { corpus, entries })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    path: String,
    corpus: CorpusId,
    emotion: Emotion,
    speaker: u32,
    gender: Gender,
    intensity: Option<Intensity>,
    statement: u32,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn filtered(&self, filter: &ManifestFilter) -> CorpusManifest {
        CorpusManifest {
            corpus: self.corpus,
            entries: self
                .entries
                .iter()
                .filter(|e| filter.accepts(&e.meta))
                .cloned()
                .collect(),
        }
    }

    /// Utterance count per emotion, in the corpus' class order.
    pub fn emotion_counts(&self) -> Vec<(Emotion, usize)> {
        self.corpus
            .emotions()
            .iter()
            .map(|&e| (e, self.entries.iter().filter(|x| x.meta.emotion == e).count()))
            .collect()
    }

    pub fn metas(&self) -> Vec<UtteranceMeta> {
        self.entries.iter().map(|e| e.meta).collect()
    }

    /// Writes `path,corpus,emotion,speaker,gender,intensity,statement` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for e in &self.entries {
            w.serialize(CsvRow {
                path: e.path.display().to_string(),
                corpus: e.meta.corpus,
                emotion: e.meta.emotion,
                speaker: e.meta.speaker_id,
                gender: e.meta.gender,
                intensity: e.meta.intensity,
                statement: e.meta.statement_id,
            })
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<manifest csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<CorpusManifest> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        let mut corpus = None;
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(csv_err)?;
            if *corpus.get_or_insert(row.corpus) != row.corpus {
                return Err(Error::Manifest("manifest mixes corpora".into()));
            }
            entries.push(ManifestEntry {
                path: PathBuf::from(row.path),
                meta: UtteranceMeta {
                    corpus: row.corpus,
                    emotion: row.emotion,
                    speaker_id: row.speaker,
                    gender: row.gender,
                    intensity: row.intensity,
                    statement_id: row.statement,
                },
            });
        }
        let corpus = corpus.ok_or_else(|| Error::Manifest("manifest has no rows".into()))?;
        for e in &entries {
            if corpus.class_index(e.meta.emotion).is_none() {
                return Err(Error::Manifest(format!(
                    "{} is labeled {} which {corpus} does not define",
                    e.path.display(),
                    e.meta.emotion
                )));
            }
        }
        Ok(CorpusManifest { corpus, entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<CorpusManifest> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Manifest(format!("manifest CSV: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(dir: &Path, name: &str) {
        std::fs::write(dir.join(name), b"").unwrap();
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_manifest(dir.path(), CorpusId::EmoDb),
            Err(Error::Manifest(_))
        ));
        assert!(matches!(
            build_manifest(&dir.path().join("missing"), CorpusId::EmoDb),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn scan_is_sorted_and_skips_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("Actor_02")).unwrap();
        std::fs::create_dir(dir.path().join("Actor_01")).unwrap();
        touch(&dir.path().join("Actor_02"), "03-01-05-02-01-01-02.wav");
        touch(&dir.path().join("Actor_01"), "03-01-01-01-01-01-01.wav");
        touch(&dir.path().join("Actor_01"), "03-02-01-01-01-01-01.wav"); // song
        touch(dir.path(), "readme.txt");
        let m = build_manifest(dir.path(), CorpusId::Ravdess).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.entries[0].path < m.entries[1].path);
        assert_eq!(m.entries[1].meta.emotion, Emotion::Anger);

        let strong = m.filtered(&ManifestFilter {
            intensity: Some(Intensity::Strong),
            gender: None,
        });
        assert_eq!(strong.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for n in ["03a01Fa.wav", "16b10Wb.wav", "08a02Na.wav"] {
            touch(dir.path(), n);
        }
        let m = build_manifest(dir.path(), CorpusId::EmoDb).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("path,corpus,emotion,speaker,gender,intensity,statement\n"));
        assert!(!text.contains('\r'));
        assert_eq!(CorpusManifest::read_csv(buf.as_slice()).unwrap(), m);
        let counts = m.emotion_counts();
        assert_eq!(counts.iter().map(|c| c.1).sum::<usize>(), 3);
    }
}
