//! Feature matrices and their on-disk formats.
//!
//! The binary format is the magic `EMOF`, then little-endian `u32` version
//! (1), rows and columns, then row-major little-endian `f64` values. Row
//! metadata lives in a sidecar manifest CSV (`<name>.meta.csv`) with one
//! row per matrix row.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::corpus::{CorpusManifest, UtteranceMeta};
use crate::error::{Error, Result};
use crate::functionals::feature_names;

const MAGIC: &[u8; 4] = b"EMOF";
const VERSION: u32 = 1;

/// Row-major feature matrix with one labeled utterance per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    cols: usize,
    pub manifest: CorpusManifest,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, cols: usize, manifest: CorpusManifest) -> Result<Self> {
        if cols == 0 || data.len() != cols * manifest.len() {
            return Err(Error::arg(format!(
                "{} values do not form {} rows of {cols}",
                data.len(),
                manifest.len()
            )));
        }
        Ok(FeatureMatrix {
            data,
            cols,
            manifest,
        })
    }

    pub fn rows(&self) -> usize {
        self.manifest.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn meta(&self, i: usize) -> &UtteranceMeta {
        &self.manifest.entries[i].meta
    }

    pub fn metas(&self) -> Vec<UtteranceMeta> {
        self.manifest.metas()
    }

    /// Keeps the rows for which `keep` returns true, in order.
    pub fn filter_rows(&self, mut keep: impl FnMut(&UtteranceMeta) -> bool) -> FeatureMatrix {
        let mut data = Vec::new();
        let mut entries = Vec::new();
        for (i, e) in self.manifest.entries.iter().enumerate() {
            if keep(&e.meta) {
                data.extend_from_slice(self.row(i));
                entries.push(e.clone());
            }
        }
        FeatureMatrix {
            data,
            cols: self.cols,
            manifest: CorpusManifest {
                corpus: self.manifest.corpus,
                entries,
            },
        }
    }

    pub fn write_emof<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.rows() as u32).to_le_bytes())?;
        out.write_all(&(self.cols as u32).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    }

    /// Reads the binary part; the caller supplies the row metadata.
    pub fn read_emof<R: Read>(mut input: R, manifest: CorpusManifest) -> Result<Self> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io("<feature file>", e))?;
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::Decode("not an EMOF feature file".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported EMOF version {version}")));
        }
        let (rows, cols) = (word(8) as usize, word(12) as usize);
        let body = &bytes[16..];
        if body.len() != rows * cols * 8 {
            return Err(Error::Decode(format!(
                "EMOF body holds {} bytes, header promises {rows}x{cols}",
                body.len()
            )));
        }
        if rows != manifest.len() {
            return Err(Error::Decode(format!(
                "{rows} feature rows but {} metadata rows",
                manifest.len()
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        FeatureMatrix::new(data, cols, manifest)
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("meta.csv")
    }

    /// Writes the binary file and its metadata sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_emof(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))?;
        self.manifest.save(&Self::sidecar_path(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest = CorpusManifest::load(&Self::sidecar_path(path))?;
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_emof(std::io::BufReader::new(f), manifest)
    }

    /// Plain CSV with metadata columns followed by one column per feature.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| Error::Manifest(format!("feature CSV: {e}"));
        let names = feature_names();
        let mut header = vec!["path", "corpus", "emotion", "speaker", "gender"];
        if self.cols == names.len() {
            header.extend(names.iter().map(String::as_str));
            w.write_record(&header).map_err(csv_err)?;
        } else {
            let generic: Vec<String> = (0..self.cols).map(|j| format!("x{j}")).collect();
            header.extend(generic.iter().map(String::as_str));
            w.write_record(&header).map_err(csv_err)?;
        }
        for (i, e) in self.manifest.entries.iter().enumerate() {
            let mut record = vec![
                e.path.display().to_string(),
                e.meta.corpus.to_string(),
                e.meta.emotion.to_string(),
                e.meta.speaker_id.to_string(),
                e.meta.gender.as_str().to_string(),
            ];
            record.extend(self.row(i).iter().map(|v| format!("{v:?}")));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<feature csv>", e))
    }
}
