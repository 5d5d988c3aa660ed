//! Binary container for fitted models.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "EMOP" u32 version=1 u8 pca_mode u8 norm_mode u32 dims
//! f64[dims] mean  f64[dims] std
//! u32 speakers, each: u32 id f64[dims] mean f64[dims] std
//! u32 subsets, each: u32 start u32 dims u32 k f64 total_variance
//!     f64[dims] mean f64[k] eigenvalues f64[dims*k] components
//! u32 machines f64 reject_threshold
//! each machine: "SVMB" u8 emotion u32 dim f64[dim] weights
//!     f64 bias f64 C f64 platt_a f64 platt_b u8 flags
//! ```
//!
//! `flags` bit 0 marks a converged solver, bit 1 a clamped calibration.

use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::Emotion;
use crate::dimred::{ColumnStats, NormMode, Normalizer, PcaBundle, PcaMode, Reducer, SubsetPca};
use crate::error::{Error, Result};
use crate::svm::{BinarySvm, OvaSvmModel};

const MAGIC: &[u8; 4] = b"EMOP";
const MACHINE_TAG: &[u8; 4] = b"SVMB";
const VERSION: u32 = 1;

/// Everything needed to classify a raw feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub reducer: Reducer,
    pub classifier: OvaSvmModel,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        v.iter().for_each(|&x| self.f64(x));
    }
    fn stats(&mut self, s: &ColumnStats) {
        self.f64s(&s.mean);
        self.f64s(&s.std);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Decode("model file is truncated".into()))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Decode("length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn stats(&mut self, dims: usize) -> Result<ColumnStats> {
        Ok(ColumnStats {
            mean: self.f64s(dims)?,
            std: self.f64s(dims)?,
        })
    }
}

fn norm_code(m: NormMode) -> u8 {
    match m {
        NormMode::Global => 0,
        NormMode::PerSpeaker => 1,
    }
}

impl ModelBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(VERSION as usize);
        let norm = &self.reducer.normalizer;
        w.u8(self.reducer.pca.mode.code());
        w.u8(norm_code(norm.mode));
        w.u32(norm.dims());
        w.stats(&norm.global);
        w.u32(norm.per_speaker.len());
        for (&id, s) in &norm.per_speaker {
            w.u32(id as usize);
            w.stats(s);
        }
        w.u32(self.reducer.pca.subsets.len());
        for s in &self.reducer.pca.subsets {
            w.u32(s.start);
            w.u32(s.dims);
            w.u32(s.k);
            w.f64(s.total_variance);
            w.f64s(&s.mean);
            w.f64s(&s.eigenvalues);
            w.f64s(&s.components);
        }
        w.u32(self.classifier.machines.len());
        w.f64(self.classifier.reject_threshold);
        for (m, e) in self.classifier.machines.iter().zip(&self.classifier.emotions) {
            w.0.extend_from_slice(MACHINE_TAG);
            w.u8(Emotion::ALL.iter().position(|x| x == e).unwrap() as u8);
            w.u32(m.weights.len());
            w.f64s(&m.weights);
            w.f64s(&[m.bias, m.c, m.platt_a, m.platt_b]);
            w.u8(u8::from(m.converged) | (u8::from(m.platt_clamped) << 1));
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("not an EMOP model file".into()));
        }
        let version = r.u32()?;
        if version != VERSION as usize {
            return Err(Error::Decode(format!("unsupported EMOP version {version}")));
        }
        let pca_mode = PcaMode::from_code(r.u8()?)?;
        let norm_mode = match r.u8()? {
            0 => NormMode::Global,
            1 => NormMode::PerSpeaker,
            other => return Err(Error::Decode(format!("unknown normalization byte {other}"))),
        };
        let dims = r.u32()?;
        let global = r.stats(dims)?;
        let mut per_speaker = BTreeMap::new();
        for _ in 0..r.u32()? {
            let id = r.u32()? as u32;
            per_speaker.insert(id, r.stats(dims)?);
        }
        let mut subsets = Vec::new();
        for _ in 0..r.u32()? {
            let (start, sdims, k) = (r.u32()?, r.u32()?, r.u32()?);
            let total_variance = r.f64()?;
            subsets.push(SubsetPca {
                start,
                dims: sdims,
                k,
                total_variance,
                mean: r.f64s(sdims)?,
                eigenvalues: r.f64s(k)?,
                components: r.f64s(sdims * k)?,
            });
        }
        let count = r.u32()?;
        let reject_threshold = r.f64()?;
        let mut emotions = Vec::new();
        let mut machines = Vec::new();
        for _ in 0..count {
            if r.take(4)? != MACHINE_TAG {
                return Err(Error::Decode("missing machine section tag".into()));
            }
            let code = r.u8()? as usize;
            emotions.push(
                *Emotion::ALL
                    .get(code)
                    .ok_or_else(|| Error::Decode(format!("unknown emotion code {code}")))?,
            );
            let dim = r.u32()?;
            let weights = r.f64s(dim)?;
            let tail = r.f64s(4)?;
            let flags = r.u8()?;
            machines.push(BinarySvm {
                weights,
                bias: tail[0],
                c: tail[1],
                platt_a: tail[2],
                platt_b: tail[3],
                converged: flags & 1 != 0,
                platt_clamped: flags & 2 != 0,
            });
        }
        if r.at != bytes.len() {
            return Err(Error::Decode("trailing bytes after model".into()));
        }
        Ok(ModelBundle {
            reducer: Reducer {
                normalizer: Normalizer {
                    mode: norm_mode,
                    global,
                    per_speaker,
                },
                pca: PcaBundle { mode: pca_mode, subsets },
            },
            classifier: OvaSvmModel {
                emotions,
                machines,
                reject_threshold,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
