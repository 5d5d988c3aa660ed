//! RIFF/WAVE decoding.

use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::Decode(format!("fmt chunk is {} bytes, need 16", body.len())));
    }
    let mut format = le_u16(body, 0);
    let bits = le_u16(body, 14);
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID whose
        // first two bytes carry the actual format code.
        if body.len() < 26 {
            return Err(Error::Decode("truncated WAVE_FORMAT_EXTENSIBLE header".into()));
        }
        format = le_u16(body, 24);
    }
    Ok(FmtChunk {
        format,
        channels: le_u16(body, 2),
        sample_rate: le_u32(body, 4),
        block_align: le_u16(body, 12),
        bits,
    })
}

/// Decodes a RIFF/WAVE byte buffer into a mono clip.
///
/// Integer PCM (8/16/24/32 bit) is scaled by `1/2^(bits-1)`; 8-bit data is
/// unsigned and re-centred first. IEEE float (32/64 bit) is taken as-is.
/// Multi-channel audio is mixed down by the arithmetic mean of the channels.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(Error::Decode("shorter than a RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::Decode("missing RIFF tag".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::Decode("missing WAVE form type".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos < bytes.len() {
        if pos + 8 > bytes.len() {
            return Err(Error::Decode(format!("truncated chunk header at byte {pos}")));
        }
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                Error::Decode(format!(
                    "chunk '{}' declares {size} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    bytes.len() - start
                ))
            })?;
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[start..end])?),
            b"data" => data = Some(&bytes[start..end]),
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::Decode("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Decode("no data chunk".into()))?;

    let supported = matches!(
        (fmt.format, fmt.bits),
        (FORMAT_PCM, 8 | 16 | 24 | 32) | (FORMAT_IEEE_FLOAT, 32 | 64)
    );
    if !supported {
        return Err(Error::UnsupportedFormat {
            format: fmt.format,
            bits: fmt.bits,
        });
    }
    if fmt.channels == 0 {
        return Err(Error::Decode("zero channels".into()));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::Decode("zero sample rate".into()));
    }
    let width = (fmt.bits / 8) as usize;
    let channels = fmt.channels as usize;
    if fmt.block_align as usize != width * channels {
        return Err(Error::Decode(format!(
            "block align {} inconsistent with {channels} x {}-bit samples",
            fmt.block_align, fmt.bits
        )));
    }
    let frame_bytes = width * channels;
    if data.len() % frame_bytes != 0 {
        return Err(Error::Decode(format!(
            "data chunk of {} bytes is not a whole number of {frame_bytes}-byte frames",
            data.len()
        )));
    }
    if data.is_empty() {
        return Err(Error::Decode("data chunk holds no samples".into()));
    }

    let decode = |s: &[u8]| -> f64 {
        match (fmt.format, fmt.bits) {
            (FORMAT_PCM, 8) => (s[0] as f64 - 128.0) / 128.0,
            (FORMAT_PCM, 16) => i16::from_le_bytes([s[0], s[1]]) as f64 / 32_768.0,
            (FORMAT_PCM, 24) => {
                let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
                v as f64 / 8_388_608.0
            }
            (FORMAT_PCM, 32) => i32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64 / 2_147_483_648.0,
            (FORMAT_IEEE_FLOAT, 32) => f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
            (FORMAT_IEEE_FLOAT, 64) => {
                f64::from_le_bytes([s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7]])
            }
            _ => unreachable!("format checked above"),
        }
    };

    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame.chunks_exact(width).map(decode).sum();
            sum / channels as f64
        })
        .collect();

    Ok(AudioClip::new(samples, fmt.sample_rate))
}

/// Reads and decodes a WAV file from disk.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut clip = parse_wav(&bytes)?;
    clip.source_path = path.display().to_string();
    Ok(clip)
}

fn riff_container(fmt_body: &[u8], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + fmt_body.len() + data.len());
    let riff_size = 4 + (8 + fmt_body.len()) + (8 + data.len() + (data.len() & 1));
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(riff_size as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&(fmt_body.len() as u32).to_le_bytes());
    out.extend_from_slice(fmt_body);
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(data);
    if data.len() & 1 == 1 {
        out.push(0);
    }
    out
}

fn fmt_body(format: u16, channels: u16, rate: u32, bits: u16) -> Vec<u8> {
    let block_align = channels * bits / 8;
    let mut b = Vec::with_capacity(16);
    b.extend_from_slice(&format.to_le_bytes());
    b.extend_from_slice(&channels.to_le_bytes());
    b.extend_from_slice(&rate.to_le_bytes());
    b.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    b.extend_from_slice(&block_align.to_le_bytes());
    b.extend_from_slice(&bits.to_le_bytes());
    b
}

/// Encodes interleaved 16-bit PCM samples as a canonical WAV file.
pub fn encode_wav_pcm16(interleaved: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let data: Vec<u8> = interleaved.iter().flat_map(|s| s.to_le_bytes()).collect();
    riff_container(&fmt_body(FORMAT_PCM, channels, sample_rate, 16), &data)
}

/// Encodes interleaved 32-bit float samples as a WAV file.
pub fn encode_wav_f32(interleaved: &[f32], channels: u16, sample_rate: u32) -> Vec<u8> {
    let data: Vec<u8> = interleaved.iter().flat_map(|s| s.to_le_bytes()).collect();
    riff_container(&fmt_body(FORMAT_IEEE_FLOAT, channels, sample_rate, 32), &data)
}
