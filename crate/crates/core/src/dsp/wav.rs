//! RIFF/WAVE 16-bit PCM reading and writing.

use std::fs;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Reads a 16-bit PCM WAV file, downmixing stereo to mono.
///
/// The clip's `source_id` is the file stem.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_wav(&bytes, stem)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    channels: u16,
    sample_rate: u32,
    block_align: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::Format(format!(
            "fmt chunk is {} bytes, expected at least 16",
            body.len()
        )));
    }
    let mut audio_format = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits = u16_at(body, 14);
    if audio_format == FORMAT_EXTENSIBLE && body.len() >= 26 {
        // The first two bytes of the sub-format GUID carry the real format code.
        audio_format = u16_at(body, 24);
    }
    if audio_format != FORMAT_PCM {
        return Err(Error::UnsupportedFormat {
            field: "audio_format",
            value: format!("{audio_format:#06x} (only integer PCM is supported)"),
        });
    }
    if bits != 16 {
        return Err(Error::UnsupportedFormat {
            field: "bits_per_sample",
            value: format!("{bits} (only 16-bit is supported)"),
        });
    }
    if channels != 1 && channels != 2 {
        return Err(Error::UnsupportedFormat {
            field: "channels",
            value: format!("{channels} (only mono and stereo are supported)"),
        });
    }
    if sample_rate == 0 {
        return Err(Error::Format("sample rate is zero".into()));
    }
    if block_align != channels * 2 {
        return Err(Error::Format(format!(
            "block_align {block_align} inconsistent with {channels} channel(s) of 16-bit samples"
        )));
    }
    Ok(FmtChunk {
        channels,
        sample_rate,
        block_align,
    })
}

/// Decodes an in-memory WAV file.
pub fn decode_wav(bytes: &[u8], source_id: impl Into<String>) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(Error::Format("file shorter than the 12-byte RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::Format("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("RIFF form type is not WAVE".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start.checked_add(size).unwrap_or(usize::MAX);
        if id == b"data" {
            // Tolerate a data chunk whose declared size overruns the file (common
            // in streamed recordings), but never read past the end.
            data = Some(&bytes[body_start..body_end.min(bytes.len())]);
        } else if id == b"fmt " {
            if body_end > bytes.len() {
                return Err(Error::Format("fmt chunk runs past end of file".into()));
            }
            fmt = Some(parse_fmt(&bytes[body_start..body_end])?);
        }
        if body_end >= bytes.len() {
            break;
        }
        at = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::Format("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("no data chunk".into()))?;
    let frames = data.len() / fmt.block_align as usize;
    let mut samples = Vec::with_capacity(frames);
    for frame in data.chunks_exact(fmt.block_align as usize) {
        let sample = if fmt.channels == 1 {
            i16::from_le_bytes([frame[0], frame[1]]) as f32 / 32768.0
        } else {
            let l = i16::from_le_bytes([frame[0], frame[1]]) as f32 / 32768.0;
            let r = i16::from_le_bytes([frame[2], frame[3]]) as f32 / 32768.0;
            0.5 * (l + r)
        };
        samples.push(sample);
    }
    AudioClip::with_source(samples, fmt.sample_rate, source_id, 0.0)
}

/// Encodes a clip as mono 16-bit PCM. Samples are clamped to `[-1, 1)`.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &clip.samples {
        let v = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn save_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_wav(clip)).map_err(|e| Error::io(path, e))
}
