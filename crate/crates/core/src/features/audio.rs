//! 16-bit PCM readers for RIFF/WAVE and NIST SPHERE containers.
//!
//! Samples are scaled to [−1, 1) by division by 32768. Only uncompressed
//! mono 16-bit payloads are handled; compressed SPHERE files (shorten, ulaw)
//! are rejected with a dedicated error.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{FeatureError, Waveform};

const PCM_SCALE: f64 = 32768.0;

/// Reads a RIFF/WAVE or NIST SPHERE file into a waveform.
pub fn read_audio(path: &Path) -> Result<Waveform, FeatureError> {
    let mut data = Vec::new();
    File::open(path)?.read_to_end(&mut data)?;
    if data.starts_with(b"RIFF") {
        read_wav(&data)
    } else if data.starts_with(b"NIST_1A") {
        read_sphere(&data)
    } else {
        Err(FeatureError::UnknownContainer)
    }
}

fn u16_le(data: &[u8], at: usize) -> Result<u16, FeatureError> {
    data.get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| FeatureError::MalformedAudio("RIFF chunk truncated".to_string()))
}

fn u32_le(data: &[u8], at: usize) -> Result<u32, FeatureError> {
    data.get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| FeatureError::MalformedAudio("RIFF chunk truncated".to_string()))
}

fn read_wav(data: &[u8]) -> Result<Waveform, FeatureError> {
    if data.len() < 12 || &data[8..12] != b"WAVE" {
        return Err(FeatureError::MalformedAudio(
            "RIFF file is not WAVE".to_string(),
        ));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut payload: Option<&[u8]> = None;
    while pos + 8 <= data.len() {
        let id = &data[pos..pos + 4];
        let size = u32_le(data, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > data.len() {
            return Err(FeatureError::MalformedAudio(format!(
                "chunk {:?} overruns the file",
                String::from_utf8_lossy(id)
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(FeatureError::MalformedAudio("fmt chunk too small".into()));
                }
                format = Some((
                    u16_le(data, body_start)?,     // audio format
                    u16_le(data, body_start + 2)?, // channels
                    u32_le(data, body_start + 4)?, // sample rate
                    u16_le(data, body_start + 14)?, // bits per sample
                ));
            }
            b"data" => payload = Some(&data[body_start..body_end]),
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_end + (size & 1);
    }
    let (audio_format, channels, sample_rate, bits) = format
        .ok_or_else(|| FeatureError::MalformedAudio("missing fmt chunk".to_string()))?;
    if audio_format != 1 {
        return Err(FeatureError::UnsupportedEncoding(format!(
            "WAVE format tag {audio_format}"
        )));
    }
    if channels != 1 {
        return Err(FeatureError::UnsupportedChannels(channels as u32));
    }
    if bits != 16 {
        return Err(FeatureError::NotSixteenBit(bits as u32));
    }
    let payload =
        payload.ok_or_else(|| FeatureError::MalformedAudio("missing data chunk".to_string()))?;
    Ok(Waveform::new(
        decode_i16(payload, true)?,
        nonzero_rate(sample_rate)?,
    ))
}

fn read_sphere(data: &[u8]) -> Result<Waveform, FeatureError> {
    if data.len() < 1024 {
        return Err(FeatureError::MalformedAudio(
            "SPHERE header shorter than 1024 bytes".to_string(),
        ));
    }
    let header = std::str::from_utf8(&data[..1024])
        .map_err(|_| FeatureError::MalformedAudio("SPHERE header is not ASCII".to_string()))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("NIST_1A") {
        return Err(FeatureError::MalformedAudio(
            "missing NIST_1A signature".to_string(),
        ));
    }
    if lines.next().map(str::trim) != Some("1024") {
        return Err(FeatureError::MalformedAudio(
            "unsupported SPHERE header size".to_string(),
        ));
    }

    let mut sample_rate: Option<u32> = None;
    let mut channels: u32 = 1;
    let mut sample_bytes: u32 = 2;
    let mut coding = "pcm".to_string();
    // "01" is low byte first (little-endian), "10" high byte first; original
    // corpus files are big-endian, which is also the default when absent.
    let mut little_endian = false;
    for line in lines {
        let line = line.trim();
        if line == "end_head" {
            break;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ' ');
        let (Some(key), Some(_ty), Some(value)) = (parts.next(), parts.next(), parts.next())
        else {
            continue;
        };
        match key {
            "sample_rate" => {
                sample_rate = Some(value.trim().parse().map_err(|_| {
                    FeatureError::MalformedAudio(format!("sample_rate {value:?}"))
                })?)
            }
            "channel_count" => {
                channels = value.trim().parse().map_err(|_| {
                    FeatureError::MalformedAudio(format!("channel_count {value:?}"))
                })?
            }
            "sample_n_bytes" => {
                sample_bytes = value.trim().parse().map_err(|_| {
                    FeatureError::MalformedAudio(format!("sample_n_bytes {value:?}"))
                })?
            }
            "sample_coding" => coding = value.trim().to_string(),
            "sample_byte_format" => little_endian = value.trim() == "01",
            _ => {}
        }
    }

    if coding != "pcm" {
        return Err(FeatureError::CompressedSphere(coding));
    }
    if channels != 1 {
        return Err(FeatureError::UnsupportedChannels(channels));
    }
    if sample_bytes != 2 {
        return Err(FeatureError::NotSixteenBit(sample_bytes * 8));
    }
    let rate = sample_rate
        .ok_or_else(|| FeatureError::MalformedAudio("missing sample_rate".to_string()))?;
    Ok(Waveform::new(
        decode_i16(&data[1024..], little_endian)?,
        nonzero_rate(rate)?,
    ))
}

fn nonzero_rate(rate: u32) -> Result<u32, FeatureError> {
    if rate == 0 {
        return Err(FeatureError::MalformedAudio("zero sample rate".to_string()));
    }
    Ok(rate)
}

fn decode_i16(payload: &[u8], little_endian: bool) -> Result<Vec<f64>, FeatureError> {
    if payload.len() % 2 != 0 {
        return Err(FeatureError::MalformedAudio(
            "odd PCM payload length".to_string(),
        ));
    }
    Ok(payload
        .chunks_exact(2)
        .map(|b| {
            let v = if little_endian {
                i16::from_le_bytes([b[0], b[1]])
            } else {
                i16::from_be_bytes([b[0], b[1]])
            };
            v as f64 / PCM_SCALE
        })
        .collect())
}
