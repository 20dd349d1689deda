//! HTK parameter file reader and writer.
//!
//! Layout: a 12-byte big-endian header — nSamples (i32), sampPeriod (i32, in
//! 100 ns units), sampSize (i16, bytes per frame), parmKind (i16) — followed
//! by the frames as big-endian 32-bit floats. Write∘read round-trips are
//! bit-exact at 32-bit precision.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bytes;

use super::{FeatureError, FeatureSequence};

/// Base parameter kind code for MFCC.
pub const PARM_KIND_MFCC: u16 = 6;
/// Base parameter kind code for user-defined features.
pub const PARM_KIND_USER: u16 = 9;

/// Qualifier bit: delta coefficients present.
pub const QUALIFIER_DELTA: u16 = 0o400; // 256
/// Qualifier bit: acceleration coefficients present.
pub const QUALIFIER_ACCEL: u16 = 0o1000; // 512
/// Qualifier bit: 0th cepstral coefficient present.
pub const QUALIFIER_C0: u16 = 0o20000; // 8192

/// Parameter kind for MFCC with the given qualifiers
/// (`mfcc_parm_kind(true, true)` = MFCC_0_D_A = 8966).
pub fn mfcc_parm_kind(include_c0: bool, with_deltas: bool) -> u16 {
    let mut kind = PARM_KIND_MFCC;
    if include_c0 {
        kind |= QUALIFIER_C0;
    }
    if with_deltas {
        kind |= QUALIFIER_DELTA | QUALIFIER_ACCEL;
    }
    kind
}

fn map_eof(e: std::io::Error) -> FeatureError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        FeatureError::HtkTruncated
    } else {
        FeatureError::Io(e)
    }
}

/// Writes a feature sequence as an HTK parameter file with the given
/// parameter kind.
pub fn write_htk(path: &Path, f: &FeatureSequence, parm_kind: u16) -> Result<(), FeatureError> {
    let dim = f.dim();
    let samp_size = dim.checked_mul(4).filter(|&s| s <= i16::MAX as usize);
    let samp_size = samp_size.ok_or(FeatureError::HtkDimTooLarge(dim))? as i16;
    let n_samples = i32::try_from(f.len())
        .map_err(|_| FeatureError::HtkHeader(format!("{} frames", f.len())))?;
    let samp_period = (f.frame_period() * 1e7).round();
    if !(1.0..=i32::MAX as f64).contains(&samp_period) {
        return Err(FeatureError::HtkHeader(format!(
            "frame period {} s",
            f.frame_period()
        )));
    }

    let mut w = BufWriter::new(File::create(path)?);
    bytes::write_i32_be(&mut w, n_samples)?;
    bytes::write_i32_be(&mut w, samp_period as i32)?;
    bytes::write_i16_be(&mut w, samp_size)?;
    bytes::write_i16_be(&mut w, parm_kind as i16)?;
    for frame in f.frames() {
        for &v in frame {
            bytes::write_f32_be(&mut w, v as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an HTK parameter file.
///
/// The parameter kind is accepted as-is; sampSize must be a positive multiple
/// of 4 (32-bit float payload) and the payload length must match
/// nSamples·sampSize exactly.
pub fn read_htk(path: &Path) -> Result<FeatureSequence, FeatureError> {
    let mut r = BufReader::new(File::open(path)?);
    let n_samples = bytes::read_i32_be(&mut r).map_err(map_eof)?;
    let samp_period = bytes::read_i32_be(&mut r).map_err(map_eof)?;
    let samp_size = bytes::read_i16_be(&mut r).map_err(map_eof)?;
    let _parm_kind = bytes::read_i16_be(&mut r).map_err(map_eof)?;

    if n_samples < 0 || samp_period <= 0 {
        return Err(FeatureError::HtkHeader(format!(
            "nSamples {n_samples}, sampPeriod {samp_period}"
        )));
    }
    if samp_size <= 0 || samp_size % 4 != 0 {
        return Err(FeatureError::HtkSampSize(samp_size));
    }

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let expected = n_samples as usize * samp_size as usize;
    if payload.len() != expected {
        return Err(FeatureError::HtkPayloadMismatch {
            expected,
            found: payload.len(),
        });
    }

    let dim = samp_size as usize / 4;
    let mut frames = Vec::with_capacity(n_samples as usize);
    let mut cursor = &payload[..];
    for _ in 0..n_samples {
        let mut frame = Vec::with_capacity(dim);
        for _ in 0..dim {
            frame.push(bytes::read_f32_be(&mut cursor).map_err(map_eof)? as f64);
        }
        frames.push(frame);
    }
    Ok(FeatureSequence::from_parts(
        frames,
        samp_period as f64 / 1e7,
    ))
}
