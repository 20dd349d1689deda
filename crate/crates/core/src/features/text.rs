//! Plain-text feature format for debugging.
//!
//! A `#dim D #period S` header line, then one frame per line as
//! space-separated decimals. Values are printed in Rust's shortest
//! round-trip notation, so read∘write is lossless for `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{FeatureError, FeatureSequence};

pub fn write_text_features(path: &Path, f: &FeatureSequence) -> Result<(), FeatureError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "#dim {} #period {}", f.dim(), f.frame_period())?;
    for frame in f.frames() {
        let line: Vec<String> = frame.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_text_features(path: &Path) -> Result<FeatureSequence, FeatureError> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or(FeatureError::TextParse {
        line: 1,
        message: "empty file".to_string(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (dim, period) = match fields.as_slice() {
        ["#dim", d, "#period", p] => {
            let dim: usize = d.parse().map_err(|_| FeatureError::TextParse {
                line: 1,
                message: format!("bad dimension {d:?}"),
            })?;
            let period: f64 = p.parse().map_err(|_| FeatureError::TextParse {
                line: 1,
                message: format!("bad period {p:?}"),
            })?;
            (dim, period)
        }
        _ => {
            return Err(FeatureError::TextParse {
                line: 1,
                message: "expected `#dim D #period S` header".to_string(),
            })
        }
    };

    let mut frames = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut frame = Vec::with_capacity(dim);
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| FeatureError::TextParse {
                line: idx + 1,
                message: format!("bad value {tok:?}"),
            })?;
            frame.push(v);
        }
        if frame.len() != dim {
            return Err(FeatureError::TextParse {
                line: idx + 1,
                message: format!("expected {dim} values, found {}", frame.len()),
            });
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(FeatureError::EmptySequence);
    }
    Ok(FeatureSequence::from_parts(frames, period))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        let f = FeatureSequence::new(
            vec![vec![1.5, -2.25e-17, 0.1], vec![3.0, 0.0, f64::MIN_POSITIVE]],
            0.010,
        )
        .unwrap();
        write_text_features(&path, &f).unwrap();
        let back = read_text_features(&path).unwrap();
        assert_eq!(back.frames(), f.frames());
        assert_eq!(back.frame_period(), 0.010);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "#dim 2 #period 0.01\n1.0 2.0\n3.0\n").unwrap();
        match read_text_features(&path) {
            Err(FeatureError::TextParse { line: 3, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }

        std::fs::write(&path, "dim 2\n").unwrap();
        assert!(matches!(
            read_text_features(&path),
            Err(FeatureError::TextParse { line: 1, .. })
        ));
    }
}
