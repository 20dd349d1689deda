//! Audio ingestion and the MFCC front-end.
//!
//! The full pipeline turns a 16-bit PCM waveform into 39-dimensional feature
//! frames: pre-emphasis, 25 ms Hamming windows every 10 ms, a 40-channel mel
//! filter bank between 64 Hz and 8 kHz on the magnitude spectrum, 12 cepstra
//! plus the 0th coefficient from a DCT of the log filter-bank outputs, and
//! delta and acceleration coefficients appended (13 × 3 = 39).
//!
//! Conventions pinned here, since they vary between front-ends:
//! - mel scale `mel(f) = 1127·ln(1 + f/700)`, triangular filters applied to
//!   the magnitude (not power) spectrum;
//! - filter outputs are clamped at 1e-10 before the log so silence stays
//!   finite;
//! - the first pre-emphasized sample is `y[0] = (1−k)·x[0]`;
//! - delta window Θ = 2 with edge frames replicated;
//! - no cepstral liftering, and c0 is the raw 0th DCT coefficient (not an
//!   energy replacement);
//! - corpus normalization uses the population (not sample) standard
//!   deviation, floored at 1e-8.

mod audio;
mod htk;
mod text;

pub use audio::read_audio;
pub use htk::{mfcc_parm_kind, read_htk, write_htk, PARM_KIND_MFCC, PARM_KIND_USER};
pub use text::{read_text_features, write_text_features};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("waveform is empty")]
    EmptyWaveform,
    #[error("pre-emphasis coefficient {0} outside [0, 1)")]
    InvalidPreEmphasis(f64),
    #[error("window/step of {window_samples}/{step_samples} samples is not usable")]
    InvalidFraming {
        window_samples: i64,
        step_samples: i64,
    },
    #[error("signal of {samples} sample(s) is shorter than one {window} sample window")]
    SignalTooShort { samples: usize, window: usize },
    #[error("invalid mel band edges {lo} Hz .. {hi} Hz (nyquist {nyquist} Hz)")]
    InvalidBand { lo: f64, hi: f64, nyquist: f64 },
    #[error("requested {requested} cepstra from {channels} filter-bank channels")]
    TooManyCepstra { requested: usize, channels: usize },
    #[error("feature sequence is empty")]
    EmptySequence,
    #[error("feature corpus is empty")]
    EmptyCorpus,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite value at frame {frame}, dimension {dim}")]
    NonFinite { frame: usize, dim: usize },
    #[error("HTK file truncated")]
    HtkTruncated,
    #[error("HTK header field out of range: {0}")]
    HtkHeader(String),
    #[error("HTK sampSize {0} is not a positive multiple of 4 bytes")]
    HtkSampSize(i16),
    #[error("HTK payload is {found} byte(s), header promises {expected}")]
    HtkPayloadMismatch { expected: usize, found: usize },
    #[error("frame dimension {0} too large for the HTK header")]
    HtkDimTooLarge(usize),
    #[error("unknown audio container (neither RIFF/WAVE nor NIST SPHERE)")]
    UnknownContainer,
    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("unsupported channel count {0}; only mono input is handled")]
    UnsupportedChannels(u32),
    #[error("samples are {0}-bit; only 16-bit PCM is handled")]
    NotSixteenBit(u32),
    #[error("compressed SPHERE payload ({0}); decompress before ingestion")]
    CompressedSphere(String),
    #[error("malformed audio header: {0}")]
    MalformedAudio(String),
    #[error("feature text line {line}: {message}")]
    TextParse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono waveform with its sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Waveform {
            samples,
            sample_rate,
        }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// T×D matrix of real-valued frame features with frame-period metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    frames: Vec<Vec<f64>>,
    frame_period: f64,
}

impl FeatureSequence {
    /// Validates shape (T ≥ 1, consistent D ≥ 1) and finiteness.
    pub fn new(frames: Vec<Vec<f64>>, frame_period: f64) -> Result<Self, FeatureError> {
        if frames.is_empty() || frames[0].is_empty() {
            return Err(FeatureError::EmptySequence);
        }
        let dim = frames[0].len();
        for (t, frame) in frames.iter().enumerate() {
            if frame.len() != dim {
                return Err(FeatureError::DimMismatch {
                    expected: dim,
                    found: frame.len(),
                });
            }
            for (d, v) in frame.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FeatureError::NonFinite { frame: t, dim: d });
                }
            }
        }
        Ok(FeatureSequence {
            frames,
            frame_period,
        })
    }

    pub(crate) fn from_parts(frames: Vec<Vec<f64>>, frame_period: f64) -> Self {
        FeatureSequence {
            frames,
            frame_period,
        }
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }

    /// Seconds between consecutive frames.
    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }
}

/// Per-dimension mean and scale for feature normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at 1e-8.
    pub scale: Vec<f64>,
}

impl NormalizationStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Front-end parameters; the defaults are the full-scale configuration
/// (25 ms / 10 ms windows, 40 mel channels over 64 Hz–8 kHz, 12 cepstra plus
/// c0, pre-emphasis 0.97).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontEndConfig {
    pub pre_emphasis: f64,
    pub window_seconds: f64,
    pub step_seconds: f64,
    pub mel_channels: usize,
    pub mel_low_hz: f64,
    pub mel_high_hz: f64,
    pub num_cepstra: usize,
    pub include_c0: bool,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        FrontEndConfig {
            pre_emphasis: 0.97,
            window_seconds: 0.025,
            step_seconds: 0.010,
            mel_channels: 40,
            mel_low_hz: 64.0,
            mel_high_hz: 8000.0,
            num_cepstra: 12,
            include_c0: true,
        }
    }
}

impl FrontEndConfig {
    /// Static dimension (cepstra plus optional c0) before deltas.
    pub fn static_dim(&self) -> usize {
        self.num_cepstra + usize::from(self.include_c0)
    }

    /// Final feature dimension after deltas and accelerations.
    pub fn feature_dim(&self) -> usize {
        3 * self.static_dim()
    }
}

/// First-order pre-emphasis filter: `y[n] = x[n] − k·x[n−1]`, with
/// `y[0] = (1−k)·x[0]`.
pub fn pre_emphasize(w: &Waveform, k: f64) -> Result<Waveform, FeatureError> {
    if w.samples.is_empty() {
        return Err(FeatureError::EmptyWaveform);
    }
    if !(0.0..1.0).contains(&k) {
        return Err(FeatureError::InvalidPreEmphasis(k));
    }
    let mut out = Vec::with_capacity(w.samples.len());
    out.push((1.0 - k) * w.samples[0]);
    for n in 1..w.samples.len() {
        out.push(w.samples[n] - k * w.samples[n - 1]);
    }
    Ok(Waveform::new(out, w.sample_rate))
}

fn hamming_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| {
            0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (len as f64 - 1.0)).cos()
        })
        .collect()
}

/// Splits the signal into Hamming-windowed frames.
///
/// Frame count is `floor((N − Nwin)/Nstep) + 1`; a signal shorter than one
/// window is an error. Window and step are given in seconds and must round
/// to positive sample counts.
pub fn frame_signal(
    w: &Waveform,
    window_seconds: f64,
    step_seconds: f64,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    let nwin = (window_seconds * w.sample_rate as f64).round() as i64;
    let nstep = (step_seconds * w.sample_rate as f64).round() as i64;
    if nwin < 1 || nstep < 1 {
        return Err(FeatureError::InvalidFraming {
            window_samples: nwin,
            step_samples: nstep,
        });
    }
    let nwin = nwin as usize;
    let nstep = nstep as usize;
    if w.samples.len() < nwin {
        return Err(FeatureError::SignalTooShort {
            samples: w.samples.len(),
            window: nwin,
        });
    }
    let window = hamming_window(nwin);
    let count = (w.samples.len() - nwin) / nstep + 1;
    let mut frames = Vec::with_capacity(count);
    for f in 0..count {
        let start = f * nstep;
        frames.push(
            w.samples[start..start + nwin]
                .iter()
                .zip(&window)
                .map(|(s, h)| s * h)
                .collect(),
        );
    }
    Ok(frames)
}

/// `mel(f) = 1127·ln(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

/// Inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

/// Triangular mel filter bank over a power-of-two magnitude spectrum.
///
/// Filter centers are equally spaced on the mel scale between `mel(lo)` and
/// `mel(hi)`; triangle weights are evaluated in the mel domain and applied to
/// magnitudes. Reusable across frames of the same length.
pub struct MelFilterbank {
    nfft: usize,
    channels: usize,
    /// Mel positions of the M+2 band edges.
    edges: Vec<f64>,
    /// Per-bin (channel, weight) pairs for bins inside the pass band.
    bin_weights: Vec<Vec<(usize, f64)>>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl MelFilterbank {
    pub fn new(
        frame_len: usize,
        channels: usize,
        lo_hz: f64,
        hi_hz: f64,
        sample_rate: u32,
    ) -> Result<Self, FeatureError> {
        let nyquist = sample_rate as f64 / 2.0;
        if channels == 0 || !(0.0 <= lo_hz && lo_hz < hi_hz && hi_hz <= nyquist) {
            return Err(FeatureError::InvalidBand {
                lo: lo_hz,
                hi: hi_hz,
                nyquist,
            });
        }
        let nfft = frame_len.max(2).next_power_of_two();
        let mel_lo = hz_to_mel(lo_hz);
        let mel_hi = hz_to_mel(hi_hz);
        let spacing = (mel_hi - mel_lo) / (channels + 1) as f64;
        let edges: Vec<f64> = (0..channels + 2)
            .map(|j| mel_lo + spacing * j as f64)
            .collect();

        let mut bin_weights = vec![Vec::new(); nfft / 2 + 1];
        for (k, weights) in bin_weights.iter_mut().enumerate() {
            let f_k = k as f64 * sample_rate as f64 / nfft as f64;
            if f_k < lo_hz || f_k > hi_hz {
                continue;
            }
            let c = hz_to_mel(f_k);
            for ch in 0..channels {
                let (left, center, right) = (edges[ch], edges[ch + 1], edges[ch + 2]);
                let w = if c >= left && c <= center {
                    (c - left) / (center - left)
                } else if c > center && c <= right {
                    (right - c) / (right - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    weights.push((ch, w));
                }
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Ok(MelFilterbank {
            nfft,
            channels,
            edges,
            bin_weights,
            fft,
        })
    }

    /// Mel position of channel `ch`'s center.
    pub fn center_mel(&self, ch: usize) -> f64 {
        self.edges[ch + 1]
    }

    /// Mel distance between adjacent channel centers.
    pub fn channel_spacing_mel(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Log filter-bank outputs for one windowed frame.
    ///
    /// The frame is zero-padded to the power-of-two FFT length; each filter
    /// accumulates spectral magnitudes, clamped at 1e-10 before the log.
    pub fn log_energies(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .map(|&s| Complex::new(s, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.nfft)
            .collect();
        self.fft.process(&mut buf);
        let mut energies = vec![0.0; self.channels];
        for (k, weights) in self.bin_weights.iter().enumerate() {
            if weights.is_empty() {
                continue;
            }
            let magnitude = buf[k].norm();
            for &(ch, w) in weights {
                energies[ch] += w * magnitude;
            }
        }
        energies.iter().map(|&e| e.max(1e-10).ln()).collect()
    }
}

/// One-shot mel filter-bank log-energies for a single windowed frame.
pub fn mel_filterbank_energies(
    frame: &[f64],
    channels: usize,
    lo_hz: f64,
    hi_hz: f64,
    sample_rate: u32,
) -> Result<Vec<f64>, FeatureError> {
    Ok(MelFilterbank::new(frame.len(), channels, lo_hz, hi_hz, sample_rate)?.log_energies(frame))
}

/// DCT of log filter-bank outputs.
///
/// `c_i = sqrt(2/M)·Σ_{j=1..M} logE_j·cos(i·π·(j−0.5)/M)` for i = 1..n; when
/// `include_c0`, the i = 0 coefficient is appended after them (so a 12+c0
/// configuration yields `[c1..c12, c0]`, matching the HTK `_0` layout).
pub fn dct_cepstra(
    log_energies: &[f64],
    n_cepstra: usize,
    include_c0: bool,
) -> Result<Vec<f64>, FeatureError> {
    let m = log_energies.len();
    if n_cepstra > m {
        return Err(FeatureError::TooManyCepstra {
            requested: n_cepstra,
            channels: m,
        });
    }
    let norm = (2.0 / m as f64).sqrt();
    let coeff = |i: usize| -> f64 {
        norm * log_energies
            .iter()
            .enumerate()
            .map(|(j, &e)| e * (i as f64 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos())
            .sum::<f64>()
    };
    let mut out: Vec<f64> = (1..=n_cepstra).map(coeff).collect();
    if include_c0 {
        out.push(coeff(0));
    }
    Ok(out)
}

/// Regression delta over a window of ±Θ frames with edge replication.
fn regression_deltas(frames: &[Vec<f64>], theta: usize) -> Vec<Vec<f64>> {
    let t_len = frames.len();
    let dim = frames[0].len();
    let denom: f64 = 2.0 * (1..=theta).map(|th| (th * th) as f64).sum::<f64>();
    let mut out = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut delta = vec![0.0; dim];
        for th in 1..=theta {
            let fwd = &frames[(t + th).min(t_len - 1)];
            let bwd = &frames[t.saturating_sub(th)];
            for d in 0..dim {
                delta[d] += th as f64 * (fwd[d] - bwd[d]);
            }
        }
        for v in &mut delta {
            *v /= denom;
        }
        out.push(delta);
    }
    out
}

/// Appends delta and acceleration coefficients, tripling the dimension.
///
/// Deltas use the regression formula with Θ = 2 and replicated edge frames;
/// accelerations apply the same operator to the deltas.
pub fn append_deltas(f: &FeatureSequence) -> FeatureSequence {
    let deltas = regression_deltas(f.frames(), 2);
    let accels = regression_deltas(&deltas, 2);
    let frames = f
        .frames()
        .iter()
        .zip(&deltas)
        .zip(&accels)
        .map(|((s, d), a)| {
            let mut row = Vec::with_capacity(3 * s.len());
            row.extend_from_slice(s);
            row.extend_from_slice(d);
            row.extend_from_slice(a);
            row
        })
        .collect();
    FeatureSequence::from_parts(frames, f.frame_period())
}

/// Pooled per-dimension mean and population standard deviation over all
/// frames of all sequences, with the scale floored at 1e-8.
pub fn compute_normalization(corpus: &[FeatureSequence]) -> Result<NormalizationStats, FeatureError> {
    let first = corpus.first().ok_or(FeatureError::EmptyCorpus)?;
    let dim = first.dim();
    let mut mean = vec![0.0; dim];
    let mut count = 0usize;
    for seq in corpus {
        if seq.dim() != dim {
            return Err(FeatureError::DimMismatch {
                expected: dim,
                found: seq.dim(),
            });
        }
        for frame in seq.frames() {
            for (d, &v) in frame.iter().enumerate() {
                mean[d] += v;
            }
            count += 1;
        }
    }
    for v in &mut mean {
        *v /= count as f64;
    }
    let mut var = vec![0.0; dim];
    for seq in corpus {
        for frame in seq.frames() {
            for (d, &v) in frame.iter().enumerate() {
                let diff = v - mean[d];
                var[d] += diff * diff;
            }
        }
    }
    let scale = var
        .iter()
        .map(|&v| (v / count as f64).sqrt().max(1e-8))
        .collect();
    Ok(NormalizationStats { mean, scale })
}

/// `out[t][d] = (in[t][d] − mean[d]) / scale[d]`.
pub fn normalize(
    f: &FeatureSequence,
    stats: &NormalizationStats,
) -> Result<FeatureSequence, FeatureError> {
    if f.dim() != stats.dim() {
        return Err(FeatureError::DimMismatch {
            expected: stats.dim(),
            found: f.dim(),
        });
    }
    let frames = f
        .frames()
        .iter()
        .map(|frame| {
            frame
                .iter()
                .enumerate()
                .map(|(d, &v)| (v - stats.mean[d]) / stats.scale[d])
                .collect()
        })
        .collect();
    Ok(FeatureSequence::from_parts(frames, f.frame_period()))
}

/// Inverse affine transform of [`normalize`].
pub fn denormalize(
    f: &FeatureSequence,
    stats: &NormalizationStats,
) -> Result<FeatureSequence, FeatureError> {
    if f.dim() != stats.dim() {
        return Err(FeatureError::DimMismatch {
            expected: stats.dim(),
            found: f.dim(),
        });
    }
    let frames = f
        .frames()
        .iter()
        .map(|frame| {
            frame
                .iter()
                .enumerate()
                .map(|(d, &v)| v * stats.scale[d] + stats.mean[d])
                .collect()
        })
        .collect();
    Ok(FeatureSequence::from_parts(frames, f.frame_period()))
}

/// Full MFCC pipeline: pre-emphasis, framing, mel filter bank, DCT, deltas.
pub fn mfcc(w: &Waveform, cfg: &FrontEndConfig) -> Result<FeatureSequence, FeatureError> {
    let emphasized = pre_emphasize(w, cfg.pre_emphasis)?;
    let frames = frame_signal(&emphasized, cfg.window_seconds, cfg.step_seconds)?;
    let bank = MelFilterbank::new(
        frames[0].len(),
        cfg.mel_channels,
        cfg.mel_low_hz,
        cfg.mel_high_hz,
        w.sample_rate,
    )?;
    let mut cepstra = Vec::with_capacity(frames.len());
    for frame in &frames {
        let log_e = bank.log_energies(frame);
        cepstra.push(dct_cepstra(&log_e, cfg.num_cepstra, cfg.include_c0)?);
    }
    let static_seq = FeatureSequence::from_parts(cepstra, cfg.step_seconds);
    Ok(append_deltas(&static_seq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, seconds: f64, rate: u32) -> Waveform {
        let n = (seconds * rate as f64) as usize;
        let samples = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect();
        Waveform::new(samples, rate)
    }

    #[test]
    fn pre_emphasis_examples() {
        let w = Waveform::new(vec![1.0, 1.0, 1.0], 16000);
        let y = pre_emphasize(&w, 0.97).unwrap();
        for v in &y.samples {
            assert!((v - 0.03).abs() < 1e-12);
        }

        let w = Waveform::new(vec![1.0, 0.0], 16000);
        let y = pre_emphasize(&w, 0.97).unwrap();
        assert!((y.samples[0] - 0.03).abs() < 1e-12);
        assert!((y.samples[1] + 0.97).abs() < 1e-12);

        let w = Waveform::new(vec![0.3, -0.5, 0.8], 8000);
        let y = pre_emphasize(&w, 0.0).unwrap();
        assert_eq!(y.samples, w.samples);
    }

    #[test]
    fn pre_emphasis_errors() {
        let empty = Waveform::new(vec![], 16000);
        assert!(matches!(
            pre_emphasize(&empty, 0.97),
            Err(FeatureError::EmptyWaveform)
        ));
        let w = Waveform::new(vec![1.0], 16000);
        assert!(matches!(
            pre_emphasize(&w, 1.0),
            Err(FeatureError::InvalidPreEmphasis(_))
        ));
    }

    #[test]
    fn frame_counts() {
        let w = Waveform::new(vec![0.5; 560], 16000);
        assert_eq!(frame_signal(&w, 0.025, 0.010).unwrap().len(), 2);

        let w = Waveform::new(vec![0.5; 400], 16000);
        assert_eq!(frame_signal(&w, 0.025, 0.010).unwrap().len(), 1);

        let w = Waveform::new(vec![0.5; 16000], 16000);
        assert_eq!(frame_signal(&w, 0.025, 0.010).unwrap().len(), 98);
    }

    #[test]
    fn frame_count_formula_holds_generally() {
        // floor((N - Nwin)/Nstep) + 1 across a sweep of lengths.
        for n in [400usize, 401, 559, 560, 561, 999, 1000, 4321] {
            let w = Waveform::new(vec![1.0; n], 16000);
            let frames = frame_signal(&w, 0.025, 0.010).unwrap();
            assert_eq!(frames.len(), (n - 400) / 160 + 1, "N={n}");
        }
    }

    #[test]
    fn constant_signal_yields_hamming_window() {
        let w = Waveform::new(vec![1.0; 400], 16000);
        let frames = frame_signal(&w, 0.025, 0.010).unwrap();
        let window = hamming_window(400);
        assert_eq!(frames[0], window);
        assert!((window[0] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn too_short_signal_is_error() {
        let w = Waveform::new(vec![1.0; 399], 16000);
        assert!(matches!(
            frame_signal(&w, 0.025, 0.010),
            Err(FeatureError::SignalTooShort { .. })
        ));
    }

    #[test]
    fn mel_formula_anchors() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert!((hz_to_mel(700.0) - 1127.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn filterbank_output_has_channel_count() {
        let frame = vec![0.1; 400];
        let e = mel_filterbank_energies(&frame, 40, 64.0, 8000.0, 16000).unwrap();
        assert_eq!(e.len(), 40);
        assert!(e.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn filterbank_rejects_bad_bands() {
        let frame = vec![0.0; 64];
        assert!(matches!(
            mel_filterbank_energies(&frame, 40, 8000.0, 64.0, 16000),
            Err(FeatureError::InvalidBand { .. })
        ));
        assert!(matches!(
            mel_filterbank_energies(&frame, 40, 0.0, 9000.0, 16000),
            Err(FeatureError::InvalidBand { .. })
        ));
    }

    #[test]
    fn sinusoid_peaks_at_matching_channel() {
        // The argmax channel's center must be within one channel spacing of
        // the tone frequency, in mel.
        let rate = 16000;
        let bank = MelFilterbank::new(400, 40, 64.0, 8000.0, rate).unwrap();
        for freq in [300.0, 1000.0, 2500.0, 5000.0] {
            let w = tone(freq, 0.025, rate);
            let window = hamming_window(400);
            let frame: Vec<f64> = w.samples.iter().zip(&window).map(|(s, h)| s * h).collect();
            let energies = bank.log_energies(&frame);
            let argmax = energies
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let distance = (bank.center_mel(argmax) - hz_to_mel(freq)).abs();
            assert!(
                distance <= bank.channel_spacing_mel(),
                "freq {freq}: argmax {argmax} is {distance} mel away"
            );
        }
    }

    #[test]
    fn dct_paper_configuration_gives_thirteen() {
        let log_e = vec![0.5; 40];
        let c = dct_cepstra(&log_e, 12, true).unwrap();
        assert_eq!(c.len(), 13);
        let c = dct_cepstra(&log_e, 12, false).unwrap();
        assert_eq!(c.len(), 12);
    }

    #[test]
    fn dct_linearity_and_c0() {
        let zeros = vec![0.0; 8];
        let c = dct_cepstra(&zeros, 4, true).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));

        // Constant log energies: c_i = 0 for i >= 1, c0 = sqrt(2/M)·M·const.
        let m = 10;
        let konst = 0.7;
        let c = dct_cepstra(&vec![konst; m], 3, true).unwrap();
        for &v in &c[..3] {
            assert!(v.abs() < 1e-12);
        }
        let expected_c0 = (2.0 / m as f64).sqrt() * m as f64 * konst;
        assert!((c[3] - expected_c0).abs() < 1e-12);
    }

    #[test]
    fn dct_too_many_cepstra() {
        assert!(matches!(
            dct_cepstra(&[1.0, 2.0], 3, false),
            Err(FeatureError::TooManyCepstra { .. })
        ));
    }

    #[test]
    fn deltas_of_constant_sequence_are_zero() {
        let seq = FeatureSequence::new(vec![vec![1.0, -2.0]; 6], 0.01).unwrap();
        let out = append_deltas(&seq);
        assert_eq!(out.dim(), 6);
        for frame in out.frames() {
            for &v in &frame[2..] {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn deltas_triple_dimension() {
        let seq = FeatureSequence::new(vec![vec![0.0; 13]; 5], 0.01).unwrap();
        assert_eq!(append_deltas(&seq).dim(), 39);
    }

    #[test]
    fn delta_of_ramp_is_one_in_interior() {
        let seq =
            FeatureSequence::new((0..10).map(|t| vec![t as f64]).collect(), 0.01).unwrap();
        let out = append_deltas(&seq);
        for t in 2..8 {
            assert!((out.frames()[t][1] - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn normalization_examples() {
        let single = vec![FeatureSequence::new(vec![vec![5.0]], 0.01).unwrap()];
        let stats = compute_normalization(&single).unwrap();
        assert_eq!(stats.mean, vec![5.0]);
        assert_eq!(stats.scale, vec![1e-8]);

        let two = vec![FeatureSequence::new(vec![vec![0.0], vec![2.0]], 0.01).unwrap()];
        let stats = compute_normalization(&two).unwrap();
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.scale, vec![1.0]);

        assert!(matches!(
            compute_normalization(&[]),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn normalize_then_recompute_gives_unit_stats() {
        let corpus = vec![
            FeatureSequence::new(vec![vec![1.0, 10.0], vec![3.0, 30.0]], 0.01).unwrap(),
            FeatureSequence::new(vec![vec![-2.0, 5.0], vec![4.0, -1.0], vec![0.5, 2.0]], 0.01)
                .unwrap(),
        ];
        let stats = compute_normalization(&corpus).unwrap();
        let normalized: Vec<FeatureSequence> = corpus
            .iter()
            .map(|f| normalize(f, &stats).unwrap())
            .collect();
        let after = compute_normalization(&normalized).unwrap();
        for d in 0..2 {
            assert!(after.mean[d].abs() < 1e-10);
            assert!((after.scale[d] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn normalize_examples_and_inverse() {
        let f = FeatureSequence::new(vec![vec![3.0]], 0.01).unwrap();
        let stats = NormalizationStats {
            mean: vec![1.0],
            scale: vec![2.0],
        };
        let n = normalize(&f, &stats).unwrap();
        assert_eq!(n.frames()[0][0], 1.0);

        let identity = NormalizationStats {
            mean: vec![0.0],
            scale: vec![1.0],
        };
        let same = normalize(&f, &identity).unwrap();
        assert_eq!(same.frames(), f.frames());

        let back = denormalize(&n, &stats).unwrap();
        assert!((back.frames()[0][0] - 3.0).abs() < 1e-12);

        let wrong = NormalizationStats {
            mean: vec![0.0, 0.0],
            scale: vec![1.0, 1.0],
        };
        assert!(matches!(
            normalize(&f, &wrong),
            Err(FeatureError::DimMismatch { .. })
        ));
    }

    #[test]
    fn full_pipeline_shape() {
        let w = tone(440.0, 1.0, 16000);
        let cfg = FrontEndConfig::default();
        let f = mfcc(&w, &cfg).unwrap();
        assert_eq!(f.dim(), 39);
        assert_eq!(f.len(), 98);
        assert_eq!(f.frame_period(), 0.010);
    }

    #[test]
    fn pipeline_works_on_minimum_length_input() {
        let w = tone(440.0, 0.025, 16000);
        let f = mfcc(&w, &FrontEndConfig::default()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.dim(), 39);
    }
}
