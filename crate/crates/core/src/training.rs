//! Online gradient descent with momentum, validation-based model selection,
//! and checkpointing.
//!
//! Weights are updated after every training example: Gaussian noise is added
//! to the (already normalized) input frames, the CTC loss gradient is pushed
//! through the network, and one momentum step is applied. After each epoch
//! the validation label error rate is measured with best-path decoding; the
//! weights with the lowest validation LER are kept, and training stops after
//! `patience` epochs without a new best (or at `max_epochs`).
//!
//! Determinism: a single seed governs example shuffling and input noise. Each
//! epoch draws from a generator seeded by `mix(seed, epoch)`, so resuming
//! from a checkpoint at an epoch boundary replays exactly the stream an
//! uninterrupted run would have used.
//!
//! Checkpoint files extend the model file format with the optimizer velocity,
//! the run record, and a trailing FNV-1a 64-bit checksum over everything
//! before it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::bytes::{self, Fnv64};
use crate::ctc::{self, CtcError};
use crate::eval;
use crate::features::FeatureSequence;
use crate::labelling::Labelling;
use crate::network::{self, NetworkError, Weights};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no trainable examples (every target was infeasible)")]
    NoTrainableExamples,
    #[error("non-finite gradient component {index} on example {example:?}")]
    NonFiniteGradient { example: String, index: usize },
    #[error("buffer length {found} does not match parameter count {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("checkpoint file truncated")]
    Truncated,
    #[error("checkpoint checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Ctc(#[from] CtcError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyperparameters of the online training loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Standard deviation of the Gaussian noise added to training inputs.
    pub noise_std: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 1e-4,
            momentum: 0.9,
            noise_std: 0.6,
            max_epochs: 500,
            patience: 20,
            seed: 1,
            shuffle: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(TrainError::InvalidConfig(
                "momentum must be in [0, 1)".to_string(),
            ));
        }
        if self.noise_std < 0.0 {
            return Err(TrainError::InvalidConfig(
                "noise_std must be non-negative".to_string(),
            ));
        }
        if self.patience == 0 {
            return Err(TrainError::InvalidConfig(
                "patience must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// One labelled utterance.
#[derive(Clone, Debug)]
pub struct TrainingExample {
    pub id: String,
    pub features: FeatureSequence,
    pub labels: Labelling,
}

/// Per-epoch training loss and validation LER.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_ler: f64,
}

/// History of a training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub epochs: Vec<EpochStats>,
    /// Index of the epoch with the lowest validation LER, if any ran.
    pub best_epoch: Option<usize>,
}

impl RunRecord {
    pub fn epochs_trained(&self) -> usize {
        self.epochs.len()
    }

    pub fn best_val_ler(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.epochs[e].val_ler)
    }
}

/// Adds i.i.d. Gaussian noise to every feature value.
///
/// `noise_std == 0` returns the input unchanged without consuming randomness.
pub fn add_input_noise(
    frames: &FeatureSequence,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> FeatureSequence {
    if noise_std == 0.0 {
        return frames.clone();
    }
    let normal = Normal::new(0.0, noise_std).expect("valid std");
    let noisy = frames
        .frames()
        .iter()
        .map(|frame| frame.iter().map(|&v| v + normal.sample(rng)).collect())
        .collect();
    FeatureSequence::new(noisy, frames.frame_period()).expect("noise keeps values finite")
}

/// One momentum update: `v ← momentum·v − lr·g; w ← w + v`.
///
/// The velocity persists across calls (and across epochs). A non-finite
/// gradient component aborts before any state is touched.
pub fn sgd_momentum_step(
    weights: &mut [f64],
    velocity: &mut [f64],
    gradient: &[f64],
    learning_rate: f64,
    momentum: f64,
) -> Result<(), TrainError> {
    if velocity.len() != weights.len() || gradient.len() != weights.len() {
        return Err(TrainError::ShapeMismatch {
            expected: weights.len(),
            found: gradient.len().max(velocity.len()),
        });
    }
    if let Some(index) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient {
            example: String::new(),
            index,
        });
    }
    for ((w, v), g) in weights.iter_mut().zip(velocity.iter_mut()).zip(gradient) {
        *v = momentum * *v - learning_rate * g;
        *w += *v;
    }
    Ok(())
}

/// One pass over the corpus with per-example updates; returns the mean
/// per-example CTC loss.
///
/// Examples whose targets cannot fit in their frames are skipped with a
/// warning rather than aborting the run.
pub fn train_epoch(
    model: &mut Weights,
    velocity: &mut [f64],
    corpus: &[TrainingExample],
    cfg: &TrainingConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64, TrainError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    if cfg.shuffle {
        order.shuffle(rng);
    }

    let mut total_loss = 0.0;
    let mut trained = 0usize;
    for idx in order {
        let example = &corpus[idx];
        let noisy = add_input_noise(&example.features, cfg.noise_std, rng);
        let (posteriors, trace) = network::blstm_forward(model, noisy.frames())?;
        let (loss, d_activations) = match ctc::loss_and_gradient(&posteriors, &example.labels) {
            Ok(pair) => pair,
            Err(CtcError::InfeasibleTarget { frames, required, .. }) => {
                log::warn!(
                    "skipping {:?}: target needs {required} frame(s), utterance has {frames}",
                    example.id
                );
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let gradient = network::blstm_backward(model, noisy.frames(), &trace, &d_activations)?;
        sgd_momentum_step(
            model.data_mut(),
            velocity,
            &gradient,
            cfg.learning_rate,
            cfg.momentum,
        )
        .map_err(|e| match e {
            TrainError::NonFiniteGradient { index, .. } => TrainError::NonFiniteGradient {
                example: example.id.clone(),
                index,
            },
            other => other,
        })?;
        total_loss += loss;
        trained += 1;
    }
    if trained == 0 {
        return Err(TrainError::NoTrainableExamples);
    }
    Ok(total_loss / trained as f64)
}

/// Validation label error rate of `model` under best-path decoding.
pub fn validation_ler(model: &Weights, corpus: &[TrainingExample]) -> Result<f64, TrainError> {
    let mut pairs = Vec::with_capacity(corpus.len());
    for example in corpus {
        let y = network::posteriors(model, example.features.frames())?;
        pairs.push((example.labels.clone(), ctc::best_path_decode(&y)));
    }
    Ok(eval::corpus_ler(&pairs)?.ler)
}

/// Mutable training state: current weights, optimizer velocity, history.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub weights: Weights,
    pub velocity: Vec<f64>,
    pub record: RunRecord,
}

impl TrainState {
    pub fn fresh(weights: Weights) -> Self {
        let n = weights.len();
        TrainState {
            weights,
            velocity: vec![0.0; n],
            record: RunRecord::default(),
        }
    }
}

/// Result of a training run: the best-validation weights plus the final
/// state (last-epoch weights, velocity, and the full record).
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best_weights: Weights,
    pub state: TrainState,
}

impl TrainOutcome {
    pub fn record(&self) -> &RunRecord {
        &self.state.record
    }
}

/// Generator for one epoch's shuffle and noise stream.
///
/// Derived from the run seed and the epoch index (splitmix64), so epoch k
/// draws the same stream whether the run was interrupted or not.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut z = seed.wrapping_add((epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Trains from freshly initialized weights.
pub fn train(
    initial: Weights,
    train_corpus: &[TrainingExample],
    val_corpus: &[TrainingExample],
    cfg: &TrainingConfig,
) -> Result<TrainOutcome, TrainError> {
    train_from(TrainState::fresh(initial), train_corpus, val_corpus, cfg)
}

/// Trains from an existing state (fresh or loaded from a checkpoint),
/// continuing the epoch numbering where the record left off.
///
/// Stops at `cfg.max_epochs` total epochs or once `cfg.patience` epochs pass
/// without a new validation best. Returns the best-validation weights, not
/// the last. When resuming, the loaded weights stand in for any earlier best
/// until a new best is found.
pub fn train_from(
    mut state: TrainState,
    train_corpus: &[TrainingExample],
    val_corpus: &[TrainingExample],
    cfg: &TrainingConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train_corpus.is_empty() || val_corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if state.velocity.len() != state.weights.len() {
        return Err(TrainError::ShapeMismatch {
            expected: state.weights.len(),
            found: state.velocity.len(),
        });
    }

    let mut best_weights = state.weights.clone();
    let mut best_epoch = state.record.best_epoch;
    let mut best_ler = state.record.best_val_ler().unwrap_or(f64::INFINITY);

    let start = state.record.epochs_trained();
    for epoch in start..cfg.max_epochs {
        let mut rng = epoch_rng(cfg.seed, epoch);
        let train_loss = train_epoch(
            &mut state.weights,
            &mut state.velocity,
            train_corpus,
            cfg,
            &mut rng,
        )?;
        let val_ler = validation_ler(&state.weights, val_corpus)?;
        state.record.epochs.push(EpochStats {
            train_loss,
            val_ler,
        });
        if val_ler < best_ler {
            best_ler = val_ler;
            best_epoch = Some(epoch);
            best_weights = state.weights.clone();
        }
        state.record.best_epoch = best_epoch;
        log::info!("epoch {epoch}: loss {train_loss:.6}, val LER {val_ler:.4}");

        if let Some(best) = best_epoch {
            if epoch - best >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        best_weights,
        state,
    })
}

const CHECKPOINT_NONE_EPOCH: u64 = u64::MAX;

/// Writes model, velocity, and run record, with a trailing checksum.
pub fn save_checkpoint(
    model: &Weights,
    velocity: &[f64],
    record: &RunRecord,
    path: &Path,
) -> Result<(), TrainError> {
    if velocity.len() != model.len() {
        return Err(TrainError::ShapeMismatch {
            expected: model.len(),
            found: velocity.len(),
        });
    }
    let mut body = Vec::new();
    network::write_model_block(&mut body, model)?;
    for &v in velocity {
        bytes::write_f64_le(&mut body, v)?;
    }
    bytes::write_u64_le(&mut body, record.epochs.len() as u64)?;
    for stats in &record.epochs {
        bytes::write_f64_le(&mut body, stats.train_loss)?;
        bytes::write_f64_le(&mut body, stats.val_ler)?;
    }
    let best = record
        .best_epoch
        .map_or(CHECKPOINT_NONE_EPOCH, |e| e as u64);
    bytes::write_u64_le(&mut body, best)?;

    let mut hash = Fnv64::new();
    hash.update(&body);

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&body)?;
    bytes::write_u64_le(&mut w, hash.finish())?;
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint, verifying the trailing checksum.
pub fn load_checkpoint(path: &Path) -> Result<(Weights, Vec<f64>, RunRecord), TrainError> {
    let mut raw = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut raw)?;
    if raw.len() < 8 {
        return Err(TrainError::Truncated);
    }
    let (body, tail) = raw.split_at(raw.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8-byte tail"));
    let mut hash = Fnv64::new();
    hash.update(body);
    let computed = hash.finish();
    if stored != computed {
        return Err(TrainError::ChecksumMismatch { stored, computed });
    }

    let mut r = body;
    let model = network::read_model_block(&mut r).map_err(|e| match e {
        NetworkError::Truncated => TrainError::Truncated,
        other => TrainError::Network(other),
    })?;
    let map_eof = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            TrainError::Truncated
        } else {
            TrainError::Io(e)
        }
    };
    let mut velocity = Vec::with_capacity(model.len());
    for _ in 0..model.len() {
        velocity.push(bytes::read_f64_le(&mut r).map_err(map_eof)?);
    }
    let n_epochs = bytes::read_u64_le(&mut r).map_err(map_eof)? as usize;
    let mut record = RunRecord::default();
    for _ in 0..n_epochs {
        record.epochs.push(EpochStats {
            train_loss: bytes::read_f64_le(&mut r).map_err(map_eof)?,
            val_ler: bytes::read_f64_le(&mut r).map_err(map_eof)?,
        });
    }
    let best = bytes::read_u64_le(&mut r).map_err(map_eof)?;
    record.best_epoch = match best {
        CHECKPOINT_NONE_EPOCH => None,
        e => Some(e as usize),
    };
    Ok((model, velocity, record))
}
