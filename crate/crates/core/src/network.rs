//! Bidirectional LSTM with peephole memory blocks and a shared softmax
//! output layer.
//!
//! Each direction is a single hidden layer of memory blocks (one cell per
//! block). For presentation step t with z = [x_t ∥ h_{t−1}] and c₀ = h₀ = 0:
//!
//! ```text
//! ι = σ(W_ι z + b_ι + p_ι c_{t−1})        input gate
//! φ = σ(W_φ z + b_φ + p_φ c_{t−1})        forget gate
//! g = tanh(W_g z + b_g)                   cell input
//! c_t = φ·c_{t−1} + ι·g                   cell state
//! ω = σ(W_ω z + b_ω + p_ω c_t)            output gate (post-update peephole)
//! h_t = ω·tanh(c_t)                       block output
//! ```
//!
//! The forward layer reads the sequence in time order and the backward layer
//! in reverse; both feed one output layer whose softmax gives per-frame label
//! posteriors. Gradients are the exact reverse-mode derivative of these
//! recurrences, including all peephole paths.
//!
//! # Weight layout
//!
//! All trainable scalars live in one flat `f64` vector. Canonical order, with
//! Z = input_dim + H and B = blocks per direction:
//!
//! 1. forward direction: W_ι (B×Z row-major), W_φ, W_ω, W_g,
//!    then biases b_ι, b_φ, b_ω, b_g (B each),
//!    then peepholes p_ι, p_φ, p_ω (B each)
//! 2. backward direction, same order
//! 3. output layer: W_out (output_dim × 2H row-major, forward hidden first),
//!    then b_out
//!
//! Gradients and optimizer velocities use the same layout, and the model file
//! stores the scalars in exactly this order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bytes;
use crate::ctc::Posteriors;

/// Magic string at the head of model and checkpoint files.
pub const MODEL_MAGIC: &[u8; 8] = b"BLSTMCTC";
/// Current model file format version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("input dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("gradient shape mismatch: {0}")]
    GradientShape(String),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("model file truncated")]
    Truncated,
    #[error("model file has trailing bytes")]
    TrailingBytes,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn map_eof(e: std::io::Error) -> NetworkError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        NetworkError::Truncated
    } else {
        NetworkError::Io(e)
    }
}

/// Architecture of the BLSTM: layer sizes only, no weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub blocks_per_direction: usize,
    pub cells_per_block: usize,
    pub output_dim: usize,
}

impl ModelConfig {
    pub fn new(
        input_dim: usize,
        blocks_per_direction: usize,
        cells_per_block: usize,
        output_dim: usize,
    ) -> Self {
        ModelConfig {
            input_dim,
            blocks_per_direction,
            cells_per_block,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.input_dim == 0 || self.blocks_per_direction == 0 || self.cells_per_block == 0 {
            return Err(NetworkError::InvalidConfig(
                "all size fields must be at least 1".to_string(),
            ));
        }
        if self.output_dim < 2 {
            return Err(NetworkError::InvalidConfig(
                "output_dim must be at least 2 (one label plus blank)".to_string(),
            ));
        }
        if self.cells_per_block != 1 {
            return Err(NetworkError::InvalidConfig(format!(
                "cells_per_block = {} unsupported; this architecture uses one cell per block",
                self.cells_per_block
            )));
        }
        Ok(())
    }

    /// Hidden units per direction.
    pub fn hidden(&self) -> usize {
        self.blocks_per_direction * self.cells_per_block
    }
}

/// Total number of trainable scalars.
///
/// Per direction: blocks × [3·(input_dim + H + 1 + 1) + (input_dim + H + 1)]
/// — three gates each with a bias and a peephole, one cell input with a bias
/// — times two directions, plus output_dim × (2H + 1) for the output layer.
pub fn param_count(cfg: &ModelConfig) -> usize {
    let h = cfg.hidden();
    let per_direction =
        cfg.blocks_per_direction * (3 * (cfg.input_dim + h + 1 + 1) + (cfg.input_dim + h + 1));
    2 * per_direction + cfg.output_dim * (2 * h + 1)
}

/// Which recurrent layer a parameter group belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Byte-for-byte offsets of one direction's groups inside the flat vector.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DirLayout {
    pub start: usize,
    pub blocks: usize,
    pub z: usize,
}

impl DirLayout {
    fn len(&self) -> usize {
        4 * self.blocks * self.z + 7 * self.blocks
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub fwd: DirLayout,
    pub bwd: DirLayout,
    pub w_out: usize,
    pub b_out: usize,
    pub total: usize,
}

pub(crate) fn layout(cfg: &ModelConfig) -> Layout {
    let b = cfg.blocks_per_direction;
    let z = cfg.input_dim + cfg.hidden();
    let fwd = DirLayout {
        start: 0,
        blocks: b,
        z,
    };
    let bwd = DirLayout {
        start: fwd.len(),
        blocks: b,
        z,
    };
    let w_out = bwd.start + bwd.len();
    let b_out = w_out + cfg.output_dim * 2 * cfg.hidden();
    Layout {
        fwd,
        bwd,
        w_out,
        b_out,
        total: b_out + cfg.output_dim,
    }
}

/// Immutable view of one direction's parameter groups.
struct DirParams<'a> {
    w_iota: &'a [f64],
    w_phi: &'a [f64],
    w_omega: &'a [f64],
    w_g: &'a [f64],
    b_iota: &'a [f64],
    b_phi: &'a [f64],
    b_omega: &'a [f64],
    b_g: &'a [f64],
    p_iota: &'a [f64],
    p_phi: &'a [f64],
    p_omega: &'a [f64],
}

/// Mutable view with the same shape, used for gradient accumulation.
struct DirParamsMut<'a> {
    w_iota: &'a mut [f64],
    w_phi: &'a mut [f64],
    w_omega: &'a mut [f64],
    w_g: &'a mut [f64],
    b_iota: &'a mut [f64],
    b_phi: &'a mut [f64],
    b_omega: &'a mut [f64],
    b_g: &'a mut [f64],
    p_iota: &'a mut [f64],
    p_phi: &'a mut [f64],
    p_omega: &'a mut [f64],
}

fn split_dir<'a>(data: &'a [f64], dl: &DirLayout) -> DirParams<'a> {
    let wz = dl.blocks * dl.z;
    let b = dl.blocks;
    let s = dl.start;
    DirParams {
        w_iota: &data[s..s + wz],
        w_phi: &data[s + wz..s + 2 * wz],
        w_omega: &data[s + 2 * wz..s + 3 * wz],
        w_g: &data[s + 3 * wz..s + 4 * wz],
        b_iota: &data[s + 4 * wz..s + 4 * wz + b],
        b_phi: &data[s + 4 * wz + b..s + 4 * wz + 2 * b],
        b_omega: &data[s + 4 * wz + 2 * b..s + 4 * wz + 3 * b],
        b_g: &data[s + 4 * wz + 3 * b..s + 4 * wz + 4 * b],
        p_iota: &data[s + 4 * wz + 4 * b..s + 4 * wz + 5 * b],
        p_phi: &data[s + 4 * wz + 5 * b..s + 4 * wz + 6 * b],
        p_omega: &data[s + 4 * wz + 6 * b..s + 4 * wz + 7 * b],
    }
}

fn split_dir_mut<'a>(data: &'a mut [f64], dl: &DirLayout) -> DirParamsMut<'a> {
    let wz = dl.blocks * dl.z;
    let b = dl.blocks;
    let region = &mut data[dl.start..dl.start + dl.len()];
    let (w_iota, rest) = region.split_at_mut(wz);
    let (w_phi, rest) = rest.split_at_mut(wz);
    let (w_omega, rest) = rest.split_at_mut(wz);
    let (w_g, rest) = rest.split_at_mut(wz);
    let (b_iota, rest) = rest.split_at_mut(b);
    let (b_phi, rest) = rest.split_at_mut(b);
    let (b_omega, rest) = rest.split_at_mut(b);
    let (b_g, rest) = rest.split_at_mut(b);
    let (p_iota, rest) = rest.split_at_mut(b);
    let (p_phi, p_omega) = rest.split_at_mut(b);
    DirParamsMut {
        w_iota,
        w_phi,
        w_omega,
        w_g,
        b_iota,
        b_phi,
        b_omega,
        b_g,
        p_iota,
        p_phi,
        p_omega,
    }
}

/// Architecture configuration plus all trainable weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    cfg: ModelConfig,
    data: Vec<f64>,
}

impl Weights {
    /// All-zero weights (useful for tests and as an optimizer buffer shape).
    pub fn zeros(cfg: ModelConfig) -> Result<Self, NetworkError> {
        cfg.validate()?;
        let n = param_count(&cfg);
        Ok(Weights {
            cfg,
            data: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Flat parameter vector in canonical order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn dir(&self, direction: Direction) -> DirParams<'_> {
        let l = layout(&self.cfg);
        match direction {
            Direction::Forward => split_dir(&self.data, &l.fwd),
            Direction::Backward => split_dir(&self.data, &l.bwd),
        }
    }

    fn w_out(&self) -> &[f64] {
        let l = layout(&self.cfg);
        &self.data[l.w_out..l.b_out]
    }

    fn b_out(&self) -> &[f64] {
        let l = layout(&self.cfg);
        &self.data[l.b_out..l.total]
    }
}

/// Every scalar drawn i.i.d. uniform on [−0.1, 0.1] from a seeded generator.
pub fn init_weights(cfg: ModelConfig, seed: u64) -> Result<Weights, NetworkError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = param_count(&cfg);
    let data = (0..n).map(|_| rng.random_range(-0.1..=0.1)).collect();
    Ok(Weights { cfg, data })
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Everything the backward pass needs about one presentation step.
#[derive(Clone, Debug)]
pub struct StepState {
    /// Concatenated [x_t ∥ h_{t−1}] as presented.
    z: Vec<f64>,
    iota: Vec<f64>,
    phi: Vec<f64>,
    omega: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

impl StepState {
    pub fn gates(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.iota, &self.phi, &self.omega)
    }

    pub fn cell_state(&self) -> &[f64] {
        &self.c
    }

    pub fn output(&self) -> &[f64] {
        &self.h
    }
}

/// One direction's step states in presentation order.
#[derive(Clone, Debug)]
pub struct DirectionTrace {
    steps: Vec<StepState>,
    reversed: bool,
}

impl DirectionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Hidden output aligned to the original time index.
    pub fn hidden_at(&self, t: usize) -> &[f64] {
        &self.steps[self.present_index(t)].h
    }

    pub fn step(&self, presentation_index: usize) -> &StepState {
        &self.steps[presentation_index]
    }

    fn present_index(&self, t: usize) -> usize {
        if self.reversed {
            self.steps.len() - 1 - t
        } else {
            t
        }
    }
}

/// Forward activations of the whole network for one sequence.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub fwd: DirectionTrace,
    pub bwd: DirectionTrace,
    /// Output-layer pre-activations, T × output_dim.
    pub activations: Vec<Vec<f64>>,
}

fn check_frames(cfg: &ModelConfig, frames: &[Vec<f64>]) -> Result<(), NetworkError> {
    if frames.is_empty() {
        return Err(NetworkError::EmptySequence);
    }
    for frame in frames {
        if frame.len() != cfg.input_dim {
            return Err(NetworkError::DimensionMismatch {
                expected: cfg.input_dim,
                found: frame.len(),
            });
        }
    }
    Ok(())
}

fn run_direction(
    params: &DirParams<'_>,
    blocks: usize,
    input_dim: usize,
    frames: &[Vec<f64>],
    reversed: bool,
) -> DirectionTrace {
    let t_len = frames.len();
    let z_len = input_dim + blocks;
    let mut steps = Vec::with_capacity(t_len);
    let mut h_prev = vec![0.0; blocks];
    let mut c_prev = vec![0.0; blocks];

    for step in 0..t_len {
        let t = if reversed { t_len - 1 - step } else { step };
        let mut z = Vec::with_capacity(z_len);
        z.extend_from_slice(&frames[t]);
        z.extend_from_slice(&h_prev);

        let mut st = StepState {
            z,
            iota: vec![0.0; blocks],
            phi: vec![0.0; blocks],
            omega: vec![0.0; blocks],
            g: vec![0.0; blocks],
            c: vec![0.0; blocks],
            tanh_c: vec![0.0; blocks],
            h: vec![0.0; blocks],
        };
        for b in 0..blocks {
            let row = b * z_len;
            let mut a_iota = params.b_iota[b] + params.p_iota[b] * c_prev[b];
            let mut a_phi = params.b_phi[b] + params.p_phi[b] * c_prev[b];
            let mut a_g = params.b_g[b];
            for (j, &zj) in st.z.iter().enumerate() {
                a_iota += params.w_iota[row + j] * zj;
                a_phi += params.w_phi[row + j] * zj;
                a_g += params.w_g[row + j] * zj;
            }
            let iota = sigmoid(a_iota);
            let phi = sigmoid(a_phi);
            let g = a_g.tanh();
            let c = phi * c_prev[b] + iota * g;
            let mut a_omega = params.b_omega[b] + params.p_omega[b] * c;
            for (j, &zj) in st.z.iter().enumerate() {
                a_omega += params.w_omega[row + j] * zj;
            }
            let omega = sigmoid(a_omega);
            let tanh_c = c.tanh();
            st.iota[b] = iota;
            st.phi[b] = phi;
            st.omega[b] = omega;
            st.g[b] = g;
            st.c[b] = c;
            st.tanh_c[b] = tanh_c;
            st.h[b] = omega * tanh_c;
        }
        c_prev.copy_from_slice(&st.c);
        h_prev.copy_from_slice(&st.h);
        steps.push(st);
    }
    DirectionTrace { steps, reversed }
}

/// Runs one direction over the frames.
///
/// When `reversed`, frames are presented last-to-first and the returned
/// hidden outputs are re-aligned to the original time indices.
pub fn direction_forward(
    model: &Weights,
    direction: Direction,
    frames: &[Vec<f64>],
    reversed: bool,
) -> Result<(Vec<Vec<f64>>, DirectionTrace), NetworkError> {
    check_frames(&model.cfg, frames)?;
    let params = model.dir(direction);
    let trace = run_direction(
        &params,
        model.cfg.blocks_per_direction,
        model.cfg.input_dim,
        frames,
        reversed,
    );
    let hidden = (0..frames.len())
        .map(|t| trace.hidden_at(t).to_vec())
        .collect();
    Ok((hidden, trace))
}

fn softmax_rows(activations: &[Vec<f64>]) -> Vec<Vec<f64>> {
    activations
        .iter()
        .map(|row| {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&a| (a - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        })
        .collect()
}

/// Full forward pass: both directions, output layer, softmax.
///
/// Returns the T×output_dim posterior matrix together with the trace needed
/// by [`blstm_backward`].
pub fn blstm_forward(
    model: &Weights,
    frames: &[Vec<f64>],
) -> Result<(Posteriors, ForwardTrace), NetworkError> {
    check_frames(&model.cfg, frames)?;
    let h = model.cfg.hidden();
    let o = model.cfg.output_dim;
    let fwd = run_direction(
        &model.dir(Direction::Forward),
        model.cfg.blocks_per_direction,
        model.cfg.input_dim,
        frames,
        false,
    );
    let bwd = run_direction(
        &model.dir(Direction::Backward),
        model.cfg.blocks_per_direction,
        model.cfg.input_dim,
        frames,
        true,
    );
    let w_out = model.w_out();
    let b_out = model.b_out();
    let mut activations = Vec::with_capacity(frames.len());
    for t in 0..frames.len() {
        let hf = fwd.hidden_at(t);
        let hb = bwd.hidden_at(t);
        let mut row = Vec::with_capacity(o);
        for out in 0..o {
            let base = out * 2 * h;
            let mut a = b_out[out];
            for j in 0..h {
                a += w_out[base + j] * hf[j];
                a += w_out[base + h + j] * hb[j];
            }
            row.push(a);
        }
        activations.push(row);
    }
    let y = Posteriors::from_softmax(softmax_rows(&activations));
    Ok((y, ForwardTrace {
        fwd,
        bwd,
        activations,
    }))
}

/// Forward pass returning only the posteriors (decoding does not need the
/// trace).
pub fn posteriors(model: &Weights, frames: &[Vec<f64>]) -> Result<Posteriors, NetworkError> {
    blstm_forward(model, frames).map(|(y, _)| y)
}

/// Exact reverse-mode gradient of [`blstm_forward`].
///
/// `d_activations` is ∂L/∂a, the loss gradient with respect to the output
/// layer pre-activations (for CTC this is what
/// [`crate::ctc::ctc_gradient`] produces). Returns ∂L/∂w for every scalar in
/// the canonical flat layout.
pub fn blstm_backward(
    model: &Weights,
    frames: &[Vec<f64>],
    trace: &ForwardTrace,
    d_activations: &[Vec<f64>],
) -> Result<Vec<f64>, NetworkError> {
    check_frames(&model.cfg, frames)?;
    let t_len = frames.len();
    let h = model.cfg.hidden();
    let o = model.cfg.output_dim;
    if trace.fwd.len() != t_len || trace.bwd.len() != t_len {
        return Err(NetworkError::GradientShape(format!(
            "trace covers {} step(s), frames have {}",
            trace.fwd.len(),
            t_len
        )));
    }
    if d_activations.len() != t_len || d_activations.iter().any(|r| r.len() != o) {
        return Err(NetworkError::GradientShape(format!(
            "d_activations must be {t_len}×{o}"
        )));
    }

    let l = layout(&model.cfg);
    let mut grad = vec![0.0; l.total];

    // Output layer: accumulate its weight gradient and distribute ∂L/∂h to
    // the two directions at every original time index.
    let w_out = model.w_out();
    let mut dh_fwd = vec![vec![0.0; h]; t_len];
    let mut dh_bwd = vec![vec![0.0; h]; t_len];
    {
        let (gw_out, gb_out) = {
            let rest = &mut grad[l.w_out..];
            let (w, b) = rest.split_at_mut(o * 2 * h);
            (w, b)
        };
        for t in 0..t_len {
            let hf = trace.fwd.hidden_at(t);
            let hb = trace.bwd.hidden_at(t);
            for out in 0..o {
                let da = d_activations[t][out];
                if da == 0.0 {
                    continue;
                }
                let base = out * 2 * h;
                gb_out[out] += da;
                for j in 0..h {
                    gw_out[base + j] += da * hf[j];
                    gw_out[base + h + j] += da * hb[j];
                    dh_fwd[t][j] += w_out[base + j] * da;
                    dh_bwd[t][j] += w_out[base + h + j] * da;
                }
            }
        }
    }

    backward_direction(model, Direction::Forward, &trace.fwd, &dh_fwd, &mut grad);
    backward_direction(model, Direction::Backward, &trace.bwd, &dh_bwd, &mut grad);
    Ok(grad)
}

/// BPTT through one direction, accumulating into `grad`.
fn backward_direction(
    model: &Weights,
    direction: Direction,
    trace: &DirectionTrace,
    dh_out: &[Vec<f64>],
    grad: &mut [f64],
) {
    let cfg = &model.cfg;
    let blocks = cfg.blocks_per_direction;
    let input_dim = cfg.input_dim;
    let z_len = input_dim + blocks;
    let t_len = trace.len();
    let params = model.dir(direction);
    let l = layout(cfg);
    let g = match direction {
        Direction::Forward => split_dir_mut(grad, &l.fwd),
        Direction::Backward => split_dir_mut(grad, &l.bwd),
    };

    // Recurrent accumulators flowing from presentation step s+1 back to s.
    let mut dh_rec = vec![0.0; blocks];
    let mut dc_rec = vec![0.0; blocks];
    let mut dz = vec![0.0; z_len];

    for s in (0..t_len).rev() {
        let t = if trace.reversed { t_len - 1 - s } else { s };
        let st = &trace.steps[s];
        for v in dz.iter_mut() {
            *v = 0.0;
        }
        let mut dc_prev_acc = vec![0.0; blocks];
        for b in 0..blocks {
            let c_prev = if s == 0 { 0.0 } else { trace.steps[s - 1].c[b] };
            let dh = dh_out[t][b] + dh_rec[b];

            let d_omega = dh * st.tanh_c[b];
            let da_omega = d_omega * st.omega[b] * (1.0 - st.omega[b]);
            // c_t receives gradient through h (via tanh), through the next
            // step's recurrences, and through the output gate's peephole.
            let dc = dh * st.omega[b] * (1.0 - st.tanh_c[b] * st.tanh_c[b])
                + dc_rec[b]
                + params.p_omega[b] * da_omega;
            let d_iota = dc * st.g[b];
            let da_iota = d_iota * st.iota[b] * (1.0 - st.iota[b]);
            let d_phi = dc * c_prev;
            let da_phi = d_phi * st.phi[b] * (1.0 - st.phi[b]);
            let d_g = dc * st.iota[b];
            let da_g = d_g * (1.0 - st.g[b] * st.g[b]);

            let row = b * z_len;
            for (j, &zj) in st.z.iter().enumerate() {
                g.w_iota[row + j] += da_iota * zj;
                g.w_phi[row + j] += da_phi * zj;
                g.w_omega[row + j] += da_omega * zj;
                g.w_g[row + j] += da_g * zj;
                dz[j] += params.w_iota[row + j] * da_iota
                    + params.w_phi[row + j] * da_phi
                    + params.w_omega[row + j] * da_omega
                    + params.w_g[row + j] * da_g;
            }
            g.b_iota[b] += da_iota;
            g.b_phi[b] += da_phi;
            g.b_omega[b] += da_omega;
            g.b_g[b] += da_g;
            g.p_iota[b] += da_iota * c_prev;
            g.p_phi[b] += da_phi * c_prev;
            g.p_omega[b] += da_omega * st.c[b];

            dc_prev_acc[b] = dc * st.phi[b] + params.p_iota[b] * da_iota + params.p_phi[b] * da_phi;
        }
        dh_rec.copy_from_slice(&dz[input_dim..]);
        dc_rec.copy_from_slice(&dc_prev_acc);
    }
}

/// Writes magic, version, config, and the weight scalars in canonical order.
pub fn save_model(model: &Weights, path: &Path) -> Result<(), NetworkError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model_block(&mut w, model)?;
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`save_model`]; bit-exact round trip.
pub fn load_model(path: &Path) -> Result<Weights, NetworkError> {
    let mut r = BufReader::new(File::open(path)?);
    let model = read_model_block(&mut r)?;
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(model),
        _ => Err(NetworkError::TrailingBytes),
    }
}

pub(crate) fn write_model_block<W: Write>(w: &mut W, model: &Weights) -> Result<(), NetworkError> {
    w.write_all(MODEL_MAGIC)?;
    bytes::write_u32_le(w, MODEL_VERSION)?;
    bytes::write_u32_le(w, model.cfg.input_dim as u32)?;
    bytes::write_u32_le(w, model.cfg.blocks_per_direction as u32)?;
    bytes::write_u32_le(w, model.cfg.cells_per_block as u32)?;
    bytes::write_u32_le(w, model.cfg.output_dim as u32)?;
    for &v in &model.data {
        bytes::write_f64_le(w, v)?;
    }
    Ok(())
}

pub(crate) fn read_model_block<R: Read>(r: &mut R) -> Result<Weights, NetworkError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(map_eof)?;
    if &magic != MODEL_MAGIC {
        return Err(NetworkError::BadMagic);
    }
    let version = bytes::read_u32_le(r).map_err(map_eof)?;
    if version != MODEL_VERSION {
        return Err(NetworkError::UnsupportedVersion(version));
    }
    let cfg = ModelConfig {
        input_dim: bytes::read_u32_le(r).map_err(map_eof)? as usize,
        blocks_per_direction: bytes::read_u32_le(r).map_err(map_eof)? as usize,
        cells_per_block: bytes::read_u32_le(r).map_err(map_eof)? as usize,
        output_dim: bytes::read_u32_le(r).map_err(map_eof)? as usize,
    };
    cfg.validate()?;
    let n = param_count(&cfg);
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(bytes::read_f64_le(r).map_err(map_eof)?);
    }
    Ok(Weights { cfg, data })
}
