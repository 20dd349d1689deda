//! Connectionist temporal classification: loss, gradients, and decoding.
//!
//! The network emits a posterior over K labels plus an extra *blank* symbol at
//! every frame. A frame-level path maps to a labelling by collapsing repeated
//! symbols and deleting blanks; the CTC probability of a labelling is the sum
//! over all paths that collapse to it, computed by a forward–backward
//! recursion over the blank-augmented target l′ = (∅, l₁, ∅, …, l_L, ∅).
//!
//! All lattice arithmetic is done in log space: at several hundred frames the
//! path products underflow 64-bit floats in direct space.
//!
//! The blank index is fixed to K, the last output column, everywhere in this
//! crate.

mod prefix;

pub use prefix::prefix_search_decode;

use thiserror::Error;

use crate::labelling::Labelling;
use crate::math::{argmax, log_add, log_sum_exp};

#[derive(Debug, Error, PartialEq)]
pub enum CtcError {
    #[error("posterior matrix is empty")]
    EmptyPosteriors,
    #[error("posterior row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("posterior row {row} sums to {sum}, outside 1 ± 1e-9")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("posterior entry at ({row}, {col}) is {value}, outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("label {label} at position {position} is not below the blank index {blank}")]
    LabelNotBelowBlank {
        label: usize,
        position: usize,
        blank: usize,
    },
    #[error(
        "infeasible target: {frames} frames cannot emit {labels} labels \
         with {repeats} adjacent repeat(s) (need at least {required})"
    )]
    InfeasibleTarget {
        frames: usize,
        labels: usize,
        repeats: usize,
        required: usize,
    },
}

/// Per-frame label posteriors: a T×(K+1) row-stochastic matrix.
///
/// Column K (the last) is the blank.
#[derive(Clone, Debug, PartialEq)]
pub struct Posteriors {
    rows: Vec<Vec<f64>>,
    num_labels: usize,
}

impl Posteriors {
    /// Validates and wraps a T×(K+1) matrix: consistent width ≥ 2, entries in
    /// [0, 1], each row summing to 1 within 1e-9.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, CtcError> {
        if rows.is_empty() || rows[0].len() < 2 {
            return Err(CtcError::EmptyPosteriors);
        }
        let width = rows[0].len();
        for (t, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(CtcError::RaggedRow {
                    row: t,
                    expected: width,
                    found: row.len(),
                });
            }
            let mut sum = 0.0;
            for (k, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CtcError::EntryOutOfRange {
                        row: t,
                        col: k,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CtcError::RowNotStochastic { row: t, sum });
            }
        }
        Ok(Posteriors {
            num_labels: width - 1,
            rows,
        })
    }

    /// Wraps rows already known to be row-stochastic (e.g. softmax output).
    pub(crate) fn from_softmax(rows: Vec<Vec<f64>>) -> Self {
        debug_assert!(!rows.is_empty() && rows[0].len() >= 2);
        Posteriors {
            num_labels: rows[0].len() - 1,
            rows,
        }
    }

    /// Number of frames T.
    pub fn frames(&self) -> usize {
        self.rows.len()
    }

    /// Number of real labels K (excluding the blank).
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// The blank column index (always K).
    pub fn blank(&self) -> usize {
        self.num_labels
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// A new matrix holding the given frame range (used for sectioned decoding).
    pub(crate) fn slice(&self, range: std::ops::Range<usize>) -> Posteriors {
        Posteriors {
            rows: self.rows[range].to_vec(),
            num_labels: self.num_labels,
        }
    }
}

/// Interleaves blanks around every label: (l₁, …, l_L) → (∅, l₁, ∅, …, l_L, ∅).
///
/// The result has length 2L+1 with blanks at even indices. Labels equal to
/// the blank index are rejected.
pub fn augment_with_blanks(l: &Labelling, blank: usize) -> Result<Vec<usize>, CtcError> {
    let mut out = Vec::with_capacity(2 * l.len() + 1);
    out.push(blank);
    for (position, &label) in l.iter().enumerate() {
        if label >= blank {
            return Err(CtcError::LabelNotBelowBlank {
                label,
                position,
                blank,
            });
        }
        out.push(label);
        out.push(blank);
    }
    Ok(out)
}

/// Minimum number of frames needed to emit `l`: one per label plus one
/// separating blank per adjacent repeated pair.
fn required_frames(l: &Labelling) -> (usize, usize) {
    let repeats = l
        .labels()
        .windows(2)
        .filter(|w| w[0] == w[1])
        .count();
    (l.len() + repeats, repeats)
}

fn check_feasible(y: &Posteriors, l: &Labelling) -> Result<(), CtcError> {
    let (required, repeats) = required_frames(l);
    if y.frames() < required {
        return Err(CtcError::InfeasibleTarget {
            frames: y.frames(),
            labels: l.len(),
            repeats,
            required,
        });
    }
    Ok(())
}

/// Log-space forward lattice over the augmented target.
///
/// `alpha[t][s]` = ln Σ (probability of paths emitting l′₁..l′ₛ-compatible
/// prefixes through frame t, ending in state s), including frame t's factor.
fn forward_lattice(y: &Posteriors, aug: &[usize]) -> Vec<Vec<f64>> {
    let t_len = y.frames();
    let s_len = aug.len();
    let blank = y.blank();
    let mut alpha = vec![vec![f64::NEG_INFINITY; s_len]; t_len];

    alpha[0][0] = y.row(0)[aug[0]].ln();
    if s_len > 1 {
        alpha[0][1] = y.row(0)[aug[1]].ln();
    }
    for t in 1..t_len {
        let row = y.row(t);
        for s in 0..s_len {
            let mut acc = alpha[t - 1][s];
            if s >= 1 {
                acc = log_add(acc, alpha[t - 1][s - 1]);
            }
            if s >= 2 && aug[s] != blank && aug[s] != aug[s - 2] {
                acc = log_add(acc, alpha[t - 1][s - 2]);
            }
            alpha[t][s] = acc + row[aug[s]].ln();
        }
    }
    alpha
}

/// Log-space backward lattice, the mirror recursion from (T, S).
///
/// `beta[t][s]` includes the emission factor y_t(l′ₛ), so that for every t
/// Σₛ α(t,s)·β(t,s)/y_t(l′ₛ) equals the total labelling probability.
fn backward_lattice(y: &Posteriors, aug: &[usize]) -> Vec<Vec<f64>> {
    let t_len = y.frames();
    let s_len = aug.len();
    let blank = y.blank();
    let mut beta = vec![vec![f64::NEG_INFINITY; s_len]; t_len];

    beta[t_len - 1][s_len - 1] = y.row(t_len - 1)[aug[s_len - 1]].ln();
    if s_len > 1 {
        beta[t_len - 1][s_len - 2] = y.row(t_len - 1)[aug[s_len - 2]].ln();
    }
    for t in (0..t_len.saturating_sub(1)).rev() {
        let row = y.row(t);
        for s in 0..s_len {
            let mut acc = beta[t + 1][s];
            if s + 1 < s_len {
                acc = log_add(acc, beta[t + 1][s + 1]);
            }
            if s + 2 < s_len && aug[s + 2] != blank && aug[s + 2] != aug[s] {
                acc = log_add(acc, beta[t + 1][s + 2]);
            }
            beta[t][s] = acc + row[aug[s]].ln();
        }
    }
    beta
}

fn log_probability_from_alpha(alpha: &[Vec<f64>]) -> f64 {
    let last = alpha.last().expect("non-empty lattice");
    let s_len = last.len();
    if s_len >= 2 {
        log_add(last[s_len - 1], last[s_len - 2])
    } else {
        last[s_len - 1]
    }
}

/// Negative log probability −ln p(l|x), computed in log space.
///
/// Targets that cannot fit in the available frames are reported as
/// [`CtcError::InfeasibleTarget`] rather than as an infinite loss.
pub fn ctc_loss(y: &Posteriors, l: &Labelling) -> Result<f64, CtcError> {
    check_feasible(y, l)?;
    let aug = augment_with_blanks(l, y.blank())?;
    let alpha = forward_lattice(y, &aug);
    Ok(-log_probability_from_alpha(&alpha))
}

/// Forward and backward lattices as linear-space probabilities.
///
/// Returned as T×S matrices of α(t,s) and β(t,s). Internally computed in log
/// space; entries that underflow `f64` come back as 0.
pub fn ctc_alpha_beta(
    y: &Posteriors,
    l: &Labelling,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), CtcError> {
    check_feasible(y, l)?;
    let aug = augment_with_blanks(l, y.blank())?;
    let alpha = forward_lattice(y, &aug);
    let beta = backward_lattice(y, &aug);
    let expand = |m: Vec<Vec<f64>>| {
        m.into_iter()
            .map(|row| row.into_iter().map(f64::exp).collect())
            .collect()
    };
    Ok((expand(alpha), expand(beta)))
}

/// Gradient of the CTC loss with respect to the pre-softmax activations.
///
/// ∂L/∂a_t(k) = y_t(k) − (1/p)·Σ_{s: l′ₛ=k} α(t,s)·β(t,s)/y_t(l′ₛ).
/// Every row sums to zero.
pub fn ctc_gradient(y: &Posteriors, l: &Labelling) -> Result<Vec<Vec<f64>>, CtcError> {
    loss_and_gradient(y, l).map(|(_, g)| g)
}

/// Loss and activation gradient from one forward–backward pass.
pub fn loss_and_gradient(
    y: &Posteriors,
    l: &Labelling,
) -> Result<(f64, Vec<Vec<f64>>), CtcError> {
    check_feasible(y, l)?;
    let aug = augment_with_blanks(l, y.blank())?;
    let alpha = forward_lattice(y, &aug);
    let beta = backward_lattice(y, &aug);
    let log_p = log_probability_from_alpha(&alpha);

    let t_len = y.frames();
    let width = y.num_labels() + 1;
    let mut grad = vec![vec![0.0; width]; t_len];
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); width];
    for t in 0..t_len {
        let row = y.row(t);
        for col in terms.iter_mut() {
            col.clear();
        }
        for (s, &sym) in aug.iter().enumerate() {
            let la = alpha[t][s];
            let lb = beta[t][s];
            // A zero-probability lattice cell contributes nothing; skipping it
            // also avoids forming (-inf) - (-inf) when y_t(l′ₛ) is 0.
            if la == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
                continue;
            }
            terms[sym].push(la + lb - row[sym].ln());
        }
        for (k, col) in terms.iter().enumerate() {
            let occupancy = if col.is_empty() {
                0.0
            } else {
                (log_sum_exp(col) - log_p).exp()
            };
            grad[t][k] = row[k] - occupancy;
        }
    }
    Ok((-log_p, grad))
}

/// Per-frame argmax, collapse consecutive repeats, delete blanks.
///
/// Fast but not guaranteed to find the most probable labelling.
pub fn best_path_decode(y: &Posteriors) -> Labelling {
    let blank = y.blank();
    let mut out = Vec::new();
    let mut prev = blank;
    for t in 0..y.frames() {
        let k = argmax(y.row(t));
        if k != blank && k != prev {
            out.push(k);
        }
        prev = k;
    }
    Labelling::new(out)
}

/// CTC probability of a labelling: exp(−loss), or 0 when the target cannot
/// fit in the available frames.
///
/// Panics if `l` contains the blank index; labellings are over [0, K).
pub fn labelling_probability(y: &Posteriors, l: &Labelling) -> f64 {
    match ctc_loss(y, l) {
        Ok(loss) => (-loss).exp(),
        Err(CtcError::InfeasibleTarget { .. }) => 0.0,
        Err(e) => panic!("invalid labelling: {e}"),
    }
}
