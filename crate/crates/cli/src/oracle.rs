//! Exhaustive reference implementations used by `selfcheck` and the
//! acceptance suite.
//!
//! These deliberately avoid the engine's dynamic-programming code paths:
//! labelling probabilities come from explicit enumeration of all (K+1)^T
//! frame-level paths, and edit distances from the naive exponential
//! recursion. Slow, but independent.

use std::collections::HashMap;

use phonerec_core::ctc::Posteriors;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Random row-stochastic T×(K+1) posterior matrix with entries bounded away
/// from zero.
pub fn random_posteriors(rng: &mut ChaCha8Rng, frames: usize, num_labels: usize) -> Posteriors {
    let rows = (0..frames)
        .map(|_| {
            let mut row: Vec<f64> = (0..=num_labels)
                .map(|_| rng.random_range(0.05..1.0))
                .collect();
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            row
        })
        .collect();
    Posteriors::new(rows).expect("normalized rows")
}

/// Probability of every labelling, by enumerating all frame-level paths and
/// collapsing each one (repeats merged, blanks removed).
pub fn enumerate_labellings(y: &Posteriors) -> HashMap<Vec<usize>, f64> {
    let width = y.num_labels() + 1;
    let blank = y.blank();
    let frames = y.frames();
    let mut by_labelling: HashMap<Vec<usize>, f64> = HashMap::new();
    let total_paths = width.pow(frames as u32);
    for code in 0..total_paths {
        let mut c = code;
        let mut prob = 1.0;
        let mut collapsed = Vec::new();
        let mut prev = blank;
        for t in 0..frames {
            let sym = c % width;
            c /= width;
            prob *= y.row(t)[sym];
            if sym != blank && sym != prev {
                collapsed.push(sym);
            }
            prev = sym;
        }
        *by_labelling.entry(collapsed).or_insert(0.0) += prob;
    }
    by_labelling
}

/// The most probable labelling under exhaustive enumeration, with ties broken
/// the same way the prefix search breaks them (shorter first, then
/// lexicographic).
pub fn exhaustive_argmax(y: &Posteriors) -> (Vec<usize>, f64) {
    let mut entries: Vec<(Vec<usize>, f64)> = enumerate_labellings(y).into_iter().collect();
    entries.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.len().cmp(&b.0.len()))
            .then_with(|| a.0.cmp(&b.0))
    });
    entries.into_iter().next().expect("at least the empty labelling")
}

/// Naive exponential-time Levenshtein distance.
pub fn brute_force_edit_distance(a: &[usize], b: &[usize]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, None) => 0,
        (None, Some(_)) => b.len(),
        (Some(_), None) => a.len(),
        (Some((&ha, ta)), Some((&hb, tb))) => {
            let sub = brute_force_edit_distance(ta, tb) + usize::from(ha != hb);
            let ins = brute_force_edit_distance(a, tb) + 1;
            let del = brute_force_edit_distance(ta, b) + 1;
            sub.min(ins).min(del)
        }
    }
}

/// All sequences of length `0..=max_len` over `symbols` symbols.
pub fn all_sequences(symbols: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for len in 1..=max_len {
        let count = symbols.pow(len as u32);
        for code in 0..count {
            let mut seq = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                seq.push(c % symbols);
                c /= symbols;
            }
            out.push(seq);
        }
    }
    out
}
