//! Label-error-rate scoring and multi-run significance statistics.
//!
//! LER is the Levenshtein edit distance between reference and hypothesis
//! labellings, pooled over a corpus: total edits divided by total reference
//! labels. Run aggregation reports the mean and standard error over repeated
//! training runs, with one- and two-sample t-tests for comparing systems.

use thiserror::Error;

use crate::labelling::Labelling;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("corpus has no scoring pairs")]
    EmptyCorpus,
    #[error("total reference label count is zero")]
    ZeroReferenceLabels,
    #[error("standard error undefined for {0} run(s); need at least 2")]
    TooFewRuns(usize),
    #[error("standard error is zero; t statistic undefined")]
    ZeroStandardError,
}

/// Pooled corpus score: edit counts and the label error rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub target_label_count: usize,
    pub ler: f64,
}

impl ScoreReport {
    pub fn distance(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Mean and standard error over `n` independent runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator) divided by √n.
    pub standard_error: f64,
}

/// Levenshtein distance with unit costs, decomposed into substitutions,
/// insertions, and deletions from one minimal alignment.
///
/// Insertions are hypothesis labels with no reference counterpart; deletions
/// are reference labels missing from the hypothesis. When several minimal
/// alignments exist the backtrace prefers substitution over insertion over
/// deletion, so the (S, I, D) decomposition is deterministic; the total
/// distance does not depend on the tie-break.
pub fn edit_distance(reference: &Labelling, hypothesis: &Labelling) -> (usize, usize, usize, usize) {
    let r = reference.labels();
    let h = hypothesis.labels();
    let n = r.len();
    let m = h.len();

    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]);
            let ins = d[i][j - 1] + 1;
            let del = d[i - 1][j] + 1;
            d[i][j] = sub.min(ins).min(del);
        }
    }

    // Backtrace with the fixed preference order.
    let (mut i, mut j) = (n, m);
    let (mut subs, mut ins, mut dels) = (0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]) {
            if r[i - 1] != h[j - 1] {
                subs += 1;
            }
            i -= 1;
            j -= 1;
        } else if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            ins += 1;
            j -= 1;
        } else {
            dels += 1;
            i -= 1;
        }
    }
    (d[n][m], subs, ins, dels)
}

/// Pooled label error rate over (reference, hypothesis) pairs.
///
/// LER = Σ distances / Σ reference lengths, so long utterances weigh more
/// than short ones.
pub fn corpus_ler(pairs: &[(Labelling, Labelling)]) -> Result<ScoreReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut subs = 0;
    let mut ins = 0;
    let mut dels = 0;
    let mut total_ref = 0;
    for (reference, hypothesis) in pairs {
        let (_, s, i, d) = edit_distance(reference, hypothesis);
        subs += s;
        ins += i;
        dels += d;
        total_ref += reference.len();
    }
    if total_ref == 0 {
        return Err(EvalError::ZeroReferenceLabels);
    }
    Ok(ScoreReport {
        substitutions: subs,
        insertions: ins,
        deletions: dels,
        target_label_count: total_ref,
        ler: (subs + ins + dels) as f64 / total_ref as f64,
    })
}

/// Mean and standard error of a set of per-run results.
pub fn aggregate_runs(values: &[f64]) -> Result<RunStats, EvalError> {
    let n = values.len();
    if n < 2 {
        return Err(EvalError::TooFewRuns(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(RunStats {
        n,
        mean,
        standard_error: var.sqrt() / (n as f64).sqrt(),
    })
}

/// One-sample t-test of a run mean against a fixed reference value.
///
/// Returns `(t, p)` with `t = (mean − reference) / standard_error` and the
/// two-sided p-value from the t-distribution with n−1 degrees of freedom.
pub fn one_sample_t_test(stats: &RunStats, reference_value: f64) -> Result<(f64, f64), EvalError> {
    if stats.n < 2 {
        return Err(EvalError::TooFewRuns(stats.n));
    }
    if stats.standard_error <= 0.0 {
        return Err(EvalError::ZeroStandardError);
    }
    let t = (stats.mean - reference_value) / stats.standard_error;
    let p = t_two_sided_p(t, (stats.n - 1) as f64);
    Ok((t, p))
}

/// Welch's two-sample t-test from summary statistics.
///
/// `t = (mean_a − mean_b) / √(se_a² + se_b²)` with Welch–Satterthwaite
/// degrees of freedom; the p-value is two-sided.
pub fn two_sample_t_test(a: &RunStats, b: &RunStats) -> Result<(f64, f64), EvalError> {
    let va = a.standard_error * a.standard_error;
    let vb = b.standard_error * b.standard_error;
    if va + vb <= 0.0 {
        return Err(EvalError::ZeroStandardError);
    }
    let t = (a.mean - b.mean) / (va + vb).sqrt();
    let df = (va + vb) * (va + vb)
        / (va * va / (a.n.saturating_sub(1).max(1)) as f64
            + vb * vb / (b.n.saturating_sub(1).max(1)) as f64);
    Ok((t, t_two_sided_p(t, df)))
}

/// Two-sided tail probability of the t-distribution.
///
/// P(|T| ≥ t) = I_x(ν/2, 1/2) with x = ν/(ν + t²), evaluated through the
/// regularized incomplete beta function. Degrees of freedom may be
/// fractional (Welch).
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    incomplete_beta(0.5 * df, 0.5, x)
}

/// Regularized incomplete beta function I_x(a, b).
///
/// Continued fraction (modified Lentz), switching to the symmetry
/// I_x(a,b) = 1 − I_{1−x}(b,a) where the fraction converges slowly.
/// Accurate to about 1e-10 over the parameter ranges used here.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "x out of [0,1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b)
        - ln_gamma(a)
        - ln_gamma(b))
    .exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta, by the modified Lentz method.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return h;
        }
    }
    h
}

/// ln Γ(x) by the Lanczos approximation (g = 7, 9 coefficients).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn lab(v: &[usize]) -> Labelling {
        Labelling::new(v.to_vec())
    }

    /// Exponential-time reference for the edit distance.
    fn brute_force_distance(a: &[usize], b: &[usize]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, None) => 0,
            (None, Some(_)) => b.len(),
            (Some(_), None) => a.len(),
            (Some((&ha, ta)), Some((&hb, tb))) => {
                let sub = brute_force_distance(ta, tb) + usize::from(ha != hb);
                let ins = brute_force_distance(a, tb) + 1;
                let del = brute_force_distance(ta, b) + 1;
                sub.min(ins).min(del)
            }
        }
    }

    #[test]
    fn edit_distance_identity() {
        let (d, s, i, del) = edit_distance(&lab(&[0, 1, 2]), &lab(&[0, 1, 2]));
        assert_eq!((d, s, i, del), (0, 0, 0, 0));
    }

    #[test]
    fn edit_distance_single_deletion() {
        let (d, s, i, del) = edit_distance(&lab(&[0, 1, 2]), &lab(&[0, 2]));
        assert_eq!((d, s, i, del), (1, 0, 0, 1));
    }

    #[test]
    fn edit_distance_swap_is_two_substitutions() {
        let (d, s, i, del) = edit_distance(&lab(&[0, 1]), &lab(&[1, 0]));
        assert_eq!(d, 2);
        assert_eq!((s, i, del), (2, 0, 0));
    }

    #[test]
    fn edit_distance_matches_brute_force_exhaustively() {
        // All pairs of sequences with length <= 4 over 3 symbols; the full
        // length-<=6 sweep lives in the acceptance suite.
        let mut seqs: Vec<Vec<usize>> = vec![vec![]];
        for len in 1..=4 {
            let count = 3usize.pow(len as u32);
            for code in 0..count {
                let mut s = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    s.push(c % 3);
                    c /= 3;
                }
                seqs.push(s);
            }
        }
        for a in &seqs {
            for b in &seqs {
                let (d, s, i, del) = edit_distance(&lab(a), &lab(b));
                assert_eq!(d, brute_force_distance(a, b), "a={a:?} b={b:?}");
                assert_eq!(d, s + i + del);
            }
        }
    }

    #[test]
    fn edit_distance_metric_axioms_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let mut draw = |rng: &mut ChaCha8Rng| {
                let len = rng.random_range(0..8);
                lab(&(0..len)
                    .map(|_| rng.random_range(0..4usize))
                    .collect::<Vec<_>>())
            };
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let dab = edit_distance(&a, &b).0;
            let dba = edit_distance(&b, &a).0;
            let dac = edit_distance(&a, &c).0;
            let dcb = edit_distance(&c, &b).0;
            assert_eq!(dab, dba, "symmetry");
            assert!(dab <= dac + dcb, "triangle inequality");
            assert_eq!(edit_distance(&a, &a).0, 0, "identity");
            if dab == 0 {
                assert_eq!(a, b, "indiscernibles");
            }
        }
    }

    #[test]
    fn corpus_ler_examples() {
        let all_correct = vec![(lab(&[0, 1]), lab(&[0, 1])), (lab(&[2]), lab(&[2]))];
        assert_eq!(corpus_ler(&all_correct).unwrap().ler, 0.0);

        let one_of_four = vec![(lab(&[0, 1, 2, 3]), lab(&[0, 1, 2]))];
        assert_eq!(corpus_ler(&one_of_four).unwrap().ler, 0.25);

        // Pooled, not averaged per utterance: (1+0)/(2+2).
        let pooled = vec![(lab(&[0, 1]), lab(&[0, 2])), (lab(&[0, 1]), lab(&[0, 1]))];
        assert_eq!(corpus_ler(&pooled).unwrap().ler, 0.25);
    }

    #[test]
    fn corpus_ler_errors() {
        assert_eq!(corpus_ler(&[]).unwrap_err(), EvalError::EmptyCorpus);
        let no_refs = vec![(Labelling::empty(), lab(&[1]))];
        assert_eq!(
            corpus_ler(&no_refs).unwrap_err(),
            EvalError::ZeroReferenceLabels
        );
    }

    #[test]
    fn corpus_ler_order_invariant() {
        let mut pairs = vec![
            (lab(&[0, 1, 2]), lab(&[0, 2])),
            (lab(&[1]), lab(&[1, 1])),
            (lab(&[2, 2]), lab(&[2])),
        ];
        let a = corpus_ler(&pairs).unwrap();
        pairs.reverse();
        let b = corpus_ler(&pairs).unwrap();
        assert_eq!(a.ler, b.ler);
        assert_eq!(a.distance(), b.distance());
    }

    #[test]
    fn aggregate_runs_hand_example() {
        let stats = aggregate_runs(&[25.0, 25.2]).unwrap();
        assert!((stats.mean - 25.1).abs() < 1e-12);
        // sample std = sqrt(0.02) ~= 0.141421; / sqrt(2) = 0.1
        assert!((stats.standard_error - 0.1).abs() < 1e-12);
    }

    #[test]
    fn aggregate_runs_identical_values() {
        let stats = aggregate_runs(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(stats.standard_error, 0.0);
        assert_eq!(stats.mean, 3.0);
    }

    #[test]
    fn aggregate_runs_single_value_is_error() {
        assert_eq!(
            aggregate_runs(&[25.0]).unwrap_err(),
            EvalError::TooFewRuns(1)
        );
    }

    #[test]
    fn t_tail_matches_published_critical_value() {
        // df=9, t=2.262 is the tabulated 5% two-sided critical value.
        let p = t_two_sided_p(2.262, 9.0);
        assert!((p - 0.05).abs() < 1e-3, "p={p}");
    }

    #[test]
    fn t_tail_reference_values() {
        // Frozen from an independent evaluation of the same definition
        // (scipy.stats.t.sf, 2*sf(|t|, df)).
        let cases = [
            (17.0, 9.0, 3.787340553552368e-8),
            (3.85, 9.0, 3.906315109468427e-3),
            (2.085965004500327, 18.0, 5.14849902686581e-2),
            (1.0, 1.0, 0.5),
        ];
        for (t, df, expected) in cases {
            let p = t_two_sided_p(t, df);
            assert!(
                (p - expected).abs() <= 1e-10 * expected.max(1e-12) + 1e-14,
                "t={t} df={df}: got {p}, want {expected}"
            );
        }
    }

    #[test]
    fn one_sample_t_test_examples() {
        let stats = RunStats {
            n: 10,
            mean: 25.17,
            standard_error: 0.20,
        };
        let (t, p) = one_sample_t_test(&stats, 28.57).unwrap();
        assert!((t.abs() - 17.0).abs() < 1e-9);
        assert!(p < 1e-7, "p={p}");

        let (t, p) = one_sample_t_test(&stats, 24.4).unwrap();
        assert!((t - 3.85).abs() < 1e-9);
        assert!(p < 0.004, "p={p}");

        let (t, p) = one_sample_t_test(&stats, 25.17).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn one_sample_t_test_zero_se_is_error() {
        let stats = RunStats {
            n: 10,
            mean: 1.0,
            standard_error: 0.0,
        };
        assert_eq!(
            one_sample_t_test(&stats, 0.0).unwrap_err(),
            EvalError::ZeroStandardError
        );
    }

    #[test]
    fn two_sample_t_test_examples() {
        let a = RunStats {
            n: 10,
            mean: 25.17,
            standard_error: 0.20,
        };
        let b = RunStats {
            n: 10,
            mean: 24.58,
            standard_error: 0.20,
        };
        let (t, p) = two_sample_t_test(&a, &b).unwrap();
        assert!((t - 2.086).abs() < 1e-3, "t={t}");
        assert!((p - 0.0515).abs() < 1e-3, "p={p}");

        let (t_same, p_same) = two_sample_t_test(&a, &a).unwrap();
        assert_eq!(t_same, 0.0);
        assert_eq!(p_same, 1.0);

        // Doubling both standard errors halves t.
        let a2 = RunStats {
            standard_error: 0.40,
            ..a
        };
        let b2 = RunStats {
            standard_error: 0.40,
            ..b
        };
        let (t2, _) = two_sample_t_test(&a2, &b2).unwrap();
        assert!((t2 - t / 2.0).abs() < 1e-9);
    }

    #[test]
    fn two_sample_t_test_both_zero_se_is_error() {
        let z = RunStats {
            n: 10,
            mean: 1.0,
            standard_error: 0.0,
        };
        assert_eq!(
            two_sample_t_test(&z, &z).unwrap_err(),
            EvalError::ZeroStandardError
        );
    }

    #[test]
    fn ln_gamma_anchors() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    proptest! {
        // p-values are probabilities and decrease as |t| grows.
        #[test]
        fn t_tail_monotone_in_t(t in 0.01f64..30.0, df in 1.0f64..60.0) {
            let p = t_two_sided_p(t, df);
            let p_bigger = t_two_sided_p(t * 1.5, df);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p_bigger <= p + 1e-12);
        }
    }
}
