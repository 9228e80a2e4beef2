//! chrF++ against pinned scores from sacreBLEU 2.6.0 (`CHRF(word_order=2)`)
//! and against a brute-force n-gram counter written independently of the
//! library code.

mod common;

use common::chrf::{brute, PINNED, PINNED_CORPUS};
use langforge::eval::chrf::{chrf_pp, corpus_chrf};
use langforge::ChrfParams;
use proptest::prelude::*;

pub const TOLERANCE: f64 = 0.1;

fn params() -> ChrfParams {
    ChrfParams::default()
}

#[test]
fn sentence_scores_match_reference_implementation() {
    let mut worst: f64 = 0.0;
    for (h, r, expected) in PINNED {
        let got = chrf_pp(h, &[r], &params());
        let diff = (got - expected).abs();
        assert!(diff <= TOLERANCE, "{h:?} vs {r:?}: got {got}, pinned {expected}");
        worst = worst.max(diff);
    }
    // the pinned values are rounded to 6 decimals
    assert!(worst < 1e-5, "largest deviation {worst}");
}

#[test]
fn corpus_score_matches_reference_implementation() {
    let hyps: Vec<&str> = PINNED.iter().map(|p| p.0).collect();
    let refs: Vec<Vec<&str>> = PINNED.iter().map(|p| vec![p.1]).collect();
    let got = corpus_chrf(&hyps, &refs, &params());
    assert!((got - PINNED_CORPUS).abs() < 1e-9, "corpus {got} vs {PINNED_CORPUS}");
}

#[test]
fn multiple_references_use_the_best() {
    let got = chrf_pp("The cat sat on the mat.", &["A dog.", "The cat sat on a mat."], &params());
    assert!((got - 72.65910428863748).abs() < 1e-9, "{got}");
}

#[test]
fn identity_and_empty_hypothesis_on_fixtures() {
    for (h, r, _) in PINNED {
        for x in [h, r] {
            if !x.trim().is_empty() {
                assert_eq!(chrf_pp(x, &[x], &params()), 100.0, "{x:?}");
                assert_eq!(chrf_pp("", &[x], &params()), 0.0, "{x:?}");
            }
        }
    }
}

fn small_alphabet() -> impl Strategy<Value = String> {
    "[ab ]{0,14}"
}

fn nonblank() -> impl Strategy<Value = String> {
    "[a-zа-я\u{0915}-\u{0939} .,!?]{0,20}[a-zа-я\u{0915}-\u{0939}][a-zа-я\u{0915}-\u{0939} .,!?]{0,20}"
}

proptest! {
    #[test]
    fn equals_brute_force_on_small_alphabets(h in small_alphabet(), r in small_alphabet()) {
        let got = chrf_pp(&h, &[&r], &params());
        let want = brute::chrf(&h, &r, 6, 2, 2.0);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn bounded_and_identity(h in nonblank(), r in nonblank()) {
        let s = chrf_pp(&h, &[&r], &params());
        prop_assert!((0.0..=100.0).contains(&s));
        prop_assert_eq!(chrf_pp(&h, &[&h], &params()), 100.0);
        prop_assert_eq!(chrf_pp("", &[&r], &params()), 0.0);
    }
}
