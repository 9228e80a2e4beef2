//! chrF++: character n-gram F-score extended with word n-grams.
//!
//! Character n-grams are taken over the text with all whitespace removed;
//! word n-grams over whitespace tokens after splitting one leading or
//! trailing ASCII punctuation mark off each token. Precision and recall are
//! averaged over the orders with n-grams on both sides, then combined into
//! an F-beta score on a 0-100 scale. Corpus scores aggregate per-order counts
//! over all segments before scoring; with several references each segment
//! uses the reference giving it the best score.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfParams<F> {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: F,
}

impl<F: Scalar> Default for ChrfParams<F> {
    fn default() -> Self {
        Self { char_order: 6, word_order: 2, beta: F::lit(2.0) }
    }
}

impl<F> ChrfParams<F> {
    pub fn orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

/// `(hypothesis, reference, matching)` n-gram counts for one order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCounts {
    pub hyp: u64,
    pub reference: u64,
    pub matched: u64,
}

/// Per-order counts, character orders first, then word orders.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats(pub Vec<OrderCounts>);

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), OrderCounts::default());
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.hyp += b.hyp;
            a.reference += b.reference;
            a.matched += b.matched;
        }
    }

    pub fn f_score<F: Scalar>(&self, beta: F) -> F {
        let factor = beta * beta;
        let mut avg_prec = F::zero();
        let mut avg_rec = F::zero();
        let mut effective = 0u64;
        for c in &self.0 {
            if c.hyp > 0 && c.reference > 0 {
                let m = F::from_count(c.matched);
                avg_prec = avg_prec + m / F::from_count(c.hyp);
                avg_rec = avg_rec + m / F::from_count(c.reference);
                effective += 1;
            }
        }
        if effective == 0 {
            return F::zero();
        }
        let n = F::from_count(effective);
        avg_prec = avg_prec / n;
        avg_rec = avg_rec / n;
        if avg_prec + avg_rec == F::zero() {
            return F::zero();
        }
        F::lit(100.0) * (F::one() + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec)
    }
}

const PUNCT: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Whitespace tokens with one edge punctuation mark split off.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in text.split_whitespace() {
        let chars: Vec<char> = w.chars().collect();
        if chars.len() == 1 {
            out.push(w.to_string());
        } else if PUNCT.contains(chars[chars.len() - 1]) {
            out.push(chars[..chars.len() - 1].iter().collect());
            out.push(chars[chars.len() - 1].to_string());
        } else if PUNCT.contains(chars[0]) {
            out.push(chars[0].to_string());
            out.push(chars[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

fn ngram_counts<T: Eq + Hash>(seq: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if n > 0 && seq.len() >= n {
        for window in seq.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

fn order_counts<T: Eq + Hash>(hyp: &HashMap<&[T], u64>, reference: &HashMap<&[T], u64>) -> OrderCounts {
    let ref_total: u64 = reference.values().sum();
    let mut hyp_total = 0;
    let mut matched = 0;
    for (gram, &count) in hyp {
        hyp_total += count;
        if let Some(&r) = reference.get(gram) {
            matched += count.min(r);
        }
    }
    OrderCounts {
        // an order without reference n-grams contributes no hypothesis count
        hyp: if reference.is_empty() { 0 } else { hyp_total },
        reference: ref_total,
        matched,
    }
}

fn pair_stats(hyp_chars: &[char], hyp_words: &[String], reference: &str, params_orders: (usize, usize)) -> ChrfStats {
    let (char_order, word_order) = params_orders;
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let ref_words = word_tokens(reference);
    let mut stats = Vec::with_capacity(char_order + word_order);
    for n in 1..=char_order {
        stats.push(order_counts(&ngram_counts(hyp_chars, n), &ngram_counts(&ref_chars, n)));
    }
    for n in 1..=word_order {
        stats.push(order_counts(&ngram_counts(hyp_words, n), &ngram_counts(&ref_words, n)));
    }
    ChrfStats(stats)
}

/// Counts for one segment against its best-scoring reference.
///
/// # Panics
/// If `references` is empty.
pub fn segment_stats<F: Scalar>(hypothesis: &str, references: &[&str], params: &ChrfParams<F>) -> ChrfStats {
    assert!(!references.is_empty(), "chrF++ needs at least one reference");
    let hyp_chars: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let hyp_words = word_tokens(hypothesis);
    let mut best: Option<(F, ChrfStats)> = None;
    for r in references {
        let stats = pair_stats(&hyp_chars, &hyp_words, r, (params.char_order, params.word_order));
        let score = stats.f_score(params.beta);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, stats));
        }
    }
    best.unwrap().1
}

/// Sentence-level chrF++ in `[0, 100]`.
pub fn chrf_pp<F: Scalar>(hypothesis: &str, references: &[&str], params: &ChrfParams<F>) -> F {
    segment_stats(hypothesis, references, params).f_score(params.beta)
}

/// Corpus-level chrF++ from counts summed over segments. `references[i]`
/// holds the references of `hypotheses[i]`.
pub fn corpus_chrf<F: Scalar, S: AsRef<str>>(hypotheses: &[S], references: &[Vec<S>], params: &ChrfParams<F>) -> F {
    assert_eq!(hypotheses.len(), references.len(), "one reference set per hypothesis");
    let mut total = ChrfStats(vec![OrderCounts::default(); params.orders()]);
    for (h, refs) in hypotheses.iter().zip(references) {
        let refs: Vec<&str> = refs.iter().map(AsRef::as_ref).collect();
        total.add(&segment_stats(h.as_ref(), &refs, params));
    }
    total.f_score(params.beta)
}
