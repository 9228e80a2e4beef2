//! The default token counter against a character-class scan built on an
//! independent Unicode general-category table.

use langforge::{CharCounter, TokenCounter, WordPunctCounter};
use proptest::prelude::*;
use unicode_general_category::get_general_category;

fn is_word_char(c: char) -> bool {
    matches!(get_general_category(c).abbreviation().as_bytes()[0], b'L' | b'M' | b'N')
}

/// Word-character runs count once, every other non-space character once.
fn oracle_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_whitespace() {
            in_word = false;
        } else if is_word_char(c) {
            if !in_word {
                count += 1;
            }
            in_word = true;
        } else {
            count += 1;
            in_word = false;
        }
    }
    count
}

fn mixed_script() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9а-яА-Я\u{0900}-\u{097F}\u{4E00}-\u{4E40}\u{0600}-\u{06FF} \t\n.,;:!?'\"()\u{2014}\u{00AB}\u{00BB}-]{0,60}"
}

#[test]
fn fixtures() {
    let cases = [
        ("a b c", 3),
        ("don't", 3),
        ("Sugeng enjing, piye kabare?", 6),
        ("नमस्ते दुनिया", 2),
        ("Москва — столица.", 4),
        ("3.14", 3),
        ("", 0),
    ];
    for (text, n) in cases {
        assert_eq!(WordPunctCounter.count(text), n, "{text:?}");
        assert_eq!(oracle_count(text), n, "oracle disagrees on {text:?}");
    }
}

proptest! {
    #[test]
    fn matches_category_oracle(text in mixed_script()) {
        prop_assert_eq!(WordPunctCounter.count(&text), oracle_count(&text));
    }

    #[test]
    fn truncation_keeps_exactly_max_tokens(text in mixed_script(), max in 0usize..20) {
        for counter in [&WordPunctCounter as &dyn TokenCounter, &CharCounter] {
            let cut = counter.truncate(&text, max);
            prop_assert!(text.starts_with(cut));
            prop_assert_eq!(counter.count(cut), counter.count(&text).min(max));
        }
    }
}
