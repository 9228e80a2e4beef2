//! Mapping free-form model output onto a choice label.
//!
//! The cascade, first hit wins:
//! 1. the trimmed output equals a label (case-insensitive);
//! 2. the output stripped of surrounding punctuation and markup equals a
//!    label (`(C)`, `C.`, `**C**`);
//! 3. a bracketed label anywhere: `(C)` or `[C]`, earliest first;
//! 4. an answer phrase: `answer is C`, `Answer: C`;
//! 5. the output starts with a single-character label followed by a
//!    separator (`C. Paris`, `C) Paris`);
//! 6. exactly one multi-character label occurs as a whole word
//!    (case-insensitive);
//! 7. exactly one option text occurs in the output (case-insensitive).
//!
//! Anything else is [`ChoiceParse::Unparseable`], which scores as wrong.

use regex::Regex;

use super::Choice;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChoiceParse {
    Label(String),
    Unparseable,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    haystack.match_indices(needle).any(|(i, m)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + m.len()..].chars().next();
        !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
    })
}

pub fn parse_choice(output: &str, choices: &[Choice]) -> ChoiceParse {
    let found = |label: &str| ChoiceParse::Label(label.to_string());
    let trimmed = output.trim();

    if let Some(c) = choices.iter().find(|c| c.label.to_lowercase() == trimmed.to_lowercase()) {
        return found(&c.label);
    }

    let stripped = trimmed.trim_matches(|c: char| !c.is_alphanumeric());
    if let Some(c) = choices.iter().find(|c| c.label.to_lowercase() == stripped.to_lowercase()) {
        return found(&c.label);
    }

    let bracketed = choices
        .iter()
        .filter_map(|c| {
            let re = Regex::new(&format!(r"[\(\[]\s*{}\s*[\)\]]", regex::escape(&c.label))).ok()?;
            re.find(trimmed).map(|m| (m.start(), c))
        })
        .min_by_key(|(pos, _)| *pos);
    if let Some((_, c)) = bracketed {
        return found(&c.label);
    }

    let phrased = choices
        .iter()
        .filter_map(|c| {
            let re = Regex::new(&format!(
                r"(?i:answer)\s*(?:(?i:is)\s*)?[:\-]?\s*[\(\[*]*{}(?:$|[^\p{{L}}\p{{N}}])",
                regex::escape(&c.label)
            ))
            .ok()?;
            re.find(trimmed).map(|m| (m.start(), c))
        })
        .min_by_key(|(pos, _)| *pos);
    if let Some((_, c)) = phrased {
        return found(&c.label);
    }

    for c in choices.iter().filter(|c| c.label.chars().count() == 1) {
        if let Some(rest) = trimmed.strip_prefix(c.label.as_str()) {
            if rest.starts_with(['.', ')', ':', ' ', ',', '-']) {
                return found(&c.label);
            }
        }
    }

    let lower = trimmed.to_lowercase();
    let word_hits: Vec<&Choice> = choices
        .iter()
        .filter(|c| c.label.chars().count() > 1 && contains_word(&lower, &c.label.to_lowercase()))
        .collect();
    if word_hits.len() == 1 {
        return found(&word_hits[0].label);
    }

    let text_hits: Vec<&Choice> =
        choices.iter().filter(|c| !c.text.trim().is_empty() && lower.contains(&c.text.trim().to_lowercase())).collect();
    if text_hits.len() == 1 {
        return found(&text_hits[0].label);
    }
    ChoiceParse::Unparseable
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> Vec<Choice> {
        ["Paris", "London", "Berlin", "Madrid"]
            .iter()
            .zip(["A", "B", "C", "D"])
            .map(|(t, l)| Choice { label: l.into(), text: (*t).into() })
            .collect()
    }

    fn label(s: &str) -> ChoiceParse {
        ChoiceParse::Label(s.into())
    }

    #[test]
    fn cascade_fixtures() {
        let c = abcd();
        let cases = [
            ("B", "B"),
            (" b \n", "B"),
            ("(C)", "C"),
            ("D.", "D"),
            ("**A**", "A"),
            ("The answer is (C).", "C"),
            ("I believe [D] fits best", "D"),
            ("Answer: B", "B"),
            ("the answer is D, Madrid", "D"),
            ("C. Berlin", "C"),
            ("B) London", "B"),
            ("It must be Madrid.", "D"),
        ];
        for (out, want) in cases {
            assert_eq!(parse_choice(out, &c), label(want), "{out:?}");
        }
    }

    #[test]
    fn ambiguous_or_unknown() {
        let c = abcd();
        assert_eq!(parse_choice("Either Paris or London", &c), ChoiceParse::Unparseable);
        assert_eq!(parse_choice("No idea", &c), ChoiceParse::Unparseable);
        assert_eq!(parse_choice("", &c), ChoiceParse::Unparseable);
    }

    #[test]
    fn word_labels() {
        let c: Vec<Choice> =
            ["science/technology", "travel", "politics", "sports", "health", "entertainment", "geography"]
                .iter()
                .map(|s| Choice { label: (*s).into(), text: (*s).into() })
                .collect();
        assert_eq!(parse_choice("Travel", &c), label("travel"));
        assert_eq!(parse_choice("Topic: science/technology", &c), label("science/technology"));
        assert_eq!(parse_choice("sports or politics", &c), ChoiceParse::Unparseable);
    }
}
