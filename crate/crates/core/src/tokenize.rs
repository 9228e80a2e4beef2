//! Token counting used for context truncation, translation length ratios
//! and subset budgets. Only internal consistency matters for those uses, so
//! the counter is a plug-in; the default is a Unicode-aware
//! word-and-punctuation splitter.

use std::sync::OnceLock;

use regex::Regex;

pub trait TokenCounter: Send + Sync {
    /// Stable identifier recorded in run manifests.
    fn name(&self) -> &str;

    /// Byte spans of the tokens of `text`, in order.
    fn spans(&self, text: &str) -> Vec<(usize, usize)>;

    fn count(&self, text: &str) -> usize {
        self.spans(text).len()
    }

    /// Prefix of `text` ending with its `max_tokens`-th token. Text with at
    /// most `max_tokens` tokens is returned whole.
    fn truncate<'a>(&self, text: &'a str, max_tokens: usize) -> &'a str {
        let spans = self.spans(text);
        if spans.len() <= max_tokens {
            return text;
        }
        match max_tokens {
            0 => "",
            n => &text[..spans[n - 1].1],
        }
    }
}

/// Maximal runs of letters, combining marks and digits form one token each;
/// every other non-whitespace character is a token on its own.
///
/// `"a b c"` is 3 tokens, `"don't"` is 3 (`don`, `'`, `t`), and a Devanagari
/// word keeps its vowel signs attached.
#[derive(Debug, Default, Clone, Copy)]
pub struct WordPunctCounter;

fn word_punct_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{M}\p{N}]+|[^\s\p{L}\p{M}\p{N}]").unwrap())
}

impl TokenCounter for WordPunctCounter {
    fn name(&self) -> &str {
        "word-punct"
    }

    fn spans(&self, text: &str) -> Vec<(usize, usize)> {
        word_punct_regex().find_iter(text).map(|m| (m.start(), m.end())).collect()
    }
}

/// One token per non-whitespace character. Useful for scripts written
/// without spaces, where word runs would swallow whole sentences.
#[derive(Debug, Default, Clone, Copy)]
pub struct CharCounter;

impl TokenCounter for CharCounter {
    fn name(&self) -> &str {
        "char"
    }

    fn spans(&self, text: &str) -> Vec<(usize, usize)> {
        text.char_indices().filter(|(_, c)| !c.is_whitespace()).map(|(i, c)| (i, i + c.len_utf8())).collect()
    }
}

/// Resolves a counter by its manifest name.
pub fn counter_by_name(name: &str) -> Option<Box<dyn TokenCounter>> {
    match name {
        "word-punct" => Some(Box::new(WordPunctCounter)),
        "char" => Some(Box::new(CharCounter)),
        _ => None,
    }
}
