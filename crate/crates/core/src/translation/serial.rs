//! Python-literal rendering and parsing of conversations as lists of dicts,
//! e.g. `[{'from': 'human', 'value': 'Hi'}, {'from': 'gpt', 'value': "It's me"}]`.
//!
//! Strings are rendered the way Python's `repr` renders them. The parser
//! accepts the literal subset a model plausibly emits for this shape: single,
//! double or triple quoted strings with Python escapes, adjacent-literal
//! concatenation and trailing commas. Anything else is a format error.

use std::fmt::Write;

use thiserror::Error;

/// One dict, as ordered `(key, value)` pairs.
pub type Record = Vec<(String, String)>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message} at byte {offset}")]
pub struct SerialError {
    pub message: String,
    pub offset: usize,
}

pub fn python_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

pub fn render_records(records: &[Record]) -> String {
    let dicts: Vec<String> = records
        .iter()
        .map(|rec| {
            let fields: Vec<String> =
                rec.iter().map(|(k, v)| format!("{}: {}", python_repr(k), python_repr(v))).collect();
            format!("{{{}}}", fields.join(", "))
        })
        .collect();
    format!("[{}]", dicts.join(", "))
}

/// Parses the first list of dicts found in `text`. Prose before the list and
/// anything after its closing bracket are ignored.
pub fn parse_records(text: &str) -> Result<Vec<Record>, SerialError> {
    let mut first_err = None;
    for (start, _) in text.match_indices('[') {
        let mut p = Parser { src: text, pos: start };
        p.pos += 1;
        p.skip_ws();
        if !matches!(p.peek(), Some('{') | Some(']')) {
            continue;
        }
        p.pos = start;
        match p.list() {
            Ok(v) => return Ok(v),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(SerialError { message: "no list of dicts found".into(), offset: 0 }))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, SerialError> {
        Err(SerialError { message: message.into(), offset: self.pos })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SerialError> {
        self.skip_ws();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => {
                self.pos -= c.len_utf8();
                self.err(format!("expected '{want}', found '{c}'"))
            }
            None => self.err(format!("expected '{want}', found end of input")),
        }
    }

    /// Parses `open item (, item)* ,? close`.
    fn sequence<T>(
        &mut self,
        open: char,
        close: char,
        mut item: impl FnMut(&mut Self) -> Result<T, SerialError>,
    ) -> Result<Vec<T>, SerialError> {
        self.expect(open)?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(close) {
                self.bump();
                return Ok(items);
            }
            items.push(item(self)?);
            self.skip_ws();
            match self.bump() {
                Some(',') => {}
                Some(c) if c == close => return Ok(items),
                Some(c) => {
                    self.pos -= c.len_utf8();
                    return self.err(format!("expected ',' or '{close}', found '{c}'"));
                }
                None => return self.err("unterminated sequence"),
            }
        }
    }

    fn list(&mut self) -> Result<Vec<Record>, SerialError> {
        self.sequence('[', ']', |p| p.dict())
    }

    fn dict(&mut self) -> Result<Record, SerialError> {
        self.sequence('{', '}', |p| {
            let key = p.string()?;
            p.expect(':')?;
            let value = p.string()?;
            Ok((key, value))
        })
    }

    /// One string literal, or several adjacent ones concatenated.
    fn string(&mut self) -> Result<String, SerialError> {
        self.skip_ws();
        let mut out = self.literal()?;
        loop {
            let save = self.pos;
            self.skip_ws();
            if matches!(self.peek(), Some('\'' | '"')) {
                out.push_str(&self.literal()?);
            } else {
                self.pos = save;
                return Ok(out);
            }
        }
    }

    fn literal(&mut self) -> Result<String, SerialError> {
        let quote = match self.peek() {
            Some(q @ ('\'' | '"')) => q,
            Some(c) => return self.err(format!("expected a string, found '{c}'")),
            None => return self.err("expected a string, found end of input"),
        };
        let triple: String = std::iter::repeat_n(quote, 3).collect();
        let is_triple = self.rest().starts_with(&triple);
        self.pos += if is_triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            if is_triple && self.rest().starts_with(&triple) {
                self.pos += 3;
                return Ok(out);
            }
            let Some(c) = self.bump() else {
                return self.err("unterminated string");
            };
            match c {
                c if c == quote && !is_triple => return Ok(out),
                '\n' if !is_triple => {
                    self.pos -= 1;
                    return self.err("newline in single-quoted string");
                }
                '\\' => self.escape(&mut out)?,
                c => out.push(c),
            }
        }
    }

    fn escape(&mut self, out: &mut String) -> Result<(), SerialError> {
        let Some(c) = self.bump() else {
            return self.err("dangling backslash");
        };
        match c {
            '\n' => {}
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'v' => out.push('\x0b'),
            '0'..='7' => {
                let mut code = c.to_digit(8).unwrap();
                for _ in 0..2 {
                    match self.peek().and_then(|d| d.to_digit(8)) {
                        Some(d) => {
                            code = code * 8 + d;
                            self.bump();
                        }
                        None => break,
                    }
                }
                out.push(char::from_u32(code).unwrap());
            }
            'x' => out.push(self.hex_char(2)?),
            'u' => out.push(self.hex_char(4)?),
            'U' => out.push(self.hex_char(8)?),
            other => {
                out.push('\\');
                out.push(other);
            }
        }
        Ok(())
    }

    fn hex_char(&mut self, digits: usize) -> Result<char, SerialError> {
        let hex = self.rest().get(..digits).filter(|h| h.chars().all(|c| c.is_ascii_hexdigit()));
        let Some(hex) = hex else {
            return self.err("truncated hex escape");
        };
        let code = u32::from_str_radix(hex, 16).unwrap();
        self.pos += digits;
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None => self.err(format!("invalid code point {code:#x}")),
        }
    }
}
