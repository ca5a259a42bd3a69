//! Line-oriented tokenizer shared by all whitespace-separated formats.

/// A whitespace-delimited token with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// One non-blank, non-comment line.
#[derive(Debug)]
pub(crate) struct Line<'a> {
    pub number: usize,
    pub raw: &'a str,
    pub tokens: Vec<Token<'a>>,
}

impl<'a> Line<'a> {
    /// Column just past the last token; used for "missing field" errors.
    pub fn end_column(&self) -> usize {
        self.raw.trim_end().chars().count() + 1
    }
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let base = line.as_ptr() as usize;
    line.split_ascii_whitespace()
        .map(|text| {
            let offset = text.as_ptr() as usize - base;
            Token {
                text,
                column: line[..offset].chars().count() + 1,
            }
        })
        .collect()
}

/// Iterates content lines: `\r\n` and `\n` endings, blank lines and lines
/// whose first non-blank character is `#` skipped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return None;
        }
        Some(Line {
            number: i + 1,
            raw,
            tokens: tokenize(raw),
        })
    })
}

/// All lines with their numbers, only `\r` stripped; for formats with
/// `#` directives.
pub(crate) fn raw_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}

pub(crate) fn tokens_of(raw: &str) -> Vec<Token<'_>> {
    tokenize(raw)
}
