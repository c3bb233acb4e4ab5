//! Line-oriented keyed records, the text syntax shared by map files and
//! configuration files.
//!
//! ```text
//! # comment
//! tag positional key=value key=value
//! ```
//!
//! Blank lines and lines whose first non-blank character is `#` are skipped.
//! Tokens are separated by whitespace; a token containing `=` is a field, any
//! other token after the tag is a positional argument.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("line {line}: unknown field `{field}` in `{tag}` record")]
    UnknownField { line: usize, tag: String, field: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record<'a> {
    /// 1-based line number in the source text.
    pub line: usize,
    pub tag: &'a str,
    pub args: Vec<&'a str>,
    fields: BTreeMap<&'a str, &'a str>,
}

impl<'a> Record<'a> {
    pub fn parse(line: usize, text: &'a str) -> Result<Self, RecordError> {
        let mut tokens = text.split_whitespace();
        let tag = tokens.next().ok_or_else(|| RecordError::Malformed {
            line,
            detail: "empty record".into(),
        })?;
        let mut args = Vec::new();
        let mut fields = BTreeMap::new();
        for token in tokens {
            match token.split_once('=') {
                Some((key, value)) => {
                    if key.is_empty() {
                        return Err(RecordError::Malformed {
                            line,
                            detail: format!("field `{token}` has no key"),
                        });
                    }
                    if fields.insert(key, value).is_some() {
                        return Err(RecordError::Malformed {
                            line,
                            detail: format!("field `{key}` given twice"),
                        });
                    }
                }
                None => args.push(token),
            }
        }
        Ok(Self {
            line,
            tag,
            args,
            fields,
        })
    }

    pub fn malformed(&self, detail: impl Into<String>) -> RecordError {
        RecordError::Malformed {
            line: self.line,
            detail: detail.into(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&'a str> {
        self.fields.get(key).copied()
    }

    pub fn has(&self, key: &str) -> bool {
        self.fields.contains_key(key)
    }

    pub fn fields(&self) -> impl Iterator<Item = (&'a str, &'a str)> + '_ {
        self.fields.iter().map(|(k, v)| (*k, *v))
    }

    /// Rejects any field whose key is not in `known`.
    pub fn only(&self, known: &[&str]) -> Result<(), RecordError> {
        match self.fields.keys().find(|k| !known.contains(k)) {
            Some(field) => Err(RecordError::UnknownField {
                line: self.line,
                tag: self.tag.to_string(),
                field: field.to_string(),
            }),
            None => Ok(()),
        }
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, RecordError> {
        self.get(key)
            .map(|raw| {
                raw.parse()
                    .map_err(|_| self.malformed(format!("cannot parse `{key}={raw}`")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, RecordError> {
        self.optional(key)?
            .ok_or_else(|| self.malformed(format!("`{}` record is missing `{key}`", self.tag)))
    }

    /// `0`/`1`/`true`/`false`.
    pub fn flag(&self, key: &str) -> Result<Option<bool>, RecordError> {
        self.get(key)
            .map(|raw| match raw {
                "1" | "true" => Ok(true),
                "0" | "false" => Ok(false),
                _ => Err(self.malformed(format!("`{key}` must be 0 or 1, got `{raw}`"))),
            })
            .transpose()
    }

    /// Comma-separated list value.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, RecordError> {
        self.get(key)
            .map(|raw| {
                raw.split(',')
                    .map(|item| {
                        item.parse()
                            .map_err(|_| self.malformed(format!("cannot parse `{item}` in `{key}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn arg<T: FromStr>(&self, index: usize, name: &str) -> Result<T, RecordError> {
        let raw = self
            .args
            .get(index)
            .ok_or_else(|| self.malformed(format!("`{}` record is missing {name}", self.tag)))?;
        raw.parse()
            .map_err(|_| self.malformed(format!("cannot parse {name} `{raw}`")))
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim();
        (!trimmed.is_empty() && !trimmed.starts_with('#')).then_some((i + 1, trimmed))
    })
}

/// Parses every content line into a record.
pub fn parse_records(text: &str) -> Result<Vec<Record<'_>>, RecordError> {
    content_lines(text)
        .map(|(line, body)| Record::parse(line, body))
        .collect()
}

/// Formats a float so it parses back to the identical value and carries at
/// least nine significant digits.
pub fn format_decimal(value: f64) -> String {
    let mut text = format!("{value}");
    let significant = text
        .trim_start_matches('-')
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|c| *c == '0')
        .count();
    if significant < 9 {
        if !text.contains('.') {
            text.push('.');
        }
        text.extend(std::iter::repeat_n('0', 9 - significant));
    }
    text
}
