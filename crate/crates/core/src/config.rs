//! Line-oriented `key = value` configuration text.
//!
//! ```text
//! # comment
//! kappa = 2pi*22e3
//! n_atoms = 1e6
//!
//! [events]
//! 0.0 set_eta_minus 0
//! ```
//!
//! Numbers may carry a `2pi*` prefix (optionally signed, `-2pi*1e3`) so that
//! angular rates can be written as ordinary frequencies.

use std::f64::consts::TAU;
use std::path::Path;

use crate::error::{ConfigError, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// A raw line from the `[events]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLine {
    pub text: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub entries: Vec<Entry>,
    pub events: Vec<EventLine>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut in_events = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(section) = content.strip_prefix('[') {
                let name = section.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?;
                match name.trim() {
                    "events" => in_events = true,
                    other => {
                        return Err(ConfigError::Syntax {
                            line,
                            message: format!("unknown section `[{other}]`"),
                        })
                    }
                }
                continue;
            }
            if in_events {
                doc.events.push(EventLine {
                    text: content.to_string(),
                    line,
                });
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty key".into(),
                });
            }
            if doc.entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::DuplicateKey {
                    key: key.to_string(),
                    line,
                });
            }
            doc.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text)?)
    }

    /// Fails on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(ConfigError::UnknownKey {
                key: e.key.clone(),
                line: e.line,
            }),
            None => Ok(()),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|e| e.number()).transpose()
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }
}

impl Entry {
    pub fn number(&self) -> Result<f64, ConfigError> {
        parse_number(&self.value).map_err(|message| self.bad(message))
    }

    pub fn integer(&self) -> Result<u64, ConfigError> {
        let x = self.number()?;
        if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
            return Err(self.bad(format!("expected a non-negative integer, got {x}")));
        }
        Ok(x as u64)
    }

    pub fn bad(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            key: self.key.clone(),
            line: self.line,
            message: message.into(),
        }
    }
}

/// Parses a float with an optional `2pi*` prefix.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim_start()),
        None => (1.0, text.strip_prefix('+').unwrap_or(text).trim_start()),
    };
    let (scale, body) = match body.strip_prefix("2pi") {
        Some(rest) => {
            let rest = rest.trim_start().strip_prefix('*').ok_or_else(|| {
                format!("expected `*` after `2pi` in `{text}`")
            })?;
            (TAU, rest.trim())
        }
        None => (1.0, body),
    };
    if body.starts_with(['-', '+']) && scale != 1.0 {
        return Err(format!("sign must precede `2pi*` in `{text}`"));
    }
    let x: f64 = body
        .parse()
        .map_err(|_| format!("`{text}` is not a number"))?;
    let value = sign * scale * x;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(value)
}
