//! File formats: run configuration, the CME-model interchange text format,
//! the shared binary array format, report serialization, and CSV emission.

pub mod binary;
pub mod config;
pub mod csv;
pub mod model_format;
pub mod report;

use crate::error::{Error, Result};

/// Split a text into (section, key, value) triples. Lines look like
/// `key = value` under `[section]` headers; `#` starts a comment.
pub(crate) fn parse_sections(text: &str) -> Result<Vec<(String, String, String)>> {
    let mut out = Vec::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {}: malformed section", lineno + 1)))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((
            section.clone(),
            key.trim().to_string(),
            value.trim().to_string(),
        ));
    }
    Ok(out)
}

pub fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(format!("bad number for {what}: `{s}`")))
}

pub(crate) fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(format!("bad integer for {what}: `{s}`")))
}

pub fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_f64(t, what)).collect()
}
