//! Code molds: source text with `#P<name>` tokens marking tunable sites.
//!
//! A token is `#` followed by `P` and a maximal run of ASCII alphanumerics,
//! so `#P10` is always the token `P10` and never `P1` followed by `0`.
//! Instantiation is a single left-to-right pass; substituted values are
//! never rescanned.

use std::collections::HashMap;

use log::warn;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("mold token `#{0}` has no value in the configuration")]
    MissingToken(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMold {
    text: String,
    tokens: Vec<String>,
}

impl CodeMold {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = extract_tokens(&text);
        Self { text, tokens }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Distinct token names in first-occurrence order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Byte ranges `(start, end)` of every token occurrence; `start` points at
/// the `#` and the name is `text[start + 1..end]`.
fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'#' && bytes[i + 1] == b'P' {
            let mut end = i + 2;
            while end < bytes.len() && bytes[end].is_ascii_alphanumeric() {
                end += 1;
            }
            if end > i + 2 {
                spans.push((i, end));
                i = end;
                continue;
            }
        }
        i += 1;
    }
    spans
}

pub fn extract_tokens(text: &str) -> Vec<String> {
    let mut seen = Vec::<String>::new();
    for (start, end) in token_spans(text) {
        let name = &text[start + 1..end];
        if !seen.iter().any(|s| s == name) {
            seen.push(name.to_string());
        }
    }
    seen
}

/// Replaces every token with its bound value. Bindings with no token in the
/// mold are allowed and logged.
pub fn instantiate(mold: &CodeMold, bindings: &HashMap<&str, &str>) -> Result<String, TemplateError> {
    if let Some(missing) = mold.tokens.iter().find(|t| !bindings.contains_key(t.as_str())) {
        return Err(TemplateError::MissingToken(missing.clone()));
    }
    for name in bindings.keys() {
        if !mold.tokens.iter().any(|t| t == name) {
            warn!("parameter `{name}` has no `#{name}` token in the mold");
        }
    }

    let text = &mold.text;
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end) in token_spans(text) {
        out.push_str(&text[last..start]);
        out.push_str(bindings[&text[start + 1..end]]);
        last = end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}
