use crate::error::{Error, Result};

/// Parses a `key = value` file. Blank lines and lines starting with `#` are
/// skipped; keys must be unique and made of `[A-Za-z0-9_-]`.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::parse(i + 1, format!("invalid key {key:?}")));
        }
        if value.is_empty() {
            return Err(Error::parse(i + 1, format!("empty value for {key}")));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(Error::parse(i + 1, format!("duplicate key {key}")));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}
