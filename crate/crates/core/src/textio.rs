//! Line-oriented text records shared by the dataset, checkpoint and snapshot
//! file formats. Reals are written with 17 significant digits so every
//! `f64` survives a round trip bit-for-bit.

use std::fmt::Write as _;

use crate::{Error, Result};

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn fmt_row(values: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (k, v) in values.into_iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out
}

/// Cursor over the non-empty, non-comment lines of a record.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().peekable(),
        }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        loop {
            let line = self.inner.next()?.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Some(line);
            }
        }
    }

    /// Reads `key value` and returns the value.
    pub(crate) fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self
            .next_line()
            .ok_or_else(|| Error::Parse(format!("missing field `{key}`")))?;
        let (k, v) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if k != key {
            return Err(Error::Parse(format!("expected `{key}`, found `{k}`")));
        }
        Ok(v.trim())
    }

    pub(crate) fn parse_field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.field(key)?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("bad value `{raw}` for `{key}`")))
    }

    /// Expects a bare section marker line.
    pub(crate) fn marker(&mut self, key: &str) -> Result<()> {
        let v = self.field(key)?;
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse(format!("unexpected data after `{key}`")))
        }
    }

    pub(crate) fn raw_line(&mut self, what: &str) -> Result<&'a str> {
        self.next_line()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))
    }

    pub(crate) fn reals(&mut self, what: &str, expected: usize) -> Result<Vec<f64>> {
        let line = self.raw_line(what)?;
        let values = parse_reals(line)?;
        if values.len() != expected {
            return Err(Error::Parse(format!(
                "{what}: expected {expected} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    }
}

pub(crate) fn parse_reals(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad real `{tok}`")))
        })
        .collect()
}

pub(crate) fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
