//! Deterministic structured-text reports.
//!
//! Every report is a `[title]` line followed by `key = value` lines in
//! insertion order. Floats render via Rust's shortest round-trip formatting,
//! which is platform-independent, so identical inputs yield byte-identical
//! output — the property the golden-file tests pin down.

use std::fmt::Write as _;

/// Shortest round-trip decimal text for `x`, with stable spellings for the
/// non-finite values and no negative zero.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Space-separated [`fmt_f64`] rendering of a slice.
pub fn fmt_slice(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone)]
pub struct Report {
    buf: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report {
            buf: format!("[{title}]\n"),
        }
    }

    pub fn kv(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.buf, "{key} = {}", value.as_ref());
        self
    }

    pub fn kvf(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, fmt_f64(value))
    }

    pub fn kvu(&mut self, key: &str, value: u64) -> &mut Self {
        self.kv(key, value.to_string())
    }

    pub fn render(&self) -> &str {
        &self.buf
    }
}

/// Two-column `n value` plot data, one row per index.
pub fn two_column(values: &[f64]) -> String {
    let mut out = String::new();
    for (n, &v) in values.iter().enumerate() {
        let _ = writeln!(out, "{n} {}", fmt_f64(v));
    }
    out
}
