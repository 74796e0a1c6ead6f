//! Deterministic CSV emission.

use std::fmt::Write;

/// 17 significant digits, enough for an exact round trip of any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0000000000000000e0".into() } else { "0.0000000000000000e0".into() };
    }
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "row width does not match header");
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(&fmt_f64(*v));
        }
        self.text.push('\n');
    }

    /// Appends a free-form `# key=value,...` line.
    pub fn comment(&mut self, pairs: &[(&str, f64)]) {
        self.text.push('#');
        for (i, (k, v)) in pairs.iter().enumerate() {
            let sep = if i == 0 { " " } else { "," };
            let _ = write!(self.text, "{sep}{k}={}", fmt_f64(*v));
        }
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
