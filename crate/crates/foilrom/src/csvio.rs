//! Small helpers shared by the CSV readers/writers.

use crate::error::{Error, Result};

/// Formats a float with full round-trip precision. Negative zero is
/// canonicalized to "0" so that re-serialized files stay byte-identical.
pub(crate) fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse_f64(s: &str, context: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{context}: cannot parse '{s}' as a number")))
}

/// Splits a CSV line on commas; the formats used here never quote fields.
pub(crate) fn split_line(line: &str) -> Vec<&str> {
    line.trim_end_matches(['\r', '\n']).split(',').collect()
}
