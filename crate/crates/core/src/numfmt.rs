//! Shared float formatting for CSV output.

/// Formats with 17 significant decimal digits, enough to round-trip any f64.
pub(crate) fn float17(v: f64) -> String {
    format!("{v:.16e}")
}
