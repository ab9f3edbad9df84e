//! Named residual reports.

use std::collections::BTreeMap;
use std::fmt;

/// Map from equation label to residual norm, with a running maximum.
///
/// Labels follow the equation tags used throughout the crate
/// (`"dp1"`, `"M2-3"`, `"Jcon"`, ...), so reports stay diffable and
/// plot-ready when serialized by the CLI.
#[derive(Clone, Debug, Default)]
pub struct ResidualReport {
    entries: BTreeMap<String, f64>,
}

impl ResidualReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `value` under `label`, keeping the maximum on repeats.
    pub fn record(&mut self, label: &str, value: f64) {
        debug_assert!(value >= 0.0 || value.is_nan(), "residual must be a norm");
        let e = self.entries.entry(label.to_string()).or_insert(0.0);
        if value > *e {
            *e = value;
        }
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.get(label).copied()
    }

    /// Largest residual across all labels (0 for an empty report).
    pub fn max(&self) -> f64 {
        self.entries.values().cloned().fold(0.0, f64::max)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Merges another report, keeping per-label maxima.
    pub fn merge(&mut self, other: &ResidualReport) {
        for (k, v) in other.iter() {
            self.record(k, v);
        }
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} {v:.17e}")?;
        }
        write!(f, "max {:.17e}", self.max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_keep_maximum() {
        let mut r = ResidualReport::new();
        r.record("a", 1e-3);
        r.record("a", 1e-5);
        r.record("b", 2e-3);
        assert_eq!(r.get("a"), Some(1e-3));
        assert_eq!(r.max(), 2e-3);
    }
}
