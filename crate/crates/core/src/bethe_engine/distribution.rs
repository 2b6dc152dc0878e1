//! Finite probability tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Probabilities keyed by configuration (or by a single site, as a
/// one-element configuration), with the total mass recorded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Distribution {
    pub entries: BTreeMap<Vec<i64>, f64>,
    pub captured_mass: f64,
}

impl Distribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: BTreeMap<Vec<i64>, f64>) -> Self {
        let captured_mass = entries.values().sum();
        Distribution {
            entries,
            captured_mass,
        }
    }

    pub fn insert(&mut self, key: Vec<i64>, prob: f64) {
        if let Some(old) = self.entries.insert(key, prob) {
            self.captured_mass -= old;
        }
        self.captured_mass += prob;
    }

    pub fn get(&self, key: &[i64]) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Marginal law of the coordinate `index` (0-based).
    pub fn marginal(&self, index: usize) -> Distribution {
        let mut out = BTreeMap::new();
        for (k, v) in &self.entries {
            *out.entry(vec![k[index]]).or_insert(0.0) += v;
        }
        Distribution::from_entries(out)
    }

    /// Smallest entry, useful to check for negative round-off.
    pub fn min_probability(&self) -> f64 {
        self.entries.values().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_accounting() {
        let mut d = Distribution::new();
        d.insert(vec![0, 1], 0.25);
        d.insert(vec![0, 2], 0.5);
        d.insert(vec![0, 2], 0.25);
        assert_eq!(d.captured_mass, 0.5);
        assert_eq!(d.get(&[0, 2]), 0.25);
        assert_eq!(d.get(&[7, 8]), 0.0);
        let m = d.marginal(1);
        assert_eq!(m.get(&[1]), 0.25);
        assert_eq!(m.captured_mass, 0.5);
    }
}
