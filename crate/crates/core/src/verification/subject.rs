//! What a check runs on: a fixed model or random parameters of one kind.

use super::sampling::random_model;
use crate::models::{Model, ModelKind};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Subject {
    Fixed(Model),
    Random(ModelKind),
}

impl Subject {
    pub fn kind(&self) -> ModelKind {
        match self {
            Subject::Fixed(m) => m.kind(),
            Subject::Random(k) => *k,
        }
    }

    pub fn fixed(&self) -> Option<&Model> {
        match self {
            Subject::Fixed(m) => Some(m),
            Subject::Random(_) => None,
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Model {
        match self {
            Subject::Fixed(m) => *m,
            Subject::Random(k) => random_model(*k, rng),
        }
    }
}

impl From<Model> for Subject {
    fn from(m: Model) -> Self {
        Subject::Fixed(m)
    }
}

impl From<ModelKind> for Subject {
    fn from(k: ModelKind) -> Self {
        Subject::Random(k)
    }
}

/// Single asymmetric walk: `P(x(t) - x(0) = m)` for jump rates `p` right and
/// `q` left, `sum_k e^{-(p+q)t} (pt)^(k+m) (qt)^k / ((k+m)! k!)`.
pub fn walk_probability(p: f64, q: f64, t: f64, m: i64) -> f64 {
    let (a, b, shift) = if m >= 0 {
        (p * t, q * t, m)
    } else {
        (q * t, p * t, -m)
    };
    let mut term = (-(p + q) * t).exp();
    for j in 1..=shift {
        term *= a / j as f64;
    }
    let mut sum = 0.0;
    for k in 0..400usize {
        if k > 0 {
            term *= a * b / (k as f64 * (k as i64 + shift) as f64);
        }
        sum += term;
        if k as f64 > a + b && term < 1e-30 * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_sums_to_one() {
        let total: f64 = (-60..=60).map(|m| walk_probability(0.3, 0.7, 2.0, m)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((walk_probability(0.3, 0.7, 0.0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(walk_probability(0.3, 0.7, 0.0, 2), 0.0);
        // symmetric walk: one step either way with equal probability
        assert!(
            (walk_probability(0.5, 0.5, 1.0, 1) - walk_probability(0.5, 0.5, 1.0, -1)).abs()
                < 1e-16
        );
    }
}
