//! Seeded random inputs for the checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::models::{Configuration, Model, ModelKind, ModelParams};

pub const DEFAULT_SEED: u64 = 20_240_917;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random valid parameters: `p` in `[0.15, 0.85]`, `mu` in `[0.2, 0.8]`.
pub fn random_model<R: Rng>(kind: ModelKind, rng: &mut R) -> Model {
    let p = rng.gen_range(0.15..0.85);
    let params = if kind.uses_lambda_mu() {
        ModelParams::with_mu(p, rng.gen_range(0.2..0.8))
    } else {
        ModelParams::hopping(p)
    };
    Model::new(kind, params).expect("sampled parameters are valid")
}

/// Random physical configuration starting in `[-2, 2]` with gaps of
/// `1..=3` (strict models) or `0..=2` (AZRP).
pub fn random_configuration<R: Rng>(kind: ModelKind, n: usize, rng: &mut R) -> Configuration {
    let mut v = vec![rng.gen_range(-2..=2)];
    for _ in 1..n {
        let gap = if kind == ModelKind::Azrp {
            rng.gen_range(0..=2)
        } else {
            rng.gen_range(1..=3)
        };
        v.push(v.last().unwrap() + gap);
    }
    Configuration::new(v)
}

/// Random point of `Z^N` with coordinates in `[lo, hi]`, not necessarily
/// ordered.
pub fn random_lattice_point<R: Rng>(n: usize, lo: i64, hi: i64, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Random complex number with modulus in `[lo, hi]`.
pub fn random_complex<R: Rng>(lo: f64, hi: f64, rng: &mut R) -> Complex64 {
    Complex64::from_polar(
        rng.gen_range(lo..hi),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

/// All physical configurations with `|x_i - y_i| <= radius`.
pub fn neighbourhood(kind: ModelKind, y: &Configuration, radius: i64) -> Vec<Configuration> {
    fn rec(
        kind: ModelKind,
        y: &[i64],
        radius: i64,
        cur: &mut Vec<i64>,
        out: &mut Vec<Configuration>,
    ) {
        let i = cur.len();
        if i == y.len() {
            if kind.is_physical(cur) {
                out.push(Configuration::new(cur.clone()));
            }
            return;
        }
        for v in y[i] - radius..=y[i] + radius {
            cur.push(v);
            rec(kind, y, radius, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(kind, y.positions(), radius, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_valid_and_reproducible() {
        let mut a = rng(5);
        let mut b = rng(5);
        for kind in ModelKind::ALL {
            let (ma, mb) = (random_model(kind, &mut a), random_model(kind, &mut b));
            assert_eq!(ma, mb);
            let y = random_configuration(kind, 3, &mut a);
            assert!(y.is_physical(kind));
            assert_eq!(y, random_configuration(kind, 3, &mut b));
        }
    }

    #[test]
    fn neighbourhood_counts() {
        let y = Configuration::new(vec![0]);
        assert_eq!(neighbourhood(ModelKind::Asep, &y, 4).len(), 9);
        let y = Configuration::new(vec![0, 1]);
        // strict pairs in [-4,4] x [-3,5]
        let n = neighbourhood(ModelKind::Asep, &y, 4).len();
        assert!(n > 40 && n < 81);
    }
}
