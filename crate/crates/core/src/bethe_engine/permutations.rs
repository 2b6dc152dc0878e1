//! Permutations of `{1..N}` together with their inversion sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;

/// Hard cap on the number of particles handled by the engine.
pub const MAX_PARTICLES: usize = 10;

/// A permutation in one-line notation (1-based entries) and its inversions
/// `(beta, alpha)`: `beta > alpha` and `beta` precedes `alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermutationTerm {
    pub sigma: Vec<usize>,
    pub inversions: Vec<(usize, usize)>,
}

impl PermutationTerm {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let n = sigma.len();
        let mut seen = vec![false; n + 1];
        for &s in &sigma {
            if s == 0 || s > n || seen[s] {
                return Err(Error::Domain(format!(
                    "{sigma:?} is not a permutation of 1..{n}"
                )));
            }
            seen[s] = true;
        }
        let mut inversions = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if sigma[i] > sigma[j] {
                    inversions.push((sigma[i], sigma[j]));
                }
            }
        }
        Ok(PermutationTerm { sigma, inversions })
    }

    pub fn identity(n: usize) -> Self {
        PermutationTerm {
            sigma: (1..=n).collect(),
            inversions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.inversions.is_empty()
    }

    /// 1-based position of `value`.
    pub fn position(&self, value: usize) -> usize {
        self.sigma
            .iter()
            .position(|&s| s == value)
            .map(|p| p + 1)
            .unwrap_or(0)
    }

    /// `sigma^{-1}` as 0-based positions: `inverse()[v - 1]` is where `v` sits.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.sigma.len()];
        for (i, &s) in self.sigma.iter().enumerate() {
            inv[s - 1] = i;
        }
        inv
    }

    pub fn sign(&self) -> i32 {
        if self.inversions.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Swap of the entries at 0-based positions `i` and `i + 1`.
    pub fn swapped(&self, i: usize) -> PermutationTerm {
        let mut s = self.sigma.clone();
        s.swap(i, i + 1);
        PermutationTerm::new(s).expect("swap keeps a permutation")
    }
}

/// All `N!` permutations in lexicographic order.
pub fn permutations_with_inversions(n: usize) -> Result<Vec<PermutationTerm>> {
    if n == 0 || n > MAX_PARTICLES {
        return Err(Error::Domain(format!(
            "N = {n} outside 1..={MAX_PARTICLES}"
        )));
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=n).collect();
    loop {
        out.push(PermutationTerm::new(cur.clone())?);
        // next lexicographic permutation
        let Some(i) = (0..n - 1).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    Ok(out)
}

/// `A_sigma = prod_{(beta, alpha)} S_{beta alpha}(xi_alpha, xi_beta)`.
pub fn a_sigma(model: &Model, term: &PermutationTerm, xi: &[Complex64]) -> Result<Complex64> {
    if xi.len() != term.len() {
        return Err(Error::Domain(format!(
            "{} variables for a permutation of {}",
            xi.len(),
            term.len()
        )));
    }
    term.inversions
        .iter()
        .try_fold(Complex64::new(1.0, 0.0), |acc, &(b, a)| {
            model.s_matrix(xi[a - 1], xi[b - 1]).map(|s| acc * s)
        })
}

/// Product of the monomial prefactors `xi_beta / xi_alpha` over the inversions.
pub fn inversion_ratio_product(term: &PermutationTerm, xi: &[Complex64]) -> Complex64 {
    term.inversions
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &(b, a)| {
            acc * xi[b - 1] / xi[a - 1]
        })
}

/// `prod_i xi_{sigma(i)}^{sigma(i) - i}`, the closed form of the product above.
pub fn displacement_monomial(term: &PermutationTerm, xi: &[Complex64]) -> Complex64 {
    term.sigma
        .iter()
        .enumerate()
        .fold(Complex64::new(1.0, 0.0), |acc, (i, &s)| {
            acc * xi[s - 1].powi(s as i32 - (i as i32 + 1))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_cases() {
        let p2 = permutations_with_inversions(2).unwrap();
        assert_eq!(p2.len(), 2);
        assert!(p2[0].is_identity());
        assert_eq!(p2[1].sigma, vec![2, 1]);
        assert_eq!(p2[1].inversions, vec![(2, 1)]);
        let p3 = permutations_with_inversions(3).unwrap();
        assert_eq!(p3.len(), 6);
        let rev = p3.iter().find(|t| t.sigma == vec![3, 2, 1]).unwrap();
        assert_eq!(rev.inversions, vec![(3, 2), (3, 1), (2, 1)]);
        assert!(permutations_with_inversions(0).is_err());
        assert!(permutations_with_inversions(11).is_err());
    }

    #[test]
    fn counts_and_inversion_numbers() {
        for n in 1..=6 {
            let all = permutations_with_inversions(n).unwrap();
            assert_eq!(all.len(), (1..=n).product::<usize>());
            // Mahonian: total inversions = n! * n(n-1)/4
            let total: usize = all.iter().map(|t| t.inversions.len()).sum();
            assert_eq!(4 * total, all.len() * n * (n - 1));
            let mut sorted = all.clone();
            sorted.sort_by(|a, b| a.sigma.cmp(&b.sigma));
            assert_eq!(sorted, all);
        }
    }

    #[test]
    fn a_sigma_basics() {
        let m = Model::asep(0.6).unwrap();
        let xi = [Complex64::new(0.1, 0.05), Complex64::new(-0.12, 0.03)];
        assert_eq!(
            a_sigma(&m, &PermutationTerm::identity(2), &xi).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let swap = PermutationTerm::new(vec![2, 1]).unwrap();
        assert_eq!(
            a_sigma(&m, &swap, &xi).unwrap(),
            m.s_matrix(xi[0], xi[1]).unwrap()
        );
    }

    #[test]
    fn inversion_ratio_identity_on_s4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for term in permutations_with_inversions(4).unwrap() {
            for _ in 0..10 {
                let xi: Vec<Complex64> = (0..4)
                    .map(|_| {
                        Complex64::from_polar(rng.gen_range(0.2..3.0), rng.gen_range(0.0..6.3))
                    })
                    .collect();
                let lhs = inversion_ratio_product(&term, &xi);
                let rhs = displacement_monomial(&term, &xi);
                assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
            }
        }
    }

    #[test]
    fn inverse_and_positions() {
        let t = PermutationTerm::new(vec![3, 1, 2]).unwrap();
        assert_eq!(t.inverse(), vec![1, 2, 0]);
        assert_eq!(t.position(3), 1);
        assert_eq!(t.sign(), 1);
        assert_eq!(t.swapped(0).sigma, vec![1, 3, 2]);
        assert!(PermutationTerm::new(vec![1, 1]).is_err());
    }
}
