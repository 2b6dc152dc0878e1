//! Vanishing and pairwise cancellation of the single-permutation
//! integrals `I(sigma)` at `t = 0`, and the inversion monomial identity.

use std::collections::BTreeSet;

use super::report::{CheckReport, Tracker};
use super::sampling::{random_complex, random_configuration, rng};
use super::subject::Subject;
use crate::bethe_engine::permutations::{displacement_monomial, inversion_ratio_product};
use crate::bethe_engine::{
    i_sigma_at_t0, permutations_with_inversions, ContourCache, ContourSpec, PermutationTerm,
};
use crate::error::{Error, Result};
use crate::models::{Configuration, Model, ModelKind};

/// PushASEP singleton: some `b` in `1..N` sits at 1-based position `b + 1`
/// and every later entry exceeds `b`.
pub fn push_singleton(sigma: &[usize]) -> bool {
    (1..sigma.len()).any(|b| sigma[b] == b && sigma[b + 1..].iter().all(|&v| v > b))
}

/// AZRP-type singleton: some `beta >= 2` sits at 1-based position
/// `beta - 1` and every earlier entry is below `beta`.
pub fn zrp_singleton(sigma: &[usize]) -> bool {
    (2..=sigma.len())
        .any(|beta| sigma[beta - 2] == beta && sigma[..beta - 2].iter().all(|&v| v < beta))
}

/// Adjacent positions `(i, i + 1)` whose swap pairs `sigma` with a
/// cancelling partner.
pub fn pair_positions(kind: ModelKind, sigma: &[usize]) -> Vec<usize> {
    (0..sigma.len().saturating_sub(1))
        .filter(|&i| {
            let (lo, hi) = (sigma[i].min(sigma[i + 1]), sigma[i].max(sigma[i + 1]));
            match kind {
                ModelKind::Push => sigma[i + 2..].iter().any(|&v| v < lo),
                _ => sigma[..i].iter().any(|&v| v > hi),
            }
        })
        .collect()
}

fn is_singleton(kind: ModelKind, sigma: &[usize]) -> bool {
    match kind {
        ModelKind::Push => push_singleton(sigma),
        _ => zrp_singleton(sigma),
    }
}

/// Unordered cancelling pairs among the permutations of `1..=n`.
pub fn lemma_pairs(
    kind: ModelKind,
    perms: &[PermutationTerm],
) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let mut out = BTreeSet::new();
    for p in perms {
        for i in pair_positions(kind, &p.sigma) {
            let q = p.swapped(i).sigma;
            let pair = if p.sigma < q {
                (p.sigma.clone(), q)
            } else {
                (q, p.sigma.clone())
            };
            out.insert(pair);
        }
    }
    out
}

/// Exact cover of the non-identity permutations by PushASEP singletons and
/// pairs, if one exists.
pub fn push_partition(
    perms: &[PermutationTerm],
) -> Option<(Vec<Vec<usize>>, Vec<(Vec<usize>, Vec<usize>)>)> {
    let targets: Vec<Vec<usize>> = perms
        .iter()
        .filter(|p| !p.is_identity())
        .map(|p| p.sigma.clone())
        .collect();
    let pairs: Vec<_> = lemma_pairs(ModelKind::Push, perms).into_iter().collect();
    fn search(
        targets: &[Vec<usize>],
        pairs: &[(Vec<usize>, Vec<usize>)],
        used: &mut BTreeSet<Vec<usize>>,
        singles: &mut Vec<Vec<usize>>,
        chosen: &mut Vec<(Vec<usize>, Vec<usize>)>,
    ) -> bool {
        let Some(next) = targets.iter().find(|s| !used.contains(*s)) else {
            return true;
        };
        if push_singleton(next) {
            used.insert(next.clone());
            singles.push(next.clone());
            if search(targets, pairs, used, singles, chosen) {
                return true;
            }
            singles.pop();
            used.remove(next);
        }
        for (a, b) in pairs.iter().filter(|(a, b)| a == next || b == next) {
            let other = if a == next { b } else { a };
            if used.contains(other) || other.iter().enumerate().all(|(i, &v)| v == i + 1) {
                continue;
            }
            used.insert(a.clone());
            used.insert(b.clone());
            chosen.push((a.clone(), b.clone()));
            if search(targets, pairs, used, singles, chosen) {
                return true;
            }
            chosen.pop();
            used.remove(a);
            used.remove(b);
        }
        false
    }
    let (mut used, mut singles, mut chosen) = (BTreeSet::new(), Vec::new(), Vec::new());
    search(&targets, &pairs, &mut used, &mut singles, &mut chosen).then_some((singles, chosen))
}

/// Contour for one `(Y, X)`. Where both circles are available the one
/// suited to the displacement is used; a small circle with `X` far left of
/// `Y` loses the values in round-off.
fn lemma_contour(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    abs_tol: f64,
) -> Result<ContourSpec> {
    let cache = ContourCache::new(model, y.len())?;
    Ok(cache
        .for_query(y.positions(), x.positions())?
        .clone()
        .with_abs_tol(abs_tol))
}

/// Runs every singleton and pair instance, plus the full off-diagonal sum,
/// at `draws` random physical `(Y, X)`. For PushASEP the exact cover is
/// also required to exist.
pub fn check_lemmas(subject: Subject, n: usize, draws: usize, tol: f64, seed: u64) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("lemmas", seed).subject(&subject).particles(n);
    let kind = subject.kind();
    let perms = match permutations_with_inversions(n) {
        Ok(p) => p,
        Err(e) => {
            tr.error("setup", e);
            return tr.finish(tol);
        }
    };
    if kind == ModelKind::Push && n >= 2 && push_partition(&perms).is_none() {
        tr.error(
            "partition",
            Error::Domain(format!("no exact cover of S_{n} by singletons and pairs")),
        );
    }
    let pairs = lemma_pairs(kind, &perms);
    for _ in 0..draws {
        let model = subject.draw(&mut rng);
        let y = random_configuration(kind, n, &mut rng);
        let x = random_configuration(kind, n, &mut rng);
        let result = (|| -> Result<()> {
            let spec = lemma_contour(&model, &y, &x, tol * 1e-3)?;
            let mut values = std::collections::BTreeMap::new();
            for p in &perms {
                values.insert(p.sigma.clone(), i_sigma_at_t0(&model, p, &y, &x, &spec)?.re);
            }
            for p in perms.iter().filter(|p| is_singleton(kind, &p.sigma)) {
                tr.record(values[&p.sigma].abs());
            }
            for (a, b) in &pairs {
                tr.record((values[a] + values[b]).abs());
            }
            let off: f64 = perms
                .iter()
                .filter(|p| !p.is_identity())
                .map(|p| values[&p.sigma])
                .sum();
            tr.record(off.abs());
            Ok(())
        })();
        if let Err(e) = result {
            tr.error(format!("{} {y} {x}", model.kind()), e);
        }
    }
    tr.finish(tol)
}

/// `prod_{inversions} xi_beta / xi_alpha = prod_i xi_{sigma(i)}^{sigma(i) - i}`
/// for every permutation of `1..=n`, relative error.
pub fn check_inversion_monomial(n: usize, vectors: usize, tol: f64, seed: u64) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("inversion_monomial", seed).particles(n);
    let perms = match permutations_with_inversions(n) {
        Ok(p) => p,
        Err(e) => {
            tr.error("setup", e);
            return tr.finish(tol);
        }
    };
    for _ in 0..vectors {
        let xi: Vec<_> = (0..n).map(|_| random_complex(0.3, 3.0, &mut rng)).collect();
        for p in &perms {
            let lhs = inversion_ratio_product(p, &xi);
            let rhs = displacement_monomial(p, &xi);
            tr.record((lhs - rhs).norm() / rhs.norm());
        }
    }
    tr.finish(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypotheses_on_small_cases() {
        // (1,3,2): 2 at position 3, nothing after it
        assert!(push_singleton(&[1, 3, 2]));
        assert!(push_singleton(&[2, 1, 3]));
        assert!(!push_singleton(&[2, 3, 1]));
        // (2,1,3): 2 at position 1, nothing before it
        assert!(zrp_singleton(&[2, 1, 3]));
        assert!(zrp_singleton(&[1, 3, 2]));
        assert!(!zrp_singleton(&[3, 2, 1]));
        assert_eq!(pair_positions(ModelKind::Push, &[2, 3, 1]), vec![0]);
        assert_eq!(pair_positions(ModelKind::Azrp, &[3, 1, 2]), vec![1]);
    }

    #[test]
    fn push_partition_exists() {
        for n in 2..=4 {
            let perms = permutations_with_inversions(n).unwrap();
            let (singles, pairs) = push_partition(&perms).expect("cover");
            assert_eq!(singles.len() + 2 * pairs.len(), perms.len() - 1);
        }
    }

    #[test]
    fn lemmas_three_particles() {
        for kind in ModelKind::ALL {
            let r = check_lemmas(kind.into(), 3, 2, 1e-10, 9);
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn monomial_identity() {
        let r = check_inversion_monomial(4, 3, 1e-12, 1);
        assert!(r.pass && r.cases == 72, "{r}");
    }
}
