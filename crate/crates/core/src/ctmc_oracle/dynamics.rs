//! Elementary moves of the four models and ASAP avalanche resolution.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{avalanche_probs, Direction, Model, ModelKind};

/// Stop expanding the avalanche tree after this many branch steps.
const AVALANCHE_STEP_CAP: usize = 1_000_000;

/// One transition out of a configuration. `positions` is sorted but may
/// contain a repeated site for ASAP, in which case an avalanche follows.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub positions: Vec<i64>,
    pub rate: f64,
}

/// Final configuration of an avalanche and its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheOutcome {
    pub positions: Vec<i64>,
    pub weight: f64,
}

/// All jump moves from `c` (a physical configuration).
pub fn moves(model: &Model, c: &[i64]) -> Vec<Move> {
    let n = c.len();
    let (p, q) = (model.p(), model.q());
    let mut out = Vec::with_capacity(2 * n);
    let mut push = |positions: Vec<i64>, rate: f64| {
        if rate > 0.0 {
            out.push(Move { positions, rate });
        }
    };
    match model.kind() {
        ModelKind::Asep => {
            for i in 0..n {
                if i + 1 == n || c[i + 1] != c[i] + 1 {
                    let mut d = c.to_vec();
                    d[i] += 1;
                    push(d, p);
                }
                if i == 0 || c[i - 1] != c[i] - 1 {
                    let mut d = c.to_vec();
                    d[i] -= 1;
                    push(d, q);
                }
            }
        }
        ModelKind::Azrp => {
            let mut i = 0;
            while i < n {
                let mut j = i;
                while j + 1 < n && c[j + 1] == c[i] {
                    j += 1;
                }
                // top particle of the stack leaves right, bottom one leaves left
                let mut d = c.to_vec();
                d[j] += 1;
                push(d, p);
                let mut d = c.to_vec();
                d[i] -= 1;
                push(d, q);
                i = j + 1;
            }
        }
        ModelKind::Push => {
            for i in 0..n {
                let mut len = 1;
                while i + len < n && c[i + len] == c[i] + len as i64 {
                    len += 1;
                }
                let mut d = c.to_vec();
                d[i..i + len].iter_mut().for_each(|v| *v += 1);
                push(
                    d,
                    p * model
                        .push_rate(len, Direction::Right)
                        .expect("valid PushASEP"),
                );
                let mut len = 1;
                while len <= i && c[i - len] == c[i] - len as i64 {
                    len += 1;
                }
                let mut d = c.to_vec();
                d[i + 1 - len..=i].iter_mut().for_each(|v| *v -= 1);
                push(
                    d,
                    q * model
                        .push_rate(len, Direction::Left)
                        .expect("valid PushASEP"),
                );
            }
        }
        ModelKind::Asap => {
            for i in 0..n {
                for (step, rate) in [(1, p), (-1, q)] {
                    let mut d = c.to_vec();
                    d[i] += step;
                    d.sort_unstable();
                    push(d, rate);
                }
            }
        }
    }
    out
}

/// The (unique) site holding two or more particles in sorted `c`, with its
/// occupancy.
pub fn overloaded_site(c: &[i64]) -> Option<(i64, usize)> {
    let mut i = 0;
    while i < c.len() {
        let mut j = i;
        while j + 1 < c.len() && c[j + 1] == c[i] {
            j += 1;
        }
        if j > i {
            return Some((c[i], j - i + 1));
        }
        i = j + 1;
    }
    None
}

/// Moves `k` of the particles at `site` one step right, keeping `c` sorted.
fn topple(c: &[i64], site: i64, k: usize) -> Vec<i64> {
    let mut d = c.to_vec();
    // the top `k` entries of the stack move; sorting is preserved because
    // they land on `site + 1`, before anything that was already there
    let last = d.iter().rposition(|&v| v == site).expect("site occupied");
    for v in d[last + 1 - k..=last].iter_mut() {
        *v += 1;
    }
    d.sort_unstable();
    d
}

/// Enumerates the avalanche started by an overload in `c`.
///
/// Each overloaded site with `n` particles sends all of them one site to
/// the right with probability `mu_n` and `n - 1` of them otherwise. Branches
/// whose weight drops below `tol * 1e-3` are discarded; the call fails if
/// the discarded weight reaches `tol`.
pub fn resolve_avalanche(model: &Model, c: &[i64], tol: f64) -> Result<Vec<AvalancheOutcome>> {
    if model.kind() != ModelKind::Asap {
        return Err(Error::InvalidParams("avalanches only occur in ASAP".into()));
    }
    let mu = model.mu();
    let prune = tol * 1e-3;
    let mut done: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut stack = vec![(c.to_vec(), 1.0)];
    let mut dropped = 0.0;
    let mut steps = 0;
    while let Some((cfg, w)) = stack.pop() {
        steps += 1;
        if steps > AVALANCHE_STEP_CAP {
            return Err(Error::Precision(
                "avalanche enumeration exceeded the step cap".into(),
            ));
        }
        let Some((site, n)) = overloaded_site(&cfg) else {
            *done.entry(cfg).or_insert(0.0) += w;
            continue;
        };
        if w < prune {
            dropped += w;
            continue;
        }
        let (mn, ln) = avalanche_probs(n, mu)?;
        stack.push((topple(&cfg, site, n - 1), w * ln));
        stack.push((topple(&cfg, site, n), w * mn));
    }
    if dropped >= tol {
        return Err(Error::Precision(format!(
            "avalanche residual {dropped:.3e} not below {tol:.3e}"
        )));
    }
    Ok(done
        .into_iter()
        .map(|(positions, weight)| AvalancheOutcome { positions, weight })
        .collect())
}

/// Resolves an avalanche by sequential Bernoulli draws.
pub fn sample_avalanche<R: Rng>(model: &Model, mut c: Vec<i64>, rng: &mut R) -> Vec<i64> {
    let mu = model.mu();
    while let Some((site, n)) = overloaded_site(&c) {
        let (mn, _) = avalanche_probs(n, mu).expect("n >= 2");
        let k = if rng.gen::<f64>() < mn { n } else { n - 1 };
        c = topple(&c, site, k);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_example_rates() {
        let m = Model::push(0.6, 0.3).unwrap();
        let mv = moves(&m, &[0, 1]);
        let right: Vec<_> = mv
            .iter()
            .filter(|x| x.positions.iter().sum::<i64>() > 1)
            .collect();
        assert_eq!(right.len(), 2);
        assert!(right
            .iter()
            .any(|x| x.positions == vec![0, 2] && (x.rate - 0.6).abs() < 1e-15));
        assert!(right
            .iter()
            .any(|x| x.positions == vec![1, 2] && (x.rate - 0.6 * 0.3).abs() < 1e-15));
    }

    #[test]
    fn push_block_outflow() {
        let m = Model::push(0.3, 0.6).unwrap();
        for n in 1..6 {
            let c: Vec<i64> = (0..n).collect();
            let total: f64 = moves(&m, &c).iter().map(|x| x.rate).sum();
            let want: f64 = (1..=n as usize)
                .map(|k| {
                    0.3 * m.push_rate(k, Direction::Right).unwrap()
                        + 0.7 * m.push_rate(k, Direction::Left).unwrap()
                })
                .sum();
            assert!((total - want).abs() < 1e-14);
        }
    }

    #[test]
    fn azrp_stack_moves() {
        let m = Model::azrp(0.6).unwrap();
        let mv = moves(&m, &[0, 0]);
        assert_eq!(mv.len(), 2);
        assert_eq!(mv[0].positions, vec![0, 1]);
        assert_eq!(mv[1].positions, vec![-1, 0]);
        assert!((mv.iter().map(|x| x.rate).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn asep_exclusion() {
        let m = Model::asep(0.5).unwrap();
        let mv = moves(&m, &[0, 1, 3]);
        assert!(mv
            .iter()
            .all(|x| crate::models::ModelKind::Asep.is_physical(&x.positions)));
        assert_eq!(mv.len(), 4);
    }

    #[test]
    fn two_particle_avalanche_is_geometric() {
        let mu = 0.3;
        let m = Model::asap(0.5, mu).unwrap();
        let out = resolve_avalanche(&m, &[0, 0], 1e-14).unwrap();
        let total: f64 = out.iter().map(|o| o.weight).sum();
        assert!(total >= 1.0 - 1e-14);
        for o in &out {
            assert!(ModelKind::Asap.is_physical(&o.positions));
            let k = o.positions[0];
            assert_eq!(o.positions[1], k + 1);
            let want = (1.0 - mu) * mu.powi(k as i32);
            assert!((o.weight - want).abs() < 1e-15, "{k}");
        }
    }

    #[test]
    fn avalanche_through_occupied_sites() {
        let m = Model::asap(0.5, 0.4).unwrap();
        let out = resolve_avalanche(&m, &[0, 0, 1], 1e-13).unwrap();
        let total: f64 = out.iter().map(|o| o.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(out
            .iter()
            .all(|o| ModelKind::Asap.is_physical(&o.positions) && o.positions[0] >= 0));
        assert!(resolve_avalanche(&Model::asep(0.5).unwrap(), &[0, 0], 1e-10).is_err());
    }
}
