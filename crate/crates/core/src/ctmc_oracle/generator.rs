//! Sparse generator on a truncated state space and transient solution by
//! uniformization.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{moves, overloaded_site, resolve_avalanche};
use super::window::{initial_window, TruncationWindow};
use crate::bethe_engine::Distribution;
use crate::error::{Error, Result};
use crate::models::{Configuration, Model, ModelKind};

/// Default cap on the number of states.
pub const MAX_STATES: usize = 4_000_000;
/// Cap on the number of uniformization steps.
pub const MAX_POISSON_TERMS: usize = 100_000;

/// Generator of the chain restricted to a window, with one absorbing
/// "escaped" state collecting every transition that leaves it.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    pub model: Model,
    pub window: TruncationWindow,
    states: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    /// Outgoing rates per state; target `None` is the escaped state.
    out: Vec<Vec<(Option<usize>, f64)>>,
}

impl SparseGenerator {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<i64>] {
        &self.states
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Off-diagonal rates out of state `i`.
    pub fn transitions(&self, i: usize) -> &[(Option<usize>, f64)] {
        &self.out[i]
    }

    /// `-Q_ii`, the total rate out of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.out[i].iter().map(|(_, r)| r).sum()
    }
}

/// Number of weakly (or strictly) increasing `n`-tuples in a window of
/// `w` sites, saturating.
fn state_count(w: i64, n: usize, strict: bool) -> usize {
    let top = if strict { w } else { w + n as i64 - 1 };
    if top < n as i64 {
        return 0;
    }
    let mut c: f64 = 1.0;
    for k in 0..n {
        c *= (top - k as i64) as f64 / (k + 1) as f64;
    }
    c.round().min(usize::MAX as f64) as usize
}

fn enumerate(lo: i64, hi: i64, n: usize, strict: bool) -> Vec<Vec<i64>> {
    fn rec(
        start: i64,
        hi: i64,
        n: usize,
        strict: bool,
        cur: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in start..=hi {
            cur.push(v);
            rec(if strict { v + 1 } else { v }, hi, n, strict, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(lo, hi, n, strict, &mut Vec::new(), &mut out);
    out
}

/// Builds the generator for `n` particles in `window`. `tol` bounds the
/// avalanche probability discarded per transition (ASAP only).
pub fn build_generator(
    model: &Model,
    window: TruncationWindow,
    n: usize,
    tol: f64,
) -> Result<SparseGenerator> {
    build_generator_capped(model, window, n, tol, MAX_STATES)
}

pub fn build_generator_capped(
    model: &Model,
    window: TruncationWindow,
    n: usize,
    tol: f64,
    max_states: usize,
) -> Result<SparseGenerator> {
    if n == 0 || window.hi < window.lo {
        return Err(Error::InvalidConfiguration(
            "empty window or no particles".into(),
        ));
    }
    let strict = model.kind() != ModelKind::Azrp;
    let count = state_count(window.width(), n, strict);
    if count > max_states {
        return Err(Error::Resource(format!(
            "{count} states exceed the cap of {max_states}"
        )));
    }
    let states = enumerate(window.lo, window.hi, n, strict);
    let index: HashMap<Vec<i64>, usize> = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let lookup = |x: &[i64]| {
        if window.contains(x) {
            index.get(x).copied()
        } else {
            None
        }
    };
    // Avalanches only involve the particles at or right of the overloaded
    // site, so outcomes are cached by that suffix relative to the site.
    let memo: Mutex<HashMap<Vec<i64>, Vec<(Vec<i64>, f64)>>> = Mutex::new(HashMap::new());
    let avalanche = |c: &[i64]| -> Result<Vec<(Vec<i64>, f64)>> {
        let (site, _) = overloaded_site(c).expect("caller checked");
        let split = c.iter().position(|&v| v >= site).unwrap_or(c.len());
        let key: Vec<i64> = c[split..].iter().map(|v| v - site).collect();
        let hit = memo.lock().expect("memo lock").get(&key).cloned();
        let rel = match hit {
            Some(r) => r,
            None => {
                let r: Vec<(Vec<i64>, f64)> = resolve_avalanche(model, &key, tol)?
                    .into_iter()
                    .map(|o| (o.positions, o.weight))
                    .collect();
                memo.lock().expect("memo lock").insert(key, r.clone());
                r
            }
        };
        Ok(rel
            .into_iter()
            .map(|(tail, w)| {
                let mut full = c[..split].to_vec();
                full.extend(tail.iter().map(|v| v + site));
                (full, w)
            })
            .collect())
    };
    let out = states
        .par_iter()
        .map(|c| {
            let mut acc: BTreeMap<Option<usize>, f64> = BTreeMap::new();
            for mv in moves(model, c) {
                if model.kind() == ModelKind::Asap && overloaded_site(&mv.positions).is_some() {
                    for (positions, weight) in avalanche(&mv.positions)? {
                        *acc.entry(lookup(&positions)).or_insert(0.0) += mv.rate * weight;
                    }
                } else {
                    *acc.entry(lookup(&mv.positions)).or_insert(0.0) += mv.rate;
                }
            }
            Ok(acc.into_iter().collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseGenerator {
        model: *model,
        window,
        states,
        index,
        out,
    })
}

/// Transient law at time `t` on the truncated chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uniformized {
    pub distribution: Distribution,
    /// Mass absorbed in the escaped state. Every probability of the
    /// untruncated chain lies in `[value, value + escaped + poisson_tail]`.
    pub escaped: f64,
    /// Poisson weight not summed.
    pub poisson_tail: f64,
    pub window: TruncationWindow,
}

impl Uniformized {
    /// Bound on `|truncated - exact|` for any single probability.
    pub fn error_bound(&self) -> f64 {
        self.escaped + self.poisson_tail
    }
}

/// Row of `exp(Q t)` for state `y`, by uniformization with rate
/// `Lambda = max exit rate`.
pub fn uniformization_distribution(
    gen: &SparseGenerator,
    y: &Configuration,
    t: f64,
    tol: f64,
) -> Result<Uniformized> {
    let start = gen
        .index_of(y.positions())
        .ok_or_else(|| Error::InvalidConfiguration(format!("{y} is not a state of the window")))?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    let n = gen.len();
    let exit: Vec<f64> = (0..n).map(|i| gen.exit_rate(i)).collect();
    let lambda = exit.iter().copied().fold(0.0, f64::max);
    // incoming lists for a pull-style, deterministic parallel update
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut escape_rate = vec![0.0; n];
    for i in 0..n {
        for &(j, r) in gen.transitions(i) {
            match j {
                Some(j) => incoming[j].push((i, r)),
                None => escape_rate[i] += r,
            }
        }
    }
    let mut v = vec![0.0; n];
    v[start] = 1.0;
    let mut result = vec![0.0; n];
    let mut escaped_v = 0.0;
    let mut escaped = 0.0;
    let mut poisson_tail = 0.0;
    if lambda == 0.0 || t == 0.0 {
        result = v;
    } else {
        let lt = lambda * t;
        let mut lw = -lt;
        let mut cumulative = 0.0;
        let mut k = 0usize;
        loop {
            let w = lw.exp();
            cumulative += w;
            result.par_iter_mut().zip(&v).for_each(|(r, x)| *r += w * x);
            escaped += w * escaped_v;
            poisson_tail = (1.0 - cumulative).max(0.0);
            if (k as f64) > lt && poisson_tail < tol {
                break;
            }
            if k >= MAX_POISSON_TERMS {
                return Err(Error::Resource(format!(
                    "Poisson series longer than {MAX_POISSON_TERMS} terms"
                )));
            }
            escaped_v += v.iter().zip(&escape_rate).map(|(x, r)| x * r).sum::<f64>() / lambda;
            v = (0..n)
                .into_par_iter()
                .map(|j| {
                    let stay = v[j] * (1.0 - exit[j] / lambda);
                    stay + incoming[j].iter().map(|&(i, r)| v[i] * r).sum::<f64>() / lambda
                })
                .collect();
            k += 1;
            lw += lt.ln() - (k as f64).ln();
        }
    }
    let mut distribution = Distribution::new();
    for (i, p) in result.into_iter().enumerate() {
        if p != 0.0 {
            distribution.insert(gen.states()[i].clone(), p);
        }
    }
    Ok(Uniformized {
        distribution,
        escaped,
        poisson_tail,
        window: gen.window,
    })
}

/// Oracle law of the state at time `t`, enlarging the window until the
/// escaped mass is below `tol`.
pub fn oracle_distribution(
    model: &Model,
    y: &Configuration,
    t: f64,
    tol: f64,
) -> Result<Uniformized> {
    if !y.is_physical(model.kind()) {
        return Err(Error::InvalidConfiguration(format!(
            "{y} is not physical for {}",
            model.kind()
        )));
    }
    let mut window = initial_window(model, y, t, tol)?;
    for _ in 0..8 {
        let gen = build_generator(model, window, y.len(), tol * 1e-2)?;
        let u = uniformization_distribution(&gen, y, t, tol * 1e-2)?;
        if u.escaped <= tol {
            return Ok(u);
        }
        let extra = (window.width() / 4).max(4);
        // the left edge of an ASAP window is already certified
        window = if model.kind() == ModelKind::Asap {
            window.extended_right(extra)
        } else {
            window.widened(extra)
        };
    }
    Err(Error::Resource(format!(
        "escaped mass stayed above {tol:.1e} after enlarging the window"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk(p: f64, t: f64, m: i64) -> f64 {
        let (a, b, shift) = if m >= 0 {
            (p * t, (1.0 - p) * t, m)
        } else {
            ((1.0 - p) * t, p * t, -m)
        };
        let mut term = (-t).exp();
        for j in 1..=shift {
            term *= a / j as f64;
        }
        let mut sum = 0.0;
        for k in 0..200 {
            if k > 0 {
                term *= a * b / ((k as f64) * (k + shift) as f64);
            }
            sum += term;
        }
        sum
    }

    #[test]
    fn rows_sum_to_zero_and_states_physical() {
        for model in [
            Model::asep(0.3).unwrap(),
            Model::azrp(0.6).unwrap(),
            Model::push(0.4, 0.35).unwrap(),
            Model::asap(0.7, 0.4).unwrap(),
        ] {
            let w = TruncationWindow {
                lo: -3,
                hi: 4,
                escape_bound: 0.0,
            };
            let g = build_generator(&model, w, 3, 1e-14).unwrap();
            for i in 0..g.len() {
                assert!(model.kind().is_physical(&g.states()[i]));
                let out: f64 = g.transitions(i).iter().map(|(_, r)| r).sum();
                assert!((out - g.exit_rate(i)).abs() < 1e-12);
                assert!(g.transitions(i).iter().all(|(_, r)| *r >= 0.0));
            }
        }
    }

    #[test]
    fn single_particle_matches_walk() {
        let model = Model::asep(0.65).unwrap();
        let y = Configuration::new(vec![0]);
        let w = TruncationWindow {
            lo: -40,
            hi: 40,
            escape_bound: 0.0,
        };
        let g = build_generator(&model, w, 1, 1e-14).unwrap();
        let u = uniformization_distribution(&g, &y, 1.7, 1e-13).unwrap();
        for m in -10..=10 {
            assert!((u.distribution.get(&[m]) - walk(0.65, 1.7, m)).abs() < 1e-10);
        }
        assert!((u.distribution.captured_mass + u.escaped - 1.0).abs() < 1e-10);
    }

    #[test]
    fn time_zero_is_delta() {
        let model = Model::push(0.5, 0.5).unwrap();
        let y = Configuration::new(vec![0, 1]);
        let u = oracle_distribution(&model, &y, 0.0, 1e-10).unwrap();
        assert_eq!(u.distribution.get(&[0, 1]), 1.0);
        assert_eq!(u.distribution.captured_mass, 1.0);
    }

    #[test]
    fn stochastic_with_escape() {
        let model = Model::asap(0.6, 0.5).unwrap();
        let y = Configuration::new(vec![0, 1]);
        let u = oracle_distribution(&model, &y, 1.0, 1e-10).unwrap();
        assert!(u.escaped <= 1e-10);
        assert!((u.distribution.captured_mass + u.escaped + u.poisson_tail - 1.0).abs() < 1e-10);
        assert!(u.distribution.min_probability() >= 0.0);
    }

    #[test]
    fn state_cap() {
        let w = TruncationWindow {
            lo: 0,
            hi: 999,
            escape_bound: 0.0,
        };
        assert!(matches!(
            build_generator_capped(&Model::asep(0.5).unwrap(), w, 3, 1e-12, 1000),
            Err(Error::Resource(_))
        ));
    }
}
