//! Engine against the truncated-chain oracle, the walk series and the
//! Gillespie sampler.

use rand::Rng;

use super::report::{CheckReport, Tracker};
use super::sampling::{neighbourhood, random_configuration, rng};
use super::subject::{walk_probability, Subject};
use crate::bethe_engine::{
    transition_probability_auto_tol, transition_probability_cached, ContourCache,
};
use crate::ctmc_oracle::{gillespie_samples, oracle_distribution};
use crate::error::{Error, Result};
use crate::models::Configuration;

/// Oracle tolerance used by the checks without a per-value tolerance.
pub const ORACLE_TOL: f64 = 1e-11;

/// Smallest probability of a target `X` drawn from the oracle distribution.
const MIN_TARGET_PROB: f64 = 1e-6;

/// Random `(params, Y, X, t <= t_max)` triples; residual `|engine - oracle|`.
pub fn check_oracle_agreement(
    subject: Subject,
    n: usize,
    trials: usize,
    t_max: f64,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("oracle_agreement", seed)
        .subject(&subject)
        .particles(n);
    for _ in 0..trials {
        let model = subject.draw(&mut rng);
        let y = random_configuration(model.kind(), n, &mut rng);
        let t = rng.gen_range(0.0..=t_max);
        let oracle = match oracle_distribution(&model, &y, t, (tol * 1e-2).min(ORACLE_TOL * 1e3)) {
            Ok(o) => o,
            Err(e) => {
                tr.error(format!("oracle {y} t={t:.3}"), e);
                continue;
            }
        };
        let candidates: Vec<&Vec<i64>> = oracle
            .distribution
            .entries
            .iter()
            .filter(|(_, &v)| v >= MIN_TARGET_PROB)
            .map(|(k, _)| k)
            .collect();
        let x = Configuration::new(candidates[rng.gen_range(0..candidates.len())].clone());
        tr.try_record(
            format!("{} {y}->{x} t={t:.3}", model.kind()),
            || -> Result<f64> {
                let v = transition_probability_auto_tol(&model, &y, &x, t, tol * 1e-3)?.value;
                Ok((v - oracle.distribution.get(x.positions())).abs() + oracle.error_bound())
            },
        );
    }
    tr.finish(tol)
}

/// `P_Y(X; 0) = delta_Y(X)` for every physical `X` with `|x_i - y_i| <= radius`.
pub fn check_delta(
    subject: Subject,
    n: usize,
    radius: i64,
    draws: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("delta_initial_condition", seed)
        .subject(&subject)
        .particles(n);
    for _ in 0..draws {
        let model = subject.draw(&mut rng);
        let y = random_configuration(model.kind(), n, &mut rng);
        let cache = match ContourCache::new(&model, n) {
            Ok(c) => c.map_specs(|s| s.with_abs_tol(tol * 1e-2)),
            Err(e) => {
                tr.error(format!("contour for {}", model.kind()), e);
                continue;
            }
        };
        for x in neighbourhood(model.kind(), &y, radius) {
            let want = if x == y { 1.0 } else { 0.0 };
            tr.try_record(format!("{y}->{x}"), || {
                transition_probability_cached(&cache, &y, &x, 0.0).map(|r| (r.value - want).abs())
            });
        }
    }
    tr.finish(tol)
}

/// `N = 1` against the walk series for every displacement in `ms` and time in `ts`.
pub fn check_single_particle(
    subject: Subject,
    ms: &[i64],
    ts: &[f64],
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let model = subject.draw(&mut rng);
    let mut tr = Tracker::new("single_particle_walk", seed)
        .model(&model)
        .particles(1);
    let y = Configuration::new(vec![0]);
    for &t in ts {
        for &m in ms {
            let x = Configuration::new(vec![m]);
            tr.try_record(format!("m={m} t={t}"), || -> Result<f64> {
                let v = transition_probability_auto_tol(&model, &y, &x, t, tol * 1e-3)?.value;
                Ok((v - walk_probability(model.p(), model.q(), t, m)).abs())
            });
        }
    }
    tr.finish(tol)
}

/// `1 - sum_X P_Y(X; t)` over the smallest set of states carrying oracle
/// mass at least `1 - coverage`.
pub fn check_normalization(
    subject: Subject,
    n: usize,
    t: f64,
    draws: usize,
    coverage: f64,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("normalization", seed)
        .subject(&subject)
        .particles(n);
    for _ in 0..draws {
        let model = subject.draw(&mut rng);
        let y = random_configuration(model.kind(), n, &mut rng);
        tr.try_record(format!("{} {y} t={t}", model.kind()), || -> Result<f64> {
            let oracle = oracle_distribution(&model, &y, t, ORACLE_TOL)?;
            let mut states: Vec<(&Vec<i64>, f64)> = oracle
                .distribution
                .entries
                .iter()
                .map(|(k, &v)| (k, v))
                .collect();
            states.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let cache = ContourCache::new(&model, n)?.map_specs(|s| s.with_abs_tol(tol * 1e-4));
            let (mut covered, mut total) = (0.0, 0.0);
            for (x, v) in states {
                if covered >= 1.0 - coverage {
                    break;
                }
                covered += v;
                let x = Configuration::new(x.clone());
                total += transition_probability_cached(&cache, &y, &x, t)?.value;
            }
            if covered < 1.0 - coverage {
                return Err(Error::Precision(format!(
                    "oracle window only carries mass {covered}"
                )));
            }
            Ok((1.0 - total).abs())
        });
    }
    tr.finish(tol)
}

/// Largest standardized deviation of Gillespie cell frequencies from the
/// oracle. Cells expected to receive fewer than `min_expected` samples are
/// pooled into one. The sampler is also rerun on 1- and 4-thread pools and
/// must reproduce the same samples.
pub fn check_monte_carlo(
    subject: Subject,
    n: usize,
    t: f64,
    samples: usize,
    z_max: f64,
    seed: u64,
) -> CheckReport {
    const MIN_EXPECTED: f64 = 10.0;
    let mut rng = rng(seed);
    let model = subject.draw(&mut rng);
    let y = random_configuration(model.kind(), n, &mut rng);
    let mut tr = Tracker::new("monte_carlo", seed).model(&model).particles(n);
    let run = |threads: usize| -> Result<Vec<Configuration>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        pool.install(|| gillespie_samples(&model, &y, t, seed, samples))
    };
    let result = (|| -> Result<()> {
        let oracle = oracle_distribution(&model, &y, t, ORACLE_TOL)?;
        let base = gillespie_samples(&model, &y, t, seed, samples)?;
        for threads in [1, 4] {
            if run(threads)? != base {
                return Err(Error::Precision(format!(
                    "samples differ on a {threads}-thread pool"
                )));
            }
        }
        let mut counts = std::collections::BTreeMap::new();
        for c in &base {
            *counts.entry(c.positions().to_vec()).or_insert(0usize) += 1;
        }
        let total = samples as f64;
        let z = |observed: f64, prob: f64| {
            let sd = (total * prob * (1.0 - prob)).sqrt();
            (observed - total * prob).abs() / sd.max(f64::MIN_POSITIVE)
        };
        let (mut rest_obs, mut rest_prob) = (samples, 0.0);
        for (x, &p) in &oracle.distribution.entries {
            if total * p < MIN_EXPECTED {
                continue;
            }
            let obs = counts.get(x).copied().unwrap_or(0);
            rest_obs -= obs;
            tr.record(z(obs as f64, p));
        }
        rest_prob += 1.0
            - oracle
                .distribution
                .entries
                .values()
                .filter(|&&p| total * p >= MIN_EXPECTED)
                .sum::<f64>();
        if total * rest_prob >= MIN_EXPECTED {
            tr.record(z(rest_obs as f64, rest_prob));
        }
        Ok(())
    })();
    if let Err(e) = result {
        tr.error(format!("{} {y} t={t}", model.kind()), e);
    }
    tr.finish(z_max)
}
