//! Exact stochastic simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dynamics::{moves, overloaded_site, sample_avalanche};
use crate::bethe_engine::Distribution;
use crate::error::{Error, Result};
use crate::models::{Configuration, Model, ModelKind};

/// A path as `(time, positions)` pairs, one per accepted event.
pub type Trajectory = Vec<(f64, Vec<i64>)>;

fn run<R: Rng>(
    model: &Model,
    y: &[i64],
    t: f64,
    rng: &mut R,
    mut record: Option<&mut Trajectory>,
) -> Vec<i64> {
    let mut c = y.to_vec();
    let mut now = 0.0;
    if let Some(tr) = record.as_deref_mut() {
        tr.push((0.0, c.clone()));
    }
    loop {
        let mv = moves(model, &c);
        let total: f64 = mv.iter().map(|m| m.rate).sum();
        if total <= 0.0 {
            return c;
        }
        let u: f64 = 1.0 - rng.gen::<f64>();
        now += -u.ln() / total;
        if now > t {
            return c;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = mv.len() - 1;
        for (i, m) in mv.iter().enumerate() {
            if pick < m.rate {
                chosen = i;
                break;
            }
            pick -= m.rate;
        }
        let next = mv[chosen].positions.clone();
        // avalanches take no time
        c = if model.kind() == ModelKind::Asap && overloaded_site(&next).is_some() {
            sample_avalanche(model, next, rng)
        } else {
            next
        };
        if let Some(tr) = record.as_deref_mut() {
            tr.push((now, c.clone()));
        }
    }
}

fn check(model: &Model, y: &Configuration, t: f64) -> Result<()> {
    if !y.is_physical(model.kind()) {
        return Err(Error::InvalidConfiguration(format!(
            "{y} is not physical for {}",
            model.kind()
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One sample of the state at time `t`, deterministic in `seed`.
pub fn gillespie_sample(
    model: &Model,
    y: &Configuration,
    t: f64,
    seed: u64,
) -> Result<Configuration> {
    check(model, y, t)?;
    Ok(Configuration::new(run(
        model,
        y.positions(),
        t,
        &mut rng_for(seed, 0),
        None,
    )))
}

/// `count` independent samples; sample `i` uses stream `i` of the seed, so
/// the result does not depend on the number of worker threads.
pub fn gillespie_samples(
    model: &Model,
    y: &Configuration,
    t: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<Configuration>> {
    check(model, y, t)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| Configuration::new(run(model, y.positions(), t, &mut rng_for(seed, i), None)))
        .collect())
}

/// Empirical distribution of `count` samples.
pub fn empirical_distribution(
    model: &Model,
    y: &Configuration,
    t: f64,
    seed: u64,
    count: usize,
) -> Result<Distribution> {
    let samples = gillespie_samples(model, y, t, seed, count)?;
    let mut d = Distribution::new();
    let w = 1.0 / count.max(1) as f64;
    for s in samples {
        let key = s.into_vec();
        let old = d.get(&key);
        d.insert(key, old + w);
    }
    Ok(d)
}

/// One recorded path up to time `t`.
pub fn gillespie_trajectory(
    model: &Model,
    y: &Configuration,
    t: f64,
    seed: u64,
) -> Result<Trajectory> {
    check(model, y, t)?;
    let mut tr = Vec::new();
    run(
        model,
        y.positions(),
        t,
        &mut rng_for(seed, 0),
        Some(&mut tr),
    );
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_and_reproducible() {
        let m = Model::asap(0.5, 0.4).unwrap();
        let y = Configuration::new(vec![0, 1, 2]);
        assert_eq!(gillespie_sample(&m, &y, 0.0, 3).unwrap(), y);
        let a = gillespie_samples(&m, &y, 1.0, 11, 200).unwrap();
        let b = gillespie_samples(&m, &y, 1.0, 11, 200).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| c.is_physical(m.kind())));
    }

    #[test]
    fn trajectory_is_monotone_in_time() {
        let m = Model::push(0.5, 0.3).unwrap();
        let y = Configuration::new(vec![0, 1]);
        let tr = gillespie_trajectory(&m, &y, 2.0, 5).unwrap();
        assert!(tr.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(tr.last().unwrap().0 <= 2.0);
    }
}
