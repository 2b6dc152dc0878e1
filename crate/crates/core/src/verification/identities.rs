//! Boundary conditions, the forward equation, the AZRP/ASEP bijection, the
//! ASAP-to-ASEP substitution and the AZRP marginal formula.

use num_complex::Complex64;
use rand::Rng;

use super::report::{CheckReport, Tracker};
use super::sampling::{random_complex, random_configuration, random_lattice_point, rng};
use super::subject::Subject;
use crate::bethe_engine::{
    auto_contour, azrp_mth_particle_distribution, time_derivative, to_asep, transition_probability,
    transition_probability_auto_tol, transition_probability_cached, transition_probability_with_s,
    Bracket, ContourCache, ContourSpec,
};
use crate::ctmc_oracle::window_for;
use crate::error::{Error, Result};
use crate::models::{asep_form_s_matrix, Configuration, Model, ModelKind};

/// Geometric weights below this end the ASAP boundary series.
pub const GEOMETRIC_CUTOFF: f64 = 1e-14;

/// `u(X; t)` on a fixed contour, for any `X` in `Z^N`.
fn u(model: &Model, y: &Configuration, x: Vec<i64>, t: f64, spec: &ContourSpec) -> Result<f64> {
    transition_probability(model, y, &Configuration::new(x), t, spec).map(|r| r.value)
}

fn with_pair(x: &[i64], i: usize, a: i64, b: i64) -> Vec<i64> {
    let mut v = x.to_vec();
    v[i] = a;
    v[i + 1] = b;
    v
}

/// Residual of the two-particle boundary condition at the pair `(i, i+1)`
/// with `x_i = x_{i+1} = s`.
pub fn boundary_residual(
    model: &Model,
    y: &Configuration,
    x: &[i64],
    i: usize,
    s: i64,
    t: f64,
    spec: &ContourSpec,
) -> Result<f64> {
    let f = |a: i64, b: i64| u(model, y, with_pair(x, i, a, b), t, spec);
    let r = match model.kind() {
        ModelKind::Asep => model.p() * f(s, s)? + model.q() * f(s + 1, s + 1)? - f(s, s + 1)?,
        ModelKind::Push => f(s, s)? - model.mu() * f(s - 1, s)? - model.lambda() * f(s, s + 1)?,
        ModelKind::Asap => f(s, s)? - model.lambda() * f(s - 1, s)? - model.mu() * f(s - 1, s - 1)?,
        ModelKind::Azrp => f(s, s)? - model.p() * f(s, s - 1)? - model.q() * f(s + 1, s)?,
    };
    Ok(r.abs())
}

/// Random `X` around `Y`, a pair index and the common site of the pair.
fn boundary_point<R: Rng>(y: &Configuration, rng: &mut R) -> (Vec<i64>, usize, i64) {
    let n = y.len();
    let lo = y.positions()[0] - 3;
    let hi = y.positions()[n - 1] + 3;
    let x = random_lattice_point(n, lo, hi, rng);
    let i = rng.gen_range(0..n - 1);
    let s = rng.gen_range(lo..=hi);
    (x, i, s)
}

pub fn check_boundary_conditions(
    subject: Subject,
    n: usize,
    t: f64,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("boundary_conditions", seed)
        .subject(&subject)
        .particles(n);
    if n < 2 {
        tr.error(
            "setup",
            Error::Domain("boundary conditions need N >= 2".into()),
        );
        return tr.finish(tol);
    }
    for _ in 0..trials {
        let model = subject.draw(&mut rng);
        let y = random_configuration(model.kind(), n, &mut rng);
        let (x, i, s) = boundary_point(&y, &mut rng);
        tr.try_record(
            format!("{} {y} X={x:?} pair {i} at {s}", model.kind()),
            || {
                let spec = auto_contour(&model, &y, &Configuration::new(with_pair(&x, i, s, s)))?
                    .with_abs_tol(tol * 1e-3);
                boundary_residual(&model, &y, &x, i, s, t, &spec)
            },
        );
    }
    tr.finish(tol)
}

/// ASAP condition in the unrolled form
/// `u(s, s) = lambda sum_{k >= 0} mu^k u(s - k - 1, s - k)`.
pub fn check_asap_geometric_boundary(
    subject: Subject,
    n: usize,
    t: f64,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("asap_geometric_boundary", seed)
        .subject(&subject)
        .particles(n);
    if subject.kind() != ModelKind::Asap || n < 2 {
        tr.error(
            "setup",
            Error::Domain("the geometric form is an ASAP identity for N >= 2".into()),
        );
        return tr.finish(tol);
    }
    for _ in 0..trials {
        let model = subject.draw(&mut rng);
        let y = random_configuration(model.kind(), n, &mut rng);
        let (x, i, s) = boundary_point(&y, &mut rng);
        tr.try_record(format!("{y} X={x:?} pair {i} at {s}"), || -> Result<f64> {
            let spec = auto_contour(&model, &y, &Configuration::new(with_pair(&x, i, s, s)))?
                .with_abs_tol(tol * 1e-3);
            let lhs = u(&model, &y, with_pair(&x, i, s, s), t, &spec)?;
            let mut rhs = 0.0;
            let mut w = model.lambda();
            let mut k = 0;
            while w / model.lambda() >= GEOMETRIC_CUTOFF {
                rhs += w * u(&model, &y, with_pair(&x, i, s - k - 1, s - k), t, &spec)?;
                w *= model.mu();
                k += 1;
            }
            Ok((lhs - rhs).abs())
        });
    }
    tr.finish(tol)
}

/// `d/dt u(X) = sum_i [p u(X - e_i) + q u(X + e_i)] - N u(X)` at random
/// lattice points, physical or not.
pub fn check_forward_equation(
    subject: Subject,
    n: usize,
    t: f64,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("forward_equation", seed)
        .subject(&subject)
        .particles(n);
    for _ in 0..trials {
        let model = subject.draw(&mut rng);
        let y = random_configuration(model.kind(), n, &mut rng);
        let x = random_lattice_point(n, y.positions()[0] - 3, y.positions()[n - 1] + 3, &mut rng);
        tr.try_record(
            format!("{} {y} X={x:?}", model.kind()),
            || -> Result<f64> {
                let xc = Configuration::new(x.clone());
                let spec = auto_contour(&model, &y, &xc)?.with_abs_tol(tol * 1e-3);
                let lhs = time_derivative(&model, &y, &xc, t, &spec)?.value;
                let mut rhs = -(n as f64) * u(&model, &y, x.clone(), t, &spec)?;
                for i in 0..n {
                    let mut left = x.clone();
                    left[i] -= 1;
                    let mut right = x.clone();
                    right[i] += 1;
                    rhs += model.p() * u(&model, &y, left, t, &spec)?
                        + model.q() * u(&model, &y, right, t, &spec)?;
                }
                Ok((lhs - rhs).abs())
            },
        );
    }
    tr.finish(tol)
}

/// AZRP probabilities against ASEP probabilities at the mapped
/// configurations. `t = None` draws `t` in `[0, 2]` per trial.
pub fn check_bijection(
    subject: Subject,
    n: usize,
    t: Option<f64>,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("bijection", seed)
        .subject(&subject)
        .particles(n);
    if subject.kind() != ModelKind::Azrp {
        tr.error(
            "setup",
            Error::InvalidParams("the bijection check runs on AZRP".into()),
        );
        return tr.finish(tol);
    }
    for _ in 0..trials {
        let azrp = subject.draw(&mut rng);
        let y = random_configuration(ModelKind::Azrp, n, &mut rng);
        let mut x: Vec<i64> = y
            .positions()
            .iter()
            .map(|v| v + rng.gen_range(-2..=2))
            .collect();
        x.sort_unstable();
        let x = Configuration::new(x);
        let t = t.unwrap_or_else(|| rng.gen_range(0.0..=2.0));
        tr.try_record(format!("{y}->{x} t={t:.3}"), || -> Result<f64> {
            let asep = Model::asep(azrp.p())?;
            let (ya, xa) = (to_asep(&y)?, to_asep(&x)?);
            let pz = transition_probability_auto_tol(&azrp, &y, &x, t, tol * 1e-3)?.value;
            let pa = transition_probability_auto_tol(&asep, &ya, &xa, t, tol * 1e-3)?.value;
            Ok((pz - pa).abs())
        });
    }
    tr.finish(tol)
}

/// ASAP S-matrix against the ASEP one at `(p', q') = (-mu/lambda, 1/lambda)`,
/// relative to `max(1, |S|)`, at random complex pairs.
pub fn check_substitution_s_matrix(
    subject: Subject,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("asap_substitution_s_matrix", seed).subject(&subject);
    for _ in 0..trials {
        let model = subject.draw(&mut rng);
        let (xa, xb) = (
            random_complex(0.2, 3.0, &mut rng),
            random_complex(0.2, 3.0, &mut rng),
        );
        tr.try_record(
            format!("mu={} xa={xa} xb={xb}", model.mu()),
            || -> Result<f64> {
                let s = model.s_matrix(xa, xb)?;
                let (p2, q2) = model.asap_as_asep_params()?;
                let sub = asep_form_s_matrix(p2, q2, xa, xb);
                Ok((s - sub).norm() / s.norm().max(1.0))
            },
        );
    }
    tr.finish(tol)
}

/// ASAP probability against the integral with the substituted ASEP
/// S-matrix and the unchanged ASAP energy.
pub fn check_substitution_probability(
    subject: Subject,
    n: usize,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("asap_substitution_probability", seed)
        .subject(&subject)
        .particles(n);
    for _ in 0..trials {
        let model = subject.draw(&mut rng);
        let y = random_configuration(ModelKind::Asap, n, &mut rng);
        let x = random_configuration(ModelKind::Asap, n, &mut rng);
        let t = rng.gen_range(0.0..=2.0);
        tr.try_record(format!("{y}->{x} t={t:.3}"), || -> Result<f64> {
            let (p2, q2) = model.asap_as_asep_params()?;
            let s = move |a: Complex64, b: Complex64| Ok(asep_form_s_matrix(p2, q2, a, b));
            let spec = auto_contour(&model, &y, &x)?.with_abs_tol(tol * 1e-3);
            let direct = transition_probability(&model, &y, &x, t, &spec)?.value;
            let substituted = transition_probability_with_s(&model, &s, &y, &x, t, &spec)?.value;
            Ok((direct - substituted).abs())
        });
    }
    tr.finish(tol)
}

/// Every weakly increasing configuration with entries in `lo..=hi`.
fn weak_configurations(n: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    fn rec(n: usize, from: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in from..=hi {
            cur.push(v);
            rec(n, v, hi, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, lo, hi, &mut Vec::new(), &mut out);
    out
}

/// The AZRP marginal formula against the sum of `P_Y(X; t)` over all
/// physical `X` in a window that loses at most `window_tol` of mass, for
/// every `m` and every `x` within `half_width` of `y_m`.
#[allow(clippy::too_many_arguments)]
pub fn check_mth_marginal(
    subject: Subject,
    n: usize,
    t: f64,
    half_width: i64,
    bracket: Bracket,
    window_tol: f64,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = rng(seed);
    let mut tr = Tracker::new("mth_particle_marginal", seed)
        .subject(&subject)
        .particles(n);
    if subject.kind() != ModelKind::Azrp {
        tr.error(
            "setup",
            Error::InvalidParams("the marginal formula is an AZRP identity".into()),
        );
        return tr.finish(tol);
    }
    let model = subject.draw(&mut rng);
    let y = random_configuration(ModelKind::Azrp, n, &mut rng);
    let sums = (|| -> Result<Vec<std::collections::BTreeMap<i64, f64>>> {
        let w = window_for(&model, &y, t, window_tol)?;
        let cache = ContourCache::new(&model, n)?.map_specs(|s| s.with_abs_tol(window_tol * 1e-3));
        let mut sums = vec![std::collections::BTreeMap::new(); n];
        for x in weak_configurations(n, w.lo, w.hi) {
            let xc = Configuration::new(x.clone());
            let v = transition_probability_cached(&cache, &y, &xc, t)?.value;
            for (m, &site) in x.iter().enumerate() {
                *sums[m].entry(site).or_insert(0.0) += v;
            }
        }
        Ok(sums)
    })();
    let sums = match sums {
        Ok(s) => s,
        Err(e) => {
            tr.error(format!("configuration sum for {y}"), e);
            return tr.finish(tol);
        }
    };
    for m in 1..=n {
        let centre = y.positions()[m - 1];
        for x in centre - half_width..=centre + half_width {
            tr.try_record(format!("{y} m={m} x={x}"), || -> Result<f64> {
                let r = azrp_mth_particle_distribution(m, &y, x, t, &model, None, bracket)?;
                Ok((r.value - sums[m - 1].get(&x).copied().unwrap_or(0.0)).abs())
            });
        }
    }
    tr.finish(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_two_particles() {
        for kind in ModelKind::ALL {
            let r = check_boundary_conditions(kind.into(), 2, 0.7, 3, 1e-8, 11);
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn forward_equation_two_particles() {
        let r = check_forward_equation(ModelKind::Push.into(), 2, 0.5, 3, 1e-7, 2);
        assert!(r.pass, "{r}");
    }

    #[test]
    fn substitution_arithmetic() {
        let m = Model::asap(0.5, 0.5).unwrap();
        assert_eq!(m.asap_as_asep_params().unwrap(), (-1.0, 2.0));
        let r = check_substitution_s_matrix(m.into(), 50, 1e-12, 4);
        assert!(r.pass, "{r}");
    }

    #[test]
    fn marginal_small() {
        let r = check_mth_marginal(
            Model::azrp(0.7).unwrap().into(),
            2,
            0.5,
            3,
            Bracket::Homogeneous,
            1e-9,
            1e-6,
            5,
        );
        assert!(r.pass, "{r}");
    }

    #[test]
    fn weak_configuration_count() {
        // multisets of size 2 from 3 values
        assert_eq!(weak_configurations(2, 0, 2).len(), 6);
    }
}
