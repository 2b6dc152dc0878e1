//! Distribution of the `m`-th AZRP particle as a sum over subsets `S` of
//! particles of `|S|`-fold integrals on large circles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::contour::{choose_marginal_radius_at, ContourSpec, RATIO_LADDER};
use super::quadrature::{contract, Evaluation, Grid, Term};
use super::transition::{adaptive, good_enough, ProbabilityResult, CANCELLATION_WARNING};
use crate::error::{Error, Result};
use crate::models::{Configuration, Model, ModelKind};

/// `[a]_tau = 1 + tau + ... + tau^(a-1)`.
fn tau_integer(a: usize, tau: f64) -> f64 {
    let mut s = 0.0;
    let mut pw = 1.0;
    for _ in 0..a {
        s += pw;
        pw *= tau;
    }
    s
}

/// Gaussian binomial `prod_{j=1..k} (1 - tau^(n-k+j)) / (1 - tau^j)`.
///
/// Each ratio is evaluated as a quotient of geometric sums, so `tau = 1`
/// gives the ordinary binomial without a special case. Zero outside
/// `0 <= k <= n`.
pub fn q_binomial(n: i64, k: i64, tau: f64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    let (n, k) = (n as usize, k as usize);
    (1..=k)
        .map(|j| tau_integer(n - k + j, tau) / tau_integer(j, tau))
        .product()
}

/// Base of the bracket in the marginal coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Bracket {
    /// `[n, k]_tau` with `tau = p/q`.
    Tau,
    /// The homogeneous `(p, q)` bracket `prod (q^a - p^a)/(q^b - p^b)`,
    /// equal to `q^(k(n-k)) [n, k]_(p/q)`. Agrees with the direct
    /// configuration sum.
    #[default]
    Homogeneous,
}

impl Bracket {
    pub fn eval(self, n: i64, k: i64, p: f64, q: f64) -> f64 {
        let b = q_binomial(n, k, p / q);
        match self {
            Bracket::Tau => b,
            Bracket::Homogeneous if (0..=n).contains(&k) => b * q.powi((k * (n - k)) as i32),
            Bracket::Homogeneous => 0.0,
        }
    }
}

impl std::str::FromStr for Bracket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tau" => Ok(Bracket::Tau),
            "homogeneous" => Ok(Bracket::Homogeneous),
            other => Err(Error::InvalidParams(format!("unknown bracket '{other}'"))),
        }
    }
}

/// Coefficient of the subset `S` (1-based indices) for particle `m`,
/// without the global `(-1)^(m+1) (pq)^(m(m-1)/2)`.
pub fn subset_coefficient(subset: &[usize], m: usize, p: f64, q: f64, bracket: Bracket) -> f64 {
    let n = subset.len() as i32;
    let m = m as i32;
    let sum: i32 = subset.iter().map(|&i| i as i32).sum();
    bracket.eval((n - 1) as i64, (n - m) as i64, p, q) * p.powi(sum - m * n)
        / q.powi(sum - n * (n + 1) / 2)
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, k, &mut Vec::new(), &mut out);
    out
}

/// Integral of `I_Z` over `|S|` large circles; `site` is the ASEP-side
/// coordinate `x + m`.
fn iz_integral(
    model: &Model,
    y: &[i64],
    subset: &[usize],
    site: i64,
    t: f64,
    spec: &ContourSpec,
    floor: f64,
) -> Result<(Evaluation, bool)> {
    let n = subset.len();
    let (p, q) = (model.p(), model.q());
    let mut last = None;
    let res = adaptive(spec, n, 2, floor, |grid: &Grid| {
        let mut tables = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let tab = grid.pair_table(a, b, |xa, xb| {
                    let den = p + q * xa * xb - xa;
                    let num = xb - xa;
                    if den.norm() < 1e-13 * (1.0 + num.norm()) {
                        return Err(Error::Pole {
                            denominator: den.norm(),
                            numerator: num.norm(),
                        });
                    }
                    Ok(num / den)
                })?;
                tables.push((a, b, tab));
            }
        }
        let inv_m = 1.0 / grid.m as f64;
        let plain: Vec<Vec<Complex64>> = (0..n)
            .map(|k| {
                let i = subset[k];
                let e = site - (y[i - 1] + i as i64);
                grid.powers(k, e)
                    .into_iter()
                    .zip(grid.nodes(k))
                    .map(|(pw, z)| pw * (model.energy_unchecked(z) * t).exp() * inv_m / (1.0 - z))
                    .collect()
            })
            .collect();
        // the factor 1 - prod(xi) splits into two product-form terms
        let shifted: Vec<Vec<Complex64>> = (0..n)
            .map(|k| {
                let sign = if k == 0 { -1.0 } else { 1.0 };
                plain[k]
                    .iter()
                    .zip(grid.nodes(k))
                    .map(|(w, z)| w * z * sign)
                    .collect()
            })
            .collect();
        let pairs: Vec<_> = tables.iter().map(|(a, b, tab)| (*a, *b, tab)).collect();
        let terms = [
            Term {
                weights: plain.iter().map(|w| w.as_slice()).collect(),
                pairs: pairs.clone(),
            },
            Term {
                weights: shifted.iter().map(|w| w.as_slice()).collect(),
                pairs,
            },
        ];
        let ev = Evaluation::from_acc(contract(&terms, grid.m), grid.m, n);
        last = Some(ev);
        Ok(ev)
    })?;
    Ok((last.expect("at least one grid evaluated"), res.converged))
}

/// `P(x_m(t) = x)` for AZRP started from `y`.
///
/// `spec` gives the large circle; `None` tries the radii of
/// [`choose_marginal_radius_at`] along [`RATIO_LADDER`] until the observed
/// error is small.
pub fn azrp_mth_particle_distribution(
    m: usize,
    y: &Configuration,
    x: i64,
    t: f64,
    model: &Model,
    spec: Option<&ContourSpec>,
    bracket: Bracket,
) -> Result<ProbabilityResult> {
    if model.kind() != ModelKind::Azrp {
        return Err(Error::InvalidParams(format!(
            "marginal formula is for AZRP, got {}",
            model.kind()
        )));
    }
    let n = y.len();
    if m == 0 || m > n {
        return Err(Error::Domain(format!("m = {m} outside 1..={n}")));
    }
    if !y.is_physical(ModelKind::Azrp) {
        return Err(Error::InvalidConfiguration(format!(
            "Y = {y} is not weakly increasing"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    let (p, q) = (model.p(), model.q());
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain("marginal formula needs 0 < p < 1".into()));
    }
    let spec = match spec {
        Some(s) => s,
        None => {
            let mut best: Option<ProbabilityResult> = None;
            for ratio in RATIO_LADDER {
                let spec = ContourSpec::new(vec![choose_marginal_radius_at(model, ratio)?]);
                let r = marginal_on(model, y, m, x, t, &spec, bracket)?;
                let done = good_enough(&r, &spec);
                if best
                    .as_ref()
                    .is_none_or(|b| r.observed_error < b.observed_error)
                {
                    best = Some(r);
                }
                if done {
                    break;
                }
            }
            return Ok(best.expect("ladder is not empty"));
        }
    };
    if spec.radii.len() != 1 {
        return Err(Error::InvalidParams(
            "marginal contour takes a single radius".into(),
        ));
    }
    marginal_on(model, y, m, x, t, spec, bracket)
}

fn marginal_on(
    model: &Model,
    y: &Configuration,
    m: usize,
    x: i64,
    t: f64,
    spec: &ContourSpec,
    bracket: Bracket,
) -> Result<ProbabilityResult> {
    let n = y.len();
    let (p, q) = (model.p(), model.q());
    let global =
        if (m + 1).is_multiple_of(2) { 1.0 } else { -1.0 } * (p * q).powi((m * (m - 1) / 2) as i32);
    let site = x + m as i64;
    let (mut value, mut err, mut seen, mut worst) = (0.0, 0.0, 0.0, 0.0f64);
    let (mut nodes, mut converged) = (0, true);
    for size in m..=n {
        for subset in subsets_of_size(n, size) {
            let c = global * subset_coefficient(&subset, m, p, q, bracket);
            // each term only needs accuracy relative to a probability of order one
            let floor = 1.0 / c.abs().max(f64::MIN_POSITIVE);
            let sub = spec
                .clone()
                .with_abs_tol(spec.abs_tol / c.abs().max(f64::MIN_POSITIVE));
            let (ev, ok) = iz_integral(model, y.positions(), &subset, site, t, &sub, floor)?;
            value += c * ev.value.re;
            err += c.abs() * ev.abs_error();
            seen += c.abs() * ev.observed_error();
            worst = worst.max(c.abs() * ev.max_integrand);
            nodes = nodes.max(ev.m);
            converged &= ok;
        }
    }
    let cancellation = worst / value.abs().max(f64::MIN_POSITIVE);
    Ok(ProbabilityResult {
        value,
        abs_error_estimate: err,
        observed_error: seen,
        cancellation,
        nodes_used: nodes,
        converged,
        precision_warning: cancellation > CANCELLATION_WARNING,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_binomial_examples() {
        assert_eq!(q_binomial(5, 0, 0.3), 1.0);
        assert!((q_binomial(4, 2, 1.0) - 6.0).abs() < 1e-14);
        assert!((q_binomial(2, 1, 0.7) - 1.7).abs() < 1e-14);
        assert_eq!(q_binomial(3, 4, 0.5), 0.0);
        assert_eq!(q_binomial(3, -1, 0.5), 0.0);
        // symmetry and the Pascal rule
        for tau in [0.2, 1.0, 2.5] {
            for n in 1..8 {
                for k in 0..=n {
                    assert!(
                        (q_binomial(n, k, tau) - q_binomial(n, n - k, tau)).abs()
                            < 1e-10 * q_binomial(n, k, tau)
                    );
                    if k > 0 && k < n {
                        let rhs = q_binomial(n - 1, k - 1, tau)
                            + tau.powi(k as i32) * q_binomial(n - 1, k, tau);
                        assert!((q_binomial(n, k, tau) - rhs).abs() < 1e-10 * rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn homogeneous_bracket() {
        let (p, q) = (0.3, 0.7);
        // [3,1] homogeneous = p^2 + pq + q^2
        let h = Bracket::Homogeneous.eval(3, 1, p, q);
        assert!((h - (p * p + p * q + q * q)).abs() < 1e-15);
        assert_eq!(Bracket::Homogeneous.eval(3, 5, p, q), 0.0);
    }

    #[test]
    fn subsets() {
        assert_eq!(
            subsets_of_size(3, 2),
            vec![vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(subsets_of_size(4, 4).len(), 1);
    }

    #[test]
    fn single_particle_is_walk() {
        let model = Model::azrp(0.35).unwrap();
        let y = Configuration::new(vec![2]);
        let t = 0.9;
        for x in -2..7 {
            let r = azrp_mth_particle_distribution(1, &y, x, t, &model, None, Bracket::default())
                .unwrap();
            let want = crate::bethe_engine::transition::transition_probability_auto(
                &model,
                &y,
                &Configuration::new(vec![x]),
                t,
            )
            .unwrap()
            .value;
            assert!((r.value - want).abs() < 1e-10, "{x}: {} vs {want}", r.value);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let model = Model::azrp(0.5).unwrap();
        let y = Configuration::new(vec![0, 0]);
        assert!(azrp_mth_particle_distribution(3, &y, 0, 1.0, &model, None, Bracket::Tau).is_err());
        let asep = Model::asep(0.5).unwrap();
        assert!(azrp_mth_particle_distribution(1, &y, 0, 1.0, &asep, None, Bracket::Tau).is_err());
    }
}
