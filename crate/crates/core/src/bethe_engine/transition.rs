//! The permutation-sum contour integral for `P_Y(X; t)` and its relatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::contour::{
    choose_radius_at, mode_for_displacement, ContourCache, ContourSpec, RATIO_LADDER, TARGET_RATIO,
};
use super::permutations::{permutations_with_inversions, PermutationTerm};
use super::quadrature::{contract, Evaluation, Grid, PairTable, Term, WORK_LIMIT};
use crate::error::{Error, Result};
use crate::models::{Configuration, Model};

/// Cancellation ratio above which a value is flagged as untrustworthy.
pub const CANCELLATION_WARNING: f64 = 1e12;

/// Complex value of a contour integral with its error bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub re: f64,
    pub im: f64,
    /// `|I_M - I_{M/2}|` plus the round-off bound and the imaginary residue.
    pub abs_error_estimate: f64,
    /// `|I_M - I_{M/2}|` plus the imaginary residue. Usually far below
    /// `abs_error_estimate`, whose round-off bound is a worst case.
    #[serde(default)]
    pub observed_error: f64,
    /// Largest integrand magnitude on the grid divided by `|value|`.
    pub cancellation: f64,
    pub nodes_used: usize,
    pub converged: bool,
}

impl IntegralResult {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn from_eval(ev: &Evaluation, converged: bool) -> Self {
        IntegralResult {
            re: ev.value.re,
            im: ev.value.im,
            abs_error_estimate: ev.abs_error(),
            observed_error: ev.observed_error(),
            cancellation: ev.max_integrand / ev.value.norm().max(f64::MIN_POSITIVE),
            nodes_used: ev.m,
            converged,
        }
    }
}

/// A real probability (or value of the continuation `u`) with error bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    #[serde(default)]
    pub observed_error: f64,
    pub cancellation: f64,
    pub nodes_used: usize,
    pub converged: bool,
    /// Set when `cancellation` exceeds [`CANCELLATION_WARNING`].
    pub precision_warning: bool,
}

impl From<IntegralResult> for ProbabilityResult {
    fn from(r: IntegralResult) -> Self {
        ProbabilityResult {
            value: r.re,
            abs_error_estimate: r.abs_error_estimate,
            observed_error: r.observed_error,
            cancellation: r.cancellation,
            nodes_used: r.nodes_used,
            converged: r.converged,
            precision_warning: r.cancellation > CANCELLATION_WARNING,
        }
    }
}

/// Runs `eval` on grids of `spec.nodes, 2 spec.nodes, ...` until the full
/// and half-grid values agree to `rel_tol * max(|value|, floor)`, to
/// `abs_tol`, or to the round-off level for values that are zero up to
/// rounding.
pub(crate) fn adaptive<F>(
    spec: &ContourSpec,
    dim: usize,
    terms_per_grid: usize,
    floor: f64,
    mut eval: F,
) -> Result<IntegralResult>
where
    F: FnMut(&Grid) -> Result<Evaluation>,
{
    spec.validate(dim)?;
    let radii = spec.radii_for(dim);
    let mut m = spec.nodes;
    loop {
        let work = terms_per_grid as f64 * (m as f64).powi(dim as i32);
        if work > WORK_LIMIT {
            return Err(Error::Resource(format!(
                "{terms_per_grid} terms on a {m}^{dim} grid exceeds the work limit"
            )));
        }
        let grid = Grid::new(radii.clone(), m);
        let ev = eval(&grid)?;
        let ok = ev.difference()
            <= (spec.rel_tol * ev.value.norm().max(floor))
                .max(spec.abs_tol)
                .max(ev.noise);
        if ok || !spec.adaptive {
            return Ok(IntegralResult::from_eval(&ev, ok));
        }
        let next = 2 * m;
        let next_work = terms_per_grid as f64 * (next as f64).powi(dim as i32);
        if next > spec.max_nodes || next_work > WORK_LIMIT {
            return Err(Error::NonConvergence {
                previous: ev.half_value.re,
                last: ev.value.re,
                nodes: m,
            });
        }
        m = next;
    }
}

fn check_inputs(model: &Model, y: &Configuration, x: &Configuration, t: f64) -> Result<()> {
    if y.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidConfiguration(format!(
            "Y has {} particles, X has {}",
            y.len(),
            x.len()
        )));
    }
    if !y.is_physical(model.kind()) {
        return Err(Error::InvalidConfiguration(format!(
            "Y = {y} is not physical for {}",
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

/// Two-body factor `S_{beta alpha}(xi_alpha, xi_beta)`.
pub type SMatrixFn<'a> = &'a (dyn Fn(Complex64, Complex64) -> Result<Complex64> + Sync);

/// S-matrix tables `S_{b a}(xi_a, xi_b)` for every pair `a < b` (0-based).
fn s_tables(s: SMatrixFn<'_>, grid: &Grid) -> Result<Vec<Vec<Option<PairTable>>>> {
    let n = grid.dim();
    let mut tables = vec![vec![None; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            tables[a][b] = Some(grid.pair_table(a, b, s)?);
        }
    }
    Ok(tables)
}

/// `w[j][i][k] = xi_{j,k}^{x_i - y_j} exp(t eps(xi_{j,k})) / M`, optionally
/// times `eps(xi_{j,k})`.
fn weights(
    model: &Model,
    grid: &Grid,
    y: &[i64],
    x: &[i64],
    t: f64,
    with_energy: bool,
) -> Vec<Vec<Vec<Complex64>>> {
    let n = grid.dim();
    let inv_m = 1.0 / grid.m as f64;
    (0..n)
        .map(|j| {
            let scale: Vec<Complex64> = grid
                .nodes(j)
                .into_iter()
                .map(|z| {
                    let e = model.energy_unchecked(z);
                    let base = (e * t).exp() * inv_m;
                    if with_energy {
                        base * e
                    } else {
                        base
                    }
                })
                .collect();
            (0..n)
                .map(|i| {
                    grid.powers(j, x[i] - y[j])
                        .into_iter()
                        .zip(&scale)
                        .map(|(p, s)| p * s)
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Kind of integrand assembled by [`bethe_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Insert {
    Plain,
    /// Multiply by `sum_j eps(xi_j)`, i.e. differentiate in `t`.
    Energy,
}

#[allow(clippy::too_many_arguments)]
fn bethe_integral(
    model: &Model,
    s: SMatrixFn<'_>,
    y: &[i64],
    x: &[i64],
    t: f64,
    perms: &[PermutationTerm],
    insert: Insert,
    spec: &ContourSpec,
) -> Result<IntegralResult> {
    let n = y.len();
    let per_perm = if insert == Insert::Energy { n } else { 1 };
    adaptive(spec, n, perms.len() * per_perm, 1e-300, |grid| {
        let tables = s_tables(s, grid)?;
        let plain = weights(model, grid, y, x, t, false);
        let energy = (insert == Insert::Energy).then(|| weights(model, grid, y, x, t, true));
        let mut terms = Vec::with_capacity(perms.len() * per_perm);
        for perm in perms {
            let pos = perm.inverse();
            let pairs: Vec<(usize, usize, &PairTable)> = perm
                .inversions
                .iter()
                .map(|&(b, a)| {
                    (
                        a - 1,
                        b - 1,
                        tables[a - 1][b - 1].as_ref().expect("table for a < b"),
                    )
                })
                .collect();
            match &energy {
                None => {
                    let w = (0..n).map(|j| plain[j][pos[j]].as_slice()).collect();
                    terms.push(Term { weights: w, pairs });
                }
                Some(en) => {
                    for hot in 0..n {
                        let w = (0..n)
                            .map(|j| {
                                if j == hot {
                                    en[j][pos[j]].as_slice()
                                } else {
                                    plain[j][pos[j]].as_slice()
                                }
                            })
                            .collect();
                        terms.push(Term {
                            weights: w,
                            pairs: pairs.clone(),
                        });
                    }
                }
            }
        }
        Ok(Evaluation::from_acc(contract(&terms, grid.m), grid.m, n))
    })
}

/// `P_Y(X; t)` by the trapezoidal rule on the contour `spec`.
///
/// `X` may be any lattice point; outside the physical region the value is
/// the analytic continuation `u(X; t)` used by the boundary conditions.
pub fn transition_probability(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    t: f64,
    spec: &ContourSpec,
) -> Result<ProbabilityResult> {
    check_inputs(model, y, x, t)?;
    let perms = permutations_with_inversions(y.len())?;
    bethe_integral(
        model,
        &|a, b| model.s_matrix(a, b),
        y.positions(),
        x.positions(),
        t,
        &perms,
        Insert::Plain,
        spec,
    )
    .map(Into::into)
}

/// [`transition_probability`] with the two-body factor replaced by `s`;
/// `model` still supplies the energy and the physical region of `Y`.
pub fn transition_probability_with_s(
    model: &Model,
    s: SMatrixFn<'_>,
    y: &Configuration,
    x: &Configuration,
    t: f64,
    spec: &ContourSpec,
) -> Result<ProbabilityResult> {
    check_inputs(model, y, x, t)?;
    let perms = permutations_with_inversions(y.len())?;
    bethe_integral(
        model,
        s,
        y.positions(),
        x.positions(),
        t,
        &perms,
        Insert::Plain,
        spec,
    )
    .map(Into::into)
}

/// `d/dt P_Y(X; t)`, obtained by inserting `sum_j eps(xi_j)` under the integral.
pub fn time_derivative(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    t: f64,
    spec: &ContourSpec,
) -> Result<ProbabilityResult> {
    check_inputs(model, y, x, t)?;
    let perms = permutations_with_inversions(y.len())?;
    bethe_integral(
        model,
        &|a, b| model.s_matrix(a, b),
        y.positions(),
        x.positions(),
        t,
        &perms,
        Insert::Energy,
        spec,
    )
    .map(Into::into)
}

/// The single-permutation integral `I(sigma)` at `t = 0`.
pub fn i_sigma_at_t0(
    model: &Model,
    term: &PermutationTerm,
    y: &Configuration,
    x: &Configuration,
    spec: &ContourSpec,
) -> Result<IntegralResult> {
    check_inputs(model, y, x, 0.0)?;
    if term.len() != y.len() {
        return Err(Error::Domain(format!(
            "permutation of {} for {} particles",
            term.len(),
            y.len()
        )));
    }
    bethe_integral(
        model,
        &|a, b| model.s_matrix(a, b),
        y.positions(),
        x.positions(),
        0.0,
        std::slice::from_ref(term),
        Insert::Plain,
        spec,
    )
}

/// Contour chosen for a query: the mode follows the sign of
/// `sum(x) - sum(y)` where the model allows both.
pub fn auto_contour(model: &Model, y: &Configuration, x: &Configuration) -> Result<ContourSpec> {
    auto_contour_at(model, y, x, TARGET_RATIO)
}

fn auto_contour_at(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    ratio: f64,
) -> Result<ContourSpec> {
    let disp: i64 = x.positions().iter().sum::<i64>() - y.positions().iter().sum::<i64>();
    let mode = mode_for_displacement(model, disp);
    Ok(ContourSpec::new(choose_radius_at(
        model,
        y.len(),
        mode,
        ratio,
    )?))
}

/// Relative observed error accepted without trying a wider contour.
/// Observed error is the last doubling difference plus the imaginary
/// residue; the round-off bound is too pessimistic to drive escalation.
pub const ESCALATION_REL: f64 = 1e-8;
/// Absolute observed error that is always accepted.
pub const ESCALATION_FLOOR: f64 = 1e-15;

pub(crate) fn good_enough(r: &ProbabilityResult, spec: &ContourSpec) -> bool {
    r.observed_error
        <= spec
            .abs_tol
            .max(ESCALATION_REL * r.value.abs())
            .max(ESCALATION_FLOOR)
}

/// Evaluates on each contour in turn and stops at the first result whose
/// error estimate meets the contour's `abs_tol` or [`ESCALATION_REL`].
/// Otherwise the result with the smallest estimate is returned.
fn escalate(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    t: f64,
    ladder: impl IntoIterator<Item = Result<ContourSpec>>,
) -> Result<ProbabilityResult> {
    let mut best: Option<ProbabilityResult> = None;
    let mut last_err = None;
    for spec in ladder {
        let r = spec.and_then(|spec| {
            transition_probability(model, y, x, t, &spec).map(|r| (good_enough(&r, &spec), r))
        });
        match r {
            Ok((true, r)) => return Ok(r),
            Ok((false, r)) => {
                if best.is_none_or(|b| r.abs_error_estimate < b.abs_error_estimate) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("the ladder is not empty"))
}

/// [`transition_probability`] on the contours of `cache`, escalating
/// through its ladder as needed.
pub fn transition_probability_cached(
    cache: &ContourCache,
    y: &Configuration,
    x: &Configuration,
    t: f64,
) -> Result<ProbabilityResult> {
    let ladder = cache.ladder_for_query(y.positions(), x.positions())?;
    escalate(cache.model(), y, x, t, ladder.iter().cloned().map(Ok))
}

/// [`transition_probability`] on automatically chosen contours, with
/// results accepted once their error estimate is below `abs_tol`.
pub fn transition_probability_auto_tol(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    t: f64,
    abs_tol: f64,
) -> Result<ProbabilityResult> {
    // radii of the later rungs are only chosen when needed
    let ladder = RATIO_LADDER
        .iter()
        .map(|&r| auto_contour_at(model, y, x, r).map(|s| s.with_abs_tol(abs_tol)));
    escalate(model, y, x, t, ladder)
}

/// [`transition_probability_auto_tol`] with no absolute tolerance.
pub fn transition_probability_auto(
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    t: f64,
) -> Result<ProbabilityResult> {
    transition_probability_auto_tol(model, y, x, t, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe_engine::contour::{choose_radius, ContourMode};
    use crate::models::ModelKind;

    fn cfg(v: &[i64]) -> Configuration {
        Configuration::new(v.to_vec())
    }

    /// Asymmetric walk: `e^{-t} sum_k (pt)^(k+m) (qt)^k / ((k+m)! k!)`.
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
    fn single_particle_matches_walk() {
        for kind in ModelKind::ALL {
            let model = match kind {
                ModelKind::Push => Model::push(0.7, 0.4).unwrap(),
                ModelKind::Asap => Model::asap(0.7, 0.4).unwrap(),
                _ => Model::new(kind, crate::models::ModelParams::hopping(0.7)).unwrap(),
            };
            for m in [-3i64, 0, 2, 5] {
                let r = transition_probability_auto(&model, &cfg(&[0]), &cfg(&[m]), 1.3).unwrap();
                assert!(
                    (r.value - walk(0.7, 1.3, m)).abs() < 1e-12,
                    "{kind} {m}: {}",
                    r.value
                );
            }
        }
    }

    #[test]
    fn delta_at_time_zero() {
        let model = Model::asep(0.6).unwrap();
        let y = cfg(&[0, 2]);
        let spec = ContourSpec::new(choose_radius(&model, 2, ContourMode::Small).unwrap());
        let same = transition_probability(&model, &y, &y, 0.0, &spec).unwrap();
        assert!((same.value - 1.0).abs() < 1e-12);
        let other = transition_probability(&model, &y, &cfg(&[1, 2]), 0.0, &spec).unwrap();
        assert!(other.value.abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let model = Model::azrp(0.4).unwrap();
        let (y, x) = (cfg(&[0, 0]), cfg(&[0, 1]));
        let spec = auto_contour(&model, &y, &x).unwrap();
        let d = time_derivative(&model, &y, &x, 0.7, &spec).unwrap().value;
        let h = 1e-4;
        let f = |t| {
            transition_probability(&model, &y, &x, t, &spec)
                .unwrap()
                .value
        };
        let fd = (f(0.7 + h) - f(0.7 - h)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-7, "{d} vs {fd}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = Model::asep(0.5).unwrap();
        let spec = ContourSpec::new(vec![0.2]);
        assert!(transition_probability(&model, &cfg(&[1, 1]), &cfg(&[0, 1]), 1.0, &spec).is_err());
        assert!(transition_probability(&model, &cfg(&[0, 1]), &cfg(&[0]), 1.0, &spec).is_err());
        assert!(transition_probability(&model, &cfg(&[0, 1]), &cfg(&[0, 1]), -1.0, &spec).is_err());
    }
}
