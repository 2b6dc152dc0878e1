//! Integration contours: origin-centred circles, one radius per variable.
//!
//! The S-matrix denominators are bilinear in a pair of variables, so for a
//! fixed point on one circle the pole in the other variable is a single
//! point. A contour set is admissible when every such pole sits on the side
//! of its circle that the model's integral representation requires. The
//! worst ratio `max(|pole|/r, r/|pole|)` over all pairs controls the
//! geometric convergence rate of the trapezoidal rule.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Bilinear, Model, ModelKind};

/// Default pole ratio targeted when choosing radii.
pub const TARGET_RATIO: f64 = 0.5;
/// Pole ratios tried in turn when a result is not accurate enough. Circles
/// closer to the poles converge more slowly but lose less to round-off when
/// `|xi^(x - y)|` varies strongly over them.
pub const RATIO_LADDER: [f64; 3] = [TARGET_RATIO, 0.7, 0.9];
/// Ratios above this are rejected by certification.
pub const MAX_RATIO: f64 = 0.98;
/// Angle samples per circle during certification (64 x 64 = 4096 pairs).
pub const CERT_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContourMode {
    /// Non-origin poles outside the circles. For PushASEP the circles are
    /// nested, see [`choose_radius`].
    Small,
    /// Poles inside the circles.
    Large,
}

impl std::str::FromStr for ContourMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(ContourMode::Small),
            "large" => Ok(ContourMode::Large),
            other => Err(Error::InvalidParams(format!(
                "unknown contour mode '{other}'"
            ))),
        }
    }
}

/// Quadrature contour plus adaptivity policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    /// One radius per variable; a single entry is used for every variable.
    pub radii: Vec<f64>,
    /// Initial number of trapezoidal nodes per circle (power of two, >= 8).
    pub nodes: usize,
    pub adaptive: bool,
    pub max_nodes: usize,
    pub rel_tol: f64,
    /// Absolute error that is always accepted; zero demands relative accuracy
    /// even for values that vanish.
    #[serde(default)]
    pub abs_tol: f64,
}

impl ContourSpec {
    pub const DEFAULT_NODES: usize = 32;
    pub const DEFAULT_MAX_NODES: usize = 4096;
    pub const DEFAULT_REL_TOL: f64 = 1e-10;

    /// Adaptive contour with the default node policy.
    pub fn new(radii: Vec<f64>) -> Self {
        ContourSpec {
            radii,
            nodes: Self::DEFAULT_NODES,
            adaptive: true,
            max_nodes: Self::DEFAULT_MAX_NODES,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: 0.0,
        }
    }

    /// Non-adaptive rule with exactly `nodes` nodes per circle.
    pub fn fixed(radii: Vec<f64>, nodes: usize) -> Self {
        ContourSpec {
            radii,
            nodes,
            adaptive: false,
            max_nodes: nodes,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: 0.0,
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self.max_nodes = self.max_nodes.max(nodes);
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_nodes(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    pub fn radius(&self, j: usize) -> f64 {
        if self.radii.len() == 1 {
            self.radii[0]
        } else {
            self.radii[j]
        }
    }

    /// Radii expanded to `n` variables.
    pub fn radii_for(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.radius(j)).collect()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.radii.is_empty() || (self.radii.len() != 1 && self.radii.len() != n) {
            return Err(Error::InvalidParams(format!(
                "contour has {} radii for {n} variables",
                self.radii.len()
            )));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "radii must be positive: {:?}",
                self.radii
            )));
        }
        if self.nodes < 8 || !self.nodes.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "nodes = {} must be a power of two >= 8",
                self.nodes
            )));
        }
        if self.max_nodes < self.nodes {
            return Err(Error::InvalidParams("max_nodes < nodes".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParams("rel_tol must be positive".into()));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParams("abs_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// The representation a model supports best. PushASEP only has the nested
/// small representation and ASAP only the large one. ASEP and AZRP admit
/// both; the small one is used when `p >= q`.
pub fn default_mode(model: &Model) -> ContourMode {
    match model.kind() {
        ModelKind::Push => ContourMode::Small,
        ModelKind::Asap => ContourMode::Large,
        _ if model.p() >= model.q() && model.p() > 0.0 => ContourMode::Small,
        _ => ContourMode::Large,
    }
}

/// Mode with the better conditioning for a particular displacement.
/// Exponents `x - y` that are mostly positive favour small circles.
pub fn mode_for_displacement(model: &Model, displacement: i64) -> ContourMode {
    match model.kind() {
        ModelKind::Asep | ModelKind::Azrp => {
            if model.p() == 0.0 {
                ContourMode::Large
            } else if model.q() == 0.0 || displacement >= 0 {
                ContourMode::Small
            } else {
                ContourMode::Large
            }
        }
        _ => default_mode(model),
    }
}

fn supported(model: &Model, mode: ContourMode) -> Result<()> {
    let ok = match (model.kind(), mode) {
        (ModelKind::Push, ContourMode::Large) | (ModelKind::Asap, ContourMode::Small) => false,
        (ModelKind::Asep | ModelKind::Azrp, ContourMode::Small) => model.p() > 0.0,
        (ModelKind::Asep | ModelKind::Azrp, ContourMode::Large) => model.q() > 0.0,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Certification(format!(
            "{} with p={} has no {mode:?}-contour representation",
            model.kind(),
            model.p()
        )))
    }
}

/// Which side of its circle each pole must lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Inside,
    Outside,
}

/// Required sides for (pole in the alpha variable, pole in the beta variable).
fn required_sides(kind: ModelKind, mode: ContourMode) -> (Side, Side) {
    match (kind, mode) {
        (ModelKind::Push, _) => (Side::Outside, Side::Inside),
        (_, ContourMode::Small) => (Side::Outside, Side::Outside),
        (_, ContourMode::Large) => (Side::Inside, Side::Inside),
    }
}

/// Scale used for the denominator clearance test.
fn model_scale(model: &Model) -> f64 {
    match model.kind() {
        ModelKind::Asep | ModelKind::Azrp => model.p().max(f64::MIN_POSITIVE),
        ModelKind::Push | ModelKind::Asap => model.mu(),
    }
}

/// Certification summary for a set of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Worst pole-to-circle ratio over all ordered pairs (< 1 when admissible).
    pub pole_ratio: f64,
    /// Certified lower bound of `|denominator|` over all tori.
    pub min_denominator: f64,
    pub threshold: f64,
}

fn ratio(side: Side, pole: f64, r: f64) -> f64 {
    match side {
        Side::Inside => pole / r,
        Side::Outside => {
            if pole == 0.0 {
                f64::INFINITY
            } else {
                r / pole
            }
        }
    }
}

fn unit(k: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, TAU * k as f64 / n as f64)
}

/// Worst pole ratio for one bilinear denominator and one pair of radii.
fn pair_ratio(den: &Bilinear, ra: f64, rb: f64, sides: (Side, Side)) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..4 * CERT_SAMPLES {
        let w = unit(k, 4 * CERT_SAMPLES);
        // pole in the beta variable with alpha on its circle
        if let Some(z) = den.root_in_b(ra * w) {
            worst = worst.max(ratio(sides.1, z.norm(), rb))
        }
        if let Some(z) = den.root_in_a(rb * w) {
            worst = worst.max(ratio(sides.0, z.norm(), ra))
        }
    }
    // the pole moves on a circle; pad the sampled extreme slightly
    worst * (1.0 + 1e-3)
}

/// Worst pole ratio over all pairs `alpha < beta` for the given radii.
pub fn pole_ratio(model: &Model, radii: &[f64], mode: ContourMode) -> f64 {
    let den = model.s_denominator();
    let sides = required_sides(model.kind(), mode);
    let mut worst: f64 = 0.0;
    for a in 0..radii.len() {
        for b in a + 1..radii.len() {
            worst = worst.max(pair_ratio(&den, radii[a], radii[b], sides));
        }
    }
    worst
}

/// Lower bound of `|D|` on the torus `|xi_a| = ra, |xi_b| = rb`.
///
/// Writing `D = A(xi_a) + B(xi_a) xi_b`, the minimum over the `b` circle is
/// exactly `||A| - |B| rb|`. That function of the `a` angle is sampled at
/// `CERT_SAMPLES^2` points and its Lipschitz constant bounds the gaps.
fn torus_clearance(den: &Bilinear, ra: f64, rb: f64) -> f64 {
    let n = CERT_SAMPLES * CERT_SAMPLES;
    let mut min = f64::INFINITY;
    for i in 0..n {
        let xa = ra * unit(i, n);
        let a = (den.a + den.c * xa).norm();
        let b = (den.d + den.b * xa).norm();
        min = min.min((a - b * rb).abs());
    }
    let lip = (den.c.abs() + den.b.abs() * rb) * ra;
    min - lip * TAU / n as f64 / 2.0
}

/// Certifies radii for `model` in `mode`: every pole on its required side
/// with ratio at most [`MAX_RATIO`] and every denominator at least
/// `0.1 * scale` in modulus on the tori.
pub fn certify(model: &Model, radii: &[f64], mode: ContourMode) -> Result<Certificate> {
    supported(model, mode)?;
    let den = model.s_denominator();
    let threshold = 0.1 * model_scale(model);
    let mut min_den = f64::INFINITY;
    for a in 0..radii.len() {
        for b in a + 1..radii.len() {
            min_den = min_den.min(torus_clearance(&den, radii[a], radii[b]));
        }
    }
    let pole_ratio = pole_ratio(model, radii, mode);
    let cert = Certificate {
        pole_ratio,
        min_denominator: min_den,
        threshold,
    };
    if radii.len() > 1 && (pole_ratio > MAX_RATIO || min_den < threshold) {
        return Err(Error::Certification(format!(
            "radii {radii:?} for {} ({mode:?}): pole ratio {pole_ratio:.3}, min |denominator| {min_den:.3e} (need {threshold:.3e})",
            model.kind()
        )));
    }
    Ok(cert)
}

/// Radius where a monotone ratio function crosses `target`, by bisection in
/// log space on `[lo, hi]`. `increasing` tells the direction of monotonicity.
fn solve_ratio(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64, increasing: bool) -> f64 {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let above = f(m.exp()) > target;
        if above == increasing {
            b = m;
        } else {
            a = m;
        }
    }
    (0.5 * (a + b)).exp()
}

/// Chooses radii for `n` variables.
///
/// Equal radii for ASEP, AZRP and ASAP, placed where the worst pole ratio
/// equals [`TARGET_RATIO`]. For PushASEP a single circle cannot separate the
/// poles for every parameter choice, so the radii grow with the variable
/// index, `r_beta (1 - lambda r_alpha) > mu` for `alpha < beta`; among those
/// chains the one with the largest innermost radius whose ratio stays below
/// the smallest feasible target is used, unless the circles are spread too
/// far apart, in which case larger targets are tried.
pub fn choose_radius(model: &Model, n: usize, mode: ContourMode) -> Result<Vec<f64>> {
    choose_radius_at(model, n, mode, TARGET_RATIO)
}

/// [`choose_radius`] with the pole ratio `target` in place of
/// [`TARGET_RATIO`]. Higher targets put the circles closer to the poles.
pub fn choose_radius_at(
    model: &Model,
    n: usize,
    mode: ContourMode,
    target: f64,
) -> Result<Vec<f64>> {
    supported(model, mode)?;
    if !(target > 0.0 && target <= MAX_RATIO) {
        return Err(Error::InvalidParams(format!(
            "target ratio {target} outside (0, {MAX_RATIO}]"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParams("need at least one variable".into()));
    }
    let radii = match model.kind() {
        ModelKind::Push => push_radii(model, n, target)?,
        _ => {
            let f = |r: f64| pole_ratio(model, &[r, r], mode);
            let r = match mode {
                ContourMode::Small => solve_ratio(f, target, 1e-8, 1e3, true),
                ContourMode::Large => solve_ratio(f, target, 1e-3, 1e8, false),
            };
            vec![r; n]
        }
    };
    if n > 1 {
        certify(model, &radii, mode)?;
    }
    Ok(radii)
}

fn push_chain(model: &Model, r1: f64, rho: f64, n: usize) -> Option<Vec<f64>> {
    let (l, m) = (model.lambda(), model.mu());
    let mut r = vec![r1];
    for _ in 1..n {
        let d = 1.0 - l * r.last().unwrap();
        if d <= 0.0 {
            return None;
        }
        r.push(m / (rho * d));
    }
    (l * r.last().unwrap() < 1.0).then_some(r)
}

/// Spread `max(r) / min(r)` accepted for nested PushASEP radii before a
/// larger pole ratio is tried. Widely spread circles magnify round-off in
/// the monomials `xi^(x - y)`.
const PUSH_SPREAD_LIMIT: f64 = 2.5;

fn spread(r: &[f64]) -> f64 {
    let max = r.iter().copied().fold(0.0, f64::max);
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn push_radii(model: &Model, n: usize, min_target: f64) -> Result<Vec<f64>> {
    let m = model.mu();
    if n == 1 {
        return Ok(vec![m]);
    }
    let targets = [0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.94];
    let chain_rhos = [0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.94];
    let mut fallback: Option<Vec<f64>> = None;
    for target in targets.into_iter().filter(|&t| t >= min_target) {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &rho in &chain_rhos {
            if rho > target {
                continue;
            }
            for k in 0..120 {
                let r1 = m * 3.0 * 0.94f64.powi(k);
                let Some(r) = push_chain(model, r1, rho, n) else {
                    continue;
                };
                let ratio = pole_ratio(model, &r, ContourMode::Small);
                if ratio <= target
                    && best.as_ref().is_none_or(|(b1, _)| r1 > *b1)
                    && certify(model, &r, ContourMode::Small).is_ok()
                {
                    best = Some((r1, r));
                }
            }
        }
        if let Some((_, r)) = best {
            if spread(&r) <= PUSH_SPREAD_LIMIT {
                return Ok(r);
            }
            if fallback.as_ref().is_none_or(|f| spread(&r) < spread(f)) {
                fallback = Some(r);
            }
        }
    }
    fallback.ok_or_else(|| {
        Error::Certification(format!(
            "no nested contour found for PushASEP with lambda={}, mu={m}, N={n}",
            model.lambda()
        ))
    })
}

/// Radius for the marginal integrals: large circles that also enclose the
/// poles at `xi = 1`.
pub fn choose_marginal_radius(model: &Model) -> Result<f64> {
    choose_marginal_radius_at(model, TARGET_RATIO)
}

/// [`choose_marginal_radius`] with the pole ratio `target`.
pub fn choose_marginal_radius_at(model: &Model, target: f64) -> Result<f64> {
    supported(model, ContourMode::Large)?;
    let f = |r: f64| pole_ratio(model, &[r, r], ContourMode::Large).max(1.0 / r);
    Ok(solve_ratio(f, target, 1.0, 1e8, false))
}

/// Contours for one model and particle number, one per rung of
/// [`RATIO_LADDER`] and mode.
#[derive(Debug, Clone)]
pub struct ContourCache {
    model: Model,
    n: usize,
    small: Vec<ContourSpec>,
    large: Vec<ContourSpec>,
}

impl ContourCache {
    pub fn new(model: &Model, n: usize) -> Result<Self> {
        let ladder = |mode| -> Result<Vec<ContourSpec>> {
            if supported(model, mode).is_err() {
                return Ok(Vec::new());
            }
            RATIO_LADDER
                .iter()
                .map(|&r| choose_radius_at(model, n, mode, r).map(ContourSpec::new))
                .collect()
        };
        Ok(ContourCache {
            model: *model,
            n,
            small: ladder(ContourMode::Small)?,
            large: ladder(ContourMode::Large)?,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// All rungs for `mode`, nearest to the origin-default first.
    pub fn ladder(&self, mode: ContourMode) -> Result<&[ContourSpec]> {
        let l = match mode {
            ContourMode::Small => &self.small,
            ContourMode::Large => &self.large,
        };
        if l.is_empty() {
            return Err(Error::Certification(format!(
                "no {mode:?} contour for {}",
                self.model.kind()
            )));
        }
        Ok(l)
    }

    /// First rung for `mode`.
    pub fn spec(&self, mode: ContourMode) -> Result<&ContourSpec> {
        Ok(&self.ladder(mode)?[0])
    }

    /// Rungs for a query; the mode follows the sign of `sum(x) - sum(y)`.
    pub fn ladder_for_query(&self, y: &[i64], x: &[i64]) -> Result<&[ContourSpec]> {
        let disp = x.iter().sum::<i64>() - y.iter().sum::<i64>();
        self.ladder(mode_for_displacement(&self.model, disp))
    }

    pub fn for_query(&self, y: &[i64], x: &[i64]) -> Result<&ContourSpec> {
        Ok(&self.ladder_for_query(y, x)?[0])
    }

    /// Applies `f` to every cached contour.
    pub fn map_specs(mut self, f: impl Fn(ContourSpec) -> ContourSpec) -> Self {
        self.small = self.small.into_iter().map(&f).collect();
        self.large = self.large.into_iter().map(&f).collect();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asep_small_radius_examples() {
        let m = Model::asep(0.5).unwrap();
        assert!(certify(&m, &[0.25, 0.25], ContourMode::Small).is_ok());
        let r = choose_radius(&m, 3, ContourMode::Small).unwrap();
        assert!(r[0] <= 0.25 && r.iter().all(|x| *x == r[0]));
        // a circle through the pole region is rejected
        assert!(certify(&m, &[0.5, 0.5], ContourMode::Small).is_err());
    }

    #[test]
    fn azrp_large_radius_example() {
        let m = Model::azrp(0.5).unwrap();
        assert!(certify(&m, &[4.0, 4.0], ContourMode::Large).is_ok());
        let r = choose_radius(&m, 2, ContourMode::Large).unwrap();
        assert!((pole_ratio(&m, &r, ContourMode::Large) - TARGET_RATIO).abs() < 1e-3);
    }

    #[test]
    fn push_small_radius_example() {
        let m = Model::push(0.5, 0.5).unwrap();
        // pole of the beta variable near mu must be enclosed
        assert!(certify(&m, &[0.1, 0.2], ContourMode::Small).is_err());
        let r = choose_radius(&m, 3, ContourMode::Small).unwrap();
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert!(certify(&m, &r, ContourMode::Small).unwrap().pole_ratio < MAX_RATIO);
        for n in 2..=4 {
            for mu in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let m = Model::push(0.4, mu).unwrap();
                let r = choose_radius(&m, n, ContourMode::Small).unwrap();
                assert_eq!(r.len(), n);
            }
        }
    }

    #[test]
    fn asap_large_radius() {
        for mu in [0.1, 0.4, 0.8] {
            let m = Model::asap(0.6, mu).unwrap();
            let r = choose_radius(&m, 3, ContourMode::Large).unwrap();
            assert!(r[0] > 1.0);
            assert!(choose_radius(&m, 3, ContourMode::Small).is_err());
        }
    }

    #[test]
    fn unsupported_modes() {
        assert!(choose_radius(&Model::push(0.5, 0.5).unwrap(), 2, ContourMode::Large).is_err());
        assert!(choose_radius(&Model::asep(0.0).unwrap(), 2, ContourMode::Small).is_err());
        assert!(choose_radius(&Model::asep(1.0).unwrap(), 2, ContourMode::Large).is_err());
        assert_eq!(default_mode(&Model::asep(0.0).unwrap()), ContourMode::Large);
    }

    #[test]
    fn marginal_radius_encloses_unit_pole() {
        let m = Model::azrp(0.3).unwrap();
        let r = choose_marginal_radius(&m).unwrap();
        assert!(r >= 2.0 - 1e-9);
        assert!(pole_ratio(&m, &[r, r], ContourMode::Large) <= TARGET_RATIO + 1e-6);
    }

    #[test]
    fn spec_validation() {
        assert!(ContourSpec::new(vec![0.2]).validate(3).is_ok());
        assert!(ContourSpec::new(vec![0.2, 0.3]).validate(3).is_err());
        assert!(ContourSpec::fixed(vec![0.2], 12).validate(1).is_err());
        assert!(ContourSpec::new(vec![-1.0]).validate(1).is_err());
    }
}
