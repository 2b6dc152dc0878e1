//! Model definitions: parameters, rates, physical regions, energy and the
//! two-particle S-matrices.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `p + q = 1` and `lambda + mu = 1`.
pub const PARAM_TOL: f64 = 1e-12;

/// Relative threshold below which an S-matrix denominator counts as a pole.
pub const POLE_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Asep,
    /// Two-sided PushASEP.
    Push,
    Asap,
    Azrp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Asep,
        ModelKind::Push,
        ModelKind::Asap,
        ModelKind::Azrp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Asep => "asep",
            ModelKind::Push => "push",
            ModelKind::Asap => "asap",
            ModelKind::Azrp => "azrp",
        }
    }

    /// Strict ordering for the exclusion-type models, weak ordering for AZRP.
    pub fn is_physical(self, positions: &[i64]) -> bool {
        match self {
            ModelKind::Azrp => positions.windows(2).all(|w| w[0] <= w[1]),
            _ => positions.windows(2).all(|w| w[0] < w[1]),
        }
    }

    pub fn uses_lambda_mu(self) -> bool {
        matches!(self, ModelKind::Push | ModelKind::Asap)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asep" => Ok(ModelKind::Asep),
            "push" | "pushasep" | "two-sided-pushasep" => Ok(ModelKind::Push),
            "asap" => Ok(ModelKind::Asap),
            "azrp" => Ok(ModelKind::Azrp),
            other => Err(Error::InvalidParams(format!("unknown model '{other}'"))),
        }
    }
}

/// Raw parameter record. Validation happens in [`Model::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl ModelParams {
    pub fn new(p: f64, q: f64, lambda: Option<f64>, mu: Option<f64>) -> Self {
        ModelParams { p, q, lambda, mu }
    }

    /// `q = 1 - p`, no pushing/avalanche parameters.
    pub fn hopping(p: f64) -> Self {
        ModelParams {
            p,
            q: 1.0 - p,
            lambda: None,
            mu: None,
        }
    }

    /// `q = 1 - p`, `lambda = 1 - mu`.
    pub fn with_mu(p: f64, mu: f64) -> Self {
        ModelParams {
            p,
            q: 1.0 - p,
            lambda: Some(1.0 - mu),
            mu: Some(mu),
        }
    }
}

/// Direction of a PushASEP block move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

/// Coefficients of a bilinear form `a + b*xa*xb + c*xa + d*xb`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bilinear {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Bilinear {
    #[inline]
    pub fn eval(&self, xa: Complex64, xb: Complex64) -> Complex64 {
        self.a + self.b * xa * xb + self.c * xa + self.d * xb
    }

    /// Root in `xb` for fixed `xa`, if the coefficient of `xb` does not vanish.
    pub fn root_in_b(&self, xa: Complex64) -> Option<Complex64> {
        let lin = self.b * xa + self.d;
        (lin.norm() > 0.0).then(|| -(self.a + self.c * xa) / lin)
    }

    /// Root in `xa` for fixed `xb`.
    pub fn root_in_a(&self, xb: Complex64) -> Option<Complex64> {
        let lin = self.b * xb + self.c;
        (lin.norm() > 0.0).then(|| -(self.a + self.d * xb) / lin)
    }
}

/// Monomial prefactor of an S-matrix: `(xa/xb)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefactor {
    One,
    /// `xb / xa` (PushASEP).
    BetaOverAlpha,
    /// `xa / xb` (AZRP).
    AlphaOverBeta,
}

/// An S-matrix split into its monomial prefactor and the reduced rational
/// part (the dagger part for PushASEP, the double-dagger part for AZRP).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SParts {
    pub prefactor: Complex64,
    pub reduced: Complex64,
}

impl SParts {
    pub fn value(&self) -> Complex64 {
        self.prefactor * self.reduced
    }
}

/// A validated model: kind plus parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    kind: ModelKind,
    params: ModelParams,
}

impl Model {
    pub fn new(kind: ModelKind, params: ModelParams) -> Result<Self> {
        let ModelParams { p, q, lambda, mu } = params;
        if !(p.is_finite() && q.is_finite()) || p < 0.0 || q < 0.0 {
            return Err(Error::InvalidParams(format!(
                "p={p}, q={q} must be finite and nonnegative"
            )));
        }
        if (p + q - 1.0).abs() > PARAM_TOL {
            return Err(Error::InvalidParams(format!("p + q = {} != 1", p + q)));
        }
        let params = if kind.uses_lambda_mu() {
            let (lambda, mu) = match (lambda, mu) {
                (Some(l), Some(m)) => (l, m),
                (Some(l), None) => (l, 1.0 - l),
                (None, Some(m)) => (1.0 - m, m),
                (None, None) => {
                    return Err(Error::InvalidParams(format!(
                        "model {kind} needs lambda/mu"
                    )))
                }
            };
            if !(lambda.is_finite() && mu.is_finite()) || (lambda + mu - 1.0).abs() > PARAM_TOL {
                return Err(Error::InvalidParams(format!(
                    "lambda + mu = {} != 1",
                    lambda + mu
                )));
            }
            match kind {
                ModelKind::Push if lambda == 0.0 || mu == 0.0 => {
                    return Err(Error::InvalidParams(
                        "PushASEP needs nonzero lambda and mu".into(),
                    ))
                }
                ModelKind::Asap if !(mu > 0.0 && mu < 1.0) => {
                    return Err(Error::InvalidParams(format!(
                        "ASAP needs 0 < mu < 1, got {mu}"
                    )))
                }
                _ => {}
            }
            ModelParams {
                p,
                q,
                lambda: Some(lambda),
                mu: Some(mu),
            }
        } else {
            ModelParams {
                p,
                q,
                lambda: None,
                mu: None,
            }
        };
        Ok(Model { kind, params })
    }

    pub fn asep(p: f64) -> Result<Self> {
        Model::new(ModelKind::Asep, ModelParams::hopping(p))
    }

    pub fn azrp(p: f64) -> Result<Self> {
        Model::new(ModelKind::Azrp, ModelParams::hopping(p))
    }

    pub fn push(p: f64, mu: f64) -> Result<Self> {
        Model::new(ModelKind::Push, ModelParams::with_mu(p, mu))
    }

    pub fn asap(p: f64, mu: f64) -> Result<Self> {
        Model::new(ModelKind::Asap, ModelParams::with_mu(p, mu))
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn q(&self) -> f64 {
        self.params.q
    }

    /// Zero for models without pushing/avalanche parameters.
    pub fn lambda(&self) -> f64 {
        self.params.lambda.unwrap_or(0.0)
    }

    pub fn mu(&self) -> f64 {
        self.params.mu.unwrap_or(0.0)
    }

    /// `eps(xi) = p/xi + q*xi - 1`.
    pub fn energy(&self, xi: Complex64) -> Result<Complex64> {
        if xi == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("energy is singular at xi = 0".into()));
        }
        Ok(self.energy_unchecked(xi))
    }

    #[inline]
    pub fn energy_unchecked(&self, xi: Complex64) -> Complex64 {
        self.params.p / xi + self.params.q * xi - 1.0
    }

    /// Denominator of the reduced S-matrix as a bilinear form in `(xi_a, xi_b)`.
    pub fn s_denominator(&self) -> Bilinear {
        let (p, q, l, m) = (self.p(), self.q(), self.lambda(), self.mu());
        match self.kind {
            ModelKind::Asep | ModelKind::Azrp => Bilinear {
                a: p,
                b: q,
                c: -1.0,
                d: 0.0,
            },
            ModelKind::Push => Bilinear {
                a: m,
                b: l,
                c: 0.0,
                d: -1.0,
            },
            ModelKind::Asap => Bilinear {
                a: m,
                b: -1.0,
                c: l,
                d: 0.0,
            },
        }
    }

    /// Numerator of the reduced S-matrix (without the leading minus sign).
    pub fn s_numerator(&self) -> Bilinear {
        let (p, q, l, m) = (self.p(), self.q(), self.lambda(), self.mu());
        match self.kind {
            ModelKind::Asep | ModelKind::Azrp => Bilinear {
                a: p,
                b: q,
                c: 0.0,
                d: -1.0,
            },
            ModelKind::Push => Bilinear {
                a: m,
                b: l,
                c: -1.0,
                d: 0.0,
            },
            ModelKind::Asap => Bilinear {
                a: m,
                b: -1.0,
                c: 0.0,
                d: l,
            },
        }
    }

    pub fn s_prefactor(&self) -> Prefactor {
        match self.kind {
            ModelKind::Push => Prefactor::BetaOverAlpha,
            ModelKind::Azrp => Prefactor::AlphaOverBeta,
            _ => Prefactor::One,
        }
    }

    /// `S_{beta alpha}(xi_alpha, xi_beta)` split into prefactor and reduced part.
    pub fn s_parts(&self, xa: Complex64, xb: Complex64) -> Result<SParts> {
        let num = self.s_numerator().eval(xa, xb);
        let den = self.s_denominator().eval(xa, xb);
        if den.norm() < POLE_THRESHOLD * (1.0 + num.norm()) {
            return Err(Error::Pole {
                denominator: den.norm(),
                numerator: num.norm(),
            });
        }
        let prefactor = match self.s_prefactor() {
            Prefactor::One => Complex64::new(1.0, 0.0),
            Prefactor::BetaOverAlpha => xb / xa,
            Prefactor::AlphaOverBeta => xa / xb,
        };
        Ok(SParts {
            prefactor,
            reduced: -num / den,
        })
    }

    /// `S_{beta alpha}(xi_alpha, xi_beta)` with `(alpha, beta) -> (xa, xb)`.
    pub fn s_matrix(&self, xa: Complex64, xb: Complex64) -> Result<Complex64> {
        self.s_parts(xa, xb).map(|s| s.value())
    }

    /// PushASEP block rate `r_n` (right) or `l_n` (left).
    pub fn push_rate(&self, n: usize, direction: Direction) -> Result<f64> {
        if self.kind != ModelKind::Push {
            return Err(Error::Domain(format!(
                "push rates are defined for PushASEP, not {}",
                self.kind
            )));
        }
        if n == 0 {
            return Err(Error::Domain("block size must be positive".into()));
        }
        let (l, m) = (self.lambda(), self.mu());
        // ratio of the geometric series is lambda/mu (right) or mu/lambda (left)
        let (num, den) = match direction {
            Direction::Right => (l, m),
            Direction::Left => (m, l),
        };
        Ok(1.0 / geometric_sum(num, den, n))
    }

    /// Avalanche branch probabilities `(mu_n, lambda_n)` for a pile of `n >= 2`.
    pub fn avalanche_probs(&self, n: usize) -> Result<(f64, f64)> {
        if self.kind != ModelKind::Asap {
            return Err(Error::Domain(format!(
                "avalanches are defined for ASAP, not {}",
                self.kind
            )));
        }
        avalanche_probs(n, self.mu())
    }

    /// ASEP-form parameters `(p', q') = (-mu/lambda, 1/lambda)` whose ASEP
    /// S-matrix coincides with the ASAP one.
    pub fn asap_as_asep_params(&self) -> Result<(f64, f64)> {
        if self.kind != ModelKind::Asap {
            return Err(Error::Domain("substitution applies to ASAP only".into()));
        }
        Ok((-self.mu() / self.lambda(), 1.0 / self.lambda()))
    }
}

/// `sum_{k=0}^{n-1} (num/den)^k`, evaluated without cancellation near ratio 1.
fn geometric_sum(num: f64, den: f64, n: usize) -> f64 {
    let d = (num - den) / den;
    if d == 0.0 {
        return n as f64;
    }
    (n as f64 * d.ln_1p()).exp_m1() / d
}

/// `(mu_n, 1 - mu_n)` with `mu_n = mu (1 - (-mu)^(n-1)) / (1 + mu)`.
pub fn avalanche_probs(n: usize, mu: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "avalanche pile size must be >= 2, got {n}"
        )));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!(
            "avalanche needs 0 < mu < 1, got {mu}"
        )));
    }
    let mu_n = mu * (1.0 - (-mu).powi(n as i32 - 1)) / (1.0 + mu);
    Ok((mu_n, 1.0 - mu_n))
}

/// ASEP S-matrix with arbitrary real `(p, q)`; used for the ASAP substitution.
pub fn asep_form_s_matrix(p: f64, q: f64, xa: Complex64, xb: Complex64) -> Complex64 {
    -(p + q * xa * xb - xb) / (p + q * xa * xb - xa)
}

/// Ordered particle positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    positions: Vec<i64>,
}

impl Configuration {
    pub fn new(positions: Vec<i64>) -> Self {
        Configuration { positions }
    }

    /// Builds a configuration and checks it lies in the physical region of `kind`.
    pub fn physical(kind: ModelKind, positions: Vec<i64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidConfiguration(
                "configuration has no particles".into(),
            ));
        }
        if !kind.is_physical(&positions) {
            return Err(Error::InvalidConfiguration(format!(
                "{positions:?} is not in the physical region of {kind}"
            )));
        }
        Ok(Configuration { positions })
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_physical(&self, kind: ModelKind) -> bool {
        kind.is_physical(&self.positions)
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.positions
    }
}

impl From<Vec<i64>> for Configuration {
    fn from(v: Vec<i64>) -> Self {
        Configuration::new(v)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.positions.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for Configuration {
    type Err = Error;

    /// Parses comma-separated integers, e.g. `0,1,-3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        if s.is_empty() {
            return Err(Error::InvalidConfiguration("empty configuration".into()));
        }
        s.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::InvalidConfiguration(format!("bad site '{tok}': {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration::new)
    }
}

pub fn is_physical(kind: ModelKind, x: &Configuration) -> bool {
    x.is_physical(kind)
}
