//! Named checks with their default sizes and tolerances.

use std::fmt;
use std::str::FromStr;

use super::identities::*;
use super::lemmas::{check_inversion_monomial, check_lemmas};
use super::oracle_checks::*;
use super::performance::check_performance;
use super::report::CheckReport;
use super::sampling::DEFAULT_SEED;
use super::subject::Subject;
use crate::bethe_engine::Bracket;
use crate::error::Error;
use crate::models::{Model, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckName {
    Oracle,
    Delta,
    Walk,
    Normalization,
    Boundary,
    Forward,
    Lemmas,
    Monomial,
    Bijection,
    Marginal,
    Substitution,
    MonteCarlo,
    Performance,
}

impl CheckName {
    pub const ALL: [CheckName; 13] = [
        CheckName::Oracle,
        CheckName::Delta,
        CheckName::Walk,
        CheckName::Normalization,
        CheckName::Boundary,
        CheckName::Forward,
        CheckName::Lemmas,
        CheckName::Monomial,
        CheckName::Bijection,
        CheckName::Marginal,
        CheckName::Substitution,
        CheckName::MonteCarlo,
        CheckName::Performance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::Oracle => "oracle",
            CheckName::Delta => "delta",
            CheckName::Walk => "walk",
            CheckName::Normalization => "normalization",
            CheckName::Boundary => "boundary",
            CheckName::Forward => "forward",
            CheckName::Lemmas => "lemmas",
            CheckName::Monomial => "monomial",
            CheckName::Bijection => "bijection",
            CheckName::Marginal => "marginal",
            CheckName::Substitution => "substitution",
            CheckName::MonteCarlo => "monte-carlo",
            CheckName::Performance => "performance",
        }
    }

    /// The statement the check exercises.
    pub fn claim(self) -> &'static str {
        match self {
            CheckName::Oracle => "integral formula equals the law of the chain",
            CheckName::Delta => "integral formula at t = 0 is the delta function",
            CheckName::Walk => "one particle performs the asymmetric walk",
            CheckName::Normalization => "probabilities sum to one",
            CheckName::Boundary => {
                "two-particle boundary conditions, including the unrolled ASAP form"
            }
            CheckName::Forward => "free forward equation on the whole lattice",
            CheckName::Lemmas => "single-permutation integrals vanish or cancel in pairs",
            CheckName::Monomial => "product over inversions equals the displacement monomial",
            CheckName::Bijection => "AZRP and ASEP probabilities agree under the shift map",
            CheckName::Marginal => "m-th particle formula equals the configuration sum",
            CheckName::Substitution => "ASAP is ASEP with p -> -mu/lambda, q -> 1/lambda",
            CheckName::MonteCarlo => "Gillespie samples follow the oracle law",
            CheckName::Performance => "four-particle evaluation time and parallel speedup",
        }
    }

    /// Models the check applies to.
    pub fn applies_to(self, kind: ModelKind) -> bool {
        match self {
            CheckName::Bijection | CheckName::Marginal => kind == ModelKind::Azrp,
            CheckName::Substitution => kind == ModelKind::Asap,
            _ => true,
        }
    }

    /// Whether the check runs once rather than per model.
    pub fn model_free(self) -> bool {
        matches!(self, CheckName::Monomial | CheckName::Performance)
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        CheckName::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown check '{s}'")))
    }
}

/// Overrides for [`run_check`]. Unset fields take the defaults of each check.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Fixed model; otherwise parameters are drawn at random for every kind
    /// in `kinds`.
    pub model: Option<Model>,
    pub kinds: Vec<ModelKind>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: DEFAULT_SEED,
            model: None,
            kinds: ModelKind::ALL.to_vec(),
            n: None,
            trials: None,
            tol: None,
        }
    }
}

impl SuiteOptions {
    fn subjects(&self) -> Vec<Subject> {
        match self.model {
            Some(m) => vec![Subject::Fixed(m)],
            None => self.kinds.iter().map(|&k| Subject::Random(k)).collect(),
        }
    }

    fn sizes(&self, default: &[usize]) -> Vec<usize> {
        self.n.map(|n| vec![n]).unwrap_or_else(|| default.to_vec())
    }

    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// Distinct seed per (check, kind, N) so that reports do not share draws.
    fn seed_for(&self, check: CheckName, kind: ModelKind, n: usize) -> u64 {
        let k = ModelKind::ALL.iter().position(|&x| x == kind).unwrap_or(0) as u64;
        self.seed ^ ((check as u64) << 32 | k << 16 | n as u64)
    }
}

/// Runs one named check for every applicable subject and particle number.
pub fn run_check(check: CheckName, opts: &SuiteOptions) -> Vec<CheckReport> {
    let mut out = Vec::new();
    match check {
        CheckName::Monomial => {
            return vec![check_inversion_monomial(
                opts.n.unwrap_or(4),
                opts.trials(10),
                opts.tol(1e-12),
                opts.seed,
            )];
        }
        CheckName::Performance => return check_performance(32, 4, 10.0, 2.0),
        _ => {}
    }
    for subject in opts
        .subjects()
        .into_iter()
        .filter(|s| check.applies_to(s.kind()))
    {
        let kind = subject.kind();
        let seed = |n| opts.seed_for(check, kind, n);
        match check {
            CheckName::Oracle => {
                for n in opts.sizes(&[2, 3]) {
                    let tol = opts.tol(if n <= 2 { 1e-8 } else { 1e-6 });
                    out.push(check_oracle_agreement(
                        subject,
                        n,
                        opts.trials(20),
                        2.0,
                        tol,
                        seed(n),
                    ));
                }
            }
            CheckName::Delta => {
                for n in opts.sizes(&[1, 2, 3]) {
                    out.push(check_delta(
                        subject,
                        n,
                        4,
                        opts.trials(1),
                        opts.tol(1e-9),
                        seed(n),
                    ));
                }
            }
            CheckName::Walk => {
                let ms: Vec<i64> = (-10..=10).collect();
                out.push(check_single_particle(
                    subject,
                    &ms,
                    &[0.1, 1.0, 3.0],
                    opts.tol(1e-10),
                    seed(1),
                ));
            }
            CheckName::Normalization => {
                for n in opts.sizes(&[2, 3]) {
                    let t = if n <= 2 { 2.0 } else { 1.0 };
                    out.push(check_normalization(
                        subject,
                        n,
                        t,
                        opts.trials(1),
                        1e-8,
                        opts.tol(1e-6),
                        seed(n),
                    ));
                }
            }
            CheckName::Boundary => {
                for n in opts.sizes(&[2, 3]) {
                    out.push(check_boundary_conditions(
                        subject,
                        n,
                        0.7,
                        opts.trials(20),
                        opts.tol(1e-8),
                        seed(n),
                    ));
                }
                if kind == ModelKind::Asap {
                    out.push(check_asap_geometric_boundary(
                        subject,
                        2,
                        0.7,
                        opts.trials(5).min(5),
                        opts.tol(1e-7),
                        seed(2) ^ 1,
                    ));
                }
            }
            CheckName::Forward => {
                for n in opts.sizes(&[2, 3]) {
                    out.push(check_forward_equation(
                        subject,
                        n,
                        0.8,
                        opts.trials(20),
                        opts.tol(1e-7),
                        seed(n),
                    ));
                }
            }
            CheckName::Lemmas => {
                for n in opts.sizes(&[2, 3, 4]) {
                    out.push(check_lemmas(
                        subject,
                        n,
                        opts.trials(2),
                        opts.tol(1e-10),
                        seed(n),
                    ));
                }
            }
            CheckName::Bijection => {
                for n in opts.sizes(&[2, 3]) {
                    out.push(check_bijection(
                        subject,
                        n,
                        None,
                        opts.trials(20),
                        opts.tol(1e-8),
                        seed(n),
                    ));
                }
            }
            CheckName::Marginal => {
                for n in opts.sizes(&[1, 2, 3]) {
                    let tol = opts.tol(1e-6);
                    out.push(check_mth_marginal(
                        subject,
                        n,
                        0.5,
                        5,
                        Bracket::Homogeneous,
                        1e-8,
                        tol,
                        seed(n),
                    ));
                }
            }
            CheckName::Substitution => {
                out.push(check_substitution_s_matrix(
                    subject,
                    opts.trials(100),
                    opts.tol(1e-12),
                    seed(0),
                ));
                out.push(check_substitution_probability(
                    subject,
                    2,
                    opts.trials(10).min(10),
                    1e-8,
                    seed(2),
                ));
            }
            CheckName::MonteCarlo => {
                for n in opts.sizes(&[2]) {
                    out.push(check_monte_carlo(subject, n, 1.0, 100_000, 4.0, seed(n)));
                }
            }
            CheckName::Monomial | CheckName::Performance => unreachable!("handled above"),
        }
    }
    out
}

/// Runs every check in order.
pub fn run_all(opts: &SuiteOptions) -> Vec<CheckReport> {
    CheckName::ALL
        .iter()
        .flat_map(|&c| run_check(c, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in CheckName::ALL {
            assert_eq!(c.name().parse::<CheckName>().unwrap(), c);
            assert!(!c.claim().is_empty());
        }
        assert_eq!(
            "monte_carlo".parse::<CheckName>().unwrap(),
            CheckName::MonteCarlo
        );
        assert!("nope".parse::<CheckName>().is_err());
    }

    #[test]
    fn every_model_is_covered_by_some_check() {
        for kind in ModelKind::ALL {
            let n = CheckName::ALL
                .iter()
                .filter(|c| !c.model_free() && c.applies_to(kind))
                .count();
            assert!(n >= 8, "{kind}: {n}");
        }
    }

    #[test]
    fn quick_run() {
        let opts = SuiteOptions {
            model: Some(Model::asep(0.6).unwrap()),
            n: Some(2),
            trials: Some(2),
            ..Default::default()
        };
        let reports = run_check(CheckName::Forward, &opts);
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass, "{}", reports[0]);
        assert!(run_check(CheckName::Bijection, &opts).is_empty());
    }
}
