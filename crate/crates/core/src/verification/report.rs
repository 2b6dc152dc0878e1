//! Check reports.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::models::{Model, ModelKind, ModelParams};

/// Outcome of one numeric check. `pass` holds iff no case raised an error
/// and `residual <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub model: Option<ModelKind>,
    /// Parameters when they were fixed for the whole check.
    pub params: Option<ModelParams>,
    pub n: Option<usize>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    pub cases: usize,
    /// Engine or oracle errors, each counted as a failed case.
    pub errors: Vec<String>,
    /// Not serialized, so that reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let model = self.model.map(|m| m.name()).unwrap_or("-");
        let n = self.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
        write!(
            f,
            "{:<6} {:<28} model={:<5} N={:<2} residual={:.3e} tol={:.1e} cases={} ({:.2}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            model,
            n,
            self.residual,
            self.tolerance,
            self.cases,
            self.wall_time_s
        )?;
        for e in self.errors.iter().take(3) {
            write!(f, "\n       error: {e}")?;
        }
        Ok(())
    }
}

/// Accumulates residuals of one check.
#[derive(Debug)]
pub struct Tracker {
    check: String,
    model: Option<ModelKind>,
    params: Option<ModelParams>,
    n: Option<usize>,
    seed: u64,
    start: Instant,
    residual: f64,
    cases: usize,
    errors: Vec<String>,
}

impl Tracker {
    pub fn new(check: &str, seed: u64) -> Self {
        Tracker {
            check: check.to_string(),
            model: None,
            params: None,
            n: None,
            seed,
            start: Instant::now(),
            residual: 0.0,
            cases: 0,
            errors: Vec::new(),
        }
    }

    pub fn kind(mut self, kind: ModelKind) -> Self {
        self.model = Some(kind);
        self
    }

    pub fn model(mut self, model: &Model) -> Self {
        self.model = Some(model.kind());
        self.params = Some(model.params());
        self
    }

    pub fn subject(self, subject: &super::Subject) -> Self {
        match subject.fixed() {
            Some(m) => self.model(m),
            None => self.kind(subject.kind()),
        }
    }

    pub fn particles(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn record(&mut self, residual: f64) {
        self.cases += 1;
        // NaN must not be swallowed by max
        if residual.is_nan() || residual > self.residual {
            self.residual = residual;
        }
    }

    pub fn error(&mut self, context: impl fmt::Display, err: impl fmt::Display) {
        self.cases += 1;
        self.errors.push(format!("{context}: {err}"));
    }

    /// Records `f()` or the error it returns.
    pub fn try_record<E: fmt::Display>(
        &mut self,
        context: impl fmt::Display,
        f: impl FnOnce() -> Result<f64, E>,
    ) {
        match f() {
            Ok(r) => self.record(r),
            Err(e) => self.error(context, e),
        }
    }

    pub fn finish(self, tolerance: f64) -> CheckReport {
        let pass = self.errors.is_empty() && self.residual <= tolerance;
        CheckReport {
            check: self.check,
            model: self.model,
            params: self.params,
            n: self.n,
            residual: self.residual,
            tolerance,
            pass,
            seed: self.seed,
            cases: self.cases,
            errors: self.errors,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_logic() {
        let mut t = Tracker::new("x", 1);
        t.record(1e-9);
        t.record(1e-12);
        assert!(t.finish(1e-8).pass);
        let mut t = Tracker::new("x", 1);
        t.record(f64::NAN);
        t.record(0.0);
        assert!(!t.finish(1.0).pass);
        let mut t = Tracker::new("x", 1);
        t.record(0.0);
        t.error("case", "boom");
        let r = t.finish(1.0);
        assert!(!r.pass && r.cases == 2);
    }

    #[test]
    fn json_has_no_timing() {
        let mut t = Tracker::new("x", 7).kind(ModelKind::Asep);
        t.record(0.5);
        let json = serde_json::to_string(&t.finish(1.0)).unwrap();
        assert!(json.contains("\"check\":\"x\"") && json.contains("\"seed\":7"));
        assert!(!json.contains("wall_time"));
    }
}
