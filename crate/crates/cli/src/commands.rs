//! The five subcommands. Each turns a [`RunConfig`] into a [`Table`].

use bethe_core::bethe_engine::{
    auto_contour, azrp_mth_particle_distribution, choose_marginal_radius, transition_probability,
    transition_probability_auto, Bracket, ContourSpec, ProbabilityResult,
};
use bethe_core::ctmc_oracle::{
    build_generator, empirical_distribution, gillespie_trajectory, oracle_distribution,
    uniformization_distribution, TruncationWindow, Uniformized,
};
use bethe_core::verification::{run_check, CheckName, CheckReport, SuiteOptions, DEFAULT_SEED};
use bethe_core::{Configuration, Model, ModelKind, ModelParams};

use crate::config::{CommandKind, Grid, List, RunConfig, Sites, Span};
use crate::error::CliError;
use crate::table::{Cell, Table};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Table plus whether the command found a failing check.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub failed: bool,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome {
            table,
            failed: false,
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Prob => prob(cfg).map(Outcome::from),
        CommandKind::Marginal => marginal(cfg).map(Outcome::from),
        CommandKind::Simulate => simulate(cfg).map(Outcome::from),
        CommandKind::Verify => verify(cfg),
        CommandKind::Sweep => sweep(cfg).map(Outcome::from),
    }
}

fn pair(cfg: &RunConfig, kind: ModelKind) -> Result<(Configuration, Configuration), CliError> {
    let y = cfg.configuration("y", kind)?;
    let x = cfg.configuration("x", kind)?;
    if y.len() != x.len() {
        return Err(CliError::Usage(format!(
            "Y has {} particles but X has {}",
            y.len(),
            x.len()
        )));
    }
    Ok((y, x))
}

fn contour_for(
    cfg: &RunConfig,
    model: &Model,
    y: &Configuration,
    x: &Configuration,
) -> Result<ContourSpec, CliError> {
    let base = if cfg.has("radius") {
        None
    } else {
        Some(auto_contour(model, y, x)?)
    };
    Ok(cfg
        .contour(base)?
        .expect("a base contour or a radius is present"))
}

/// Honors contour flags when given; otherwise widens the contour until the
/// observed error is small.
fn probability(
    cfg: &RunConfig,
    model: &Model,
    y: &Configuration,
    x: &Configuration,
    t: f64,
) -> Result<ProbabilityResult, CliError> {
    if cfg.has_contour_overrides() {
        let spec = contour_for(cfg, model, y, x)?;
        Ok(transition_probability(model, y, x, t, &spec)?)
    } else {
        Ok(transition_probability_auto(model, y, x, t)?)
    }
}

fn oracle(
    cfg: &RunConfig,
    model: &Model,
    y: &Configuration,
    t: f64,
) -> Result<Uniformized, CliError> {
    let tol: f64 = cfg.get("oracle_tol")?.unwrap_or(DEFAULT_ORACLE_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Usage(format!(
            "oracle tolerance {tol} outside (0, 1)"
        )));
    }
    match cfg.get::<Span>("window")? {
        Some(Span(lo, hi)) => {
            let w = TruncationWindow {
                lo,
                hi,
                escape_bound: f64::NAN,
            };
            let gen = build_generator(model, w, y.len(), tol * 1e-2)?;
            Ok(uniformization_distribution(&gen, y, t, tol * 1e-2)?)
        }
        None => Ok(oracle_distribution(model, y, t, tol)?),
    }
}

/// `P_Y(X; t)` with error bookkeeping, optionally next to the oracle.
pub fn prob(cfg: &RunConfig) -> Result<Table, CliError> {
    let model = cfg.model()?;
    let (y, x) = pair(cfg, model.kind())?;
    let t = cfg.time()?;
    let r = probability(cfg, &model, &y, &x, t)?;
    let mut cols = vec![
        "value",
        "abs_error",
        "cancellation",
        "nodes",
        "converged",
        "precision_warning",
    ];
    let mut row: Vec<Cell> = vec![
        r.value.into(),
        r.abs_error_estimate.into(),
        r.cancellation.into(),
        r.nodes_used.into(),
        r.converged.into(),
        r.precision_warning.into(),
    ];
    if cfg.flag("oracle")? {
        let u = oracle(cfg, &model, &y, t)?;
        let v = u.distribution.get(x.positions());
        cols.extend(["oracle", "oracle_error_bound", "difference"]);
        row.extend([v.into(), u.error_bound().into(), (r.value - v).abs().into()]);
    }
    let mut table = Table::new(&cols);
    table.push(row);
    Ok(table)
}

/// `P(x_m(t) = x)` for AZRP over a grid of sites.
pub fn marginal(cfg: &RunConfig) -> Result<Table, CliError> {
    let model = cfg.model()?;
    if model.kind() != ModelKind::Azrp {
        return Err(CliError::Usage(format!(
            "marginal is defined for azrp, not {}",
            model.kind()
        )));
    }
    let y = cfg.configuration("y", ModelKind::Azrp)?;
    let m: usize = cfg.require("m")?;
    if m == 0 || m > y.len() {
        return Err(CliError::Usage(format!("m = {m} outside 1..={}", y.len())));
    }
    let t = cfg.time()?;
    let ym = y.positions()[m - 1];
    let xs = cfg
        .get::<Sites>("xs")?
        .map(|s| s.0)
        .unwrap_or_else(|| (ym - 5..=ym + 5).collect());
    let bracket: Bracket = cfg.get("bracket")?.unwrap_or_default();
    let base = if cfg.has_contour_overrides() && !cfg.has("radius") {
        Some(ContourSpec::new(vec![choose_marginal_radius(&model)?]))
    } else {
        None
    };
    let spec = cfg.contour(base)?;
    let mut table = Table::new(&["x", "prob", "err"]);
    for x in xs {
        let r = azrp_mth_particle_distribution(m, &y, x, t, &model, spec.as_ref(), bracket)?;
        table.push(vec![x.into(), r.value.into(), r.abs_error_estimate.into()]);
    }
    Ok(table)
}

fn sites(x: &[i64]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Gillespie samples: empirical law, or one trajectory.
pub fn simulate(cfg: &RunConfig) -> Result<Table, CliError> {
    let model = cfg.model()?;
    let y = cfg.configuration("y", model.kind())?;
    let t = cfg.time()?;
    let seed: u64 = cfg.get("seed")?.unwrap_or(DEFAULT_SEED);
    if cfg.flag("trajectory")? {
        if cfg.flag("oracle")? {
            return Err(CliError::Usage(
                "--oracle compares distributions, not trajectories".into(),
            ));
        }
        let mut cols = vec!["time".to_string()];
        cols.extend((1..=y.len()).map(|i| format!("x{i}")));
        let mut table = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
        for (time, pos) in gillespie_trajectory(&model, &y, t, seed)? {
            let mut row: Vec<Cell> = vec![time.into()];
            row.extend(pos.into_iter().map(Cell::from));
            table.push(row);
        }
        return Ok(table);
    }
    let samples: usize = cfg.get("samples")?.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(CliError::Usage("samples must be positive".into()));
    }
    let emp = empirical_distribution(&model, &y, t, seed, samples)?;
    let s = samples as f64;
    let count = |x: &[i64]| (emp.get(x) * s).round();
    if !cfg.flag("oracle")? {
        let mut table = Table::new(&["x", "count", "empirical"]);
        for k in emp.entries.keys() {
            let c = count(k);
            table.push(vec![sites(k).into(), (c as i64).into(), (c / s).into()]);
        }
        return Ok(table);
    }
    let exact = oracle(cfg, &model, &y, t)?.distribution;
    let mut keys: Vec<&Vec<i64>> = emp.entries.keys().collect();
    // unseen states that should have shown up at least once on average
    keys.extend(
        exact
            .entries
            .iter()
            .filter(|(k, &p)| p * s >= 1.0 && emp.get(k) == 0.0)
            .map(|(k, _)| k),
    );
    keys.sort();
    let mut table = Table::new(&["x", "count", "empirical", "exact", "z"]);
    for k in keys {
        let (c, p) = (count(k), exact.get(k));
        let sd = (s * p * (1.0 - p)).sqrt();
        let z = if sd > 0.0 {
            (c - s * p) / sd
        } else if c == s * p {
            0.0
        } else {
            f64::INFINITY
        };
        table.push(vec![
            sites(k).into(),
            (c as i64).into(),
            (c / s).into(),
            p.into(),
            z.into(),
        ]);
    }
    Ok(table)
}

fn checks(cfg: &RunConfig) -> Result<Vec<CheckName>, CliError> {
    match cfg.raw("check").map(str::trim) {
        None | Some("all") => Ok(CheckName::ALL.to_vec()),
        Some(_) => Ok(cfg.require::<List<CheckName>>("check")?.0),
    }
}

fn report_line(r: &CheckReport) -> String {
    let model = r.model.map(|m| m.name()).unwrap_or("-");
    let n = r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
    let mut s = format!(
        "{:<6} {:<28} model={:<5} N={:<2} residual={:.3e} tol={:.1e} cases={}\n",
        if r.pass { "PASS" } else { "FAIL" },
        r.check,
        model,
        n,
        r.residual,
        r.tolerance,
        r.cases
    );
    for e in r.errors.iter().take(3) {
        s.push_str(&format!("       error: {e}\n"));
    }
    s
}

/// Runs the selected checks; the outcome fails if any report fails.
pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kind = cfg.kind()?;
    let model = match kind {
        Some(k) if cfg.has("p") => Some(cfg.model_of(k)?),
        _ if cfg.has("p") || cfg.has("mu") || cfg.has("lambda") => {
            return Err(CliError::Usage("model parameters need --model".into()));
        }
        _ => None,
    };
    let opts = SuiteOptions {
        seed: cfg.get("seed")?.unwrap_or(DEFAULT_SEED),
        model,
        kinds: kind
            .map(|k| vec![k])
            .unwrap_or_else(|| ModelKind::ALL.to_vec()),
        n: cfg.get("n")?,
        trials: cfg.get("trials")?,
        tol: cfg.get("tol")?,
    };
    if opts.n == Some(0) {
        return Err(CliError::Usage("n must be positive".into()));
    }
    let selected = checks(cfg)?;
    let mut reports = Vec::new();
    for c in &selected {
        let before = reports.len();
        reports.extend(run_check(*c, &opts));
        if reports.len() == before && selected.len() == 1 {
            let which = kind.map(|k| k.name()).unwrap_or("any model");
            return Err(CliError::Usage(format!(
                "check '{c}' does not apply to {which}"
            )));
        }
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    let mut table = Table::new(&[
        "check",
        "model",
        "n",
        "residual",
        "tolerance",
        "pass",
        "seed",
        "cases",
    ]);
    let mut text = String::new();
    for r in &reports {
        table.push(vec![
            r.check.as_str().into(),
            r.model.map(|m| m.name()).unwrap_or("").into(),
            r.n.map(Cell::from).unwrap_or_else(|| "".into()),
            r.residual.into(),
            r.tolerance.into(),
            r.pass.into(),
            (r.seed as i64).into(),
            r.cases.into(),
        ]);
        text.push_str(&report_line(r));
    }
    text.push_str(&format!(
        "{} of {} reports passed\n",
        reports.len() - failed,
        reports.len()
    ));
    table.text = Some(text);
    table.json = Some(serde_json::to_value(&reports).expect("reports serialize"));
    Ok(Outcome {
        table,
        failed: failed > 0,
    })
}

fn swept_model(cfg: &RunConfig, kind: ModelKind, param: &str, v: f64) -> Result<Model, CliError> {
    let p = if param == "p" { v } else { cfg.require("p")? };
    let (lambda, mu) = match param {
        "mu" => (None, Some(v)),
        "lambda" => (Some(v), None),
        _ => (cfg.get("lambda")?, cfg.get("mu")?),
    };
    if !kind.uses_lambda_mu() && (lambda.is_some() || mu.is_some()) {
        return Err(CliError::Usage(format!(
            "model {kind} takes no lambda or mu"
        )));
    }
    Ok(Model::new(kind, ModelParams::new(p, 1.0 - p, lambda, mu))?)
}

/// One probability per grid point of `t`, `p`, `mu` or `lambda`.
pub fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let kind: ModelKind = cfg.require("model")?;
    let param: String = cfg.require("param")?;
    if !["t", "p", "mu", "lambda"].contains(&param.as_str()) {
        return Err(CliError::Usage(format!(
            "cannot sweep '{param}' (t, p, mu or lambda)"
        )));
    }
    let grid: Grid = cfg.require("grid")?;
    let (y, x) = pair(cfg, kind)?;
    let mut table = Table::new(&[param.as_str(), "value", "err"]);
    for v in grid.0 {
        let model = swept_model(cfg, kind, &param, v)?;
        let t = if param == "t" { v } else { cfg.time()? };
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        let r = probability(cfg, &model, &y, &x, t)?;
        table.push(vec![v.into(), r.value.into(), r.abs_error_estimate.into()]);
    }
    Ok(table)
}
