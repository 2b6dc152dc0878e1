//! Run configuration: `key = value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use bethe_core::bethe_engine::ContourSpec;
use bethe_core::{Configuration, Model, ModelKind, ModelParams};

use crate::error::CliError;

const MODEL_KEYS: &[&str] = &["model", "p", "mu", "lambda"];
const CONTOUR_KEYS: &[&str] = &["radius", "nodes", "rel_tol", "max_nodes"];
const OUTPUT_KEYS: &[&str] = &["format", "output", "quiet"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Prob,
    Marginal,
    Simulate,
    Verify,
    Sweep,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Prob => "prob",
            CommandKind::Marginal => "marginal",
            CommandKind::Simulate => "simulate",
            CommandKind::Verify => "verify",
            CommandKind::Sweep => "sweep",
        }
    }

    fn own_keys(self) -> &'static [&'static str] {
        match self {
            CommandKind::Prob => &["y", "x", "t", "oracle", "oracle_tol", "window"],
            CommandKind::Marginal => &["y", "m", "t", "xs", "bracket"],
            CommandKind::Simulate => &[
                "y",
                "t",
                "samples",
                "seed",
                "oracle",
                "oracle_tol",
                "trajectory",
            ],
            CommandKind::Verify => &["check", "n", "trials", "tol", "seed"],
            CommandKind::Sweep => &["y", "x", "t", "param", "grid"],
        }
    }

    fn uses_contour(self) -> bool {
        matches!(
            self,
            CommandKind::Prob | CommandKind::Marginal | CommandKind::Sweep
        )
    }

    /// Keys this command accepts, from flags or a config file.
    pub fn accepts(self, key: &str) -> bool {
        MODEL_KEYS.contains(&key)
            || OUTPUT_KEYS.contains(&key)
            || self.own_keys().contains(&key)
            || (self.uses_contour() && CONTOUR_KEYS.contains(&key))
    }
}

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (text, json or csv)")),
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected 'key = value'",
                i + 1
            )));
        };
        let key = normalize(k);
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!(
                "config line {}: duplicate key '{key}'",
                i + 1
            )));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Merged settings of one invocation. Flags override file entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(
        command: CommandKind,
        file: BTreeMap<String, String>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, v) in file {
            if !command.accepts(&k) {
                return Err(CliError::Usage(format!(
                    "'{k}' is not a setting of '{}'",
                    command.name()
                )));
            }
            values.insert(k, v);
        }
        for (k, v) in flags {
            debug_assert!(command.accepts(k), "flag {k} not registered");
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(RunConfig { command, values })
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("bad value for {key} '{v}': {e}")))
            })
            .transpose()
    }

    pub fn require<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| {
            CliError::Usage(format!(
                "'{}' needs --{}",
                self.command.name(),
                key.replace('_', "-")
            ))
        })
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key).map(|v| v.trim().to_ascii_lowercase()) {
            None => Ok(false),
            Some(v) if matches!(v.as_str(), "true" | "yes" | "1" | "on") => Ok(true),
            Some(v) if matches!(v.as_str(), "false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(CliError::Usage(format!(
                "bad value for {key} '{v}': expected true or false"
            ))),
        }
    }

    pub fn format(&self) -> Result<Format, CliError> {
        Ok(self.get("format")?.unwrap_or_default())
    }

    pub fn kind(&self) -> Result<Option<ModelKind>, CliError> {
        self.get("model")
    }

    /// Model from `model`, `p` and `mu` (or `lambda`).
    pub fn model(&self) -> Result<Model, CliError> {
        let kind: ModelKind = self.require("model")?;
        self.model_of(kind)
    }

    pub fn model_of(&self, kind: ModelKind) -> Result<Model, CliError> {
        let p: f64 = self.require("p")?;
        let lambda = self.get("lambda")?;
        let mu = self.get("mu")?;
        if !kind.uses_lambda_mu() && (lambda.is_some() || mu.is_some()) {
            return Err(CliError::Usage(format!(
                "model {kind} takes no lambda or mu"
            )));
        }
        Ok(Model::new(kind, ModelParams::new(p, 1.0 - p, lambda, mu))?)
    }

    pub fn configuration(&self, key: &str, kind: ModelKind) -> Result<Configuration, CliError> {
        let c: Configuration = self.require(key)?;
        Ok(Configuration::physical(kind, c.into_vec())?)
    }

    pub fn time(&self) -> Result<f64, CliError> {
        let t: f64 = self.require("t")?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        Ok(t)
    }

    /// Contour overrides applied on top of `base`, or on a contour made
    /// from `radius` alone.
    pub fn contour(&self, base: Option<ContourSpec>) -> Result<Option<ContourSpec>, CliError> {
        let radii: Option<List<f64>> = self.get("radius")?;
        let mut spec = match (radii, base) {
            (Some(r), _) => ContourSpec::new(r.0),
            (None, Some(b)) => b,
            (None, None) if self.has_contour_overrides() => {
                return Err(CliError::Usage(
                    "contour overrides need --radius here".into(),
                ));
            }
            (None, None) => return Ok(None),
        };
        if let Some(n) = self.get("nodes")? {
            spec = spec.with_nodes(n);
        }
        if let Some(t) = self.get("rel_tol")? {
            spec = spec.with_rel_tol(t);
        }
        if let Some(m) = self.get("max_nodes")? {
            spec = spec.with_max_nodes(m);
        }
        Ok(Some(spec))
    }

    pub fn has_contour_overrides(&self) -> bool {
        CONTOUR_KEYS.iter().any(|k| self.has(k))
    }
}

/// Comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<T>()
                    .map_err(|e| format!("'{}': {e}", tok.trim()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

/// Grid of real values: `start:stop:step` (inclusive), a comma list, or
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Grid(Vec::new()));
        }
        if !s.contains(':') {
            return s.parse::<List<f64>>().map(|l| Grid(l.0));
        }
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err("expected start:stop:step".into());
        };
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
            return Err("grid needs a positive step and finite ends".into());
        }
        if stop < start {
            return Ok(Grid(Vec::new()));
        }
        // index-based, then trimmed to 12 digits so that 0:1:0.1 gives 0.3
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let tidy = |v: f64| format!("{v:.11e}").parse::<f64>().unwrap_or(v);
        Ok(Grid(
            (0..count).map(|i| tidy(start + i as f64 * step)).collect(),
        ))
    }
}

/// Integer sites: `lo:hi` (inclusive) or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub struct Sites(pub Vec<i64>);

impl FromStr for Sites {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Sites(Vec::new()));
        }
        match s.split_once(':') {
            Some((a, b)) => {
                let a: i64 = a.trim().parse().map_err(|e| format!("'{a}': {e}"))?;
                let b: i64 = b.trim().parse().map_err(|e| format!("'{b}': {e}"))?;
                Ok(Sites((a..=b).collect()))
            }
            None => s.parse::<List<i64>>().map(|l| Sites(l.0)),
        }
    }
}

/// Window `lo:hi` for the truncated chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span(pub i64, pub i64);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
        let a: i64 = a.trim().parse().map_err(|e| format!("'{a}': {e}"))?;
        let b: i64 = b.trim().parse().map_err(|e| format!("'{b}': {e}"))?;
        if b < a {
            return Err(format!("empty window {a}:{b}"));
        }
        Ok(Span(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text() {
        let m =
            parse_config_text("# comment\nmodel = asep\n\nrel-tol = 1e-9  # trailing\n").unwrap();
        assert_eq!(m["model"], "asep");
        assert_eq!(m["rel_tol"], "1e-9");
        assert!(parse_config_text("model asep").is_err());
        assert!(parse_config_text("p = 0.1\np = 0.2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("model = asep\np = 0.3\n").unwrap();
        let c = RunConfig::new(
            CommandKind::Prob,
            file,
            vec![("p", Some("0.7".into())), ("t", None)],
        )
        .unwrap();
        assert_eq!(c.require::<f64>("p").unwrap(), 0.7);
        assert_eq!(c.model().unwrap().q(), 1.0 - 0.7);
        assert!(!c.has("t"));
    }

    #[test]
    fn settings_are_scoped_to_commands() {
        let file = parse_config_text("m = 1\n").unwrap();
        assert!(RunConfig::new(CommandKind::Prob, file.clone(), vec![]).is_err());
        assert!(RunConfig::new(CommandKind::Marginal, file, vec![]).is_ok());
    }

    #[test]
    fn grids() {
        assert_eq!("".parse::<Grid>().unwrap().0, Vec::<f64>::new());
        let g = "0:2:0.1".parse::<Grid>().unwrap().0;
        assert_eq!(g.len(), 21);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[20], 2.0);
        assert_eq!("0.5,1".parse::<Grid>().unwrap().0, vec![0.5, 1.0]);
        assert!("0:1:0".parse::<Grid>().is_err());
        assert_eq!("-2:2".parse::<Sites>().unwrap().0, vec![-2, -1, 0, 1, 2]);
        assert_eq!("3,5".parse::<Sites>().unwrap().0, vec![3, 5]);
        assert!("4:3".parse::<Span>().is_err());
    }

    #[test]
    fn model_checks() {
        let flags =
            |v: &[(&'static str, &str)]| v.iter().map(|(k, v)| (*k, Some(v.to_string()))).collect();
        let c = RunConfig::new(
            CommandKind::Prob,
            BTreeMap::new(),
            flags(&[("model", "asep"), ("p", "0.4"), ("mu", "0.5")]),
        )
        .unwrap();
        assert!(c.model().is_err());
        let c = RunConfig::new(
            CommandKind::Prob,
            BTreeMap::new(),
            flags(&[("model", "push"), ("p", "0.4")]),
        )
        .unwrap();
        assert!(c.model().is_err());
        let c = RunConfig::new(
            CommandKind::Prob,
            BTreeMap::new(),
            flags(&[("model", "asap"), ("p", "0.4"), ("mu", "0.3")]),
        )
        .unwrap();
        assert_eq!(c.model().unwrap().lambda(), 0.7);
    }
}
