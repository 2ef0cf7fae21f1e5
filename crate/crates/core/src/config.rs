//! Run configuration: a flat TOML document with `[scenario]`, `[solver]`
//! and `[output]` sections.
//!
//! ```toml
//! [scenario]
//! name = "riemann"          # built-in name, or any name with rho0/u0 given
//! levels = [64, 128, 256]
//! mu = 0.5
//! rho0 = "piecewise 2 0.5 1"
//!
//! [solver]
//! newton_tol = 1e-10
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Keys left out take the built-in scenario's values (or the smooth-bump
//! values for a custom name). Profiles use the text form of
//! [`ProfileSpec`].

use std::fmt::Write as _;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::error::ConfigError;
use crate::grid::{PhysParams, ProfileSpec};
use crate::harness::{builtin_scenario, ScenarioConfig};
use crate::stepper::SolverConfig;

pub const DEFAULT_OUTPUT_DIR: &str = "out";

const SCENARIO_KEYS: [&str; 11] = [
    "name",
    "length",
    "final_time",
    "a",
    "gamma",
    "mu",
    "rho0",
    "u0",
    "levels",
    "couple_dt_dx",
    "dt",
];
const SOLVER_KEYS: [&str; 5] = ["newton_tol", "max_newton_iters", "damping", "fallback_iters", "regularize_upwind"];
const OUTPUT_KEYS: [&str; 1] = ["dir"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Non-fatal remarks produced while parsing.
    pub warnings: Vec<String>,
}

/// 1-based line of `key` inside `[section]`, or of the section header when
/// `key` is empty.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(head) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = head.trim().to_string();
            if key.is_empty() && current == section {
                return Some(n + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some(rest) = t.strip_prefix(key) {
                let rest = rest.trim_start();
                if rest.starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}

struct Section<'a> {
    text: &'a str,
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(key, locate(self.text, self.name, key), message)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(self.err(k, format!("unknown key in [{}]", self.name)));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(key, default)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(self.err(key, format!("must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => Err(self.err(key, "expected a non-negative integer")),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(self.err(key, "expected true or false")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }
}

fn sub_table<'a>(doc: &'a Table, text: &str, name: &str) -> Result<Option<&'a Table>, ConfigError> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(ConfigError::new(name, locate(text, "", name), "expected a section")),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        ConfigError::new("", line, e.message().to_string())
    })?;
    if let Some(k) = doc.keys().find(|k| !["scenario", "solver", "output"].contains(&k.as_str())) {
        return Err(ConfigError::new(k, locate(text, k, ""), "unknown section"));
    }
    let sc = Section {
        text,
        name: "scenario",
        table: sub_table(&doc, text, "scenario")?,
    };
    let so = Section {
        text,
        name: "solver",
        table: sub_table(&doc, text, "solver")?,
    };
    let out = Section {
        text,
        name: "output",
        table: sub_table(&doc, text, "output")?,
    };
    sc.check_keys(&SCENARIO_KEYS)?;
    so.check_keys(&SOLVER_KEYS)?;
    out.check_keys(&OUTPUT_KEYS)?;

    let name = sc
        .string("name")?
        .ok_or_else(|| ConfigError::new("name", locate(text, "scenario", ""), "missing required key"))?;
    let builtin = builtin_scenario(name);
    let base = match &builtin {
        Some(b) => b.clone(),
        None => {
            for key in ["rho0", "u0"] {
                if sc.get(key).is_none() {
                    return Err(sc.err(key, format!("required for non-built-in scenario `{name}`")));
                }
            }
            builtin_scenario("smooth-bump").expect("smooth-bump is built in")
        }
    };

    let length = sc.positive("length", base.length)?;
    let final_time = sc.f64("final_time", base.final_time)?;
    if !(final_time.is_finite() && final_time >= 0.0) {
        return Err(sc.err("final_time", format!("must be >= 0, got {final_time}")));
    }
    let a = sc.positive("a", base.params.a)?;
    let gamma = sc.f64("gamma", base.params.gamma)?;
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(sc.err("gamma", format!("must be > 1, got {gamma}")));
    }
    let mu = sc.positive("mu", base.params.mu)?;
    let params = PhysParams { a, gamma, mu };

    let profile = |key: &str, default: &ProfileSpec| -> Result<ProfileSpec, ConfigError> {
        match sc.string(key)? {
            None => Ok(default.with_length(length)),
            Some(s) => ProfileSpec::parse(s, length).map_err(|e| sc.err(key, e.to_string())),
        }
    };
    let rho0 = profile("rho0", &base.rho0)?;
    let u0 = profile("u0", &base.u0)?;

    let levels = match sc.get("levels") {
        None => base.levels.clone(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Integer(n) if *n >= 2 => Ok(*n as usize),
                _ => Err(sc.err("levels", "entries must be integers >= 2")),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(sc.err("levels", "expected an array of integers")),
    };
    let couple_dt_dx = sc.bool("couple_dt_dx", base.couple_dt_dx)?;
    let dt = match sc.get("dt") {
        None => base.dt,
        Some(_) => Some(sc.positive("dt", 0.0)?),
    };

    let scenario = ScenarioConfig {
        name: name.to_string(),
        length,
        final_time,
        params,
        rho0,
        u0,
        levels,
        couple_dt_dx,
        dt,
    };
    scenario.validate().map_err(|e| {
        let key = if e.to_string().contains("level") {
            "levels"
        } else if e.to_string().contains("dt") {
            "dt"
        } else {
            "rho0"
        };
        sc.err(key, e.to_string())
    })?;

    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        newton_tol: so.positive("newton_tol", defaults.newton_tol)?,
        max_newton_iters: so.usize("max_newton_iters", defaults.max_newton_iters)?,
        damping: so.f64("damping", defaults.damping)?,
        fallback_iters: so.usize("fallback_iters", defaults.fallback_iters)?,
        regularize_upwind: so.bool("regularize_upwind", defaults.regularize_upwind)?,
    };
    if !(solver.damping > 0.0 && solver.damping < 1.0) {
        return Err(so.err("damping", format!("must lie in (0, 1), got {}", solver.damping)));
    }
    if solver.max_newton_iters == 0 {
        return Err(so.err("max_newton_iters", "must be positive"));
    }
    let output_dir = PathBuf::from(out.string("dir")?.unwrap_or(DEFAULT_OUTPUT_DIR));

    let mut warnings = Vec::new();
    if !params.in_convergence_regime() {
        warnings.push(format!("gamma = {gamma} outside 3/2<γ<2 convergence regime"));
    }
    Ok(RunConfig {
        scenario,
        solver,
        output_dir,
        warnings,
    })
}

fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

impl RunConfig {
    /// Effective configuration with every key spelled out; parses back to
    /// an equal `RunConfig`.
    pub fn to_toml(&self) -> String {
        let s = &self.scenario;
        let p = &s.params;
        let mut out = String::new();
        let levels: Vec<String> = s.levels.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "[scenario]");
        let _ = writeln!(out, "name = {}", quote(&s.name));
        let _ = writeln!(out, "length = {:?}", s.length);
        let _ = writeln!(out, "final_time = {:?}", s.final_time);
        let _ = writeln!(out, "a = {:?}", p.a);
        let _ = writeln!(out, "gamma = {:?}", p.gamma);
        let _ = writeln!(out, "mu = {:?}", p.mu);
        let _ = writeln!(out, "rho0 = {}", quote(&s.rho0.to_string()));
        let _ = writeln!(out, "u0 = {}", quote(&s.u0.to_string()));
        let _ = writeln!(out, "levels = [{}]", levels.join(", "));
        let _ = writeln!(out, "couple_dt_dx = {}", s.couple_dt_dx);
        if let Some(dt) = s.dt {
            let _ = writeln!(out, "dt = {dt:?}");
        }
        let v = &self.solver;
        let _ = writeln!(out, "\n[solver]");
        let _ = writeln!(out, "newton_tol = {:?}", v.newton_tol);
        let _ = writeln!(out, "max_newton_iters = {}", v.max_newton_iters);
        let _ = writeln!(out, "damping = {:?}", v.damping);
        let _ = writeln!(out, "fallback_iters = {}", v.fallback_iters);
        let _ = writeln!(out, "regularize_upwind = {}", v.regularize_upwind);
        let _ = writeln!(out, "\n[output]");
        let _ = writeln!(out, "dir = {}", quote(&self.output_dir.to_string_lossy()));
        out
    }

    /// The effective configuration as `# key = value` comment lines.
    pub fn echo(&self) -> String {
        self.to_toml()
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| format!("# {l}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults_and_round_trips() {
        let cfg = parse_config("[scenario]\nname = \"smooth-bump\"\nlevels = [16, 32, 64]\n").unwrap();
        assert_eq!(cfg.scenario.levels, vec![16, 32, 64]);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn gamma_outside_regime_warns() {
        let cfg = parse_config("[scenario]\nname = \"smooth-bump\"\ngamma = 1.4\n").unwrap();
        assert_eq!(cfg.warnings.len(), 1);
        assert!(cfg.warnings[0].contains("outside 3/2<γ<2 convergence regime"));
    }

    #[test]
    fn negative_mu_names_key_and_line() {
        let err = parse_config("[scenario]\nname = \"smooth-bump\"\nmu = -1.0\n").unwrap_err();
        assert_eq!(err.key, "mu");
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("[scenario]\nname = \"constant\"\n\n[solver]\ntolerance = 1\n").unwrap_err();
        assert_eq!(err.key, "tolerance");
        assert_eq!(err.line, Some(5));
        assert!(parse_config("[extra]\nx = 1\n").is_err());
    }

    #[test]
    fn custom_scenario_needs_profiles() {
        let err = parse_config("[scenario]\nname = \"mine\"\nrho0 = \"constant 2\"\n").unwrap_err();
        assert_eq!(err.key, "u0");
        let cfg = parse_config("[scenario]\nname = \"mine\"\nrho0 = \"constant 2\"\nu0 = \"sine 0.2 1\"\n").unwrap();
        assert_eq!(cfg.scenario.rho0, ProfileSpec::Constant(2.0));
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("[scenario]\nname = \"constant\"\nmu = = 2\n").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn bad_levels_rejected() {
        let err = parse_config("[scenario]\nname = \"constant\"\nlevels = [16, 24]\n").unwrap_err();
        assert_eq!(err.key, "levels");
        assert!(parse_config("[scenario]\nname = \"constant\"\nlevels = 3\n").is_err());
    }
}
