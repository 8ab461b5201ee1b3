//! Run configuration: a TOML file whose top-level keys may be refined by a
//! section named after the subcommand, followed by `key=value` overrides.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use fepzr_core::dynamics::Mode;
use fepzr_core::measures::Profile;
use serde::{Deserialize, Deserializer, Serialize};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Fep,
    Fzrp,
    Coupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Torus,
    Line,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    /// Exclusion densities.
    Exclusion,
    /// Zero-range densities.
    ZeroRange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ExToZr,
    ZrToEx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Micro,
    Macro,
}

/// Every key understood by the subcommands; unused keys are ignored by the
/// commands that do not need them but must still be spelled correctly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub process: Process,
    pub mode: Mode,
    /// Rate of rightward jumps; symmetric runs use the same rate both ways.
    pub p: f64,
    /// Scaling parameter (`N` for exclusion, `M` for zero-range).
    #[serde(alias = "N", alias = "M", alias = "m")]
    pub n: usize,
    /// Horizon in macroscopic time.
    #[serde(alias = "T", alias = "horizon")]
    pub t: f64,
    /// Observation times; defaults to the horizon alone.
    #[serde(deserialize_with = "floats")]
    pub obs_times: Vec<f64>,
    pub seed: u64,
    pub replicas: u32,
    /// `const:a`, `step:v0,v1,…` (equal blocks on the torus, a jump at 0 on
    /// the line) or `pw:b1,…/v0,v1,…` (explicit breakpoints).
    pub profile: String,
    pub geometry: GeometryKind,
    /// Macroscopic window `[a, b]` on the line.
    #[serde(deserialize_with = "floats")]
    pub window: Vec<f64>,
    /// Explicit padding in sites; computed from the light cone when absent.
    pub padding: Option<usize>,
    /// Block radius; `⌈√N⌉` when absent.
    pub block: Option<usize>,
    /// Cells of PDE grids and of block-density outputs.
    pub cells: usize,
    /// Also write every site of every snapshot.
    pub write_sites: bool,
    /// Follow the first empty site at or right of the origin (exclusion).
    pub tag: bool,
    /// Upper copy density for `process = coupled`; `sup α + 1` when absent.
    pub alpha_bar: Option<f64>,
    pub equation: Equation,
    /// `Δt/Δx²` of the parabolic scheme.
    pub lambda: Option<f64>,
    /// Courant number of the hyperbolic scheme.
    pub cfl: f64,
    /// Flux smoothing width of the parabolic scheme.
    pub smoothing: Option<f64>,
    /// Vanishing viscosity of the hyperbolic scheme.
    pub viscosity: Option<f64>,
    pub level: Level,
    pub direction: Direction,
    pub offset: f64,
    /// Snapshot (or field, for macroscopic maps) used instead of sampling `profile`.
    pub input: Option<String>,
    pub left: f64,
    pub right: f64,
    pub scenario: String,
    pub sweep_key: String,
    #[serde(deserialize_with = "floats")]
    pub sweep_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            process: Process::Fep,
            mode: Mode::Symmetric,
            p: 1.0,
            n: 1024,
            t: 0.01,
            obs_times: Vec::new(),
            seed: 1,
            replicas: 1,
            profile: "step:0.8,0.3".into(),
            geometry: GeometryKind::Torus,
            window: vec![-1.0, 1.0],
            padding: None,
            block: None,
            cells: 256,
            write_sites: false,
            tag: true,
            alpha_bar: None,
            equation: Equation::Exclusion,
            lambda: None,
            cfl: 0.45,
            smoothing: None,
            viscosity: None,
            level: Level::Macro,
            direction: Direction::ExToZr,
            offset: 0.0,
            input: None,
            left: 1.5,
            right: 3.0,
            scenario: "flux-relation".into(),
            sweep_key: "n".into(),
            sweep_values: Vec::new(),
        }
    }
}

/// Accepts a list of numbers, a single number, or a comma-separated string.
fn floats<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        List(Vec<f64>),
        One(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::List(v) => Ok(v),
        Raw::One(x) => Ok(vec![x]),
        Raw::Text(s) => s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<f64>().map_err(serde::de::Error::custom))
            .collect(),
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a plain string.
fn override_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn merge_section(base: &mut Table, section: &Table) {
    for (k, v) in section {
        base.insert(k.clone(), v.clone());
    }
}

impl RunConfig {
    /// Builds the configuration of `command` from an optional file and overrides.
    pub fn load(path: Option<&Path>, command: &str, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let mut table = Table::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let file: Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
            let mut sections = Vec::new();
            for (k, v) in file {
                match v {
                    Value::Table(t) => sections.push((k, t)),
                    other => {
                        table.insert(k, other);
                    }
                }
            }
            for (name, section) in sections {
                if name == command {
                    merge_section(&mut table, &section);
                }
            }
        }
        for item in overrides {
            let (k, v) = item.split_once('=').with_context(|| format!("override `{item}` is not of the form key=value"))?;
            table.insert(k.trim().to_string(), override_value(v.trim()));
        }
        if let Some(s) = seed {
            table.insert("seed".into(), Value::Integer(i64::try_from(s).context("seed too large for the config format")?));
        }
        let cfg: RunConfig = Value::Table(table).try_into().context("invalid configuration")?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Observation times, sorted, ending at the horizon.
    pub fn times(&self) -> Result<Vec<f64>> {
        let mut times: Vec<f64> = self.obs_times.iter().copied().filter(|&s| s < self.t).collect();
        ensure!(times.iter().all(|&s| s >= 0.0), "observation times must be nonnegative");
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.push(self.t);
        Ok(times)
    }

    pub fn profile(&self) -> Result<Profile> {
        parse_profile(&self.profile, self.geometry)
    }

    pub fn window(&self) -> Result<(f64, f64)> {
        match self.window.as_slice() {
            [a, b] if a < b => Ok((*a, *b)),
            other => bail!("window must be two increasing numbers, got {other:?}"),
        }
    }

    /// Checks shared by every subcommand that runs dynamics or solvers.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.t >= 0.0 && self.t.is_finite(), "horizon T must be a finite nonnegative number");
        ensure!(self.n >= 2, "N must be at least 2");
        ensure!(self.replicas >= 1, "replicas must be at least 1");
        ensure!((0.0..=1.0).contains(&self.p), "p must lie in [0, 1]");
        if self.mode == Mode::Asymmetric {
            ensure!(self.p > 0.5, "asymmetric mode needs p in (1/2, 1]");
        }
        ensure!(self.cells >= 1, "cells must be positive");
        self.window()?;
        self.profile()?;
        Ok(())
    }
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("`{t}` is not a number")))
        .collect()
}

/// Parses a profile descriptor.
pub fn parse_profile(desc: &str, geometry: GeometryKind) -> Result<Profile> {
    let (kind, rest) = desc.split_once(':').with_context(|| format!("profile `{desc}` lacks a `kind:` prefix"))?;
    let profile = match kind.trim() {
        "const" => Profile::constant(numbers(rest)?.first().copied().context("const needs a value")?),
        "step" => {
            let v = numbers(rest)?;
            match geometry {
                GeometryKind::Torus => Profile::torus_steps(v)?,
                GeometryKind::Line => {
                    ensure!(v.len() == 2, "a line step takes two values (left, right)");
                    Profile::step(vec![0.0], v)?
                }
            }
        }
        "pw" => {
            let (b, v) = rest.split_once('/').context("pw profiles read `pw:b1,b2,…/v0,v1,…`")?;
            let breaks = if b.trim().is_empty() { Vec::new() } else { numbers(b)? };
            Profile::step(breaks, numbers(v)?)?
        }
        other => bail!("unknown profile kind `{other}` (expected const, step or pw)"),
    };
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "N = 64\nT = 0.5\n[solve]\ncells = 32\n[simulate]\ncells = 16\n").unwrap();
        let o = vec!["obs_times=0.1,0.2".to_string(), "profile=const:0.7".to_string(), "mode=asymmetric".into()];
        let c = RunConfig::load(Some(&path), "solve", &o, Some(9)).unwrap();
        assert_eq!((c.n, c.t, c.cells, c.seed), (64, 0.5, 32, 9));
        assert_eq!(c.obs_times, vec![0.1, 0.2]);
        assert_eq!(c.times().unwrap(), vec![0.1, 0.2, 0.5]);
        assert_eq!(c.mode, Mode::Asymmetric);
        assert!(RunConfig::load(None, "solve", &["bogus=1".into()], None).is_err());
        assert!(RunConfig::load(None, "solve", &["novalue".into()], None).is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn profiles() {
        let p = parse_profile("step:0.8,0.3", GeometryKind::Torus).unwrap();
        assert_eq!((p.eval(0.25), p.eval(0.75)), (0.8, 0.3));
        let p = parse_profile("step:1.5,3", GeometryKind::Line).unwrap();
        assert_eq!((p.eval(-0.1), p.eval(0.1)), (1.5, 3.0));
        let p = parse_profile("pw:-0.25,0.25/0,0.6666,0", GeometryKind::Line).unwrap();
        assert_eq!(p.eval(0.0), 0.6666);
        assert!(parse_profile("wave:1", GeometryKind::Torus).is_err());
        assert!(parse_profile("0.5", GeometryKind::Torus).is_err());
    }
}
