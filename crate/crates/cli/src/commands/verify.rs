//! Named verification scenarios with fixed thresholds.

use anyhow::{bail, ensure, Result};
use fepzr_core::scenarios::{self, all_pass, CheckResult};

use super::{chart, Ctx};
use crate::config::RunConfig;
use crate::output::{num, Staging};

/// Scenarios that finish within seconds and ignore the size keys.
pub const QUICK: [&str; 7] = [
    "mapping-commutation",
    "round-trip",
    "stationarity",
    "flux-relation",
    "scheme-properties",
    "regularization",
    "entropy",
];

/// Scenarios driven by `N`, `replicas`, `T` (and `cells`, `obs_times`).
pub const SIZED: [&str; 5] = ["symmetric-hydro", "tagged-bump", "asymmetric-hydro", "attractiveness", "equilibration"];

/// Expands `quick`, `all` and comma-separated lists; rejects unknown names.
pub fn scenario_names(spec: &str) -> Result<Vec<&'static str>> {
    let mut out: Vec<&'static str> = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let add: Vec<&'static str> = match name {
            "quick" => QUICK.to_vec(),
            "all" => QUICK.iter().chain(&SIZED).copied().collect(),
            other => match QUICK.iter().chain(&SIZED).find(|s| **s == other) {
                Some(s) => vec![*s],
                None => bail!("unknown scenario `{other}`; known: quick, all, {}, {}", QUICK.join(", "), SIZED.join(", ")),
            },
        };
        for s in add {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    ensure!(!out.is_empty(), "no scenario selected");
    Ok(out)
}

fn equilibration_times(cfg: &RunConfig) -> Result<Vec<f64>> {
    let mut t = vec![0.0];
    t.extend(cfg.times()?.into_iter().filter(|&s| s > 0.0));
    Ok(t)
}

fn scenario(name: &str, cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<Vec<CheckResult>> {
    let seed = cfg.seed;
    match name {
        "mapping-commutation" => Ok(scenarios::mapping_commutation(seed, 10_000)?),
        "round-trip" => Ok(scenarios::mapping_round_trip()?),
        "stationarity" => Ok(scenarios::small_n_stationarity(seed, 1_000_000)?),
        "flux-relation" => Ok(scenarios::flux_relation(seed, 100_000)?),
        "scheme-properties" => Ok(scenarios::scheme_properties(seed, 50, 200)?),
        "regularization" => Ok(scenarios::regularization()?),
        "entropy" => Ok(scenarios::entropy_admissibility()?),
        "symmetric-hydro" => {
            let times = cfg.times()?;
            let s = scenarios::symmetric_step_study_at(cfg.n, cfg.replicas, &times, cfg.cells, seed)?;
            let params = format!("N={}, replicas={}, t={}, grid={}", s.n, s.replicas, s.time, cfg.cells);
            let checks = vec![
                CheckResult::at_most("L1 block density vs PDE", &params, s.l1, 0.05),
                CheckResult::at_most(
                    "|X1/N - chi|",
                    format!("{params}, chi={:.6}, degenerate={}", s.chi, s.degenerate),
                    s.tagged_mean,
                    0.02,
                ),
                scenarios::dual_offset_check(cfg.cells, s.time)?,
            ];
            if ctx.emit_plots {
                let mut w = out.csv("overlay.csv", &["series", "time", "x", "value"])?;
                for o in &s.overlays {
                    for (label, f) in [("simulated", &o.simulated), ("pde", &o.pde)] {
                        for (i, v) in f.cells.iter().enumerate() {
                            w.write_record([format!("{label} t={}", o.time), num(o.time), num(f.center(i)), num(*v)])?;
                        }
                    }
                }
                w.flush()?;
                chart(out, "overlay.csv", "overlay.svg", Some("series"), "x", "value", "block density and PDE solution")?;
            }
            Ok(checks)
        }
        "tagged-bump" => {
            let b = scenarios::asymmetric_bump_study(cfg.n, cfg.replicas, cfg.t, seed)?;
            let params = format!("N={}, replicas={}, t={}, sigma={:.6}", b.n, b.replicas, b.time, b.sigma);
            Ok(vec![
                CheckResult::at_most("|X0/N - sigma|", &params, b.tagged_mean, 0.02),
                CheckResult::at_most("invalid runs", "outer padding cell reached", b.invalid as f64, 0.0),
            ])
        }
        "asymmetric-hydro" => {
            let (checks, studies) = scenarios::asymmetric_hydrodynamics_studies(cfg.n, cfg.replicas, cfg.t, seed)?;
            if ctx.emit_plots {
                let mut w = out.csv("riemann_overlay.csv", &["series", "x", "value"])?;
                for s in &studies {
                    for (label, f) in [("simulated", &s.field), ("exact", &s.exact)] {
                        for (i, v) in f.cells.iter().enumerate() {
                            w.write_record([format!("{label} ({}, {})", s.left, s.right), num(f.center(i)), num(*v)])?;
                        }
                    }
                }
                w.flush()?;
                chart(out, "riemann_overlay.csv", "riemann_overlay.svg", Some("series"), "x", "value", "Riemann data")?;
            }
            Ok(checks)
        }
        "attractiveness" => Ok(scenarios::attractiveness(cfg.n, 100_000, seed)?),
        "equilibration" => {
            let (rows, checks) = scenarios::equilibration(2.0, cfg.n, &equilibration_times(cfg)?, cfg.replicas, seed)?;
            let mut w = out.csv("equilibration.csv", &["time", "tv"])?;
            for r in &rows {
                w.write_record([num(r.time), num(r.tv)])?;
            }
            w.flush()?;
            if ctx.emit_plots {
                chart(out, "equilibration.csv", "equilibration.svg", None, "time", "tv", "single-site TV distance")?;
            }
            Ok(checks)
        }
        other => bail!("unknown scenario `{other}`"),
    }
}

pub fn run(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<bool> {
    let names = scenario_names(&cfg.scenario)?;
    if names.iter().any(|n| SIZED.contains(n)) {
        cfg.validate()?;
    }
    let mut w = out.csv("report.csv", &["scenario", "check", "params", "value", "relation", "threshold", "pass"])?;
    let mut ok = true;
    for name in names {
        let checks = scenario(name, cfg, ctx, out)?;
        for c in &checks {
            eprintln!("{} {name}: {}", if c.pass { "PASS" } else { "FAIL" }, c.summary());
            w.write_record([
                name.to_string(),
                c.name.clone(),
                c.params.clone(),
                num(c.value),
                c.relation.symbol().to_string(),
                num(c.threshold),
                c.pass.to_string(),
            ])?;
        }
        ok &= all_pass(&checks);
    }
    w.flush()?;
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_lists() {
        assert_eq!(scenario_names("quick").unwrap().len(), QUICK.len());
        assert_eq!(scenario_names("all").unwrap().len(), QUICK.len() + SIZED.len());
        assert_eq!(scenario_names("round-trip, round-trip,entropy").unwrap(), vec!["round-trip", "entropy"]);
        assert!(scenario_names("nonsense").is_err());
        assert!(scenario_names(" , ").is_err());
    }
}
