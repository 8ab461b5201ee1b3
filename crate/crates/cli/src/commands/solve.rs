//! Finite-volume solutions of the macroscopic equations.

use anyhow::{bail, Result};
use fepzr_core::dynamics::Mode;
use fepzr_core::pde::field::{DensityField, Trajectory};
use fepzr_core::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions, Viscosity};
use fepzr_core::pde::parabolic::{solve_parabolic, ParabolicOptions};

use super::{chart, flux, macro_geometry, Ctx};
use crate::config::{Equation, GeometryKind, RunConfig};
use crate::output::{num, Staging};

/// Symmetric runs solve the parabolic equation on the torus, asymmetric runs
/// the hyperbolic one on the window.
pub fn solve(cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let f = flux(cfg)?;
    let geometry = macro_geometry(cfg)?;
    let field0 = DensityField::from_profile(&cfg.profile()?, geometry, cfg.cells)?;
    let times = cfg.times()?;
    match cfg.mode {
        Mode::Symmetric => {
            if cfg.geometry != GeometryKind::Torus {
                bail!("the parabolic solver works on the torus; set geometry = \"torus\"");
            }
            if cfg.viscosity.is_some() {
                bail!("viscosity applies to the hyperbolic solver; use smoothing for the parabolic one");
            }
            let opts = ParabolicOptions { lambda: cfg.lambda, ..ParabolicOptions::at(times) };
            Ok(solve_parabolic(&field0, &f, cfg.t, &opts)?)
        }
        Mode::Asymmetric => {
            if cfg.geometry != GeometryKind::Line {
                bail!("the hyperbolic solver works on an interval; set geometry = \"line\" and a window");
            }
            if cfg.lambda.is_some() {
                bail!("lambda applies to the parabolic solver; use cfl for the hyperbolic one");
            }
            let viscosity = match (cfg.viscosity, cfg.equation) {
                (None, _) => Viscosity::None,
                (Some(e), Equation::Exclusion) => Viscosity::Exclusion(e),
                (Some(e), Equation::ZeroRange) => Viscosity::ZeroRange(e),
            };
            let opts = HyperbolicOptions { cfl: cfg.cfl, viscosity, ..HyperbolicOptions::at(times) };
            Ok(solve_hyperbolic(&field0, &f, cfg.p, cfg.t, &opts)?)
        }
    }
}

pub fn run(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<bool> {
    let traj = solve(cfg)?;
    let mut w = out.csv("field.csv", &["time", "x", "value"])?;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        for (i, v) in f.cells.iter().enumerate() {
            w.write_record([num(*t), num(f.center(i)), num(*v)])?;
        }
    }
    w.flush()?;
    if ctx.emit_plots {
        chart(out, "field.csv", "field.svg", Some("time"), "x", "value", "macroscopic density")?;
    }
    Ok(true)
}
