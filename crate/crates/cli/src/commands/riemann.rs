//! Exact solutions of Riemann problems for the hyperbolic equations.

use anyhow::{ensure, Result};
use fepzr_core::pde::riemann_exact;
use serde::Serialize;

use super::{chart, flux, Ctx};
use crate::config::{Equation, RunConfig};
use crate::output::{num, Staging};

#[derive(Serialize)]
struct Waves {
    equation: Equation,
    speed_factor: f64,
    left: f64,
    right: f64,
    waves: Vec<fepzr_core::pde::riemann::Wave>,
}

/// Solves `∂c + (2p − 1) ∂f(c) = 0` with states `left` and `right` at 0 and
/// samples the solution on `cells` cells of the window at the horizon.
pub fn run(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<bool> {
    ensure!((0.0..=1.0).contains(&cfg.p), "p must lie in [0, 1]");
    ensure!(cfg.t > 0.0 && cfg.t.is_finite(), "the horizon T must be positive");
    ensure!(cfg.smoothing.is_none(), "Riemann problems are solved for the unsmoothed fluxes");
    let (a, b) = cfg.window()?;
    let mut hyperbolic = cfg.clone();
    hyperbolic.mode = fepzr_core::dynamics::Mode::Asymmetric;
    let f = flux(&hyperbolic)?;
    let s = 2.0 * cfg.p - 1.0;
    let sol = riemann_exact(&f, s, cfg.left, cfg.right)?;
    let field = sol.field(a, b, cfg.cells, cfg.t)?;

    let mut w = out.csv("riemann.csv", &["time", "x", "value"])?;
    for (i, v) in field.cells.iter().enumerate() {
        w.write_record([num(cfg.t), num(field.center(i)), num(*v)])?;
    }
    w.flush()?;
    out.json(
        "waves.json",
        &Waves { equation: cfg.equation, speed_factor: s, left: cfg.left, right: cfg.right, waves: sol.waves() },
    )?;
    if ctx.emit_plots {
        chart(out, "riemann.csv", "riemann.svg", None, "x", "value", "Riemann solution")?;
    }
    Ok(true)
}
