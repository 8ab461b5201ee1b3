//! Hydrodynamic error of a simulation ensemble as one parameter varies.

use anyhow::{bail, ensure, Result};
use fepzr_core::dynamics::Mode;
use fepzr_core::harness::block_density_field;
use fepzr_core::pde::field::DensityField;
use fepzr_core::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions};
use fepzr_core::pde::parabolic::{solve_parabolic, ParabolicOptions};

use super::simulate::{ensemble, plan};
use super::{block_radius, chart, equation_of, field_geometry, flux, Ctx};
use crate::config::{GeometryKind, Process, RunConfig};
use crate::output::{num, Staging};

pub const KEYS: [&str; 7] = ["n", "replicas", "p", "t", "cells", "block", "seed"];

fn set(cfg: &RunConfig, key: &str, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    let count = |what: &str| -> Result<u64> {
        ensure!(value >= 0.0 && value.fract() == 0.0, "{what} takes nonnegative integers, got {value}");
        Ok(value as u64)
    };
    match key {
        "n" => c.n = count("n")? as usize,
        "replicas" => c.replicas = u32::try_from(count("replicas")?)?,
        "p" => c.p = value,
        "t" => c.t = value,
        "cells" => c.cells = count("cells")? as usize,
        "block" => c.block = Some(count("block")? as usize),
        "seed" => c.seed = count("seed")?,
        other => bail!("cannot sweep `{other}`; sweepable keys: {}", KEYS.join(", ")),
    }
    Ok(c)
}

/// PDE solution matching the simulated process, on the grid of the block field.
fn reference(cfg: &RunConfig) -> Result<DensityField> {
    let mut pde_cfg = cfg.clone();
    pde_cfg.equation = equation_of(cfg.process);
    let f = flux(&pde_cfg)?;
    let field0 = DensityField::from_profile(&cfg.profile()?, field_geometry(cfg)?, cfg.cells)?;
    let traj = match cfg.mode {
        Mode::Symmetric => {
            ensure!(cfg.geometry == GeometryKind::Torus, "symmetric comparisons run on the torus");
            solve_parabolic(&field0, &f, cfg.t, &ParabolicOptions { lambda: cfg.lambda, ..ParabolicOptions::at(vec![]) })?
        }
        Mode::Asymmetric => {
            ensure!(cfg.geometry == GeometryKind::Line, "asymmetric comparisons run on a line window");
            let opts = HyperbolicOptions { cfl: cfg.cfl, ..HyperbolicOptions::at(vec![]) };
            solve_hyperbolic(&field0, &f, cfg.p, cfg.t, &opts)?
        }
    };
    Ok(traj.last().clone())
}

/// L¹ distance between the replica-averaged block density at the horizon
/// and the PDE solution `pde`, and the total number of events.
fn hydro_comparison(cfg: &RunConfig, pde: &DensityField) -> Result<(f64, u64)> {
    let plan = plan(cfg)?;
    let runs: Vec<_> = ensemble(cfg, &plan)?.into_iter().map(|mut c| c.swap_remove(0)).collect();
    let sim = block_density_field(&runs, cfg.t, block_radius(cfg), cfg.n, cfg.cells)?;
    let events = runs.iter().map(|r| r.event_count()).sum();
    Ok((sim.l1_distance(pde)?, events))
}

pub fn run(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<bool> {
    ensure!(!cfg.sweep_values.is_empty(), "sweep_values is empty");
    let key = cfg.sweep_key.to_lowercase();
    let configs = cfg.sweep_values.iter().map(|&v| set(cfg, &key, v)).collect::<Result<Vec<_>>>()?;
    ensure!(cfg.process != Process::Coupled, "sweeps compare a single process with its PDE; use fep or fzrp");
    ensure!(cfg.input.is_none(), "sweeps sample their initial data from `profile`; drop `input`");
    let references = configs
        .iter()
        .map(|c| {
            plan(c)?;
            reference(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w = out.csv("sweep.csv", &["key", "value", "l1", "events"])?;
    for ((c, pde), v) in configs.iter().zip(&references).zip(&cfg.sweep_values) {
        let (l1, events) = hydro_comparison(c, pde)?;
        eprintln!("{key} = {v}: L1 = {l1:.4e}, {events} events");
        w.write_record([key.clone(), num(*v), num(l1), events.to_string()])?;
    }
    w.flush()?;
    if ctx.emit_plots {
        chart(out, "sweep.csv", "sweep.svg", None, "value", "l1", &format!("hydrodynamic L1 error against {key}"))?;
    }
    Ok(true)
}
