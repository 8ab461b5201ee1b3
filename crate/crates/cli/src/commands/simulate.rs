//! Replica ensembles of the exclusion, zero-range or coupled zero-range process.

use anyhow::{bail, ensure, Context, Result};
use fepzr_core::dynamics::{run_coupled_fzrp, run_fep, run_fep_with_tagged_hole, run_fzrp, sign_changes, ObservationSet, SimParams};
use fepzr_core::harness::{block_density_field, run_replicas};
use fepzr_core::measures::{sample_bernoulli_profile, sample_geometric_profile, sample_monotone_coupling};
use fepzr_core::rng::StreamSeed;
use fepzr_core::lattice::{read_snapshot, SnapshotData};
use fepzr_core::LatticeGeometry;
use serde::Serialize;

use super::{block_radius, chart, check_cells, lattice, sim_params, Ctx};
use crate::config::{Process, RunConfig};
use crate::output::{num, Staging};

#[derive(Serialize)]
struct ReplicaSummary {
    replica: u32,
    events: u64,
    degenerate: bool,
    outer_cell_touched: bool,
    max_height: u32,
}

#[derive(Serialize)]
struct Metadata<'a> {
    process: Process,
    geometry: LatticeGeometry,
    clock_rate: f64,
    block_radius: usize,
    times: &'a [f64],
    replicas: Vec<ReplicaSummary>,
}

/// Everything checked before any run starts.
pub struct Plan {
    pub params: SimParams,
    pub geometry: LatticeGeometry,
    pub alpha_bar: Option<f64>,
    /// Shared initial configuration read from `input`.
    pub initial: Option<SnapshotData>,
}

pub fn plan(cfg: &RunConfig) -> Result<Plan> {
    cfg.validate()?;
    let params = sim_params(cfg, StreamSeed::new(cfg.seed, 0))?;
    if let Some(path) = &cfg.input {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading input {path}"))?;
        let (data, _) = read_snapshot(&text)?;
        let geometry = match (&data, cfg.process) {
            (SnapshotData::Exclusion(eta), Process::Fep) => *eta.geometry(),
            (SnapshotData::ZeroRange(omega), Process::Fzrp) => *omega.geometry(),
            _ => bail!("input snapshot does not match process = {:?}", cfg.process),
        };
        check_cells(geometry.window().len(), cfg.cells)?;
        return Ok(Plan { params, geometry, alpha_bar: None, initial: Some(data) });
    }
    let geometry = lattice(cfg, &params)?;
    check_cells(geometry.window().len(), cfg.cells)?;
    let profile = cfg.profile()?;
    let alpha_bar = match cfg.process {
        Process::Fep => {
            profile.check_exclusion()?;
            None
        }
        Process::Fzrp => {
            profile.check_zero_range()?;
            None
        }
        Process::Coupled => {
            let sup = profile.check_zero_range()?;
            let bar = cfg.alpha_bar.unwrap_or(sup + 1.0);
            ensure!(bar >= sup + 1.0, "alpha_bar = {bar} must be at least sup alpha + 1 = {}", sup + 1.0);
            Some(bar)
        }
    };
    Ok(Plan { params, geometry, alpha_bar, initial: None })
}

/// Runs every replica; coupled runs yield both copies.
pub fn ensemble(cfg: &RunConfig, plan: &Plan) -> Result<Vec<Vec<ObservationSet>>> {
    let profile = cfg.profile()?;
    let runs = run_replicas(cfg.replicas, |r| {
        let s = StreamSeed::new(cfg.seed, r);
        let params = SimParams { seed: s, ..plan.params.clone() };
        Ok(match (cfg.process, &plan.initial) {
            (Process::Fep, Some(SnapshotData::Exclusion(eta))) => {
                vec![if cfg.tag { run_fep_with_tagged_hole(eta, &params)? } else { run_fep(eta, &params)? }]
            }
            (Process::Fzrp, Some(SnapshotData::ZeroRange(omega))) => vec![run_fzrp(omega, &params)?],
            (_, Some(_)) => unreachable!("planned input matches the process"),
            (Process::Fep, None) => {
                let eta = sample_bernoulli_profile(&profile, plan.geometry, cfg.n, s)?;
                vec![if cfg.tag { run_fep_with_tagged_hole(&eta, &params)? } else { run_fep(&eta, &params)? }]
            }
            (Process::Fzrp, None) => vec![run_fzrp(&sample_geometric_profile(&profile, plan.geometry, cfg.n, s)?, &params)?],
            (Process::Coupled, None) => {
                let bar = plan.alpha_bar.expect("planned coupling bound");
                let (lower, upper) = sample_monotone_coupling(&profile, bar, plan.geometry, cfg.n, s)?;
                let (a, b) = run_coupled_fzrp(&lower, &upper, &params)?;
                vec![a, b]
            }
        })
    })?;
    Ok(runs)
}

/// Output times: the initial state followed by every observation.
fn output_times(cfg: &RunConfig) -> Result<Vec<f64>> {
    let mut t = vec![0.0];
    t.extend(cfg.times()?.into_iter().filter(|&s| s > 0.0));
    Ok(t)
}

pub fn run(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<bool> {
    let plan = plan(cfg)?;
    let times = output_times(cfg)?;
    let runs = ensemble(cfg, &plan)?;
    let ell = block_radius(cfg);
    let n_copies = runs[0].len();

    let mut w = out.csv("block_density.csv", &["replica", "copy", "time", "x", "value"])?;
    for (r, copies) in runs.iter().enumerate() {
        for (c, obs) in copies.iter().enumerate() {
            for &t in &times {
                let f = block_density_field(std::slice::from_ref(obs), t, ell, cfg.n, cfg.cells)?;
                for (i, v) in f.cells.iter().enumerate() {
                    w.write_record([r.to_string(), c.to_string(), num(t), num(f.center(i)), num(*v)])?;
                }
            }
        }
    }
    w.flush()?;

    let mut w = out.csv("density_mean.csv", &["copy", "time", "x", "value", "series"])?;
    for c in 0..n_copies {
        let members: Vec<ObservationSet> = runs.iter().map(|r| r[c].clone()).collect();
        for &t in &times {
            let f = block_density_field(&members, t, ell, cfg.n, cfg.cells)?;
            for (i, v) in f.cells.iter().enumerate() {
                let series = if n_copies > 1 { format!("t={t} copy {c}") } else { format!("t={t}") };
                w.write_record([c.to_string(), num(t), num(f.center(i)), num(*v), series])?;
            }
        }
    }
    w.flush()?;

    let mut w = out.csv("events.csv", &["replica", "time", "events"])?;
    for (r, copies) in runs.iter().enumerate() {
        for &t in &times {
            w.write_record([r.to_string(), num(t), copies[0].at(t)?.events.to_string()])?;
        }
    }
    w.flush()?;

    if cfg.process == Process::Fep && cfg.tag {
        let mut w = out.csv("tagged.csv", &["replica", "time", "site", "scaled"])?;
        for (r, copies) in runs.iter().enumerate() {
            for &t in &times {
                if let Some(x) = copies[0].at(t)?.tagged {
                    w.write_record([r.to_string(), num(t), x.to_string(), num(x as f64 / cfg.n as f64)])?;
                }
            }
        }
        w.flush()?;
    }

    if cfg.process == Process::Coupled {
        let torus = plan.geometry.is_torus();
        let mut w = out.csv("sign_changes.csv", &["replica", "time", "sign_changes"])?;
        for (r, copies) in runs.iter().enumerate() {
            for &t in &times {
                let (a, b) = (copies[0].at(t)?, copies[1].at(t)?);
                w.write_record([r.to_string(), num(t), sign_changes(&a.values, &b.values, torus).to_string()])?;
            }
        }
        w.flush()?;
    }

    if cfg.write_sites {
        let mut w = out.csv("configuration.csv", &["replica", "copy", "time", "site", "value"])?;
        for (r, copies) in runs.iter().enumerate() {
            for (c, obs) in copies.iter().enumerate() {
                for &t in &times {
                    for (i, v) in obs.at(t)?.values.iter().enumerate() {
                        let site = plan.geometry.site_of(i);
                        w.write_record([r.to_string(), c.to_string(), num(t), site.to_string(), v.to_string()])?;
                    }
                }
            }
        }
        w.flush()?;
    }

    let replicas = runs
        .iter()
        .enumerate()
        .map(|(r, c)| ReplicaSummary {
            replica: r as u32,
            events: c[0].event_count(),
            degenerate: c[0].flags.degenerate,
            outer_cell_touched: c[0].flags.outer_cell_touched,
            max_height: c[0].flags.max_height,
        })
        .collect();
    out.json(
        "metadata.json",
        &Metadata {
            process: cfg.process,
            geometry: plan.geometry,
            clock_rate: plan.params.clock_rate(),
            block_radius: ell,
            times: &times,
            replicas,
        },
    )?;

    if ctx.emit_plots {
        chart(out, "density_mean.csv", "density_mean.svg", Some("series"), "x", "value", "replica-averaged block density")?;
    }
    // The flag only signals a too-small padding when the data vanish at the
    // outer cells; otherwise those cells move from the start.
    let g = plan.geometry;
    let profile = cfg.profile()?;
    let edge = |i: usize| profile.eval(g.site_of(i) as f64 / cfg.n as f64);
    if plan.initial.is_none() && !g.is_torus() && edge(0) == 0.0 && edge(g.len() - 1) == 0.0 {
        for (r, c) in runs.iter().enumerate() {
            if c[0].flags.outer_cell_touched {
                eprintln!("warning: replica {r} reached the outer cell of the line window; increase padding");
            }
        }
    }
    Ok(true)
}
