pub mod map;
pub mod riemann;
pub mod simulate;
pub mod solve;
pub mod sweep;
pub mod verify;

use anyhow::{ensure, Context, Result};
use fepzr_core::dynamics::{fep_padding, fzrp_padding, Mode, SimParams};
use fepzr_core::harness::default_block_radius;
use fepzr_core::pde::field::FieldGeometry;
use fepzr_core::pde::flux::{Flux, FluxKind};
use fepzr_core::rng::StreamSeed;
use fepzr_core::LatticeGeometry;

use crate::config::{Equation, GeometryKind, Process, RunConfig};
use crate::output::Staging;
use crate::plot;

/// Settings shared by every subcommand.
pub struct Ctx {
    pub emit_plots: bool,
}

/// Tail probability tolerated when choosing line-window paddings.
const PADDING_TAIL: f64 = 1e-12;

pub fn sim_params(cfg: &RunConfig, seed: StreamSeed) -> Result<SimParams> {
    let base = match cfg.mode {
        Mode::Symmetric => SimParams::symmetric(cfg.p, cfg.n, cfg.t, seed),
        Mode::Asymmetric => SimParams::asymmetric(cfg.p, cfg.n, cfg.t, seed),
    };
    let params = base.with_observations(cfg.times()?);
    params.validate()?;
    Ok(params)
}

/// Lattice of a run: the torus `ℤ/Nℤ`, or the sites of `[aN, bN)` padded so
/// that the outer cells stay out of reach with overwhelming probability.
pub fn lattice(cfg: &RunConfig, params: &SimParams) -> Result<LatticeGeometry> {
    match cfg.geometry {
        GeometryKind::Torus => Ok(LatticeGeometry::torus(cfg.n)?),
        GeometryKind::Line => {
            let (lo, hi) = site_window(cfg)?;
            let padding = cfg.padding.unwrap_or_else(|| match cfg.process {
                Process::Fep => fep_padding(params, PADDING_TAIL),
                Process::Fzrp | Process::Coupled => fzrp_padding(params, PADDING_TAIL),
            });
            Ok(LatticeGeometry::line_window(lo, hi, padding)?)
        }
    }
}

pub fn site_window(cfg: &RunConfig) -> Result<(i64, i64)> {
    let (a, b) = cfg.window()?;
    let n = cfg.n as f64;
    let (lo, hi) = ((a * n).round() as i64, (b * n).round() as i64);
    ensure!(lo < hi, "window [{a}, {b}] holds no sites at N = {}", cfg.n);
    Ok((lo, hi))
}

/// Domain of a purely macroscopic computation: the torus or the window.
pub fn macro_geometry(cfg: &RunConfig) -> Result<FieldGeometry> {
    Ok(match cfg.geometry {
        GeometryKind::Torus => FieldGeometry::Torus,
        GeometryKind::Line => {
            let (lo, hi) = cfg.window()?;
            FieldGeometry::Interval { lo, hi }
        }
    })
}

/// Macroscopic region covered by observed sites.
pub fn field_geometry(cfg: &RunConfig) -> Result<FieldGeometry> {
    Ok(match cfg.geometry {
        GeometryKind::Torus => FieldGeometry::Torus,
        GeometryKind::Line => {
            let (lo, hi) = site_window(cfg)?;
            let n = cfg.n as f64;
            FieldGeometry::Interval { lo: lo as f64 / n, hi: hi as f64 / n }
        }
    })
}

pub fn block_radius(cfg: &RunConfig) -> usize {
    cfg.block.unwrap_or_else(|| default_block_radius(cfg.n))
}

/// Checks that block-density outputs can be binned onto `cells` cells.
pub fn check_cells(sites: usize, cells: usize) -> Result<()> {
    ensure!(cells > 0 && sites.is_multiple_of(cells), "{sites} observed sites do not split into cells = {cells} equal cells");
    Ok(())
}

/// Flux of the macroscopic equation for the configured mode and density kind.
pub fn flux(cfg: &RunConfig) -> Result<Flux> {
    let kind = match (cfg.mode, cfg.equation, cfg.smoothing) {
        (Mode::Symmetric, Equation::Exclusion, None) => FluxKind::H,
        (Mode::Symmetric, Equation::ZeroRange, None) => FluxKind::G,
        (Mode::Symmetric, Equation::Exclusion, Some(eps)) => FluxKind::SmoothedH { eps },
        (Mode::Symmetric, Equation::ZeroRange, Some(eps)) => FluxKind::SmoothedG { eps },
        (Mode::Asymmetric, Equation::Exclusion, None) => FluxKind::FrakH,
        (Mode::Asymmetric, Equation::ZeroRange, None) => FluxKind::G,
        (Mode::Asymmetric, Equation::Exclusion, Some(eps)) => FluxKind::SmoothedFrakH { eps },
        (Mode::Asymmetric, Equation::ZeroRange, Some(eps)) => FluxKind::SmoothedFrakG { eps },
    };
    Ok(Flux::from_kind(kind)?)
}

/// Equation matching the densities a process produces.
pub fn equation_of(process: Process) -> Equation {
    match process {
        Process::Fep => Equation::Exclusion,
        Process::Fzrp | Process::Coupled => Equation::ZeroRange,
    }
}

pub fn chart(staging: &Staging, csv: &str, svg: &str, group: Option<&str>, x: &str, y: &str, title: &str) -> Result<()> {
    let series = plot::series_from_csv(&staging.path(csv), group, x, y)?;
    let text = plot::line_chart(title, x, y, &series).with_context(|| format!("plotting {csv}"))?;
    staging.write(svg, text)
}
