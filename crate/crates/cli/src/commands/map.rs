//! The exclusion ↔ zero-range transformation on configurations and on fields.

use anyhow::{bail, ensure, Context, Result};
use fepzr_core::lattice::{exclusion_snapshot, read_snapshot, zero_range_snapshot, SnapshotData};
use fepzr_core::mapping::{macro_ex_to_zr, macro_zr_to_ex, map_exclusion_to_zr, map_zr_to_exclusion, TagState};
use fepzr_core::measures::{sample_bernoulli_profile, sample_geometric_profile};
use fepzr_core::pde::field::{DensityField, FieldGeometry};
use fepzr_core::rng::StreamSeed;
use fepzr_core::{ExclusionConfig, LatticeGeometry, ZeroRangeConfig};
use serde::Serialize;

use super::{chart, macro_geometry, site_window, Ctx};
use crate::config::{Direction, GeometryKind, Level, RunConfig};
use crate::output::{num, Staging};

#[derive(Serialize)]
struct Transform {
    direction: Direction,
    theta: f64,
    offset: f64,
}

fn read_input(cfg: &RunConfig) -> Result<Option<String>> {
    cfg.input
        .as_ref()
        .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading input {p}")))
        .transpose()
}

fn micro_lattice(cfg: &RunConfig) -> Result<LatticeGeometry> {
    Ok(match cfg.geometry {
        GeometryKind::Torus => LatticeGeometry::torus(cfg.n)?,
        GeometryKind::Line => {
            let (lo, hi) = site_window(cfg)?;
            LatticeGeometry::line_window(lo, hi, cfg.padding.unwrap_or(0))?
        }
    })
}

/// Exclusion window rebuilt from a zero-range configuration whose tagged
/// empty site is placed at `x1`.
fn exclusion_window(omega: &ZeroRangeConfig, x1: i64) -> Result<LatticeGeometry> {
    let g = omega.geometry();
    if g.is_torus() {
        return Ok(LatticeGeometry::torus(omega.len() + omega.total_mass() as usize)?);
    }
    let w = omega.heights();
    ensure!(w.len() >= 2, "a line zero-range configuration needs at least one empty site between its boundary piles");
    let j0 = usize::try_from(-1 - g.first_site()).ok().filter(|&j| j + 1 < w.len());
    let j0 = j0.context("zero-range labels do not place a tagged empty site")?;
    let left: i64 = w[1..=j0].iter().map(|&h| h as i64 + 1).sum::<i64>() + w[0] as i64;
    let first = x1 - left;
    let len = (omega.total_mass() as usize + w.len() - 1) as i64;
    Ok(LatticeGeometry::line_window(first, first + len, 0)?)
}

fn micro(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let seed = StreamSeed::new(cfg.seed, 0);
    let input = read_input(cfg)?;
    let parsed = input.as_deref().map(read_snapshot).transpose()?;
    match cfg.direction {
        Direction::ExToZr => {
            let (eta, time): (ExclusionConfig, f64) = match parsed {
                Some((SnapshotData::Exclusion(eta), t)) => (eta, t),
                Some(_) => bail!("direction ex-to-zr needs an exclusion snapshot"),
                None => {
                    let profile = cfg.profile()?;
                    profile.check_exclusion()?;
                    (sample_bernoulli_profile(&profile, micro_lattice(cfg)?, cfg.n, seed)?, 0.0)
                }
            };
            let (omega, tag) = map_exclusion_to_zr(&eta)?;
            out.write("input.txt", exclusion_snapshot(&eta, time))?;
            out.write("output.txt", zero_range_snapshot(&omega, time))?;
            out.json("tag.json", &tag)?;
        }
        Direction::ZrToEx => {
            let (omega, time): (ZeroRangeConfig, f64) = match parsed {
                Some((SnapshotData::ZeroRange(omega), t)) => (omega, t),
                Some(_) => bail!("direction zr-to-ex needs a zero-range snapshot"),
                None => {
                    let profile = cfg.profile()?;
                    profile.check_zero_range()?;
                    (sample_geometric_profile(&profile, micro_lattice(cfg)?, cfg.n, seed)?, 0.0)
                }
            };
            ensure!(cfg.offset.fract() == 0.0, "the tagged site offset must be an integer label, got {}", cfg.offset);
            let x1 = cfg.offset as i64;
            let geometry = exclusion_window(&omega, x1)?;
            let tag = TagState { x1, m: omega.len().saturating_sub(usize::from(!geometry.is_torus())), degenerate: false };
            let eta = map_zr_to_exclusion(&omega, tag, geometry)?;
            out.write("input.txt", zero_range_snapshot(&omega, time))?;
            out.write("output.txt", exclusion_snapshot(&eta, time))?;
            out.json("tag.json", &tag)?;
        }
    }
    Ok(())
}

fn macro_level(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<()> {
    ensure!(cfg.cells >= 1, "cells must be positive");
    let (field, time) = match read_input(cfg)? {
        Some(text) => DensityField::from_text(&text)?,
        None => (DensityField::from_profile(&cfg.profile()?, macro_geometry(cfg)?, cfg.cells)?, 0.0),
    };
    let (mapped, theta) = match cfg.direction {
        Direction::ExToZr => {
            let (f, t) = macro_ex_to_zr(&field, cfg.offset, cfg.cells)?;
            (f, t.theta)
        }
        Direction::ZrToEx => {
            let theta = if field.geometry == FieldGeometry::Torus { 1.0 / (1.0 + field.mass()) } else { 1.0 };
            let (f, t) = macro_zr_to_ex(&field, cfg.offset, theta, cfg.cells)?;
            (f, t.theta)
        }
    };
    out.write("input.txt", field.to_text(time))?;
    out.write("output.txt", mapped.to_text(time))?;
    out.json("transform.json", &Transform { direction: cfg.direction, theta, offset: cfg.offset })?;
    let mut w = out.csv("map.csv", &["field", "x", "value"])?;
    for (name, f) in [("input", &field), ("output", &mapped)] {
        for (i, v) in f.cells.iter().enumerate() {
            w.write_record([name.to_string(), num(f.center(i)), num(*v)])?;
        }
    }
    w.flush()?;
    if ctx.emit_plots {
        chart(out, "map.csv", "map.svg", Some("field"), "x", "value", "density before and after the map")?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, ctx: &Ctx, out: &Staging) -> Result<bool> {
    match cfg.level {
        Level::Micro => micro(cfg, out)?,
        Level::Macro => macro_level(cfg, ctx, out)?,
    }
    Ok(true)
}
