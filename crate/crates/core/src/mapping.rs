//! The exclusion ↔ zero-range correspondence, exact on configurations and
//! trajectories and numerical on density fields.
//!
//! Microscopically, empty sites of the exclusion configuration become the
//! sites of the zero-range configuration and the particles between two
//! consecutive empty sites become the pile on the zero-range site in between.
//! Zero-range site `k` holds the particles following empty site `k`, counted
//! from the tagged empty site `X₁`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ExclusionEngine, ObservationSet, RunFlags, SimParams, Snapshot, ZeroRangeEngine};
use crate::error::{Error, Result};
use crate::lattice::{ExclusionConfig, LatticeGeometry, ZeroRangeConfig};
use crate::pde::field::{DensityField, FieldGeometry};
use crate::pde::flux::Flux;
use crate::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions};
use crate::pde::parabolic::{solve_parabolic, ParabolicOptions};
use crate::rng::StreamSeed;

/// Position of the tagged empty site and the number of zero-range sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagState {
    /// Label of the tagged empty site (unwrapped on the torus).
    pub x1: i64,
    /// Number of empty sites, or 1 for a configuration without any.
    pub m: usize,
    /// No empty site: the single-site convention `M = 1`, `X₁ = 1` applies.
    pub degenerate: bool,
}

/// Maps `η` with the tag on the first empty site at or to the right of the
/// origin.
///
/// On a line window the zero-range configuration has one site per empty site
/// plus two boundary piles: array index 0 holds the particles left of the
/// first empty site, index `j + 1` those following empty site `j`. Labels are
/// shifted so that the pile following the tagged empty site has label 0.
pub fn map_exclusion_to_zr(eta: &ExclusionConfig) -> Result<(ZeroRangeConfig, TagState)> {
    let holes = eta.holes();
    match *eta.geometry() {
        LatticeGeometry::Torus { sites } => {
            let Some(&x1) = holes.first() else {
                let omega = ZeroRangeConfig::new(LatticeGeometry::degenerate_torus(), vec![sites as u32])?;
                return Ok((omega, TagState { x1: 1, m: 1, degenerate: true }));
            };
            map_torus_from(eta, x1, &holes)
        }
        LatticeGeometry::LineWindow { .. } => map_line(eta, &holes),
    }
}

/// Map with the tag on a given empty site (on the torus any integer label
/// whose residue is empty).
pub fn map_exclusion_to_zr_from(eta: &ExclusionConfig, x1: i64) -> Result<(ZeroRangeConfig, TagState)> {
    let holes = eta.holes();
    if eta.geometry().is_torus() {
        if eta.get(x1) != 0 {
            return Err(Error::Mapping(format!("tag {x1} is not an empty site")));
        }
        return map_torus_from(eta, x1, &holes);
    }
    let j0 = holes.iter().position(|&h| h == x1).ok_or(Error::Mapping(format!("tag {x1} is not an empty site")))?;
    map_line_from(eta, &holes, j0)
}

fn map_torus_from(eta: &ExclusionConfig, x1: i64, holes: &[i64]) -> Result<(ZeroRangeConfig, TagState)> {
    let n = eta.len() as i64;
    let m = holes.len();
    let start = holes.iter().position(|&h| h == x1.rem_euclid(n)).expect("tag is an empty site");
    let heights = (0..m)
        .map(|k| {
            let (a, b) = (holes[(start + k) % m], holes[(start + k + 1) % m]);
            ((b - a - 1).rem_euclid(n)) as u32
        })
        .collect::<Vec<_>>();
    // A single empty site is followed by all the particles.
    let heights = if m == 1 { vec![(n - 1) as u32] } else { heights };
    let omega = ZeroRangeConfig::new(zr_torus(m)?, heights)?;
    Ok((omega, TagState { x1, m, degenerate: false }))
}

fn zr_torus(m: usize) -> Result<LatticeGeometry> {
    if m == 1 {
        Ok(LatticeGeometry::degenerate_torus())
    } else {
        LatticeGeometry::torus(m)
    }
}

fn map_line(eta: &ExclusionConfig, holes: &[i64]) -> Result<(ZeroRangeConfig, TagState)> {
    let Some(j0) = holes.iter().position(|&h| h >= 0) else {
        return Err(Error::Mapping("no empty site at or to the right of the origin inside the window".into()));
    };
    map_line_from(eta, holes, j0)
}

fn map_line_from(eta: &ExclusionConfig, holes: &[i64], j0: usize) -> Result<(ZeroRangeConfig, TagState)> {
    let g = eta.geometry();
    let k = holes.len();
    let last = g.site_of(g.len() - 1);
    let mut heights = Vec::with_capacity(k + 1);
    heights.push((holes[0] - g.first_site()) as u32);
    for w in holes.windows(2) {
        heights.push((w[1] - w[0] - 1) as u32);
    }
    heights.push((last - holes[k - 1]) as u32);
    let lo = -1 - j0 as i64;
    let geometry = LatticeGeometry::line_window(lo, lo + k as i64 + 1, 0)?;
    Ok((ZeroRangeConfig::new(geometry, heights)?, TagState { x1: holes[j0], m: k, degenerate: false }))
}

/// Inverse map: rebuilds `η` on `geometry` from `ω` and the tag.
pub fn map_zr_to_exclusion(omega: &ZeroRangeConfig, tag: TagState, geometry: LatticeGeometry) -> Result<ExclusionConfig> {
    let mass = omega.total_mass() as usize;
    match geometry {
        LatticeGeometry::Torus { sites } => {
            if tag.degenerate {
                if omega.len() != 1 || mass != sites {
                    return Err(Error::Mapping("degenerate tag needs a single pile holding every particle".into()));
                }
                return ExclusionConfig::from_bits(geometry, vec![1; sites]);
            }
            if !omega.geometry().is_torus() || mass + omega.len() != sites {
                return Err(Error::Mapping(format!(
                    "{} particles on {} sites do not fill a torus of {sites} sites",
                    mass,
                    omega.len()
                )));
            }
            let mut bits = vec![1u8; sites];
            let mut x = tag.x1;
            for &h in omega.heights() {
                bits[x.rem_euclid(sites as i64) as usize] = 0;
                x += h as i64 + 1;
            }
            ExclusionConfig::from_bits(geometry, bits)
        }
        LatticeGeometry::LineWindow { .. } => {
            let k = omega.len().checked_sub(1).filter(|&k| k > 0).ok_or(Error::Mapping("no empty sites".into()))?;
            if mass + k != geometry.len() {
                return Err(Error::Mapping(format!("{mass} particles and {k} holes do not fill {} sites", geometry.len())));
            }
            let j0 = (-1 - omega.geometry().first_site()) as usize;
            if j0 >= k {
                return Err(Error::Mapping("zero-range labels do not place a tagged empty site".into()));
            }
            let w = omega.heights();
            let mut holes = vec![0i64; k];
            holes[j0] = tag.x1;
            for j in j0 + 1..k {
                holes[j] = holes[j - 1] + w[j] as i64 + 1;
            }
            for j in (0..j0).rev() {
                holes[j] = holes[j + 1] - w[j + 1] as i64 - 1;
            }
            if holes[0] - w[0] as i64 != geometry.first_site() {
                return Err(Error::Mapping("tag position inconsistent with the window".into()));
            }
            let mut bits = vec![1u8; geometry.len()];
            for h in holes {
                let i = geometry.index_of(h).ok_or(Error::Mapping(format!("empty site {h} outside the window")))?;
                bits[i] = 0;
            }
            ExclusionConfig::from_bits(geometry, bits)
        }
    }
}

/// Outcome of replaying an exclusion trajectory through the mapping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub events: u64,
    /// First event at which the mapped exclusion state and the zero-range
    /// state evolved by the induced pile move disagree.
    pub first_discrepancy: Option<(u64, String)>,
    /// Whether `X₁(t) − X₁(0) = −J(t)` held after every event, with `J` the
    /// zero-range current into the pile following the tagged empty site.
    pub tag_current_identity: bool,
}

impl CommutationReport {
    pub fn passed(&self) -> bool {
        self.first_discrepancy.is_none() && self.tag_current_identity
    }
}

/// Runs the exclusion dynamics for up to `max_events` events and checks,
/// after each one, that mapping commutes with the dynamics: the exclusion
/// jump induces exactly one allowed pile move, and applying it to the
/// zero-range state gives the map of the new exclusion state.
pub fn trajectory_commutation_check(
    eta0: &ExclusionConfig,
    p: f64,
    p_prime: f64,
    seed: StreamSeed,
    max_events: u64,
) -> Result<CommutationReport> {
    let (omega0, tag0) = map_exclusion_to_zr(eta0)?;
    let mut report = CommutationReport { events: 0, first_discrepancy: None, tag_current_identity: true };
    if tag0.degenerate {
        return Ok(report);
    }
    let geometry = *eta0.geometry();
    let torus = geometry.is_torus();
    let mut engine = ExclusionEngine::new(eta0, p, p_prime, seed);
    engine.track_tagged_hole();
    let mut omega = omega0.heights().to_vec();
    // Zero-range array index of each empty site, by exclusion array index.
    let mut owner: Vec<Option<usize>> = vec![None; geometry.len()];
    let holes = eta0.holes();
    let offset = if torus { holes.iter().position(|&h| h == tag0.x1).unwrap() } else { 0 };
    for (j, &h) in holes.iter().enumerate() {
        let k = if torus { (j + holes.len() - offset) % holes.len() } else { j };
        owner[geometry.index_of(h).unwrap()] = Some(k);
    }
    let m = omega.len();
    let tag_edge = if torus { m - 1 } else { (-1 - omega0.geometry().first_site()) as usize };
    let mut current = 0i64;
    while report.events < max_events {
        let Some(mv) = engine.step() else { break };
        report.events += 1;
        let fail = |msg: String| Some((report.events, msg));
        let k = owner[mv.to].take().expect("exclusion jumps land on empty sites");
        owner[mv.from] = Some(k);
        // A right jump fills hole k from the pile preceding it; a left jump
        // from the pile following it.
        let rightward = if torus { mv.to == (mv.from + 1) % geometry.len() } else { mv.to == mv.from + 1 };
        let (src, dst) = match (rightward, torus) {
            (true, true) => ((k + m - 1) % m, k),
            (false, true) => (k, (k + m - 1) % m),
            (true, false) => (k, k + 1),
            (false, false) => (k + 1, k),
        };
        if omega[src] < 2 {
            report.first_discrepancy = fail(format!("pile {src} of height {} cannot move", omega[src]));
            break;
        }
        omega[src] -= 1;
        omega[dst] += 1;
        if (rightward && torus && src == tag_edge) || (!torus && src == tag_edge && dst == tag_edge + 1) {
            current += 1;
        } else if (!rightward && torus && dst == tag_edge) || (!torus && src == tag_edge + 1 && dst == tag_edge) {
            current -= 1;
        }
        let eta = engine.config();
        let tagged = engine.tagged().expect("tag is tracked");
        let mapped = map_exclusion_to_zr_from(&eta, tagged);
        match mapped {
            Ok((w, t)) if w.heights() == omega.as_slice() && t.x1 == tagged => {}
            Ok((w, _)) => {
                report.first_discrepancy = fail(format!("mapped {:?} but evolved {:?}", w.heights(), omega));
                break;
            }
            Err(e) => {
                report.first_discrepancy = fail(e.to_string());
                break;
            }
        }
        if tagged - tag0.x1 != -current {
            report.tag_current_identity = false;
        }
    }
    Ok(report)
}

/// Simulates the exclusion process on the torus through its zero-range image:
/// the zero-range process runs on the same clock and each observed state is
/// mapped back with `X₁(t) = X₁(0) − J(t)`. Snapshots carry occupancies and
/// the tagged empty site; exclusion currents are not reconstructed.
pub fn run_fep_via_zero_range(eta0: &ExclusionConfig, params: &SimParams) -> Result<ObservationSet> {
    params.validate()?;
    let geometry = *eta0.geometry();
    if !geometry.is_torus() {
        return Err(Error::Mapping("the zero-range route is implemented on the torus".into()));
    }
    let (omega0, tag0) = map_exclusion_to_zr(eta0)?;
    let snap = |eta: &ExclusionConfig, time: f64, tagged: i64, events: u64| Snapshot {
        time,
        values: eta.occupancy().iter().map(|&b| b as u32).collect(),
        currents: Vec::new(),
        tagged: Some(tagged),
        events,
    };
    let initial = snap(eta0, 0.0, tag0.x1, 0);
    if tag0.degenerate {
        let snapshots = params.observation_times.iter().map(|&t| snap(eta0, t, tag0.x1, 0)).collect();
        let flags = RunFlags { degenerate: true, ..RunFlags::default() };
        return Ok(ObservationSet { geometry, initial, snapshots, flags });
    }
    let mut engine = ZeroRangeEngine::new(&omega0, params.p, params.p_prime, params.seed);
    let tag_edge = omega0.len() - 1;
    let rate = params.clock_rate();
    let mut snapshots = Vec::with_capacity(params.observation_times.len());
    for &t in &params.observation_times {
        while engine.step_until(t * rate).is_some() {}
        let x1 = tag0.x1 - engine.currents()[tag_edge];
        let omega = ZeroRangeConfig::new(*omega0.geometry(), engine.heights().to_vec())?;
        let eta = map_zr_to_exclusion(&omega, TagState { x1, ..tag0 }, geometry)?;
        snapshots.push(snap(&eta, t, x1, engine.events()));
    }
    Ok(ObservationSet { geometry, initial, snapshots, flags: RunFlags::default() })
}

/// `x ↦ ∫ w(field)` from the left end (interval) or from 0 (torus), exact for
/// piecewise-constant fields, extended periodically or linearly outside.
#[derive(Clone, Debug)]
struct Cumulative {
    lo: f64,
    dx: f64,
    y: Vec<f64>,
    w: Vec<f64>,
    periodic: bool,
}

impl Cumulative {
    fn new(field: &DensityField, w: impl Fn(f64) -> f64) -> Self {
        let w: Vec<f64> = field.cells.iter().map(|&c| w(c)).collect();
        let dx = field.dx();
        let mut y = Vec::with_capacity(w.len() + 1);
        y.push(0.0);
        for &v in &w {
            y.push(y.last().unwrap() + v * dx);
        }
        Self { lo: field.geometry.lo(), dx, y, w, periodic: field.geometry == FieldGeometry::Torus }
    }

    fn total(&self) -> f64 {
        *self.y.last().unwrap()
    }

    fn span(&self) -> f64 {
        self.w.len() as f64 * self.dx
    }

    fn local(&self, r: f64) -> f64 {
        let i = ((r / self.dx).floor().max(0.0) as usize).min(self.w.len() - 1);
        self.y[i] + (r - i as f64 * self.dx) * self.w[i]
    }

    fn eval(&self, x: f64) -> f64 {
        let (r, span) = (x - self.lo, self.span());
        if self.periodic {
            let k = (r / span).floor();
            return k * self.total() + self.local(r - k * span);
        }
        if r < 0.0 {
            r * self.w[0]
        } else if r >= span {
            self.total() + (r - span) * self.w[self.w.len() - 1]
        } else {
            self.local(r)
        }
    }

    fn local_inverse(&self, s: f64) -> f64 {
        let n = self.w.len();
        let i = self.y.partition_point(|&v| v <= s).saturating_sub(1).min(n - 1);
        i as f64 * self.dx + (s - self.y[i]) / self.w[i]
    }

    /// Inverse of `eval`; every weight must be positive.
    fn inverse(&self, s: f64) -> f64 {
        let (span, total) = (self.span(), self.total());
        if self.periodic {
            let k = (s / total).floor();
            return self.lo + k * span + self.local_inverse(s - k * total);
        }
        if s < 0.0 {
            self.lo + s / self.w[0]
        } else if s >= total {
            self.lo + span + (s - total) / self.w[self.w.len() - 1]
        } else {
            self.lo + self.local_inverse(s)
        }
    }
}

#[derive(Clone, Debug)]
enum Chart {
    /// Built from ρ: `v(u) = θ⁻¹ (C(u) − C(offset))`, `C = ∫(1 − ρ)`.
    Exclusion(Cumulative),
    /// Built from α: `u(v) = offset + θ D(v)`, `D = ∫(1 + α)` anchored at 0.
    ZeroRange(Cumulative),
}

/// The change of variables between exclusion coordinates `u` and zero-range
/// coordinates `v`.
#[derive(Clone, Debug)]
pub struct MacroTransform {
    /// `∫(1 − ρ)` on the torus; 1 on the line.
    pub theta: f64,
    /// Position `u` of the tagged empty site (`χ` on the torus, `σ` on the line).
    pub offset: f64,
    pub torus: bool,
    chart: Chart,
}

impl MacroTransform {
    pub fn v_of_u(&self, u: f64) -> f64 {
        match &self.chart {
            Chart::Exclusion(c) => (c.eval(u) - c.eval(self.offset)) / self.theta,
            Chart::ZeroRange(d) => d.inverse((u - self.offset) / self.theta + d.eval(0.0)),
        }
    }

    pub fn u_of_v(&self, v: f64) -> f64 {
        match &self.chart {
            Chart::Exclusion(c) => c.inverse(self.theta * v + c.eval(self.offset)),
            Chart::ZeroRange(d) => self.offset + self.theta * (d.eval(v) - d.eval(0.0)),
        }
    }

    /// Zero-range macroscopic time matching exclusion time `t`.
    pub fn zr_time(&self, t: f64) -> f64 {
        t / (self.theta * self.theta)
    }
}

const SINGULAR: f64 = 1e-9;

/// `α = ρ/(1 − ρ)` in the coordinates `v(u) = θ⁻¹∫_offset^u (1 − ρ)`.
///
/// Cell averages are conservative: the α-mass of a `v`-cell equals `θ⁻¹`
/// times the ρ-mass of its preimage. On the torus the output covers
/// `v ∈ [0, 1)`; on an interval it covers the image of the input interval.
pub fn macro_ex_to_zr(rho: &DensityField, offset: f64, cells: usize) -> Result<(DensityField, MacroTransform)> {
    if rho.max() >= 1.0 - SINGULAR || rho.min() < 0.0 {
        return Err(Error::Mapping(format!("exclusion density must lie in [0, 1), range [{}, {}]", rho.min(), rho.max())));
    }
    let torus = rho.geometry == FieldGeometry::Torus;
    let c = Cumulative::new(rho, |r| 1.0 - r);
    let mass = Cumulative::new(rho, |r| r);
    let theta = if torus { c.total() } else { 1.0 };
    let t = MacroTransform { theta, offset, torus, chart: Chart::Exclusion(c) };
    let geometry = if torus {
        FieldGeometry::Torus
    } else {
        let (lo, hi) = (rho.geometry.lo(), rho.geometry.lo() + rho.geometry.length());
        FieldGeometry::Interval { lo: t.v_of_u(lo), hi: t.v_of_u(hi) }
    };
    let out = resample(geometry, cells, |v| mass.eval(t.u_of_v(v)) / theta)?;
    Ok((out, t))
}

/// `ρ = α/(1 + α)` in the coordinates `u(v) = offset + θ∫_0^v (1 + α)`.
/// On the torus `θ(1 + ∫α) = 1` is required.
pub fn macro_zr_to_ex(alpha: &DensityField, offset: f64, theta: f64, cells: usize) -> Result<(DensityField, MacroTransform)> {
    if alpha.min() < 0.0 {
        return Err(Error::Mapping("zero-range density must be nonnegative".into()));
    }
    let torus = alpha.geometry == FieldGeometry::Torus;
    let theta = if torus { theta } else { 1.0 };
    if torus && (theta * (1.0 + alpha.mass()) - 1.0).abs() > 1e-9 {
        return Err(Error::Mapping(format!("θ = {theta} inconsistent with ∫α = {}", alpha.mass())));
    }
    let d = Cumulative::new(alpha, |a| 1.0 + a);
    let mass = Cumulative::new(alpha, |a| a);
    let t = MacroTransform { theta, offset, torus, chart: Chart::ZeroRange(d) };
    let geometry = if torus {
        FieldGeometry::Torus
    } else {
        let (lo, hi) = (alpha.geometry.lo(), alpha.geometry.lo() + alpha.geometry.length());
        FieldGeometry::Interval { lo: t.u_of_v(lo), hi: t.u_of_v(hi) }
    };
    let out = resample(geometry, cells, |u| theta * mass.eval(t.v_of_u(u)))?;
    Ok((out, t))
}

/// Cell averages from a cumulative mass function.
fn resample(geometry: FieldGeometry, n: usize, cumulative: impl Fn(f64) -> f64) -> Result<DensityField> {
    let (lo, h) = (geometry.lo(), geometry.length() / n as f64);
    let edges: Vec<f64> = (0..=n).map(|i| cumulative(lo + i as f64 * h)).collect();
    DensityField::new(geometry, edges.windows(2).map(|w| (w[1] - w[0]) / h).collect())
}

/// `χ_t = θ ⟨v, α_t − α^ini⟩` on the zero-range torus (`v ∈ [0, 1)`);
/// `alpha_t` is taken at zero-range time `t θ⁻²`.
pub fn interface_offset_chi_from_alpha(alpha_ini: &DensityField, alpha_t: &DensityField, theta: f64) -> Result<f64> {
    let d = DensityField::new(alpha_t.geometry, alpha_t.cells.iter().zip(&alpha_ini.cells).map(|(a, b)| a - b).collect())?;
    alpha_ini.l1_distance(alpha_t)?;
    Ok(theta * d.pair(|v| v))
}

/// Root `χ` of `∫_0^χ (1 − ρ_t) = ⟨u, ρ_t − ρ^ini⟩` on the real line
/// (periodic extension of `ρ_t`; the left side is strictly increasing).
pub fn interface_offset_chi_from_rho(rho_ini: &DensityField, rho_t: &DensityField) -> Result<f64> {
    rho_ini.l1_distance(rho_t)?;
    if rho_t.max() >= 1.0 - SINGULAR {
        return Err(Error::Mapping("density reaches 1: the offset equation has no unique root".into()));
    }
    let target = rho_t.pair(|u| u) - rho_ini.pair(|u| u);
    Ok(Cumulative::new(rho_t, |r| 1.0 - r).inverse(target))
}

/// `σ_t = ∫_0^∞ (α^ini − α_t)` over the part of the window right of 0.
pub fn interface_offset_sigma(alpha_ini: &DensityField, alpha_t: &DensityField) -> Result<f64> {
    alpha_ini.l1_distance(alpha_t)?;
    let right = |f: &DensityField| {
        let c = Cumulative::new(f, |a| a);
        c.total() - c.eval(0.0)
    };
    Ok(right(alpha_ini) - right(alpha_t))
}

/// `σ_t` for exclusion data on the line: the data are mapped with offset 0
/// and the hyperbolic zero-range equation is solved up to `t` (θ = 1).
pub fn sigma_from_exclusion_data(rho0: &DensityField, p: f64, t: f64) -> Result<f64> {
    let (alpha0, _) = macro_ex_to_zr(rho0, 0.0, rho0.len())?;
    let alpha_t = solve_hyperbolic(&alpha0, &Flux::g(), p, t, &HyperbolicOptions::at(vec![]))?;
    interface_offset_sigma(&alpha0, alpha_t.last())
}

/// Both expressions for `χ_t`, computed from independent solves of the
/// exclusion and zero-range diffusive equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualOffset {
    pub theta: f64,
    pub zr_time: f64,
    pub from_alpha: f64,
    pub from_rho: f64,
}

pub fn dual_interface_offset(rho0: &DensityField, t: f64) -> Result<DualOffset> {
    let n = rho0.len();
    let (alpha0, tr) = macro_ex_to_zr(rho0, 0.0, n)?;
    let zr_time = tr.zr_time(t);
    let rho_t = solve_parabolic(rho0, &Flux::h(), t, &ParabolicOptions::at(vec![]))?;
    let alpha_t = solve_parabolic(&alpha0, &Flux::g(), zr_time, &ParabolicOptions::at(vec![]))?;
    Ok(DualOffset {
        theta: tr.theta,
        zr_time,
        from_alpha: interface_offset_chi_from_alpha(&alpha0, alpha_t.last(), tr.theta)?,
        from_rho: interface_offset_chi_from_rho(rho0, rho_t.last())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::run_fep_with_tagged_hole;
    use crate::measures::Profile;
    use crate::pde::flux::{g_exact, h_exact};
    use crate::pde::riemann::riemann_exact;

    fn figure_one() -> ExclusionConfig {
        ExclusionConfig::from_sites(LatticeGeometry::torus(8).unwrap(), &[0, 2, 3, 6, 7]).unwrap()
    }

    fn all_configs(n: usize) -> impl Iterator<Item = ExclusionConfig> {
        (0u32..1 << n).map(move |b| {
            let bits = (0..n).map(|i| ((b >> i) & 1) as u8).collect();
            ExclusionConfig::from_bits(LatticeGeometry::torus(n).unwrap(), bits).unwrap()
        })
    }

    #[test]
    fn figure_one_example() {
        let (w, tag) = map_exclusion_to_zr(&figure_one()).unwrap();
        assert_eq!(w.heights(), &[2, 0, 3]);
        assert_eq!(tag, TagState { x1: 1, m: 3, degenerate: false });
        let back = map_zr_to_exclusion(&w, tag, LatticeGeometry::torus(8).unwrap()).unwrap();
        assert_eq!(back, figure_one());
    }

    #[test]
    fn special_configurations() {
        let g = LatticeGeometry::torus(8).unwrap();
        let (w, _) = map_exclusion_to_zr(&ExclusionConfig::empty(g).unwrap()).unwrap();
        assert_eq!(w.heights(), &[0; 8]);
        let full = ExclusionConfig::from_bits(g, vec![1; 8]).unwrap();
        let (w, tag) = map_exclusion_to_zr(&full).unwrap();
        assert_eq!((w.heights(), tag), (&[8u32][..], TagState { x1: 1, m: 1, degenerate: true }));
        assert_eq!(map_zr_to_exclusion(&w, tag, g).unwrap(), full);
        let ones = ZeroRangeConfig::on_torus(vec![1; 5]).unwrap();
        let tag = TagState { x1: 0, m: 5, degenerate: false };
        let eta = map_zr_to_exclusion(&ones, tag, LatticeGeometry::torus(10).unwrap()).unwrap();
        assert_eq!(eta.occupancy(), &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        assert!(map_zr_to_exclusion(&ones, tag, LatticeGeometry::torus(11).unwrap()).is_err());
    }

    #[test]
    fn exhaustive_bookkeeping_and_round_trip() {
        for eta in all_configs(10) {
            let (w, tag) = map_exclusion_to_zr(&eta).unwrap();
            assert_eq!(w.total_mass() as usize, eta.particle_count());
            if eta.hole_count() == 0 {
                continue;
            }
            assert_eq!(w.len(), eta.hole_count());
            assert_eq!(map_zr_to_exclusion(&w, tag, *eta.geometry()).unwrap(), eta);
            // Any empty site can carry the tag.
            for h in eta.holes() {
                let (w, tag) = map_exclusion_to_zr_from(&eta, h + 10).unwrap();
                assert_eq!(map_zr_to_exclusion(&w, tag, *eta.geometry()).unwrap(), eta);
            }
        }
    }

    #[test]
    fn line_round_trip() {
        let g = LatticeGeometry::line_window(-6, 6, 2).unwrap();
        let mut seen = 0;
        for b in 0u32..1 << 16 {
            if b % 7 != 0 {
                continue;
            }
            let bits = (0..16).map(|i| ((b >> i) & 1) as u8).collect();
            let eta = ExclusionConfig::from_bits(g, bits).unwrap();
            match map_exclusion_to_zr(&eta) {
                Ok((w, tag)) => {
                    assert_eq!(w.len(), eta.hole_count() + 1);
                    assert_eq!(w.total_mass() as usize, eta.particle_count());
                    assert_eq!(w.geometry().site_of(0), -1 - eta.holes().iter().filter(|&&h| h < 0).count() as i64);
                    assert_eq!(map_zr_to_exclusion(&w, tag, g).unwrap(), eta);
                    seen += 1;
                }
                Err(Error::Mapping(_)) => assert!(eta.holes().iter().all(|&h| h < 0)),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(seen > 9000);
    }

    #[test]
    fn commutation_holds_event_by_event() {
        let frozen = ExclusionConfig::from_sites(LatticeGeometry::torus(10).unwrap(), &[0, 3, 6]).unwrap();
        let r = trajectory_commutation_check(&frozen, 0.5, 0.5, StreamSeed::new(1, 0), 100).unwrap();
        assert!(r.passed() && r.events == 0);

        let eta = ExclusionConfig::from_sites(LatticeGeometry::torus(10).unwrap(), &[0, 1, 2, 3, 5, 6, 8]).unwrap();
        for seed in 0..5 {
            let r = trajectory_commutation_check(&eta, 0.5, 0.5, StreamSeed::new(seed, 0), 10_000).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.events, 10_000);
        }
        let r = trajectory_commutation_check(&eta, 0.8, 0.2, StreamSeed::new(9, 0), 10_000).unwrap();
        assert!(r.passed(), "{r:?}");

        let line = LatticeGeometry::line_window(-5, 5, 0).unwrap();
        let eta = ExclusionConfig::from_sites(line, &[-5, -4, -3, -2, 0, 1, 2, 4]).unwrap();
        for (p, q) in [(1.0, 0.0), (0.5, 0.5), (0.7, 0.3)] {
            let r = trajectory_commutation_check(&eta, p, q, StreamSeed::new(3, 0), 10_000).unwrap();
            assert!(r.passed(), "{r:?}");
            assert!(r.events > 0);
        }
    }

    #[test]
    fn zero_range_route_matches_direct_simulation_in_law() {
        // Mean tagged displacement and mean occupancy profile agree between
        // the direct exclusion engine and the zero-range route.
        let g = LatticeGeometry::torus(24).unwrap();
        let sites: Vec<i64> = (0..12).chain([14, 16, 18, 20, 22]).collect();
        let eta = ExclusionConfig::from_sites(g, &sites).unwrap();
        let reps = 400;
        let (mut a, mut b) = (vec![0.0; 24], vec![0.0; 24]);
        let (mut ta, mut tb) = (0.0, 0.0);
        for r in 0..reps {
            let params = SimParams::asymmetric(0.8, 24, 0.5, StreamSeed::new(5, r)).with_observations(vec![0.5]);
            let direct = run_fep_with_tagged_hole(&eta, &params).unwrap();
            let via = run_fep_via_zero_range(&eta, &params).unwrap();
            let (d, v) = (direct.final_snapshot(), via.final_snapshot());
            for i in 0..24 {
                a[i] += d.values[i] as f64 / reps as f64;
                b[i] += v.values[i] as f64 / reps as f64;
            }
            ta += d.tagged.unwrap() as f64 / reps as f64;
            tb += v.tagged.unwrap() as f64 / reps as f64;
            assert_eq!(v.values.iter().sum::<u32>(), 17);
        }
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 0.12, "{gap}");
        assert!((ta - tb).abs() < 0.6, "{ta} {tb}");
    }

    #[test]
    fn zero_range_route_preserves_frozen_and_degenerate_states() {
        let g = LatticeGeometry::torus(9).unwrap();
        for sites in [vec![0, 3, 6], (0..9).collect::<Vec<i64>>()] {
            let eta = ExclusionConfig::from_sites(g, &sites).unwrap();
            let params = SimParams::symmetric(0.5, 9, 1.0, StreamSeed::new(1, 0)).with_observations(vec![1.0]);
            let out = run_fep_via_zero_range(&eta, &params).unwrap();
            assert_eq!(out.final_snapshot().values, out.initial.values);
            assert_eq!(out.flags.degenerate, sites.len() == 9);
        }
    }

    fn step_rho(n: usize) -> DensityField {
        DensityField::from_profile(&Profile::torus_steps(vec![0.8, 0.3]).unwrap(), FieldGeometry::Torus, n).unwrap()
    }

    #[test]
    fn constant_profiles_map_in_closed_form() {
        for (r, a) in [(0.8, 4.0), (0.5, 1.0)] {
            let f = DensityField::constant(FieldGeometry::Torus, 16, r).unwrap();
            let (alpha, t) = macro_ex_to_zr(&f, 0.0, 16).unwrap();
            assert!((t.theta - (1.0 - r)).abs() < 1e-15);
            assert!(alpha.cells.iter().all(|&x| (x - a).abs() < 1e-12));
            assert!((t.v_of_u(0.3) - 0.3).abs() < 1e-12);
            let (back, _) = macro_zr_to_ex(&alpha, 0.0, t.theta, 16).unwrap();
            assert!(back.cells.iter().all(|&x| (x - r).abs() < 1e-12));
        }
        assert!(macro_ex_to_zr(&DensityField::constant(FieldGeometry::Torus, 4, 1.0).unwrap(), 0.0, 4).is_err());
    }

    #[test]
    fn step_profile_maps_to_the_closed_form() {
        let n = 900;
        let (alpha, t) = macro_ex_to_zr(&step_rho(n), 0.0, n).unwrap();
        assert!((t.theta - 0.45).abs() < 1e-14);
        assert!((t.v_of_u(0.5) - 2.0 / 9.0).abs() < 1e-14);
        for (i, &a) in alpha.cells.iter().enumerate() {
            let v = alpha.center(i);
            let exact = if v < 2.0 / 9.0 { 4.0 } else { 3.0 / 7.0 };
            // 2/9 is an edge of the 900-cell grid, so every cell is exact.
            assert!((a - exact).abs() < 1e-9, "{v} {a}");
        }
        for u in [0.0, 0.1, 0.49, 0.5, 0.77, 0.99] {
            assert!((t.u_of_v(t.v_of_u(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trips_and_flux_relation() {
        let n = 512;
        let du = 1.0 / n as f64;
        let rho = step_rho(n);
        let (alpha, t) = macro_ex_to_zr(&rho, 0.0, n).unwrap();
        let (back, _) = macro_zr_to_ex(&alpha, 0.0, t.theta, n).unwrap();
        assert!(back.l1_distance(&rho).unwrap() <= 2.0 * du);
        let (rho2, t2) = macro_zr_to_ex(&alpha, 0.0, t.theta, n).unwrap();
        let (alpha2, _) = macro_ex_to_zr(&rho2, 0.0, n).unwrap();
        assert!(alpha2.l1_distance(&alpha).unwrap() <= 2.0 * du * 5.0);
        for i in (0..n).step_by(7) {
            let v = alpha.center(i);
            let u = t2.u_of_v(v);
            if (u - 0.5).abs() > 2.0 * du && u > 2.0 * du && u < 1.0 - 2.0 * du {
                assert!((g_exact(alpha.cells[i]) - h_exact(rho.eval(u))).abs() < 1e-9);
            }
        }
        // Conservation keeps θ constant along the diffusive evolution.
        let later = solve_parabolic(&rho, &Flux::h(), 0.01, &ParabolicOptions::at(vec![])).unwrap();
        let (_, t3) = macro_ex_to_zr(later.last(), 0.0, n).unwrap();
        assert!((t3.theta - 0.45).abs() < 1e-12);
    }

    #[test]
    fn offsets_vanish_without_motion() {
        let rho = step_rho(64);
        assert_eq!(interface_offset_chi_from_rho(&rho, &rho).unwrap(), 0.0);
        let (alpha, t) = macro_ex_to_zr(&rho, 0.0, 64).unwrap();
        assert_eq!(interface_offset_chi_from_alpha(&alpha, &alpha, t.theta).unwrap(), 0.0);
        let c = DensityField::constant(FieldGeometry::Torus, 64, 0.8).unwrap();
        let later = solve_parabolic(&c, &Flux::h(), 0.01, &ParabolicOptions::at(vec![])).unwrap();
        assert!(interface_offset_chi_from_rho(&c, later.last()).unwrap().abs() < 1e-14);
        let line = DensityField::constant(FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 10, 2.0).unwrap();
        assert_eq!(interface_offset_sigma(&line, &line).unwrap(), 0.0);
    }

    #[test]
    fn dual_offsets_agree() {
        let n = 512;
        let d = dual_interface_offset(&step_rho(n), 0.02).unwrap();
        assert!((d.zr_time - 0.02 / 0.2025).abs() < 1e-12);
        assert!(d.from_rho.abs() > 1e-4);
        assert!((d.from_alpha - d.from_rho).abs() <= 2.0 / n as f64, "{d:?}");
    }

    #[test]
    fn sigma_matches_the_riemann_flux() {
        // Mass balance on [0, L]: σ_t = s (G(α_r) − G(α(0⁺))) t while waves stay inside.
        let w = riemann_exact(&Flux::g(), 1.0, 1.5, 3.0).unwrap();
        let ini = w.field(-2.0, 2.0, 4000, 0.0).unwrap();
        let now = w.field(-2.0, 2.0, 4000, 0.5).unwrap();
        let oracle = (g_exact(3.0) - g_exact(w.eval(1e-9))) * 0.5;
        assert!((oracle - 1.0 / 6.0).abs() < 1e-12);
        assert!((interface_offset_sigma(&ini, &now).unwrap() - oracle).abs() < 1e-3);
    }

    #[test]
    fn sigma_of_the_bump() {
        let prof = Profile::step(vec![-0.25, 0.25], vec![0.0, 2.0 / 3.0, 0.0]).unwrap();
        let rho = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 1200).unwrap();
        let s = sigma_from_exclusion_data(&rho, 1.0, 0.2).unwrap();
        assert!((s + 1.0 / 12.0).abs() < 5e-3, "{s}");
    }

    #[test]
    fn line_maps_use_the_offset() {
        let prof = Profile::step(vec![-0.25, 0.25], vec![0.0, 2.0 / 3.0, 0.0]).unwrap();
        let rho = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 800).unwrap();
        let (alpha, t) = macro_ex_to_zr(&rho, 0.0, 800).unwrap();
        assert_eq!(t.theta, 1.0);
        assert!((t.v_of_u(0.25) - 1.0 / 12.0).abs() < 1e-12);
        assert!((alpha.eval(0.05) - 2.0).abs() < 1e-9 && alpha.eval(0.2).abs() < 1e-12);
        let (back, _) = macro_zr_to_ex(&alpha, 0.0, 1.0, 800).unwrap();
        assert!((back.geometry.lo() + 1.0).abs() < 1e-12);
        assert!((back.geometry.length() - 2.0).abs() < 1e-12);
        let l1: f64 = back.cells.iter().zip(&rho.cells).map(|(a, b)| (a - b).abs()).sum::<f64>() * rho.dx();
        assert!(l1 < 2.0 * rho.dx(), "{l1}");
    }
}
