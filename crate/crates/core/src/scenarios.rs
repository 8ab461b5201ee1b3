//! End-to-end checks with fixed parameters, shared by the acceptance suite
//! and the command-line `verify` subcommand. Each returns named measurements
//! with the threshold they are held to.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    fep_padding, fzrp_padding, run_fep_with_tagged_hole, run_fzrp, sign_changes, SimParams, ZeroRangeEngine,
};
use crate::error::{Error, Result};
use crate::harness::{
    block_density_field, default_block_radius, equilibration_check, fep_stationarity_check, hydro_error,
    initial_equilibrium_tv, run_replicas, tagged_hole_check, EquilibrationRow,
};
use crate::lattice::{ExclusionConfig, LatticeGeometry};
use crate::mapping::{
    dual_interface_offset, map_exclusion_to_zr, map_exclusion_to_zr_from, map_zr_to_exclusion,
    sigma_from_exclusion_data, trajectory_commutation_check,
};
use crate::measures::{sample_bernoulli_profile, sample_geometric_profile, sample_monotone_coupling, Profile};
use crate::pde::field::{DensityField, FieldGeometry};
use crate::pde::flux::{frak_h_exact, g_exact, h_exact, Flux};
use crate::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions, HyperbolicStepper};
use crate::pde::parabolic::{solve_parabolic, ParabolicOptions, ParabolicStepper};
use crate::pde::residual::{entropy_residual, travelling_discontinuity, Bump};
use crate::pde::smoothing::{smoothing_convergence_study, viscous_convergence_study};
use crate::rng::{Purpose, StreamSeed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Below,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::AtMost => value <= threshold,
            Self::AtLeast => value >= threshold,
            Self::Below => value < threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
            Self::Below => "<",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub params: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, params: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = relation.holds(value, threshold);
        Self { name: name.into(), params: params.into(), value, relation, threshold, pass }
    }

    pub fn at_most(name: impl Into<String>, params: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, params, value, Relation::AtMost, threshold)
    }

    pub fn summary(&self) -> String {
        format!("{} = {:.4e} {} {:.4e}", self.name, self.value, self.relation.symbol(), self.threshold)
    }
}

pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Replays exclusion trajectories through the mapping event by event on a
/// 10-site torus (symmetric and asymmetric rates) and a 10-site line window
/// (totally asymmetric). Runs that stop moving are restarted from fresh
/// data until `events` events have been checked for each setting.
pub fn mapping_commutation(seed: u64, events: u64) -> Result<Vec<CheckResult>> {
    let settings: [(&str, LatticeGeometry, f64, f64); 3] = [
        ("torus symmetric", LatticeGeometry::torus(10)?, 1.0, 1.0),
        ("torus asymmetric", LatticeGeometry::torus(10)?, 0.75, 0.25),
        ("line asymmetric", LatticeGeometry::line_window(-5, 5, 0)?, 1.0, 0.0),
    ];
    let mut out = Vec::new();
    for (label, geometry, p, pp) in settings {
        let ((checked, failures), secs) = timed(|| {
            let (mut checked, mut failures, mut replica) = (0u64, 0u64, 0u32);
            while checked < events {
                let s = StreamSeed::new(seed, replica);
                replica += 1;
                let eta = sample_bernoulli_profile(&Profile::constant(0.7), geometry, 10, s)?;
                // The tag needs an empty site at or right of the origin.
                if !eta.holes().iter().any(|&h| h >= 0) {
                    continue;
                }
                let report = trajectory_commutation_check(&eta, p, pp, s, events - checked)?;
                checked += report.events;
                failures += u64::from(!report.passed());
                if replica > 1_000_000 {
                    return Err(Error::Params("could not accumulate enough events".into()));
                }
            }
            Ok((checked, failures))
        })?;
        let params = format!("{label}, N=10, p={p}, p'={pp}, events={checked}");
        out.push(CheckResult::at_most("mapping discrepancies", &params, failures as f64, 0.0));
        out.push(CheckResult::at_most("mapping runtime [s]", &params, secs, 1.0));
    }
    Ok(out)
}

/// Maps every 10-site torus configuration with at least one empty site to
/// the zero-range side and back, tagging each empty site in turn.
pub fn mapping_round_trip() -> Result<Vec<CheckResult>> {
    let n = 10;
    let g = LatticeGeometry::torus(n)?;
    let ((configs, failures), secs) = timed(|| {
        let (mut configs, mut failures) = (0u32, 0u32);
        for b in 1u32..1 << n {
            // Bit i set means site i is empty, so b ≥ 1 leaves at least one hole.
            let bits = (0..n).map(|i| 1 - ((b >> i) & 1) as u8).collect();
            let eta = ExclusionConfig::from_bits(g, bits)?;
            configs += 1;
            let (w, tag) = map_exclusion_to_zr(&eta)?;
            failures += u32::from(map_zr_to_exclusion(&w, tag, g)? != eta);
            for h in eta.holes() {
                let (w, tag) = map_exclusion_to_zr_from(&eta, h)?;
                failures += u32::from(map_zr_to_exclusion(&w, tag, g)? != eta);
            }
        }
        Ok((configs, failures))
    })?;
    let params = format!("N={n}, configurations={configs}");
    Ok(vec![
        CheckResult::at_most("round-trip failures", &params, failures as f64, 0.0),
        CheckResult::at_most("round-trip runtime [s]", &params, secs, 1.0),
    ])
}

/// Time-averaged law of the 6-site symmetric exclusion process with 4
/// particles against the exact stationary law of its generator.
pub fn small_n_stationarity(seed: u64, events: u64) -> Result<Vec<CheckResult>> {
    // Two adjacent empty sites: the run starts in a transient state.
    let eta = ExclusionConfig::from_sites(LatticeGeometry::torus(6)?, &[0, 1, 2, 3])?;
    let (r, secs) = timed(|| fep_stationarity_check(&eta, 1.0, 1.0, events, StreamSeed::new(seed, 0)))?;
    let support = r.exact.iter().filter(|&&p| p > 1e-12).count();
    let params = format!("N=6, 4 particles, p=p'=1, events={}, reached states={}, support={support}", r.events, r.states.len());
    Ok(vec![
        CheckResult::at_most("stationary TV", &params, r.tv, 0.01),
        CheckResult::at_most("stationarity runtime [s]", &params, secs, 30.0),
    ])
}

/// `G(r) = H(r/(1+r)) = (1+r) frakH(r/(1+r))` at uniformly sampled `r ∈ [0, 20]`.
pub fn flux_relation(seed: u64, samples: usize) -> Result<Vec<CheckResult>> {
    let mut rng = StreamSeed::new(seed, 0).rng(Purpose::Sampling);
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let r = 20.0 * rng.random::<f64>();
        let rho = r / (1.0 + r);
        let g = g_exact(r);
        worst = worst.max(rel(g, h_exact(rho))).max(rel(g, (1.0 + r) * frak_h_exact(rho)));
    }
    Ok(vec![CheckResult::at_most("flux relation relative error", format!("samples={samples}, r in [0, 20]"), worst, 1e-12)])
}

/// Step data `0.8` on `[0, ½)`, `0.3` on `[½, 1)`.
pub fn symmetric_step_profile() -> Profile {
    Profile::torus_steps(vec![0.8, 0.3]).expect("valid step")
}

/// Simulated and PDE fields on a common grid at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub time: f64,
    pub simulated: DensityField,
    pub pde: DensityField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricStudy {
    pub n: usize,
    pub replicas: u32,
    pub time: f64,
    /// L¹ distance of the block-averaged density to the parabolic solution.
    pub l1: f64,
    /// Interface offset `χ_t` from the exclusion equation.
    pub chi: f64,
    /// Same offset from the zero-range equation.
    pub chi_dual: f64,
    /// Ensemble mean of `|X₁(t)/N − χ_t|`.
    pub tagged_mean: f64,
    pub degenerate: usize,
    pub events: u64,
    pub overlays: Vec<Overlay>,
}

/// Symmetric exclusion runs from product data fitting the step profile,
/// compared with the parabolic solution on `grid` cells at time `t`.
pub fn symmetric_step_study(n: usize, replicas: u32, t: f64, grid: usize, seed: u64) -> Result<SymmetricStudy> {
    symmetric_step_study_at(n, replicas, &[t], grid, seed)
}

/// As [`symmetric_step_study`], also recording overlays at every time of
/// `times`; the last time is the horizon used for the errors.
pub fn symmetric_step_study_at(n: usize, replicas: u32, times: &[f64], grid: usize, seed: u64) -> Result<SymmetricStudy> {
    let t = *times.last().ok_or(Error::Params("no observation times".into()))?;
    let prof = symmetric_step_profile();
    let rho0 = DensityField::from_profile(&prof, FieldGeometry::Torus, grid)?;
    let pde = solve_parabolic(&rho0, &Flux::h(), t, &ParabolicOptions::at(times.to_vec()))?;
    let dual = dual_interface_offset(&rho0, t)?;
    let runs = run_replicas(replicas, |r| {
        let s = StreamSeed::new(seed, r);
        let eta = sample_bernoulli_profile(&prof, LatticeGeometry::torus(n)?, n, s)?;
        run_fep_with_tagged_hole(&eta, &SimParams::symmetric(1.0, n, t, s).with_observations(times.to_vec()))
    })?;
    let ell = default_block_radius(n);
    let l1 = hydro_error(&runs, pde.at(t)?, t, ell, n)?;
    let tagged = tagged_hole_check(&runs, t, dual.from_rho, n)?;
    let overlays = times
        .iter()
        .map(|&s| Ok(Overlay { time: s, simulated: block_density_field(&runs, s, ell, n, grid)?, pde: pde.at(s)?.clone() }))
        .collect::<Result<_>>()?;
    Ok(SymmetricStudy {
        n,
        replicas,
        time: t,
        l1,
        chi: dual.from_rho,
        chi_dual: dual.from_alpha,
        tagged_mean: tagged.mean,
        degenerate: tagged.degenerate,
        events: runs.iter().map(|r| r.event_count()).sum(),
        overlays,
    })
}

/// Single-size version of the symmetric hydrodynamics check (used by `verify`).
pub fn hydro_symmetric_step(n: usize, replicas: u32, seed: u64) -> Result<Vec<CheckResult>> {
    let s = symmetric_step_study(n, replicas, 0.02, 1024, seed)?;
    Ok(vec![CheckResult::at_most(
        "hydrodynamic L1 error",
        format!("N={n}, replicas={replicas}, t=0.02, grid=1024"),
        s.l1,
        0.05,
    )])
}

/// Cross-check of the two expressions for the interface offset: agreement within two cells.
pub fn dual_offset_check(grid: usize, t: f64) -> Result<CheckResult> {
    let rho0 = DensityField::from_profile(&symmetric_step_profile(), FieldGeometry::Torus, grid)?;
    let d = dual_interface_offset(&rho0, t)?;
    Ok(CheckResult::at_most(
        "dual offset difference",
        format!("grid={grid}, t={t}, chi={:.5}", d.from_rho),
        (d.from_alpha - d.from_rho).abs(),
        2.0 / grid as f64,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannStudy {
    pub left: f64,
    pub right: f64,
    pub m: usize,
    pub replicas: u32,
    pub time: f64,
    /// Width of the comparison cells, `ℓ/M`.
    pub dx: f64,
    /// Replica-averaged block field on `[−1, 1]`.
    pub field: DensityField,
    pub exact: DensityField,
}

impl RiemannStudy {
    /// Front location read off as `a + Δx · #{cells of [a, b) below the
    /// middle value}` (for increasing jumps).
    pub fn front(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (self.left + self.right);
        let below = (0..self.field.len())
            .filter(|&i| {
                let x = self.field.center(i);
                x >= a && x < b && self.field.cells[i] < mid
            })
            .count();
        a + self.dx * below as f64
    }

    pub fn l1_on(&self, a: f64, b: f64) -> Result<f64> {
        self.field.l1_distance_on(&self.exact, a, b)
    }
}

/// Asymmetric zero-range runs (rate `p` to the right, `1 − p` to the left)
/// from product geometric data with a jump at the origin.
pub fn asymmetric_riemann_study(left: f64, right: f64, p: f64, m: usize, replicas: u32, t: f64, seed: u64) -> Result<RiemannStudy> {
    let prof = Profile::step(vec![0.0], vec![left, right])?;
    let params = SimParams::asymmetric(p, m, t, StreamSeed::new(seed, 0)).with_observations(vec![t]);
    // The data are not compactly supported, so the outer cells always move;
    // the padding keeps the window outside the light cone of the ends.
    let pad = fzrp_padding(&params, 1e-12);
    let geometry = LatticeGeometry::line_window(-(m as i64), m as i64, pad)?;
    let ell = default_block_radius(m);
    let cells = 2 * m / ell;
    let runs = run_replicas(replicas, |r| {
        let s = StreamSeed::new(seed, r);
        let omega = sample_geometric_profile(&prof, geometry, m, s)?;
        run_fzrp(&omega, &SimParams { seed: s, ..params.clone() })
    })?;
    let field = block_density_field(&runs, t, ell, m, cells)?;
    let exact = crate::pde::riemann_exact(&Flux::g(), 2.0 * p - 1.0, left, right)?.field(-1.0, 1.0, cells, t)?;
    Ok(RiemannStudy { left, right, m, replicas, time: t, dx: field.dx(), field, exact })
}

/// Shock `(1.5, 3)` and rarefaction `(3, 1.5)` for the totally asymmetric
/// zero-range process.
pub fn asymmetric_hydrodynamics(m: usize, replicas: u32, t: f64, seed: u64) -> Result<Vec<CheckResult>> {
    asymmetric_hydrodynamics_studies(m, replicas, t, seed).map(|(checks, _)| checks)
}

/// As [`asymmetric_hydrodynamics`], also returning the shock and fan studies.
pub fn asymmetric_hydrodynamics_studies(
    m: usize,
    replicas: u32,
    t: f64,
    seed: u64,
) -> Result<(Vec<CheckResult>, [RiemannStudy; 2])> {
    let shock = asymmetric_riemann_study(1.5, 3.0, 1.0, m, replicas, t, seed)?;
    let speed = (g_exact(3.0) - g_exact(1.5)) / 1.5;
    let front = shock.front(-0.5, 1.0);
    let fan = asymmetric_riemann_study(3.0, 1.5, 1.0, m, replicas, t, seed.wrapping_add(1))?;
    let window = (-0.25, 0.5);
    let params = |what: &str| format!("{what}, M={m}, replicas={replicas}, t={t}, cell={}", shock.dx);
    let checks = vec![
        CheckResult::at_most(
            "shock front offset [cells]",
            params(&format!("(1.5, 3), front={front:.5}, expected={:.5}", speed * t)),
            (front - speed * t).abs() / shock.dx,
            2.0,
        ),
        CheckResult::at_most(
            "rarefaction L1 error",
            params(&format!("(3, 1.5), window=[{}, {}]", window.0, window.1)),
            fan.l1_on(window.0, window.1)?,
            0.05,
        ),
    ];
    Ok((checks, [shock, fan]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpStudy {
    pub n: usize,
    pub replicas: u32,
    pub time: f64,
    pub sigma: f64,
    pub tagged_mean: f64,
    pub invalid: usize,
}

/// Totally asymmetric exclusion on the line from `ρ = 2/3` on `[−¼, ¼]`,
/// following the first empty site at or right of the origin.
pub fn asymmetric_bump_study(n: usize, replicas: u32, t: f64, seed: u64) -> Result<BumpStudy> {
    let prof = Profile::step(vec![-0.25, 0.25], vec![0.0, 2.0 / 3.0, 0.0])?;
    let rho0 = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 2000)?;
    let sigma = sigma_from_exclusion_data(&rho0, 1.0, t)?;
    let params = SimParams::asymmetric(1.0, n, t, StreamSeed::new(seed, 0)).with_observations(vec![t]);
    let pad = fep_padding(&params, 1e-12);
    let geometry = LatticeGeometry::line_window(-(n as i64) / 2, n as i64, pad)?;
    let runs = run_replicas(replicas, |r| {
        let s = StreamSeed::new(seed, r);
        let eta = sample_bernoulli_profile(&prof, geometry, n, s)?;
        run_fep_with_tagged_hole(&eta, &SimParams { seed: s, ..params.clone() })
    })?;
    let invalid = runs.iter().filter(|r| !r.flags.valid()).count();
    let valid: Vec<_> = runs.into_iter().filter(|r| r.flags.valid()).collect();
    let tagged = tagged_hole_check(&valid, t, sigma, n)?;
    Ok(BumpStudy { n, replicas, time: t, sigma, tagged_mean: tagged.mean, invalid })
}

/// Coupled zero-range copies: an ordered pair stays ordered at every event,
/// and for an unordered pair the number of sign changes never increases.
pub fn attractiveness(m: usize, events: u64, seed: u64) -> Result<Vec<CheckResult>> {
    let g = LatticeGeometry::torus(m)?;
    let prof = Profile::constant(2.0);
    let mut out = Vec::new();
    for (label, p, pp) in [("symmetric", 1.0, 1.0), ("asymmetric", 1.0, 0.0)] {
        let s = StreamSeed::new(seed, 0);
        let (lower, upper) = sample_monotone_coupling(&prof, 3.0, g, m, s)?;
        let (violations, secs) = timed(|| {
            let mut e = ZeroRangeEngine::coupled(&lower, &upper, p, pp, s)?;
            let mut violations = 0u64;
            for _ in 0..events {
                if e.step().is_none() {
                    break;
                }
                let upper = e.second().expect("coupled engine");
                violations += u64::from(e.heights().iter().zip(upper).any(|(a, b)| a > b));
            }
            Ok(violations)
        })?;
        let params = format!("{label}, M={m}, events={events}");
        out.push(CheckResult::at_most("order violations", &params, violations as f64, 0.0));
        out.push(CheckResult::at_most("coupling runtime [s]", &params, secs, 10.0));

        let a = sample_geometric_profile(&prof, g, m, StreamSeed::new(seed, 1))?;
        let b = sample_geometric_profile(&prof, g, m, StreamSeed::new(seed, 2))?;
        let mut e = ZeroRangeEngine::coupled(&a, &b, p, pp, StreamSeed::new(seed, 3))?;
        let mut last = sign_changes(e.heights(), e.second().unwrap(), true);
        let start = last;
        let mut increases = 0u64;
        for _ in 0..events {
            if e.step().is_none() {
                break;
            }
            let now = sign_changes(e.heights(), e.second().unwrap(), true);
            increases += u64::from(now > last);
            last = now;
        }
        out.push(CheckResult::at_most(
            "sign-change increases",
            format!("{label}, M={m}, events={events}, sign changes {start} -> {last}"),
            increases as f64,
            0.0,
        ));
    }
    Ok(out)
}

/// Single-site law from `μ_α` approaching `μ*_α`.
pub fn equilibration(alpha: f64, m: usize, times: &[f64], replicas: u32, seed: u64) -> Result<(Vec<EquilibrationRow>, Vec<CheckResult>)> {
    let rows = equilibration_check(alpha, m, times, 1, replicas, seed)?;
    let exact0 = initial_equilibrium_tv(alpha);
    let last = rows.last().ok_or(Error::Params("no observation times".into()))?;
    let params = format!("alpha={alpha}, M={m}, replicas={replicas}");
    let checks = vec![
        CheckResult::at_most("initial TV vs closed form", format!("{params}, exact={exact0:.5}"), (rows[0].tv - exact0).abs(), 0.02),
        CheckResult::at_most("final TV", format!("{params}, t={}", last.time), last.tv, 0.02),
    ];
    Ok((rows, checks))
}

fn random_field(rng: &mut impl Rng, geometry: FieldGeometry, n: usize, hi: f64) -> Result<DensityField> {
    DensityField::new(geometry, (0..n).map(|_| hi * rng.random::<f64>()).collect())
}

/// Relative slack for the floating-point sums in the L¹ contraction check.
pub const L1_ROUNDING: f64 = 1e-14;

/// Per-step maximum principle, L¹ contraction and (on the torus) mass
/// conservation on random pairs of fields.
pub fn scheme_properties(seed: u64, pairs: usize, steps: usize) -> Result<Vec<CheckResult>> {
    let mut rng = StreamSeed::new(seed, 0).rng(Purpose::Sampling);
    let (mut max_violations, mut l1_violations, mut mass_drift) = (0u64, 0u64, 0.0f64);
    let mut check_step = |a0: &[f64], b0: &[f64], a: &[f64], b: &[f64], bounds: (f64, f64)| {
        max_violations += a.iter().chain(b).filter(|&&x| x < bounds.0 || x > bounds.1).count() as u64;
        let before: f64 = a0.iter().zip(b0).map(|(x, y)| (x - y).abs()).sum();
        let after: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        // Steps that keep the distance unchanged can gain a few ulps in the sums.
        l1_violations += u64::from(after > before * (1.0 + L1_ROUNDING));
    };
    for k in 0..pairs {
        // Parabolic scheme on the torus, alternating exclusion and zero-range fluxes.
        let (flux, hi) = if k % 2 == 0 { (Flux::h(), 0.999) } else { (Flux::g(), 6.0) };
        let n = 64 + 8 * (k % 5);
        let fa = random_field(&mut rng, FieldGeometry::Torus, n, hi)?;
        let fb = random_field(&mut rng, FieldGeometry::Torus, n, hi)?;
        let bounds = (fa.min().min(fb.min()), fa.max().max(fb.max()));
        let mass0 = fa.cells.iter().sum::<f64>();
        let mut sa = ParabolicStepper::new(fa, flux.clone(), None)?;
        let mut sb = ParabolicStepper::new(fb, flux, None)?;
        for _ in 0..steps {
            let (a0, b0) = (sa.field.cells.clone(), sb.field.cells.clone());
            sa.step(f64::INFINITY);
            sb.step(f64::INFINITY);
            check_step(&a0, &b0, &sa.field.cells, &sb.field.cells, bounds);
        }
        mass_drift = mass_drift.max((sa.field.cells.iter().sum::<f64>() - mass0).abs() / mass0);

        // Hyperbolic scheme: the pair agrees near the ends, so differences
        // never reach the ghost cells within `steps` steps.
        let (flux, hi) = if k % 2 == 0 { (Flux::frak_h(), 0.999) } else { (Flux::g(), 6.0) };
        let n = 2 * steps + 64;
        let geometry = FieldGeometry::Interval { lo: 0.0, hi: 1.0 };
        let mut fa = random_field(&mut rng, geometry, n, hi)?;
        let mut fb = fa.clone();
        for i in steps + 2..n - steps - 2 {
            fb.cells[i] = hi * rng.random::<f64>();
        }
        // Both fields share their range so that both steppers use the same flux splitting.
        let (lo_v, hi_v) = (fa.min().min(fb.min()), fa.max().max(fb.max()));
        fa.cells[0] = lo_v;
        fa.cells[n - 1] = hi_v;
        fb.cells[0] = lo_v;
        fb.cells[n - 1] = hi_v;
        let opts = HyperbolicOptions { boundary_tolerance: f64::INFINITY, ..HyperbolicOptions::at(vec![]) };
        let p = if k % 3 == 0 { 0.2 } else { 0.9 };
        let mut sa = HyperbolicStepper::new(fa, flux.clone(), p, &opts)?;
        let mut sb = HyperbolicStepper::new(fb, flux, p, &opts)?;
        for _ in 0..steps {
            let (a0, b0) = (sa.field.cells.clone(), sb.field.cells.clone());
            sa.step(f64::INFINITY)?;
            sb.step(f64::INFINITY)?;
            check_step(&a0, &b0, &sa.field.cells, &sb.field.cells, (lo_v, hi_v));
        }
    }
    let params = format!("pairs={pairs}, steps={steps}");
    Ok(vec![
        CheckResult::at_most("maximum principle violations", &params, max_violations as f64, 0.0),
        CheckResult::at_most("L1 contraction violations", &params, l1_violations as f64, 0.0),
        CheckResult::at_most("torus relative mass drift", &params, mass_drift, 1e-12),
    ])
}

/// Smoothed parabolic runs approach the unsmoothed one as `ε ↓ 0`, and
/// viscous hyperbolic runs are Cauchy in `ε` on a compact window.
pub fn regularization() -> Result<Vec<CheckResult>> {
    let rho0 = DensityField::from_profile(&symmetric_step_profile(), FieldGeometry::Torus, 256)?;
    let rows = smoothing_convergence_study(&rho0, &[0.1, 0.05, 0.025], 0.02, 5)?;
    let mut out = Vec::new();
    for w in rows.windows(2) {
        out.push(CheckResult::new(
            "smoothing L2 ratio",
            format!("eps {} -> {}: {:.4e} -> {:.4e}", w[0].eps, w[1].eps, w[0].density_l2, w[1].density_l2),
            w[1].density_l2 / w[0].density_l2,
            Relation::Below,
            1.0,
        ));
    }
    let prof = Profile::step(vec![0.0], vec![2.0, 0.5])?;
    let f0 = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 2000)?;
    let rows = viscous_convergence_study(&f0, &Flux::g(), 1.0, 1.0, &[4e-3, 2e-3, 1e-3], (-0.5, 0.9))?;
    let d: Vec<f64> = rows.iter().filter_map(|r| r.l1_to_previous).collect();
    out.push(CheckResult::new(
        "viscous Cauchy ratio",
        format!("eps 4e-3,2e-3,1e-3 on [-0.5, 0.9]: successive L1 {:.4e}, {:.4e}", d[0], d[1]),
        d[1] / d[0],
        Relation::Below,
        1.0,
    ));
    Ok(out)
}

/// Kruzkov residuals of a computed shock and of a hand-built expansion shock.
pub fn entropy_admissibility() -> Result<Vec<CheckResult>> {
    let prof = Profile::step(vec![0.0], vec![1.5, 3.0])?;
    let f = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 800)?;
    let opts = HyperbolicOptions { record_every: Some(1), ..HyperbolicOptions::at(vec![]) };
    let tr = solve_hyperbolic(&f, &Flux::g(), 1.0, 1.0, &opts)?;
    let phi = Bump { t0: 0.5, tr: 0.45, x0: 0.1, xr: 0.3 };
    let mut out = Vec::new();
    for c in [0.5, 1.0, 2.0, 3.0] {
        let r = entropy_residual(&tr, &Flux::g(), 1.0, c, &phi)?;
        out.push(CheckResult::new("computed shock residual", format!("(1.5, 3), c={c}"), r.value, Relation::AtLeast, -1e-3));
    }
    let times: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
    let bad = travelling_discontinuity(&Flux::g(), 1.0, 3.0, 1.5, (-1.0, 1.0, 800), &times)?;
    let phi = Bump { t0: 0.5, tr: 0.45, x0: 0.11, xr: 0.3 };
    let r = entropy_residual(&bad, &Flux::g(), 1.0, 2.0, &phi)?;
    out.push(CheckResult::new("expansion shock residual", "(3, 1.5) moving at 2/9, c=2", r.value, Relation::Below, 0.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_scenarios_pass() {
        for checks in [
            mapping_round_trip().unwrap(),
            flux_relation(1, 10_000).unwrap(),
            entropy_admissibility().unwrap(),
            scheme_properties(1, 4, 40).unwrap(),
        ] {
            assert!(all_pass(&checks), "{checks:?}");
        }
        let checks = mapping_commutation(1, 2000).unwrap();
        assert!(checks.iter().filter(|c| !c.name.contains("runtime")).all(|c| c.pass), "{checks:?}");
    }

    #[test]
    fn relations() {
        assert!(CheckResult::new("x", "", -1.0, Relation::Below, 0.0).pass);
        assert!(!CheckResult::new("x", "", 0.0, Relation::Below, 0.0).pass);
        assert!(CheckResult::new("x", "", 0.0, Relation::AtLeast, 0.0).pass);
        assert!(!CheckResult::at_most("x", "", f64::NAN, 1.0).pass);
    }

    #[test]
    fn small_riemann_study_runs() {
        let s = asymmetric_riemann_study(1.5, 3.0, 1.0, 256, 2, 0.5, 1).unwrap();
        assert_eq!(s.field.len(), 32);
        assert!((s.front(-0.5, 1.0) - 1.0 / 9.0).abs() < 0.2);
    }
}
