//! Statistics that connect simulated trajectories with macroscopic limits:
//! block-averaged density fields, distances to PDE solutions, tagged empty
//! sites, block-estimate diagnostics, equilibration and exact small-chain
//! stationary laws.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_fzrp, ExclusionEngine, ObservationSet, SimParams, ZeroRangeEngine};
use crate::error::{Error, Result};
use crate::lattice::{ExclusionConfig, LatticeGeometry, ZeroRangeConfig};
use crate::measures::{equilibrium_pmf, geometric_pmf, sample_geometric_profile, Profile};
use crate::pde::field::{DensityField, FieldGeometry};
use crate::pde::flux::g_exact;
use crate::rng::StreamSeed;

/// Runs `job` for replicas `0..replicas` on the rayon pool, in replica order.
pub fn run_replicas<T: Send>(replicas: u32, job: impl Fn(u32) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..replicas).into_par_iter().map(job).collect()
}

/// Default block radius `⌈√N⌉`.
pub fn default_block_radius(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

/// Centred block averages `(2ℓ+1)⁻¹ Σ_{|y′−y|≤ℓ} ω_{y′}`; cyclic on the
/// torus, truncated to the stored sites on a line window.
pub fn block_average(values: &[u32], ell: usize, torus: bool) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u64);
    for &v in values {
        prefix.push(prefix.last().unwrap() + v as u64);
    }
    let total = prefix[n];
    // Sum over indices [a, b) in 0..n.
    let range = |a: usize, b: usize| prefix[b] - prefix[a];
    (0..n)
        .map(|y| {
            if torus {
                let width = 2 * ell + 1;
                let full = (width / n) as u64 * total;
                let rest = width % n;
                let start = (y + n - ell % n) % n;
                let end = start + rest;
                let part = if end <= n { range(start, end) } else { range(start, n) + range(0, end - n) };
                (full + part) as f64 / width as f64
            } else {
                let (a, b) = (y.saturating_sub(ell), (y + ell + 1).min(n));
                range(a, b) as f64 / (b - a) as f64
            }
        })
        .collect()
}

/// `(1/N) Σ_x η_x φ(x/N)` over the stored sites (window sites only on a line).
pub fn empirical_pairing(values: &[u32], geometry: &LatticeGeometry, scale: usize, phi: impl Fn(f64) -> f64) -> f64 {
    let s = scale as f64;
    geometry.window().map(|i| values[i] as f64 * phi(geometry.site_of(i) as f64 / s)).sum::<f64>() / s
}

/// Replica-averaged block density at time `t`, cell-averaged onto `cells`
/// macroscopic cells of the observed region (`[0, 1)` on the torus,
/// `[lo/N, hi/N]` on a line window).
pub fn block_density_field(ensemble: &[ObservationSet], t: f64, ell: usize, scale: usize, cells: usize) -> Result<DensityField> {
    let first = ensemble.first().ok_or(Error::Params("empty ensemble".into()))?;
    let geometry = first.geometry;
    let window = geometry.window();
    let sites = window.len();
    if cells == 0 || sites % cells != 0 {
        return Err(Error::Params(format!("{sites} observed sites do not split into {cells} cells")));
    }
    let mut acc = vec![0.0; sites];
    for obs in ensemble {
        if obs.geometry != geometry {
            return Err(Error::Params("ensemble members live on different lattices".into()));
        }
        let snap = obs.at(t)?;
        let b = block_average(&snap.values, ell, geometry.is_torus());
        for (a, v) in acc.iter_mut().zip(&b[window.clone()]) {
            *a += v;
        }
    }
    let r = ensemble.len() as f64;
    let per = sites / cells;
    let values = acc.chunks(per).map(|c| c.iter().sum::<f64>() / (per as f64 * r)).collect();
    let fg = match geometry {
        LatticeGeometry::Torus { .. } => FieldGeometry::Torus,
        LatticeGeometry::LineWindow { lo, hi, .. } => {
            FieldGeometry::Interval { lo: lo as f64 / scale as f64, hi: hi as f64 / scale as f64 }
        }
    };
    DensityField::new(fg, values)
}

/// L¹ distance between the replica-averaged block density at `t` and a PDE
/// field, on the PDE field's grid.
pub fn hydro_error(ensemble: &[ObservationSet], pde: &DensityField, t: f64, ell: usize, scale: usize) -> Result<f64> {
    let sim = block_density_field(ensemble, t, ell, scale, pde.len())?;
    let l1 = sim.cells.iter().zip(&pde.cells).map(|(a, b)| (a - b).abs()).sum::<f64>() * pde.dx();
    if (sim.dx() - pde.dx()).abs() > 1e-12 * pde.dx() {
        return Err(Error::Params("simulation and PDE grids differ".into()));
    }
    Ok(l1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedReport {
    pub deviations: Vec<f64>,
    pub mean: f64,
    /// Replicas without any empty site (excluded).
    pub degenerate: usize,
}

/// `|X(t)/N − target|` per replica and on average.
pub fn tagged_hole_check(ensemble: &[ObservationSet], t: f64, target: f64, scale: usize) -> Result<TaggedReport> {
    let mut deviations = Vec::new();
    let mut degenerate = 0;
    for obs in ensemble {
        if obs.flags.degenerate {
            degenerate += 1;
            continue;
        }
        let x = obs.at(t)?.tagged.ok_or(Error::Params("run did not follow a tagged empty site".into()))?;
        deviations.push((x as f64 / scale as f64 - target).abs());
    }
    if deviations.is_empty() {
        return Err(Error::Params("no usable replicas".into()));
    }
    let mean = deviations.iter().sum::<f64>() / deviations.len() as f64;
    Ok(TaggedReport { deviations, mean, degenerate })
}

fn observed_frames(obs: &ObservationSet) -> impl Iterator<Item = &[u32]> {
    std::iter::once(obs.initial.values.as_slice()).chain(obs.snapshots.iter().map(|s| s.values.as_slice()))
}

/// `|(2ℓ+1)⁻¹ Σ 1{ω_{y′} ≥ 2} − G(ω^ℓ_y)|` averaged over sites of one frame.
pub fn one_block_frame(values: &[u32], ell: usize, torus: bool) -> f64 {
    let active: Vec<u32> = values.iter().map(|&v| u32::from(v >= 2)).collect();
    let a = block_average(&active, ell, torus);
    let b = block_average(values, ell, torus);
    a.iter().zip(&b).map(|(x, y)| (x - g_exact(*y)).abs()).sum::<f64>() / values.len() as f64
}

/// One-block quantity averaged over sites and observed frames (initial included).
pub fn one_block_diagnostic(obs: &ObservationSet, ell: usize) -> f64 {
    let torus = obs.geometry.is_torus();
    let frames: Vec<f64> = observed_frames(obs).map(|v| one_block_frame(v, ell, torus)).collect();
    frames.iter().sum::<f64>() / frames.len() as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoBlock {
    /// Average of `|G(ω^ℓ) − G(ω^{εM})|` over all sites and frames.
    pub unrestricted: f64,
    /// Same average over the sites where both block averages exceed `1 + δ`
    /// (0 when there are none).
    pub restricted: f64,
    /// Fraction of (site, frame) pairs entering the restricted average.
    pub restricted_fraction: f64,
}

pub fn two_block_frame(values: &[u32], ell: usize, big: usize, delta: f64, torus: bool) -> (f64, f64, usize) {
    let small = block_average(values, ell, torus);
    let large = block_average(values, big, torus);
    let (mut all, mut restricted, mut count) = (0.0, 0.0, 0usize);
    for (a, b) in small.iter().zip(&large) {
        let d = (g_exact(*a) - g_exact(*b)).abs();
        all += d;
        if *a > 1.0 + delta && *b > 1.0 + delta {
            restricted += d;
            count += 1;
        }
    }
    (all, restricted, count)
}

/// Two-block quantity with macroscopic radius `⌊ε M⌋`, which must exceed `ℓ`.
pub fn two_block_diagnostic(obs: &ObservationSet, ell: usize, eps_macro: f64, delta: f64) -> Result<TwoBlock> {
    let m = obs.geometry.window().len();
    let big = (eps_macro * m as f64).floor() as usize;
    if big <= ell {
        return Err(Error::Params(format!("macroscopic block εM = {big} must exceed ℓ = {ell}")));
    }
    let torus = obs.geometry.is_torus();
    let (mut all, mut restricted, mut count, mut total) = (0.0, 0.0, 0usize, 0usize);
    for v in observed_frames(obs) {
        let (a, r, c) = two_block_frame(v, ell, big, delta, torus);
        all += a;
        restricted += r;
        count += c;
        total += v.len();
    }
    Ok(TwoBlock {
        unrestricted: all / total as f64,
        restricted: if count > 0 { restricted / count as f64 } else { 0.0 },
        restricted_fraction: count as f64 / total as f64,
    })
}

/// Counts beyond this height are pooled into the tail bin of the TV estimate.
pub const TV_TRUNCATION: u32 = 50;

/// Total-variation distance between pooled empirical heights (add-one
/// smoothing on `0..=50`, everything above in one tail bin) and a pmf.
pub fn tv_to_pmf(heights: impl IntoIterator<Item = u32>, pmf: impl Fn(u32) -> f64) -> f64 {
    let bins = TV_TRUNCATION as usize + 2;
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    for h in heights {
        counts[(h as usize).min(bins - 1)] += 1;
        total += 1;
    }
    let denom = (total + bins as u64) as f64;
    let mut tail = 1.0;
    let mut tv = 0.0;
    for (k, &c) in counts.iter().enumerate().take(bins - 1) {
        let p = pmf(k as u32);
        tail -= p;
        tv += ((c + 1) as f64 / denom - p).abs();
    }
    tv += ((counts[bins - 1] + 1) as f64 / denom - tail.max(0.0)).abs();
    0.5 * tv
}

/// Exact TV distance between the product law `μ_α` and `μ*_α` marginals.
pub fn initial_equilibrium_tv(alpha: f64) -> f64 {
    // Both pmfs are summable in closed form; 2000 terms exhaust f64 precision for α ≤ 50.
    0.5 * (0..2000u32).map(|k| (geometric_pmf(alpha, k) - equilibrium_pmf(alpha, k)).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationRow {
    pub time: f64,
    pub tv: f64,
}

/// Starts from i.i.d. geometric heights of mean `α` on the torus of `M`
/// sites, runs the symmetric dynamics on the clock `params_scale^2` and
/// reports the TV distance of the pooled single-site marginal to `μ*_α`.
pub fn equilibration_check(alpha: f64, m: usize, times: &[f64], clock_scale: usize, replicas: u32, seed: u64) -> Result<Vec<EquilibrationRow>> {
    if !(alpha > 1.0) {
        return Err(Error::Params(format!("equilibration needs α > 1, got {alpha}")));
    }
    let geometry = LatticeGeometry::torus(m)?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let runs = run_replicas(replicas, |r| {
        let s = StreamSeed::new(seed, r);
        let omega = sample_geometric_profile(&Profile::constant(alpha), geometry, m, s)?;
        let params = SimParams::symmetric(1.0, clock_scale, horizon, s).with_observations(times.to_vec());
        run_fzrp(&omega, &params)
    })?;
    times
        .iter()
        .map(|&t| {
            let pooled = runs.iter().map(|o| o.at(t).map(|s| s.values.clone())).collect::<Result<Vec<_>>>()?;
            let tv = if t == 0.0 {
                let init = runs.iter().flat_map(|o| o.initial.values.iter().copied());
                tv_to_pmf(init, |k| equilibrium_pmf(alpha, k))
            } else {
                tv_to_pmf(pooled.into_iter().flatten(), |k| equilibrium_pmf(alpha, k))
            };
            Ok(EquilibrationRow { time: t, tv })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxHeight {
    /// Maximum over sites and observed frames.
    pub observed: u32,
    /// Maximum over every event of the run.
    pub running: u32,
    /// `log² M`.
    pub threshold: f64,
    pub flagged: bool,
}

pub fn max_height_report(obs: &ObservationSet) -> MaxHeight {
    let observed = observed_frames(obs).flat_map(|v| v.iter().copied()).max().unwrap_or(0);
    let running = obs.flags.max_height.max(observed);
    let m = obs.geometry.window().len() as f64;
    let threshold = m.ln().powi(2);
    MaxHeight { observed, running, threshold, flagged: observed as f64 >= threshold }
}

/// Stationary law of a finite chain restricted to the closed class reached
/// from `start`, together with the time-averaged empirical law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub states: Vec<Vec<u32>>,
    pub exact: Vec<f64>,
    pub empirical: Vec<f64>,
    pub tv: f64,
    pub events: u64,
}

impl StationarityReport {
    /// `E[f]` under the exact and the empirical law.
    pub fn expectations(&self, f: impl Fn(&[u32]) -> f64) -> (f64, f64) {
        let e = |w: &[f64]| self.states.iter().zip(w).map(|(s, p)| f(s) * p).sum::<f64>();
        (e(&self.exact), e(&self.empirical))
    }
}

/// Exact stationary law on the states reachable from `start` under
/// `transitions`, by solving `πQ = 0`, `Σπ = 1`.
pub fn exact_stationary_law(
    start: Vec<u32>,
    transitions: impl Fn(&[u32]) -> Vec<(Vec<u32>, f64)>,
) -> Result<(Vec<Vec<u32>>, Vec<f64>)> {
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    index.insert(start, 0);
    let mut edges: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let out = transitions(&states[i]);
        let mut row = Vec::with_capacity(out.len());
        for (s, rate) in out {
            let j = *index.entry(s.clone()).or_insert_with(|| {
                states.push(s);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            row.push((j, rate));
        }
        if edges.len() <= i {
            edges.resize(i + 1, Vec::new());
        }
        edges[i] = row;
    }
    let n = states.len();
    if n > 2000 {
        return Err(Error::Params(format!("{n} states is too many for the dense solver")));
    }
    // Rows of A are the balance equations (Qᵀ π = 0); the last is replaced by Σπ = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in edges.iter().enumerate() {
        for &(j, rate) in row {
            a[j][i] += rate;
            a[i][i] -= rate;
        }
    }
    a[n - 1] = vec![1.0; n + 1];
    let pi = gauss_solve(a).ok_or(Error::Params("generator restricted to the reached states is singular".into()))?;
    Ok((states, pi))
}

/// Solves the augmented system `[A | b]` by partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..=n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exclusion moves on a torus configuration with their rates.
pub fn fep_transitions(eta: &[u32], p: f64, p_prime: f64) -> Vec<(Vec<u32>, f64)> {
    let n = eta.len();
    let at = |i: isize| eta[i.rem_euclid(n as isize) as usize];
    let mut out = Vec::new();
    for x in 0..n as isize {
        let swap = |a: isize, b: isize| {
            let mut s = eta.to_vec();
            s.swap(a.rem_euclid(n as isize) as usize, b.rem_euclid(n as isize) as usize);
            s
        };
        if p > 0.0 && at(x - 1) == 1 && at(x) == 1 && at(x + 1) == 0 {
            out.push((swap(x, x + 1), p));
        }
        if p_prime > 0.0 && at(x) == 0 && at(x + 1) == 1 && at(x + 2) == 1 {
            out.push((swap(x, x + 1), p_prime));
        }
    }
    out
}

/// Zero-range moves on a torus configuration with their rates.
pub fn fzrp_transitions(omega: &[u32], p: f64, p_prime: f64) -> Vec<(Vec<u32>, f64)> {
    let m = omega.len();
    let mut out = Vec::new();
    for y in 0..m {
        if omega[y] >= 2 {
            for (to, rate) in [((y + 1) % m, p), ((y + m - 1) % m, p_prime)] {
                if rate > 0.0 {
                    let mut s = omega.to_vec();
                    s[y] -= 1;
                    s[to] += 1;
                    out.push((s, rate));
                }
            }
        }
    }
    out
}

fn empirical_law(states: &[Vec<u32>], mut step: impl FnMut() -> Option<(f64, Vec<u32>)>, start: &[u32], events: u64) -> Result<(Vec<f64>, u64)> {
    let index: HashMap<&[u32], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut time_in = vec![0.0; states.len()];
    let (mut current, mut last) = (index[start], 0.0);
    let mut done = 0;
    while done < events {
        let Some((t, s)) = step() else { break };
        time_in[current] += t - last;
        last = t;
        current = *index.get(s.as_slice()).ok_or(Error::Params("chain left the enumerated class".into()))?;
        done += 1;
    }
    let total: f64 = time_in.iter().sum();
    if total <= 0.0 {
        let mut w = vec![0.0; states.len()];
        w[current] = 1.0;
        return Ok((w, done));
    }
    Ok((time_in.into_iter().map(|x| x / total).collect(), done))
}

/// Compares the time-averaged law of a torus exclusion run with the exact
/// stationary law of its closed class.
pub fn fep_stationarity_check(eta0: &ExclusionConfig, p: f64, p_prime: f64, events: u64, seed: StreamSeed) -> Result<StationarityReport> {
    if !eta0.geometry().is_torus() {
        return Err(Error::Params("the exact chain is built on the torus".into()));
    }
    let start: Vec<u32> = eta0.occupancy().iter().map(|&b| b as u32).collect();
    let (states, exact) = exact_stationary_law(start.clone(), |s| fep_transitions(s, p, p_prime))?;
    let mut engine = ExclusionEngine::new(eta0, p, p_prime, seed);
    let step = || engine.step().map(|_| (engine.micro_time(), engine.occupancy().iter().map(|&b| b as u32).collect()));
    let (empirical, events) = empirical_law(&states, step, &start, events)?;
    Ok(StationarityReport { tv: tv(&exact, &empirical), states, exact, empirical, events })
}

/// Same comparison for a torus zero-range run.
pub fn fzrp_stationarity_check(omega0: &ZeroRangeConfig, p: f64, p_prime: f64, events: u64, seed: StreamSeed) -> Result<StationarityReport> {
    if !omega0.geometry().is_torus() {
        return Err(Error::Params("the exact chain is built on the torus".into()));
    }
    let start = omega0.heights().to_vec();
    let (states, exact) = exact_stationary_law(start.clone(), |s| fzrp_transitions(s, p, p_prime))?;
    let mut engine = ZeroRangeEngine::new(omega0, p, p_prime, seed);
    let step = || engine.step().map(|_| (engine.micro_time(), engine.heights().to_vec()));
    let (empirical, events) = empirical_law(&states, step, &start, events)?;
    Ok(StationarityReport { tv: tv(&exact, &empirical), states, exact, empirical, events })
}
