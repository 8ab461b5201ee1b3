//! Rejection-free continuous-time simulation of the facilitated exclusion
//! and zero-range processes.
//!
//! Both engines keep the set of enabled moves in an [`ActiveSet`] and draw
//! exponential waiting times with the total rate, so every event changes the
//! configuration. Engines work in microscopic time internally; callers only
//! see macroscopic times `t`, related by `t_micro = t · scale^κ`.
//!
//! Sites outside the stored array of a line window count as empty and never
//! receive particles, so a line window behaves as a closed segment. The
//! padding is meant to keep activity away from its ends; a run whose events
//! touch the outermost cell is flagged.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ExclusionConfig, LatticeGeometry, ZeroRangeConfig};
use crate::rng::{Purpose, StreamSeed};

/// Unordered set of array indices with O(1) insert, remove and uniform pick.
#[derive(Clone, Debug)]
pub struct ActiveSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl ActiveSet {
    pub fn new(capacity: usize) -> Self {
        Self { items: Vec::new(), pos: vec![ABSENT; capacity] }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.pos[i] != ABSENT
    }

    pub fn get(&self, k: usize) -> usize {
        self.items[k] as usize
    }

    pub fn insert(&mut self, i: usize) {
        if self.pos[i] == ABSENT {
            self.pos[i] = self.items.len() as u32;
            self.items.push(i as u32);
        }
    }

    pub fn remove(&mut self, i: usize) {
        let k = self.pos[i];
        if k == ABSENT {
            return;
        }
        let last = self.items.pop().unwrap();
        if last as usize != i {
            self.items[k as usize] = last;
            self.pos[last as usize] = k;
        }
        self.pos[i] = ABSENT;
    }

    pub fn set(&mut self, i: usize, member: bool) {
        if member {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&i| i as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Symmetric,
    Asymmetric,
}

/// Jump rates, time scaling and observation schedule of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub p: f64,
    pub p_prime: f64,
    pub kappa: u32,
    /// `N` (exclusion) or `M` (zero-range): the clock runs `scale^κ` times faster.
    pub scale: usize,
    pub horizon: f64,
    pub seed: StreamSeed,
    /// Sorted macroscopic times in `[0, horizon]`.
    pub observation_times: Vec<f64>,
}

impl SimParams {
    /// `p = p′`, diffusive clock `scale²`.
    pub fn symmetric(p: f64, scale: usize, horizon: f64, seed: StreamSeed) -> Self {
        Self { p, p_prime: p, kappa: 2, scale, horizon, seed, observation_times: vec![horizon] }
    }

    /// `p′ = 1 − p`, hyperbolic clock `scale`.
    pub fn asymmetric(p: f64, scale: usize, horizon: f64, seed: StreamSeed) -> Self {
        Self { p, p_prime: 1.0 - p, kappa: 1, scale, horizon, seed, observation_times: vec![horizon] }
    }

    pub fn with_observations(mut self, times: Vec<f64>) -> Self {
        self.observation_times = times;
        self
    }

    pub fn mode(&self) -> Mode {
        if self.kappa == 2 {
            Mode::Symmetric
        } else {
            Mode::Asymmetric
        }
    }

    pub fn clock_rate(&self) -> f64 {
        (self.scale as f64).powi(self.kappa as i32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Params(m));
        if !(0.0..=1.0).contains(&self.p) || !(0.0..=1.0).contains(&self.p_prime) {
            return bad(format!("rates must lie in [0, 1], got p = {}, p' = {}", self.p, self.p_prime));
        }
        match self.kappa {
            2 if self.p != self.p_prime => {
                return bad(format!("symmetric mode (kappa = 2) needs p = p', got {} and {}", self.p, self.p_prime))
            }
            1 if !(self.p > 0.5 && (self.p + self.p_prime - 1.0).abs() < 1e-12) => {
                return bad(format!(
                    "asymmetric mode (kappa = 1) needs p in (1/2, 1] and p' = 1 - p, got p = {}, p' = {}",
                    self.p, self.p_prime
                ))
            }
            1 | 2 => {}
            k => return bad(format!("kappa must be 1 or 2, got {k}")),
        }
        if self.scale == 0 {
            return bad("scale must be positive".into());
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be finite and nonnegative, got {}", self.horizon));
        }
        let t = &self.observation_times;
        if t.iter().any(|&s| !(0.0..=self.horizon).contains(&s)) || !t.windows(2).all(|w| w[0] < w[1]) {
            return bad("observation times must be strictly increasing within [0, horizon]".into());
        }
        Ok(())
    }
}

/// One observation of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Macroscopic time.
    pub time: f64,
    /// Occupancies (exclusion) or heights (zero-range), in array order.
    pub values: Vec<u32>,
    /// Net number of jumps across edge `(i, i+1)` (array indices; the last
    /// torus edge joins the last site to the first).
    pub currents: Vec<i64>,
    /// Unwrapped lattice position of the tagged empty site, if tracked.
    pub tagged: Option<i64>,
    pub events: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    /// Configuration without empty sites (tagged-hole runs only).
    pub degenerate: bool,
    /// Some event involved the first or last stored site of a line window.
    pub outer_cell_touched: bool,
    /// Largest height reached at any time (zero-range runs).
    pub max_height: u32,
}

impl RunFlags {
    pub fn valid(&self) -> bool {
        !self.outer_cell_touched
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub geometry: LatticeGeometry,
    pub initial: Snapshot,
    pub snapshots: Vec<Snapshot>,
    pub flags: RunFlags,
}

impl ObservationSet {
    pub fn at(&self, time: f64) -> Result<&Snapshot> {
        if time == 0.0 {
            return Ok(self.snapshots.iter().find(|s| s.time == 0.0).unwrap_or(&self.initial));
        }
        self.snapshots
            .iter()
            .find(|s| (s.time - time).abs() <= 1e-12 * time.abs().max(1.0))
            .ok_or(Error::MissingObservation(time))
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().unwrap_or(&self.initial)
    }

    pub fn event_count(&self) -> u64 {
        self.final_snapshot().events
    }
}

/// A move of one particle between two array indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub from: usize,
    pub to: usize,
}

/// Exact simulator of the facilitated exclusion process.
///
/// Occupancies live in `cells` with two guard cells on each side: copies of
/// the opposite end on the torus, and the marker `2` on a line window, which
/// reads as neither a particle nor a hole so nothing jumps across the ends.
#[derive(Clone, Debug)]
pub struct ExclusionEngine {
    geometry: LatticeGeometry,
    n: usize,
    torus: bool,
    cells: Vec<u8>,
    right: ActiveSet,
    left: ActiveSet,
    p: f64,
    p_prime: f64,
    rng: ChaCha8Rng,
    /// Microscopic time of the last event.
    time: f64,
    next_time: Option<f64>,
    currents: Vec<i64>,
    /// Unwrapped label and array index of the tagged hole.
    tagged: Option<(i64, usize)>,
    events: u64,
    outer_touched: bool,
}

const GUARD: usize = 2;
const WALL: u8 = 2;

impl ExclusionEngine {
    pub fn new(eta: &ExclusionConfig, p: f64, p_prime: f64, seed: StreamSeed) -> Self {
        let geometry = *eta.geometry();
        let n = geometry.len();
        let torus = geometry.is_torus();
        let mut cells = vec![WALL; n + 2 * GUARD];
        cells[GUARD..GUARD + n].copy_from_slice(eta.occupancy());
        let mut engine = Self {
            geometry,
            n,
            torus,
            cells,
            right: ActiveSet::new(n),
            left: ActiveSet::new(n),
            p,
            p_prime,
            rng: seed.rng(Purpose::Dynamics),
            time: 0.0,
            next_time: None,
            currents: vec![0; geometry.edge_count()],
            tagged: None,
            events: 0,
            outer_touched: false,
        };
        if torus {
            for i in 0..n {
                engine.sync_guard(i);
            }
        }
        for i in 0..n {
            engine.refresh(i);
        }
        engine
    }

    /// Follows the first empty site at or to the right of the origin.
    pub fn track_tagged_hole(&mut self) -> bool {
        let start = if self.torus { 0 } else { self.geometry.index_of(0).unwrap_or(0) };
        self.tagged = (start..self.n).find(|&i| self.cells[i + GUARD] == 0).map(|i| (self.geometry.site_of(i), i));
        self.tagged.is_some()
    }

    /// Mirrors site `i` into the guard cells of a torus.
    #[inline]
    fn sync_guard(&mut self, i: usize) {
        let v = self.cells[i + GUARD];
        if i + GUARD >= self.n {
            self.cells[i + GUARD - self.n] = v;
        }
        if i < GUARD {
            self.cells[i + GUARD + self.n] = v;
        }
    }

    #[inline]
    fn wrap(&self, i: isize) -> Option<usize> {
        let n = self.n as isize;
        if (0..n).contains(&i) {
            Some(i as usize)
        } else if self.torus {
            Some(if i < 0 { i + n } else { i - n } as usize)
        } else {
            None
        }
    }

    #[cfg(test)]
    fn occ(&self, i: isize) -> u8 {
        let v = self.cells[(i + GUARD as isize) as usize];
        if v == WALL {
            0
        } else {
            v
        }
    }

    /// Recomputes whether the particle at `i` can jump right / left.
    #[inline]
    fn refresh(&mut self, i: usize) {
        let c = &self.cells[i + GUARD - 1..i + GUARD + 2];
        let (prev, here, next) = (c[0], c[1], c[2]);
        let can_right = here == 1 && prev == 1 && next == 0;
        let can_left = here == 1 && next == 1 && prev == 0;
        self.right.set(i, can_right && self.p > 0.0);
        self.left.set(i, can_left && self.p_prime > 0.0);
    }

    pub fn total_rate(&self) -> f64 {
        self.p * self.right.len() as f64 + self.p_prime * self.left.len() as f64
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.cells[GUARD..GUARD + self.n]
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn currents(&self) -> &[i64] {
        &self.currents
    }

    pub fn tagged(&self) -> Option<i64> {
        self.tagged.map(|t| t.0)
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn micro_time(&self) -> f64 {
        self.time
    }

    pub fn config(&self) -> ExclusionConfig {
        ExclusionConfig::from_bits(self.geometry, self.occupancy().to_vec()).expect("engine keeps a valid configuration")
    }

    fn draw_next(&mut self) -> Option<f64> {
        if self.next_time.is_none() {
            let rate = self.total_rate();
            if rate > 0.0 {
                let e: f64 = self.rng.sample(Exp1);
                self.next_time = Some(self.time + e / rate);
            }
        }
        self.next_time
    }

    /// Performs the next event if it happens no later than `until` (microscopic).
    pub fn step_until(&mut self, until: f64) -> Option<Move> {
        let t = self.draw_next()?;
        if t > until {
            return None;
        }
        debug_assert!(t >= self.time, "event times must not decrease");
        self.time = t;
        self.next_time = None;
        let nr = self.right.len();
        let u = self.rng.random::<f64>() * self.total_rate();
        let pr = self.p * nr as f64;
        let (from, rightward) = if u < pr {
            let k = ((u / self.p) as usize).min(nr - 1);
            (self.right.get(k), true)
        } else {
            let nl = self.left.len();
            let k = (((u - pr) / self.p_prime) as usize).min(nl - 1);
            (self.left.get(k), false)
        };
        let to = self.wrap(from as isize + if rightward { 1 } else { -1 }).expect("enabled moves stay inside");
        self.apply(from, to, rightward);
        Some(Move { from, to })
    }

    /// Performs the next event regardless of time.
    pub fn step(&mut self) -> Option<Move> {
        self.step_until(f64::INFINITY)
    }

    fn apply(&mut self, from: usize, to: usize, rightward: bool) {
        self.cells[from + GUARD] = 0;
        self.cells[to + GUARD] = 1;
        if self.torus {
            self.sync_guard(from);
            self.sync_guard(to);
        }
        self.events += 1;
        let edge = if rightward { from } else { to };
        self.currents[edge] += if rightward { 1 } else { -1 };
        if let Some((x, xi)) = self.tagged {
            if xi == to {
                self.tagged = Some(if rightward { (x - 1, from) } else { (x + 1, from) });
            }
        }
        let n = self.n;
        if !self.torus && (from == 0 || to == 0 || from == n - 1 || to == n - 1) {
            self.outer_touched = true;
        }
        let base = edge as isize;
        for d in -1..=2 {
            if let Some(i) = self.wrap(base + d) {
                self.refresh(i);
            }
        }
    }

    fn snapshot(&self, time: f64) -> Snapshot {
        Snapshot {
            time,
            values: self.occupancy().iter().map(|&b| b as u32).collect(),
            currents: self.currents.clone(),
            tagged: self.tagged(),
            events: self.events,
        }
    }

    fn flags(&self) -> RunFlags {
        RunFlags { outer_cell_touched: self.outer_touched, ..RunFlags::default() }
    }
}

/// Exact simulator of the facilitated zero-range process, optionally coupled
/// with a second copy through the basic coupling.
///
/// The coupled engine keeps the union of the two active sets; a chosen site
/// and direction move a particle in every copy where the site holds at least
/// two particles. With identical copies it consumes random numbers exactly
/// like the single engine.
#[derive(Clone, Debug)]
pub struct ZeroRangeEngine {
    geometry: LatticeGeometry,
    torus: bool,
    omega: Vec<u32>,
    zeta: Option<Vec<u32>>,
    active: ActiveSet,
    p: f64,
    p_prime: f64,
    rng: ChaCha8Rng,
    time: f64,
    next_time: Option<f64>,
    currents: Vec<i64>,
    currents_zeta: Vec<i64>,
    events: u64,
    outer_touched: bool,
    max_height: u32,
}

/// Outcome of one zero-range clock ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PileMove {
    pub from: usize,
    /// `None` when the target lies outside a line window (the ring is void).
    pub to: Option<usize>,
    pub moved_first: bool,
    pub moved_second: bool,
}

impl ZeroRangeEngine {
    pub fn new(omega: &ZeroRangeConfig, p: f64, p_prime: f64, seed: StreamSeed) -> Self {
        Self::build(omega, None, p, p_prime, seed)
    }

    pub fn coupled(omega: &ZeroRangeConfig, zeta: &ZeroRangeConfig, p: f64, p_prime: f64, seed: StreamSeed) -> Result<Self> {
        if omega.geometry() != zeta.geometry() {
            return Err(Error::Geometry("coupled copies must share their geometry".into()));
        }
        Ok(Self::build(omega, Some(zeta), p, p_prime, seed))
    }

    fn build(omega: &ZeroRangeConfig, zeta: Option<&ZeroRangeConfig>, p: f64, p_prime: f64, seed: StreamSeed) -> Self {
        let geometry = *omega.geometry();
        let n = geometry.len();
        let edges = if n == 1 { 1 } else { geometry.edge_count() };
        let mut engine = Self {
            geometry,
            torus: geometry.is_torus(),
            omega: omega.heights().to_vec(),
            zeta: zeta.map(|z| z.heights().to_vec()),
            active: ActiveSet::new(n),
            p,
            p_prime,
            rng: seed.rng(Purpose::Dynamics),
            time: 0.0,
            next_time: None,
            currents: vec![0; edges],
            currents_zeta: vec![0; if zeta.is_some() { edges } else { 0 }],
            events: 0,
            outer_touched: false,
            max_height: 0,
        };
        engine.max_height = engine.omega.iter().copied().max().unwrap_or(0);
        if let Some(z) = &engine.zeta {
            engine.max_height = engine.max_height.max(z.iter().copied().max().unwrap_or(0));
        }
        for i in 0..n {
            engine.refresh(i);
        }
        engine
    }

    #[inline]
    fn refresh(&mut self, i: usize) {
        let on = self.omega[i] >= 2 || self.zeta.as_ref().is_some_and(|z| z[i] >= 2);
        // A single-site torus has nowhere to move particles to.
        let movable = self.omega.len() > 1 && self.p + self.p_prime > 0.0;
        self.active.set(i, on && movable);
    }

    pub fn total_rate(&self) -> f64 {
        (self.p + self.p_prime) * self.active.len() as f64
    }

    pub fn heights(&self) -> &[u32] {
        &self.omega
    }

    pub fn second(&self) -> Option<&[u32]> {
        self.zeta.as_deref()
    }

    pub fn currents(&self) -> &[i64] {
        &self.currents
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn max_height(&self) -> u32 {
        self.max_height
    }

    pub fn micro_time(&self) -> f64 {
        self.time
    }

    fn draw_next(&mut self) -> Option<f64> {
        if self.next_time.is_none() {
            let rate = self.total_rate();
            if rate > 0.0 {
                let e: f64 = self.rng.sample(Exp1);
                self.next_time = Some(self.time + e / rate);
            }
        }
        self.next_time
    }

    pub fn step_until(&mut self, until: f64) -> Option<PileMove> {
        let t = self.draw_next()?;
        if t > until {
            return None;
        }
        debug_assert!(t >= self.time, "event times must not decrease");
        self.time = t;
        self.next_time = None;
        // One uniform picks the site (integer part) and the direction (fraction).
        let len = self.active.len();
        let u = self.rng.random::<f64>() * len as f64;
        let k = (u as usize).min(len - 1);
        let from = self.active.get(k);
        let rightward = (u - k as f64) * (self.p + self.p_prime) < self.p;
        let n = self.omega.len();
        let to = if rightward {
            if from + 1 < n {
                Some(from + 1)
            } else {
                self.torus.then_some(0)
            }
        } else if from > 0 {
            Some(from - 1)
        } else {
            self.torus.then_some(n - 1)
        };
        self.events += 1;
        let Some(to) = to else {
            self.outer_touched = true;
            return Some(PileMove { from, to: None, moved_first: false, moved_second: false });
        };
        let edge = if rightward { from } else { to };
        let sign = if rightward { 1 } else { -1 };
        let moved_first = self.omega[from] >= 2;
        if moved_first {
            self.omega[from] -= 1;
            self.omega[to] += 1;
            self.currents[edge] += sign;
            self.max_height = self.max_height.max(self.omega[to]);
        }
        let mut moved_second = false;
        if let Some(z) = self.zeta.as_mut() {
            if z[from] >= 2 {
                z[from] -= 1;
                z[to] += 1;
                self.currents_zeta[edge] += sign;
                self.max_height = self.max_height.max(z[to]);
                moved_second = true;
            }
        }
        if !self.torus && (from == 0 || to == 0 || from == n - 1 || to == n - 1) {
            self.outer_touched = true;
        }
        self.refresh(from);
        self.refresh(to);
        Some(PileMove { from, to: Some(to), moved_first, moved_second })
    }

    pub fn step(&mut self) -> Option<PileMove> {
        self.step_until(f64::INFINITY)
    }

    fn snapshot(&self, time: f64, second: bool) -> Snapshot {
        let (values, currents) = if second {
            (self.zeta.clone().unwrap_or_default(), self.currents_zeta.clone())
        } else {
            (self.omega.clone(), self.currents.clone())
        };
        Snapshot { time, values, currents, tagged: None, events: self.events }
    }

    fn flags(&self) -> RunFlags {
        RunFlags { outer_cell_touched: self.outer_touched, max_height: self.max_height, ..RunFlags::default() }
    }
}

trait Stepper {
    fn advance(&mut self, until: f64) -> bool;
}

impl Stepper for ExclusionEngine {
    fn advance(&mut self, until: f64) -> bool {
        self.step_until(until).is_some()
    }
}

impl Stepper for ZeroRangeEngine {
    fn advance(&mut self, until: f64) -> bool {
        self.step_until(until).is_some()
    }
}

fn drive<E: Stepper, T>(params: &SimParams, engine: &mut E, mut snapshot: impl FnMut(&E, f64) -> T) -> Vec<T> {
    let rate = params.clock_rate();
    params
        .observation_times
        .iter()
        .map(|&t| {
            let until = t * rate;
            while engine.advance(until) {}
            snapshot(engine, t)
        })
        .collect()
}

/// Simulates the exclusion process from `eta0` up to the last observation time.
pub fn run_fep(eta0: &ExclusionConfig, params: &SimParams) -> Result<ObservationSet> {
    run_fep_inner(eta0, params, false)
}

/// As [`run_fep`], additionally following the first empty site at or to the
/// right of the origin. Without any empty site the run is flagged degenerate.
pub fn run_fep_with_tagged_hole(eta0: &ExclusionConfig, params: &SimParams) -> Result<ObservationSet> {
    run_fep_inner(eta0, params, true)
}

fn run_fep_inner(eta0: &ExclusionConfig, params: &SimParams, tag: bool) -> Result<ObservationSet> {
    params.validate()?;
    let mut engine = ExclusionEngine::new(eta0, params.p, params.p_prime, params.seed);
    let degenerate = tag && !engine.track_tagged_hole();
    let initial = engine.snapshot(0.0);
    let snapshots = drive(params, &mut engine, |e, t| e.snapshot(t));
    let mut flags = engine.flags();
    flags.degenerate = degenerate;
    Ok(ObservationSet { geometry: *eta0.geometry(), initial, snapshots, flags })
}

/// Simulates the zero-range process from `omega0`.
pub fn run_fzrp(omega0: &ZeroRangeConfig, params: &SimParams) -> Result<ObservationSet> {
    params.validate()?;
    let mut engine = ZeroRangeEngine::new(omega0, params.p, params.p_prime, params.seed);
    let initial = engine.snapshot(0.0, false);
    let snapshots = drive(params, &mut engine, |e, t| e.snapshot(t, false));
    Ok(ObservationSet { geometry: *omega0.geometry(), initial, snapshots, flags: engine.flags() })
}

/// Simulates two zero-range copies under the basic coupling.
pub fn run_coupled_fzrp(
    omega0: &ZeroRangeConfig,
    zeta0: &ZeroRangeConfig,
    params: &SimParams,
) -> Result<(ObservationSet, ObservationSet)> {
    params.validate()?;
    let mut engine = ZeroRangeEngine::coupled(omega0, zeta0, params.p, params.p_prime, params.seed)?;
    let (i0, i1) = (engine.snapshot(0.0, false), engine.snapshot(0.0, true));
    let rows = drive(params, &mut engine, |e, t| (e.snapshot(t, false), e.snapshot(t, true)));
    let (first, second): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let flags = engine.flags();
    let g = *omega0.geometry();
    Ok((
        ObservationSet { geometry: g, initial: i0, snapshots: first, flags: flags.clone() },
        ObservationSet { geometry: g, initial: i1, snapshots: second, flags },
    ))
}

/// Number of sign changes along the (cyclic, on the torus) sequence of
/// nonzero differences `ω_y − ζ_y`.
pub fn sign_changes(omega: &[u32], zeta: &[u32], torus: bool) -> usize {
    let signs: Vec<bool> = omega
        .iter()
        .zip(zeta)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| a > b)
        .collect();
    let mut count = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if torus && signs.len() > 1 && signs[0] != signs[signs.len() - 1] {
        count += 1;
    }
    count
}

/// Smallest padding for which activity starting inside the window reaches
/// the outer cell with probability at most `tail` within microscopic time
/// `micro_time`.
///
/// Information travels by at most `reach` sites per event of an edge whose
/// rate is at most `rate`, so the front is dominated by `reach` times a
/// Poisson variable of mean `rate · micro_time`; the bound uses the Chernoff
/// estimate for its upper tail.
pub fn light_cone_padding(rate: f64, reach: usize, micro_time: f64, tail: f64) -> usize {
    let mean = rate * micro_time;
    if mean <= 0.0 {
        return reach;
    }
    let log_tail = tail.ln();
    // Smallest k with exp(-mean) (e mean / k)^k <= tail.
    let mut k = mean.ceil().max(1.0);
    while -mean + k * (1.0 + (mean / k).ln()) > log_tail {
        k += (0.05 * k).max(1.0);
    }
    reach * k.ceil() as usize + reach
}

/// Padding that makes a line-window exclusion run valid with probability
/// at least `1 − tail` (an edge rate never exceeds `max(p, p′)` and an
/// exclusion move can influence sites up to two steps away).
pub fn fep_padding(params: &SimParams, tail: f64) -> usize {
    let rate = 2.0 * params.p.max(params.p_prime);
    light_cone_padding(rate, 2, params.horizon * params.clock_rate(), tail)
}

/// Padding for a line-window zero-range run (rate `p + p′`, reach one site).
pub fn fzrp_padding(params: &SimParams, tail: f64) -> usize {
    light_cone_padding(params.p + params.p_prime, 1, params.horizon * params.clock_rate(), tail)
}
