//! First-order Engquist–Osher scheme for `∂_t c + s ∂_x f(c) = ν ∂_x² w(c)`
//! on an interval, with `s = 2p − 1`.
//!
//! The numerical flux is `s·(f⁺(c_i) + f⁻(c_{i+1}))` for `s ≥ 0` (roles of
//! the split parts swap for `s < 0`). Ghost cells repeat the outermost
//! cells; the run is aborted if the outermost cells move, since the
//! constant extension is only meaningful while waves stay inside.

use crate::error::{Error, Result};
use crate::pde::field::{DensityField, FieldGeometry, Trajectory};
use crate::pde::flux::{EoSplit, Flux};

/// Optional vanishing-viscosity term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Viscosity {
    None,
    /// `ε ∂²(α/(1+α))` (zero-range densities).
    ZeroRange(f64),
    /// `ε ∂²ρ` (exclusion densities).
    Exclusion(f64),
}

impl Viscosity {
    fn coefficient(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::ZeroRange(e) | Self::Exclusion(e) => e,
        }
    }

    fn w(&self, c: f64) -> f64 {
        match self {
            Self::ZeroRange(_) => c / (1.0 + c),
            _ => c,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HyperbolicOptions {
    /// `|s| · L · Δt/Δx`; at most ½, defaults to 0.45.
    pub cfl: f64,
    pub viscosity: Viscosity,
    pub sample_times: Vec<f64>,
    pub record_every: Option<usize>,
    /// Tolerated drift of the two outermost cells before aborting.
    pub boundary_tolerance: f64,
}

impl HyperbolicOptions {
    pub fn at(sample_times: Vec<f64>) -> Self {
        Self { cfl: 0.45, viscosity: Viscosity::None, sample_times, record_every: None, boundary_tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct HyperbolicStepper {
    pub field: DensityField,
    flux: Flux,
    split: EoSplit,
    speed: f64,
    viscosity: Viscosity,
    dt: f64,
    pub time: f64,
    edges: [f64; 4],
    tol: f64,
    face: Vec<f64>,
}

impl HyperbolicStepper {
    pub fn new(field: DensityField, flux: Flux, p: f64, opts: &HyperbolicOptions) -> Result<Self> {
        if !matches!(field.geometry, FieldGeometry::Interval { .. }) || field.len() < 4 {
            return Err(Error::Params("the hyperbolic solver needs an interval with at least 4 cells".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Params(format!("p must lie in [0, 1], got {p}")));
        }
        if !(opts.cfl > 0.0 && opts.cfl <= 0.5) {
            return Err(Error::Cfl(format!("hyperbolic CFL number must lie in (0, 1/2], got {}", opts.cfl)));
        }
        let (lo, hi) = (field.min(), field.max());
        if lo < 0.0 || hi > flux.domain_max() {
            return Err(Error::Params(format!("initial field leaves the flux domain: range [{lo}, {hi}]")));
        }
        let speed = 2.0 * p - 1.0;
        let dx = field.dx();
        let mut dt = f64::INFINITY;
        if speed != 0.0 {
            dt = opts.cfl * dx / (speed.abs() * flux.lipschitz());
        }
        let nu = opts.viscosity.coefficient();
        if nu < 0.0 {
            return Err(Error::Params("viscosity must be nonnegative".into()));
        }
        if nu > 0.0 {
            // Both w(α) = α/(1+α) and w(ρ) = ρ have Lipschitz constant 1.
            dt = dt.min(0.25 * dx * dx / nu);
        }
        if !dt.is_finite() {
            return Err(Error::Params("nothing moves: p = 1/2 without viscosity".into()));
        }
        let n = field.len();
        let edges = [field.cells[0], field.cells[1], field.cells[n - 2], field.cells[n - 1]];
        let split = flux.eo_split(lo, hi);
        Ok(Self {
            field,
            flux,
            split,
            speed,
            viscosity: opts.viscosity,
            dt,
            time: 0.0,
            edges,
            tol: opts.boundary_tolerance,
            face: vec![0.0; n + 1],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self, max_dt: f64) -> Result<f64> {
        let dt = self.dt.min(max_dt);
        let dx = self.field.dx();
        let n = self.field.len();
        let c = &self.field.cells;
        let at = |i: isize| c[i.clamp(0, n as isize - 1) as usize];
        let nu = self.viscosity.coefficient();
        for k in 0..=n {
            // Face k separates cells k-1 and k.
            let (a, b) = (at(k as isize - 1), at(k as isize));
            let (ap, am) = self.flux.split_eval(&self.split, a);
            let (bp, bm) = self.flux.split_eval(&self.split, b);
            let mut f = if self.speed >= 0.0 { self.speed * (ap + bm) } else { self.speed * (bp + am) };
            if nu > 0.0 {
                f -= nu * (self.viscosity.w(b) - self.viscosity.w(a)) / dx;
            }
            self.face[k] = f;
        }
        let r = dt / dx;
        for i in 0..n {
            self.field.cells[i] -= r * (self.face[i + 1] - self.face[i]);
        }
        self.time += dt;
        let c = &self.field.cells;
        let now = [c[0], c[1], c[n - 2], c[n - 1]];
        if now.iter().zip(&self.edges).any(|(x, y)| (x - y).abs() > self.tol) {
            return Err(Error::BoundaryReached(self.time));
        }
        Ok(dt)
    }
}

/// Solves on an interval and records the solution at the requested times.
pub fn solve_hyperbolic(
    field0: &DensityField,
    flux: &Flux,
    p: f64,
    horizon: f64,
    opts: &HyperbolicOptions,
) -> Result<Trajectory> {
    let mut s = HyperbolicStepper::new(field0.clone(), flux.clone(), p, opts)?;
    let mut targets: Vec<f64> = opts.sample_times.iter().copied().filter(|&t| t > 0.0 && t <= horizon).collect();
    if targets.last().is_none_or(|&t| t < horizon) {
        targets.push(horizon);
    }
    let mut out = Trajectory { times: vec![0.0], fields: vec![field0.clone()] };
    let mut steps = 0usize;
    for &t in &targets {
        while s.time < t * (1.0 - 1e-14) {
            s.step(t - s.time)?;
            steps += 1;
            if opts.record_every.is_some_and(|k| steps.is_multiple_of(k)) && s.time < t * (1.0 - 1e-14) {
                out.times.push(s.time);
                out.fields.push(s.field.clone());
            }
        }
        s.time = t;
        out.times.push(t);
        out.fields.push(s.field.clone());
    }
    Ok(out)
}
