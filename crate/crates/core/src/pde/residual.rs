//! Quadrature residuals of the weak formulation and of the Kruzkov entropy
//! inequalities, evaluated on recorded trajectories.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::field::{DensityField, FieldGeometry, Trajectory};
use crate::pde::flux::Flux;

/// A space-time test function with the derivatives the residuals need.
pub trait TestFunction {
    fn value(&self, t: f64, x: f64) -> f64;
    fn dt(&self, t: f64, x: f64) -> f64;
    fn dx(&self, t: f64, x: f64) -> f64;
    fn dxx(&self, t: f64, x: f64) -> f64;
}

/// `φ ≡ 1`.
#[derive(Clone, Copy, Debug)]
pub struct Unit;

impl TestFunction for Unit {
    fn value(&self, _: f64, _: f64) -> f64 {
        1.0
    }
    fn dt(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn dx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn dxx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `φ(t, x) = e^{−t} cos(2πkx)` (periodic on the unit torus).
#[derive(Clone, Copy, Debug)]
pub struct Cosine {
    pub k: f64,
    pub decay: f64,
}

impl Cosine {
    pub fn new(k: f64) -> Self {
        Self { k, decay: 0.0 }
    }
}

impl TestFunction for Cosine {
    fn value(&self, t: f64, x: f64) -> f64 {
        (-self.decay * t).exp() * (2.0 * PI * self.k * x).cos()
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        -self.decay * self.value(t, x)
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        let w = 2.0 * PI * self.k;
        -(-self.decay * t).exp() * w * (w * x).sin()
    }
    fn dxx(&self, t: f64, x: f64) -> f64 {
        let w = 2.0 * PI * self.k;
        -w * w * self.value(t, x)
    }
}

/// `b(s) = (1 − s²)⁴` on `|s| < 1`, zero outside; C³ with compact support.
fn bump(s: f64) -> [f64; 3] {
    if s.abs() >= 1.0 {
        return [0.0; 3];
    }
    let q = 1.0 - s * s;
    [q.powi(4), -8.0 * s * q.powi(3), -8.0 * q.powi(3) + 48.0 * s * s * q * q]
}

/// Product of bumps centred at `(t0, x0)` with half-widths `(tr, xr)`.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub t0: f64,
    pub tr: f64,
    pub x0: f64,
    pub xr: f64,
}

impl Bump {
    fn parts(&self, t: f64, x: f64) -> ([f64; 3], [f64; 3]) {
        (bump((t - self.t0) / self.tr), bump((x - self.x0) / self.xr))
    }
}

impl TestFunction for Bump {
    fn value(&self, t: f64, x: f64) -> f64 {
        let (a, b) = self.parts(t, x);
        a[0] * b[0]
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        let (a, b) = self.parts(t, x);
        a[1] / self.tr * b[0]
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        let (a, b) = self.parts(t, x);
        a[0] * b[1] / self.xr
    }
    fn dxx(&self, t: f64, x: f64) -> f64 {
        let (a, b) = self.parts(t, x);
        a[0] * b[2] / (self.xr * self.xr)
    }
}

/// Time integral of `g(k)` over the recorded times, trapezoid rule.
fn trapezoid(times: &[f64], g: impl Fn(usize) -> f64) -> f64 {
    let vals: Vec<f64> = (0..times.len()).map(g).collect();
    times.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// `|⟨c_T, φ_T⟩ − ⟨c_0, φ_0⟩ − ∫⟨c_s, ∂_s φ⟩ − ∫⟨F(c_s), ∂²φ⟩|` for
/// `∂_t c = ∂² F(c)` on the torus.
pub fn weak_residual(traj: &Trajectory, flux: &Flux, phi: &dyn TestFunction) -> Result<f64> {
    let first = traj.fields.first().ok_or(Error::Params("empty trajectory".into()))?;
    if first.geometry != FieldGeometry::Torus {
        return Err(Error::Params("the weak residual is evaluated on torus trajectories".into()));
    }
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let pair = |f: &DensityField, t: f64| f.pair(|x| phi.value(t, x));
    let lhs = pair(traj.last(), t1) - pair(first, t0);
    let rhs = trapezoid(&traj.times, |k| {
        let (f, t) = (&traj.fields[k], traj.times[k]);
        let transport: f64 = f.pair(|x| phi.dt(t, x));
        let diffusion: f64 =
            (0..f.len()).map(|i| flux.eval(f.cells[i]) * phi.dxx(t, f.center(i))).sum::<f64>() * f.dx();
        transport + diffusion
    });
    Ok((lhs - rhs).abs())
}

/// Which range the entropy constant came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyConstantRange {
    /// `0 ≤ c ≤ 1`.
    Unit,
    /// `c > 1`, only meaningful for zero-range densities.
    AboveOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyResidual {
    pub value: f64,
    pub c: f64,
    pub range: EntropyConstantRange,
}

/// `∫∫ |c_t − k| ∂_t φ + s · sign(c_t − k)(f(c_t) − f(k)) ∂_x φ`, which is
/// nonnegative for entropy solutions of `∂_t c + s ∂_x f(c) = 0` and
/// nonnegative `φ` compactly supported inside the recorded time span.
pub fn entropy_residual(
    traj: &Trajectory,
    flux: &Flux,
    s: f64,
    k: f64,
    phi: &dyn TestFunction,
) -> Result<EntropyResidual> {
    if traj.fields.is_empty() {
        return Err(Error::Params("empty trajectory".into()));
    }
    if !(k >= 0.0) || k > flux.domain_max() {
        return Err(Error::Params(format!("entropy constant {k} outside the flux domain")));
    }
    for (f, &t) in traj.fields.iter().zip(&traj.times) {
        if let Some(i) = (0..f.len()).find(|&i| phi.value(t, f.center(i)) < 0.0) {
            return Err(Error::Params(format!("test function negative at t = {t}, x = {}", f.center(i))));
        }
    }
    let fk = flux.eval(k);
    let value = trapezoid(&traj.times, |n| {
        let (f, t) = (&traj.fields[n], traj.times[n]);
        (0..f.len())
            .map(|i| {
                let (c, x) = (f.cells[i], f.center(i));
                let sg = (c - k).signum() * f64::from(c != k);
                (c - k).abs() * phi.dt(t, x) + s * sg * (flux.eval(c) - fk) * phi.dx(t, x)
            })
            .sum::<f64>()
            * f.dx()
    });
    let range = if k <= 1.0 { EntropyConstantRange::Unit } else { EntropyConstantRange::AboveOne };
    Ok(EntropyResidual { value, c: k, range })
}

/// A discontinuity from `left` to `right` moving at the Rankine–Hugoniot
/// speed of `s · f`, sampled as exact cell averages. When the jump violates
/// the entropy condition this is a weak solution that is not admissible.
pub fn travelling_discontinuity(
    flux: &Flux,
    s: f64,
    left: f64,
    right: f64,
    (lo, hi, n): (f64, f64, usize),
    times: &[f64],
) -> Result<Trajectory> {
    let speed = if left == right { 0.0 } else { s * (flux.eval(right) - flux.eval(left)) / (right - left) };
    let geometry = FieldGeometry::Interval { lo, hi };
    let h = (hi - lo) / n as f64;
    let fields = times
        .iter()
        .map(|&t| {
            let front = speed * t;
            let cells = (0..n)
                .map(|i| {
                    let a = lo + i as f64 * h;
                    let w = ((front - a) / h).clamp(0.0, 1.0);
                    w * left + (1.0 - w) * right
                })
                .collect();
            DensityField::new(geometry, cells)
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory { times: times.to_vec(), fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Profile;
    use crate::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions};
    use crate::pde::parabolic::{solve_parabolic, ParabolicOptions};
    use crate::pde::riemann::riemann_exact;

    fn parabolic_run(n: usize) -> Trajectory {
        let p = Profile::step(vec![0.25, 0.75], vec![0.3, 0.8, 0.3]).unwrap();
        let f = DensityField::from_profile(&p, FieldGeometry::Torus, n).unwrap();
        let opts = ParabolicOptions { record_every: Some(1), ..ParabolicOptions::at(vec![]) };
        solve_parabolic(&f, &Flux::h(), 0.01, &opts).unwrap()
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump { t0: 0.5, tr: 0.3, x0: 0.1, xr: 0.2 };
        let h = 1e-5;
        for (t, x) in [(0.45, 0.05), (0.6, 0.2), (0.3, 0.0)] {
            let dt = (b.value(t + h, x) - b.value(t - h, x)) / (2.0 * h);
            let dx = (b.value(t, x + h) - b.value(t, x - h)) / (2.0 * h);
            let dxx = (b.dx(t, x + h) - b.dx(t, x - h)) / (2.0 * h);
            assert!((dt - b.dt(t, x)).abs() < 1e-6);
            assert!((dx - b.dx(t, x)).abs() < 1e-6);
            assert!((dxx - b.dxx(t, x)).abs() < 1e-4);
        }
        assert_eq!(b.value(0.1, 0.1), 0.0);
    }

    #[test]
    fn constant_and_unit_cases() {
        let f = DensityField::constant(FieldGeometry::Torus, 128, 0.8).unwrap();
        let opts = ParabolicOptions { record_every: Some(1), ..ParabolicOptions::at(vec![]) };
        let tr = solve_parabolic(&f, &Flux::h(), 0.01, &opts).unwrap();
        assert!(weak_residual(&tr, &Flux::h(), &Cosine { k: 1.0, decay: 2.0 }).unwrap() <= 1e-8);
        let tr = parabolic_run(256);
        assert!(weak_residual(&tr, &Flux::h(), &Unit).unwrap() <= 1e-12);
    }

    #[test]
    fn step_residual_shrinks_under_refinement() {
        let r: Vec<f64> =
            [64, 128, 256].iter().map(|&n| weak_residual(&parabolic_run(n), &Flux::h(), &Cosine::new(1.0)).unwrap()).collect();
        assert!(r[1] <= 0.6 * r[0] && r[2] <= 0.6 * r[1], "{r:?}");
    }

    #[test]
    fn computed_shock_is_admissible() {
        let prof = Profile::step(vec![0.0], vec![1.5, 3.0]).unwrap();
        let f = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, 800).unwrap();
        let opts = HyperbolicOptions { record_every: Some(1), ..HyperbolicOptions::at(vec![]) };
        let tr = solve_hyperbolic(&f, &Flux::g(), 1.0, 1.0, &opts).unwrap();
        let phi = Bump { t0: 0.5, tr: 0.45, x0: 0.1, xr: 0.3 };
        for c in [0.5, 1.0, 2.0, 3.0] {
            let r = entropy_residual(&tr, &Flux::g(), 1.0, c, &phi).unwrap();
            assert!(r.value >= -1e-3, "c = {c}: {}", r.value);
        }
        // With c = 0 the inequality is the weak form: equality up to the scheme's O(Δx) error.
        assert!(entropy_residual(&tr, &Flux::g(), 1.0, 0.0, &phi).unwrap().value.abs() < 1e-3);
    }

    #[test]
    fn exact_fan_satisfies_the_weak_form() {
        let w = riemann_exact(&Flux::g(), 1.0, 3.0, 1.5).unwrap();
        let times: Vec<f64> = (0..=400).map(|k| 0.05 + 0.95 * k as f64 / 400.0).collect();
        let fields = times.iter().map(|&t| w.field(-1.0, 1.0, 1600, t)).collect::<Result<_>>().unwrap();
        let tr = Trajectory { times, fields };
        let phi = Bump { t0: 0.5, tr: 0.4, x0: 0.15, xr: 0.3 };
        let r = entropy_residual(&tr, &Flux::g(), 1.0, 0.0, &phi).unwrap().value;
        assert!(r.abs() < 1e-6, "{r}");
        for c in [0.5, 1.0, 2.0, 3.0] {
            assert!(entropy_residual(&tr, &Flux::g(), 1.0, c, &phi).unwrap().value >= -1e-6);
        }
    }

    #[test]
    fn expansion_shock_is_detected() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let tr = travelling_discontinuity(&Flux::g(), 1.0, 3.0, 1.5, (-1.0, 1.0, 800), &times).unwrap();
        let phi = Bump { t0: 0.5, tr: 0.45, x0: 0.11, xr: 0.3 };
        let r = entropy_residual(&tr, &Flux::g(), 1.0, 2.0, &phi).unwrap();
        assert!(r.value < -1e-3, "{}", r.value);
        assert_eq!(r.range, EntropyConstantRange::AboveOne);
        // The admissible orientation of the same jump passes.
        let ok = travelling_discontinuity(&Flux::g(), 1.0, 1.5, 3.0, (-1.0, 1.0, 800), &times).unwrap();
        assert!(entropy_residual(&ok, &Flux::g(), 1.0, 2.0, &phi).unwrap().value >= -1e-3);
    }

    #[test]
    fn negative_test_function_is_rejected() {
        let times = [0.0, 1.0];
        let tr = travelling_discontinuity(&Flux::g(), 1.0, 1.5, 3.0, (-1.0, 1.0, 10), &times).unwrap();
        assert!(entropy_residual(&tr, &Flux::g(), 1.0, 1.0, &Cosine::new(1.0)).is_err());
    }
}
