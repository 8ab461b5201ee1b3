//! Exact entropy solutions of Riemann problems for `∂_t c + s ∂_x f(c) = 0`
//! with a scalar flux `f` that need not be convex.
//!
//! The self-similar profile `c(x, t) = W(x/t)` is read off the convex hull
//! of the flux between the two states: `W(ξ) = argmin_u (f(u) − ξu)` when
//! `c_l < c_r`, `argmax` when `c_l > c_r`. The hull is built on a fine grid
//! and fan values are refined against the exact flux derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::field::{DensityField, FieldGeometry};
use crate::pde::flux::Flux;

const NODES: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Wave {
    /// A jump from `left` to `right` travelling at `speed`.
    Shock { speed: f64, left: f64, right: f64 },
    /// A continuous fan spanning `[from, to]` in `x/t`.
    Rarefaction { from: f64, to: f64, left: f64, right: f64 },
}

#[derive(Clone, Debug)]
pub struct RiemannSolution {
    flux: Flux,
    speed: f64,
    left: f64,
    right: f64,
    /// `+1` for `c_l < c_r`, `−1` otherwise.
    orient: f64,
    /// Hull vertices of `orient · s · f`, increasing in `u`.
    hull: Vec<(f64, f64)>,
    grid_step: f64,
}

impl RiemannSolution {
    /// Solves with states `left`, `right` and flux `s · f`.
    pub fn new(flux: &Flux, s: f64, left: f64, right: f64) -> Result<Self> {
        for c in [left, right] {
            if !(c >= 0.0) || c > flux.domain_max() {
                return Err(Error::Params(format!("Riemann state {c} outside the flux domain")));
            }
        }
        let orient = if left <= right { 1.0 } else { -1.0 };
        let (a, b) = (left.min(right), left.max(right));
        let g = |u: f64| orient * s * flux.eval(u);
        let h = (b - a) / NODES as f64;
        let mut us: Vec<f64> = (0..=NODES).map(|k| a + k as f64 * h).collect();
        // Grid points at the kinks of the unsmoothed fluxes.
        for kink in [0.5, 1.0] {
            if a < kink && kink < b {
                us.push(kink);
            }
        }
        us.sort_by(f64::total_cmp);
        us.dedup();
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for u in us {
            let p = (u, g(u));
            while hull.len() >= 2 {
                let (o, q) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (q.0 - o.0) * (p.1 - o.1) - (q.1 - o.1) * (p.0 - o.0);
                if cross <= 1e-15 * (1.0 + p.1.abs()) * h {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Ok(Self { flux: flux.clone(), speed: s, left, right, orient, hull, grid_step: h })
    }

    fn slope(&self, k: usize) -> f64 {
        let (p, q) = (self.hull[k], self.hull[k + 1]);
        (q.1 - p.1) / (q.0 - p.0)
    }

    fn is_fan_segment(&self, k: usize) -> bool {
        self.hull[k + 1].0 - self.hull[k].0 <= 1.5 * self.grid_step
    }

    /// `W(ξ)`.
    pub fn eval(&self, xi: f64) -> f64 {
        if self.hull.len() < 2 {
            return self.left;
        }
        let z = self.orient * xi;
        let m = self.hull.len() - 1;
        // Number of segments with slope below z: the minimiser sits at that vertex.
        let k = partition(m, |k| self.slope(k) < z);
        let u = self.hull[k].0;
        let fan_left = k > 0 && self.is_fan_segment(k - 1);
        let fan_right = k < m && self.is_fan_segment(k);
        if !(fan_left || fan_right) {
            return u;
        }
        let lo = if fan_left { self.hull[k - 1].0 } else { u };
        let hi = if fan_right { self.hull[k + 1].0 } else { u };
        let dg = |v: f64| self.orient * self.speed * self.flux.derivative(v) - z;
        if dg(lo) >= 0.0 {
            return lo;
        }
        if dg(hi) <= 0.0 {
            return hi;
        }
        bisect(dg, lo, hi)
    }

    /// `c(x, t)` for `t > 0`.
    pub fn eval_at(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return if x < 0.0 { self.left } else { self.right };
        }
        self.eval(x / t)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    /// Waves ordered by speed, fans merged.
    pub fn waves(&self) -> Vec<Wave> {
        let mut out = Vec::new();
        let m = self.hull.len().saturating_sub(1);
        let mut k = 0;
        // Speeds increase along the hull for c_l < c_r, and decrease otherwise.
        let order: Vec<usize> = if self.orient > 0.0 { (0..m).collect() } else { (0..m).rev().collect() };
        while k < order.len() {
            let s = order[k];
            let (ul, ur) = if self.orient > 0.0 {
                (self.hull[s].0, self.hull[s + 1].0)
            } else {
                (self.hull[s + 1].0, self.hull[s].0)
            };
            if self.is_fan_segment(s) {
                let mut j = k;
                while j + 1 < order.len() && self.is_fan_segment(order[j + 1]) {
                    j += 1;
                }
                let e = order[j];
                let right = if self.orient > 0.0 { self.hull[e + 1].0 } else { self.hull[e].0 };
                let (from, to) = (self.flux.derivative(ul) * self.speed, self.flux.derivative(right) * self.speed);
                out.push(Wave::Rarefaction { from, to, left: ul, right });
                k = j + 1;
            } else {
                out.push(Wave::Shock { speed: self.orient * self.slope(s), left: ul, right: ur });
                k += 1;
            }
        }
        out
    }

    /// Cell averages of `c(·, t)` on `n` cells of `[lo, hi]`.
    pub fn field(&self, lo: f64, hi: f64, n: usize, t: f64) -> Result<DensityField> {
        const SUB: usize = 32;
        let h = (hi - lo) / n as f64;
        let cells = (0..n)
            .map(|i| {
                (0..SUB).map(|j| self.eval_at(lo + (i as f64 + (j as f64 + 0.5) / SUB as f64) * h, t)).sum::<f64>()
                    / SUB as f64
            })
            .collect();
        DensityField::new(FieldGeometry::Interval { lo, hi }, cells)
    }
}

/// First index in `0..m` where `below` is false (`below` is monotone).
fn partition(m: usize, below: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, m);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if below(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sign change of a nondecreasing function with `f(a) < 0 < f(b)`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Convenience wrapper: `W(x/t)` for the given states.
pub fn riemann_exact(flux: &Flux, s: f64, left: f64, right: f64) -> Result<RiemannSolution> {
    RiemannSolution::new(flux, s, left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Profile;
    use crate::pde::flux::g_exact;
    use crate::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions};

    #[test]
    fn increasing_data_gives_a_shock() {
        let w = riemann_exact(&Flux::g(), 1.0, 1.5, 3.0).unwrap();
        let speed = (g_exact(3.0) - g_exact(1.5)) / 1.5;
        assert!((speed - 2.0 / 9.0).abs() < 1e-15);
        match w.waves()[..] {
            [Wave::Shock { speed: s, left, right }] => {
                assert!((s - speed).abs() < 1e-12);
                assert_eq!((left, right), (1.5, 3.0));
            }
            ref other => panic!("{other:?}"),
        }
        assert_eq!(w.eval(speed - 1e-6), 1.5);
        assert_eq!(w.eval(speed + 1e-6), 3.0);
    }

    #[test]
    fn decreasing_data_gives_a_fan() {
        let w = riemann_exact(&Flux::g(), 1.0, 3.0, 1.5).unwrap();
        assert_eq!(w.eval(0.05), 3.0);
        assert_eq!(w.eval(0.5), 1.5);
        for xi in [0.12, 0.2, 0.3, 0.44] {
            assert!((w.eval(xi) - xi.powf(-0.5)).abs() < 1e-9, "{xi}");
        }
        assert!(matches!(w.waves()[..], [Wave::Rarefaction { .. }]));
    }

    #[test]
    fn composite_wave_through_the_kink() {
        // Tangent from (1/2, 0) to the graph of G touches at r* = 1 + 1/√2.
        let r_star = 1.0 + 0.5f64.sqrt();
        let shock = 1.0 / (r_star * r_star);
        let w = riemann_exact(&Flux::g(), 1.0, 2.0, 0.5).unwrap();
        let waves = w.waves();
        assert_eq!(waves.len(), 2, "{waves:?}");
        match (waves[0], waves[1]) {
            (Wave::Rarefaction { from, to, left, right }, Wave::Shock { speed, left: sl, right: sr }) => {
                assert!((from - 0.25).abs() < 1e-9 && left == 2.0);
                assert!((right - r_star).abs() < 1e-3 && (to - shock).abs() < 1e-3);
                assert!((speed - shock).abs() < 1e-3 && (sl - r_star).abs() < 1e-3 && sr == 0.5);
            }
            other => panic!("{other:?}"),
        }
        assert!((w.eval(0.3) - 0.3f64.powf(-0.5)).abs() < 1e-9);
        assert_eq!(w.eval(shock + 1e-3), 0.5);
    }

    #[test]
    fn shocks_satisfy_rankine_hugoniot() {
        for (l, r) in [(0.2, 0.9), (0.9, 0.2), (0.1, 0.6), (0.6, 0.1)] {
            let w = riemann_exact(&Flux::frak_h(), 1.0, l, r).unwrap();
            for wave in w.waves() {
                if let Wave::Shock { speed, left, right } = wave {
                    let f = Flux::frak_h();
                    let rh = (f.eval(right) - f.eval(left)) / (right - left);
                    assert!((speed - rh).abs() < 1e-9, "{l} {r}: {speed} vs {rh}");
                }
            }
        }
    }

    #[test]
    fn reversed_drift_mirrors_the_solution() {
        let a = riemann_exact(&Flux::g(), 1.0, 1.5, 3.0).unwrap();
        let b = riemann_exact(&Flux::g(), -1.0, 3.0, 1.5).unwrap();
        for xi in [-0.3, -0.1, 0.1, 0.3] {
            assert_eq!(a.eval(xi), b.eval(-xi));
        }
    }

    #[test]
    fn finite_volume_solutions_converge_to_the_exact_one() {
        for (flux, l, r) in [(Flux::g(), 2.0, 0.5), (Flux::frak_h(), 0.2, 0.9), (Flux::frak_h(), 0.9, 0.1)] {
            let w = riemann_exact(&flux, 1.0, l, r).unwrap();
            let mut errs = Vec::new();
            for n in [400, 1600] {
                let prof = Profile::step(vec![0.0], vec![l, r]).unwrap();
                let f0 = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -2.0, hi: 2.0 }, n).unwrap();
                let tr = solve_hyperbolic(&f0, &flux, 1.0, 1.0, &HyperbolicOptions::at(vec![])).unwrap();
                let exact = w.field(-2.0, 2.0, n, 1.0).unwrap();
                errs.push(tr.last().l1_distance(&exact).unwrap());
            }
            assert!(errs[1] < 0.7 * errs[0] && errs[1] < 0.02, "{l} {r}: {errs:?}");
        }
    }
}
