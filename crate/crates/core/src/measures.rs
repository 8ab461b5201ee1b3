//! Initial and reference laws: inhomogeneous Bernoulli products for the
//! exclusion process, geometric products and the zero-range equilibrium
//! law, and the one-uniform-per-site monotone coupling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ExclusionConfig, LatticeGeometry, ZeroRangeConfig};
use crate::rng::{Purpose, StreamSeed};

/// A macroscopic profile `u ↦ value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `values[k]` on `[breaks[k-1], breaks[k])`; `values.len() == breaks.len() + 1`.
    Step { breaks: Vec<f64>, values: Vec<f64> },
    /// Piecewise linear through `knots` (sorted by abscissa), constant beyond them.
    Piecewise { knots: Vec<(f64, f64)> },
    /// Cell values on `[lo, hi)` split into `values.len()` equal cells,
    /// piecewise constant inside and constant-extended outside.
    Grid { lo: f64, hi: f64, values: Vec<f64> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Self::Step { breaks, values };
        p.validate_shape()?;
        Ok(p)
    }

    /// Equal-width pieces on the unit torus: `values[k]` on `[k/n, (k+1)/n)`.
    pub fn torus_steps(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::step((1..n).map(|k| k as f64 / n as f64).collect(), values)
    }

    pub fn validate_shape(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::Constant { value } if !value.is_finite() => Err(Error::Profile("non-finite value".into())),
            Self::Constant { .. } => Ok(()),
            Self::Step { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::Profile("step needs one more value than breaks".into()));
                }
                if !breaks.windows(2).all(|w| w[0] < w[1]) || !finite(breaks) || !finite(values) {
                    return Err(Error::Profile("step breaks must be finite and increasing".into()));
                }
                Ok(())
            }
            Self::Piecewise { knots } => {
                if knots.is_empty() || !knots.windows(2).all(|w| w[0].0 < w[1].0) {
                    return Err(Error::Profile("piecewise knots must be non-empty and increasing".into()));
                }
                if !knots.iter().all(|(a, b)| a.is_finite() && b.is_finite()) {
                    return Err(Error::Profile("non-finite knot".into()));
                }
                Ok(())
            }
            Self::Grid { lo, hi, values } => {
                if values.is_empty() || !(lo < hi) || !finite(values) {
                    return Err(Error::Profile("grid needs lo < hi and finite values".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Step { breaks, values } => values[breaks.partition_point(|&b| b <= u)],
            Self::Piecewise { knots } => {
                let k = knots.partition_point(|&(x, _)| x <= u);
                if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let (x0, y0) = knots[k - 1];
                    let (x1, y1) = knots[k];
                    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
                }
            }
            Self::Grid { lo, hi, values } => {
                let n = values.len();
                let k = ((u - lo) / (hi - lo) * n as f64).floor();
                values[(k.max(0.0) as usize).min(n - 1)]
            }
        }
    }

    /// Exact `∫_a^b value(u) du` for `a ≤ b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Constant { value } => value * (b - a),
            Self::Step { breaks, values } => {
                let mut total = 0.0;
                let mut lo = a;
                for (k, &brk) in breaks.iter().enumerate() {
                    if brk > lo {
                        let hi = brk.min(b);
                        total += values[k] * (hi - lo);
                        lo = hi;
                        if lo >= b {
                            return total;
                        }
                    }
                }
                total + values[values.len() - 1] * (b - lo)
            }
            Self::Piecewise { knots } => {
                // Integrate the interpolant piece by piece, including the flat tails.
                let mut cuts = vec![a];
                cuts.extend(knots.iter().map(|k| k.0).filter(|&x| x > a && x < b));
                cuts.push(b);
                cuts.windows(2).map(|w| 0.5 * (self.eval(w[0]) + self.eval(w[1])) * (w[1] - w[0])).sum()
            }
            Self::Grid { lo, hi, values } => {
                let n = values.len();
                let h = (hi - lo) / n as f64;
                let mut cuts = vec![a];
                cuts.extend((1..n).map(|k| lo + k as f64 * h).filter(|&x| x > a && x < b));
                cuts.push(b);
                cuts.windows(2).map(|w| self.eval(0.5 * (w[0] + w[1])) * (w[1] - w[0])).sum()
            }
        }
    }

    /// Supremum of the profile (exact for every variant).
    pub fn sup(&self) -> f64 {
        self.extreme(f64::max, f64::NEG_INFINITY)
    }

    pub fn inf(&self) -> f64 {
        self.extreme(f64::min, f64::INFINITY)
    }

    fn extreme(&self, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Step { values, .. } | Self::Grid { values, .. } => values.iter().copied().fold(init, pick),
            Self::Piecewise { knots } => knots.iter().map(|k| k.1).fold(init, pick),
        }
    }

    /// Exclusion profiles take values in `[0, 1)`; returns the bound `ρ★ = sup`.
    pub fn check_exclusion(&self) -> Result<f64> {
        self.validate_shape()?;
        let (lo, hi) = (self.inf(), self.sup());
        if lo < 0.0 || hi >= 1.0 {
            return Err(Error::Profile(format!(
                "exclusion profile must stay in [0, 1) (bounded away from 1), got range [{lo}, {hi}]"
            )));
        }
        Ok(hi)
    }

    /// Zero-range profiles are nonnegative; returns the bound `ᾱ = sup`.
    pub fn check_zero_range(&self) -> Result<f64> {
        self.validate_shape()?;
        if self.inf() < 0.0 {
            return Err(Error::Profile(format!("zero-range profile is negative somewhere ({})", self.inf())));
        }
        Ok(self.sup())
    }
}

/// Uniform in `(0, 1]`.
fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Inverse survival function of the geometric law on `ℕ` with `P(ω ≥ k) = q^k`.
pub(crate) fn geometric_from_uniform(u: f64, q: f64) -> u32 {
    if q <= 0.0 {
        return 0;
    }
    let k = (u.ln() / q.ln()).floor();
    k.min(u32::MAX as f64 / 2.0) as u32
}

/// Inverse survival function of the law on `ℕ*` with `P(ω ≥ k) = q^{k-1}`.
pub(crate) fn shifted_geometric_from_uniform(u: f64, q: f64) -> u32 {
    1 + geometric_from_uniform(u, q)
}

fn site_positions(geometry: &LatticeGeometry, scale: usize) -> impl Iterator<Item = f64> + '_ {
    let s = scale as f64;
    (0..geometry.len()).map(move |i| geometry.site_of(i) as f64 / s)
}

/// Product Bernoulli law: site `x` occupied with probability `ρ(x/N)`.
pub fn sample_bernoulli_profile(
    rho: &Profile,
    geometry: LatticeGeometry,
    scale: usize,
    seed: StreamSeed,
) -> Result<ExclusionConfig> {
    rho.check_exclusion()?;
    let mut rng = seed.rng(Purpose::Initial);
    let bits = site_positions(&geometry, scale)
        .map(|u| u8::from(open_uniform(&mut rng) <= rho.eval(u) && rho.eval(u) > 0.0))
        .collect();
    ExclusionConfig::from_bits(geometry, bits)
}

/// Bernoulli product on the torus `ℤ/Nℤ` with scaling parameter `N`.
pub fn sample_bernoulli_torus(rho: &Profile, n: usize, seed: impl Into<StreamSeed>) -> Result<ExclusionConfig> {
    sample_bernoulli_profile(rho, LatticeGeometry::torus(n)?, n, seed.into())
}

/// Product of geometric laws on `ℕ` with mean `α(y/M)` at site `y`.
pub fn sample_geometric_profile(
    alpha: &Profile,
    geometry: LatticeGeometry,
    scale: usize,
    seed: StreamSeed,
) -> Result<ZeroRangeConfig> {
    alpha.check_zero_range()?;
    let mut rng = seed.rng(Purpose::Initial);
    let heights = site_positions(&geometry, scale)
        .map(|v| {
            let a = alpha.eval(v);
            geometric_from_uniform(open_uniform(&mut rng), a / (1.0 + a))
        })
        .collect();
    ZeroRangeConfig::new(geometry, heights)
}

pub fn sample_geometric_torus(alpha: &Profile, m: usize, seed: impl Into<StreamSeed>) -> Result<ZeroRangeConfig> {
    sample_geometric_profile(alpha, LatticeGeometry::torus(m)?, m, seed.into())
}

/// Homogeneous equilibrium law `μ*_α` on `ℕ*`: `P(ω = k) = (1/α)(1 − 1/α)^{k−1}`.
pub fn sample_equilibrium_zr(alpha: f64, geometry: LatticeGeometry, seed: StreamSeed) -> Result<ZeroRangeConfig> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::Params(format!(
            "the equilibrium law needs density α ≥ 1 (no equilibrium below the critical density), got {alpha}"
        )));
    }
    let q = 1.0 - 1.0 / alpha;
    let mut rng = seed.rng(Purpose::Initial);
    let heights = (0..geometry.len())
        .map(|_| shifted_geometric_from_uniform(open_uniform(&mut rng), q))
        .collect();
    ZeroRangeConfig::new(geometry, heights)
}

/// Couples `ω ~ ⊗ Geom(α(y/M))` with `ζ ~ μ*_ᾱ` through one shared uniform per
/// site, so that `ω ≤ ζ` holds everywhere by construction.
///
/// Requires `ᾱ ≥ sup α + 1`, which gives `(α/(1+α))^k ≤ ((ᾱ−1)/ᾱ)^{k−1}`.
pub fn sample_monotone_coupling(
    alpha: &Profile,
    alpha_bar: f64,
    geometry: LatticeGeometry,
    scale: usize,
    seed: StreamSeed,
) -> Result<(ZeroRangeConfig, ZeroRangeConfig)> {
    let sup = alpha.check_zero_range()?;
    if !(alpha_bar >= sup + 1.0) {
        return Err(Error::Params(format!(
            "coupling bound ᾱ = {alpha_bar} must be at least sup α + 1 = {}",
            sup + 1.0
        )));
    }
    let q_bar = 1.0 - 1.0 / alpha_bar;
    let mut rng = seed.rng(Purpose::Initial);
    let (mut lower, mut upper) = (Vec::with_capacity(geometry.len()), Vec::with_capacity(geometry.len()));
    for v in site_positions(&geometry, scale) {
        let a = alpha.eval(v);
        let u = open_uniform(&mut rng);
        lower.push(geometric_from_uniform(u, a / (1.0 + a)));
        upper.push(shifted_geometric_from_uniform(u, q_bar));
    }
    Ok((ZeroRangeConfig::new(geometry, lower)?, ZeroRangeConfig::new(geometry, upper)?))
}

/// `P(ω = k)` under the geometric law on `ℕ` with mean `α`.
pub fn geometric_pmf(alpha: f64, k: u32) -> f64 {
    let q = alpha / (1.0 + alpha);
    (1.0 - q) * q.powi(k as i32)
}

/// `P(ω = k)` under `μ*_α`.
pub fn equilibrium_pmf(alpha: f64, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if alpha == 1.0 {
        return if k == 1 { 1.0 } else { 0.0 };
    }
    (1.0 / alpha) * (1.0 - 1.0 / alpha).powi(k as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(n: usize) -> LatticeGeometry {
        LatticeGeometry::torus(n).unwrap()
    }

    fn mean(c: &ZeroRangeConfig) -> f64 {
        c.total_mass() as f64 / c.len() as f64
    }

    #[test]
    fn profile_evaluation() {
        let s = Profile::torus_steps(vec![0.8, 0.3]).unwrap();
        assert_eq!(s.eval(0.0), 0.8);
        assert_eq!(s.eval(0.49), 0.8);
        assert_eq!(s.eval(0.5), 0.3);
        let p = Profile::Piecewise { knots: vec![(0.0, 0.0), (1.0, 1.0)] };
        assert_eq!(p.eval(0.25), 0.25);
        assert_eq!(p.eval(-3.0), 0.0);
        assert_eq!(p.eval(2.0), 1.0);
        let g = Profile::Grid { lo: 0.0, hi: 1.0, values: vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(g.eval(0.3), 2.0);
        assert_eq!(g.eval(7.0), 4.0);
        assert!(Profile::step(vec![0.5, 0.2], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn exact_integrals() {
        let s = Profile::torus_steps(vec![0.8, 0.3]).unwrap();
        assert!((s.integral(0.0, 1.0) - 0.55).abs() < 1e-15);
        assert!((s.integral(0.25, 0.75) - 0.275).abs() < 1e-15);
        assert!((s.integral(-1.0, 0.0) - 0.8).abs() < 1e-15);
        let p = Profile::Piecewise { knots: vec![(0.0, 0.0), (1.0, 1.0)] };
        assert!((p.integral(-1.0, 2.0) - 1.5).abs() < 1e-15);
        let g = Profile::Grid { lo: 0.0, hi: 1.0, values: vec![1.0, 3.0] };
        assert!((g.integral(0.25, 0.75) - 1.0).abs() < 1e-15);
        assert!((Profile::constant(2.0).integral(1.0, 4.0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_edge_cases() {
        let eta = sample_bernoulli_torus(&Profile::constant(0.0), 64, 11).unwrap();
        assert_eq!(eta.particle_count(), 0);
        assert!(sample_bernoulli_torus(&Profile::constant(1.0), 64, 11).is_err());
        assert!(sample_bernoulli_torus(&Profile::constant(-0.1), 64, 11).is_err());
    }

    #[test]
    fn bernoulli_mean_concentrates() {
        let n = 100_000;
        let tol = 4.0 * (0.16f64 / n as f64).sqrt();
        for seed in 0..10 {
            let eta = sample_bernoulli_torus(&Profile::constant(0.8), n, seed).unwrap();
            let m = eta.particle_count() as f64 / n as f64;
            assert!((m - 0.8).abs() <= tol, "seed {seed}: mean {m}");
        }
    }

    #[test]
    fn geometric_sampler() {
        let zero = sample_geometric_torus(&Profile::constant(0.0), 50, 3).unwrap();
        assert_eq!(zero.total_mass(), 0);
        assert!(sample_geometric_torus(&Profile::constant(-1.0), 50, 3).is_err());

        let m = 100_000;
        let tol = 4.0 * (6.0f64 / m as f64).sqrt();
        for seed in 0..5 {
            let c = sample_geometric_torus(&Profile::constant(2.0), m, seed).unwrap();
            assert!((mean(&c) - 2.0).abs() <= tol);
        }
    }

    #[test]
    fn mapped_density_of_constant_profile() {
        // ρ = 0.8 maps to α = ρ/(1−ρ) = 4.
        let rho: f64 = 0.8;
        assert!((rho / (1.0 - rho) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_sampler() {
        let g = torus(1000);
        let ones = sample_equilibrium_zr(1.0, g, StreamSeed::new(5, 0)).unwrap();
        assert!(ones.heights().iter().all(|&h| h == 1));
        assert!(sample_equilibrium_zr(0.9, g, StreamSeed::new(5, 0)).is_err());

        let m = 100_000;
        let c = sample_equilibrium_zr(2.0, torus(m), StreamSeed::new(9, 0)).unwrap();
        for k in 1..=6u32 {
            let p = 0.5f64.powi(k as i32);
            let freq = c.heights().iter().filter(|&&h| h == k).count() as f64 / m as f64;
            assert!((freq - p).abs() <= 4.0 * (p * (1.0 - p) / m as f64).sqrt(), "k={k}");
        }
        assert!(c.heights().iter().all(|&h| h >= 1));

        let c = sample_equilibrium_zr(3.0, torus(m), StreamSeed::new(10, 0)).unwrap();
        assert!((mean(&c) - 3.0).abs() <= 4.0 * (6.0f64 / m as f64).sqrt());
    }

    #[test]
    fn pmfs_normalize() {
        for a in [0.5, 2.0, 4.0] {
            let s: f64 = (0..400).map(|k| geometric_pmf(a, k)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for a in [1.0, 2.0, 4.0] {
            let s: f64 = (0..400).map(|k| equilibrium_pmf(a, k)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_is_ordered() {
        let (w, z) = sample_monotone_coupling(&Profile::constant(0.0), 1.0, torus(100), 100, StreamSeed::new(1, 0)).unwrap();
        assert!(w.heights().iter().all(|&h| h == 0));
        assert!(z.heights().iter().all(|&h| h == 1));

        for seed in 0..20 {
            let (w, z) =
                sample_monotone_coupling(&Profile::constant(2.0), 3.0, torus(10_000), 10_000, StreamSeed::new(seed, 0))
                    .unwrap();
            assert!(w.le(&z));
        }
        assert!(sample_monotone_coupling(&Profile::constant(2.0), 2.5, torus(10), 10, StreamSeed::new(0, 0)).is_err());
    }

    // Survival-function comparison behind the coupling, checked term by term.
    #[test]
    fn coupling_tail_bound() {
        for (a, abar) in [(2.0f64, 3.0f64), (0.5, 1.5), (4.0, 5.0), (1.0, 7.0)] {
            let q = a / (1.0 + a);
            let qb = (abar - 1.0) / abar;
            for k in 1..200 {
                assert!(q.powi(k) <= qb.powi(k - 1));
            }
        }
    }

    // Two-sample Kolmogorov-Smirnov comparison of each coupled marginal with
    // the corresponding uncoupled sampler (integer-valued, so compare CDFs on ℕ).
    #[test]
    fn coupled_marginals_match_uncoupled_laws() {
        let m = 100_000;
        let g = torus(m);
        let (w, z) = sample_monotone_coupling(&Profile::constant(2.0), 3.0, g, m, StreamSeed::new(21, 0)).unwrap();
        let w_ref = sample_geometric_profile(&Profile::constant(2.0), g, m, StreamSeed::new(22, 0)).unwrap();
        let z_ref = sample_equilibrium_zr(3.0, g, StreamSeed::new(23, 0)).unwrap();
        let ks = |a: &[u32], b: &[u32]| {
            let cdf = |s: &[u32], k: u32| s.iter().filter(|&&h| h <= k).count() as f64 / s.len() as f64;
            (0..60).map(|k| (cdf(a, k) - cdf(b, k)).abs()).fold(0.0, f64::max)
        };
        // 1% critical value of the two-sample KS statistic: 1.63 * sqrt(2/m).
        let crit = 1.63 * (2.0 / m as f64).sqrt();
        assert!(ks(w.heights(), w_ref.heights()) < crit);
        assert!(ks(z.heights(), z_ref.heights()) < crit);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = Profile::torus_steps(vec![0.8, 0.3]).unwrap();
        let a = sample_bernoulli_torus(&p, 4096, StreamSeed::new(4, 2)).unwrap();
        let b = sample_bernoulli_torus(&p, 4096, StreamSeed::new(4, 2)).unwrap();
        let c = sample_bernoulli_torus(&p, 4096, StreamSeed::new(4, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    // Fitting property: the weighted empirical mass approaches ∫ α φ; the
    // error roughly halves when M quadruples (checked on the replica-averaged
    // absolute deviation).
    #[test]
    fn fitting_deviation_halves() {
        let alpha = Profile::Piecewise { knots: vec![(0.0, 0.5), (0.5, 3.0), (1.0, 0.5)] };
        let phi = |v: f64| (2.0 * std::f64::consts::PI * v).cos();
        // ∫ α φ by fine midpoint quadrature.
        let k = 200_000;
        let exact: f64 = (0..k)
            .map(|i| {
                let v = (i as f64 + 0.5) / k as f64;
                alpha.eval(v) * phi(v)
            })
            .sum::<f64>()
            / k as f64;
        let dev = |m: usize| {
            (0..40u32)
                .map(|r| {
                    let c = sample_geometric_profile(&alpha, torus(m), m, StreamSeed::new(77, r)).unwrap();
                    let s: f64 = c
                        .heights()
                        .iter()
                        .enumerate()
                        .map(|(y, &h)| h as f64 * phi(y as f64 / m as f64))
                        .sum::<f64>()
                        / m as f64;
                    (s - exact).abs()
                })
                .sum::<f64>()
                / 40.0
        };
        let (d1, d2) = (dev(4_000), dev(16_000));
        let ratio = d2 / d1;
        assert!(ratio > 0.3 && ratio < 0.75, "ratio {ratio} ({d1} -> {d2})");
    }
}
