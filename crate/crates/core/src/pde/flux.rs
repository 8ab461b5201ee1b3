//! Flux functions of the limiting equations and their regularizations.
//!
//! * `H(r) = (2r − 1)/r · 1{r > ½}` on `[0, 1]` (symmetric exclusion),
//! * `G(r) = (r − 1)/r · 1{r > 1}` on `[0, ∞)` (zero-range),
//! * `𝔥(r) = (1 − r)(2r − 1)/r · 1{r > ½}` on `[0, 1]` (asymmetric exclusion),
//!
//! related by `G(r) = H(r/(1+r)) = (1+r) 𝔥(r/(1+r))`.
//!
//! Smoothed fluxes convolve with the bump `φ(s) = (35/32)(1 − s²)³` on
//! `[−1, 1]`, rescaled to width `δ`, and are tabulated on a fine uniform grid
//! in the exclusion variable; linear interpolation keeps them monotone and
//! within their bounds.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxKind {
    H,
    G,
    FrakH,
    /// `ε + (1 − 2ε)(φ_{ε/4} ∗ H)`.
    SmoothedH { eps: f64 },
    /// `r ↦ H^ε(r/(1+r))`.
    SmoothedG { eps: f64 },
    /// `φ_ε ∗ 𝔥`.
    SmoothedFrakH { eps: f64 },
    /// `r ↦ (1+r) 𝔥^ε(r/(1+r))`.
    SmoothedFrakG { eps: f64 },
}

impl FluxKind {
    /// Whether the argument is a zero-range density (`[0, ∞)`) rather than
    /// an exclusion density (`[0, 1]`).
    pub fn zero_range(&self) -> bool {
        matches!(self, Self::G | Self::SmoothedG { .. } | Self::SmoothedFrakG { .. })
    }
}

const TABLE_INTERVALS: usize = 1 << 16;

/// Values of a function on a uniform grid of `[0, 1]`, linearly interpolated.
#[derive(Debug)]
struct Table {
    values: Vec<f64>,
}

impl Table {
    fn build(f: impl Fn(f64) -> f64) -> Self {
        let h = 1.0 / TABLE_INTERVALS as f64;
        Self { values: (0..=TABLE_INTERVALS).map(|k| f(k as f64 * h)).collect() }
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let x = r.clamp(0.0, 1.0) * TABLE_INTERVALS as f64;
        let k = (x as usize).min(TABLE_INTERVALS - 1);
        (k, x - k as f64)
    }

    fn eval(&self, r: f64) -> f64 {
        let (k, w) = self.locate(r);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    fn slope(&self, r: f64) -> f64 {
        let (k, _) = self.locate(r);
        (self.values[k + 1] - self.values[k]) * TABLE_INTERVALS as f64
    }
}

pub fn h_exact(r: f64) -> f64 {
    if r > 0.5 {
        (2.0 * r - 1.0) / r
    } else {
        0.0
    }
}

pub fn g_exact(r: f64) -> f64 {
    if r > 1.0 {
        (r - 1.0) / r
    } else {
        0.0
    }
}

pub fn frak_h_exact(r: f64) -> f64 {
    if r > 0.5 {
        (1.0 - r) * (2.0 * r - 1.0) / r
    } else {
        0.0
    }
}

/// The bump `(35/32)(1 − s²)³` on `[−1, 1]`, of unit mass.
pub fn mollifier(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        35.0 / 32.0 * q * q * q
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `(φ_δ ∗ f)(r) = ∫ f(r − δs) φ(s) ds`, splitting the integral at the
/// point where the argument crosses `kink`.
fn mollify(f: impl Fn(f64) -> f64, kink: f64, delta: f64, r: f64, rule: &[(f64, f64)]) -> f64 {
    let sk = (r - kink) / delta;
    let mut cuts = vec![-1.0];
    if sk > -1.0 && sk < 1.0 {
        cuts.push(sk);
    }
    cuts.push(1.0);
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            rule.iter()
                .map(|&(x, wt)| {
                    let s = mid + half * x;
                    wt * half * f(r - delta * s) * mollifier(s)
                })
                .sum::<f64>()
        })
        .sum()
}

/// A flux function with its Lipschitz bound.
#[derive(Clone, Debug)]
pub struct Flux {
    kind: FluxKind,
    lipschitz: f64,
    table: Option<Arc<Table>>,
}

impl Flux {
    pub fn h() -> Self {
        Self { kind: FluxKind::H, lipschitz: 4.0, table: None }
    }

    pub fn g() -> Self {
        Self { kind: FluxKind::G, lipschitz: 1.0, table: None }
    }

    pub fn frak_h() -> Self {
        Self { kind: FluxKind::FrakH, lipschitz: 2.0, table: None }
    }

    /// Builds any flux kind; smoothed kinds are constructed and verified.
    pub fn from_kind(kind: FluxKind) -> Result<Self> {
        match kind {
            FluxKind::H => Ok(Self::h()),
            FluxKind::G => Ok(Self::g()),
            FluxKind::FrakH => Ok(Self::frak_h()),
            FluxKind::SmoothedH { eps } => build_smoothed_flux(FluxKind::H, eps),
            FluxKind::SmoothedG { eps } => build_smoothed_flux(FluxKind::G, eps),
            FluxKind::SmoothedFrakH { eps } => build_smoothed_flux(FluxKind::FrakH, eps),
            FluxKind::SmoothedFrakG { eps } => {
                let base = build_smoothed_flux(FluxKind::FrakH, eps)?;
                let mut f = Self { kind: FluxKind::SmoothedFrakG { eps }, lipschitz: 0.0, table: base.table };
                f.lipschitz = f.measured_lipschitz();
                Ok(f)
            }
        }
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Largest density the flux accepts (`∞` for zero-range fluxes).
    pub fn domain_max(&self) -> f64 {
        if self.kind.zero_range() {
            f64::INFINITY
        } else {
            1.0
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            FluxKind::H => h_exact(r),
            FluxKind::G => g_exact(r),
            FluxKind::FrakH => frak_h_exact(r),
            FluxKind::SmoothedH { .. } | FluxKind::SmoothedFrakH { .. } => self.tab().eval(r),
            FluxKind::SmoothedG { .. } => self.tab().eval(r / (1.0 + r)),
            FluxKind::SmoothedFrakG { .. } => (1.0 + r) * self.tab().eval(r / (1.0 + r)),
        }
    }

    /// Checked evaluation: rejects arguments outside the domain.
    pub fn try_eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || r > self.domain_max() {
            return Err(Error::Params(format!("flux argument {r} outside the domain of {:?}", self.kind)));
        }
        Ok(self.eval(r))
    }

    /// Derivative (one-sided from the right at kinks).
    pub fn derivative(&self, r: f64) -> f64 {
        match self.kind {
            FluxKind::H if r >= 0.5 => 1.0 / (r * r),
            FluxKind::G if r >= 1.0 => 1.0 / (r * r),
            FluxKind::FrakH if r >= 0.5 => -2.0 + 1.0 / (r * r),
            FluxKind::H | FluxKind::G | FluxKind::FrakH => 0.0,
            FluxKind::SmoothedH { .. } | FluxKind::SmoothedFrakH { .. } => self.tab().slope(r),
            FluxKind::SmoothedG { .. } => {
                let q = 1.0 + r;
                self.tab().slope(r / q) / (q * q)
            }
            FluxKind::SmoothedFrakG { .. } => {
                let q = 1.0 + r;
                let rho = r / q;
                self.tab().eval(rho) + self.tab().slope(rho) / q
            }
        }
    }

    fn tab(&self) -> &Table {
        self.table.as_deref().expect("smoothed fluxes carry a table")
    }

    fn measured_lipschitz(&self) -> f64 {
        let n = 20_000;
        let top = if self.kind.zero_range() { 50.0 } else { 1.0 };
        (0..=n)
            .map(|k| self.derivative(top * k as f64 / n as f64).abs())
            .fold(0.0, f64::max)
            * 1.001
    }
}

/// Builds `H^ε` (from `H`), `G^ε` (from `G`, via `H^ε`) or `𝔥^ε` (from `𝔥`)
/// and checks the construction on a grid of `10⁴` points.
///
/// `H^ε = ε + (1 − 2ε)(φ_δ ∗ H)` with `δ = ε/4`, so that `ε ≤ H^ε ≤ 1`,
/// `0 ≤ (H^ε)′ ≤ 4` and `‖H^ε − H‖∞ ≤ 3ε`; `𝔥^ε = φ_ε ∗ 𝔥` satisfies
/// `‖𝔥^ε − 𝔥‖∞ ≤ 2ε`.
pub fn build_smoothed_flux(base: FluxKind, eps: f64) -> Result<Flux> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::Params(format!("smoothing parameter must lie in (0, 1/4], got {eps}")));
    }
    let rule = gauss_legendre(16);
    let flux = match base {
        FluxKind::H | FluxKind::G => {
            let delta = eps / 4.0;
            let table = Table::build(|r| eps + (1.0 - 2.0 * eps) * mollify(h_exact, 0.5, delta, r, &rule));
            let kind = if base == FluxKind::H { FluxKind::SmoothedH { eps } } else { FluxKind::SmoothedG { eps } };
            Flux { kind, lipschitz: 4.0, table: Some(Arc::new(table)) }
        }
        FluxKind::FrakH => {
            // Outside [0, 1] the closed form is used as written (negative above 1).
            let ext = |r: f64| if r > 0.5 { (1.0 - r) * (2.0 * r - 1.0) / r } else { 0.0 };
            let table = Table::build(|r| mollify(ext, 0.5, eps, r, &rule));
            Flux { kind: FluxKind::SmoothedFrakH { eps }, lipschitz: 0.0, table: Some(Arc::new(table)) }
        }
        other => return Err(Error::Params(format!("cannot smooth {other:?}"))),
    };
    verify_smoothed(&flux, eps)?;
    let mut flux = flux;
    flux.lipschitz = match flux.kind {
        FluxKind::SmoothedH { .. } => 4.0,
        _ => flux.measured_lipschitz(),
    };
    Ok(flux)
}

fn verify_smoothed(flux: &Flux, eps: f64) -> Result<()> {
    let n = 10_000;
    let fail = |m: String| Err(Error::FluxVerification(m));
    match flux.kind {
        FluxKind::SmoothedH { .. } | FluxKind::SmoothedG { .. } => {
            let top = if flux.kind.zero_range() { 20.0 } else { 1.0 };
            let exact = if flux.kind.zero_range() { g_exact } else { h_exact };
            let mut prev = flux.eval(0.0);
            for k in 0..=n {
                let r = top * k as f64 / n as f64;
                let v = flux.eval(r);
                if v < eps - 1e-12 || v > 1.0 + 1e-12 {
                    return fail(format!("value {v} at {r} outside [{eps}, 1]"));
                }
                if (v - exact(r)).abs() > 3.0 * eps + 1e-12 {
                    return fail(format!("distance {} to the unsmoothed flux at {r} exceeds 3ε", (v - exact(r)).abs()));
                }
                if k > 0 {
                    let slope = (v - prev) * n as f64 / top;
                    if !(-1e-9..=4.0 + 1e-9).contains(&slope) {
                        return fail(format!("slope {slope} near {r} outside [0, 4]"));
                    }
                }
                prev = v;
            }
        }
        FluxKind::SmoothedFrakH { .. } => {
            for k in 0..=n {
                let r = k as f64 / n as f64;
                let d = (flux.eval(r) - frak_h_exact(r)).abs();
                if d > 2.0 * eps + 1e-12 {
                    return fail(format!("distance {d} at {r} exceeds 2ε"));
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Engquist–Osher splitting `f = f⁺ + f⁻` with `f⁺` nondecreasing and `f⁻`
/// nonincreasing, valid for densities in a given range.
#[derive(Clone, Debug)]
pub enum EoSplit {
    /// `f⁺ = f`, `f⁻ = 0`.
    Increasing,
    /// Single maximum at `peak`: `f⁺ = f(min(r, peak))`.
    Peak { peak: f64 },
    /// Tabulated cumulative positive variation on `[lo, hi]`.
    Table { lo: f64, hi: f64, values: Arc<Vec<f64>>, plus: Arc<Vec<f64>> },
}

impl Flux {
    /// Splitting for densities in `[lo, hi]`.
    pub fn eo_split(&self, lo: f64, hi: f64) -> EoSplit {
        match self.kind {
            FluxKind::H | FluxKind::G | FluxKind::SmoothedH { .. } | FluxKind::SmoothedG { .. } => EoSplit::Increasing,
            FluxKind::FrakH => EoSplit::Peak { peak: std::f64::consts::FRAC_1_SQRT_2 },
            FluxKind::SmoothedFrakH { .. } | FluxKind::SmoothedFrakG { .. } => {
                let n = TABLE_INTERVALS;
                let (lo, hi) = (lo.min(hi), hi.max(lo + 1e-9));
                let h = (hi - lo) / n as f64;
                let values: Vec<f64> = (0..=n).map(|k| self.eval(lo + k as f64 * h)).collect();
                let mut plus = Vec::with_capacity(n + 1);
                plus.push(values[0]);
                for k in 1..=n {
                    plus.push(plus[k - 1] + (values[k] - values[k - 1]).max(0.0));
                }
                EoSplit::Table { lo, hi, values: Arc::new(values), plus: Arc::new(plus) }
            }
        }
    }

    /// `(f⁺(r), f⁻(r))`; a tabulated split uses the interpolated flux.
    pub fn split_eval(&self, split: &EoSplit, r: f64) -> (f64, f64) {
        match split {
            EoSplit::Increasing => (self.eval(r), 0.0),
            EoSplit::Peak { peak } => {
                let plus = self.eval(r.min(*peak));
                (plus, self.eval(r) - plus)
            }
            EoSplit::Table { lo, hi, values, plus } => {
                let n = plus.len() - 1;
                let x = ((r - lo) / (hi - lo)).clamp(0.0, 1.0) * n as f64;
                let k = (x as usize).min(n - 1);
                let w = x - k as f64;
                let p = plus[k] + w * (plus[k + 1] - plus[k]);
                let f = values[k] + w * (values[k + 1] - values[k]);
                (p, f - p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(h_exact(0.5), 0.0);
        assert_eq!(h_exact(1.0), 1.0);
        assert!((h_exact(0.6) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g_exact(1.0), 0.0);
        assert_eq!(g_exact(2.0), 0.5);
        assert!((frak_h_exact(0.75) - 1.0 / 6.0).abs() < 1e-15);
        assert!(Flux::g().try_eval(-0.1).is_err());
        assert!(Flux::h().try_eval(1.1).is_err());
    }

    #[test]
    fn flux_relation_at_sample_points() {
        for r in [0.0, 0.5, 1.0, 2.0, 10.0] {
            let rho = r / (1.0 + r);
            let g = g_exact(r);
            assert!((g - h_exact(rho)).abs() <= 1e-12 * g.abs().max(1e-300) + 1e-15);
            assert!((g - (1.0 + r) * frak_h_exact(rho)).abs() <= 1e-12 * g.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let rule = gauss_legendre(16);
        let mass: f64 = rule.iter().map(|&(x, w)| w * mollifier(x)).sum();
        assert!((mass - 1.0).abs() < 1e-14);
        let second: f64 = rule.iter().map(|&(x, w)| w * x * x * mollifier(x)).sum();
        // ∫ s² (35/32)(1 − s²)³ ds = 1/9.
        assert!((second - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn smoothed_h_properties() {
        for eps in [0.1, 0.05, 0.025] {
            let f = build_smoothed_flux(FluxKind::H, eps).unwrap();
            assert!((f.eval(0.0) - eps).abs() < 1e-12);
            let n = 10_000;
            let mut sup: f64 = 0.0;
            let mut prev = f.eval(0.0);
            for k in 1..=n {
                let r = k as f64 / n as f64;
                let v = f.eval(r);
                sup = sup.max((v - h_exact(r)).abs());
                let slope = (v - prev) * n as f64;
                assert!((-1e-9..=4.0 * (1.0 - 2.0 * eps) + 1e-6).contains(&slope), "slope {slope}");
                prev = v;
            }
            assert!(sup <= 3.0 * eps, "eps {eps}: sup {sup}");
            // Far from the kink the mollified flux is ε + (1 − 2ε)(H + O(δ²)).
            let r = 0.8;
            assert!((f.eval(r) - (eps + (1.0 - 2.0 * eps) * h_exact(r))).abs() < 4.0 * (eps / 4.0).powi(2));
        }
        assert!(build_smoothed_flux(FluxKind::H, 0.3).is_err());
        assert!(build_smoothed_flux(FluxKind::H, 0.0).is_err());
    }

    #[test]
    fn smoothed_g_is_composed() {
        let g = Flux::from_kind(FluxKind::SmoothedG { eps: 0.05 }).unwrap();
        let h = Flux::from_kind(FluxKind::SmoothedH { eps: 0.05 }).unwrap();
        for r in [0.0, 0.3, 1.0, 1.7, 5.0] {
            assert!((g.eval(r) - h.eval(r / (1.0 + r))).abs() < 1e-15);
        }
        assert!(g.lipschitz() <= 1.2);
    }

    #[test]
    fn smoothed_frak_h_and_its_zero_range_image() {
        let eps = 0.02;
        let f = Flux::from_kind(FluxKind::SmoothedFrakH { eps }).unwrap();
        for r in [0.0, 0.3, 0.6, 0.9] {
            assert!((f.eval(r) - frak_h_exact(r)).abs() <= 2.0 * eps);
        }
        let g = Flux::from_kind(FluxKind::SmoothedFrakG { eps }).unwrap();
        for r in [0.5, 1.5, 3.0] {
            let rho = r / (1.0 + r);
            assert!((g.eval(r) - (1.0 + r) * f.eval(rho)).abs() < 1e-14);
            assert!((g.eval(r) - g_exact(r)).abs() < 3.0 * eps * (1.0 + r));
        }
    }

    #[test]
    fn eo_split_reassembles_the_flux() {
        let f = Flux::frak_h();
        let s = f.eo_split(0.0, 1.0);
        let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..=1000 {
            let r = k as f64 / 1000.0;
            let (p, m) = f.split_eval(&s, r);
            assert!((p + m - f.eval(r)).abs() < 1e-15);
            assert!(p >= prev.0 - 1e-15 && m <= prev.1 + 1e-15);
            prev = (p, m);
        }
        let g = Flux::from_kind(FluxKind::SmoothedFrakH { eps: 0.05 }).unwrap();
        let s = g.eo_split(0.0, 1.0);
        let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..=1000 {
            let r = k as f64 / 1000.0;
            let (p, m) = g.split_eval(&s, r);
            assert!((p + m - g.eval(r)).abs() < 1e-6);
            assert!(p >= prev.0 - 1e-12 && m <= prev.1 + 1e-6);
            prev = (p, m);
        }
    }
}
