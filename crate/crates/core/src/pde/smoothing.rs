//! Convergence of regularized equations to the unregularized ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::field::{DensityField, FieldGeometry};
use crate::pde::flux::{build_smoothed_flux, Flux, FluxKind};
use crate::pde::hyperbolic::{solve_hyperbolic, HyperbolicOptions, Viscosity};
use crate::pde::parabolic::{solve_parabolic, ParabolicOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub eps: f64,
    /// `sup_t ‖ρ^ε_t − ρ_t‖_{L²}` over the sampled times.
    pub density_l2: f64,
    /// `sup_t ‖H^ε(ρ^ε_t) − H(ρ_t)‖_{L²}`.
    pub flux_l2: f64,
}

/// Solves `∂_t ρ = ∂² H^ε(ρ)` for each `ε` and compares with `ε = 0`.
pub fn smoothing_convergence_study(rho0: &DensityField, eps: &[f64], horizon: f64, samples: usize) -> Result<Vec<SmoothingRow>> {
    if rho0.geometry != FieldGeometry::Torus {
        return Err(Error::Params("the smoothing study runs on the torus".into()));
    }
    let times: Vec<f64> = (1..=samples.max(1)).map(|k| horizon * k as f64 / samples.max(1) as f64).collect();
    let base = Flux::h();
    // A common λ keeps the time grids identical across ε.
    let opts = ParabolicOptions { lambda: Some(0.45 / base.lipschitz()), ..ParabolicOptions::at(times.clone()) };
    let reference = solve_parabolic(rho0, &base, horizon, &opts)?;
    eps.par_iter()
        .map(|&e| {
            let flux = build_smoothed_flux(FluxKind::H, e)?;
            let run = solve_parabolic(rho0, &flux, horizon, &opts)?;
            let mut row = SmoothingRow { eps: e, density_l2: 0.0, flux_l2: 0.0 };
            for &t in &times {
                let (a, b) = (run.at(t)?, reference.at(t)?);
                row.density_l2 = row.density_l2.max(a.l2_distance(b)?);
                let fa = DensityField::new(a.geometry, a.cells.iter().map(|&r| flux.eval(r)).collect())?;
                let fb = DensityField::new(b.geometry, b.cells.iter().map(|&r| base.eval(r)).collect())?;
                row.flux_l2 = row.flux_l2.max(fa.l2_distance(&fb)?);
            }
            Ok(row)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscosityRow {
    pub eps: f64,
    /// L¹ distance on the comparison window to the inviscid solution at the horizon.
    pub l1_to_inviscid: f64,
    /// Same distance to the run with the preceding `ε` of the list.
    pub l1_to_previous: Option<f64>,
}

/// Viscous runs `∂_t c + s ∂f(c) = ε ∂² w(c)` compared with the inviscid run
/// on `[a, b]` at time `horizon`.
pub fn viscous_convergence_study(
    field0: &DensityField,
    flux: &Flux,
    p: f64,
    horizon: f64,
    eps: &[f64],
    (a, b): (f64, f64),
) -> Result<Vec<ViscosityRow>> {
    let inviscid = solve_hyperbolic(field0, flux, p, horizon, &HyperbolicOptions::at(vec![]))?;
    let finals = eps
        .par_iter()
        .map(|&e| {
            let mut opts = HyperbolicOptions::at(vec![]);
            opts.viscosity = if flux.kind().zero_range() { Viscosity::ZeroRange(e) } else { Viscosity::Exclusion(e) };
            Ok(solve_hyperbolic(field0, flux, p, horizon, &opts)?.last().clone())
        })
        .collect::<Result<Vec<DensityField>>>()?;
    eps.iter()
        .enumerate()
        .map(|(k, &e)| {
            let l1_to_previous = match k {
                0 => None,
                _ => Some(finals[k].l1_distance_on(&finals[k - 1], a, b)?),
            };
            Ok(ViscosityRow { eps: e, l1_to_inviscid: finals[k].l1_distance_on(inviscid.last(), a, b)?, l1_to_previous })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Profile;
    use crate::pde::riemann::riemann_exact;

    #[test]
    fn constant_data_distances_are_within_the_flux_floor() {
        let f = DensityField::constant(FieldGeometry::Torus, 64, 0.8).unwrap();
        for row in smoothing_convergence_study(&f, &[0.1, 0.05], 0.01, 4).unwrap() {
            assert!(row.density_l2 < 1e-14);
            assert!(row.flux_l2 <= 3.0 * row.eps);
        }
    }

    #[test]
    fn step_data_columns_decrease() {
        let p = Profile::torus_steps(vec![0.8, 0.3]).unwrap();
        let f = DensityField::from_profile(&p, FieldGeometry::Torus, 256).unwrap();
        let rows = smoothing_convergence_study(&f, &[0.1, 0.05, 0.025, 0.0125], 0.02, 5).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].density_l2 < w[0].density_l2, "{rows:?}");
            assert!(w[1].flux_l2 < w[0].flux_l2, "{rows:?}");
        }
    }

    #[test]
    fn vanishing_viscosity_approaches_the_riemann_oracle() {
        let prof = Profile::step(vec![0.0], vec![2.0, 0.5]).unwrap();
        let n = 2000;
        let f = DensityField::from_profile(&prof, FieldGeometry::Interval { lo: -1.0, hi: 1.0 }, n).unwrap();
        let mut opts = HyperbolicOptions::at(vec![]);
        opts.viscosity = Viscosity::ZeroRange(1e-3);
        let run = solve_hyperbolic(&f, &Flux::g(), 1.0, 1.0, &opts).unwrap();
        let exact = riemann_exact(&Flux::g(), 1.0, 2.0, 0.5).unwrap().field(-1.0, 1.0, n, 1.0).unwrap();
        let d = run.last().l1_distance(&exact).unwrap();
        assert!(d <= 0.02, "{d}");

        let rows = viscous_convergence_study(&f, &Flux::g(), 1.0, 1.0, &[4e-3, 2e-3, 1e-3], (-0.5, 0.9)).unwrap();
        assert!(rows.windows(2).all(|w| w[1].l1_to_inviscid < w[0].l1_to_inviscid), "{rows:?}");
        assert!(rows[2].l1_to_previous.unwrap() < rows[1].l1_to_previous.unwrap(), "{rows:?}");
    }
}
