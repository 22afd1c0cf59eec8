//! Checks on the induced geometry of a single graph: the Gauss equation, the
//! `Δr` relation and the integrated monotonicity identity.

use serde::Serialize;

use crate::error::Result;
use crate::graph_surface::{GraphSurface, GridSpec, StencilOrder, SurfaceGen, DEFAULT_MARGIN};
use crate::melvin_space::SpaceParams;

/// `lhs = ∬ r⁻¹(−2Δr − rR) dA`, `rhs = −∬ 2|∇r|²/r² dA`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl MonotonicityCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Assembles both sides from the pointwise geometry. `Δr` is the closed form
/// in terms of `H`; `R = 2K` uses the Brioschi curvature. Their agreement
/// rests on the divergence theorem and Gauss–Bonnet on the torus.
pub fn monotonicity_integrand(surface: &GraphSurface) -> Result<MonotonicityCheck> {
    let geo = surface.geometry()?;
    let k = geo.gauss_curvature();
    let lhs_dens: Vec<f64> = geo
        .points()
        .iter()
        .zip(k)
        .map(|(p, k)| (-2.0 * p.lap_r - p.s * 2.0 * k) / p.s)
        .collect();
    let rhs_dens: Vec<f64> = geo
        .points()
        .iter()
        .map(|p| -2.0 * p.grad_r2 / (p.s * p.s))
        .collect();
    Ok(MonotonicityCheck {
        lhs: geo.integrate_area(&lhs_dens),
        rhs: geo.integrate_area(&rhs_dens),
    })
}

/// Max pointwise residuals at two resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementPair {
    pub coarse: f64,
    pub fine: f64,
}

impl RefinementPair {
    pub fn ratio(&self) -> f64 {
        self.coarse / self.fine
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceRefinement {
    pub n: usize,
    pub gauss: RefinementPair,
    pub lap_r: RefinementPair,
    pub monotone: RefinementPair,
}

/// Cosine bump `r₀ + 0.15 cos(2πx/P_x) + 0.1 cos(2πy/P_y)` with `r₀ = 2`.
pub fn cos_bump(params: &SpaceParams, n: usize, order: StencilOrder) -> Result<GraphSurface> {
    let grid = GridSpec::new(n, n, params.px, params.py, order)?;
    let poly = SurfaceGen::Cos {
        r0: 2.0_f64.max(1.5 * params.r_s),
        ax: 0.15,
        kx: 1,
        ay: 0.1,
        ky: 1,
    }
    .polynomial();
    GraphSurface::from_polynomial(*params, grid, DEFAULT_MARGIN, &poly)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gauss-equation, `Δr`-relation and monotonicity residuals on `surface(n)`
/// and `surface(2n)`.
pub fn surface_refinement(
    surface: impl Fn(usize) -> Result<GraphSurface>,
    n: usize,
) -> Result<SurfaceRefinement> {
    let eval = |n: usize| -> Result<(f64, f64, f64)> {
        let s = surface(n)?;
        let geo = s.geometry()?;
        Ok((
            max_abs(&geo.gauss_residual()),
            max_abs(&geo.lap_r_residual()),
            monotonicity_integrand(&s)?.discrepancy(),
        ))
    };
    let (g0, l0, m0) = eval(n)?;
    let (g1, l1, m1) = eval(2 * n)?;
    Ok(SurfaceRefinement {
        n,
        gauss: RefinementPair {
            coarse: g0,
            fine: g1,
        },
        lap_r: RefinementPair {
            coarse: l0,
            fine: l1,
        },
        monotone: RefinementPair {
            coarse: m0,
            fine: m1,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_torus_is_trivial() {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let g = GridSpec::new(16, 16, p.px, p.py, StencilOrder::Fourth).unwrap();
        let m = monotonicity_integrand(&GraphSurface::constant(p, g, 2.0).unwrap()).unwrap();
        assert!(m.lhs.abs() < 1e-12 && m.rhs.abs() < 1e-12, "{m:?}");
    }

    #[test]
    fn bump_is_nonpositive_and_consistent() {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let m = monotonicity_integrand(&cos_bump(&p, 64, StencilOrder::Fourth).unwrap()).unwrap();
        assert!(m.lhs < 0.0 && m.rhs < 0.0);
        assert!(m.discrepancy() < 1e-4 * m.rhs.abs(), "{m:?}");
        let r = surface_refinement(|n| cos_bump(&p, n, StencilOrder::Fourth), 32).unwrap();
        assert!(r.gauss.ratio() >= 8.0 && r.lap_r.ratio() >= 8.0, "{r:?}");
        assert!(r.monotone.ratio() >= 8.0, "{r:?}");
    }
}
