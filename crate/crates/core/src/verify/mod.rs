//! Independent oracles for the identities the other modules rely on.

#![allow(clippy::needless_range_loop)]

mod ambient;
mod patch;
mod surface;

pub use ambient::{ambient_fd_suite, default_radii, AmbientReport};
pub use patch::{
    check_evolution_identities, evolution_convergence, evolve_patch, EvolutionConvergence,
    EvolutionResiduals, LagrangianPatch, PatchPoint, PatchTrajectory, Speed,
};
pub use surface::{
    cos_bump, monotonicity_integrand, surface_refinement, MonotonicityCheck, RefinementPair,
    SurfaceRefinement,
};

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_surface::StencilOrder;
use crate::melvin_space::SpaceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Ambient,
    Surface,
    Evolution,
    Monotone,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ambient" => Ok(Suite::Ambient),
            "surface" => Ok(Suite::Surface),
            "appendixB" | "appendixb" | "evolution" => Ok(Suite::Evolution),
            "monotone" => Ok(Suite::Monotone),
            "all" => Ok(Suite::All),
            other => Err(Error::config(format!(
                "unknown suite '{other}' (expected ambient, surface, evolution, monotone or all)"
            ))),
        }
    }
}

/// One named residual with the threshold it must respect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `true` when `value` must be at least `threshold` (convergence ratios
    /// and orders) rather than at most.
    pub at_least: bool,
    pub passed: bool,
}

impl Check {
    fn at_most(suite: &'static str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            value,
            threshold,
            at_least: false,
            passed: value <= threshold,
        }
    }

    fn at_least(suite: &'static str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            value,
            threshold,
            at_least: true,
            passed: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub b: f64,
    pub px: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Runs the requested suite(s) for the space `params`.
pub fn run_suite(params: &SpaceParams, suite: Suite) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let want = |s: Suite| suite == Suite::All || suite == s;

    if want(Suite::Ambient) {
        let rep = ambient_fd_suite(params, &default_radii(params), 1e-4)?;
        for (name, v) in rep.entries() {
            checks.push(Check::at_most("ambient", name, v, 1e-6));
        }
        let identity = (0..=100)
            .map(|k| params.r_s * (1.01 + 0.1 * k as f64))
            .map(|r| {
                let p = params.profile(r);
                (2.0 * p.df + 0.5 * r * p.d2f + 2.0 * params.b * r.powi(-5)).abs()
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            "ambient",
            "static_profile_identity",
            identity,
            1e-13,
        ));
    }

    if want(Suite::Surface) {
        let r = surface_refinement(|n| cos_bump(params, n, StencilOrder::Fourth), 32)?;
        checks.push(Check::at_least(
            "surface",
            "gauss_refinement_ratio",
            r.gauss.ratio(),
            8.0,
        ));
        checks.push(Check::at_least(
            "surface",
            "lap_r_refinement_ratio",
            r.lap_r.ratio(),
            8.0,
        ));
        checks.push(Check::at_most(
            "surface",
            "gauss_residual_fine",
            r.gauss.fine,
            1e-4,
        ));
        checks.push(Check::at_most(
            "surface",
            "lap_r_residual_fine",
            r.lap_r.fine,
            1e-4,
        ));
    }

    if want(Suite::Monotone) {
        let s = cos_bump(params, 64, StencilOrder::Fourth)?;
        let m = monotonicity_integrand(&s)?;
        let tol = 1e-4 * m.rhs.abs().max(1e-12);
        checks.push(Check::at_most("monotone", "lhs", m.lhs, tol));
        checks.push(Check::at_most(
            "monotone",
            "lhs_minus_rhs",
            m.discrepancy(),
            tol,
        ));
    }

    if want(Suite::Evolution) {
        for speed in [Speed::InverseR, Speed::Generic] {
            let conv = evolution_convergence(
                |n| cos_bump(params, n, StencilOrder::Fourth),
                speed,
                16,
                2e-2,
                0.1,
            )?;
            let tag = match speed {
                Speed::InverseR => "inverse_r",
                Speed::Generic => "generic",
                Speed::Zero => "zero",
            };
            for (name, order) in &conv.orders {
                checks.push(Check::at_least(
                    "evolution",
                    format!("{tag}_{name}_order"),
                    *order,
                    1.8,
                ));
            }
            for (name, v) in conv.fine.entries() {
                checks.push(Check::at_most(
                    "evolution",
                    format!("{tag}_{name}_residual"),
                    v,
                    1e-2,
                ));
            }
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        b: params.b,
        px: params.px,
        checks,
        passed,
    })
}
