//! Special cases of the inequality: graphs depending on one variable, where
//! the gap integrand is an exact `arctan` derivative, and small perturbations
//! `r₀ + εφ` of a coordinate torus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_surface::grid::{diff1_periodic, diff2_periodic, stable_sum};
use crate::graph_surface::{GraphSurface, GridSpec, ProfileFile, StencilOrder};
use crate::melvin_space::SpaceParams;

/// Which coordinate the graph is independent of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// `s = s(x)`, periodic with `P_x`.
    YSymmetric,
    /// `s = s(y)`, periodic with `P_y`.
    XSymmetric,
}

/// Periodic 1-D height profile.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProfile {
    pub axis: Axis,
    pub params: SpaceParams,
    pub s: Vec<f64>,
    pub order: StencilOrder,
    pub margin: f64,
}

impl AxisProfile {
    pub fn new(
        axis: Axis,
        params: SpaceParams,
        s: Vec<f64>,
        order: StencilOrder,
        margin: f64,
    ) -> Result<Self> {
        if s.len() < crate::graph_surface::grid::MIN_POINTS {
            return Err(Error::config(format!(
                "profile needs at least 8 samples, got {}",
                s.len()
            )));
        }
        let p = AxisProfile {
            axis,
            params,
            s,
            order,
            margin,
        };
        p.validate()?;
        Ok(p)
    }

    /// Samples `f(ξ)` at `n` points of the period.
    pub fn from_fn(
        axis: Axis,
        params: SpaceParams,
        n: usize,
        order: StencilOrder,
        margin: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let period = match axis {
            Axis::YSymmetric => params.px,
            Axis::XSymmetric => params.py,
        };
        let s = (0..n).map(|k| f(k as f64 * period / n as f64)).collect();
        Self::new(axis, params, s, order, margin)
    }

    pub fn from_file(
        file: ProfileFile,
        axis: Axis,
        order: StencilOrder,
        margin: f64,
    ) -> Result<Self> {
        if file.s.len() != file.n {
            return Err(Error::config(format!(
                "profile file has {} heights but n = {}",
                file.s.len(),
                file.n
            )));
        }
        Self::new(
            axis,
            SpaceParams::new(file.b, file.px)?,
            file.s,
            order,
            margin,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let limit = self.params.r_s + self.margin;
        for (k, &v) in self.s.iter().enumerate() {
            if !(v > limit) || !v.is_finite() {
                let (i, j) = match self.axis {
                    Axis::YSymmetric => (k, 0),
                    Axis::XSymmetric => (0, k),
                };
                return Err(Error::BelowMargin {
                    i,
                    j,
                    value: v,
                    limit,
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    /// Period of the profile variable.
    pub fn period(&self) -> f64 {
        match self.axis {
            Axis::YSymmetric => self.params.px,
            Axis::XSymmetric => self.params.py,
        }
    }

    /// Period of the variable the profile does not depend on.
    pub fn other_period(&self) -> f64 {
        match self.axis {
            Axis::YSymmetric => self.params.py,
            Axis::XSymmetric => self.params.px,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n() as f64
    }

    fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.spacing();
        (
            diff1_periodic(&self.s, h, self.order),
            diff2_periodic(&self.s, h, self.order),
        )
    }

    /// `λ′`: `s⁻²F^{−1/2}s′` (y-symmetric) or `s⁻²F⁻¹s′` (x-symmetric).
    pub fn lambda_prime(&self) -> Vec<f64> {
        let (ds, _) = self.derivatives();
        self.s
            .iter()
            .zip(&ds)
            .map(|(&s, &d)| {
                let f = self.params.profile(s).f;
                match self.axis {
                    Axis::YSymmetric => d / (s * s * f.sqrt()),
                    Axis::XSymmetric => d / (s * s * f),
                }
            })
            .collect()
    }

    /// Pointwise `H s⁴ F N − 2s³ + ½` from the one-variable mean curvature.
    pub fn gap_density(&self) -> Vec<f64> {
        let (ds, d2s) = self.derivatives();
        (0..self.n())
            .map(|k| {
                let (r, d, dd) = (self.s[k], ds[k], d2s[k]);
                let p = self.params.profile(r);
                let (f, df) = (p.f, p.df);
                let r4 = r.powi(4);
                let (z2, num) = match self.axis {
                    Axis::YSymmetric => (
                        1.0 + d * d / (r4 * f),
                        -dd + (4.0 * f + r * df) / (r * f) * d * d,
                    ),
                    Axis::XSymmetric => (
                        1.0 + d * d / (r4 * f * f),
                        -dd / f + (8.0 * f + 3.0 * r * df) / (2.0 * r * f * f) * d * d,
                    ),
                };
                let n = (z2 / (r * r * f)).sqrt();
                let h =
                    (num + 2.0 * r.powi(3) * f + 0.5 * r4 * df) / (r4 * r * r * f * f * n * n * n);
                h * r4 * f * n - 2.0 * r.powi(3) + 0.5
            })
            .collect()
    }

    /// Nonnegative integrand after integrating by parts.
    pub fn ibp_density(&self) -> Vec<f64> {
        let lp = self.lambda_prime();
        self.s
            .iter()
            .zip(&lp)
            .map(|(&s, &l)| {
                let p = self.params.profile(s);
                let w = l * l.atan();
                match self.axis {
                    Axis::YSymmetric => {
                        let sf = p.f.sqrt();
                        w * s * s * sf * (2.0 * s * sf + s * s * p.df / (2.0 * sf))
                    }
                    Axis::XSymmetric => 2.0 * s.powi(3) * p.f * w,
                }
            })
            .collect()
    }

    /// Extends the profile to a 2-D surface with `n_other` points along the
    /// constant direction.
    pub fn lift(&self, n_other: usize) -> Result<GraphSurface> {
        let p = self.params;
        let n = self.n();
        let (grid, s) = match self.axis {
            Axis::YSymmetric => {
                let g = GridSpec::new(n, n_other, p.px, p.py, self.order)?;
                let s = (0..g.len()).map(|k| self.s[k / n_other]).collect();
                (g, s)
            }
            Axis::XSymmetric => {
                let g = GridSpec::new(n_other, n, p.px, p.py, self.order)?;
                let s = (0..g.len()).map(|k| self.s[k % n]).collect();
                (g, s)
            }
        };
        GraphSurface::new(p, grid, s, self.margin)
    }

    fn integrate(&self, f: &[f64]) -> f64 {
        stable_sum(f.iter().copied()) * self.spacing() * self.other_period()
    }
}

/// `P_other · ∫ (H s⁴ F N − 2s³ + ½) dξ`.
pub fn q_gap_axis_direct(profile: &AxisProfile) -> Result<f64> {
    profile.validate()?;
    Ok(profile.integrate(&profile.gap_density()))
}

/// The same gap after integrating by parts; fails if the integrand is ever
/// negative.
pub fn q_gap_axis_ibp(profile: &AxisProfile) -> Result<f64> {
    profile.validate()?;
    let dens = profile.ibp_density();
    if let Some((k, v)) = dens.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Property(format!(
            "integrated-by-parts integrand is {v} at sample {k}"
        )));
    }
    Ok(profile.integrate(&dens))
}

/// `max |LHS − RHS|` of the pointwise identity
/// `H s⁴ F N − 2s³ + ½ = −s² w λ″ / (1 + λ′²)` with `w = F^{1/2}` (y-symmetric)
/// or `w = 1` (x-symmetric); `λ″` is a stencil derivative of `λ′`.
pub fn integrand_identity_residual(profile: &AxisProfile) -> Result<f64> {
    profile.validate()?;
    let lhs = profile.gap_density();
    let lp = profile.lambda_prime();
    let lpp = diff1_periodic(&lp, profile.spacing(), profile.order);
    Ok((0..profile.n())
        .map(|k| {
            let s = profile.s[k];
            let w = match profile.axis {
                Axis::YSymmetric => profile.params.profile(s).f.sqrt(),
                Axis::XSymmetric => 1.0,
            };
            let rhs = -s * s * w * lpp[k] / (1.0 + lp[k] * lp[k]);
            (lhs[k] - rhs).abs()
        })
        .fold(0.0, f64::max))
}

/// `max |4F + rF′ − (4 − r⁻³)|` along the profile.
pub fn profile_identity_residual(profile: &AxisProfile) -> f64 {
    profile
        .s
        .iter()
        .map(|&r| {
            let p = profile.params.profile(r);
            (4.0 * p.f + r * p.df - (4.0 - r.powi(-3))).abs()
        })
        .fold(0.0, f64::max)
}

/// Perturbation `r₀ + εφ` of a coordinate torus.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub params: SpaceParams,
    pub grid: GridSpec,
    pub r0: f64,
    pub phi: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub margin: f64,
}

impl PerturbationSpec {
    /// Uses the sweep `{0, ±ε₀, ±ε₀/2}`; `eps0 = None` picks `10⁻²(r₀ − r_s)`.
    pub fn new(
        params: SpaceParams,
        grid: GridSpec,
        r0: f64,
        phi: Vec<f64>,
        eps0: Option<f64>,
        margin: f64,
    ) -> Result<Self> {
        let e = eps0.unwrap_or(1e-2 * (r0 - params.r_s));
        let spec = PerturbationSpec {
            params,
            grid,
            r0,
            phi,
            eps_list: vec![-e, -0.5 * e, 0.0, 0.5 * e, e],
            margin,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi.len() != self.grid.len() {
            return Err(Error::config(format!(
                "perturbation has {} values but the grid has {}",
                self.phi.len(),
                self.grid.len()
            )));
        }
        let limit = self.params.r_s + self.margin;
        if !(self.r0 > limit) {
            return Err(Error::domain(format!(
                "r0 = {} is not above r_s + margin = {limit}",
                self.r0
            )));
        }
        let lo = self.phi.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &e in &self.eps_list {
            let worst = self.r0 + (e * lo).min(e * hi);
            if !(worst > limit) {
                return Err(Error::domain(format!(
                    "r0 + ε φ reaches {worst} at ε = {e}, below r_s + margin = {limit}"
                )));
            }
        }
        Ok(())
    }

    /// `ε₀`, the largest sweep step.
    pub fn eps0(&self) -> f64 {
        self.eps_list.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }

    pub fn surface(&self, eps: f64) -> Result<GraphSurface> {
        let s = self.phi.iter().map(|p| self.r0 + eps * p).collect();
        GraphSurface::new(self.params, self.grid, s, self.margin)
    }
}

/// `2 ∬ [(4F₀ + r₀F₀′)/(2r₀F₀) φ_x² + 2/(r₀F₀) φ_y²] dx dy`.
pub fn second_variation_form(spec: &PerturbationSpec) -> Result<f64> {
    spec.validate()?;
    let p = spec.params.profile(spec.r0);
    let r0 = spec.r0;
    let cx = (4.0 * p.f + r0 * p.df) / (2.0 * r0 * p.f);
    let cy = 2.0 / (r0 * p.f);
    let px = spec.grid.d_dx(&spec.phi);
    let py = spec.grid.d_dy(&spec.phi);
    let dens: Vec<f64> = px
        .iter()
        .zip(&py)
        .map(|(a, b)| cx * a * a + cy * b * b)
        .collect();
    Ok(2.0 * spec.grid.integrate(&dens))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationResult {
    /// `Q` at `ε = 0`.
    pub q0: f64,
    /// Richardson-extrapolated `dQ/dε` at 0.
    pub dq: f64,
    /// Richardson-extrapolated `d²Q/dε²` at 0.
    pub d2q_fd: f64,
    /// Closed-form second variation.
    pub d2q_form: f64,
    /// `|D₂(ε₀/2) − D₂(ε₀)|`, the size of the term Richardson removes.
    pub richardson_correction: f64,
}

impl PerturbationResult {
    pub fn second_rel_error(&self) -> f64 {
        (self.d2q_fd - self.d2q_form).abs() / self.d2q_form.abs().max(f64::MIN_POSITIVE)
    }

    /// Checks `|dQ/dε| ≤ first_tol·|Q|` and relative second-derivative error
    /// `≤ second_tol`.
    pub fn check(&self, first_tol: f64, second_tol: f64) -> Result<()> {
        if self.dq.abs() > first_tol * self.q0.abs() {
            return Err(Error::Property(format!(
                "first variation {} exceeds {first_tol}·|Q| = {}",
                self.dq,
                first_tol * self.q0.abs()
            )));
        }
        // A constant φ has zero second variation; compare absolutely there.
        let scale = self.d2q_form.abs().max(1e-9 * self.q0.abs());
        if (self.d2q_fd - self.d2q_form).abs() > second_tol * scale {
            return Err(Error::Property(format!(
                "second variation {} from differences vs {} from the closed form",
                self.d2q_fd, self.d2q_form
            )));
        }
        Ok(())
    }
}

/// Finite-difference derivatives of `Q(r₀ + εφ)` at `ε = 0`. Differences are
/// taken of the gap, which shares derivatives with `Q` but has no large
/// constant part.
pub fn perturbation_derivatives(spec: &PerturbationSpec) -> Result<PerturbationResult> {
    spec.validate()?;
    let e = spec.eps0();
    let evals: Vec<(f64, f64)> = [-e, -0.5 * e, 0.0, 0.5 * e, e]
        .par_iter()
        .map(|&eps| spec.surface(eps)?.q_functional().map(|q| (q.gap, q.q)))
        .collect::<Result<Vec<_>>>()?;
    let g = |k: usize| evals[k].0;
    let d1 = |h: f64, m: f64, p: f64| (p - m) / (2.0 * h);
    let d2 = |h: f64, m: f64, p: f64| (p - 2.0 * g(2) + m) / (h * h);
    let d1_full = d1(e, g(0), g(4));
    let d1_half = d1(0.5 * e, g(1), g(3));
    let d2_full = d2(e, g(0), g(4));
    let d2_half = d2(0.5 * e, g(1), g(3));
    Ok(PerturbationResult {
        q0: evals[2].1,
        dq: (4.0 * d1_half - d1_full) / 3.0,
        d2q_fd: (4.0 * d2_half - d2_full) / 3.0,
        d2q_form: second_variation_form(spec)?,
        richardson_correction: (d2_half - d2_full).abs(),
    })
}

/// Derivatives plus the checks `|dQ/dε| ≤ 1e−7|Q|` and 1% agreement of the
/// second derivative with the closed form.
pub fn perturbation_sweep(spec: &PerturbationSpec) -> Result<PerturbationResult> {
    let r = perturbation_derivatives(spec)?;
    r.check(1e-7, 1e-2)?;
    Ok(r)
}
