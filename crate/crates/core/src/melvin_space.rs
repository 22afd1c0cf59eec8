//! Closed-form ambient geometry of the AdS-Melvin space.
//!
//! The space is the solid torus `(r_s, ∞) × T²` with metric
//! `r⁻²F⁻¹ dr² + r² dx² + r²F dy²` and profile `F(r) = 1 − r⁻³ − b r⁻⁴`.
//! Coordinates are always ordered `(r, x, y)`; index 0 is `r`.
//!
//! Everything here is a pure function of `(b, r)`. Derivatives of `F` are
//! hand-coded; finite differences only appear in the verification oracles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance of the soliton-radius root find.
pub const ROOT_TOL: f64 = 1e-13;

/// `F` and its first two derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

impl Profile {
    /// Evaluates the profile without domain checks. Callers guarantee `r > 0`.
    #[inline]
    pub fn at(b: f64, r: f64) -> Self {
        let ir = 1.0 / r;
        let ir3 = ir * ir * ir;
        let ir4 = ir3 * ir;
        Profile {
            f: 1.0 - ir3 - b * ir4,
            df: 3.0 * ir4 + 4.0 * b * ir4 * ir,
            d2f: -12.0 * ir4 * ir - 20.0 * b * ir4 * ir * ir,
        }
    }
}

/// Evaluates `(F, F′, F″)` at `r > 0`.
pub fn eval_profile(b: f64, r: f64) -> Result<Profile> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("profile needs r > 0, got r = {r}")));
    }
    Ok(Profile::at(b, r))
}

/// Largest root of `F`, i.e. the unique root of `r⁴ − r − b` in `[1, ∞)`.
///
/// Bracketed Newton on the quartic over `[1, 2 + b]`; a Newton iterate that
/// leaves the bracket is replaced by bisection.
pub fn solve_r_s(b: f64) -> Result<f64> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::domain(format!(
            "charge parameter must satisfy b >= 0, got b = {b}"
        )));
    }
    let p = |r: f64| r * r * r * r - r - b;
    let dp = |r: f64| 4.0 * r * r * r - 1.0;

    let (mut lo, mut hi) = (1.0_f64, 2.0 + b);
    if p(lo) == 0.0 {
        return Ok(lo);
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = p(r);
        if v == 0.0 {
            return Ok(r);
        }
        if v < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let newton = r - v / dp(r);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - r).abs();
        r = next;
        if step <= ROOT_TOL * 1e-2 || hi - lo <= ROOT_TOL * 1e-2 {
            break;
        }
    }
    Ok(r)
}

/// Period of `y` that closes the metric smoothly at `r = r_s`.
pub fn period_y(b: f64) -> Result<f64> {
    let rs = solve_r_s(b)?;
    let prof = Profile::at(b, rs);
    Ok(4.0 * PI / (rs * rs * prof.df))
}

/// `4π r_s³ / (3 r_s + 4b)`, the simplified period formula.
pub fn period_y_simplified(b: f64) -> Result<f64> {
    let rs = solve_r_s(b)?;
    Ok(4.0 * PI * rs * rs * rs / (3.0 * rs + 4.0 * b))
}

/// `−6 + 2b/r⁴` with no domain check.
#[inline]
pub fn scalar_curvature_at(b: f64, r: f64) -> f64 {
    -6.0 + 2.0 * b / (r * r * r * r)
}

/// The ambient space: charge `b`, x-period `P_x`, and the derived `r_s`, `P_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub b: f64,
    pub px: f64,
    pub r_s: f64,
    pub py: f64,
}

/// The five nonzero Christoffel symbols `Γ^a_bc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffels {
    /// `Γ^r_rr`
    pub r_rr: f64,
    /// `Γ^r_xx`
    pub r_xx: f64,
    /// `Γ^r_yy`
    pub r_yy: f64,
    /// `Γ^x_rx = Γ^x_xr`
    pub x_rx: f64,
    /// `Γ^y_ry = Γ^y_yr`
    pub y_ry: f64,
}

impl Christoffels {
    /// Dense table `table[a][b][c] = Γ^a_bc`.
    pub fn table(&self) -> [[[f64; 3]; 3]; 3] {
        let mut t = [[[0.0; 3]; 3]; 3];
        t[0][0][0] = self.r_rr;
        t[0][1][1] = self.r_xx;
        t[0][2][2] = self.r_yy;
        t[1][0][1] = self.x_rx;
        t[1][1][0] = self.x_rx;
        t[2][0][2] = self.y_ry;
        t[2][2][0] = self.y_ry;
        t
    }

    /// `Γ^a_bc u^b v^c` for all `a`.
    #[inline]
    pub fn contract(&self, u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
        [
            self.r_rr * u[0] * v[0] + self.r_xx * u[1] * v[1] + self.r_yy * u[2] * v[2],
            self.x_rx * (u[0] * v[1] + u[1] * v[0]),
            self.y_ry * (u[0] * v[2] + u[2] * v[0]),
        ]
    }
}

/// Nonzero Riemann components `R_abab`, with the convention
/// `Rm(X, Y, X, Y) = K(X, Y) |X ∧ Y|²` (negative for hyperbolic space).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Riemann {
    pub rxrx: f64,
    pub ryry: f64,
    pub xyxy: f64,
}

impl Riemann {
    /// `Rm(X, Y, Z, W) = R_abcd X^a Y^b Z^c W^d`.
    pub fn contract(&self, x: [f64; 3], y: [f64; 3], z: [f64; 3], w: [f64; 3]) -> f64 {
        let wedge = |a: [f64; 3], b: [f64; 3], i: usize, j: usize| a[i] * b[j] - a[j] * b[i];
        self.rxrx * wedge(x, y, 0, 1) * wedge(z, w, 0, 1)
            + self.ryry * wedge(x, y, 0, 2) * wedge(z, w, 0, 2)
            + self.xyxy * wedge(x, y, 1, 2) * wedge(z, w, 1, 2)
    }

    /// Dense table `table[a][b][c][d] = R_abcd`.
    pub fn table(&self) -> [[[[f64; 3]; 3]; 3]; 3] {
        let mut t = [[[[0.0; 3]; 3]; 3]; 3];
        for (a, b, v) in [(0, 1, self.rxrx), (0, 2, self.ryry), (1, 2, self.xyxy)] {
            t[a][b][a][b] = v;
            t[b][a][b][a] = v;
            t[a][b][b][a] = -v;
            t[b][a][a][b] = -v;
        }
        t
    }
}

/// Ricci tensor in `(r, x, y)` coordinates. It is diagonal there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ricci {
    pub rr: f64,
    pub xx: f64,
    pub yy: f64,
    /// Eigenvalues relative to `ḡ`, ordered `(r, x, y)`.
    pub eigenvalues: [f64; 3],
}

impl Ricci {
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `Ric(v, v)` for a vector given by coordinate components.
    #[inline]
    pub fn apply(&self, v: [f64; 3]) -> f64 {
        self.rr * v[0] * v[0] + self.xx * v[1] * v[1] + self.yy * v[2] * v[2]
    }
}

/// Hessian of the coordinate function `r`, plus its trace `Δ̄r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianR {
    pub rr: f64,
    pub xx: f64,
    pub yy: f64,
    pub laplacian: f64,
}

/// Eigenvalues of `∇̄²r − (Δ̄r) ḡ − r Ric` relative to `ḡ`, ordered `(r, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticTensor {
    pub eigenvalues: [f64; 3],
}

impl StaticTensor {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Everything at one radius, for tabulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientTensors {
    pub r: f64,
    pub metric: [f64; 3],
    pub christoffels: Christoffels,
    pub ricci: Ricci,
    pub scalar: f64,
    pub hessian_r: HessianR,
    pub static_tensor: StaticTensor,
}

impl SpaceParams {
    pub fn new(b: f64, px: f64) -> Result<Self> {
        if !(px > 0.0) || !px.is_finite() {
            return Err(Error::domain(format!(
                "x-period must be positive, got P_x = {px}"
            )));
        }
        let r_s = solve_r_s(b)?;
        let py = period_y(b)?;
        Ok(SpaceParams { b, px, r_s, py })
    }

    #[inline]
    pub fn profile(&self, r: f64) -> Profile {
        Profile::at(self.b, r)
    }

    /// Rejects radii at or inside the soliton radius, where the metric degenerates.
    pub fn check_radius(&self, r: f64) -> Result<()> {
        if r > self.r_s && r.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "radius r = {r} is not above the soliton radius r_s = {}",
                self.r_s
            )))
        }
    }

    /// Diagonal of `ḡ`: `(r⁻²F⁻¹, r², r²F)`.
    pub fn metric(&self, r: f64) -> Result<[f64; 3]> {
        self.check_radius(r)?;
        Ok(self.metric_unchecked(r))
    }

    #[inline]
    pub(crate) fn metric_unchecked(&self, r: f64) -> [f64; 3] {
        let f = self.profile(r).f;
        [1.0 / (r * r * f), r * r, r * r * f]
    }

    pub fn christoffels(&self, r: f64) -> Result<Christoffels> {
        self.check_radius(r)?;
        Ok(self.christoffels_unchecked(r))
    }

    #[inline]
    pub(crate) fn christoffels_unchecked(&self, r: f64) -> Christoffels {
        let Profile { f, df, .. } = self.profile(r);
        let r2 = r * r;
        Christoffels {
            r_rr: -1.0 / r - 0.5 * df / f,
            r_xx: -r2 * r * f,
            r_yy: -r2 * r * f * f - 0.5 * r2 * r2 * f * df,
            x_rx: 1.0 / r,
            y_ry: 1.0 / r + 0.5 * df / f,
        }
    }

    pub fn riemann(&self, r: f64) -> Result<Riemann> {
        self.check_radius(r)?;
        Ok(self.riemann_unchecked(r))
    }

    #[inline]
    pub(crate) fn riemann_unchecked(&self, r: f64) -> Riemann {
        let Profile { f, df, d2f } = self.profile(r);
        let r4 = r * r * r * r;
        Riemann {
            rxrx: -1.0 - 0.5 * r * df / f,
            ryry: -f - 2.0 * r * df - 0.5 * r * r * d2f,
            xyxy: -r4 * f * f - 0.5 * r4 * r * f * df,
        }
    }

    pub fn ricci(&self, r: f64) -> Result<Ricci> {
        self.check_radius(r)?;
        Ok(self.ricci_unchecked(r))
    }

    #[inline]
    pub(crate) fn ricci_unchecked(&self, r: f64) -> Ricci {
        let Profile { f, df, d2f } = self.profile(r);
        let r2 = r * r;
        let rr = -2.0 / r2 - 2.5 * df / (r * f) - 0.5 * d2f / f;
        let xx = -2.0 * r2 * f - r2 * r * df;
        let yy = -2.0 * r2 * f * f - 2.5 * r2 * r * f * df - 0.5 * r2 * r2 * f * d2f;
        let g = [1.0 / (r2 * f), r2, r2 * f];
        Ricci {
            rr,
            xx,
            yy,
            eigenvalues: [rr / g[0], xx / g[1], yy / g[2]],
        }
    }

    pub fn scalar_curvature(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(scalar_curvature_at(self.b, r))
    }

    pub fn hessian_r(&self, r: f64) -> Result<HessianR> {
        self.check_radius(r)?;
        Ok(self.hessian_r_unchecked(r))
    }

    /// `∇̄_a∇̄_b r = −Γ^r_ab` since `r` is a coordinate.
    pub(crate) fn hessian_r_unchecked(&self, r: f64) -> HessianR {
        let c = self.christoffels_unchecked(r);
        let Profile { f, df, .. } = self.profile(r);
        HessianR {
            rr: -c.r_rr,
            xx: -c.r_xx,
            yy: -c.r_yy,
            laplacian: 3.0 * r * f + r * r * df,
        }
    }

    pub fn static_tensor(&self, r: f64) -> Result<StaticTensor> {
        self.check_radius(r)?;
        let g = self.metric_unchecked(r);
        let hess = self.hessian_r_unchecked(r);
        let ric = self.ricci_unchecked(r);
        let diag = [(hess.rr, ric.rr), (hess.xx, ric.xx), (hess.yy, ric.yy)];
        let mut eigenvalues = [0.0; 3];
        for (a, (h, rc)) in diag.into_iter().enumerate() {
            eigenvalues[a] = h / g[a] - hess.laplacian - r * rc / g[a];
        }
        Ok(StaticTensor { eigenvalues })
    }

    pub fn ambient(&self, r: f64) -> Result<AmbientTensors> {
        Ok(AmbientTensors {
            r,
            metric: self.metric(r)?,
            christoffels: self.christoffels(r)?,
            ricci: self.ricci(r)?,
            scalar: self.scalar_curvature(r)?,
            hessian_r: self.hessian_r(r)?,
            static_tensor: self.static_tensor(r)?,
        })
    }

    /// `P_x P_y (2 r_s³ − ½)`, the lower bound of the functional.
    pub fn q_bound(&self) -> f64 {
        self.px * self.py * (2.0 * self.r_s.powi(3) - 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_values() {
        let p = eval_profile(0.0, 1.0).unwrap();
        assert_eq!((p.f, p.df, p.d2f), (0.0, 3.0, -12.0));
        let p = eval_profile(2.0, 1.0).unwrap();
        assert_eq!((p.f, p.df, p.d2f), (-2.0, 11.0, -52.0));
        let p = eval_profile(3.0, 1e6).unwrap();
        assert!((p.f - 1.0).abs() < 1e-15 && p.df.abs() < 1e-20 && p.d2f.abs() < 1e-25);
        assert!(eval_profile(1.0, 0.0).is_err());
        assert!(eval_profile(1.0, -2.0).is_err());
    }

    fn bisect_quartic(b: f64) -> f64 {
        let (mut lo, mut hi) = (1.0_f64, 2.0 + b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(4) - mid - b < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn soliton_radius() {
        assert_eq!(solve_r_s(0.0).unwrap(), 1.0);
        for b in [0.5, 1.0, 2.0, 12.0, 100.0] {
            let rs = solve_r_s(b).unwrap();
            assert!((rs - bisect_quartic(b)).abs() < 1e-13, "b={b}");
            assert!(Profile::at(b, rs).f.abs() <= 1e-13);
        }
        assert!((solve_r_s(2.0).unwrap() - 1.353_209_964_199_325).abs() < 1e-12);
        assert!((solve_r_s(12.0).unwrap() - 1.931_982_692_775_974).abs() < 1e-12);
        assert!(solve_r_s(-1.0).is_err());
        assert!(solve_r_s(f64::NAN).is_err());
    }

    #[test]
    fn y_period() {
        assert_relative_eq!(period_y(0.0).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert!((period_y(1.0).unwrap() - 2.983_516_455_456_252).abs() < 1e-12);
        for b in [0.0, 0.5, 1.0, 2.0, 12.0] {
            let a = period_y(b).unwrap();
            let s = period_y_simplified(b).unwrap();
            assert_relative_eq!(a, s, max_relative = 1e-12);
        }
    }

    #[test]
    fn christoffel_closed_forms() {
        let sp = SpaceParams::new(1.0, 1.0).unwrap();
        let c = sp.christoffels(2.0).unwrap();
        assert_eq!(c.x_rx, 0.5);
        let p = sp.profile(2.0);
        assert_relative_eq!(c.r_rr, -0.5 - p.df / (2.0 * p.f), max_relative = 1e-15);
        assert!(sp.christoffels(sp.r_s).is_err());
        assert!(sp.christoffels(1.0).is_err());
    }

    #[test]
    fn ricci_eigenvalues_match_closed_forms() {
        for b in [0.0, 0.7, 3.0] {
            let sp = SpaceParams::new(b, 1.0).unwrap();
            for r in [sp.r_s * 1.01, 2.0 * sp.r_s, 10.0] {
                let ric = sp.ricci(r).unwrap();
                let r3 = r * r * r;
                let twin = -2.0 + 0.5 / r3 + 2.0 * b / (r3 * r);
                let lone = -2.0 - 1.0 / r3 - 2.0 * b / (r3 * r);
                assert_relative_eq!(ric.eigenvalues[0], twin, max_relative = 1e-12);
                assert_relative_eq!(ric.eigenvalues[1], lone, max_relative = 1e-12);
                assert_relative_eq!(ric.eigenvalues[2], twin, max_relative = 1e-12);
                let bound = 1.0 / r3 * (1.0 + 2.0 * b / r);
                for e in ric.eigenvalues {
                    assert!((e + 2.0).abs() <= bound * (1.0 + 1e-12));
                }
                assert_relative_eq!(
                    ric.trace(),
                    sp.scalar_curvature(r).unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn ricci_tends_to_hyperbolic() {
        let sp = SpaceParams::new(0.0, 1.0).unwrap();
        for e in sp.ricci(1e4).unwrap().eigenvalues {
            assert!((e + 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn scalar_curvature_values() {
        let sp = SpaceParams::new(0.0, 1.0).unwrap();
        assert_eq!(sp.scalar_curvature(3.0).unwrap(), -6.0);
        assert_eq!(scalar_curvature_at(2.0, 1.0), -2.0);
    }

    #[test]
    fn hessian_trace() {
        let sp = SpaceParams::new(1.0, 1.0).unwrap();
        let h = sp.hessian_r(2.0).unwrap();
        assert_eq!(h.laplacian, 6.125);
        let g = sp.metric(2.0).unwrap();
        let trace = h.rr / g[0] + h.xx / g[1] + h.yy / g[2];
        assert_relative_eq!(trace, 6.125, max_relative = 1e-14);

        // rF ḡ + ½F⁻¹F′ dr⊗dr + ½r⁴FF′ dy⊗dy
        let (r, p) = (2.0, sp.profile(2.0));
        assert_relative_eq!(
            h.rr,
            r * p.f * g[0] + 0.5 * p.df / p.f,
            max_relative = 1e-14
        );
        assert_relative_eq!(h.xx, r * p.f * g[1], max_relative = 1e-14);
        assert_relative_eq!(
            h.yy,
            r * p.f * g[2] + 0.5 * r.powi(4) * p.f * p.df,
            max_relative = 1e-14
        );
    }

    #[test]
    fn hessian_horosphere_limit() {
        let sp = SpaceParams::new(0.0, 1.0).unwrap();
        let r = 1e3;
        let h = sp.hessian_r(r).unwrap();
        let g = sp.metric(r).unwrap();
        assert_relative_eq!(h.xx, r * g[1], max_relative = 1e-8);
        assert_relative_eq!(h.yy, r * g[2], max_relative = 1e-8);
    }

    #[test]
    fn static_tensor_values() {
        let sp = SpaceParams::new(0.0, 1.0).unwrap();
        for e in sp.static_tensor(1.7).unwrap().eigenvalues {
            assert!(e.abs() < 1e-13);
        }
        let sp = SpaceParams::new(1.0, 1.0).unwrap();
        let st = sp.static_tensor(2.0).unwrap();
        assert!(st.eigenvalues[1].abs() < 1e-14);
        assert!((st.eigenvalues[0] + 0.25).abs() < 1e-14);
        assert!((st.eigenvalues[2] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn profile_identities_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let b: f64 = rng.gen_range(0.0..10.0);
            let rs = solve_r_s(b).unwrap();
            let r = rs * rng.gen_range(1.0001..20.0);
            let p = Profile::at(b, r);
            let lhs = 4.0 * p.f + r * p.df;
            let rhs = 4.0 - r.powi(-3);
            assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs());
            let lhs = 2.0 * p.df + 0.5 * r * p.d2f;
            assert!((lhs + 2.0 * b * r.powi(-5)).abs() <= 1e-13);
        }
    }

    #[test]
    fn negative_charge_rejected() {
        let err = SpaceParams::new(-1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("b >= 0"));
        assert!(SpaceParams::new(1.0, 0.0).is_err());
    }
}
