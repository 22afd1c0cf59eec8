//! Induced metric, second fundamental form and curvatures of a graph
//! `r = s(x, y)`, evaluated pointwise from stencil derivatives.

use rayon::prelude::*;

use super::grid::GridSpec;
use super::GraphSurface;
use crate::error::{Error, Result};
use crate::melvin_space::{scalar_curvature_at, SpaceParams};

/// Relative agreement required between independent evaluations of the same
/// pointwise quantity before a field is accepted.
const POINT_CONSISTENCY_TOL: f64 = 1e-10;

/// Geometry at a single point of the graph. Symmetric 2-tensors are stored
/// as `[xx, xy, yy]`; the normal as contravariant `(r, x, y)` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    pub s: f64,
    pub sx: f64,
    pub sy: f64,
    pub f: f64,
    pub df: f64,
    pub metric: [f64; 3],
    pub inverse_metric: [f64; 3],
    pub det_g: f64,
    pub z2: f64,
    pub n: f64,
    pub normal: [f64; 3],
    pub second_form: [f64; 3],
    /// Mean curvature from the closed-form expression.
    pub h: f64,
    /// Mean curvature as the trace `g^{ij} h_ij`.
    pub h_trace: f64,
    /// `|A|²`.
    pub a2: f64,
    /// `√det g`, the area element in `dx dy`.
    pub area: f64,
    pub grad_r2: f64,
    pub grad_y2: f64,
    /// `Δr` from the closed form in terms of `H`.
    pub lap_r: f64,
    pub ric_nn: f64,
    pub ambient_scalar: f64,
}

impl PointGeometry {
    /// Evaluates all pointwise quantities from the height and its first and
    /// second partials. `r` must lie above the soliton radius.
    pub fn compute(
        params: &SpaceParams,
        s: f64,
        sx: f64,
        sy: f64,
        sxx: f64,
        sxy: f64,
        syy: f64,
    ) -> Result<Self> {
        params.check_radius(s)?;
        let r = s;
        let p = params.profile(r);
        let (f, df) = (p.f, p.df);
        let r2 = r * r;
        let r3 = r2 * r;
        let r4 = r2 * r2;
        let a = 1.0 / (r2 * f);

        let gxx = r2 + a * sx * sx;
        let gxy = a * sx * sy;
        let gyy = r2 * f + a * sy * sy;
        let det_direct = gxx * gyy - gxy * gxy;

        let z2 = 1.0 + sx * sx / (r4 * f) + sy * sy / (r4 * f * f);
        let n2 = z2 / (r2 * f);
        let n = n2.sqrt();
        let det_g = r4 * r2 * f * f * n2;
        if (det_direct - det_g).abs() > POINT_CONSISTENCY_TOL * det_g {
            return Err(Error::Consistency(format!(
                "det g = {det_direct} from components but {det_g} from r⁶F²N² at r = {r}"
            )));
        }
        let inv = 1.0 / (r4 * f * z2);
        let ginv = [
            inv * (r2 * f + a * sy * sy),
            -inv * a * sx * sy,
            inv * (r2 + a * sx * sx),
        ];

        let normal = [1.0 / n, -sx / (r4 * f * n), -sy / (r4 * f * f * n)];

        // h_ij = −ḡ(∇̄_{e_i} e_j, ν) with e_x = (s_x, 1, 0), e_y = (s_y, 0, 1).
        let gamma = params.christoffels_unchecked(r);
        let gbar = [a, r2, r2 * f];
        let ex = [sx, 1.0, 0.0];
        let ey = [sy, 0.0, 1.0];
        let second = |hess: f64, u: [f64; 3], v: [f64; 3]| {
            let mut w = gamma.contract(u, v);
            w[0] += hess;
            -(gbar[0] * w[0] * normal[0] + gbar[1] * w[1] * normal[1] + gbar[2] * w[2] * normal[2])
        };
        let hxx = second(sxx, ex, ex);
        let hxy = second(sxy, ex, ey);
        let hyy = second(syy, ey, ey);
        let h_trace = ginv[0] * hxx + 2.0 * ginv[1] * hxy + ginv[2] * hyy;

        let ff = f * f;
        let terms = [
            (-1.0 - sy * sy / (r4 * ff)) * sxx,
            (-1.0 / f - sx * sx / (r4 * ff)) * syy,
            2.0 * sx * sy * sxy / (r4 * ff),
            (4.0 / r + df / f) * sx * sx,
            (4.0 / (r * f) + 1.5 * df / ff) * sy * sy,
            2.0 * r3 * f,
            0.5 * r4 * df,
        ];
        let denom = r4 * r2 * ff * n2 * n;
        let h = terms.iter().sum::<f64>() / denom;
        let scale = terms.iter().map(|t| t.abs()).sum::<f64>() / denom;
        if (h - h_trace).abs() > POINT_CONSISTENCY_TOL * scale.max(h.abs()) {
            return Err(Error::Consistency(format!(
                "mean curvature {h} from the closed form but {h_trace} from the trace at r = {r}"
            )));
        }

        // Shape operator S = g⁻¹h; |A|² = tr S².
        let s11 = ginv[0] * hxx + ginv[1] * hxy;
        let s12 = ginv[0] * hxy + ginv[1] * hyy;
        let s21 = ginv[1] * hxx + ginv[2] * hxy;
        let s22 = ginv[1] * hxy + ginv[2] * hyy;
        let a2 = s11 * s11 + 2.0 * s12 * s21 + s22 * s22;

        let grad_r2 = r2 * f * (1.0 - 1.0 / z2);
        let grad_y2 = a - sy * sy / (r4 * r2 * ff * f * z2);
        let lap_r = -r * f.sqrt() * h / z2.sqrt()
            + 2.0 * r * f
            + 0.5 * r2 * df
            + 0.5 * r2 * df * (1.0 - 1.0 / z2)
            - 0.5 * df * sy * sy / (r2 * ff * z2);

        Ok(PointGeometry {
            s,
            sx,
            sy,
            f,
            df,
            metric: [gxx, gxy, gyy],
            inverse_metric: ginv,
            det_g,
            z2,
            n,
            normal,
            second_form: [hxx, hxy, hyy],
            h,
            h_trace,
            a2,
            area: r3 * f * n,
            grad_r2,
            grad_y2,
            lap_r,
            ric_nn: params.ricci_unchecked(r).apply(normal),
            ambient_scalar: scalar_curvature_at(params.b, r),
        })
    }

    /// Integrand of the gap: `H s⁴ F N − 2 s³ + ½`.
    pub fn gap_density(&self) -> f64 {
        self.h * self.s.powi(4) * self.f * self.n - 2.0 * self.s.powi(3) + 0.5
    }

    /// Normal speed of the flow, `s F N`.
    pub fn flow_speed(&self) -> f64 {
        self.s * self.f * self.n
    }
}

/// Value of the functional and its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValue {
    pub q: f64,
    pub gap: f64,
    /// `∫ H r dA − 2 ∬ (s³ − r_s³)`, an independent assembly of `Q`.
    pub q_cross: f64,
    /// Change of the gap when the quadrature uses every other point.
    pub quadrature_error: f64,
}

/// Pointwise geometry over the whole grid.
#[derive(Debug, Clone)]
pub struct GeometryField {
    params: SpaceParams,
    grid: GridSpec,
    points: Vec<PointGeometry>,
    gauss_k: Vec<f64>,
}

impl GeometryField {
    pub fn compute(surface: &GraphSurface) -> Result<Self> {
        surface.validate()?;
        let params = *surface.params();
        let grid = *surface.grid();
        let d = surface.derivatives();
        let s = surface.heights();
        let points = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                PointGeometry::compute(
                    &params, s[k], d.sx[k], d.sy[k], d.sxx[k], d.sxy[k], d.syy[k],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let gauss_k = brioschi(&grid, &points);
        Ok(GeometryField {
            params,
            grid,
            points,
            gauss_k,
        })
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn points(&self) -> &[PointGeometry] {
        &self.points
    }

    pub fn field<F: Fn(&PointGeometry) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(f).collect()
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        self.field(|p| p.h)
    }

    /// Gauss curvature of the induced metric (Brioschi formula on stencil
    /// derivatives of the metric components).
    pub fn gauss_curvature(&self) -> &[f64] {
        &self.gauss_k
    }

    /// `∬ f √det g dx dy`.
    pub fn integrate_area(&self, f: &[f64]) -> f64 {
        let w: Vec<f64> = f
            .iter()
            .zip(&self.points)
            .map(|(v, p)| v * p.area)
            .collect();
        self.grid.integrate(&w)
    }

    pub fn total_area(&self) -> f64 {
        self.grid.integrate(&self.field(|p| p.area))
    }

    /// Intrinsic Laplace–Beltrami operator in divergence form.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let ux = g.d_dx(u);
        let uy = g.d_dy(u);
        let (fx, fy): (Vec<f64>, Vec<f64>) = self
            .points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let gi = p.inverse_metric;
                (
                    p.area * (gi[0] * ux[k] + gi[1] * uy[k]),
                    p.area * (gi[1] * ux[k] + gi[2] * uy[k]),
                )
            })
            .unzip();
        let dfx = g.d_dx(&fx);
        let dfy = g.d_dy(&fy);
        (0..g.len())
            .map(|k| (dfx[k] + dfy[k]) / self.points[k].area)
            .collect()
    }

    /// Pointwise `R − H² + |A|² − (R̄ − 2 Ric(ν, ν))` with `R = 2K`.
    pub fn gauss_residual(&self) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.gauss_k)
            .map(|(p, k)| 2.0 * k - p.h * p.h + p.a2 - (p.ambient_scalar - 2.0 * p.ric_nn))
            .collect()
    }

    /// Stencil `Δs` minus the closed form for `Δr`.
    pub fn lap_r_residual(&self) -> Vec<f64> {
        let s: Vec<f64> = self.field(|p| p.s);
        self.laplacian(&s)
            .iter()
            .zip(&self.points)
            .map(|(l, p)| l - p.lap_r)
            .collect()
    }

    pub fn q_value(&self) -> Result<QValue> {
        let p = &self.params;
        let dens = self.field(PointGeometry::gap_density);
        let gap = self.grid.integrate(&dens);
        let q = gap + p.q_bound();

        let hr: Vec<f64> = self.field(|pt| pt.h * pt.s);
        let rs3 = p.r_s.powi(3);
        let vol: Vec<f64> = self.field(|pt| pt.s.powi(3) - rs3);
        let q_cross = self.integrate_area(&hr) - 2.0 * self.grid.integrate(&vol);
        let scale = self
            .grid
            .integrate(&self.field(|pt| (pt.h * pt.s.powi(4) * pt.f * pt.n).abs()))
            + 2.0 * self.grid.integrate(&self.field(|pt| pt.s.powi(3)));
        if (q - q_cross).abs() > 1e-10 * scale {
            return Err(Error::Consistency(format!(
                "functional {q} from the gap but {q_cross} from direct assembly"
            )));
        }

        let quadrature_error = (gap - self.coarse_integral(&dens)).abs();
        Ok(QValue {
            q,
            gap,
            q_cross,
            quadrature_error,
        })
    }

    /// Trapezoid sum using every other grid point (or all points along an
    /// axis with an odd count).
    fn coarse_integral(&self, f: &[f64]) -> f64 {
        let g = &self.grid;
        let sx = if g.nx.is_multiple_of(2) { 2 } else { 1 };
        let sy = if g.ny.is_multiple_of(2) { 2 } else { 1 };
        let mut acc = Vec::with_capacity(g.len() / (sx * sy));
        for i in (0..g.nx).step_by(sx) {
            for j in (0..g.ny).step_by(sy) {
                acc.push(f[g.idx(i, j)]);
            }
        }
        super::grid::stable_sum(acc) * g.hx() * g.hy() * (sx * sy) as f64
    }
}

fn brioschi(grid: &GridSpec, points: &[PointGeometry]) -> Vec<f64> {
    let e: Vec<f64> = points.iter().map(|p| p.metric[0]).collect();
    let f: Vec<f64> = points.iter().map(|p| p.metric[1]).collect();
    let g: Vec<f64> = points.iter().map(|p| p.metric[2]).collect();
    let (eu, ev) = (grid.d_dx(&e), grid.d_dy(&e));
    let (fu, fv) = (grid.d_dx(&f), grid.d_dy(&f));
    let (gu, gv) = (grid.d_dx(&g), grid.d_dy(&g));
    let evv = grid.d2_dy2(&e);
    let guu = grid.d2_dx2(&g);
    let fuv = grid.d2_dxdy(&f);
    (0..grid.len())
        .map(|k| {
            let (e, f, g) = (e[k], f[k], g[k]);
            let det3 = |m: [[f64; 3]; 3]| {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            };
            let m1 = [
                [
                    -0.5 * evv[k] + fuv[k] - 0.5 * guu[k],
                    0.5 * eu[k],
                    fu[k] - 0.5 * ev[k],
                ],
                [fv[k] - 0.5 * gu[k], e, f],
                [0.5 * gv[k], f, g],
            ];
            let m2 = [
                [0.0, 0.5 * ev[k], 0.5 * gu[k]],
                [0.5 * ev[k], e, f],
                [0.5 * gu[k], f, g],
            ];
            let w = e * g - f * f;
            (det3(m1) - det3(m2)) / (w * w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_surface::{StencilOrder, SurfaceGen, DEFAULT_MARGIN};

    fn cos_surface(n: usize, order: StencilOrder) -> GraphSurface {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let g = GridSpec::new(n, n, p.px, p.py, order).unwrap();
        let poly = SurfaceGen::Cos {
            r0: 2.0,
            ax: 0.15,
            kx: 1,
            ay: 0.1,
            ky: 1,
        }
        .polynomial();
        GraphSurface::from_polynomial(p, g, DEFAULT_MARGIN, &poly).unwrap()
    }

    #[test]
    fn constant_surface_closed_forms() {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let g = GridSpec::new(8, 8, p.px, p.py, StencilOrder::Fourth).unwrap();
        let r0 = 2.0;
        let geo = GraphSurface::constant(p, g, r0)
            .unwrap()
            .geometry()
            .unwrap();
        let pr = p.profile(r0);
        let expect_h = pr.f.sqrt() * (2.0 + r0 * pr.df / (2.0 * pr.f));
        for pt in geo.points() {
            assert!((pt.h - expect_h).abs() < 1e-13);
            assert!((pt.h_trace - expect_h).abs() < 1e-13);
            assert!((pt.z2 - 1.0).abs() < 1e-15);
            assert!(pt.grad_r2.abs() < 1e-15);
        }
        for k in geo.gauss_curvature() {
            assert!(k.abs() < 1e-12);
        }
        let area = geo.total_area();
        assert!((area - r0.powi(3) * pr.f * pr.f.sqrt().recip() / r0 * p.px * p.py).abs() < 1e-12);
    }

    #[test]
    fn second_form_matches_component_formulas() {
        let surf = cos_surface(32, StencilOrder::Fourth);
        let geo = surf.geometry().unwrap();
        for pt in geo.points().iter().step_by(37) {
            let (r, f, df) = (pt.s, pt.f, pt.df);
            let d = surf.derivatives();
            let k = geo.points().iter().position(|q| q == pt).unwrap();
            let (sxx, sxy, syy) = (d.sxx[k], d.sxy[k], d.syy[k]);
            let (sx, sy) = (pt.sx, pt.sy);
            let r2f_d = 2.0 * r * f + r * r * df;
            let hxx = -sxx / (r * r * f)
                + (3.0 / (r.powi(3) * f) + 0.5 * df / (r * r * f * f)) * sx * sx
                + r;
            let hyy =
                -syy / (r * r * f) + 1.5 * r2f_d / (r.powi(4) * f * f) * sy * sy + 0.5 * r2f_d;
            let hxy = -sxy / (r * r * f)
                + (1.0 / (r.powi(3) * f) + r2f_d / (r.powi(4) * f * f)) * sx * sy;
            let [a, b, c] = pt.second_form;
            assert!((a * pt.n - hxx).abs() < 1e-12 * hxx.abs().max(1.0));
            assert!((b * pt.n - hxy).abs() < 1e-12 * hxy.abs().max(1.0));
            assert!((c * pt.n - hyy).abs() < 1e-12 * hyy.abs().max(1.0));
        }
    }

    #[test]
    fn normal_is_unit_and_orthogonal() {
        let surf = cos_surface(32, StencilOrder::Fourth);
        let geo = surf.geometry().unwrap();
        let p = surf.params();
        for pt in geo.points() {
            let gb = p.metric(pt.s).unwrap();
            let nu = pt.normal;
            let norm: f64 = (0..3).map(|a| gb[a] * nu[a] * nu[a]).sum();
            assert!((norm - 1.0).abs() < 1e-13);
            for e in [[pt.sx, 1.0, 0.0], [pt.sy, 0.0, 1.0]] {
                let dot: f64 = (0..3).map(|a| gb[a] * nu[a] * e[a]).sum();
                assert!(dot.abs() < 1e-13);
            }
            assert!(
                (p.metric(pt.s).unwrap()[0].sqrt() * nu[0] - pt.z2.sqrt().recip()).abs() < 1e-13
            );
        }
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn gauss_equation_and_laplacian_converge() {
        let mut prev: Option<(f64, f64)> = None;
        for n in [16, 32, 64] {
            let geo = cos_surface(n, StencilOrder::Fourth).geometry().unwrap();
            let gauss = max_abs(&geo.gauss_residual());
            let lap = max_abs(&geo.lap_r_residual());
            if let Some((g0, l0)) = prev {
                assert!(g0 / gauss > 10.0, "gauss {g0} -> {gauss}");
                assert!(l0 / lap > 10.0, "lap {l0} -> {lap}");
            }
            prev = Some((gauss, lap));
        }
        let (g, l) = prev.unwrap();
        assert!(g < 1e-4 && l < 1e-4, "{g} {l}");
    }

    #[test]
    fn functional_of_constant_surface() {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let g = GridSpec::new(8, 8, p.px, p.py, StencilOrder::Fourth).unwrap();
        let r0 = 1.7;
        let q = GraphSurface::constant(p, g, r0)
            .unwrap()
            .q_functional()
            .unwrap();
        let pr = p.profile(r0);
        let h = pr.f.sqrt() * (2.0 + r0 * pr.df / (2.0 * pr.f));
        let n = 1.0 / (r0 * pr.f.sqrt());
        let dens = h * r0.powi(4) * pr.f * n - 2.0 * r0.powi(3) + 0.5;
        assert!((q.gap - dens * p.px * p.py).abs() < 1e-12);
        assert!((q.q - q.q_cross).abs() < 1e-12);
        assert!(q.quadrature_error < 1e-13);
    }
}
