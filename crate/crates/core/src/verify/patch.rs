//! Lagrangian patch: a torus of particles in chart coordinates moved with
//! velocity `ρν`, on which the evolution equations of the induced geometry
//! are checked by centered time differences.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_surface::{GraphSurface, GridSpec};
use crate::melvin_space::SpaceParams;

/// Normal speed `ρ` as a function of ambient position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Speed {
    /// `ρ = 0`.
    Zero,
    /// `ρ = r⁻¹`, the speed of the weighted normal flow.
    InverseR,
    /// `ρ = (1 + 0.25 sin(2πx/P_x) cos(2πy/P_y)) / r`.
    Generic,
}

impl Speed {
    pub fn eval(&self, params: &SpaceParams, r: f64, x: f64, y: f64) -> f64 {
        match self {
            Speed::Zero => 0.0,
            Speed::InverseR => 1.0 / r,
            Speed::Generic => {
                (1.0 + 0.25 * (2.0 * PI * x / params.px).sin() * (2.0 * PI * y / params.py).cos())
                    / r
            }
        }
    }
}

/// Particles `φ(u, v) = (r, u + ξ, v + η)` on a periodic parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPatch {
    pub params: SpaceParams,
    pub grid: GridSpec,
    pub r: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub speed: Speed,
    pub margin: f64,
}

/// Geometry of the patch at one particle. Parameter-space tensors are
/// `[uu, uv, vv]`; ambient vectors are contravariant `(r, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchPoint {
    pub pos: [f64; 3],
    pub e: [[f64; 3]; 2],
    pub metric: [f64; 3],
    pub inverse_metric: [f64; 3],
    pub area: f64,
    pub normal: [f64; 3],
    pub h: [f64; 3],
    /// `h_i^k h_kj`.
    pub hh: [f64; 3],
    pub mean: f64,
    pub a2: f64,
    pub rho: f64,
    /// Tangential gradient of `ρ` as an ambient vector.
    pub grad_rho: [f64; 3],
    pub hess_rho: [f64; 3],
    pub lap_rho: f64,
    pub ric_nn: f64,
    /// `Rm(e_i, ν, e_j, ν)`.
    pub rm_nn: [f64; 3],
}

fn sym(m: [f64; 3], i: usize, j: usize) -> f64 {
    m[i + j]
}

impl LagrangianPatch {
    /// Particles placed on the graph of `surface`, with no initial
    /// tangential displacement.
    pub fn from_surface(surface: &GraphSurface, speed: Speed) -> Self {
        let n = surface.grid().len();
        LagrangianPatch {
            params: *surface.params(),
            grid: *surface.grid(),
            r: surface.heights().to_vec(),
            xi: vec![0.0; n],
            eta: vec![0.0; n],
            speed,
            margin: surface.margin(),
        }
    }

    pub fn position(&self, k: usize) -> [f64; 3] {
        let (i, j) = (k / self.grid.ny, k % self.grid.ny);
        [
            self.r[k],
            self.grid.x(i) + self.xi[k],
            self.grid.y(j) + self.eta[k],
        ]
    }

    fn check_chart(&self) -> Result<()> {
        let limit = self.params.r_s + self.margin;
        for (k, &r) in self.r.iter().enumerate() {
            if !(r > limit) || !r.is_finite() {
                return Err(Error::BelowMargin {
                    i: k / self.grid.ny,
                    j: k % self.grid.ny,
                    value: r,
                    limit,
                });
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Vec<PatchPoint>> {
        self.check_chart()?;
        let g = &self.grid;
        let n = g.len();
        let comps = [&self.r, &self.xi, &self.eta];
        // Tangent vectors and second parameter derivatives of φ.
        let du: Vec<Vec<f64>> = comps.iter().map(|c| g.d_dx(c)).collect();
        let dv: Vec<Vec<f64>> = comps.iter().map(|c| g.d_dy(c)).collect();
        let duu: Vec<Vec<f64>> = comps.iter().map(|c| g.d2_dx2(c)).collect();
        let duv: Vec<Vec<f64>> = comps.iter().map(|c| g.d2_dxdy(c)).collect();
        let dvv: Vec<Vec<f64>> = comps.iter().map(|c| g.d2_dy2(c)).collect();

        let pos: Vec<[f64; 3]> = (0..n).map(|k| self.position(k)).collect();
        let rho: Vec<f64> = pos
            .iter()
            .map(|p| self.speed.eval(&self.params, p[0], p[1], p[2]))
            .collect();
        let (rho_u, rho_v) = (g.d_dx(&rho), g.d_dy(&rho));
        let (rho_uu, rho_uv, rho_vv) = (g.d2_dx2(&rho), g.d2_dxdy(&rho), g.d2_dy2(&rho));

        let mut e_all = Vec::with_capacity(n);
        let mut metric = Vec::with_capacity(n);
        for k in 0..n {
            let eu = [du[0][k], 1.0 + du[1][k], du[2][k]];
            let ev = [dv[0][k], dv[1][k], 1.0 + dv[2][k]];
            let gb = self.params.metric_unchecked(pos[k][0]);
            let dot = |a: [f64; 3], b: [f64; 3]| {
                gb[0] * a[0] * b[0] + gb[1] * a[1] * b[1] + gb[2] * a[2] * b[2]
            };
            e_all.push([eu, ev]);
            metric.push([dot(eu, eu), dot(eu, ev), dot(ev, ev)]);
        }
        // Intrinsic Christoffels from stencil derivatives of g.
        let gcomp: Vec<Vec<f64>> = (0..3)
            .map(|c| metric.iter().map(|m| m[c]).collect())
            .collect();
        let gu: Vec<Vec<f64>> = gcomp.iter().map(|c| g.d_dx(c)).collect();
        let gv: Vec<Vec<f64>> = gcomp.iter().map(|c| g.d_dy(c)).collect();

        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let p = pos[k];
            let [eu, ev] = e_all[k];
            let m = metric[k];
            let det = m[0] * m[2] - m[1] * m[1];
            let inv = [m[2] / det, -m[1] / det, m[0] / det];
            let gb = self.params.metric_unchecked(p[0]);
            let dot = |a: [f64; 3], b: [f64; 3]| {
                gb[0] * a[0] * b[0] + gb[1] * a[1] * b[1] + gb[2] * a[2] * b[2]
            };

            // Covector normal e_u × e_v, raised and normalized, with ν^r > 0.
            let nc = [
                eu[1] * ev[2] - eu[2] * ev[1],
                eu[2] * ev[0] - eu[0] * ev[2],
                eu[0] * ev[1] - eu[1] * ev[0],
            ];
            let mut nu = [nc[0] / gb[0], nc[1] / gb[1], nc[2] / gb[2]];
            let len = dot(nu, nu).sqrt();
            let sign = if nu[0] >= 0.0 { 1.0 } else { -1.0 };
            for c in &mut nu {
                *c *= sign / len;
            }

            let gamma = self.params.christoffels_unchecked(p[0]);
            let second = |d2: [f64; 3], a: [f64; 3], b: [f64; 3]| {
                let mut w = gamma.contract(a, b);
                for c in 0..3 {
                    w[c] += d2[c];
                }
                -dot(w, nu)
            };
            let h = [
                second([duu[0][k], duu[1][k], duu[2][k]], eu, eu),
                second([duv[0][k], duv[1][k], duv[2][k]], eu, ev),
                second([dvv[0][k], dvv[1][k], dvv[2][k]], ev, ev),
            ];
            // Mixed tensors.
            let mut shape = [[0.0; 2]; 2]; // S^i_j = g^{ik} h_kj
            for i in 0..2 {
                for j in 0..2 {
                    shape[i][j] = (0..2).map(|l| sym(inv, i, l) * sym(h, l, j)).sum();
                }
            }
            let mut hh = [0.0; 3];
            for (slot, (i, j)) in [(0, 0), (0, 1), (1, 1)].iter().copied().enumerate() {
                hh[slot] = (0..2).map(|l| sym(h, i, l) * shape[l][j]).sum();
            }
            let mean = shape[0][0] + shape[1][1];
            let a2 = shape[0][0] * shape[0][0]
                + 2.0 * shape[0][1] * shape[1][0]
                + shape[1][1] * shape[1][1];

            let dg = [
                [gu[0][k], gu[1][k], gu[2][k]],
                [gv[0][k], gv[1][k], gv[2][k]],
            ];
            // Γ_lij (lowered first index) and Γ^m_ij.
            let low = |l: usize, i: usize, j: usize| {
                0.5 * (sym(dg[i], j, l) + sym(dg[j], i, l) - sym(dg[l], i, j))
            };
            let drho = [rho_u[k], rho_v[k]];
            let d2rho = [rho_uu[k], rho_uv[k], rho_vv[k]];
            let mut hess = [0.0; 3];
            for (slot, (i, j)) in [(0, 0), (0, 1), (1, 1)].iter().copied().enumerate() {
                let mut v = sym(d2rho, i, j);
                for mm in 0..2 {
                    let gam: f64 = (0..2).map(|l| sym(inv, mm, l) * low(l, i, j)).sum();
                    v -= gam * drho[mm];
                }
                hess[slot] = v;
            }
            let lap = inv[0] * hess[0] + 2.0 * inv[1] * hess[1] + inv[2] * hess[2];
            let gi = [
                inv[0] * drho[0] + inv[1] * drho[1],
                inv[1] * drho[0] + inv[2] * drho[1],
            ];
            let grad = [
                gi[0] * eu[0] + gi[1] * ev[0],
                gi[0] * eu[1] + gi[1] * ev[1],
                gi[0] * eu[2] + gi[1] * ev[2],
            ];
            let rm = self.params.riemann_unchecked(p[0]);
            out.push(PatchPoint {
                pos: p,
                e: [eu, ev],
                metric: m,
                inverse_metric: inv,
                area: det.sqrt(),
                normal: nu,
                h,
                hh,
                mean,
                a2,
                rho: rho[k],
                grad_rho: grad,
                hess_rho: hess,
                lap_rho: lap,
                ric_nn: self.params.ricci_unchecked(p[0]).apply(nu),
                rm_nn: [
                    rm.contract(eu, nu, eu, nu),
                    rm.contract(eu, nu, ev, nu),
                    rm.contract(ev, nu, ev, nu),
                ],
            });
        }
        Ok(out)
    }

    /// `dφ/dt = ρν` at every particle.
    pub fn velocity(&self) -> Result<[Vec<f64>; 3]> {
        let geo = self.geometry()?;
        let mut v = [Vec::new(), Vec::new(), Vec::new()];
        for p in &geo {
            for c in 0..3 {
                v[c].push(p.rho * p.normal[c]);
            }
        }
        Ok(v)
    }

    fn advanced(&self, dt: f64, k: &[Vec<f64>; 3]) -> Self {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a + dt * b).collect();
        LagrangianPatch {
            r: add(&self.r, &k[0]),
            xi: add(&self.xi, &k[1]),
            eta: add(&self.eta, &k[2]),
            ..self.clone()
        }
    }
}

/// Samples of the patch at `t₀ + k·dt`.
#[derive(Debug, Clone)]
pub struct PatchTrajectory {
    pub dt: f64,
    pub samples: Vec<LagrangianPatch>,
}

/// RK4 in time, recording every step.
pub fn evolve_patch(patch: &LagrangianPatch, dt: f64, steps: usize) -> Result<PatchTrajectory> {
    if !(dt > 0.0) {
        return Err(Error::config(format!(
            "patch time step must be positive, got {dt}"
        )));
    }
    patch.check_chart()?;
    let mut samples = vec![patch.clone()];
    let mut cur = patch.clone();
    for _ in 0..steps {
        let k1 = cur.velocity()?;
        let k2 = cur.advanced(0.5 * dt, &k1).velocity()?;
        let k3 = cur.advanced(0.5 * dt, &k2).velocity()?;
        let k4 = cur.advanced(dt, &k3).velocity()?;
        let mut comb = [Vec::new(), Vec::new(), Vec::new()];
        for c in 0..3 {
            comb[c] = (0..k1[c].len())
                .map(|i| (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]) / 6.0)
                .collect();
        }
        cur = cur.advanced(dt, &comb);
        cur.check_chart()?;
        samples.push(cur.clone());
    }
    Ok(PatchTrajectory { dt, samples })
}

/// Max absolute residual of each evolution identity at the middle sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionResiduals {
    /// `∂g_ij/∂t − 2ρh_ij`.
    pub metric: f64,
    /// `∂√g/∂t − ρH√g`.
    pub area: f64,
    /// `ḡ(D_tν + ∇ρ, e_i)`.
    pub normal: f64,
    /// `∂h_ij/∂t + ∇_i∇_jρ + ρ Rm(e_i,ν,e_j,ν) − ρ h_i^k h_kj`.
    pub second_form: f64,
    /// `∂H/∂t + Δρ + ρ Ric(ν,ν) + ρ|A|²`.
    pub mean_curvature: f64,
}

impl EvolutionResiduals {
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("metric", self.metric),
            ("area", self.area),
            ("normal", self.normal),
            ("second_form", self.second_form),
            ("mean_curvature", self.mean_curvature),
        ]
    }

    pub fn max(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

pub fn check_evolution_identities(traj: &PatchTrajectory) -> Result<EvolutionResiduals> {
    let n = traj.samples.len();
    if n < 3 {
        return Err(Error::config(format!("need at least 3 samples, got {n}")));
    }
    let m = n / 2;
    let before = traj.samples[m - 1].geometry()?;
    let mid = traj.samples[m].geometry()?;
    let after = traj.samples[m + 1].geometry()?;
    let params = traj.samples[m].params;
    let two_dt = 2.0 * traj.dt;
    let mut res = EvolutionResiduals {
        metric: 0.0,
        area: 0.0,
        normal: 0.0,
        second_form: 0.0,
        mean_curvature: 0.0,
    };
    for k in 0..mid.len() {
        let (a, p, b) = (&before[k], &mid[k], &after[k]);
        let rho = p.rho;
        for c in 0..3 {
            let dg = (b.metric[c] - a.metric[c]) / two_dt;
            res.metric = res.metric.max((dg - 2.0 * rho * p.h[c]).abs());
            let dh = (b.h[c] - a.h[c]) / two_dt;
            let rhs = -p.hess_rho[c] - rho * p.rm_nn[c] + rho * p.hh[c];
            res.second_form = res.second_form.max((dh - rhs).abs());
        }
        let darea = (b.area - a.area) / two_dt;
        res.area = res.area.max((darea - rho * p.mean * p.area).abs());
        let dmean = (b.mean - a.mean) / two_dt;
        res.mean_curvature = res
            .mean_curvature
            .max((dmean + p.lap_rho + rho * p.ric_nn + rho * p.a2).abs());

        let vel = [rho * p.normal[0], rho * p.normal[1], rho * p.normal[2]];
        let corr = params
            .christoffels_unchecked(p.pos[0])
            .contract(vel, p.normal);
        let gb = params.metric_unchecked(p.pos[0]);
        let mut w = [0.0; 3];
        for c in 0..3 {
            w[c] = (b.normal[c] - a.normal[c]) / two_dt + corr[c] + p.grad_rho[c];
        }
        for e in p.e {
            let v: f64 = (0..3).map(|c| gb[c] * w[c] * e[c]).sum();
            res.normal = res.normal.max(v.abs());
        }
    }
    Ok(res)
}

/// Residuals at `(dt, n)` and `(dt/2, 2n)` with the empirical order of each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionConvergence {
    pub speed: Speed,
    pub coarse: EvolutionResiduals,
    pub fine: EvolutionResiduals,
    pub orders: Vec<(String, f64)>,
}

impl EvolutionConvergence {
    pub fn min_order(&self) -> f64 {
        self.orders
            .iter()
            .fold(f64::INFINITY, |m, (_, o)| m.min(*o))
    }
}

/// Runs the identities on a patch started from `make_surface(n)` for
/// `(dt, n)` and `(dt/2, 2n)`. The middle sample sits at a fixed time
/// `t_mid` in both runs.
pub fn evolution_convergence(
    make_surface: impl Fn(usize) -> Result<GraphSurface>,
    speed: Speed,
    n: usize,
    dt: f64,
    t_mid: f64,
) -> Result<EvolutionConvergence> {
    let run = |n: usize, dt: f64| -> Result<EvolutionResiduals> {
        let patch = LagrangianPatch::from_surface(&make_surface(n)?, speed);
        let steps_to_mid = (t_mid / dt).round() as usize;
        let start = if steps_to_mid > 0 {
            evolve_patch(&patch, dt, steps_to_mid - 1)?
                .samples
                .pop()
                .unwrap_or(patch)
        } else {
            patch
        };
        check_evolution_identities(&evolve_patch(&start, dt, 2)?)
    };
    let coarse = run(n, dt)?;
    let fine = run(2 * n, 0.5 * dt)?;
    let orders = coarse
        .entries()
        .iter()
        .zip(fine.entries())
        .map(|((name, c), (_, f))| (name.to_string(), (c / f).log2()))
        .collect();
    Ok(EvolutionConvergence {
        speed,
        coarse,
        fine,
        orders,
    })
}
