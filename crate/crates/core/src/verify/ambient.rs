//! Finite-difference oracle for the ambient closed forms. Only the metric is
//! taken from the closed-form code; Christoffel symbols come from central
//! differences of the metric, curvature from central differences of those.
//! The differences are the five-point fourth-order stencil: near `r_s` the
//! metric varies on the scale `r − r_s`, where a three-point stencil at
//! `h = 1e−4` already loses five digits.

use serde::Serialize;

use crate::error::Result;
use crate::melvin_space::SpaceParams;

type Mat3 = [[f64; 3]; 3];
type Gamma = [[[f64; 3]; 3]; 3];

/// Max relative error per object, each measured against the largest
/// closed-form component of that object at the same radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbientReport {
    pub b: f64,
    pub h: f64,
    pub radii: Vec<f64>,
    pub christoffels: f64,
    pub riemann: f64,
    pub ricci: f64,
    pub scalar: f64,
    pub hessian_r: f64,
    pub laplacian_r: f64,
    pub static_tensor: f64,
}

impl AmbientReport {
    pub fn max_error(&self) -> f64 {
        [
            self.christoffels,
            self.riemann,
            self.ricci,
            self.scalar,
            self.hessian_r,
            self.laplacian_r,
            self.static_tensor,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("christoffels", self.christoffels),
            ("riemann", self.riemann),
            ("ricci", self.ricci),
            ("scalar", self.scalar),
            ("hessian_r", self.hessian_r),
            ("laplacian_r", self.laplacian_r),
            ("static_tensor", self.static_tensor),
        ]
    }
}

fn metric_at(params: &SpaceParams, p: [f64; 3]) -> Mat3 {
    let d = params.metric_unchecked(p[0]);
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

fn inverse(m: &Mat3) -> Mat3 {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    inv
}

fn shifted(p: [f64; 3], axis: usize, by: f64) -> [f64; 3] {
    let mut q = p;
    q[axis] += by;
    q
}

/// Five-point central difference of a vector-valued function.
fn central<const N: usize>(f: impl Fn(f64) -> [f64; N], h: f64) -> [f64; N] {
    let (p2, p1, m1, m2) = (f(2.0 * h), f(h), f(-h), f(-2.0 * h));
    let mut d = [0.0; N];
    for i in 0..N {
        d[i] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
    }
    d
}

fn flatten9(m: Mat3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for a in 0..3 {
        for b in 0..3 {
            out[3 * a + b] = m[a][b];
        }
    }
    out
}

fn flatten27(g: Gamma) -> [f64; 27] {
    let mut out = [0.0; 27];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                out[9 * a + 3 * b + c] = g[a][b][c];
            }
        }
    }
    out
}

/// `∂_c g_ab`.
fn metric_derivative(params: &SpaceParams, p: [f64; 3], h: f64) -> [Mat3; 3] {
    let mut d = [[[0.0; 3]; 3]; 3];
    for (c, dc) in d.iter_mut().enumerate() {
        let flat = central(|s| flatten9(metric_at(params, shifted(p, c, s))), h);
        for a in 0..3 {
            for b in 0..3 {
                dc[a][b] = flat[3 * a + b];
            }
        }
    }
    d
}

/// `Γ^a_bc` from the differenced metric.
fn fd_christoffels(params: &SpaceParams, p: [f64; 3], h: f64) -> Gamma {
    let ginv = inverse(&metric_at(params, p));
    let dg = metric_derivative(params, p, h);
    let mut g = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                g[a][b][c] = (0..3)
                    .map(|d| 0.5 * ginv[a][d] * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]))
                    .sum();
            }
        }
    }
    g
}

/// `R_abcd = g_ae R^e_bcd` with
/// `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`,
/// so that `R_abab` is the sectional curvature times `|∂_a ∧ ∂_b|²`.
fn fd_riemann(params: &SpaceParams, p: [f64; 3], h: f64) -> [[Mat3; 3]; 3] {
    let gam = fd_christoffels(params, p, h);
    let dgam: Vec<Gamma> = (0..3)
        .map(|c| {
            let flat = central(
                |s| flatten27(fd_christoffels(params, shifted(p, c, s), h)),
                h,
            );
            let mut d = [[[0.0; 3]; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    for e in 0..3 {
                        d[a][b][e] = flat[9 * a + 3 * b + e];
                    }
                }
            }
            d
        })
        .collect();
    let mut up = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let mut v = dgam[c][a][d][b] - dgam[d][a][c][b];
                    for e in 0..3 {
                        v += gam[a][c][e] * gam[e][d][b] - gam[a][d][e] * gam[e][c][b];
                    }
                    up[a][b][c][d] = v;
                }
            }
        }
    }
    let g = metric_at(params, p);
    let mut low = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    low[a][b][c][d] = (0..3).map(|e| g[a][e] * up[e][b][c][d]).sum();
                }
            }
        }
    }
    low
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Compares every closed-form ambient object against the difference oracle
/// at each radius (which must lie above `r_s`). The oracle is evaluated at
/// `(r, 0.3 P_x, 0.7 P_y)`; the metric does not depend on `x, y`, but the
/// oracle differentiates in those directions as well.
pub fn ambient_fd_suite(params: &SpaceParams, radii: &[f64], h: f64) -> Result<AmbientReport> {
    let mut rep = AmbientReport {
        b: params.b,
        h,
        radii: radii.to_vec(),
        christoffels: 0.0,
        riemann: 0.0,
        ricci: 0.0,
        scalar: 0.0,
        hessian_r: 0.0,
        laplacian_r: 0.0,
        static_tensor: 0.0,
    };
    for &r in radii {
        params.check_radius(r)?;
        // Keep the nested stencils (reach 4h) clear of the soliton radius.
        params.check_radius(r - 4.0 * h)?;
        let p = [r, 0.3 * params.px, 0.7 * params.py];
        let g = metric_at(params, p);
        let ginv = inverse(&g);

        let gam = fd_christoffels(params, p, h);
        let exact_gam = params.christoffels(r)?.table();
        let scale = max_abs(exact_gam.iter().flatten().flatten());
        let diff = max_abs(
            gam.iter()
                .flatten()
                .flatten()
                .zip(exact_gam.iter().flatten().flatten())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>()
                .iter(),
        );
        rep.christoffels = rep.christoffels.max(rel(diff, scale));

        let rm = fd_riemann(params, p, h);
        let exact_rm = params.riemann(r)?.table();
        let flat_fd: Vec<f64> = rm.iter().flatten().flatten().flatten().copied().collect();
        let flat_ex: Vec<f64> = exact_rm
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .copied()
            .collect();
        let diff = max_abs(
            flat_fd
                .iter()
                .zip(&flat_ex)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>()
                .iter(),
        );
        rep.riemann = rep.riemann.max(rel(diff, max_abs(&flat_ex)));

        // Ric_bd = g^{ac} R_abcd.
        let mut ric = [[0.0; 3]; 3];
        for b in 0..3 {
            for d in 0..3 {
                ric[b][d] = (0..3)
                    .flat_map(|a| (0..3).map(move |c| (a, c)))
                    .map(|(a, c)| ginv[a][c] * rm[a][b][c][d])
                    .sum();
            }
        }
        let exact_ric = params.ricci(r)?;
        let ex = [
            [exact_ric.rr, 0.0, 0.0],
            [0.0, exact_ric.xx, 0.0],
            [0.0, 0.0, exact_ric.yy],
        ];
        let diff = max_abs(
            ric.iter()
                .flatten()
                .zip(ex.iter().flatten())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>()
                .iter(),
        );
        rep.ricci = rep.ricci.max(rel(diff, max_abs(ex.iter().flatten())));

        let scalar: f64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| ginv[a][b] * ric[a][b])
            .sum();
        let exact_scalar = params.scalar_curvature(r)?;
        rep.scalar = rep
            .scalar
            .max(rel((scalar - exact_scalar).abs(), exact_scalar.abs()));

        // ∇̄_a∇̄_b r = ∂_a∂_b r − Γ^c_ab ∂_c r = −Γ^r_ab.
        let mut hess = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                hess[a][b] = -gam[0][a][b];
            }
        }
        let exact_h = params.hessian_r(r)?;
        let ex = [
            [exact_h.rr, 0.0, 0.0],
            [0.0, exact_h.xx, 0.0],
            [0.0, 0.0, exact_h.yy],
        ];
        let diff = max_abs(
            hess.iter()
                .flatten()
                .zip(ex.iter().flatten())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>()
                .iter(),
        );
        rep.hessian_r = rep.hessian_r.max(rel(diff, max_abs(ex.iter().flatten())));
        let lap: f64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| ginv[a][b] * hess[a][b])
            .sum();
        rep.laplacian_r = rep.laplacian_r.max(rel(
            (lap - exact_h.laplacian).abs(),
            exact_h.laplacian.abs(),
        ));

        // Static tensor eigenvalues relative to ḡ (everything is diagonal here).
        let exact_st = params.static_tensor(r)?.eigenvalues;
        let st: Vec<f64> = (0..3)
            .map(|a| hess[a][a] / g[a][a] - lap - r * ric[a][a] / g[a][a])
            .collect();
        let diff = max_abs(
            st.iter()
                .zip(&exact_st)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>()
                .iter(),
        );
        let scale = max_abs(exact_st.iter()).max(exact_h.laplacian.abs());
        rep.static_tensor = rep.static_tensor.max(rel(diff, scale));
    }
    Ok(rep)
}

/// `r_s · {1.05, 1.2, 1.5, 2, 4, 10}`.
pub fn default_radii(params: &SpaceParams) -> Vec<f64> {
    [1.05, 1.2, 1.5, 2.0, 4.0, 10.0]
        .iter()
        .map(|k| k * params.r_s)
        .collect()
}
