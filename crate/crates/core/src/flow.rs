//! The weighted normal flow `∂φ/∂t = r⁻¹ν`, integrated as the scalar PDE
//! `∂s/∂t = s F N` on the height field, with diagnostics along the way.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph_surface::{csv_row, GraphSurface};

/// Relative tolerance for the two forms of the flow speed.
const SPEED_FORM_TOL: f64 = 1e-12;

pub const FLOW_CSV_HEADER: &str =
    "t,Q,gap,dQdt,z2max_minus_1,Hminus2_pos_max,c0_drift,smin_minus_rs";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub t_end: f64,
    pub dt_init: f64,
    /// CFL factor: `dt · max|∂s/∂t| ≤ safety · min(hx, hy)`.
    pub safety: f64,
    /// Record diagnostics every this many accepted steps (and at `t_end`).
    pub sample_every: usize,
    pub max_steps: usize,
    pub dt_min: f64,
    /// Allowed increase of sampled `Q`, relative to `|Q|`.
    pub mono_tol_rel: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            t_end: 30.0,
            dt_init: 1e-2,
            safety: 0.5,
            sample_every: 10,
            max_steps: 10_000_000,
            dt_min: 1e-12,
            mono_tol_rel: 1e-8,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad("t_end must be positive");
        }
        if !(self.dt_init > 0.0) {
            return bad("dt_init must be positive");
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad("safety must lie in (0, 1]");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.dt_min > 0.0) || self.dt_min > self.dt_init {
            return bad("dt_min must be positive and no larger than dt_init");
        }
        if !(self.mono_tol_rel >= 0.0) {
            return bad("mono_tol_rel must be non-negative");
        }
        Ok(())
    }
}

/// Sampled time series. All vectors have the same length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowDiagnostics {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub gap: Vec<f64>,
    /// Centered difference of the sampled `Q` (one-sided at the ends).
    pub dq_dt: Vec<f64>,
    pub z2max_minus_1: Vec<f64>,
    pub h_minus_2_pos_max: Vec<f64>,
    /// `max |s − t − c₀|` with `c₀ = mean(s) − t` at the first sample.
    pub c0_drift: Vec<f64>,
    pub smin_minus_rs: Vec<f64>,
    pub q_bound: f64,
    c0: Option<f64>,
}

impl FlowDiagnostics {
    fn new(q_bound: f64) -> Self {
        FlowDiagnostics {
            q_bound,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn c0(&self) -> Option<f64> {
        self.c0
    }

    fn record(&mut self, t: f64, surface: &GraphSurface) -> Result<()> {
        let geo = surface.geometry()?;
        let qv = geo.q_value()?;
        let s = surface.heights();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let c0 = *self.c0.get_or_insert(mean - t);
        let pts = geo.points();
        let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
        self.t.push(t);
        self.q.push(qv.q);
        self.gap.push(qv.gap);
        self.z2max_minus_1
            .push(fold_max(&mut pts.iter().map(|p| p.z2 - 1.0)));
        self.h_minus_2_pos_max
            .push(fold_max(&mut pts.iter().map(|p| (p.h - 2.0).max(0.0))));
        self.c0_drift
            .push(fold_max(&mut s.iter().map(|v| (v - t - c0).abs())));
        self.smin_minus_rs
            .push(surface.min_height() - surface.params().r_s);
        self.update_rates();
        Ok(())
    }

    fn update_rates(&mut self) {
        let n = self.t.len();
        self.dq_dt = (0..n)
            .map(|k| {
                if n < 2 {
                    return 0.0;
                }
                let (a, b) = if k == 0 {
                    (0, 1)
                } else if k == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (k - 1, k + 1)
                };
                (self.q[b] - self.q[a]) / (self.t[b] - self.t[a])
            })
            .collect();
    }

    /// First sample index `k` with `Q(t_k) > Q(t_{k−1}) + tol·|Q(t_{k−1})|`.
    pub fn first_increase(&self, tol_rel: f64) -> Option<usize> {
        (1..self.q.len()).find(|&k| self.q[k] > self.q[k - 1] + tol_rel * self.q[k - 1].abs())
    }

    /// Sample indices where `max(z²−1)` grew by more than `tol` (absolute).
    pub fn z2max_increases(&self, tol: f64) -> Vec<usize> {
        (1..self.len())
            .filter(|&k| self.z2max_minus_1[k] > self.z2max_minus_1[k - 1] + tol)
            .collect()
    }

    /// `|Q − P_x P_y (2 r_s³ − ½)|` at every sample.
    pub fn distance_to_bound(&self) -> Vec<f64> {
        self.q.iter().map(|q| (q - self.q_bound).abs()).collect()
    }

    /// Restriction to samples with `t_lo ≤ t ≤ t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.t[k] >= t_lo && self.t[k] <= t_hi)
            .collect()
    }

    /// Value of the `c₀` drift at the sample closest to `t`.
    pub fn c0_drift_near(&self, t: f64) -> Option<f64> {
        (0..self.len())
            .min_by(|&a, &b| (self.t[a] - t).abs().total_cmp(&(self.t[b] - t).abs()))
            .map(|k| self.c0_drift[k])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FLOW_CSV_HEADER}")?;
        for k in 0..self.len() {
            let row = [
                self.t[k],
                self.q[k],
                self.gap[k],
                self.dq_dt[k],
                self.z2max_minus_1[k],
                self.h_minus_2_pos_max[k],
                self.c0_drift[k],
                self.smin_minus_rs[k],
            ];
            writeln!(out, "{}", csv_row(&row))?;
        }
        Ok(())
    }
}

/// Pointwise speed `s F N`, checked against `F^{1/2} z`.
pub fn flow_rhs(surface: &GraphSurface) -> Result<Vec<f64>> {
    let params = surface.params();
    let grid = surface.grid();
    let s = surface.heights();
    let sx = grid.d_dx(s);
    let sy = grid.d_dy(s);
    (0..s.len())
        .into_par_iter()
        .map(|k| {
            let r = s[k];
            params.check_radius(r)?;
            let f = params.profile(r).f;
            let r4f = r.powi(4) * f;
            let z2 = 1.0 + sx[k] * sx[k] / r4f + sy[k] * sy[k] / (r4f * f);
            let n = (z2 / (r * r * f)).sqrt();
            let speed = r * f * n;
            let alt = f.sqrt() * z2.sqrt();
            if (speed - alt).abs() > SPEED_FORM_TOL * alt {
                return Err(Error::Consistency(format!(
                    "flow speed s F N = {speed} differs from F^(1/2) z = {alt} at r = {r}"
                )));
            }
            Ok(speed)
        })
        .collect()
}

fn axpy(s: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    s.iter().zip(k).map(|(s, k)| s + a * k).collect()
}

/// One classical RK4 step of size `dt`.
pub fn flow_step(surface: &GraphSurface, dt: f64) -> Result<GraphSurface> {
    if !(dt > 0.0) {
        return Err(Error::config(format!(
            "time step must be positive, got {dt}"
        )));
    }
    rk4(surface, dt, &flow_rhs(surface)?)
}

fn rk4(surface: &GraphSurface, dt: f64, k1: &[f64]) -> Result<GraphSurface> {
    let s = surface.heights();
    let k2 = flow_rhs(&surface.with_heights(axpy(s, 0.5 * dt, k1))?)?;
    let k3 = flow_rhs(&surface.with_heights(axpy(s, 0.5 * dt, &k2))?)?;
    let k4 = flow_rhs(&surface.with_heights(axpy(s, dt, &k3))?)?;
    let next = (0..s.len())
        .map(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    surface.with_heights(next)
}

/// A failed run, with everything sampled before the failure.
#[derive(Debug)]
pub struct FlowFailure {
    pub error: Error,
    pub diagnostics: FlowDiagnostics,
}

impl From<FlowFailure> for Error {
    fn from(f: FlowFailure) -> Self {
        f.error
    }
}

impl std::fmt::Display for FlowFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} samples)",
            self.error,
            self.diagnostics.len()
        )
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub diagnostics: FlowDiagnostics,
    pub surface: GraphSurface,
    pub steps: usize,
}

/// Integrates from `t = 0` to `config.t_end`, sampling diagnostics, and fails
/// if the sampled `Q` ever increases beyond the monotonicity tolerance.
#[allow(clippy::result_large_err)]
pub fn flow_run(
    surface: &GraphSurface,
    config: &FlowConfig,
) -> std::result::Result<FlowRun, FlowFailure> {
    let mut diag = FlowDiagnostics::new(surface.params().q_bound());
    let fail = |error: Error, diagnostics: FlowDiagnostics| FlowFailure { error, diagnostics };
    if let Err(e) = config.validate() {
        return Err(fail(e, diag));
    }
    let grid = *surface.grid();
    let h_min = grid.hx().min(grid.hy());
    let mut current = surface.clone();
    let mut t = 0.0;
    let mut dt = config.dt_init;
    let mut steps = 0;
    if let Err(e) = diag.record(t, &current) {
        return Err(fail(e, diag));
    }

    while t < config.t_end {
        if steps >= config.max_steps {
            let e = Error::Breakdown {
                t,
                reason: format!("reached max_steps = {} before t_end", config.max_steps),
            };
            return Err(fail(e, diag));
        }
        let k1 = match flow_rhs(&current) {
            Ok(k) => k,
            Err(e) => return Err(fail(e, diag)),
        };
        let max_speed = k1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cap = if max_speed > 0.0 {
            config.safety * h_min / max_speed
        } else {
            f64::INFINITY
        };
        let mut trial = dt.min(cap).min(config.t_end - t);
        let next = loop {
            match rk4(&current, trial, &k1) {
                Ok(s) => break s,
                Err(e) => {
                    trial *= 0.5;
                    if trial < config.dt_min {
                        let (k, v) = current
                            .heights()
                            .iter()
                            .copied()
                            .enumerate()
                            .min_by(|a, b| a.1.total_cmp(&b.1))
                            .unwrap_or((0, f64::NAN));
                        let e = Error::Breakdown {
                            t,
                            reason: format!(
                                "step rejected below dt_min = {} near grid point ({}, {}) where s = {v}: {e}",
                                config.dt_min,
                                k / grid.ny,
                                k % grid.ny
                            ),
                        };
                        return Err(fail(e, diag));
                    }
                }
            }
        };
        // Land exactly on t_end when the remaining interval is tiny.
        t = if config.t_end - (t + trial) < 1e-12 * config.t_end {
            config.t_end
        } else {
            t + trial
        };
        current = next;
        steps += 1;
        dt = (2.0 * trial).max(config.dt_init.min(cap));
        if steps % config.sample_every == 0 || t >= config.t_end {
            if let Err(e) = diag.record(t, &current) {
                return Err(fail(e, diag));
            }
            if let Some(k) = diag.first_increase(config.mono_tol_rel) {
                let e = Error::Property(format!(
                    "Q increased from {} at t = {} to {} at t = {}",
                    diag.q[k - 1],
                    diag.t[k - 1],
                    diag.q[k],
                    diag.t[k]
                ));
                return Err(fail(e, diag));
            }
        }
    }
    Ok(FlowRun {
        diagnostics: diag,
        surface: current,
        steps,
    })
}

/// Least-squares fit of `log y = slope · log(1 + t) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub samples: usize,
}

pub fn fit_power_law(t: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if t.len() != y.len() {
        return Err(Error::config("time and value series differ in length"));
    }
    if t.len() < 3 {
        return Err(Error::config(format!(
            "need at least 3 samples to fit, got {}",
            t.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::domain(format!(
            "power-law fit needs positive values, got {v}"
        )));
    }
    let xs: Vec<f64> = t.iter().map(|t| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = y.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::config(
            "degenerate fitting window: all times coincide",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(PowerLawFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        samples: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Exponent of `max(z² − 1)`.
    pub z2: PowerLawFit,
    /// Exponent of `max(H − 2)_+ / (1 + log(1 + t))`.
    pub h_minus_2: PowerLawFit,
}

/// Fits the decay exponents on samples with `t_lo ≤ t ≤ t_hi`.
pub fn fit_decay(diag: &FlowDiagnostics, t_lo: f64, t_hi: f64) -> Result<DecayFit> {
    if !(t_hi > t_lo) {
        return Err(Error::config(format!(
            "empty fitting window [{t_lo}, {t_hi}]"
        )));
    }
    let idx = diag.window(t_lo, t_hi);
    let t: Vec<f64> = idx.iter().map(|&k| diag.t[k]).collect();
    let z: Vec<f64> = idx.iter().map(|&k| diag.z2max_minus_1[k]).collect();
    let h: Vec<f64> = idx
        .iter()
        .map(|&k| diag.h_minus_2_pos_max[k] / (1.0 + (1.0 + diag.t[k]).ln()))
        .collect();
    Ok(DecayFit {
        z2: fit_power_law(&t, &z)?,
        h_minus_2: fit_power_law(&t, &h)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_surface::{GridSpec, StencilOrder, SurfaceGen, DEFAULT_MARGIN};
    use crate::melvin_space::SpaceParams;

    fn torus(b: f64, n: usize, r0: f64) -> GraphSurface {
        let p = SpaceParams::new(b, 1.0).unwrap();
        let g = GridSpec::new(n, n, p.px, p.py, StencilOrder::Fourth).unwrap();
        GraphSurface::constant(p, g, r0).unwrap()
    }

    #[test]
    fn rhs_on_coordinate_torus() {
        let surf = torus(1.0, 8, 2.0);
        let f0 = surf.params().profile(2.0).f;
        for v in flow_rhs(&surf).unwrap() {
            assert!((v - f0.sqrt()).abs() < 1e-15);
        }
        let near = torus(0.0, 8, 1.0 + 1e-3);
        let expect = (1.0 - (1.0_f64 + 1e-3).powi(-3)).sqrt();
        assert!((flow_rhs(&near).unwrap()[0] - expect).abs() < 1e-14);
        assert!((expect - 0.0547).abs() < 1e-4);
    }

    #[test]
    fn constant_stays_constant() {
        let surf = torus(1.0, 8, 2.0);
        let next = flow_step(&surf, 0.1).unwrap();
        let h = next.heights();
        assert!(h.iter().all(|v| (v - h[0]).abs() < 1e-15));
        assert!(h[0] > 2.0);
    }

    fn ode_oracle(s0: f64, t: f64) -> f64 {
        // Fine RK4 on ds/dt = (1 − s⁻³)^{1/2}, b = 0.
        let f = |s: f64| (1.0 - s.powi(-3)).sqrt();
        let n = 100_000;
        let h = t / n as f64;
        let mut s = s0;
        for _ in 0..n {
            let k1 = f(s);
            let k2 = f(s + 0.5 * h * k1);
            let k3 = f(s + 0.5 * h * k2);
            let k4 = f(s + h * k3);
            s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        s
    }

    #[test]
    fn torus_matches_ode_oracle() {
        let surf = torus(0.0, 8, 2.0);
        let cfg = FlowConfig {
            t_end: 1.0,
            dt_init: 1e-2,
            ..FlowConfig::default()
        };
        let run = flow_run(&surf, &cfg).unwrap();
        let want = ode_oracle(2.0, 1.0);
        assert!((run.surface.heights()[0] - want).abs() < 1e-8);
        let q0 = run.diagnostics.q[0];
        for q in &run.diagnostics.q {
            assert!((q - q0).abs() < 1e-11 * q0.abs().max(1.0));
            assert!((q - surf.params().q_bound()).abs() < 1e-11);
        }
    }

    #[test]
    fn y_symmetry_is_preserved() {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let g = GridSpec::new(16, 16, p.px, p.py, StencilOrder::Fourth).unwrap();
        let poly = SurfaceGen::Cos {
            r0: 2.0,
            ax: 0.2,
            kx: 1,
            ay: 0.0,
            ky: 0,
        }
        .polynomial();
        let mut surf = GraphSurface::from_polynomial(p, g, DEFAULT_MARGIN, &poly).unwrap();
        for _ in 0..100 {
            surf = flow_step(&surf, 5e-3).unwrap();
        }
        let s = surf.heights();
        for i in 0..g.nx {
            for j in 0..g.ny {
                assert!((s[g.idx(i, j)] - s[g.idx(i, 0)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn short_run_is_monotone_and_z_decreases() {
        let p = SpaceParams::new(1.0, 1.0).unwrap();
        let g = GridSpec::new(32, 32, p.px, p.py, StencilOrder::Fourth).unwrap();
        let poly = SurfaceGen::Random {
            r0: 2.0,
            amp: 0.15,
            bandlimit: 2,
            seed: 5,
        }
        .polynomial();
        let surf = GraphSurface::from_polynomial(p, g, DEFAULT_MARGIN, &poly).unwrap();
        let cfg = FlowConfig {
            t_end: 2.0,
            sample_every: 5,
            ..FlowConfig::default()
        };
        let d = flow_run(&surf, &cfg).unwrap().diagnostics;
        assert!(d.first_increase(1e-8).is_none());
        assert!(d.gap.last().unwrap() < &d.gap[0]);
        assert!(d.z2max_increases(1e-10).is_empty());
        assert!(d.dq_dt.iter().all(|v| *v <= 1e-8));
        let mut csv = Vec::new();
        d.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(FLOW_CSV_HEADER));
        assert_eq!(text.lines().count(), d.len() + 1);
    }

    #[test]
    fn fitter_recovers_synthetic_exponent() {
        let t: Vec<f64> = (0..50).map(|k| 10.0 + k as f64 * 0.4).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.7 * (1.0 + t).powf(-4.0)).collect();
        let fit = fit_power_law(&t, &y).unwrap();
        assert!((fit.slope + 4.0).abs() < 1e-6);
        assert!(fit_power_law(&t[..2], &y[..2]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).is_err());
        assert!(fit_power_law(&[1.0, 1.0, 1.0], &[1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        for bad in [
            FlowConfig {
                t_end: 0.0,
                ..Default::default()
            },
            FlowConfig {
                dt_init: -1.0,
                ..Default::default()
            },
            FlowConfig {
                safety: 1.5,
                ..Default::default()
            },
            FlowConfig {
                sample_every: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
