//! Uniform periodic grids over the torus and central finite-difference stencils.
//!
//! Fields are stored row-major with the x index outermost: the value at
//! `(x_i, y_j)` lives at `i * ny + j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest resolution accepted along either axis.
pub const MIN_POINTS: usize = 8;

/// Accuracy order of the central stencils.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    #[default]
    Fourth,
    Sixth,
}

impl StencilOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            6 => Ok(StencilOrder::Sixth),
            other => Err(Error::config(format!(
                "stencil order must be 2, 4 or 6, got {other}"
            ))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
            StencilOrder::Sixth => 6,
        }
    }

    /// Weights `c_k` of `f′ ≈ Σ c_k (f_{+k} − f_{−k}) / h`.
    fn first(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[0.5],
            StencilOrder::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[0.75, -0.15, 1.0 / 60.0],
        }
    }

    /// Weights `c_k` of `f″ ≈ Σ c_k ((f_{+k} − f_0) + (f_{−k} − f_0)) / h²`.
    fn second(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[1.0],
            StencilOrder::Fourth => &[4.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[1.5, -0.15, 1.0 / 90.0],
        }
    }

    pub fn half_width(self) -> usize {
        self.first().len()
    }
}

/// First derivative of a periodic 1-D sample with spacing `h`.
pub fn diff1_periodic(f: &[f64], h: f64, order: StencilOrder) -> Vec<f64> {
    let n = f.len();
    let w = order.first();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (k, c) in w.iter().enumerate() {
                let k = k + 1;
                acc += c * (f[(i + k) % n] - f[(i + n * k - k) % n]);
            }
            acc / h
        })
        .collect()
}

/// Second derivative of a periodic 1-D sample with spacing `h`.
pub fn diff2_periodic(f: &[f64], h: f64, order: StencilOrder) -> Vec<f64> {
    let n = f.len();
    let w = order.second();
    (0..n)
        .map(|i| {
            let f0 = f[i];
            let mut acc = 0.0;
            for (k, c) in w.iter().enumerate() {
                let k = k + 1;
                acc += c * ((f[(i + k) % n] - f0) + (f[(i + n * k - k) % n] - f0));
            }
            acc / (h * h)
        })
        .collect()
}

/// Compensated summation in a fixed order, so totals are bit-reproducible.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Resolution and periods of a periodic grid on `[0, P_x) × [0, P_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub px: f64,
    pub py: f64,
    pub order: StencilOrder,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, px: f64, py: f64, order: StencilOrder) -> Result<Self> {
        if nx < MIN_POINTS || ny < MIN_POINTS {
            return Err(Error::config(format!(
                "grid must have at least {MIN_POINTS} points per axis, got {nx} x {ny}"
            )));
        }
        if !(px > 0.0 && py > 0.0) || !px.is_finite() || !py.is_finite() {
            return Err(Error::config(format!(
                "grid periods must be positive, got {px} x {py}"
            )));
        }
        Ok(GridSpec {
            nx,
            ny,
            px,
            py,
            order,
        })
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.px / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.py / self.ny as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    /// Same periods and stencil at a different resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Result<Self> {
        GridSpec::new(nx, ny, self.px, self.py, self.order)
    }

    pub fn with_order(&self, order: StencilOrder) -> Self {
        GridSpec { order, ..*self }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn sample<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(self.ny)
            .enumerate()
            .for_each(|(i, row)| {
                let x = self.x(i);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(x, self.y(j));
                }
            });
        out
    }

    fn check_len(&self, f: &[f64]) {
        assert_eq!(f.len(), self.len(), "field length does not match the grid");
    }

    /// `∂f/∂x`.
    pub fn d_dx(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        let (nx, ny) = (self.nx, self.ny);
        let w = self.order.first();
        let h = self.hx();
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, c) in w.iter().enumerate() {
                    let k = k + 1;
                    let ip = (i + k) % nx;
                    let im = (i + nx * k - k) % nx;
                    acc += c * (f[ip * ny + j] - f[im * ny + j]);
                }
                *v = acc / h;
            }
        });
        out
    }

    /// `∂f/∂y`.
    pub fn d_dy(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        let ny = self.ny;
        let w = self.order.first();
        let h = self.hy();
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(ny)
            .zip(f.par_chunks(ny))
            .for_each(|(row, src)| {
                for (j, v) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, c) in w.iter().enumerate() {
                        let k = k + 1;
                        acc += c * (src[(j + k) % ny] - src[(j + ny * k - k) % ny]);
                    }
                    *v = acc / h;
                }
            });
        out
    }

    /// `∂²f/∂x²`.
    pub fn d2_dx2(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        let (nx, ny) = (self.nx, self.ny);
        let w = self.order.second();
        let h2 = self.hx() * self.hx();
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                let f0 = f[i * ny + j];
                let mut acc = 0.0;
                for (k, c) in w.iter().enumerate() {
                    let k = k + 1;
                    let ip = (i + k) % nx;
                    let im = (i + nx * k - k) % nx;
                    acc += c * ((f[ip * ny + j] - f0) + (f[im * ny + j] - f0));
                }
                *v = acc / h2;
            }
        });
        out
    }

    /// `∂²f/∂y²`.
    pub fn d2_dy2(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        let ny = self.ny;
        let w = self.order.second();
        let h2 = self.hy() * self.hy();
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(ny)
            .zip(f.par_chunks(ny))
            .for_each(|(row, src)| {
                for (j, v) in row.iter_mut().enumerate() {
                    let f0 = src[j];
                    let mut acc = 0.0;
                    for (k, c) in w.iter().enumerate() {
                        let k = k + 1;
                        acc += c * ((src[(j + k) % ny] - f0) + (src[(j + ny * k - k) % ny] - f0));
                    }
                    *v = acc / h2;
                }
            });
        out
    }

    /// `∂²f/∂x∂y`, computed as `∂_y(∂_x f)`.
    pub fn d2_dxdy(&self, f: &[f64]) -> Vec<f64> {
        self.d_dy(&self.d_dx(f))
    }

    /// Periodic trapezoid rule: `h_x h_y Σ f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.check_len(f);
        stable_sum(f.iter().copied()) * self.hx() * self.hy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, order: StencilOrder) -> GridSpec {
        GridSpec::new(n, n, 1.0, 2.5, order).unwrap()
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let g = grid(16, StencilOrder::Fourth);
        let f = vec![1.234_567_891; g.len()];
        for d in [
            g.d_dx(&f),
            g.d_dy(&f),
            g.d2_dx2(&f),
            g.d2_dy2(&f),
            g.d2_dxdy(&f),
        ] {
            assert!(d.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fourth_order_convergence_of_dx() {
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let g = grid(n, StencilOrder::Fourth);
                let f = g.sample(|x, _| (2.0 * PI * x).sin());
                let exact = g.sample(|x, _| 2.0 * PI * (2.0 * PI * x).cos());
                max_err(&g.d_dx(&f), &exact)
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 3.9 && rate < 4.1, "rate {rate}");
    }

    #[test]
    fn stencil_orders_converge_at_their_order() {
        for order in [
            StencilOrder::Second,
            StencilOrder::Fourth,
            StencilOrder::Sixth,
        ] {
            let errs: Vec<f64> = [16, 32]
                .iter()
                .map(|&n| {
                    let g = grid(n, order);
                    let ky = 2.0 * PI / 2.5;
                    let f = g.sample(|_, y| (ky * y).cos());
                    let exact = g.sample(|_, y| -ky * ky * (ky * y).cos());
                    max_err(&g.d2_dy2(&f), &exact)
                })
                .collect();
            let rate = (errs[0] / errs[1]).log2();
            let p = order.order() as f64;
            assert!((rate - p).abs() < 0.2, "order {p}: rate {rate}");
        }
    }

    #[test]
    fn mixed_partials_commute() {
        let g = grid(32, StencilOrder::Fourth);
        let f = g.sample(|x, y| {
            (2.0 * PI * x).sin() * (2.0 * PI * y / 2.5).cos() + (2.0 * PI * (x + y / 2.5)).sin()
        });
        let xy = g.d_dy(&g.d_dx(&f));
        let yx = g.d_dx(&g.d_dy(&f));
        assert!(max_err(&xy, &yx) < 1e-10);
    }

    #[test]
    fn one_d_stencils_agree_with_two_d() {
        let g = grid(16, StencilOrder::Sixth);
        let f = g.sample(|x, _| (2.0 * PI * x).cos() + 0.3 * (4.0 * PI * x).sin());
        let col: Vec<f64> = (0..g.nx).map(|i| f[g.idx(i, 3)]).collect();
        let d1 = diff1_periodic(&col, g.hx(), g.order);
        let d2 = diff2_periodic(&col, g.hx(), g.order);
        let gx = g.d_dx(&f);
        let gxx = g.d2_dx2(&f);
        for i in 0..g.nx {
            assert_eq!(d1[i], gx[g.idx(i, 3)]);
            assert_eq!(d2[i], gxx[g.idx(i, 3)]);
        }
    }

    #[test]
    fn trapezoid_is_spectral_on_periodic_data() {
        let g = grid(16, StencilOrder::Fourth);
        let f = g.sample(|x, y| {
            (1.0 + 0.5 * (2.0 * PI * x).cos()).powi(2) * (2.0 + (2.0 * PI * y / 2.5).sin())
        });
        // ∫(1 + cos/2)² dx = 1 + 1/8 over one period; ∫(2 + sin) dy = 5.
        assert!((g.integrate(&f) - 1.125 * 5.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(GridSpec::new(4, 16, 1.0, 1.0, StencilOrder::Fourth).is_err());
        assert!(GridSpec::new(16, 16, -1.0, 1.0, StencilOrder::Fourth).is_err());
        assert!(StencilOrder::from_order(3).is_err());
    }
}
