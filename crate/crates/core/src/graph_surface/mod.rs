//! Periodic graphs `r = s(x, y)` over the torus and their induced geometry.

mod generate;
mod geometry;
pub mod grid;
mod io;

pub use generate::{Mode, SurfaceGen, TrigPolynomial};
pub use geometry::{GeometryField, PointGeometry, QValue};
pub use grid::{GridSpec, StencilOrder};
pub use io::{csv_row, write_geometry_csv, ProfileFile, SurfaceFile, GEOMETRY_CSV_HEADER};

use crate::error::{Error, Result};
use crate::melvin_space::SpaceParams;

/// Default clearance required between a height and the soliton radius.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Grid-sampled graph `r = s(x, y)`, validated to stay above `r_s + margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSurface {
    params: SpaceParams,
    grid: GridSpec,
    s: Vec<f64>,
    margin: f64,
}

/// Stencil partial derivatives of the height field.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sxx: Vec<f64>,
    pub sxy: Vec<f64>,
    pub syy: Vec<f64>,
}

impl GraphSurface {
    pub fn new(params: SpaceParams, grid: GridSpec, s: Vec<f64>, margin: f64) -> Result<Self> {
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(Error::config(format!(
                "margin must be a finite non-negative number, got {margin}"
            )));
        }
        if s.len() != grid.len() {
            return Err(Error::config(format!(
                "height field has {} values but the grid has {}",
                s.len(),
                grid.len()
            )));
        }
        if (grid.px - params.px).abs() > 1e-12 * params.px
            || (grid.py - params.py).abs() > 1e-12 * params.py
        {
            return Err(Error::config("grid periods do not match the space periods"));
        }
        let surface = GraphSurface {
            params,
            grid,
            s,
            margin,
        };
        surface.validate()?;
        Ok(surface)
    }

    /// Samples `f(x, y)` on the grid.
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(
        params: SpaceParams,
        grid: GridSpec,
        margin: f64,
        f: F,
    ) -> Result<Self> {
        let s = grid.sample(f);
        Self::new(params, grid, s, margin)
    }

    pub fn from_polynomial(
        params: SpaceParams,
        grid: GridSpec,
        margin: f64,
        poly: &TrigPolynomial,
    ) -> Result<Self> {
        let (px, py) = (params.px, params.py);
        Self::from_fn(params, grid, margin, |x, y| poly.eval(x, y, px, py))
    }

    pub fn constant(params: SpaceParams, grid: GridSpec, r0: f64) -> Result<Self> {
        Self::new(params, grid, vec![r0; grid.len()], DEFAULT_MARGIN)
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn heights(&self) -> &[f64] {
        &self.s
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn min_height(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_height(&self) -> f64 {
        self.s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails on the first height that is not finite or not above `r_s + margin`.
    pub fn validate(&self) -> Result<()> {
        let limit = self.params.r_s + self.margin;
        for (k, &v) in self.s.iter().enumerate() {
            if !(v > limit) || !v.is_finite() {
                return Err(Error::BelowMargin {
                    i: k / self.grid.ny,
                    j: k % self.grid.ny,
                    value: v,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// Same grid and space, new heights.
    pub fn with_heights(&self, s: Vec<f64>) -> Result<Self> {
        Self::new(self.params, self.grid, s, self.margin)
    }

    pub fn with_order(&self, order: StencilOrder) -> Self {
        GraphSurface {
            grid: self.grid.with_order(order),
            ..self.clone()
        }
    }

    pub fn derivatives(&self) -> Derivatives {
        let g = &self.grid;
        let sx = g.d_dx(&self.s);
        Derivatives {
            sxy: g.d_dy(&sx),
            sy: g.d_dy(&self.s),
            sxx: g.d2_dx2(&self.s),
            syy: g.d2_dy2(&self.s),
            sx,
        }
    }

    /// Induced geometry at every grid point.
    pub fn geometry(&self) -> Result<GeometryField> {
        GeometryField::compute(self)
    }

    /// `(Q, gap)` by quadrature of the stencil geometry.
    pub fn q_functional(&self) -> Result<QValue> {
        self.geometry()?.q_value()
    }

    pub fn to_file(&self) -> SurfaceFile {
        SurfaceFile::from(self)
    }
}
