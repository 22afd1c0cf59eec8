//! JSON surface files and CSV geometry dumps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{GeometryField, GraphSurface};
use crate::error::{Error, Result};
use crate::graph_surface::grid::{GridSpec, StencilOrder};
use crate::melvin_space::SpaceParams;

/// On-disk surface: `{ "b", "Px", "nx", "ny", "s" }` with `s` row-major,
/// x index outermost (`s[i * ny + j]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub b: f64,
    #[serde(rename = "Px")]
    pub px: f64,
    pub nx: usize,
    pub ny: usize,
    pub s: Vec<f64>,
}

impl SurfaceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn into_surface(self, order: StencilOrder, margin: f64) -> Result<GraphSurface> {
        if self.s.len() != self.nx * self.ny {
            return Err(Error::config(format!(
                "surface file has {} heights but nx * ny = {}",
                self.s.len(),
                self.nx * self.ny
            )));
        }
        let params = SpaceParams::new(self.b, self.px)?;
        let grid = GridSpec::new(self.nx, self.ny, params.px, params.py, order)?;
        GraphSurface::new(params, grid, self.s, margin)
    }
}

impl From<&GraphSurface> for SurfaceFile {
    fn from(surface: &GraphSurface) -> Self {
        SurfaceFile {
            b: surface.params().b,
            px: surface.params().px,
            nx: surface.grid().nx,
            ny: surface.grid().ny,
            s: surface.heights().to_vec(),
        }
    }
}

/// 1-D profile file: `{ "b", "Px", "n", "s" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub b: f64,
    #[serde(rename = "Px")]
    pub px: f64,
    pub n: usize,
    pub s: Vec<f64>,
}

pub const GEOMETRY_CSV_HEADER: &str = "i,j,x,y,s,H,z2,K,area_density";

/// Writes one CSV row per grid point with header [`GEOMETRY_CSV_HEADER`].
/// Comma-joined shortest round-trip representations.
pub fn csv_row(values: &[f64]) -> String {
    let mut buf = ryu::Buffer::new();
    let mut s = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(if v.is_finite() {
            buf.format_finite(*v)
        } else {
            "nan"
        });
    }
    s
}

pub fn write_geometry_csv<W: Write>(geometry: &GeometryField, mut out: W) -> Result<()> {
    let grid = geometry.grid();
    writeln!(out, "{GEOMETRY_CSV_HEADER}")?;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let k = grid.idx(i, j);
            let p = &geometry.points()[k];
            let row = [
                grid.x(i),
                grid.y(j),
                p.s,
                p.h,
                p.z2,
                geometry.gauss_curvature()[k],
                p.area,
            ];
            writeln!(out, "{i},{j},{}", csv_row(&row))?;
        }
    }
    Ok(())
}
