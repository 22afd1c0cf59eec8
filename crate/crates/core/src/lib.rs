#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Geometry of graphs over the torus in the AdS-Melvin space: closed-form
//! ambient curvature, the induced geometry of periodic graphs `r = s(x, y)`,
//! the inverse-mean-curvature-type flow `∂s/∂t = s F N`, the monotone
//! functional `Q` and numerical verification of the identities behind it.

pub mod error;
pub mod flow;
pub mod graph_surface;
pub mod melvin_space;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use graph_surface::{
    GeometryField, GraphSurface, GridSpec, PointGeometry, QValue, StencilOrder, SurfaceFile,
    SurfaceGen, TrigPolynomial, DEFAULT_MARGIN,
};
pub use melvin_space::{eval_profile, period_y, solve_r_s, Profile, SpaceParams};
