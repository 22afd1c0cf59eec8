use std::f64::consts::PI;

use melvin_core::flow::{flow_run, FlowConfig};
use melvin_core::graph_surface::write_geometry_csv;
use melvin_core::variational::{q_gap_axis_direct, Axis, AxisProfile};
use melvin_core::verify::{run_suite, Suite};
use melvin_core::{
    GraphSurface, GridSpec, SpaceParams, StencilOrder, SurfaceFile, SurfaceGen, DEFAULT_MARGIN,
};

#[test]
fn surface_file_round_trip_preserves_functional() {
    let p = SpaceParams::new(0.5, 1.3).unwrap();
    let grid = GridSpec::new(24, 20, p.px, p.py, StencilOrder::Fourth).unwrap();
    let gen: SurfaceGen = "random:2.2,0.2,3,99".parse().unwrap();
    let surf = GraphSurface::from_polynomial(p, grid, DEFAULT_MARGIN, &gen.polynomial()).unwrap();
    let json = surf.to_file().to_json().unwrap();
    let back = SurfaceFile::from_json(&json)
        .unwrap()
        .into_surface(StencilOrder::Fourth, DEFAULT_MARGIN)
        .unwrap();
    assert_eq!(back.q_functional().unwrap(), surf.q_functional().unwrap());
}

#[test]
fn geometry_csv_has_one_row_per_point() {
    let p = SpaceParams::new(1.0, 1.0).unwrap();
    let grid = GridSpec::new(8, 10, p.px, p.py, StencilOrder::Fourth).unwrap();
    let surf = GraphSurface::from_polynomial(
        p,
        grid,
        DEFAULT_MARGIN,
        &"cos:2,0.1,1,0.1,1"
            .parse::<SurfaceGen>()
            .unwrap()
            .polynomial(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_geometry_csv(&surf.geometry().unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "i,j,x,y,s,H,z2,K,area_density"
    );
    assert_eq!(text.lines().count(), 81);
}

#[test]
fn x_symmetric_profile_matches_lifted_surface() {
    let p = SpaceParams::new(2.0, 1.0).unwrap();
    let prof = AxisProfile::from_fn(
        Axis::XSymmetric,
        p,
        96,
        StencilOrder::Fourth,
        DEFAULT_MARGIN,
        |y| 2.0 + 0.2 * (2.0 * PI * y / p.py).cos() + 0.05 * (4.0 * PI * y / p.py).sin(),
    )
    .unwrap();
    let direct = q_gap_axis_direct(&prof).unwrap();
    let lifted = prof.lift(12).unwrap().q_functional().unwrap().gap;
    assert!(direct > 0.0);
    assert!((direct - lifted).abs() <= 1e-9 * direct);
}

#[test]
fn distance_to_bound_shrinks_when_flowing_longer() {
    let p = SpaceParams::new(1.0, 1.0).unwrap();
    let grid = GridSpec::new(32, 32, p.px, p.py, StencilOrder::Fourth).unwrap();
    let gen: SurfaceGen = "random:2,0.2,2,7".parse().unwrap();
    let surf = GraphSurface::from_polynomial(p, grid, DEFAULT_MARGIN, &gen.polynomial()).unwrap();
    let dist = |t_end: f64| {
        let cfg = FlowConfig {
            t_end,
            ..FlowConfig::default()
        };
        let d = flow_run(&surf, &cfg).unwrap().diagnostics;
        *d.distance_to_bound().last().unwrap()
    };
    let (a, b, c) = (dist(2.0), dist(4.0), dist(8.0));
    assert!(b < a && c < b, "{a} {b} {c}");
}

#[test]
fn full_verification_suite_passes() {
    let p = SpaceParams::new(1.0, 1.0).unwrap();
    let rep = run_suite(&p, Suite::All).unwrap();
    for c in &rep.checks {
        assert!(c.passed, "{c:?}");
    }
    assert!(rep.passed);
}
