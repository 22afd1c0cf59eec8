use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use melvin_core::flow::{flow_run, FlowConfig, FlowDiagnostics};
use melvin_core::graph_surface::{csv_row, write_geometry_csv, ProfileFile};
use melvin_core::variational::{
    integrand_identity_residual, perturbation_sweep, q_gap_axis_direct, q_gap_axis_ibp, Axis,
    AxisProfile, PerturbationSpec,
};
use melvin_core::verify::{default_radii, run_suite, Suite};
use melvin_core::{
    Error, GraphSurface, GridSpec, Result, SpaceParams, StencilOrder, SurfaceFile, SurfaceGen,
    TrigPolynomial,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{emit, json_bytes};
use crate::{AxisArg, Cli, Command, Format, Global, PerturbArgs, SurfaceArgs, SymmetricArgs};

/// Returns the process exit code on success.
pub fn run(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Space => cmd_space(g),
        Command::Q(a) => cmd_q(g, a),
        Command::Flow(a) => cmd_flow(g, a),
        Command::Perturb(a) => cmd_perturb(g, a),
        Command::Symmetric(a) => cmd_symmetric(g, a),
        Command::Verify(a) => cmd_verify(g, &a.suite),
    }
}

fn order(g: &Global, default: usize) -> Result<StencilOrder> {
    StencilOrder::from_order(g.order.unwrap_or(default))
}

fn params(g: &Global) -> Result<SpaceParams> {
    SpaceParams::new(g.b, g.px)
}

fn check_margin(g: &Global) -> Result<()> {
    if !(g.margin > 0.0) || !g.margin.is_finite() {
        return Err(Error::Config(format!(
            "margin must be positive, got {}",
            g.margin
        )));
    }
    Ok(())
}

/// Parses `--gen`, filling in `--seed` when a random generator omits it.
fn generator(g: &Global, text: &str) -> Result<SurfaceGen> {
    let text = match text.strip_prefix("random:") {
        Some(rest) if rest.split(',').count() == 3 => format!("{text},{}", g.seed),
        _ => text.to_string(),
    };
    text.parse()
}

fn load_surface(g: &Global, args: &SurfaceArgs) -> Result<GraphSurface> {
    check_margin(g)?;
    let order = order(g, 4)?;
    match (&args.input, &g.gen) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            SurfaceFile::from_json(&text)?.into_surface(order, g.margin)
        }
        (None, Some(gen)) => {
            let poly = generator(g, gen)?.polynomial();
            let p = params(g)?;
            let grid = GridSpec::new(g.nx, g.ny, p.px, p.py, order)?;
            GraphSurface::from_polynomial(p, grid, g.margin, &poly)
        }
        (Some(_), Some(_)) => Err(Error::Config(
            "give either --input or --gen, not both".into(),
        )),
        (None, None) => Err(Error::Config(
            "a surface is required: pass --input FILE or --gen SPEC".into(),
        )),
    }
}

#[derive(Serialize)]
struct SpaceRow {
    r: f64,
    #[serde(rename = "F")]
    f: f64,
    scalar: f64,
    ric_r: f64,
    ric_x: f64,
    ric_y: f64,
    static_min: f64,
}

#[derive(Serialize)]
struct SpaceReport {
    b: f64,
    #[serde(rename = "Px")]
    px: f64,
    r_s: f64,
    #[serde(rename = "P_y")]
    py: f64,
    q_bound: f64,
    radii: Vec<SpaceRow>,
}

fn cmd_space(g: &Global) -> Result<u8> {
    let p = params(g)?;
    let mut radii = Vec::new();
    for r in default_radii(&p) {
        let a = p.ambient(r)?;
        radii.push(SpaceRow {
            r,
            f: p.profile(r).f,
            scalar: a.scalar,
            ric_r: a.ricci.eigenvalues[0],
            ric_x: a.ricci.eigenvalues[1],
            ric_y: a.ricci.eigenvalues[2],
            static_min: a.static_tensor.min_eigenvalue(),
        });
    }
    let report = SpaceReport {
        b: p.b,
        px: p.px,
        r_s: p.r_s,
        py: p.py,
        q_bound: p.q_bound(),
        radii,
    };
    let bytes = match g.format {
        Some(Format::Json) => json_bytes(&report)?,
        Some(Format::Csv) => {
            let mut s = String::from("r,F,scalar,ric_r,ric_x,ric_y,static_min\n");
            for row in &report.radii {
                push_space_row(&mut s, row);
            }
            s.into_bytes()
        }
        None => {
            let mut s = String::new();
            for (k, v) in [
                ("b", report.b),
                ("Px", report.px),
                ("r_s", report.r_s),
                ("P_y", report.py),
                ("Q_bound", report.q_bound),
            ] {
                let _ = writeln!(s, "{k}={}", csv_row(&[v]));
            }
            s.push('\n');
            s.push_str("r,F,scalar,ric_r,ric_x,ric_y,static_min\n");
            for row in &report.radii {
                push_space_row(&mut s, row);
            }
            s.into_bytes()
        }
    };
    emit(g.out.as_deref(), &bytes)?;
    Ok(0)
}

fn push_space_row(s: &mut String, row: &SpaceRow) {
    let _ = writeln!(
        s,
        "{}",
        csv_row(&[
            row.r,
            row.f,
            row.scalar,
            row.ric_r,
            row.ric_x,
            row.ric_y,
            row.static_min
        ])
    );
}

#[derive(Serialize)]
struct QReport {
    #[serde(rename = "Q")]
    q: f64,
    gap: f64,
    q_bound: f64,
    q_cross: f64,
    quadrature_error: f64,
    min_height_minus_rs: f64,
    verdict: &'static str,
}

fn cmd_q(g: &Global, args: &SurfaceArgs) -> Result<u8> {
    let surf = load_surface(g, args)?;
    let p = *surf.params();
    let qv = surf.q_functional()?;
    let tol = 1e-12 * p.px * p.py;
    let verdict = if qv.gap.abs() <= tol {
        "equality (coordinate torus)"
    } else if qv.gap >= -(qv.quadrature_error + tol) {
        "satisfied"
    } else {
        "violated"
    };
    let bytes = match g.format {
        Some(Format::Csv) => {
            let mut buf = Vec::new();
            write_geometry_csv(&surf.geometry()?, &mut buf)?;
            buf
        }
        _ => json_bytes(&QReport {
            q: qv.q,
            gap: qv.gap,
            q_bound: p.q_bound(),
            q_cross: qv.q_cross,
            quadrature_error: qv.quadrature_error,
            min_height_minus_rs: surf.min_height() - p.r_s,
            verdict,
        })?,
    };
    emit(g.out.as_deref(), &bytes)?;
    if verdict == "violated" {
        return Err(Error::Property(format!(
            "gap {} is below the quadrature tolerance {}",
            qv.gap, qv.quadrature_error
        )));
    }
    Ok(0)
}

fn diagnostics_json(d: &FlowDiagnostics) -> serde_json::Value {
    json!({
        "q_bound": d.q_bound,
        "t": d.t,
        "Q": d.q,
        "gap": d.gap,
        "dQdt": d.dq_dt,
        "z2max_minus_1": d.z2max_minus_1,
        "Hminus2_pos_max": d.h_minus_2_pos_max,
        "c0_drift": d.c0_drift,
        "smin_minus_rs": d.smin_minus_rs,
    })
}

fn cmd_flow(g: &Global, args: &crate::FlowArgs) -> Result<u8> {
    let surf = load_surface(g, &args.surface)?;
    let cfg = FlowConfig {
        t_end: args.t_end,
        dt_init: args.dt,
        sample_every: args.sample_every,
        ..FlowConfig::default()
    };
    cfg.validate()?;
    let run = flow_run(&surf, &cfg).map_err(Error::from)?;
    let bytes = match g.format {
        Some(Format::Json) => json_bytes(&diagnostics_json(&run.diagnostics))?,
        _ => {
            let mut buf = Vec::new();
            run.diagnostics.write_csv(&mut buf)?;
            buf
        }
    };
    if let Some(path) = &args.save_surface {
        let text = run.surface.to_file().to_json()?;
        emit(Some(path), text.as_bytes())?;
    }
    emit(g.out.as_deref(), &bytes)?;
    Ok(0)
}

/// Perturbation file: `{ "nx", "ny", "phi" }`, row-major in x.
#[derive(Deserialize)]
struct PhiFile {
    nx: usize,
    ny: usize,
    phi: Vec<f64>,
}

fn cmd_perturb(g: &Global, args: &PerturbArgs) -> Result<u8> {
    check_margin(g)?;
    let p = params(g)?;
    let order = order(g, 4)?;
    let (grid, phi) = if let Some(modes) = args.phi.strip_prefix("cos:") {
        let k: Vec<&str> = modes.split(',').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<i32>()
                .map_err(|_| Error::Config(format!("bad wavenumber '{s}' in --phi")))
        };
        if k.len() != 2 {
            return Err(Error::Config(format!(
                "--phi cos: expects kx,ky, got '{modes}'"
            )));
        }
        let (kx, ky) = (parse(k[0])? as f64, parse(k[1])? as f64);
        let grid = GridSpec::new(g.nx, g.ny, p.px, p.py, order)?;
        let phi = grid.sample(|x, y| (2.0 * PI * (kx * x / p.px + ky * y / p.py)).cos());
        (grid, phi)
    } else {
        let file: PhiFile = serde_json::from_str(&std::fs::read_to_string(Path::new(&args.phi))?)?;
        if file.phi.len() != file.nx * file.ny {
            return Err(Error::Config(format!(
                "perturbation file has {} values but nx * ny = {}",
                file.phi.len(),
                file.nx * file.ny
            )));
        }
        (
            GridSpec::new(file.nx, file.ny, p.px, p.py, order)?,
            file.phi,
        )
    };
    if let Some(e) = args.eps0 {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Config(format!("--eps0 must be positive, got {e}")));
        }
    }
    if !(args.r0 > p.r_s + g.margin) {
        return Err(Error::Domain(format!(
            "r0 = {} must exceed r_s + margin = {}",
            args.r0,
            p.r_s + g.margin
        )));
    }
    let spec = PerturbationSpec::new(p, grid, args.r0, phi, args.eps0, g.margin)?;
    let r = perturbation_sweep(&spec)?;
    let report = json!({
        "Q0": r.q0,
        "dQ": r.dq,
        "d2Q_fd": r.d2q_fd,
        "d2Q_form": r.d2q_form,
        "d2Q_rel_error": r.second_rel_error(),
        "richardson_correction": r.richardson_correction,
        "eps0": spec.eps0(),
    });
    emit(g.out.as_deref(), &json_bytes(&report)?)?;
    Ok(0)
}

fn cmd_symmetric(g: &Global, args: &SymmetricArgs) -> Result<u8> {
    check_margin(g)?;
    let order = order(g, 6)?;
    let axis = match args.axis {
        AxisArg::X => Axis::YSymmetric,
        AxisArg::Y => Axis::XSymmetric,
    };
    let profile = match (&args.profile, &g.gen) {
        (Some(path), None) => {
            let file: ProfileFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            AxisProfile::from_file(file, axis, order, g.margin)?
        }
        (None, Some(gen)) => {
            let p = params(g)?;
            let poly = match generator(g, gen)? {
                SurfaceGen::Random {
                    r0,
                    amp,
                    bandlimit,
                    seed,
                } => match axis {
                    Axis::YSymmetric => TrigPolynomial::random_in_x(r0, amp, bandlimit, seed),
                    Axis::XSymmetric => TrigPolynomial::random_in_y(r0, amp, bandlimit, seed),
                },
                other => other.polynomial(),
            };
            let n = match axis {
                Axis::YSymmetric => g.nx,
                Axis::XSymmetric => g.ny,
            };
            AxisProfile::from_fn(axis, p, n, order, g.margin, |t| match axis {
                Axis::YSymmetric => poly.eval(t, 0.0, p.px, p.py),
                Axis::XSymmetric => poly.eval(0.0, t, p.px, p.py),
            })?
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either --profile or --gen, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "a profile is required: pass --profile FILE or --gen SPEC".into(),
            ))
        }
    };
    let direct = q_gap_axis_direct(&profile)?;
    let ibp = q_gap_axis_ibp(&profile)?;
    let residual = integrand_identity_residual(&profile)?;
    let report = json!({
        "axis": match args.axis { AxisArg::X => "x", AxisArg::Y => "y" },
        "n": profile.n(),
        "gap_direct": direct,
        "gap_ibp": ibp,
        "residual_max": residual,
    });
    emit(g.out.as_deref(), &json_bytes(&report)?)?;
    Ok(0)
}

fn cmd_verify(g: &Global, suite: &str) -> Result<u8> {
    let suite: Suite = suite.parse()?;
    let p = params(g)?;
    let report = run_suite(&p, suite)?;
    emit(g.out.as_deref(), &json_bytes(&report)?)?;
    if report.passed {
        Ok(0)
    } else {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!(
                "failed: {}/{} = {:e} (threshold {:e})",
                c.suite, c.name, c.value, c.threshold
            );
        }
        Ok(3)
    }
}
