use std::path::Path;
use std::process::{Command, Output};

fn melvin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_melvin"))
        .args(args)
        .output()
        .expect("spawn melvin")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn space_reports_radius_and_period() {
    let o = melvin(&["space", "--b", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("r_s=1.0\n"), "{text}");
    let py: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("P_y="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((py - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);

    let v = json(&melvin(&["space", "--b", "2", "--format", "json"]));
    assert!((v["r_s"].as_f64().unwrap() - 1.353_209_964_199_325).abs() < 1e-12);
    assert_eq!(v["radii"].as_array().unwrap().len(), 6);
}

#[test]
fn space_rejects_negative_charge() {
    let o = melvin(&["space", "--b", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("b >= 0"));
}

#[test]
fn q_verdicts() {
    let v = json(&melvin(&["q", "--gen", "const:2"]));
    assert_eq!(v["verdict"], "equality (coordinate torus)");
    assert!(v["gap"].as_f64().unwrap().abs() < 1e-12);

    let v = json(&melvin(&["q", "--gen", "random:2,0.2,3", "--seed", "11"]));
    assert_eq!(v["verdict"], "satisfied");
    assert!(v["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn q_below_margin_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.json");
    let o = melvin(&[
        "q",
        "--gen",
        "cos:1.25,0.1,1,0,0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn q_reads_surface_files() {
    let dir = tempfile::tempdir().unwrap();
    let flow_out = dir.path().join("flow.csv");
    let surf = dir.path().join("final.json");
    let o = melvin(&[
        "flow",
        "--gen",
        "cos:2,0.1,1,0.1,1",
        "--nx",
        "24",
        "--ny",
        "24",
        "--t-end",
        "0.5",
        "--save-surface",
        surf.to_str().unwrap(),
        "--out",
        flow_out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&melvin(&["q", "--input", surf.to_str().unwrap()]));
    let last = std::fs::read_to_string(&flow_out).unwrap();
    let q_last: f64 = last
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(v["Q"].as_f64().unwrap(), q_last);
}

#[test]
fn flow_csv_is_monotone_and_deterministic() {
    let args = [
        "flow",
        "--gen",
        "random:2,0.2,2",
        "--seed",
        "3",
        "--nx",
        "32",
        "--ny",
        "32",
        "--t-end",
        "3",
    ];
    let a = melvin(&args);
    let b = melvin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,Q,gap,dQdt,z2max_minus_1,Hminus2_pos_max,c0_drift,smin_minus_rs"
    );
    let q: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(q.len() > 2);
    for w in q.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-8));
    }
}

#[test]
fn flow_requires_a_surface() {
    let o = melvin(&["flow", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn perturb_cos_mode() {
    let v = json(&melvin(&[
        "perturb", "--r0", "2", "--b", "1", "--phi", "cos:1,0",
    ]));
    let d2 = v["d2Q_fd"].as_f64().unwrap();
    assert!((d2 - 140.4345).abs() < 1e-3, "{d2}");
    assert!(v["dQ"].as_f64().unwrap().abs() < 1e-7 * v["Q0"].as_f64().unwrap());
    assert!(v.get("d2Q_form").is_some());
}

#[test]
fn perturb_reads_phi_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.json");
    let (nx, ny) = (16usize, 16usize);
    let phi: Vec<f64> = (0..nx * ny)
        .map(|k| (2.0 * std::f64::consts::PI * (k / ny) as f64 / nx as f64).cos())
        .collect();
    std::fs::write(
        &path,
        serde_json::json!({ "nx": nx, "ny": ny, "phi": phi }).to_string(),
    )
    .unwrap();
    let v = json(&melvin(&["perturb", "--phi", path.to_str().unwrap()]));
    let builtin = json(&melvin(&[
        "perturb", "--phi", "cos:1,0", "--nx", "16", "--ny", "16",
    ]));
    assert_eq!(v["d2Q_fd"], builtin["d2Q_fd"]);
}

#[test]
fn symmetric_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.json");
    let n = 128;
    let s: Vec<f64> = (0..n)
        .map(|k| 2.0 + 0.3 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
        .collect();
    std::fs::write(
        &path,
        serde_json::json!({ "b": 1.0, "Px": 1.0, "n": n, "s": s }).to_string(),
    )
    .unwrap();
    for axis in ["x", "y"] {
        let o = melvin(&[
            "symmetric",
            "--axis",
            axis,
            "--profile",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = json(&o);
        let d = v["gap_direct"].as_f64().unwrap();
        let i = v["gap_ibp"].as_f64().unwrap();
        assert!(d > 0.0 && (d - i).abs() <= 1e-8 * d, "{axis}: {d} {i}");
        assert!(v["residual_max"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = melvin(&["verify", "--suite", "all", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out)).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let suites: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["suite"].as_str().unwrap())
        .collect();
    for s in ["ambient", "surface", "monotone"] {
        assert!(suites.contains(&s), "{s}");
    }
}

#[test]
fn unknown_suite_is_a_validation_error() {
    assert_eq!(
        melvin(&["verify", "--suite", "nope"]).status.code(),
        Some(1)
    );
}
