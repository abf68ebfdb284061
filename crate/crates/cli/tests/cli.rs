use std::path::Path;
use std::process::{Command, Output};

use flatgen::{csvio, generate, Method, RunConfig};

fn flatgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatgen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn quad_square_writes_one_row_per_knot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = flatgen(&[
        "generate",
        "--vehicle",
        "quad_tilted",
        "--method",
        "collocation_square",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with(
        "t,sigma_x,sigma_y,sigma_z,sigma_psi,phi,theta,psi,wx,wy,wz,u_1,u_2,u_3,u_4,un_1,un_2,un_3,un_4"
    ));
    assert_eq!(lines.count(), 101);
    let s = stdout(&o);
    assert_eq!(value(&s, "status"), Some("converged"));
    let rms: f64 = value(&s, "replay_rms_position").unwrap().parse().unwrap();
    assert!(rms < 1e-2);
}

#[test]
fn hexacopter_square_is_infeasible() {
    let o = flatgen(&[
        "generate",
        "--vehicle",
        "hexacopter_tilted",
        "--method",
        "collocation_square",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn analytic_rank3_rejects_rank_two_vehicle() {
    let o = flatgen(&[
        "generate",
        "--vehicle",
        "tricopter",
        "--method",
        "analytic_rank3",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tricopter_rank2_reports_tilt_angle_and_thrust() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = flatgen(&[
        "generate",
        "--vehicle",
        "tricopter",
        "--method",
        "analytic_rank2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let lo: f64 = value(&s, "alpha_min").unwrap().parse().unwrap();
    let hi: f64 = value(&s, "alpha_max").unwrap().parse().unwrap();
    assert!(0.0 < lo && lo < hi && hi < 0.2, "{lo} {hi}");
    assert!(value(&s, "T_alpha_min").is_some());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",alpha,T_alpha"));
}

#[test]
fn verify_passes_clean_file_and_localizes_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = flatgen(&["generate", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));

    let v = flatgen(&["verify", path_str(&out)]);
    assert_eq!(v.status.code(), Some(0));
    let s = stdout(&v);
    assert_eq!(value(&s, "verdict"), Some("PASS"));
    let rms: f64 = value(&s, "replay_rms_position").unwrap().parse().unwrap();
    assert!(rms < 1e-2);

    // zero the second thrust at knot 50
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    let col = rows[0].iter().position(|h| h == "u_2").unwrap();
    rows[51][col] = "0".into();
    let bad = dir.path().join("bad.csv");
    let joined: Vec<String> = rows.iter().map(|r| r.join(",")).collect();
    std::fs::write(&bad, joined.join("\n") + "\n").unwrap();

    let v = flatgen(&["verify", path_str(&bad)]);
    assert_eq!(v.status.code(), Some(2));
    let s = stdout(&v);
    assert_eq!(value(&s, "verdict"), Some("FAIL"));
    assert_eq!(value(&s, "worst_knot"), Some("50"));
    assert_eq!(value(&s, "knots_over_tolerance"), Some("1"));
    assert!(value(&s, "residual_knot_50").is_some());
}

#[test]
fn constant_hover_verifies_with_near_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let hold = ["--start", "0.5,-1,2,0.3", "--end", "0.5,-1,2,0.3"];
    let mut args = vec!["generate", "--out", path_str(&out)];
    args.extend(hold);
    assert_eq!(flatgen(&args).status.code(), Some(0));
    let mut args = vec!["verify", path_str(&out)];
    args.extend(hold);
    let v = flatgen(&args);
    assert_eq!(v.status.code(), Some(0));
    let s = stdout(&v);
    let rms: f64 = value(&s, "replay_rms_position").unwrap().parse().unwrap();
    let res: f64 = value(&s, "worst_residual").unwrap().parse().unwrap();
    assert!(rms < 1e-10 && res < 1e-10, "{rms} {res}");
}

#[test]
fn verify_rejects_mismatched_vehicle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    flatgen(&["generate", "--out", path_str(&out)]);
    let v = flatgen(&["verify", "--vehicle", "hexacopter_tilted", path_str(&out)]);
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn presets_list_published_geometry() {
    let o = flatgen(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for name in [
        "quad_tilted",
        "tricopter",
        "hexacopter_tilted",
        "quad_aligned",
    ] {
        assert!(s.lines().any(|l| l == name), "{name}");
    }
    assert!(s.contains("r_3 = [0.19, 0, 0] m"));
    assert!(s.contains("N = 6"));
    assert!(s.contains("J = diag(0.005, 0.005, 0.010) kg m^2"));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let run = || flatgen(&["generate", "--scheme", "trapezoidal", "--knots", "40"]).stdout;
    let (a, b) = (run(), run());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn csv_round_trip_is_exact() {
    for (vehicle, method) in [
        ("quad_tilted", Method::CollocationSquare),
        ("tricopter", Method::AnalyticRank2),
    ] {
        let cfg = RunConfig::from_toml(&format!(
            "[vehicle]\npreset = \"{vehicle}\"\n[solver]\nknots = 30\nmethod = \"{}\"\n",
            method.name()
        ))
        .unwrap();
        let (traj, flat, _) = generate(&cfg).unwrap();
        let mut buf = Vec::new();
        csvio::write(&mut buf, &traj, &flat, &cfg.vehicle, cfg.tilt_pair).unwrap();
        let back = csvio::read(buf.as_slice()).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.angles, traj.angles);
        assert_eq!(back.rates, traj.rates);
        assert_eq!(back.inputs, traj.inputs);
        assert_eq!(back.mid_inputs, traj.mid_inputs);
    }
}

#[test]
fn centimeter_config_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quad.toml");
    std::fs::write(
        &cfg,
        r#"
[vehicle]
units = "cm"
mass = 1.0
inertia = [0.005, 0.005, 0.010]
propeller = [
    { arm = [19, 0, 0], axis = [0.20, 0.0, 0.98], drag = -0.016 },
    { arm = [0, -19, 0], axis = [0.0, 0.30, 0.96], drag = 0.016 },
    { arm = [-19, 0, 0], axis = [0.30, 0.0, 0.96], drag = -0.016 },
    { arm = [0, 19, 0], axis = [0.0, -0.10, 0.99], drag = 0.016 },
]

[trajectory]
start = [0, 0, 0, 0]
end = [-1, 1, 1.5, 0.2]
tf = 4.0

[solver]
method = "collocation_square"
knots = 50
scheme = "hermite_simpson"
"#,
    )
    .unwrap();
    let from_file = flatgen(&["generate", "--config", path_str(&cfg)]);
    assert_eq!(from_file.status.code(), Some(0));
    let preset = flatgen(&["generate", "--vehicle", "quad_tilted", "--knots", "50"]);
    assert_eq!(from_file.stdout, preset.stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[solver]\nknots = 80\n[vehicle]\npreset = \"quad_tilted\"\n",
    )
    .unwrap();
    let o = flatgen(&["generate", "--config", path_str(&cfg), "--knots", "40"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 42);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[solver]\nknotz = 20\n").unwrap();
    assert_eq!(
        flatgen(&["generate", "--config", path_str(&cfg)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        flatgen(&["generate", "--vehicle", "blimp"]).status.code(),
        Some(1)
    );
    assert_eq!(flatgen(&["generate", "--tf", "-1"]).status.code(), Some(1));
    assert_eq!(
        flatgen(&["generate", "--start", "1,2"]).status.code(),
        Some(1)
    );
    assert_eq!(
        flatgen(&["generate", "--knots", "x"]).status.code(),
        Some(1)
    );
    let missing = dir.path().join("none.toml");
    assert_eq!(
        flatgen(&["generate", "--config", path_str(&missing)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn hexacopter_min_effort_beats_extra_outputs() {
    let cost = |method: &str| -> f64 {
        let o = flatgen(&[
            "generate",
            "--vehicle",
            "hexacopter_tilted",
            "--method",
            method,
        ]);
        assert_eq!(o.status.code(), Some(0));
        value(&String::from_utf8_lossy(&o.stderr), "cost")
            .unwrap()
            .parse()
            .unwrap()
    };
    let free = cost("collocation_min_effort");
    let pinned = cost("collocation_extra_outputs");
    assert!(free <= pinned);
    assert!((free - 1.127).abs() < 0.02 && (pinned - 1.130).abs() < 0.02);
}
