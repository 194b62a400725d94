use std::path::Path;
use std::process::{Command, Output};

use zigzag_cli::gridio::read_grid;

const FIG2: &[&str] = &[
    "--lambda", "1", "--alpha-plus", "1.8", "--alpha-minus", "2", "--beta", "0.15", "--input-site", "5", "--sites",
    "60", "--zmax", "10",
];

fn zigzag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zigzag")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate(extra: &[&str]) -> Output {
    let mut args = vec!["simulate"];
    args.extend_from_slice(FIG2);
    args.extend_from_slice(extra);
    zigzag(&args)
}

#[test]
fn period_prints_four_decimals() {
    let o = zigzag(&["period", "--lambda", "1", "--beta", "0.15"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "6.5866");
    let o = zigzag(&["period", "--lambda", "1", "--beta", "0"]);
    assert_eq!(stdout(&o).trim(), "6.2832");
    let o = zigzag(&["period", "--lambda", "0.2", "--beta", "0.15"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hyperbolic"));
}

#[test]
fn fig2_both_passes_and_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let o = simulate(&["--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
    let (exact, meta) = read_grid(&dir.path().join("fig2.exact.csv")).unwrap();
    let (numeric, _) = read_grid(&dir.path().join("fig2.numeric.csv")).unwrap();
    assert_eq!(meta["solver"], "exact");
    assert_eq!(meta["resolved"]["lambda"], 1.0);
    assert_eq!(exact.z.len(), 101);
    assert_eq!(exact.m, (0..=40).collect::<Vec<_>>());
    for (j, m) in exact.m.iter().enumerate() {
        let want = if *m == 5 { 1.0 } else { 0.0 };
        assert_eq!(exact.cell(0, j).intensity, want);
        assert_eq!(numeric.cell(0, j).intensity, want);
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("fig2.compare.json")).unwrap()).unwrap();
    assert!(report["relL2Error"].as_f64().unwrap() < 1e-5);
    assert_eq!(report["pass"], true);
}

#[test]
fn fig3_total_intensity_stays_attenuated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.json");
    let o = zigzag(&[
        "simulate", "--lambda", "1", "--alpha-plus", "2", "--alpha-minus", "1.8", "--beta", "0.15", "--input-site",
        "5", "--zmax", "10", "--z-samples", "21", "--method", "exact", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (g, _) = read_grid(&out).unwrap();
    // The total breathes with the Bloch period but never recovers to 1.
    let totals: Vec<f64> = (0..g.z.len()).map(|i| g.row_total(i)).collect();
    assert_eq!(totals[0], 1.0);
    assert!(totals[1..].iter().all(|&t| t < 1.0), "{totals:?}");
    assert!(totals[1..4].windows(2).all(|w| w[1] < w[0]), "{totals:?}");
}

#[test]
fn both_method_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(simulate(&["--output", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(simulate(&["--output", b.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(read("a.exact.csv"), read("b.exact.csv"));
    assert_eq!(read("a.numeric.csv"), read("b.numeric.csv"));
}

#[test]
fn csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("g.csv");
    let j = dir.path().join("g.json");
    for p in [&c, &j] {
        assert_eq!(simulate(&["--method", "exact", "--z-samples", "11", "--output", p.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(read_grid(&c).unwrap().0, read_grid(&j).unwrap().0);
}

#[test]
fn compare_command_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(simulate(&["--z-samples", "11", "--output", out.to_str().unwrap()]).status.code(), Some(0));
    let e = dir.path().join("r.exact.csv");
    let n = dir.path().join("r.numeric.csv");
    let o = zigzag(&["compare", e.to_str().unwrap(), e.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("maxAbs 0e0"));
    let o = zigzag(&["compare", e.to_str().unwrap(), n.to_str().unwrap(), "--metric", "max-abs", "--threshold", "1e-12"]);
    assert_eq!(o.status.code(), Some(4));
    let o = zigzag(&["compare", e.to_str().unwrap(), "/nonexistent/grid.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threshold_failure_exits_4() {
    let o = simulate(&["--z-samples", "11", "--threshold", "1e-12"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn truncation_flags_exit_5_unless_allowed() {
    let o = simulate(&["--method", "exact", "--z-samples", "11", "--k-max", "60"]);
    assert_eq!(o.status.code(), Some(5), "{}", stdout(&o));
    let o = simulate(&["--method", "exact", "--z-samples", "11", "--k-max", "60", "--allow-flags"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    let o = zigzag(&["simulate", "--config", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("missing required keys") && err.contains("input-site"), "{err}");

    let typo = dir.path().join("typo.json");
    std::fs::write(&typo, "{\n \"lambda\": 1,\n \"alpha_plus\": 2\n}").unwrap();
    let o = zigzag(&["simulate", "--config", typo.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = simulate(&["--input-site", "70"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--input-site"));

    let o = zigzag(&["simulate", "--lambda", "0.3", "--alpha-plus", "1", "--alpha-minus", "1", "--beta", "0.15",
                     "--input-site", "1", "--zmax", "1", "--method", "exact"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn physical_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phys.json");
    std::fs::write(
        &cfg,
        r#"{"coupling": 0.44, "coupling-unit": "1/cm", "gradient": 0.044, "gradient-unit": "1/mm",
            "alpha-plus": 1.8, "alpha-minus": 2.0, "beta": 0.15, "input-site": 5, "zmax": 10,
            "method": "exact"}"#,
    )
    .unwrap();
    let out = dir.path().join("p.json");
    let o = zigzag(&["simulate", "--config", cfg.to_str().unwrap(), "--zmax", "2", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (g, meta) = read_grid(&out).unwrap();
    assert_eq!(*g.z.last().unwrap(), 2.0);
    assert!((meta["resolved"]["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(meta["resolved"]["z-scale-per-cm"], 0.44);
}

#[test]
fn xi_export_and_dominance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xi.csv");
    let o = zigzag(&["xi", "--lambda", "1", "--alpha-plus", "2", "--alpha-minus", "1.8", "--beta", "0.15",
                     "--zmax", "10", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dominant: xi-"));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("Z,re_xi_plus,im_xi_plus,re_xi_minus,im_xi_minus"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(first.iter().all(|v| *v == 0.0));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn disentangle_prints_factors_and_residual() {
    let o = zigzag(&["disentangle", "--a-plus", "0", "--a0", "-0.4,1.3", "--a-minus", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("f 0.0,0.0") && s.contains("h 0.0,0.0"), "{s}");
    assert!(s.contains("g -0.4,1.3"), "{s}");
    let residual: f64 = s.lines().find_map(|l| l.strip_prefix("residual ")).unwrap().parse().unwrap();
    assert!(residual < 1e-15, "{s}");
}

#[test]
fn thread_cap_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_zigzag"))
        .args(["simulate"])
        .args(FIG2)
        .args(["--method", "exact", "--z-samples", "5"])
        .env("ZIGZAG_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_zigzag"))
        .args(["period", "--lambda", "1", "--beta", "0"])
        .env("ZIGZAG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_output_has_no_metadata_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    simulate(&["--method", "numeric", "--z-samples", "3", "--output", out.to_str().unwrap()]);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(Path::new(&format!("{}.meta.json", out.display()))).unwrap()).unwrap();
    for k in ["solver", "version", "wall-time-s", "config", "resolved", "integrator", "edge-monitor"] {
        assert!(!meta[k].is_null(), "{k}");
    }
    assert_eq!(meta["edge-monitor"]["flagged"], true);
}
