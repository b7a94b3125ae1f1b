use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cpest::config::{ScenarioConfig, ScenarioKind};

const SHORT: &str = "integration.t_final=5";

fn cpest(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpest"));
    cmd.args(args).env_remove("CPEST_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    cpest(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_artifacts_with_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "--out", dir.path().to_str().unwrap(), "--override", SHORT]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = dir.path().join("S1-seed0");
    for f in ["timeseries.csv", "curve.csv", "summary.json", "config.toml"] {
        assert!(run_dir.join(f).is_file(), "missing {f}");
    }
    assert!(header(&run_dir.join("timeseries.csv")).starts_with("t,z,z_dot,omega,v_w,z_meas,y1,y2,delta"));
    assert_eq!(header(&run_dir.join("curve.csv")), "z,cp_true,cp_hat,cp_initial");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "S1");

    // the written config reproduces the run
    let again = tempfile::tempdir().unwrap();
    let cfg = run_dir.join("config.toml");
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--out", again.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let a = fs::read(run_dir.join("timeseries.csv")).unwrap();
    let b = fs::read(again.path().join("S1-seed0/timeseries.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seeded_noise_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = run(&[
            "run",
            "--seed",
            "3",
            "--override",
            "scenario=S1-noise",
            "--override",
            SHORT,
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    for f in ["timeseries.csv", "curve.csv", "summary.json"] {
        let x = fs::read(a.path().join("S1-noise-seed3").join(f)).unwrap();
        let y = fs::read(b.path().join("S1-noise-seed3").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }

    let c = tempfile::tempdir().unwrap();
    run(&["run", "--seed", "4", "--override", "scenario=S1-noise", "--override", SHORT, "--out", c.path().to_str().unwrap()]);
    let x = fs::read(a.path().join("S1-noise-seed3/timeseries.csv")).unwrap();
    let y = fs::read(c.path().join("S1-noise-seed4/timeseries.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn output_root_precedence() {
    let env = tempfile::tempdir().unwrap();
    let flag = tempfile::tempdir().unwrap();

    let out = cpest(&["curve", "--override", SHORT]).env("CPEST_OUT", env.path()).output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(env.path().join("S1-seed0/curve.csv").is_file());

    let out = cpest(&["curve", "--override", SHORT, "--out", flag.path().to_str().unwrap()])
        .env("CPEST_OUT", env.path().join("unused"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(flag.path().join("S1-seed0/curve.csv").is_file());
    assert!(!env.path().join("unused").exists());
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "schema_version = 1\n[wind]\ngust = 3.0\n").unwrap();
    let version = dir.path().join("version.toml");
    fs::write(&version, "schema_version = 9\n").unwrap();

    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--config", unknown.to_str().unwrap(), "--out", o],
        vec!["run", "--config", version.to_str().unwrap(), "--out", o],
        vec!["run", "--config", "/nonexistent/cpest.toml", "--out", o],
        vec!["run", "--override", "estimator.nope=1", "--out", o],
        vec!["run", "--override", "no-equals-sign", "--out", o],
        vec!["run", "--override", "integration.h=-1", "--out", o],
        vec!["run", "--override", "scenario=S9", "--out", o],
        vec!["print-defaults", "bogus"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numeric_abort_exits_2_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--override",
        "integration.h=5",
        "--override",
        "integration.record_dt=5",
        "--override",
        "integration.t_final=100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("S1-seed0/summary.json")).unwrap();
    assert!(summary.contains("positive definite"));
}

#[test]
fn verify_exit_codes() {
    let ok = run(&["verify", "--filter", "adjugate"]);
    assert_eq!(code(&ok), 0);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.lines().any(|l| l.starts_with("PASS adjugate-cofactor")));

    let bad = run(&["verify", "--filter", "adjugate", "--corrupt-adjugate"]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL adjugate-cofactor"));
}

#[test]
fn sweep_te_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run(&["sweep-te", "--te", "0,0.01,0.02", "--override", "integration.t_final=20", "--out", dir.path().to_str().unwrap()]);
    assert!(matches!(code(&out), 0 | 3), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep-te-seed0/sweep.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("te_over_inertia,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn print_defaults_round_trips() {
    for kind in ScenarioKind::ALL {
        let out = run(&["print-defaults", kind.name()]);
        assert_eq!(code(&out), 0);
        let table: toml::Table = String::from_utf8(out.stdout).unwrap().parse().unwrap();
        let cfg = ScenarioConfig::from_table(table, &[]).unwrap();
        assert_eq!(cfg, ScenarioConfig::preset(kind));
    }
}
