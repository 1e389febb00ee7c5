use std::fs;
use std::process::{Command, Output};

fn pathkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathkernel"))
        .args(args)
        .env_remove("PATHKERNEL_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_body(o: &Output) -> serde_json::Value {
    let text = stdout(o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# pathkernel "));
    serde_json::from_str(lines.next().unwrap()).unwrap()
}

#[test]
fn euclidean_kernel_at_the_origin() {
    let o = pathkernel(&["kernel", "--model", "euclidean:3", "--t", "1", "--x", "0,0,0", "--y", "0,0,0"]);
    assert!(o.status.success());
    let v = json_body(&o)["value"].as_f64().unwrap();
    let exact = (4.0 * std::f64::consts::PI).powf(-1.5);
    assert!((v - exact).abs() < 1e-15 * exact);
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    for (args, flag) in [
        (&["kernel", "--t", "-1"][..], "--t"),
        (&["sample", "--steps", "0"][..], "--steps"),
        (&["kernel", "--model", "sphere:2"][..], "--model"),
        (&["fk", "expectation", "--potential", "quartic"][..], "--potential"),
    ] {
        let o = pathkernel(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn dimension_mismatch_is_a_usage_error() {
    let o = pathkernel(&["kernel", "--model", "euclidean:2", "--x", "0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension"));
}

#[test]
fn help_exits_0() {
    let o = pathkernel(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fk"));
}

#[test]
fn numeric_failure_writes_an_error_record() {
    let o = pathkernel(&["verify", "moments", "--model", "cauchy", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(1));
    let rec = json_body(&o);
    assert_eq!(rec["error"], "divergent");
    assert_eq!(rec["seed"], 11);
    assert!(rec["message"].as_str().unwrap().contains("divergent"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k.cfg");
    fs::write(&cfg, "model = euclidean:1\nt = 4\nx = 1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = json_body(&pathkernel(&["kernel", "--config", c]))["value"].as_f64().unwrap();
    let exact = (16.0 * std::f64::consts::PI).powf(-0.5) * (-1.0f64 / 16.0).exp();
    assert!((from_file - exact).abs() < 1e-15);
    let overridden = pathkernel(&["--config", c, "kernel", "--t", "1"]);
    let v = json_body(&overridden)["value"].as_f64().unwrap();
    let exact = (4.0 * std::f64::consts::PI).powf(-0.5) * (-0.25f64).exp();
    assert!((v - exact).abs() < 1e-15);
    let header = stdout(&overridden).lines().next().unwrap().to_string();
    assert!(header.contains(" t=1 ") && header.contains(" x=1"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = pathkernel(&["kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--colour"));
}

#[test]
fn output_file_and_worker_env() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let args = ["sample", "--model", "hyperbolic3", "--steps", "8", "--paths", "50", "--seed", "5"];
    let mut with_file = args.to_vec();
    with_file.extend(["--output", a.to_str().unwrap()]);
    let o = pathkernel(&with_file);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let threaded = Command::new(env!("CARGO_BIN_EXE_pathkernel"))
        .args(args)
        .env("PATHKERNEL_WORKERS", "4")
        .output()
        .unwrap();
    assert!(threaded.status.success());
    assert_eq!(fs::read(&a).unwrap(), threaded.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_pathkernel"))
        .args(args)
        .env("PATHKERNEL_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sample_csv_shape() {
    let o = pathkernel(&["sample", "--model", "compactified:dirichlet:1", "--x0", "0.5", "--t", "2", "--steps", "4", "--seed", "1"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows[0], "t,coord0,killed");
    assert_eq!(rows.len(), 6);
    // by t = 2 an interval of length 1 has killed essentially every path
    assert!(rows[5].ends_with(",nan,1"));
}

#[test]
fn bridge_hits_its_endpoint() {
    let o = pathkernel(&["bridge", "--model", "circle:1", "--x0", "0.1", "--y0", "0.9", "--steps", "8"]);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let y: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((y - 0.9).abs() < 1e-12);
}

#[test]
fn fk_with_zero_potential_is_one() {
    let o = pathkernel(&["fk", "expectation", "--model", "circle:1", "--samples", "100"]);
    let r = json_body(&o);
    assert_eq!(r["value"].as_f64(), Some(1.0));
    assert_eq!(r["std_error"].as_f64(), Some(0.0));
    assert_eq!(r["n_steps"], 64);
    assert!(r.get("oracle").is_none());
}

#[test]
fn oracle_needs_a_supported_model() {
    let o = pathkernel(&["fk", "expectation", "--model", "euclidean:1", "--oracle-grid", "64"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--oracle-grid"));
}

#[test]
fn compactified_mass_is_one() {
    let o = pathkernel(&["mass", "--model", "compactified:dirichlet:1", "--t", "0.3", "--x", "0.5"]);
    let r = json_body(&o);
    assert_eq!(r["mass"].as_f64(), Some(1.0));
    assert_eq!(r["complete"], true);
}
