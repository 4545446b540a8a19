use std::process::{Command, Output};

fn hermdens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hermdens")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn vanishing_suite_passes() {
    let o = hermdens(&["verify", "--suite", "T-VANISH", "--nmax", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["ok"], true);
}

#[test]
fn small_rank_table_has_known_value() {
    let o = hermdens(&["table", "--section", "4", "--output", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains(r#""D_3,1","(4,4,4)",,(-q^5 + q^3 - q^2 + 1)/(1),-224"#), "{out}");
}

#[test]
fn cy_table_columns() {
    let o = hermdens(&["table", "--nmax", "2", "--output", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,h,a,b,c,parity,D,D_at_q0"));
    // n = 1: 2 values of h, 3 profiles; n = 2: 3 values of h, 6 profiles
    assert_eq!(lines.count(), 2 * 3 + 3 * 6);
}

#[test]
fn far_fourier_value_vanishes() {
    let o = hermdens(&["fourier", "--lam", "9,9,9", "--n", "4", "--h", "2", "--xval", "-2", "--route", "closed-form"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"][0]["at_q0"], "0");
}

#[test]
fn all_routes_agree() {
    let o = hermdens(&["fourier", "--lam", "3,1,0", "--n", "4", "--h", "2", "--xval", "-1"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["agree"], true);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn parity_failure_is_reported() {
    let o = hermdens(&["cy", "--n", "3", "--h", "1", "--lam", "4,4,3"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "ParityMismatch");
    assert_eq!(err["schema"], 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir().join(format!("hermdens-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# defaults\nq0 = 5\noutput = json\n").unwrap();
    let path = cfg.to_str().unwrap();
    let a = hermdens(&["cy", "--n", "1", "--h", "0", "--profile", "0,0,1", "--config", path]);
    let b = hermdens(&["cy", "--n", "1", "--h", "0", "--profile", "0,0,1", "--config", path, "--q0", "7"]);
    let (a, b): (serde_json::Value, serde_json::Value) =
        (serde_json::from_slice(&a.stdout).unwrap(), serde_json::from_slice(&b.stdout).unwrap());
    assert_eq!(a["rows"][0]["at_q0"], "-1/6");
    assert_eq!(b["rows"][0]["at_q0"], "-1/8");
}

#[test]
fn output_is_deterministic() {
    let args = ["pden-prim", "--lam", "2,1,0", "--n", "4", "--h", "2", "--xval", "2"];
    let (a, b) = (hermdens(&args), hermdens(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("\"at_q0\": \"25\""));
}
