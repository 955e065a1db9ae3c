use std::path::PathBuf;
use std::process::{Command, Output};

fn prstl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prstl"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
        .display()
        .to_string()
}

#[test]
fn parse_reports_mission_horizons() {
    let o = prstl(&["parse", "--formula", "G[0,30](F[0,40] mu1 & F[0,40] mu2 & F[0,40] mu3)"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("horizon: 70"));
    let o = prstl(&["parse", "--formula", "F[0,60] tom & G[0,60](P=1[tom] -> F[0,30] jerry)"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("horizon: 90"));
    assert!(text.contains("synthesizable: yes"));
}

#[test]
fn malformed_formula_is_a_validation_error() {
    let o = prstl(&["parse", "--formula", "F[0,3 mu"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(prstl(&["fly"]).status.code(), Some(1));
    assert_eq!(prstl(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_prints_rounded_values_and_writes_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = prstl(&[
        "eval",
        "--formula",
        "G[0,1] F[0,3] mu",
        "--table",
        "mu=0.8,0.7,0.5,0.6,0.6,0.7",
        "--out",
        &out,
    ]);
    assert!(o.status.success());
    let rows: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(
        rows,
        [
            "time,value,exact",
            "0,0.964,true",
            "1,0.953,true",
            "2,0.929,false",
            "3,0.838,false",
            "4,0.616,false",
            "5,0.700,false",
        ]
    );
    let csv = std::fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    let first: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 0.964288).abs() < 1e-12);
}

#[test]
fn eval_reads_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    std::fs::write(&path, "mu\n0.8\n0.7\n0.5\n0.6\n").unwrap();
    let arg = format!("@{}", path.display());
    let o = prstl(&["eval", "--formula", "F[0,3] mu", "--table", &arg]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("1,0.940,false"));
}

#[test]
fn plan_emits_a_first_control() {
    let o = prstl(&["plan", "--scenario", &scenario("search"), "--horizon", "6", "--beam", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("control: "));
}

#[test]
fn simulate_then_eval_and_plot_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = prstl(&[
        "simulate", "--scenario", &scenario("search"), "--horizon", "8", "--beam", "3", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = dir.path().join("search.trace.ndjson");
    assert!(trace.exists());
    assert!(dir.path().join("search.timings.csv").exists());

    let t = trace.display().to_string();
    let o = prstl(&["eval", "--formula", "F[0,8] tom", "--trace", &t]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 10);

    let plots = dir.path().join("plots").display().to_string();
    let o = prstl(&["plot", "--trace", &t, "--steps", "0,3", "--out", &plots]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(dir.path().join("plots/step_003.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn invalid_scenarios_and_traces_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 99\n").unwrap();
    let o = prstl(&["simulate", "--scenario", &bad.display().to_string()]);
    assert_eq!(o.status.code(), Some(2));

    let o = prstl(&["simulate", "--scenario", &scenario("search"), "--formula", "F[0,5] spike"]);
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("none.toml").display().to_string();
    assert_eq!(prstl(&["plan", "--scenario", &missing]).status.code(), Some(3));

    let empty = dir.path().join("empty.ndjson");
    std::fs::write(&empty, "").unwrap();
    let o = prstl(&["plot", "--trace", &empty.display().to_string()]);
    assert_ne!(o.status.code(), Some(0));
}
