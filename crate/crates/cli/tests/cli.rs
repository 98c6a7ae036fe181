use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_periodforge"))
        .args(args)
        .env_remove("PERIODFORGE_MAX_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rtw.json");
    let o = run(&["solve", "--family", "rtw", "--pin", "a1=0.265", "--out", rec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&rec).unwrap();
    assert!(text.contains("\"a2\": \"0.2709058763"), "{text}");

    let o = run(&["verify", "--record", rec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn solve_writes_record_to_stdout() {
    let o = run(&["solve", "--family", "ww-odd", "--n", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"family\": \"WW_ODD(0)\""), "{}", stdout(&o));
}

#[test]
fn bundled_record_verifies() {
    let o = run(&["verify", "--record", "bundled:par4n2_n3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn broken_table_fails_verification() {
    let o = run(&["verify", "--record", "bundled:type12n_n3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn unknown_family_is_a_config_error() {
    let o = run(&["solve", "--family", "klein-bottle"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("klein-bottle"));
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_periodforge"))
        .args(["solve", "--family", "rtw"])
        .env("PERIODFORGE_MAX_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mesh.toml");
    let obj = dir.path().join("scherk.obj");
    fs::write(&cfg, format!("family = \"scherk0\"\nradial = 8\nangular = 8\nout = {:?}\n", obj)).unwrap();
    let o = run(&["mesh", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&obj).unwrap();
    assert!(text.lines().any(|l| l.starts_with("f ")));
}

#[test]
fn config_file_typo_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "famly = \"rtw\"\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flat_writes_svg_and_vertex_list() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("scherk.svg");
    let o = run(&["flat", "--family", "scherk0", "--form", "invgdh", "--out", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&svg).unwrap().contains("<svg"));
    assert!(Path::new(&svg.with_extension("txt")).exists());
}

#[test]
fn sweep_writes_one_record_per_pin() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("pins.txt");
    fs::write(&schedule, "0.2\n0.22\n0.24\n").unwrap();
    let out = dir.path().join("branch");
    let o = run(&[
        "sweep",
        "--family",
        "rtw",
        "--pin",
        "a1",
        "--schedule",
        schedule.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 3);
}

#[test]
fn sweep_needs_parallel_family() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("pins.txt");
    fs::write(&schedule, "0.2\n").unwrap();
    let o = run(&[
        "sweep",
        "--family",
        "type34",
        "--pin",
        "a1",
        "--schedule",
        schedule.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
