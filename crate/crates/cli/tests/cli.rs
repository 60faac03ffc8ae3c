use std::path::Path;
use std::process::{Command, Output};

fn prguess(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prguess"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PRGUESS_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn solve_prints_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (["--n", "2", "--scenario", "tons", "--v", "1/2"], "G=5/8"),
        (["--n", "1", "--scenario", "abns", "--v", "1"], "G=1/2"),
        (["--n", "2", "--scenario", "fullns", "--v", "1/3"], "G=25/36"),
    ];
    for (args, expected) in cases {
        let mut full = vec!["solve", "--mode", "exact", "--out", "c.json"];
        full.extend(args);
        let o = prguess(&full, dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).lines().any(|l| l.starts_with(&format!("{expected} "))), "{}", stdout(&o));
    }
}

#[test]
fn solve_then_verify_then_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let o = prguess(&["solve", "--n", "2", "--scenario", "abns", "--v", "3/4", "--out", "cert.json"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("G=63/128"));

    let o = prguess(&["verify", "cert.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let path = dir.path().join("cert.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("\"objective\": \"63/128\"", "\"objective\": \"35/64\"", 1);
    assert_ne!(text, tampered);
    std::fs::write(&path, tampered).unwrap();
    let o = prguess(&["verify", "cert.json"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("certificate rejected"));
}

#[test]
fn certificates_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.json", "b.json"] {
        let o = prguess(&["solve", "--n", "2", "--scenario", "wtons", "--v", "2/5", "--out", out], dir.path());
        assert_eq!(code(&o), 0);
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn full_formulation_with_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = prguess(
        &["solve", "--n", "2", "--scenario", "tons", "--v", "1/2", "--formulation", "full", "--x-star", "10", "--y-star", "01"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("G=5/8"));
    let o = prguess(&["verify", "certificate.json"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = prguess(&["sweep", "--n", "2", "--v-grid", "0:1:11", "--out", "s.csv", "--jobs", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["scenario", "n", "v", "G", "H", "H_per_round", "mode", "lower_bound", "upper_bound"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 44);
    for r in &rows {
        assert_eq!(&r[6], "exact");
        if &r[0] == "tons" {
            // 1 - 3v/4 at v = k/10
            let v: Vec<i64> = r[2].split('/').map(|x| x.parse().unwrap()).collect();
            let (p, q) = if v.len() == 2 { (v[0], v[1]) } else { (v[0], 1) };
            let g = format!("{}/{}", 4 * q - 3 * p, 4 * q);
            let expect = reduce(&g);
            assert_eq!(&r[3], expect, "v = {}", &r[2]);
        }
    }
}

fn reduce(frac: &str) -> String {
    let (p, q) = frac.split_once('/').unwrap();
    let (p, q): (i64, i64) = (p.parse().unwrap(), q.parse().unwrap());
    let mut a = p.abs();
    let mut b = q;
    while b != 0 {
        (a, b) = (b, a % b);
    }
    let (p, q) = (p / a, q / a);
    if q == 1 {
        p.to_string()
    } else {
        format!("{p}/{q}")
    }
}

#[test]
fn sweep_output_is_deterministic_and_job_independent() {
    let dir = tempfile::tempdir().unwrap();
    let args = |jobs: &'static str, out: &'static str| {
        vec!["sweep", "--n", "1,2", "--scenario", "abns,tons", "--v", "1/10,0.5,1", "--jobs", jobs, "--out", out]
    };
    assert_eq!(code(&prguess(&args("1", "a.csv"), dir.path())), 0);
    assert_eq!(code(&prguess(&args("3", "b.csv"), dir.path())), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failed_sweep_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    // v = 2 is outside [-1, 1]; the whole sweep must fail
    let o = prguess(&["sweep", "--n", "1", "--v", "1/2,2", "--out", "bad.csv"], dir.path());
    assert_ne!(code(&o), 0);
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad: [&[&str]; 6] = [
        &["solve", "--n", "0", "--scenario", "abns", "--v", "1/2"],
        &["solve", "--n", "2", "--scenario", "nope", "--v", "1/2"],
        &["solve", "--n", "2", "--scenario", "abns", "--v", "x"],
        &["solve", "--n", "2", "--scenario", "abns", "--v", "1/2", "--x-star", "111"],
        &["sweep", "--n", "2", "--v-grid", "0:1"],
        &["verify", "missing.json"],
    ];
    for args in bad {
        let o = prguess(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.trim().is_empty());
    }
}

#[test]
fn vertex_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = prguess(&["vertex", "--scenario", "wtons"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "vertex: true");
    let o = prguess(&["vertex", "--scenario", "abns", "--n", "1", "--v", "1/2"], dir.path());
    assert_eq!(stdout(&o).trim(), "vertex: false");
}

#[test]
fn table1_check_for_two_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = prguess(&["table1", "--check", "--n", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(" ok")).count(), 40);
}
