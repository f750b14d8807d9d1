use std::path::Path;
use std::process::{Command, Output};

fn qjump(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjump"))
        .args(args)
        .current_dir(dir)
        .env_remove("QJUMP_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const SMALL_SPECTRAL: &str = r#"
kind = "spectral_scan"
n_samples = 2
[model]
sites = 4
[grid]
disorder = [1.0, 20.0]
zeta = [1.0]
"#;

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", SMALL_SPECTRAL);
    let a = qjump(&["spectral", "--config", "c.toml", "--out", "run", "--seed", "9"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let first = read_dir_sorted(&dir.path().join("run"));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["spectral.csv", "spectral.json", "spectral_samples.csv", "spectral_samples.json"]);

    let b = qjump(&["spectral", "--config", "c.toml", "--out", "run", "--seed", "9"], dir.path());
    assert!(b.status.success());
    assert_eq!(first, read_dir_sorted(&dir.path().join("run")));

    let csv = String::from_utf8(first[2].1.clone()).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert!(csv.contains("\"base_seed\":9"));
    assert_eq!(lines.next().unwrap(), "h,zeta,sample,seed,r_mean,cos_mean,n_eigs");
    // sample seeds are base ^ index
    let seeds: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(seeds, ["9", "8", "9", "8"]);
}

#[test]
fn thread_count_does_not_change_tables() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", SMALL_SPECTRAL);
    assert!(qjump(&["spectral", "--config", "c.toml", "--out", "one", "--threads", "1"], dir.path())
        .status
        .success());
    assert!(qjump(&["spectral", "--config", "c.toml", "--out", "one", "--threads", "3"], dir.path())
        .status
        .success());
    let body = |name: &str| {
        let text = std::fs::read_to_string(dir.path().join("one").join(name)).unwrap();
        text.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    let first = body("spectral.csv");
    assert!(qjump(&["spectral", "--config", "c.toml", "--out", "one", "--threads", "1"], dir.path())
        .status
        .success());
    assert_eq!(first, body("spectral.csv"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "typo.toml", "kind = \"spectral_scan\"\nn_sample = 3\n");
    assert_eq!(qjump(&["spectral", "--config", "typo.toml"], dir.path()).status.code(), Some(2));

    write(dir.path(), "other.toml", "kind = \"tebd\"\n");
    assert_eq!(qjump(&["spectral", "--config", "other.toml"], dir.path()).status.code(), Some(2));

    write(dir.path(), "big.toml", "kind = \"spectral_scan\"\n[model]\nsites = 8\n");
    let out = qjump(&["spectral", "--config", "big.toml", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x").exists());

    assert_eq!(qjump(&["spectral", "--config", "missing.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(qjump(&["nonsense"], dir.path()).status.code(), Some(2));
}

#[test]
fn empty_grid_is_a_successful_no_op() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.toml", "kind = \"transient\"\n[grid]\ndisorder = []\n");
    let out = qjump(&["transient", "--config", "e.toml", "--out", "empty"], dir.path());
    assert!(out.status.success());
    assert!(!dir.path().join("empty").exists());
}

#[test]
fn numerical_failure_exits_with_3_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "t.toml",
        "kind = \"tebd\"\nn_samples = 1\n[model]\nsites = 4\n[grid]\ndisorder = [5.0]\nzeta = [0.5]\n\
         [solver]\nt_max = 1.0\nresidue_bound = 0.0\n",
    );
    let out = qjump(&["tebd", "--config", "t.toml", "--out", "bad"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bad/diagnostics.json")).unwrap()).unwrap();
    assert!(diag["error"].as_str().unwrap().contains("imaginary residue"));
    assert_eq!(diag["config"]["kind"], "tebd");
}

#[test]
fn references_and_env_threads() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "r.toml",
        "kind = \"references\"\nn_samples = 2\n[reference]\ndim = 40\npoisson_points = 300\n",
    );
    let out = Command::new(env!("CARGO_BIN_EXE_qjump"))
        .args(["references", "--config", "r.toml", "--out", "refs"])
        .current_dir(dir.path())
        .env("QJUMP_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("refs/references.csv")).unwrap();
    assert!(csv.contains("\"threads\":2"));
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert!(rows[0].starts_with("ginibre,40,2,80,"));
    assert!(rows[1].starts_with("poisson2d,300,1,300,"));
}

#[test]
fn verify_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = qjump(&["verify", "--out", "v"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
    assert!(stdout.contains("oracle_triangle"));
    assert!(dir.path().join("v/verify.csv").exists());
}
