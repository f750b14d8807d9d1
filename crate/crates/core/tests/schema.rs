use std::path::Path;

use qjump::experiments::{run_and_write, ExperimentKind, RunConfig, SCHEMA_VERSION};

fn csv_header(path: &Path) -> (serde_json::Value, Vec<String>, usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let config = lines.next().unwrap().strip_prefix("# config: ").expect("config line");
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (serde_json::from_str(config).unwrap(), header, lines.count())
}

fn sidecar(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn config(kind: ExperimentKind, text: &str, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_toml_as(kind, text).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn spectral_tables_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        ExperimentKind::SpectralScan,
        "n_samples = 2\n[model]\nsites = 4\n[grid]\ndisorder = [1.0, 20.0]\nzeta = [0.5, 1.0]\n\
         [solver]\ndensity_bins = 8\n",
        dir.path(),
    );
    run_and_write(&cfg).unwrap();

    let (embedded, header, rows) = csv_header(&dir.path().join("spectral.csv"));
    assert_eq!(embedded["kind"], "spectral_scan");
    assert_eq!(embedded["schema_version"], SCHEMA_VERSION);
    assert_eq!(
        header,
        ["h", "zeta", "r_mean", "r_stderr", "cos_mean", "cos_stderr", "n_eigs", "n_samples", "base_seed"]
    );
    assert_eq!(rows, 4);

    let side = sidecar(&dir.path().join("spectral.json"));
    assert_eq!(side["schema_version"], SCHEMA_VERSION);
    assert_eq!(side["table"], "spectral");
    assert_eq!(side["columns"].as_array().unwrap().len(), header.len());
    assert_eq!(side["rows"], rows);
    assert_eq!(side["config"], embedded);

    let (_, density, cells) = csv_header(&dir.path().join("spectral_density.csv"));
    assert_eq!(density, ["h", "zeta", "row", "col", "re_center", "im_center", "mass"]);
    assert_eq!(cells, 4 * 64);
}

#[test]
fn dynamics_and_transient_tables_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        ExperimentKind::DynamicsScan,
        "n_samples = 2\n[model]\nsites = 4\n[grid]\ndisorder = [3.0]\nzeta = [1.0]\n",
        &dir.path().join("steady"),
    );
    run_and_write(&cfg).unwrap();
    let (_, header, rows) = csv_header(&dir.path().join("steady/dynamics_samples.csv"));
    assert_eq!(rows, 2);
    for col in ["seed", "imbalance", "activity", "number", "min_eigenvalue"] {
        assert!(header.iter().any(|h| h == col), "{col}");
    }

    let cfg = config(
        ExperimentKind::Transient,
        "n_samples = 2\n[model]\nsites = 4\n[grid]\ndisorder = [2.5]\nzeta = [0.2]\n\
         [solver]\nt_max = 1.0\nsample_dt = 0.25\n",
        &dir.path().join("transient"),
    );
    run_and_write(&cfg).unwrap();
    let (_, header, rows) = csv_header(&dir.path().join("transient/transient_h2.5_z0.2.csv"));
    assert_eq!(header[0], "time");
    assert!(header.iter().any(|h| h == "imbalance_mean"));
    assert!(header.iter().any(|h| h == "imbalance_stderr"));
    assert_eq!(rows, 5);
}
