use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use homentropy::verify::CheckReport;

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_homentropy"))
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

const PACKING: &str = r#"
task = "packing_curve"
seed = 4
epsilon_grid = [1.2, 0.9, 0.6, 0.45]
[space]
group = "SO"
n = 3
subgroup = "grassmann"
k = 1
[budgets]
sampler = 5000
"#;

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn verify_all_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "task = \"verify_all\"\nseed = 2\n[space]\ngroup = \"U\"\nn = 2\nsubgroup = \"trivial\"\n[verify]\ndistance_samples = 200\nlipschitz_samples = 200\ncommutator_samples = 200\n";
    let out = run(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let all: Vec<CheckReport> =
        serde_json::from_slice(&fs::read(dir.path().join("out/verify_all_checks.json")).unwrap()).unwrap();
    assert!(all.len() >= 6 && all.iter().all(|r| r.passed));
    let one: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/verify_all_00_distance_identity.json")).unwrap())
            .unwrap();
    for key in ["name", "params", "samples", "worst_violation", "witness_b64", "passed"] {
        assert!(one.get(key).is_some(), "{key}");
    }
    for r in &all {
        let w = r.witness().unwrap().unwrap();
        assert!((w.violation().unwrap() - r.worst_violation).abs() <= 1e-12, "{}", r.name);
    }
}

#[test]
fn unsorted_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &PACKING.replace("[1.2, 0.9, 0.6, 0.45]", "[0.9, 1.2]"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("descending"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_homentropy")).args(["run", "/nonexistent/cfg.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn packing_curve_rows_grow_as_epsilon_shrinks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), PACKING, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/packing_curve.csv"));
    assert_eq!(rows.len(), 4);
    let counts: Vec<usize> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    assert!(rows.iter().all(|r| &r[2] == "Ntilde" && &r[0] == "SO3/grassmann1" && &r[7] == "2"));
    // only the final files remain; temporaries were renamed
    let names: Vec<String> =
        fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| n.starts_with("packing_curve")), "{names:?}");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PACKING.replace("[1.2, 0.9, 0.6, 0.45]", "[1.2]");
    let out = run(dir.path(), &cfg, &["--seed", "31"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("out/packing_curve.csv"));
    assert_eq!(&rows[0][5], "31");
}

#[test]
fn cover_curve_reports_both_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PACKING.replace("packing_curve", "cover_curve").replace("sampler = 5000", "sampler = 3000\nprobe = 1000");
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/cover_curve.csv"));
    assert_eq!(rows.len(), 8);
    for pair in rows.chunks(2) {
        assert_eq!(&pair[0][2], "Npp_certified");
        assert_eq!(&pair[1][2], "Ntilde");
        assert!(!pair[0][4].is_empty());
        let (npp, nt): (usize, usize) = (pair[0][3].parse().unwrap(), pair[1][3].parse().unwrap());
        assert!(npp <= nt);
    }
    let chain: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/cover_curve_chain.json")).unwrap()).unwrap();
    assert_eq!(chain.as_array().unwrap().len(), 4);
}

#[test]
fn linearized_cover_needs_kappa_or_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "task = \"cover_curve\"\ncover_method = \"linearized\"\nepsilon_grid = [1.0]\n[space]\ngroup = \"SO\"\nn = 3\nsubgroup = \"block_diagonal\"\npartition = [1, 1, 1]\n[budgets]\nsampler = 500\nprobe = 200\ndiam_samples = 8\n";
    let out = run(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
    let out = run(dir.path(), cfg, &["--override-kappa-gate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invariants_and_bounds_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "task = \"invariants\"\n[space]\ngroup = \"U\"\nn = 4\nsubgroup = \"grassmann\"\nk = 2\n[budgets]\ndiam_samples = 16\n";
    let out = run(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let inv: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/invariants.json")).unwrap()).unwrap();
    assert_eq!(inv["dim_m"], 8);
    assert_eq!(inv["kappa_known"], 1.0);

    let cfg = cfg.replace("\"invariants\"", "\"bounds\"\nepsilon_grid = [0.5, 0.1]");
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let b: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/bounds.json")).unwrap()).unwrap();
    assert_eq!(b["bounds"].as_array().unwrap().len(), 2);
    assert!(b["gate"]["satisfied"].as_bool().unwrap());
}
