use std::fs;
use std::path::Path;

use momdist::error::Error;
use momdist::experiment::{run_experiment, ExperimentName, ExperimentSpec, Manifest};
use momdist::persistence::PersistenceDiagram;

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn assert_files_exist(dir: &Path, manifest: &Manifest) {
    assert!(!manifest.files.is_empty());
    for f in &manifest.files {
        assert!(dir.join(f).is_file(), "{f} listed but missing");
    }
}

#[test]
fn influence_small_run_writes_curves_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentName::Influence, 7, tmp.path())
        .set("n", 120)
        .set("m_values", "4,30")
        .set("replicates", 2)
        .set("q", 21)
        .set("k", 10)
        .set("grid_resolution", 0.25);
    let outcome = run_experiment(&spec).unwrap();
    let manifest = read_manifest(tmp.path());
    assert_eq!(manifest, outcome.manifest);
    assert_eq!(manifest.seed, 7);
    assert_eq!(manifest.parameters["q"], "21");
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
    assert!(!manifest.notes.is_empty());
    assert_files_exist(tmp.path(), &manifest);

    let curves = fs::read_to_string(tmp.path().join("influence_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 3);
    let rows = outcome.summary["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    // plain distance at an outlier is zero, so its birth influence is d_n(x0)
    for r in rows.iter().filter(|r| r["method"] == "plain") {
        assert!(r["delta_b"].as_f64().unwrap() > 0.5);
    }
    // with 2m < Q the block median cannot come from a contaminated block
    for r in rows.iter().filter(|r| r["method"] == "momdist" && r["m"] == 4) {
        assert!(r["delta_b"].as_f64().unwrap() <= 0.0);
    }
}

#[test]
fn identical_specs_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let spec = |dir: &Path| {
        ExperimentSpec::new(ExperimentName::SublevelCompare, 11, dir).set("n", 150).set("m", 15).set("q", 31)
    };
    let ma = run_experiment(&spec(a.path())).unwrap().manifest;
    let mb = run_experiment(&spec(b.path())).unwrap().manifest;
    assert_eq!(ma, mb);
    for f in &ma.files {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let d =
        PersistenceDiagram::from_json(&fs::read_to_string(a.path().join("diagram_weighted.json")).unwrap()).unwrap();
    assert!(d.in_dim(1).count() >= 1);
}

#[test]
fn adaptive_q_table_has_one_row_per_replicate() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentName::AdaptiveQ, 3, tmp.path())
        .set("n", 150)
        .set("replicates", 2)
        .set("m_low", 10)
        .set("m_high", 20)
        .set("m_min", 5)
        .set("m_max", 40)
        .set("theta", 1.3)
        .set("heuristic_replicates", 3);
    let outcome = run_experiment(&spec).unwrap();
    let manifest = read_manifest(tmp.path());
    assert_files_exist(tmp.path(), &manifest);
    let table = fs::read_to_string(tmp.path().join("relative_error.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    for row in outcome.summary["rows"].as_array().unwrap() {
        let m = row["m"].as_u64().unwrap();
        assert!((10..=20).contains(&m));
        assert!(row["m_resample"].as_u64().is_some());
    }
    assert!(manifest.files.iter().any(|f| f.ends_with("_lepski.json")));
}

#[test]
fn highdim_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentName::Highdim, 5, tmp.path())
        .set("n_per_circle", 60)
        .set("ambient_dim", 10)
        .set("b", 10)
        .set("m_min", 3)
        .set("m_max", 20)
        .set("theta", 1.5);
    let outcome = run_experiment(&spec).unwrap();
    assert_eq!(outcome.summary["n"], 120);
    assert_eq!(outcome.summary["outliers"], 15);
    assert_files_exist(tmp.path(), &read_manifest(tmp.path()));
}

#[test]
fn image_recover_uses_budget_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentName::ImageRecover, 2, tmp.path()).set("points_per_unit_intensity", 2);
    let outcome = run_experiment(&spec).unwrap();
    let n_clean = outcome.summary["n_clean"].as_u64().unwrap() as f64;
    let q = outcome.summary["q"].as_u64().unwrap();
    assert_eq!(q, 1 + 2 * (0.1 * n_clean).ceil() as u64);
    let csv = fs::read_to_string(tmp.path().join("rescaled_intensity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 28 * 28);
    for line in csv.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn missing_and_bad_parameters_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(ExperimentName::Highdim, 1, tmp.path());
    spec.parameters.remove("outlier_fraction");
    match run_experiment(&spec) {
        Err(Error::MissingParameter(p)) => assert_eq!(p, "outlier_fraction"),
        other => panic!("unexpected {other:?}"),
    }
    let spec = ExperimentSpec::new(ExperimentName::Influence, 1, tmp.path()).set("q", "many");
    assert!(matches!(run_experiment(&spec), Err(Error::InvalidParameter { name, .. }) if name == "q"));
}
