use std::path::Path;
use std::process::{Command, Output};

use msgwas_cli::manifest::RunManifest;

fn msgwas(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msgwas"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("MSGWAS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn table1_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = msgwas(dir.path(), &["table1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(csv.starts_with("block,delta,"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 17);

    let text = std::fs::read_to_string(dir.path().join("table1_manifest.json")).unwrap();
    let m = RunManifest::from_json(&text).unwrap();
    assert_eq!(m.subcommand, "table1");
    assert!(m.verify(dir.path()).unwrap().is_empty());
    std::fs::write(dir.path().join("table1.csv"), "tampered\n").unwrap();
    assert_eq!(m.verify(dir.path()).unwrap(), vec!["table1.csv".to_string()]);
}

#[test]
fn tsv_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = msgwas(dir.path(), &["power", "--format", "tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = std::fs::read_to_string(dir.path().join("power.tsv")).unwrap();
    assert!(tsv.starts_with("pi\talpha1\talpha_joint\tlambda\tpower\tnull_rate\n"));
}

#[test]
fn validation_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = msgwas(dir.path(), &["design-optimize", "--set", "design.fwer=1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("design.fwer"), "{}", stderr(&o));

    let o = msgwas(dir.path(), &["table1", "--set", "table1.no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = msgwas(dir.path(), &["reseq-plan", "--set", "reseq.budget=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}

#[test]
fn infeasible_design_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = msgwas(dir.path(), &["design-optimize", "--set", "design.n_max=10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_file_and_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n[simulate]\nreplicates = 2\nwrite_cohort = false\n[simulate.panel]\nn_markers = 200\n",
    )
    .unwrap();
    let o = msgwas(
        dir.path(),
        &["simulate", "--config", cfg.to_str().unwrap(), "--seed", "9"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = RunManifest::from_json(
        &std::fs::read_to_string(dir.path().join("simulate_manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m.seed, 9);
    assert_eq!(m.config.simulate.replicates, 2);
    assert!(!dir.path().join("cohort.gwsc").exists());
    let reps = std::fs::read_to_string(dir.path().join("simulate_replicates.csv")).unwrap();
    assert_eq!(reps.lines().count(), 3);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_msgwas"))
        .arg("table1")
        .env("MSGWAS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("table1.csv").exists());
}

#[test]
fn significance_reads_simulated_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let o = msgwas(
        dir.path(),
        &[
            "simulate",
            "--set",
            "simulate.replicates=1",
            "--set",
            "simulate.panel.n_markers=30",
            "--set",
            "simulate.n_cases=100",
            "--set",
            "simulate.n_controls=100",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let g = dir.path().join("cohort.gwsc");
    let p = dir.path().join("cohort_phenotypes.csv");
    let set_g = format!("significance.genotypes={:?}", g.to_str().unwrap());
    let set_p = format!("significance.phenotypes={:?}", p.to_str().unwrap());
    let o = msgwas(
        dir.path(),
        &[
            "significance",
            "--set",
            &set_g,
            "--set",
            &set_p,
            "--set",
            "significance.replicates=500",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = std::fs::read_to_string(dir.path().join("significance.csv")).unwrap();
    // two methods, 30 markers each
    assert_eq!(out.lines().count(), 61);
}
