use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use diagram_probe::activations::{write_dump, Activations};
use diagram_probe::dataset::{read_manifest, DatasetBuilder};
use diagram_probe::mock::{mock_encode, EncodingConfig};

const SMALL: &str = r#"{
  "aspects": ["node_color", "edge_count"],
  "n_per_class": 6,
  "subsets": 2,
  "seeds": {"data": 1, "model": 2, "probe": 3, "control": 4},
  "source": {"mock": {"d": 24, "layers": [0, 1], "noise_sigma": 0.4, "rules": [
    {"aspect": "node_color", "positions": "target_node_patches",
     "code": {"linear_one_hot": {"scale": 4.0}}, "noise_sigma": 0.4, "layers": [1]}]}},
  "train": {"epochs": 40}
}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_diagram-probe"));
    c.env_remove("DIAGRAM_PROBE_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>, std::time::SystemTime)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let meta = fs::metadata(&p).unwrap();
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap(), meta.modified().unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_and_bad_arguments() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let o = run(&["gen", "--aspect", "node_colour"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"aspects": ["node_color"], "n_per_clas": 3}"#);
    let o = run(&["gen", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = write_config(dir.path(), r#"{"tau": 2.0}"#);
    assert_eq!(code(&run(&["gen", "--config", cfg.to_str().unwrap()])), 2);
    let cfg = write_config(dir.path(), r#"{"source": {"external": {"dumps": "/no/such/dir"}}}"#);
    assert_eq!(code(&run(&["probe", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["gen", "--jobs", "0"])), 2);
}

#[test]
fn missing_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), SMALL);
    let args = |cmd: &'static str| vec![cmd.to_owned(), "--config".into(), cfg.to_str().unwrap().into(), "--out".into(), out.to_str().unwrap().into()];
    let o = bin().args(args("probe")).output().unwrap();
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("run gen first"));
    let o = bin().args(args("report")).output().unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn gen_writes_full_size_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen", "--aspect", "node_color", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let builder = DatasetBuilder::default();
    let train = read_manifest(&dir.path().join("data/node_color/train/manifest.jsonl"), &builder).unwrap();
    assert_eq!(train.len(), 1600);
    for j in 0..5 {
        let m = read_manifest(&dir.path().join(format!("data/node_color/fix{j}/manifest.jsonl")), &builder).unwrap();
        assert_eq!(m.len(), 800);
    }
    assert!(dir.path().join("data").join(train.samples[0].image_ref()).is_file());
}

#[test]
fn env_var_is_the_output_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"aspects": ["edge_style"], "n_per_class": 1, "subsets": 1}"#);
    let o = bin()
        .args(["gen", "--config", cfg.to_str().unwrap()])
        .env("DIAGRAM_PROBE_OUT", dir.path().join("envout"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("envout/data/edge_style/train/manifest.jsonl").is_file());
}

#[test]
fn mock_pipeline_is_resumable_and_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&["all", "--config", cfg, "--out", a.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("edge_count: clean"), "{stdout}");

    let rows: serde_json::Value = serde_json::from_slice(&fs::read(a.join("reports/intervention.json")).unwrap()).unwrap();
    let color = &rows[0];
    assert_eq!(color["aspect"], "node_color");
    assert!(color["clean"].as_f64().unwrap() >= 0.99);
    assert!(color["delta_patched"].as_f64().unwrap() >= 0.5);
    assert_eq!(color["delta_controlled"].as_f64().unwrap(), 0.0);
    // no rule for edge_count: nothing clears the threshold, so nothing moves
    assert_eq!(rows[1]["delta_patched"].as_f64().unwrap(), 0.0);
    assert!(a.join("reports/summary.json").is_file());
    assert!(a.join("probes/registry.json").is_file());
    assert!(a.join("intervention/node_color/plan_fix1.json").is_file());

    let before = snapshot(&a);
    let o = run(&["all", "--config", cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("trained 0 probes"));
    assert_eq!(snapshot(&a), before);

    let o = run(&["all", "--config", cfg, "--out", b.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(code(&o), 0);
    let strip = |s: Vec<(PathBuf, Vec<u8>, std::time::SystemTime)>| s.into_iter().map(|(p, d, _)| (p, d)).collect::<Vec<_>>();
    assert_eq!(strip(snapshot(&b)), strip(before));
}

fn external_config(dir: &Path, dumps: &Path) -> PathBuf {
    write_config(
        dir,
        &format!(
            r#"{{"aspects": ["node_shape"], "n_per_class": 2, "subsets": 1,
                "source": {{"external": {{"dumps": {:?}}}}}, "train": {{"epochs": 5}}}}"#,
            dumps.to_str().unwrap()
        ),
    )
}

#[test]
fn external_dumps_drive_probe_and_intervene() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let dumps = dir.path().join("adapter");
    fs::create_dir_all(&dumps).unwrap();
    let cfg = external_config(dir.path(), &dumps);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["gen", "--config", cfg, "--out", out.to_str().unwrap()])), 0);
    // stand in for the adapter
    let builder = DatasetBuilder::default();
    let enc = EncodingConfig {
        d: 8,
        layers: vec![5],
        ..EncodingConfig::default()
    };
    for v in ["train", "fix0"] {
        let m = read_manifest(&out.join(format!("data/node_shape/{v}/manifest.jsonl")), &builder).unwrap();
        let dump = mock_encode(&m, &enc, 0).unwrap();
        write_dump(&dumps.join(format!("node_shape/vision_encoder/{v}.admp")), dump.meta().clone(), dump.blocks()).unwrap();
    }
    let o = run(&["all", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("probes/node_shape/vision_encoder/layer5.aprb").is_file());
    assert!(out.join("grids/node_shape/vision_encoder/fix0.json").is_file());
    assert!(out.join("intervention/node_shape/plan_fix0.json").is_file());
    assert!(!out.join("dumps").exists());
    assert!(!out.join("reports/intervention.json").exists());
}

#[test]
fn non_finite_activations_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let dumps = dir.path().join("adapter");
    fs::create_dir_all(&dumps).unwrap();
    let cfg = external_config(dir.path(), &dumps);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["gen", "--config", cfg, "--out", out.to_str().unwrap()])), 0);
    let builder = DatasetBuilder::default();
    let m = read_manifest(&out.join("data/node_shape/train/manifest.jsonl"), &builder).unwrap();
    let enc = EncodingConfig {
        d: 4,
        layers: vec![0],
        ..EncodingConfig::default()
    };
    let dump = mock_encode(&m, &enc, 0).unwrap();
    let mut data = dump.data().to_vec();
    data[17] = f32::NAN;
    write_dump(&dumps.join("node_shape/vision_encoder/train.admp"), dump.meta().clone(), data.chunks(dump.meta().block_len())).unwrap();
    let o = run(&["probe", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
