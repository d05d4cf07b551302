use std::collections::BTreeMap;

use diagram_probe::activations::{write_dump, Activations, DumpReader, Stream};
use diagram_probe::dataset::{check_manifest, read_manifest, write_dataset, DatasetBuilder};
use diagram_probe::graph::Aspect;
use diagram_probe::intervention::{build_patched_dump, ControlMode, InterventionMode, InterventionPlan};
use diagram_probe::metrics::{emit_reports, vqa_accuracy, AccuracyGrid, ThresholdTable};
use diagram_probe::mock::{answer_manifest, mock_encode, EncodingConfig, InjectionRule, LabelCode, PositionRule};
use diagram_probe::pipeline::{evaluate_grid, probe_jobs, train_job};
use diagram_probe::probe::{read_probe, write_probe, ProbeCheckpoint, ProbeKey, ProbeRegistry, TrainSpec};
use diagram_probe::render::RenderConfig;

fn color_config() -> EncodingConfig {
    EncodingConfig {
        d: 16,
        layers: vec![0, 1],
        noise_sigma: 0.3,
        rules: vec![InjectionRule::new(
            Aspect::NodeColor,
            PositionRule::TargetNodePatches,
            LabelCode::LinearOneHot { scale: 3.0 },
            0.3,
        )
        .on_layers(vec![1])],
        ..EncodingConfig::default()
    }
}

#[test]
fn dataset_survives_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let builder = DatasetBuilder::default();
    let m = builder.build_test(Aspect::EdgeStyle, 1, 3, 11).unwrap().remove(0);
    check_manifest(&m).unwrap();
    let written = write_dataset(&m, dir.path(), &RenderConfig::default(), true).unwrap();
    assert_eq!(written, 3 * m.len() + 1);
    assert_eq!(write_dataset(&m, dir.path(), &RenderConfig::default(), true).unwrap(), 0);
    let back = read_manifest(&m.path_in(dir.path()), &builder).unwrap();
    assert_eq!(back, m);
    for s in &m.samples {
        assert!(dir.path().join(s.image_ref()).is_file());
        assert!(dir.path().join(s.raster_ref()).is_file());
    }
}

#[test]
fn mock_dump_file_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let m = DatasetBuilder::default().build_variant(Aspect::NodeColor, diagram_probe::dataset::Variant::Rand, 2, 5).unwrap();
    let cfg = color_config();
    let dump = mock_encode(&m, &cfg, 9).unwrap();
    assert_eq!(dump, mock_encode(&m, &cfg, 9).unwrap());
    let path = dir.path().join("clean.admp");
    write_dump(&path, dump.meta().clone(), dump.blocks()).unwrap();
    let reader = DumpReader::open(&path).unwrap();
    assert_eq!(reader.meta().grid, Some((16, 16)));
    assert_eq!(reader.read_all().unwrap(), dump);
    // answers read straight from the file agree with the in-memory dump
    assert_eq!(answer_manifest(&reader, &m, &cfg).unwrap(), answer_manifest(&dump, &m, &cfg).unwrap());
    assert!(vqa_accuracy(&answer_manifest(&reader, &m, &cfg).unwrap(), &m).unwrap() >= 0.99);
}

#[test]
fn text_stream_has_one_job_per_token() {
    let m = DatasetBuilder::default().build_test(Aspect::EdgeExistence, 1, 2, 1).unwrap().remove(0);
    let cfg = EncodingConfig {
        stream: Stream::LanguageModelText,
        layers: vec![4, 7],
        ..EncodingConfig::default()
    };
    let dump = mock_encode(&m, &cfg, 1).unwrap();
    let meta = dump.meta();
    assert_eq!(meta.token_strings.as_ref().unwrap().len(), meta.positions);
    assert_eq!(meta.token_strings.as_ref().unwrap().join(" "), m.samples[0].question);
    let jobs = probe_jobs(&dump);
    assert_eq!(jobs.len(), 2 * meta.positions);
    assert_eq!(jobs[0], (4, Some(0)));
}

/// Probe, persist, report and patch one aspect end to end on disk.
#[test]
fn probe_then_patch_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = color_config();
    let builder = DatasetBuilder::default();
    let train = builder.build_train(Aspect::NodeColor, 4, 2).unwrap();
    let tests = builder.build_test(Aspect::NodeColor, 2, 3, 2).unwrap();
    let train_dump = mock_encode(&train, &cfg, 4).unwrap();
    let spec = TrainSpec {
        epochs: 40,
        seed: 8,
        ..TrainSpec::default()
    };

    let mut registry = ProbeRegistry::default();
    let mut probes = BTreeMap::new();
    for (layer, position) in probe_jobs(&train_dump) {
        let (outcome, chosen) = train_job(&train_dump, &train, layer, position, &spec).unwrap();
        let ckpt = ProbeCheckpoint {
            key: ProbeKey {
                aspect: Aspect::NodeColor,
                stream: Stream::VisionEncoder,
                layer,
                position,
            },
            params: outcome.params.clone(),
            spec: chosen,
            best_val_accuracy: outcome.best_val_accuracy,
        };
        let path = dir.path().join("probes").join(ckpt.key.file_name());
        assert!(write_probe(&path, &ckpt).unwrap());
        assert!(!write_probe(&path, &ckpt).unwrap());
        assert_eq!(read_probe(&path).unwrap(), ckpt);
        registry.insert(&ckpt);
        probes.insert((layer, position), outcome.params);
    }
    let reg_path = dir.path().join("probes/registry.json");
    registry.save(&reg_path).unwrap();
    assert_eq!(ProbeRegistry::load(&reg_path).unwrap(), registry);
    assert_eq!(registry.entries.len(), 2);

    let dumps: Vec<_> = tests.iter().map(|m| mock_encode(m, &cfg, 4).unwrap()).collect();
    let grids: Vec<AccuracyGrid> = tests
        .iter()
        .zip(&dumps)
        .enumerate()
        .map(|(j, (m, d))| evaluate_grid(&probes, d, m, j as u32).unwrap())
        .collect();
    let files = emit_reports(&grids, &ThresholdTable::standard(), &dir.path().join("reports")).unwrap();
    assert!(files.iter().all(|p| p.is_file()));
    assert!(dir.path().join("reports/summary.json").is_file());
    assert!(dir.path().join("reports/node_color/vision_encoder/maxacc.csv").is_file());

    let tau = 1.0 / 9.0;
    for (j, (m, dump)) in tests.iter().zip(&dumps).enumerate() {
        let plan = InterventionPlan::build(&grids[j], &[0, 1], tau, 3, ControlMode::Uniform).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<InterventionPlan>(&json).unwrap(), plan);
        let patched = build_patched_dump(dump, &plan, InterventionMode::Patched).unwrap();
        let path = dir.path().join(format!("dumps/patched_{j}.admp"));
        write_dump(&path, patched.dump.meta().clone(), patched.dump.blocks()).unwrap();
        let reader = DumpReader::open(&path).unwrap();
        // every replaced row reads back as the recorded mean
        for r in &patched.replacements {
            let block = reader.read_slice(r.sample, r.layer).unwrap();
            for &t in &r.positions {
                assert_eq!(&block[t * 16..(t + 1) * 16], &r.mu[..]);
            }
        }
        let clean = vqa_accuracy(&answer_manifest(dump, m, &cfg).unwrap(), m).unwrap();
        let after = vqa_accuracy(&answer_manifest(&reader, m, &cfg).unwrap(), m).unwrap();
        assert!(clean >= 0.99, "clean {clean}");
        assert!(after <= tau + 0.05, "patched {after}");
    }
}

#[test]
fn empty_target_set_is_an_identity_patch() {
    let cfg = color_config();
    let m = DatasetBuilder::default().build_test(Aspect::NodeColor, 1, 2, 6).unwrap().remove(0);
    let dump = mock_encode(&m, &cfg, 2).unwrap();
    let grid = AccuracyGrid::new(Aspect::NodeColor, Stream::VisionEncoder, 0, vec![0, 1], 256, Some((16, 16)));
    let plan = InterventionPlan::build(&grid, &[0, 1], 0.5, 0, ControlMode::Uniform).unwrap();
    assert!(plan.is_empty());
    for mode in [InterventionMode::Patched, InterventionMode::Controlled] {
        let run = build_patched_dump(&dump, &plan, mode).unwrap();
        assert_eq!(run.dump, dump);
        assert_eq!(answer_manifest(&run.dump, &m, &cfg).unwrap(), answer_manifest(&dump, &m, &cfg).unwrap());
    }
}
