//! On-disk format tests: bit-exact round trips for all three artifact
//! kinds, the corruption / format-mismatch error split, tabular import,
//! and atomic overwrite behavior.

use std::fs;
use std::path::Path;

use svmp_cli::error::StoreError;
use svmp_cli::store::{
    load_dataset, load_descriptors, load_features_auto, load_model, load_tabular,
    save_dataset, save_descriptors, save_model, DescriptorRecord, DescriptorSet, ModelFile,
};
use svmp_core::dataset::{synthesize, BagDataset, SyntheticSpec};
use svmp_core::joint::ActionClassifierSet;
use svmp_core::pool::{FeatureBag, NegativeBag};
use svmp_core::svm::Hyperplane;

fn small_dataset(seed: u64) -> BagDataset {
    synthesize(&SyntheticSpec {
        class_count: 3,
        sequences_per_class: 2,
        frames_per_sequence: 4,
        dimension: 5,
        informative_fraction: 0.4,
        signal_strength: 3.0,
        noise_sigma: 0.5,
        negative_frame_count: 6,
        seed,
    })
    .unwrap()
}

#[test]
fn dataset_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    let ds = small_dataset(11);
    save_dataset(&ds, &path).unwrap();
    let loaded = load_dataset(&path).unwrap();
    // Frames are quantized to f32 at generation time, so equality here is
    // exact, not approximate.
    assert_eq!(loaded, ds);
}

#[test]
fn a_hundred_random_round_trips_survive() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100u64 {
        let ds = synthesize(&SyntheticSpec {
            class_count: 1 + (seed % 3) as usize,
            sequences_per_class: 1 + (seed % 2) as usize,
            frames_per_sequence: 2 + (seed % 4) as usize,
            dimension: 3 + (seed % 5) as usize,
            informative_fraction: 0.5,
            signal_strength: 2.0,
            noise_sigma: 0.7,
            negative_frame_count: 4,
            seed,
        })
        .unwrap();
        let path = dir.path().join(format!("ds{seed}.txt"));
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds, "seed {seed}");
    }
}

fn sample_descriptors() -> DescriptorSet {
    DescriptorSet {
        method: "svmp".into(),
        dimension: 4,
        class_count: 2,
        config_echo: "eta=0.9 c_init=0.0001".into(),
        records: vec![
            DescriptorRecord {
                sequence_id: "c00s000".into(),
                label: 0,
                satisfied: Some(true),
                final_c: Some(0.1),
                achieved_fraction: Some(0.92),
            },
            DescriptorRecord {
                sequence_id: "c01s000".into(),
                label: 1,
                satisfied: Some(false),
                final_c: Some(1e4),
                achieved_fraction: Some(1.0 / 3.0),
            },
            DescriptorRecord {
                sequence_id: "c01s001".into(),
                label: 1,
                satisfied: None,
                final_c: None,
                achieved_fraction: None,
            },
        ],
        vectors: vec![
            vec![1.0, -2.5, 3.25e-17, 0.0],
            vec![f64::MIN_POSITIVE, 1e300, -1e-300, 7.0],
            vec![0.1 + 0.2, -0.0, 42.0, 1.0 / 3.0],
        ],
    }
}

#[test]
fn descriptor_round_trip_preserves_vectors_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("desc.txt");
    let set = sample_descriptors();
    save_descriptors(&set, &path).unwrap();
    let loaded = load_descriptors(&path).unwrap();
    assert_eq!(loaded, set);
}

#[test]
fn model_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    let model = ModelFile {
        classifiers: ActionClassifierSet {
            classes: vec![
                Hyperplane { weights: vec![0.5, -1.5, 2.25], bias: -0.125 },
                Hyperplane { weights: vec![1e-9, 3.0, -7.5], bias: 4.0 },
            ],
            class_ids: vec![0, 1],
        },
        feature_mean: vec![0.25, -0.75],
        pool_echo: "eta=0.9".into(),
    };
    save_model(&model, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
}

fn blob_of(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap().to_os_string();
    name.push(".blob");
    path.with_file_name(name)
}

#[test]
fn truncated_blob_is_reported_as_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    save_dataset(&small_dataset(3), &path).unwrap();
    let blob = blob_of(&path);
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 7]).unwrap();
    match load_dataset(&path) {
        Err(StoreError::CorruptFile(msg)) => assert!(msg.contains("checksum"), "{msg}"),
        other => panic!("expected CorruptFile, got {other:?}"),
    }
}

#[test]
fn altered_blob_byte_is_reported_as_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    save_dataset(&small_dataset(4), &path).unwrap();
    let blob = blob_of(&path);
    let mut bytes = fs::read(&blob).unwrap();
    bytes[10] ^= 0xff;
    fs::write(&blob, &bytes).unwrap();
    assert!(matches!(load_dataset(&path), Err(StoreError::CorruptFile(_))));
}

#[test]
fn geometry_disagreement_is_a_format_mismatch_not_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    save_dataset(&small_dataset(5), &path).unwrap();
    // The blob and its checksum stay untouched; only the declared
    // dimension changes. A checksum-clean size disagreement means the
    // manifest does not describe this blob.
    let text = fs::read_to_string(&path).unwrap();
    let text = text.replace("dimension: 5", "dimension: 6");
    fs::write(&path, text).unwrap();
    match load_dataset(&path) {
        Err(StoreError::FormatVersionMismatch(msg)) => {
            assert!(msg.contains("geometry"), "{msg}")
        }
        other => panic!("expected FormatVersionMismatch, got {other:?}"),
    }
}

#[test]
fn wrong_magic_and_unsupported_version_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    save_dataset(&small_dataset(6), &path).unwrap();

    let original = fs::read_to_string(&path).unwrap();
    fs::write(&path, original.replace("format: SVMPBAGS", "format: NOPENOPE")).unwrap();
    assert!(matches!(load_dataset(&path), Err(StoreError::FormatVersionMismatch(_))));

    fs::write(&path, original.replace("version: 1", "version: 99")).unwrap();
    assert!(matches!(load_dataset(&path), Err(StoreError::FormatVersionMismatch(_))));
}

#[test]
fn missing_header_is_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    save_dataset(&small_dataset(7), &path).unwrap();
    let text: String = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("provenance:"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&path, text).unwrap();
    assert!(matches!(load_dataset(&path), Err(StoreError::CorruptFile(_))));
}

#[test]
fn missing_file_is_an_io_failure() {
    assert!(matches!(
        load_dataset(Path::new("/nonexistent/nowhere.txt")),
        Err(StoreError::IoFailure(_))
    ));
}

#[test]
fn tabular_import_groups_frames_and_snaps_to_f32() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.txt");
    fs::write(
        &path,
        "# id label features...\n\
         walk0 0 0.1 0.2\n\
         walk0 0 0.3 0.4\n\
         jump0 1 1.5 -2.5\n\
         bg -1 0.0 0.7\n\
         bg -1 0.9 0.1\n",
    )
    .unwrap();
    let ds = load_tabular(&path).unwrap();
    assert_eq!(ds.dimension, 2);
    assert_eq!(ds.class_count, 2);
    assert_eq!(ds.sequences.len(), 2);
    assert_eq!(ds.sequences[0].sequence_id, "walk0");
    assert_eq!(ds.sequences[0].frames.len(), 2);
    assert_eq!(ds.sequences[1].sequence_id, "jump0");
    assert_eq!(ds.negative.frames.len(), 2);
    // Every imported value is snapped to 32-bit precision so the native
    // format round trip below is exact.
    assert_eq!(ds.sequences[0].frames[0][0], 0.1f32 as f64);
    let native = dir.path().join("native.txt");
    save_dataset(&ds, &native).unwrap();
    assert_eq!(load_dataset(&native).unwrap().sequences, ds.sequences);
}

#[test]
fn tabular_rejects_relabeling_and_missing_negatives() {
    let dir = tempfile::tempdir().unwrap();
    let relabeled = dir.path().join("relabel.txt");
    fs::write(&relabeled, "a 0 1.0\na 1 2.0\nbg -1 0.0\n").unwrap();
    match load_tabular(&relabeled) {
        Err(StoreError::CorruptFile(msg)) => assert!(msg.contains("relabel"), "{msg}"),
        other => panic!("expected CorruptFile, got {other:?}"),
    }

    let no_negatives = dir.path().join("noneg.txt");
    fs::write(&no_negatives, "a 0 1.0\nb 1 2.0\n").unwrap();
    match load_tabular(&no_negatives) {
        Err(StoreError::CorruptFile(msg)) => assert!(msg.contains("negative"), "{msg}"),
        other => panic!("expected CorruptFile, got {other:?}"),
    }
}

#[test]
fn auto_loader_reads_both_formats_and_flags_foreign_manifests() {
    let dir = tempfile::tempdir().unwrap();

    let native = dir.path().join("native.txt");
    let ds = small_dataset(8);
    save_dataset(&ds, &native).unwrap();
    assert_eq!(load_features_auto(&native).unwrap(), ds);

    let tabular = dir.path().join("tab.txt");
    fs::write(&tabular, "a 0 1.0 2.0\nb 0 0.5 0.5\nbg -1 0.0 0.0\n").unwrap();
    assert_eq!(load_features_auto(&tabular).unwrap(), load_tabular(&tabular).unwrap());

    // A manifest of some other artifact kind is a format error, not a
    // parse failure.
    let foreign = dir.path().join("desc.txt");
    save_descriptors(&sample_descriptors(), &foreign).unwrap();
    assert!(matches!(
        load_features_auto(&foreign),
        Err(StoreError::FormatVersionMismatch(_))
    ));
}

#[test]
fn saving_over_an_existing_file_replaces_it_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    save_dataset(&small_dataset(1), &path).unwrap();
    let second = small_dataset(2);
    save_dataset(&second, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), second);
    // No temporary files may survive the rename.
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(sorted, vec!["ds.txt".to_string(), "ds.txt.blob".to_string()], "{names:?}");
}

#[test]
fn hand_built_datasets_round_trip_too() {
    // Exercise the writer with awkward but legal content: a one-frame
    // sequence, differing bag sizes, and a multi-word provenance string.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.txt");
    let ds = BagDataset {
        dimension: 2,
        class_count: 2,
        sequences: vec![
            FeatureBag {
                sequence_id: "solo".into(),
                label: 0,
                frames: vec![vec![1.0, -1.0]],
            },
            FeatureBag {
                sequence_id: "pair".into(),
                label: 1,
                frames: vec![vec![0.5, 0.25], vec![-0.5, -0.25], vec![2.0, 4.0]],
            },
        ],
        negative: NegativeBag {
            frames: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            source_tag: "pooled clutter".into(),
        },
        provenance: "hand built\nwith a newline".into(),
        split_assignments: None,
    };
    save_dataset(&ds, &path).unwrap();
    let loaded = load_dataset(&path).unwrap();
    assert_eq!(loaded.sequences, ds.sequences);
    assert_eq!(loaded.negative, ds.negative);
    // Newlines cannot survive a line-oriented manifest; they are folded.
    assert_eq!(loaded.provenance, "hand built; with a newline");
}
