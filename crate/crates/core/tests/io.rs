mod common;

use std::fs;
use std::path::PathBuf;

use image::{GrayImage, Luma, Rgb, RgbImage};
use kshs::calibration::Calibration;
use kshs::histogram::BinEdges;
use kshs::io::binary::{
    decode_descriptor, encode_descriptor, load_calibration, load_descriptor, save_calibration, save_descriptor,
};
use kshs::io::export::{read_distance_csv, read_report, write_distance_csv, write_report};
use kshs::io::frames::load_frames;
use kshs::io::manifest::{DatasetManifest, ManifestEntry};
use kshs::eval::{one_nn_loo, LabeledDescriptorSet};
use kshs::metric::pairwise_distances;
use kshs::scattering::ScatteringConfig;
use kshs::synth::{generate_synthetic_corpus, RandomSpec, SynthConfig, RANDOM_FINGERPRINT};
use kshs::{Fingerprint, KshsError};
use proptest::prelude::*;
use tempfile::tempdir;

use common::random_set;

#[test]
fn descriptor_round_trip_is_bit_exact() {
    let dir = tempdir().unwrap();
    for (i, d) in random_set(1, 5, &RandomSpec::default()).into_iter().enumerate() {
        let path = dir.path().join(format!("{i}.kshs"));
        save_descriptor(&path, &d).unwrap();
        let back = load_descriptor(&path, Some(&RANDOM_FINGERPRINT)).unwrap();
        assert_eq!(back, d);
        assert_eq!(encode_descriptor(&back), fs::read(&path).unwrap());
    }
}

#[test]
fn descriptor_fingerprint_mismatch_is_reported() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("d.kshs");
    save_descriptor(&path, &random_set(2, 1, &RandomSpec::default())[0]).unwrap();
    let other = Fingerprint([9; 32]);
    assert!(matches!(
        load_descriptor(&path, Some(&other)),
        Err(KshsError::FingerprintMismatch { .. })
    ));
}

#[test]
fn corrupt_descriptor_bytes_fail() {
    let bytes = encode_descriptor(&random_set(3, 1, &RandomSpec::default())[0]);
    assert!(decode_descriptor(&bytes[..bytes.len() - 3]).is_err());
    let mut bad_magic = bytes.clone();
    bad_magic[0] ^= 0xff;
    assert!(decode_descriptor(&bad_magic).is_err());
}

#[test]
fn calibration_round_trip() {
    let dir = tempdir().unwrap();
    let calibration = Calibration {
        scattering: ScatteringConfig::default(),
        normalized: true,
        quantile: 0.99,
        edges: BinEdges::new((0..113).map(|i| 0.1 + i as f64 / 7.0).collect(), 20).unwrap(),
    };
    let path = dir.path().join("edges.bin");
    save_calibration(&path, &calibration).unwrap();
    let back = load_calibration(&path).unwrap();
    assert_eq!(back, calibration);
    assert_eq!(back.fingerprint(), calibration.fingerprint());
    let raw = Calibration {
        normalized: false,
        ..calibration.clone()
    };
    assert_ne!(raw.fingerprint(), calibration.fingerprint());
}

#[test]
fn distance_csv_round_trip() {
    let dir = tempdir().unwrap();
    let set = random_set(4, 5, &RandomSpec::default());
    let ids: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
    let m = pairwise_distances(&set).unwrap().with_ids(ids.clone()).unwrap();
    let path = dir.path().join("d.csv");
    write_distance_csv(&path, &m).unwrap();
    let back = read_distance_csv(&path).unwrap();
    assert_eq!(back.ids(), ids);
    for (x, y) in back.values().iter().zip(m.values().iter()) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn report_round_trip() {
    let dir = tempdir().unwrap();
    let set = LabeledDescriptorSet::new(
        (0..4).map(|i| format!("v{i}")).collect(),
        random_set(5, 4, &RandomSpec::default()),
        ["a", "b", "a", "b"].iter().map(|s| s.to_string()).collect(),
    )
    .unwrap();
    let report = one_nn_loo(&set).unwrap();
    let path = dir.path().join("r.json");
    write_report(&path, &report).unwrap();
    assert_eq!(read_report(&path).unwrap(), report);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["mode"], "1nn");
    assert!(json["accuracy"].is_f64());
}

#[test]
fn manifest_keeps_entry_order_and_resolves_paths() {
    let dir = tempdir().unwrap();
    let entries: Vec<ManifestEntry> = ["z", "a", "m"]
        .iter()
        .map(|id| ManifestEntry {
            id: id.to_string(),
            frames_dir: PathBuf::from(format!("frames/{id}")),
            label: format!("L{id}"),
        })
        .collect();
    let manifest = DatasetManifest::new(entries, [64, 48]).unwrap();
    let path = dir.path().join("manifest.json");
    manifest.save(&path).unwrap();
    let back = DatasetManifest::load(&path).unwrap();
    let ids: Vec<_> = back.entries.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["z", "a", "m"]);
    assert_eq!(back.working_size(), (64, 48));
    assert_eq!(back.frames_dir(&back.entries[0]), dir.path().join("frames/z"));
}

#[test]
fn constant_pgm_frames_load_exactly() {
    let dir = tempdir().unwrap();
    for i in 0..3 {
        GrayImage::from_pixel(16, 16, Luma([128]))
            .save(dir.path().join(format!("f{i}.pgm")))
            .unwrap();
    }
    let frames = load_frames(dir.path(), (16, 16)).unwrap();
    assert_eq!(frames.len(), 3);
    for f in &frames {
        assert!(f.grid().values().iter().all(|v| (v - 128.0 / 255.0).abs() < 1e-12));
    }
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("notes.txt"), "not a frame").unwrap();
    assert!(matches!(load_frames(dir.path(), (8, 8)), Err(KshsError::Empty(_))));
}

#[test]
fn mixed_sizes_and_colour_are_resampled() {
    let dir = tempdir().unwrap();
    GrayImage::from_pixel(20, 10, Luma([255])).save(dir.path().join("a.pgm")).unwrap();
    RgbImage::from_pixel(7, 13, Rgb([255, 0, 0])).save(dir.path().join("b.png")).unwrap();
    GrayImage::from_pixel(32, 32, Luma([0])).save(dir.path().join("c.png")).unwrap();
    let frames = load_frames(dir.path(), (16, 16)).unwrap();
    assert_eq!(frames.len(), 3);
    for f in &frames {
        assert_eq!((f.grid().height(), f.grid().width()), (16, 16));
    }
    assert!(frames[0].grid().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(frames[1].grid().values().iter().all(|v| (v - 0.299).abs() < 1e-12));
    assert!(frames[2].grid().values().iter().all(|v| *v == 0.0));
}

#[test]
fn frames_are_read_in_name_order() {
    let dir = tempdir().unwrap();
    for (name, value) in [("b.pgm", 200u8), ("a.pgm", 10), ("c.pgm", 100)] {
        GrayImage::from_pixel(4, 4, Luma([value])).save(dir.path().join(name)).unwrap();
    }
    let frames = load_frames(dir.path(), (4, 4)).unwrap();
    let firsts: Vec<f64> = frames.iter().map(|f| f.grid().get(0, 0) * 255.0).collect();
    assert!((firsts[0] - 10.0).abs() < 1e-9 && (firsts[1] - 200.0).abs() < 1e-9 && (firsts[2] - 100.0).abs() < 1e-9);
}

#[test]
fn synthetic_corpus_is_deterministic() {
    let config = SynthConfig {
        classes: 2,
        videos_per_class: 2,
        frames: 3,
        size: (24, 24),
        seed: 11,
    };
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let ma = generate_synthetic_corpus(a.path(), &config).unwrap();
    let mb = generate_synthetic_corpus(b.path(), &config).unwrap();
    assert_eq!(ma.entries, mb.entries);
    assert_eq!(ma.entries.len(), 4);
    assert_eq!(ma.labels(), ["class0", "class1"]);
    for e in &ma.entries {
        let files: Vec<_> = fs::read_dir(ma.frames_dir(e)).unwrap().collect();
        assert_eq!(files.len(), 3);
        for t in 0..3 {
            let name = format!("frame_{t:04}.pgm");
            assert_eq!(
                fs::read(ma.frames_dir(e).join(&name)).unwrap(),
                fs::read(mb.frames_dir(e).join(&name)).unwrap()
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_descriptor_encoding_round_trips(seed in any::<u64>(), dim in 1usize..4) {
        let d = random_set(seed, 1, &common::spec_with_dim(dim)).remove(0);
        let back = decode_descriptor(&encode_descriptor(&d)).unwrap();
        prop_assert_eq!(back, d);
    }
}
