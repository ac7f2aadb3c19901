use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rirsim::cli::records::{read_metadata, Manifest};
use rirsim::wav::{read_wav, write_wav};

fn rirsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rirsim"))
        .args(args)
        .env_remove("RIRSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, "[sampler]\nrooms = 2\nconstellations_per_room = 3\nseed = 11\n").unwrap();
    path
}

fn generate(dir: &Path, name: &str, workers: &str) -> PathBuf {
    let cfg = small_config(dir);
    let out = dir.join(name);
    let o = rirsim(&["generate", "--config", s(&cfg), "--out", s(&out), "--workers", workers]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

fn wav_files(dir: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "wav") {
                found.push(p);
            }
        }
    }
    found
}

const SCENE: [&str; 8] = [
    "--room",
    "6,5,2.5",
    "--t60",
    "0.4",
    "--source",
    "1.5,1.2,1.3",
    "--array-center",
    "3.2,2.6,1.3",
];

#[test]
fn generate_counts_and_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path(), "ds", "2");
    let lines = read_metadata(&out.join("metadata.jsonl")).unwrap();
    assert_eq!(lines.len(), 6);
    assert_eq!(wav_files(&out).len(), 12);
    assert!(out.join("room_00001/const_02/mic1.wav").is_file());
    let manifest = Manifest::load(&out.join("manifest.json")).unwrap();
    assert!(manifest.complete);
    assert_eq!(manifest.record_count, 6);
    assert_eq!(manifest.seed, 11);
    assert_eq!(manifest.records.len(), 6);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l.index, i);
        assert_eq!(l.class, (l.distance / 0.1 + 0.5).floor() as u32);
    }
}

#[test]
fn same_seed_gives_identical_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate(tmp.path(), "a", "1");
    let b = generate(tmp.path(), "b", "3");
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "metadata.jsonl"), read(&b, "metadata.jsonl"));
    assert_eq!(read(&a, "manifest.json"), read(&b, "manifest.json"));
}

#[test]
fn regenerate_from_manifest_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate(tmp.path(), "a", "2");
    let b = tmp.path().join("b");
    let o = rirsim(&["generate", "--manifest", s(&a.join("manifest.json")), "--out", s(&b), "--workers", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("checksums match 6"));
}

#[test]
fn tampered_manifest_fails_regeneration() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate(tmp.path(), "a", "1");
    let path = a.join("manifest.json");
    let mut m = Manifest::load(&path).unwrap();
    m.records[3].mic0 = "00".repeat(32);
    m.store(&path).unwrap();
    let o = rirsim(&["generate", "--manifest", s(&path), "--out", s(&tmp.path().join("b"))]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn interrupted_run_resumes_to_the_same_result() {
    let tmp = tempfile::tempdir().unwrap();
    let full = generate(tmp.path(), "full", "1");
    let part = generate(tmp.path(), "part", "1");

    // Keep two complete lines plus half of the third, as if killed mid-write.
    let meta = part.join("metadata.jsonl");
    let text = std::fs::read_to_string(&meta).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    std::fs::write(&meta, format!("{}\n{}\n{}", lines[0], lines[1], &lines[2][..40])).unwrap();
    std::fs::remove_file(part.join("room_00001/const_00/mic0.wav")).unwrap();
    let mpath = part.join("manifest.json");
    let mut m = Manifest::load(&mpath).unwrap();
    m.complete = false;
    m.records.truncate(2);
    m.store(&mpath).unwrap();

    let o = rirsim(&["generate", "--resume", "--out", s(&part), "--workers", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("(4 new"));
    assert_eq!(std::fs::read(&meta).unwrap(), std::fs::read(full.join("metadata.jsonl")).unwrap());
    assert_eq!(std::fs::read(&mpath).unwrap(), std::fs::read(full.join("manifest.json")).unwrap());
}

#[test]
fn existing_dataset_needs_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path(), "ds", "1");
    let cfg = small_config(tmp.path());
    let o = rirsim(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--resume"));
}

#[test]
fn inverted_interval_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[sampler]\nt60 = [0.7, 0.2]\n").unwrap();
    let o = rirsim(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sampler.t60"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_reports_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[synth]\ndrr_windw = 40\n").unwrap();
    let o = rirsim(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("synth"), "{}", stderr(&o));
    assert!(stderr(&o).contains("drr_windw"), "{}", stderr(&o));
}

#[test]
fn fresh_dataset_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path(), "ds", "1");
    let o = rirsim(&["verify", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("12/12 responses pass"));
}

#[test]
fn verify_json_has_a_line_per_response() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path(), "ds", "1");
    let o = rirsim(&["verify", "--json", s(&out)]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let values: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(values.len(), 13);
    assert_eq!(values[12]["failed"], 0);
}

#[test]
fn zeroed_tail_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path(), "ds", "1");
    let lines = read_metadata(&out.join("metadata.jsonl")).unwrap();
    let wav = out.join(&lines[2].files[1]);
    let mut h = read_wav(&wav).unwrap().channels.remove(0);
    let keep = lines[2].mics[1].n_d + 41;
    for v in &mut h[keep..] {
        *v = 0.0;
    }
    write_wav(&wav, &[&h], 16000).unwrap();
    let o = rirsim(&["verify", s(&out)]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn empty_directory_has_no_records() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rirsim(&["verify", s(tmp.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no records"));
}

#[test]
fn synth_proposed_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let wav = tmp.path().join("p.wav");
    let mut args = vec!["synth"];
    args.extend(SCENE);
    args.extend(["--seed", "5", "--out", s(&wav)]);
    let o = rirsim(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["method"], "proposed");
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(wav.with_extension("json")).unwrap()).unwrap();
    assert_eq!(doc, sidecar);
    let data = read_wav(&wav).unwrap();
    assert_eq!(data.channels.len(), 2);
    assert_eq!(data.channels[0].len(), 16384);
    let v = rirsim(&["verify", s(&wav)]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stdout));
}

#[test]
fn synth_ism_order_zero_is_a_single_arrival() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[synth]\nhighpass = false\n").unwrap();
    let wav = tmp.path().join("i.wav");
    let mut args = vec!["synth"];
    args.extend(SCENE);
    args.extend(["--method", "ism", "--order", "0", "--config", s(&cfg), "--out", s(&wav)]);
    let o = rirsim(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for (m, h) in read_wav(&wav).unwrap().channels.iter().enumerate() {
        let n_d = doc["mics"][m]["n_d"].as_u64().unwrap() as usize;
        let peak = h.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        assert!(peak.abs_diff(n_d) <= 1);
        assert!(h.iter().enumerate().all(|(n, v)| *v == 0.0 || n.abs_diff(n_d) <= 41));
    }
}

#[test]
fn synth_drr_augmented_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let wav = tmp.path().join("a.wav");
    let mut args = vec!["synth"];
    args.extend(SCENE);
    args.extend(["--method", "drr-aug", "--aug-mode", "target", "--out", s(&wav)]);
    let o = rirsim(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["method"], "drr_augmented");
    assert!(doc["mics"][0]["direct_scale"].as_f64().unwrap() > 0.0);
    assert_eq!(code(&rirsim(&["verify", s(&wav)])), 0);
}

#[test]
fn synth_from_scene_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene.json");
    std::fs::write(
        &scene,
        r#"{"room": {"length": 6, "width": 5, "height": 2.5, "t60": 0.4},
            "source": {"position": [1.5, 1.2, 1.3], "look_azimuth_deg": 40},
            "array": {"center": [3.2, 2.6, 1.3], "orientation_deg": 90}}"#,
    )
    .unwrap();
    let wav = tmp.path().join("f.wav");
    let o = rirsim(&["synth", "--scene", s(&scene), "--out", s(&wav)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn synth_missing_flag_is_usage_error() {
    let o = rirsim(&["synth", "--room", "6,5,2.5", "--t60", "0.4", "--out", "x.wav"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn synth_outside_room_is_config_error() {
    let o = rirsim(&[
        "synth", "--room", "6,5,2.5", "--t60", "0.4", "--source", "7,1,1", "--array-center", "3,2,1", "--out",
        "x.wav",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn infeasible_room_exit_code() {
    let o = rirsim(&[
        "synth", "--room", "6,5,2.5", "--t60", "0.05", "--source", "1,1,1", "--array-center", "3,2,1",
        "--out", "x.wav",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn infeasible_drr_reports_attainable_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[synth]\nalpha_range = [5.5, 5.5]\n").unwrap();
    let o = rirsim(&[
        "synth", "--room", "6.25,5.16,2.59", "--t60", "0.24", "--source", "2.12,4.15,1.12", "--array-center",
        "3.62,3.85,1.12", "--array-orientation", "78.84", "--look-azimuth", "44.07", "--look-elevation", "12.77",
        "--config", s(&cfg), "--out", s(&tmp.path().join("x.wav")),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("attainable"), "{}", stderr(&o));
}

fn write_clip(path: &Path, fs: u32, len: usize) {
    let x: Vec<f64> = (0..len)
        .map(|n| 0.3 * (n as f64 * 0.07).sin() + 0.1 * ((n * 7919 % 113) as f64 / 56.0 - 1.0))
        .collect();
    write_wav(path, &[&x], fs).unwrap();
}

#[test]
fn features_per_record_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(tmp.path(), "ds", "1");
    let clips = tmp.path().join("clips");
    std::fs::create_dir(&clips).unwrap();
    write_clip(&clips.join("a.wav"), 16000, 17000);

    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = rirsim(&["features", "--dataset", s(&ds), "--clips", s(&clips), "--out", s(&out), "--seed", "9"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let a = run("fa");
    let b = run("fb");
    let f32s: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "f32"))
        .collect();
    assert_eq!(f32s.len(), 6);
    for p in &f32s {
        let bytes = std::fs::read(p).unwrap();
        assert_eq!(bytes.len(), 6 * 98 * 201 * 4);
        assert_eq!(bytes, std::fs::read(b.join(p.file_name().unwrap())).unwrap());
    }
    let labels = std::fs::read_to_string(a.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 7);
    assert_eq!(labels, std::fs::read_to_string(b.join("labels.csv")).unwrap());
}

#[test]
fn features_reject_rate_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(tmp.path(), "ds", "1");
    let clip = tmp.path().join("c8k.wav");
    write_clip(&clip, 8000, 9000);
    let o = rirsim(&["features", "--dataset", s(&ds), "--clips", s(&clip), "--out", s(&tmp.path().join("f"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sample rate"), "{}", stderr(&o));
}

#[test]
fn features_reject_silent_clip() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(tmp.path(), "ds", "1");
    let clip = tmp.path().join("silent.wav");
    write_wav(&clip, &[&vec![0.0; 17000]], 16000).unwrap();
    let o = rirsim(&["features", "--dataset", s(&ds), "--clips", s(&clip), "--out", s(&tmp.path().join("f"))]);
    assert_ne!(code(&o), 0);
}
