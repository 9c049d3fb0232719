use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use inpaint_core::audio::{read_wav, write_wav};
use inpaint_core::formats::{read_mask, read_units, write_sief};
use inpaint_core::spectral::{mel_spectrogram, MelConfig};
use inpaint_core::synth::{vowel_utterance, UtteranceSpec};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inpaint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn utterance(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let p = dir.join(format!("{name}.wav"));
    write_wav(&vowel_utterance(&UtteranceSpec::default(), seed), &p).unwrap();
    p
}

fn manifest(dir: &Path, names: &[&str]) -> PathBuf {
    let p = dir.join("manifest.jsonl");
    let lines: String = names
        .iter()
        .map(|n| format!("{{\"utt_id\":\"{n}\",\"wav_path\":\"{n}.wav\",\"transcript\":\"a\"}}\n"))
        .collect();
    std::fs::write(&p, lines).unwrap();
    p
}

#[test]
fn help_lists_every_subcommand() {
    let help = ok(&["--help"]);
    for cmd in [
        "mask-gen",
        "corrupt",
        "train-codebook",
        "quantize",
        "inpaint",
        "asr-tts-assemble",
        "eval",
        "noise-mix",
    ] {
        assert!(help.contains(cmd), "{cmd} missing from help");
    }
    let inpaint = ok(&["inpaint", "--help"]);
    for flag in ["--method", "--mode", "--decoder", "--seed"] {
        assert!(inpaint.contains(flag));
    }
}

#[test]
fn mask_corrupt_inpaint_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let wav = utterance(d, "a", 1);
    let mask_path = d.join("mask.json");
    ok(&["mask-gen", "--wav", s(&wav), "--mask-ms", "100", "--seed", "4", "--out", s(&mask_path)]);
    let mask = read_mask(&mask_path).unwrap();
    assert_eq!(mask.len(), 1600);
    assert_eq!(
        ok(&["mask-gen", "--wav", s(&wav), "--mask-ms", "100", "--seed", "4"]).trim(),
        std::fs::read_to_string(&mask_path).unwrap().trim()
    );

    let corrupted = d.join("c.wav");
    ok(&["corrupt", "--input", s(&wav), "--mask", s(&mask_path), "--out", s(&corrupted)]);
    let c = read_wav(&corrupted).unwrap();
    assert!(c.samples()[mask.t1..=mask.t2].iter().all(|v| *v == 0.0));

    let out = d.join("li.wav");
    ok(&[
        "inpaint", "--input", s(&corrupted), "--mask", s(&mask_path), "--method", "li",
        "--mode", "informed", "--decoder", "griffin-lim", "--out", s(&out),
    ]);
    let y = read_wav(&out).unwrap();
    let x = read_wav(&wav).unwrap();
    assert_eq!(y.len(), x.len());
    for (i, (a, b)) in x.samples().iter().zip(y.samples()).enumerate() {
        if i + 80 < mask.t1 || i > mask.t2 + 80 {
            assert_eq!(a, b, "sample {i}");
        }
    }
    let gap = &y.samples()[mask.t1..=mask.t2];
    assert!(gap.iter().any(|v| *v != 0.0));
}

#[test]
fn codebook_quantize_and_unit_inpainting() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let wavs: Vec<_> = (0..3).map(|i| utterance(d, &format!("u{i}"), 10 + i)).collect();
    let m = manifest(d, &["u0", "u1", "u2"]);
    let cb = d.join("cb.sicb");
    let report = ok(&["train-codebook", "--manifest", s(&m), "--k", "8", "--seed", "1", "--out", s(&cb)]);
    assert!(report.contains("\"k\":8"));

    let sief = d.join("u0.sief");
    let mel = mel_spectrogram(&read_wav(&wavs[0]).unwrap(), &MelConfig::default()).unwrap();
    write_sief(&mel, &sief).unwrap();
    let units = d.join("u0.units");
    ok(&["quantize", "--embeddings", s(&sief), "--codebook", s(&cb), "--out", s(&units)]);
    let u = read_units(&units).unwrap();
    assert_eq!((u.len(), u.k), (mel.n_frames(), 8));
    assert!(d.join("u0.units.json").exists());

    let cos = d.join("cos.sicb");
    ok(&["train-codebook", "--embeddings", s(&sief), "--k", "4", "--kind", "cosine", "--out", s(&cos)]);

    for (method, book) in [("pt", &cb), ("ft", &cos)] {
        let out = d.join(format!("{method}.wav"));
        ok(&[
            "inpaint", "--input", s(&wavs[0]), "--t1", "12000", "--t2", "15199", "--method", method,
            "--codebook", s(book), "--out", s(&out),
        ]);
        assert_eq!(read_wav(&out).unwrap().len(), read_wav(&wavs[0]).unwrap().len());
    }
    let blind = d.join("blind.wav");
    ok(&["inpaint", "--input", s(&wavs[0]), "--method", "pt", "--mode", "blind", "--codebook", s(&cb), "--out", s(&blind)]);
    let wrong = run(&["inpaint", "--input", s(&wavs[0]), "--method", "li", "--mode", "blind", "--out", s(&blind)]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("blind"));
}

#[test]
fn asr_tts_and_noise() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let wav = utterance(d, "a", 3);
    let report = ok(&[
        "asr-tts-assemble", "--input", s(&wav), "--synthetic", s(&wav), "--t1", "8000", "--t2", "11199",
        "--out", s(&d.join("spliced.wav")),
    ]);
    let v: serde_json::Value = serde_json::from_str(report.trim()).unwrap();
    assert_eq!(v["inserted_len"], 3200);

    let noisy = d.join("noisy.wav");
    let r = ok(&["noise-mix", "--input", s(&wav), "--noise", "white", "--snr-db", "10", "--seed", "2", "--out", s(&noisy)]);
    let v: serde_json::Value = serde_json::from_str(r.trim()).unwrap();
    assert!((v["measured_db"].as_f64().unwrap() - 10.0).abs() < 0.01);
    let crowd = run(&["noise-mix", "--input", s(&wav), "--noise", "crowd", "--snr-db", "10", "--out", s(&noisy)]);
    assert!(!crowd.status.success());
}

#[test]
fn eval_writes_tables_and_flags_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    utterance(d, "a", 5);
    utterance(d, "b", 6);
    let m = manifest(d, &["a", "b"]);
    let out_dir = d.join("results");
    let csv = ok(&["eval", "--manifest", s(&m), "--mask-ms", "100,400", "--seed", "3", "--out-dir", s(&out_dir)]);
    assert!(csv.starts_with("method,mode,mask_ms,metric,n,mean"));
    assert!(csv.contains("li,informed,100,stoi,2,"));
    assert!(csv.contains("zero-fill,informed,400,stoi,2,"));
    for f in ["scores.jsonl", "summary.csv", "config.toml"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let frozen = std::fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert!(frozen.contains("seed = 3"));

    let again = ok(&["eval", "--config", s(&out_dir.join("config.toml")), "--manifest", s(&m), "--workers", "2", "--out-dir", s(&d.join("again"))]);
    assert_eq!(again, csv);

    let broken = d.join("broken.jsonl");
    std::fs::write(
        &broken,
        format!(
            "{}{{\"utt_id\":\"ghost\",\"wav_path\":\"ghost.wav\"}}\n",
            std::fs::read_to_string(&m).unwrap()
        ),
    )
    .unwrap();
    let partial = run(&["eval", "--manifest", s(&broken), "--mask-ms", "100", "--out-dir", s(&d.join("partial"))]);
    assert_eq!(partial.status.code(), Some(2));
    assert!(d.join("partial/failures.jsonl").exists());

    let empty = d.join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let csv = ok(&["eval", "--manifest", s(&empty), "--out-dir", s(&d.join("empty"))]);
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn eval_with_noise_records_input_snr() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    utterance(d, "a", 7);
    let m = manifest(d, &["a"]);
    let csv = ok(&[
        "eval", "--manifest", s(&m), "--mask-ms", "0", "--noise", "white", "--snr-db", "20",
        "--out-dir", s(&d.join("r")),
    ]);
    assert!(csv.contains("input,informed,0,snr,1,20.0000"), "{csv}");
}

#[test]
fn missing_input_is_reported() {
    let out = run(&["corrupt", "--input", "/nonexistent.wav", "--t1", "0", "--t2", "1", "--out", "/tmp/x.wav"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}
