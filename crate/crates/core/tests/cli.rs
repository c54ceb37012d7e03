//! End-to-end runs of the `mcmask` binary.

use std::path::Path;
use std::process::{Command, Output};

use mcmask::io::{load_checkpoint, read_wav, save_checkpoint};

fn mcmask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcmask")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mcmask(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_train_evaluate_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let config = d.join("scene.json");
    std::fs::write(&config, r#"{"clip_len": 0.5, "channel_asymmetry": 6.0}"#).unwrap();
    let data = d.join("data");
    ok(&["simulate", "--config", p(&config), "--out", p(&data), "--clips", "8", "--seed", "3"]);
    let manifest = data.join("manifest.json");
    assert!(manifest.is_file());
    assert_eq!(std::fs::read_dir(data.join("clips")).unwrap().count(), 24);

    let ckpt = d.join("mm.rcmm");
    let train_args = [
        "train", "--manifest", p(&manifest), "--method", "mm-auto-out", "--epochs", "2", "--lr", "1e-3",
        "--seed", "1", "--f-hidden", "4", "--t-hidden", "4", "--out", p(&ckpt),
    ];
    ok(&train_args);
    let history = std::fs::read_to_string(d.join("mm_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert!(history.starts_with("epoch,lr,mean_loss_db\n"));
    let log = std::fs::read_to_string(d.join("mm_selections.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 2 * 6);

    let report = d.join("eval.csv");
    let per_clip = d.join("clips.csv");
    let eval = |ckpt: &Path, report: &Path| {
        ok(&[
            "evaluate", "--ckpt", p(ckpt), "--manifest", p(&manifest), "--method", "mm-auto-out",
            "--report", p(report), "--per-clip", p(&per_clip), "--sdr-filter-len", "64",
        ])
    };
    eval(&ckpt, &report);
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().last().unwrap().starts_with("mm-auto-out,all,2,"));
    assert_eq!(std::fs::read_to_string(&per_clip).unwrap().lines().count(), 3);

    // Reloading and re-saving the checkpoint reproduces the report exactly.
    let copy = d.join("copy.rcmm");
    save_checkpoint(&copy, &load_checkpoint(&ckpt).unwrap()).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(&ckpt).unwrap());
    let report2 = d.join("eval2.csv");
    eval(&copy, &report2);
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&report2).unwrap());

    let energy = d.join("energy.csv");
    ok(&["analyze-energy", "--ckpt", p(&ckpt), "--manifest", p(&manifest), "--report", p(&energy), "--sdr-filter-len", "64"]);
    let e = std::fs::read_to_string(&energy).unwrap();
    assert!(e.starts_with("channel_rank,energy,proportion_percent\nmost,"));

    let sel = d.join("sel.csv");
    ok(&["selection-stats", "--ckpt", p(&ckpt), "--manifest", p(&manifest), "--report", p(&sel), "--split", "all"]);
    let s = std::fs::read_to_string(&sel).unwrap();
    let total: usize = s.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 8);

    let wav = d.join("out.wav");
    let clip = "clips/s3_00000";
    ok(&[
        "enhance", "--ckpt", p(&ckpt), "--in", p(&data.join(format!("{clip}_mix.wav"))),
        "--doa", p(&data.join(format!("{clip}_doa.csv"))), "--method", "mm-auto-out", "--out", p(&wav),
    ]);
    let out = read_wav(&wav).unwrap();
    assert_eq!(out.num_channels(), 1);
    assert_eq!(out.len(), 8000);

    // The MM checkpoint cannot drive a single-mask method.
    let wrong = mcmask(&[
        "evaluate", "--ckpt", p(&ckpt), "--manifest", p(&manifest), "--method", "sm-left", "--report", p(&report),
    ]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("configuration error"));
}

#[test]
fn oracle_enhance_needs_references() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let config = d.join("scene.json");
    std::fs::write(&config, r#"{"clip_len": 0.25}"#).unwrap();
    let data = d.join("data");
    ok(&["simulate", "--config", p(&config), "--out", p(&data), "--clips", "2", "--dev-fraction", "0"]);
    let ckpt = d.join("sm.rcmm");
    ok(&[
        "train", "--manifest", p(&data.join("manifest.json")), "--method", "sm-fixed-oracle", "--epochs", "1",
        "--f-hidden", "2", "--t-hidden", "2", "--out", p(&ckpt),
    ]);
    let mix = data.join("clips/s0_00000_mix.wav");
    let doa = data.join("clips/s0_00000_doa.csv");
    let wav = d.join("o.wav");
    let base = ["enhance", "--ckpt", p(&ckpt), "--in", p(&mix), "--doa", p(&doa), "--method", "sm-fixed-oracle", "--out", p(&wav)];
    assert_eq!(mcmask(&base).status.code(), Some(1));
    let refs = data.join("clips/s0_00000_refs.wav");
    let mut with_refs = base.to_vec();
    with_refs.extend(["--refs", p(&refs)]);
    ok(&with_refs);
    assert!(wav.is_file());
}

#[test]
fn usage_errors_exit_with_two() {
    let out = mcmask(&["train", "--manifest", "m.json", "--method", "mm-sideways", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mm-auto-out"));
    assert_eq!(mcmask(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mcmask(&[]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let out = mcmask(&["train", "--manifest", p(&missing), "--method", "mm-left", "--out", "x.rcmm"]);
    assert_eq!(out.status.code(), Some(1));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"channel_asymmetry": 30.0}"#).unwrap();
    let out = mcmask(&["simulate", "--config", p(&bad), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}
