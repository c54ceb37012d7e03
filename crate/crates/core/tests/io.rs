//! File formats: WAV, DOA CSV, manifests, checkpoints and reports.

use mcmask::io::{
    decode_checkpoint, encode_checkpoint, export_clips, load_checkpoint, read_doa_csv, read_wav, save_checkpoint,
    write_doa_csv, write_history_csv, write_metrics_csv, write_wav, Checkpoint, Manifest, Split, TrainingMeta,
};
use mcmask::metrics::{ClipRecord, GapBucket, MetricsReport};
use mcmask::net::{init_params, NetConfig, Precision};
use mcmask::scene::{simulate_clip, DoaTrajectory, SceneConfig};
use mcmask::signal::MultiChannelWaveform;
use mcmask::train::{AdamConfig, AdamState, EpochStats};
use mcmask::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn float_wav_round_trip_is_lossless(
        chans in 1usize..4,
        data in proptest::collection::vec(-2.0f32..2.0, 1..400),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let len = data.len() / chans;
        prop_assume!(len > 0);
        let channels: Vec<Vec<f64>> =
            (0..chans).map(|c| data[c * len..(c + 1) * len].iter().map(|&v| v as f64).collect()).collect();
        let wave = MultiChannelWaveform::new(channels, 16000).unwrap();
        let path = dir.path().join("x.wav");
        write_wav(&path, &wave).unwrap();
        prop_assert_eq!(read_wav(&path).unwrap(), wave);
    }
}

#[test]
fn integer_wav_is_scaled() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i16.wav");
    let spec = hound_spec();
    let mut w = hound::WavWriter::create(&path, spec).unwrap();
    for v in [0i16, 16384, -32768, 32767] {
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();
    let wave = read_wav(&path).unwrap();
    assert_eq!(wave.channel(0), &[0.0, 0.5, -1.0, 32767.0 / 32768.0]);
}

fn hound_spec() -> hound::WavSpec {
    hound::WavSpec { channels: 1, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int }
}

#[test]
fn missing_wav_is_an_io_error() {
    assert!(matches!(read_wav("/nonexistent/x.wav"), Err(Error::Io { .. })));
}

#[test]
fn doa_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doa.csv");
    let traj = DoaTrajectory::from_angles(vec![0.0, 0.05, 0.1], &[(0.3, 0.0), (-1.2, 0.1), (2.9, -0.2)]).unwrap();
    write_doa_csv(&path, &traj).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("time_s,azimuth_rad,elevation_rad\n"));
    let back = read_doa_csv(&path).unwrap();
    assert_eq!(back.timestamps, traj.timestamps);
    for (a, b) in back.directions.iter().zip(&traj.directions) {
        assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

fn checkpoint(precision: Precision, with_opt: bool) -> Checkpoint {
    let cfg = NetConfig { precision, ..NetConfig::new(2, 9, 2).with_hidden(3, 4) };
    let mut params = init_params(&cfg, 42).unwrap();
    params.round_to_precision();
    let optimizer = with_opt.then(|| {
        let mut s = AdamState::new(&params, AdamConfig::default());
        s.step = 17;
        s.m = init_params(&cfg, 1).unwrap();
        s.v = init_params(&cfg, 2).unwrap();
        s
    });
    Checkpoint { params, optimizer, meta: TrainingMeta { epoch: 45, lr: 1e-4 * 0.99f64.powi(44), seed: 9 } }
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (precision, opt) in [(Precision::F64, true), (Precision::F32, true), (Precision::F64, false)] {
        let ckpt = checkpoint(precision, opt);
        let path = dir.path().join("m.rcmm");
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(encode_checkpoint(&back).unwrap(), std::fs::read(&path).unwrap());
    }
}

#[test]
fn checkpoint_layout() {
    let bytes = encode_checkpoint(&checkpoint(Precision::F32, false)).unwrap();
    assert_eq!(&bytes[..4], b"RCMM");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    let dims: Vec<u32> = (0..5).map(|k| u32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().unwrap())).collect();
    assert_eq!(dims, vec![2, 9, 3, 4, 2]);
    assert_eq!(bytes[28], 0);
    // Tensor count, then the first name.
    assert_eq!(u32::from_le_bytes(bytes[29..33].try_into().unwrap()), 13);
    let name_len = u16::from_le_bytes(bytes[33..35].try_into().unwrap()) as usize;
    assert_eq!(&bytes[35..35 + name_len], b"doa_encoder.weight");
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let bytes = encode_checkpoint(&checkpoint(Precision::F64, true)).unwrap();
    let mut v2 = bytes.clone();
    v2[4] = 2;
    assert!(matches!(decode_checkpoint(&v2), Err(Error::Format(m)) if m.contains("version")));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(decode_checkpoint(&magic), Err(Error::Format(_))));
    assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(decode_checkpoint(&extra), Err(Error::Format(_))));
}

#[test]
fn manifest_round_trip_and_channel_check() {
    let dir = tempfile::tempdir().unwrap();
    let scene = SceneConfig { clip_len: 0.25, seed: 4, ..SceneConfig::default() };
    let clips: Vec<_> = (0..3).map(|i| (simulate_clip(&scene, i).unwrap(), if i == 2 { Split::Dev } else { Split::Train })).collect();
    export_clips(dir.path(), &clips, Some(scene.clone())).unwrap();
    let m = Manifest::load(dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.scene.as_ref(), Some(&scene));
    let train = m.load_clips(Some(Split::Train)).unwrap();
    assert_eq!(train.len(), 2);
    assert_eq!(train[0].mixture, clips[0].0.mixture);
    assert_eq!(train[0].refs, clips[0].0.refs);
    assert_eq!(m.load_clips(None).unwrap().len(), 3);

    // Replace the last record's audio with a mono file.
    let mono = SceneConfig { channels: 1, ..scene.clone() };
    let odd = simulate_clip(&mono, 7).unwrap();
    let rec = &m.records[2];
    write_wav(dir.path().join(&rec.mixture_wav), &odd.mixture).unwrap();
    write_wav(dir.path().join(&rec.refs_wav), &odd.refs).unwrap();
    match m.load_clips(None) {
        Err(Error::InvalidInput(msg)) => assert!(msg.contains(&rec.clip_id), "{msg}"),
        other => panic!("expected a channel-count error, got {other:?}"),
    }
}

#[test]
fn manifest_requires_existing_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.json");
    std::fs::write(
        &path,
        r#"{"records":[{"clip_id":"a","mixture_wav":"a.wav","refs_wav":"b.wav","doa_csv":"c.csv","split":"train"}]}"#,
    )
    .unwrap();
    assert!(matches!(Manifest::load(&path), Err(Error::Parse { message, .. }) if message.contains("a.wav")));
}

#[test]
fn csv_reports_have_headers_and_four_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let rec = ClipRecord {
        clip_id: "c".into(),
        in_si_sdr: vec![1.0, 2.0],
        in_sdr: vec![1.5, 2.5],
        in_sdr_gap: 1.0,
        bucket: Some(GapBucket::Low),
        selected_channel: 1,
        out_si_sdr: 7.123456,
        out_sdr: 8.0,
    };
    let report = MetricsReport::new("mm-auto-out", true, vec![rec]);
    let path = dir.path().join("r.csv");
    write_metrics_csv(&path, &report).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,gap_bucket,clips,out_si_sdr_db,out_sdr_db,oracle_reference");
    assert_eq!(lines[1], "mm-auto-out,\"[0,3]\",1,7.1235,8.0000,true");
    assert_eq!(lines.len(), 5);

    let hist = dir.path().join("h.csv");
    write_history_csv(&hist, &[EpochStats { epoch: 0, lr: 1e-4, mean_loss: -3.25159 }]).unwrap();
    assert_eq!(std::fs::read_to_string(&hist).unwrap(), "epoch,lr,mean_loss_db\n0,1e-4,-3.2516\n");
}
