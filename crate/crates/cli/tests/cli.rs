use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpscatter::config::{ExperimentConfig, Payload};
use fpscatter::formats::{parse_schedule_jsonl, DecodeReport, ObwReport};
use fpscatter::iq::{read_header, read_iq};
use fpscatter_core::channel::Snr;
use fpscatter_core::tag::{Scheme, TagModel};
use proptest::prelude::*;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpscatter"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn files(dir: &Path, name: &str) -> (Vec<u8>, Vec<u8>) {
    let p: PathBuf = dir.join(name);
    (
        fs::read(&p).unwrap(),
        fs::read(dir.join(format!("{name}.json"))).unwrap(),
    )
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&bin(d.path(), &["gen-carrier", "--single-tone", "0"])), 2);
    assert_eq!(
        code(&bin(
            d.path(),
            &["gen-carrier", "--single-tone", "2", "--duration", "1ms"]
        )),
        2
    );
    assert_eq!(code(&bin(d.path(), &["gen-carrier", "--duration", "1ms"])), 2);
    assert_eq!(code(&bin(d.path(), &["frobnicate"])), 2);
    assert_eq!(code(&bin(d.path(), &["backscatter", "--payload", "abc"])), 2);
    assert_eq!(
        code(&bin(d.path(), &["backscatter", "--scheme", "fps_ct", "--random", "4"])),
        2
    );
    ok(d.path(), &["gen-carrier", "--single-tone", "0", "--duration", "100us"]);
    assert_eq!(code(&bin(d.path(), &["obw", "carrier.iq", "--fraction", "1.5"])), 2);
}

#[test]
fn runtime_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    let out = bin(d.path(), &["backscatter", "--random", "0"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("payload is empty"));

    ok(d.path(), &["gen-carrier", "--single-tone", "1", "--duration", "50us"]);
    let p = d.path().join("carrier.iq");
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
    let out = bin(d.path(), &["obw", "carrier.iq"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("short read"));

    assert_eq!(code(&bin(d.path(), &["decode", "missing.iq"])), 1);
    fs::write(d.path().join("bad.txt"), "0 0101\n").unwrap();
    assert_eq!(
        code(&bin(
            d.path(),
            &["--table", "bad.txt", "gen-carrier", "--symbols", "00"]
        )),
        1
    );
}

#[test]
fn symbols_00_gives_64_chips() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen-carrier", "--symbols", "00", "--out", "pkt.iq"]);
    let h = read_header(&d.path().join("pkt.iq")).unwrap();
    assert_eq!(h.chip_count, Some(64));
    assert_eq!(h.num_samples, 65 * 32);
    assert_eq!(fs::metadata(d.path().join("pkt.iq")).unwrap().len(), 65 * 32 * 8);
    let report: DecodeReport = serde_json::from_str(&ok(d.path(), &["decode", "pkt.iq"])).unwrap();
    assert_eq!(report.symbols, vec![0, 0]);
    assert_eq!(report.chip_errors, 0);
    assert_eq!(report.tag_bits, None);
}

#[test]
fn outputs_are_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "--seed",
        "42",
        "backscatter",
        "--scheme",
        "ips",
        "--random",
        "20",
        "--snr-db",
        "10",
        "--dump-schedule",
    ];
    let a = ok(d.path(), &[&args[..], &["s1.jsonl", "--out", "a.iq"]].concat());
    let b = ok(d.path(), &[&args[..], &["s2.jsonl", "--out", "b.iq"]].concat());
    assert_eq!(a, b);
    assert_eq!(files(d.path(), "a.iq").0, files(d.path(), "b.iq").0);
    assert_eq!(files(d.path(), "a.iq").1, files(d.path(), "b.iq").1);
    assert_eq!(
        fs::read(d.path().join("s1.jsonl")).unwrap(),
        fs::read(d.path().join("s2.jsonl")).unwrap()
    );
    assert_eq!(
        ok(d.path(), &["obw", "a.iq", "--csv", "p1.csv"]),
        ok(d.path(), &["obw", "b.iq", "--csv", "p2.csv"])
    );
    assert_eq!(
        fs::read(d.path().join("p1.csv")).unwrap(),
        fs::read(d.path().join("p2.csv")).unwrap()
    );

    let c = ok(
        d.path(),
        &[
            "--seed",
            "43",
            "backscatter",
            "--scheme",
            "ips",
            "--random",
            "20",
            "--snr-db",
            "10",
            "--out",
            "c.iq",
        ],
    );
    assert_ne!(files(d.path(), "a.iq").0, files(d.path(), "c.iq").0);
    drop(c);
}

#[test]
fn saved_config_reproduces_run() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "--seed",
            "7",
            "--f-shift",
            "12MHz",
            "backscatter",
            "--scheme",
            "fps",
            "--payload",
            "a5c3",
            "--save-config",
            "run.cfg",
            "--out",
            "a.iq",
        ],
    );
    let cfg = ExperimentConfig::parse(&fs::read_to_string(d.path().join("run.cfg")).unwrap()).unwrap();
    assert_eq!(cfg.f_shift, 12e6);
    assert_eq!(cfg.payload, Payload::Hex(vec![0xa5, 0xc3]));
    ok(d.path(), &["backscatter", "--config", "run.cfg", "--out", "b.iq"]);
    assert_eq!(files(d.path(), "a.iq"), files(d.path(), "b.iq"));
    let report: DecodeReport = serde_json::from_str(&ok(d.path(), &["decode", "b.iq"])).unwrap();
    assert_eq!(report.symbols, vec![5, 0xa, 3, 0xc]);
    assert!(report.hamming_distances.iter().all(|&h| h == 0));
}

#[test]
fn schedule_dump_matches_scheme() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "backscatter",
            "--scheme",
            "fps",
            "--payload",
            "01",
            "--dump-schedule",
            "s.jsonl",
        ],
    );
    let recs = parse_schedule_jsonl(&fs::read_to_string(d.path().join("s.jsonl")).unwrap()).unwrap();
    assert_eq!(recs.len(), 2 * 32 + 1);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r.index, i);
        assert!(r.freq_hz == 10.5e6 || r.freq_hz == 9.5e6);
        assert_eq!(r.duration_s, 0.5e-6);
        assert!((r.phase_rad / FRAC_PI_2 - (r.phase_rad / FRAC_PI_2).round()).abs() < 1e-12);
    }
}

#[test]
fn compare_recovers_tag_bits() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["--seed", "3", "gen-carrier", "--random", "16", "--out", "car.iq"],
    );
    ok(
        d.path(),
        &[
            "backscatter",
            "--scheme",
            "fps_ct",
            "--carrier",
            "car.iq",
            "--payload",
            "b40f",
            "--out",
            "bs.iq",
        ],
    );
    let out = ok(
        d.path(),
        &["decode", "bs.iq", "--compare", "car.iq", "--report", "r.json"],
    );
    let report: DecodeReport = serde_json::from_str(&out).unwrap();
    assert_eq!(fs::read_to_string(d.path().join("r.json")).unwrap(), out);
    let want: Vec<u8> = [0xb4u8, 0x0f]
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1))
        .collect();
    assert_eq!(report.tag_bits, Some(want));
    assert_eq!(
        read_header(&d.path().join("bs.iq")).unwrap().chips_per_tag_bit,
        Some(32)
    );
}

#[test]
fn obw_grows_with_fraction() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["backscatter", "--scheme", "fps", "--random", "64", "--out", "f.iq"],
    );
    let mut prev = 0.0;
    for f in ["0.5", "0.9", "0.99"] {
        let r: ObwReport = serde_json::from_str(&ok(
            d.path(),
            &["obw", "f.iq", "--fraction", f, "--segment-len", "1024"],
        ))
        .unwrap();
        assert!(r.bandwidth_hz > prev);
        assert!(r.f_low_hz < 9.5e6 && r.f_high_hz > 9.5e6, "{r:?}");
        prev = r.bandwidth_hz;
    }
    ok(d.path(), &["obw", "f.iq", "--csv", "p.csv"]);
    let csv = fs::read_to_string(d.path().join("p.csv")).unwrap();
    assert!(csv.starts_with("# window=hann rbw_hz="));
    assert_eq!(csv.lines().nth(1), Some("freq_hz,psd_db"));
    assert_eq!(csv.lines().count(), 2 + 4096);
}

#[test]
fn phase_trace_shapes() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["backscatter", "--scheme", "fps", "--random", "4", "--out", "f.iq"],
    );
    ok(
        d.path(),
        &["backscatter", "--scheme", "ips", "--random", "4", "--out", "i.iq"],
    );
    let trace = |name: &str| -> Vec<f64> {
        ok(d.path(), &["phase-trace", name, "--points-per-chip", "8"])
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let fps = trace("f.iq");
    assert_eq!(fps.len(), 4 * 32 * 8 + 8);
    assert!(fps
        .windows(2)
        .all(|w| ((w[1] - w[0]).abs() - FRAC_PI_2 / 8.0).abs() < 1e-6));
    let ips = trace("i.iq");
    let jumps = ips
        .windows(2)
        .filter(|w| ((w[1] - w[0]).abs() - FRAC_PI_2).abs() < 1e-6)
        .count();
    let flat = ips.windows(2).filter(|w| (w[1] - w[0]).abs() < 1e-6).count();
    assert_eq!(jumps, 4 * 32);
    assert_eq!(jumps + flat, ips.len() - 1);
}

#[test]
fn custom_table_file() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("t.txt"), ok(d.path(), &["table"])).unwrap();
    let a = ok(
        d.path(),
        &["--table", "t.txt", "gen-carrier", "--symbols", "1f", "--out", "a.iq"],
    );
    let b = ok(d.path(), &["gen-carrier", "--symbols", "1f", "--out", "b.iq"]);
    assert_eq!(a, b);
    assert_eq!(files(d.path(), "a.iq"), files(d.path(), "b.iq"));
}

#[test]
fn single_tone_sidecar() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "--sample-rate",
            "8MHz",
            "gen-carrier",
            "--single-tone",
            "1",
            "--duration",
            "2ms",
        ],
    );
    let (sig, h) = read_iq(&d.path().join("carrier.iq")).unwrap();
    assert_eq!(h.sample_rate_hz, 8e6);
    assert_eq!(h.num_samples, 16_000);
    assert_eq!(sig.len(), 16_000);
    assert_eq!(h.carrier_offset_hz, Some(500e3));
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop_oneof![Just(Scheme::Ips), Just(Scheme::Fps), Just(Scheme::FpsCt)],
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        prop_oneof![Just(Snr::Noiseless), (-50.0f64..80.0).prop_map(Snr::Db)],
        prop_oneof![
            prop::collection::vec(any::<u8>(), 1..16).prop_map(Payload::Hex),
            (0usize..100_000).prop_map(|count| Payload::Random { count })
        ],
        prop_oneof![Just(TagModel::FirstHarmonic), Just(TagModel::TruncatedSeries)],
        any::<u32>(),
        any::<u64>(),
    )
        .prop_map(
            |(scheme, f_shift, sample_rate, snr, payload, tag_model, harmonic_order, seed)| ExperimentConfig {
                scheme,
                f_shift,
                sample_rate,
                snr,
                payload,
                tag_model,
                harmonic_order,
                seed,
            },
        )
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in config_strategy()) {
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
