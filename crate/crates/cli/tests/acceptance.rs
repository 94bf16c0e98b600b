//! Acceptance suite: every criterion at its pinned tolerance, one line each.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use fpscatter::iq::read_iq;
use fpscatter_core::channel::{add_awgn, backscatter_mix, channel_filter, CarrierModel, ChannelConfig, Snr};
use fpscatter_core::link::{ct_link, receive, single_tone_link, LinkParams};
use fpscatter_core::phy::{ChipSequence, SpreadingTable, ZigbeeSymbol};
use fpscatter_core::receiver::{decode_tag_by_comparison, decode_zigbee, despread, ChipTiming};
use fpscatter_core::spectrum::{estimate_psd, occupied_bandwidth, PsdEstimate};
use fpscatter_core::tag::{
    boundary_phase_jumps, compile_fps_schedule, compile_ips_schedule, derive_f_fp, render_tag_waveform, Scheme,
    SchemeParams, TagModel,
};
use fpscatter_core::ComplexBaseband;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_symbols(n: usize, seed: u64) -> Vec<ZigbeeSymbol> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| ZigbeeSymbol::new(r.random_range(0..16)).unwrap())
        .collect()
}

fn peak_bin_error(psd: &PsdEstimate, want: f64) -> f64 {
    (psd.peak_frequency() - want).abs() / psd.bin_width
}

fn c1_single_tone() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (bit, want) in [("0", -500e3), ("1", 500e3)] {
        let out = dir.path().join(format!("tone{bit}.iq"));
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_fpscatter"))
            .args(["gen-carrier", "--single-tone", bit, "--duration", "1ms", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        let elapsed = start.elapsed();
        let (sig, _) = read_iq(&out).map_err(|e| e.to_string())?;
        let psd = estimate_psd(&sig, 4096, 0.5).map_err(|e| e.to_string())?;
        let err = peak_bin_error(&psd, want);
        ok &= status.success() && err <= 1.0 && elapsed < Duration::from_secs(1);
        parts.push(format!(
            "tone {bit}: peak {:.0} Hz ({err:.2} bins) in {elapsed:.2?}",
            psd.peak_frequency()
        ));
    }
    check(ok, parts.join("; "))
}

fn c2_f_fp() -> Outcome {
    let a = derive_f_fp(FRAC_PI_2, 0.5e-6).unwrap();
    let b = derive_f_fp(PI, 0.5e-6).unwrap();
    check(a == 500e3 && b == 1e6, format!("f_fp(π/2) = {a} Hz, f_fp(π) = {b} Hz"))
}

fn c3_obw() -> Outcome {
    let start = Instant::now();
    let table = SpreadingTable::ieee802154();
    // 625 symbols × 16 µs = 10 ms.
    let payload = random_symbols(625, 3);
    let mut obw = [0.0; 2];
    for (i, scheme) in [Scheme::Fps, Scheme::Ips].into_iter().enumerate() {
        let bs = single_tone_link(scheme, &payload, &table, &LinkParams::default()).unwrap();
        assert!(bs.signal.duration() >= 10e-3);
        // Centre the band so the periodic spectrum wraps symmetrically around it.
        let centred = bs.signal.frequency_shift(-bs.rx_offset);
        let psd = estimate_psd(&centred, 4096, 0.5).unwrap();
        obw[i] = occupied_bandwidth(&psd, 0.9).unwrap().bandwidth;
    }
    let elapsed = start.elapsed();
    let [fps, ips] = obw;
    check(
        (fps - 1.8e6).abs() <= 0.4e6
            && (ips - 3.2e6).abs() <= 0.6e6
            && ips > 1.5 * fps
            && elapsed < Duration::from_secs(30),
        format!(
            "OBW90 FPS {:.3} MHz, IPS {:.3} MHz, ratio {:.2}, {elapsed:.2?}",
            fps / 1e6,
            ips / 1e6,
            ips / fps
        ),
    )
}

fn c4_boundary_jumps() -> Outcome {
    let mut r = rng(4);
    let chips = ChipSequence::new((0..2000).map(|_| r.random::<bool>()).collect());
    let params = SchemeParams::fps(10e6).unwrap();
    let fps = compile_fps_schedule(&chips, &params).unwrap();
    let fps_sig = render_tag_waveform(&fps, 64e6, TagModel::FirstHarmonic).unwrap();
    let fps_max = boundary_phase_jumps(&fps_sig, &fps)
        .iter()
        .fold(0.0f64, |m, j| m.max(j.abs()));
    let ips = compile_ips_schedule(&chips, &params).unwrap();
    let ips_sig = render_tag_waveform(&ips, 64e6, TagModel::FirstHarmonic).unwrap();
    let ips_dev = boundary_phase_jumps(&ips_sig, &ips)
        .iter()
        .zip(chips.chips())
        .map(|(j, &c)| (j - if c { FRAC_PI_2 } else { -FRAC_PI_2 }).abs())
        .fold(0.0f64, f64::max);
    check(
        fps_max < 1e-6 && ips_dev <= 1e-6,
        format!("FPS max jump {fps_max:.2e} rad; IPS max deviation from ±π/2 {ips_dev:.2e} rad"),
    )
}

fn c5_fps_loopback() -> Outcome {
    let start = Instant::now();
    let table = SpreadingTable::ieee802154();
    let payload = random_symbols(1000, 5);
    let bs = single_tone_link(Scheme::Fps, &payload, &table, &LinkParams::default()).unwrap();
    let r = receive(
        &bs.signal,
        bs.rx_offset,
        bs.timing,
        &ChannelConfig::default(),
        &table,
        0,
    )
    .unwrap();
    let errors =
        r.symbols.iter().zip(&payload).filter(|(a, b)| a != b).count() + payload.len().abs_diff(r.symbols.len());
    let max_d = r.hamming_distances.iter().copied().max().unwrap_or(0);
    let elapsed = start.elapsed();
    check(
        errors == 0 && max_d == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{} symbols, {errors} symbol errors, max Hamming distance {max_d}, {elapsed:.2?}",
            payload.len()
        ),
    )
}

fn c6_codeword_translation() -> Outcome {
    let table = SpreadingTable::ieee802154();
    // 96 symbols = 3072 chips, three carrier chips per tag bit.
    let carrier_symbols = random_symbols(96, 6);
    let mut r = rng(60);
    let bits: Vec<bool> = (0..1024).map(|_| r.random::<bool>()).collect();
    let (carrier, bs) = ct_link(&carrier_symbols, &bits, &table, &LinkParams::default()).unwrap();
    let per_bit = 3;

    let a = decode_zigbee(&carrier, &table, ChipTiming::OQPSK).unwrap();
    let b = receive(
        &bs.signal,
        bs.rx_offset,
        bs.timing,
        &ChannelConfig::default(),
        &table,
        0,
    )
    .unwrap();
    let clean = decode_tag_by_comparison(&a, &b, per_bit).unwrap();
    let clean_errors = clean.tag_bits.iter().zip(&bits).filter(|(x, y)| x != y).count();

    let noisy_channel = ChannelConfig {
        snr: Snr::Db(15.0),
        ..ChannelConfig::default()
    };
    let noisy_carrier = add_awgn(&carrier, Snr::Db(15.0), 61);
    let a = decode_zigbee(
        &channel_filter(&noisy_carrier, &ChannelConfig::default(), 0.0).unwrap(),
        &table,
        ChipTiming::OQPSK,
    )
    .unwrap();
    let b = receive(&bs.signal, bs.rx_offset, bs.timing, &noisy_channel, &table, 62).unwrap();
    let noisy = decode_tag_by_comparison(&a, &b, per_bit).unwrap();
    let ber = noisy.tag_bits.iter().zip(&bits).filter(|(x, y)| x != y).count() as f64 / bits.len() as f64;
    check(
        clean_errors == 0 && clean.tag_bits.len() == bits.len() && ber < 1e-2,
        format!("noiseless: {clean_errors}/1024 bit errors; 15 dB SNR: BER {ber:.2e}"),
    )
}

fn c7_despread_exhaustive() -> Outcome {
    let table = SpreadingTable::ieee802154();
    let mut r = rng(7);
    let blocks: Vec<u32> = (0..10_000).map(|_| r.random()).collect();
    let chips = ChipSequence::new(
        blocks
            .iter()
            .flat_map(|&b| (0..32).map(move |n| (b >> (31 - n)) & 1 == 1))
            .collect(),
    );
    let result = despread(&chips, &table).unwrap();
    let mut agree = 0;
    for (i, &b) in blocks.iter().enumerate() {
        let mut best = (0u8, u32::MAX);
        for s in 0..16u8 {
            let d = (b ^ table.codewords()[s as usize]).count_ones();
            if d < best.1 {
                best = (s, d);
            }
        }
        if result.symbols[i].value() == best.0 && result.hamming_distances[i] == best.1 {
            agree += 1;
        }
    }
    check(agree == blocks.len(), format!("{agree}/{} blocks agree", blocks.len()))
}

fn c8_harmonic_mix() -> Outcome {
    let fs = 64e6;
    let params = SchemeParams::fps(10e6).unwrap();
    let chips = ChipSequence::new(vec![true; 4000]);
    let tag = render_tag_waveform(
        &compile_fps_schedule(&chips, &params).unwrap(),
        fs,
        TagModel::FirstHarmonic,
    )
    .unwrap();
    let carrier = CarrierModel::new(1.0, -500e3, 0.0)
        .unwrap()
        .render(tag.len(), fs)
        .unwrap();
    let mixed = backscatter_mix(&carrier, &tag).unwrap();
    let psd = estimate_psd(&mixed, 4096, 0.5).unwrap();
    let err = peak_bin_error(&psd, 10e6);
    check(
        err <= 1.0,
        format!("peak {:.0} Hz ({err:.2} bins from 10 MHz)", psd.peak_frequency()),
    )
}

/// A randomized test signal: tones on a coarse grid plus filtered noise.
fn random_signal(seed: u64) -> ComplexBaseband {
    let fs = 64e6;
    let mut r = rng(seed);
    let n = 16384;
    let tones: Vec<(f64, f64, f64)> = (0..r.random_range(1..5))
        .map(|_| {
            (
                r.random_range(0.1..2.0),
                (r.random_range(-30..30) as f64 * 16.0 + 0.3) * fs / 1024.0,
                r.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let noise = ComplexBaseband::new(
        fpscatter_core::channel::awgn_noise(n, r.random_range(0.01..1.0), seed),
        fs,
    )
    .unwrap();
    let x = noise
        .samples()
        .iter()
        .enumerate()
        .map(|(t, &v)| {
            v + tones
                .iter()
                .map(|&(a, f, p)| Complex64::from_polar(a, std::f64::consts::TAU * f * t as f64 / fs + p))
                .sum::<Complex64>()
        })
        .collect();
    ComplexBaseband::new(x, fs).unwrap()
}

fn c9_properties() -> Outcome {
    let mut parseval_worst = 0.0f64;
    let mut monotone_failures = 0;
    for seed in 0..100 {
        let sig = random_signal(900 + seed);
        let psd = estimate_psd(&sig, 1024, 0.5).unwrap();
        let p = sig.mean_power();
        parseval_worst = parseval_worst.max((psd.total_power() - p).abs() / p);

        let sig = random_signal(5000 + seed);
        let psd = estimate_psd(&sig, 1024, 0.5).unwrap();
        let mut prev: Option<fpscatter_core::spectrum::ObwResult> = None;
        for k in 1..20 {
            let r = occupied_bandwidth(&psd, k as f64 * 0.05).unwrap();
            if let Some(q) = prev {
                if r.bandwidth + 1e-6 < q.bandwidth || r.f_low > q.f_low + 1e-6 || r.f_high + 1e-6 < q.f_high {
                    monotone_failures += 1;
                }
            }
            prev = Some(r);
        }
    }
    check(
        parseval_worst < 0.01 && monotone_failures == 0,
        format!("Parseval worst relative error {parseval_worst:.2e} over 100 signals; OBW monotonicity violations {monotone_failures} over 100 signals"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 single-tone carrier at ∓500 kHz", c1_single_tone),
        ("2 f_fp derivation", c2_f_fp),
        ("3 occupied bandwidth FPS vs IPS", c3_obw),
        ("4 slot-boundary phase jumps", c4_boundary_jumps),
        ("5 FPS loopback, 1000 symbols", c5_fps_loopback),
        ("6 codeword translation tag bits", c6_codeword_translation),
        ("7 despread vs exhaustive search", c7_despread_exhaustive),
        ("8 harmonic mixing lands at +10 MHz", c8_harmonic_mix),
        ("9 Parseval and OBW monotonicity", c9_properties),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
