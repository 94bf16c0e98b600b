//! Argument definitions and command implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use fpscatter_core::channel::{add_awgn, channel_filter, ChannelConfig, Snr};
use fpscatter_core::link::{apply_tag, payload_schedule, scheme_timing, single_tone_link, LinkParams};
use fpscatter_core::phy::{gen_single_tone, oqpsk_modulate, spread, symbols_from_bytes, SpreadingTable, ZigbeeSymbol};
use fpscatter_core::receiver::{decode_tag_by_comparison, decode_zigbee, ChipTiming, DemodResult, SamplePoint};
use fpscatter_core::signal::samples_per_chip;
use fpscatter_core::spectrum::{
    estimate_psd, occupied_bandwidth, DEFAULT_OBW_FRACTION, DEFAULT_OVERLAP, DEFAULT_SEGMENT_LEN,
};
use fpscatter_core::tag::{compile_ct_schedule, Scheme, SchemeParams, TagModel};
use fpscatter_core::ComplexBaseband;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{scheme_from_str, snr_from_str, tag_model_from_str, ExperimentConfig, Payload};
use crate::formats::{psd_csv, read_table, schedule_jsonl, DecodeReport, ObwReport};
use crate::iq::{read_iq, write_iq, IqHeader};
use crate::units::{parse_duration, parse_frequency, parse_hex};

/// Offset between the payload seed and the noise seed so the two streams differ.
const NOISE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Parser)]
#[command(
    name = "fpscatter",
    version,
    about = "Zigbee backscatter simulator: IPS, FPS and codeword translation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for random payloads and channel noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Baseband sample rate, a multiple of the 2 MHz chip rate.
    #[arg(long, global = true, value_parser = parse_frequency)]
    pub sample_rate: Option<f64>,
    /// Tag frequency shift towards the receiver channel.
    #[arg(long, global = true, value_parser = parse_frequency, allow_negative_numbers = true)]
    pub f_shift: Option<f64>,
    /// Spreading table file (16 lines of `index chips`); defaults to IEEE 802.15.4.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a carrier: a single tone or an O-QPSK packet.
    GenCarrier(GenCarrierArgs),
    /// Reflect a carrier off the tag and write the backscattered capture.
    Backscatter(BackscatterArgs),
    /// Demodulate a capture; with --compare also recover tag bits.
    Decode(DecodeArgs),
    /// Occupied bandwidth of a capture.
    Obw(ObwArgs),
    /// Unwrapped phase of a capture, sampled a few times per chip.
    PhaseTrace(PhaseTraceArgs),
    /// Print the spreading table in file format.
    Table,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["single_tone", "symbols", "random"])))]
pub struct GenCarrierArgs {
    /// Single tone from a constant PSDU bit: 0 sits at −500 kHz, 1 at +500 kHz.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1), requires = "duration")]
    pub single_tone: Option<u8>,
    /// Duration of the single tone, e.g. `1ms` or `500us`.
    #[arg(long, value_parser = parse_duration)]
    pub duration: Option<f64>,
    /// O-QPSK packet from hex bytes (two symbols per byte, low nibble first).
    #[arg(long)]
    pub symbols: Option<String>,
    /// O-QPSK packet of this many random symbols.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, short, default_value = "carrier.iq")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("payload_src").args(["payload", "random"])))]
pub struct BackscatterArgs {
    /// Carrier capture. IPS and FPS default to a −500 kHz single tone; codeword translation needs one.
    #[arg(long)]
    pub carrier: Option<PathBuf>,
    #[arg(long, value_parser = scheme_from_str)]
    pub scheme: Option<Scheme>,
    /// Hex payload: symbols for IPS/FPS, tag bits (LSB first) for fps_ct.
    #[arg(long)]
    pub payload: Option<String>,
    /// Random payload of this many symbols (IPS/FPS) or tag bits (fps_ct).
    #[arg(long)]
    pub random: Option<usize>,
    /// Channel SNR in dB, or `noiseless`.
    #[arg(long, value_parser = snr_from_str, allow_negative_numbers = true)]
    pub snr_db: Option<Snr>,
    #[arg(long, value_parser = tag_model_from_str)]
    pub tag_model: Option<TagModel>,
    #[arg(long)]
    pub harmonic_order: Option<u32>,
    /// Experiment config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the effective config here.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
    /// Write the tag schedule as JSON lines.
    #[arg(long)]
    pub dump_schedule: Option<PathBuf>,
    #[arg(long, short, default_value = "backscatter.iq")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub input: PathBuf,
    /// Carrier capture heard by a second receiver; enables tag-bit recovery.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Receiver retune frequency; defaults to the capture's recorded offset.
    #[arg(long, value_parser = parse_frequency, allow_negative_numbers = true)]
    pub rx_offset: Option<f64>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ObwArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_OBW_FRACTION)]
    pub fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SEGMENT_LEN)]
    pub segment_len: usize,
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    pub overlap: f64,
    /// Frequency moved to DC before estimating; defaults to the recorded receiver offset.
    #[arg(long, value_parser = parse_frequency, allow_negative_numbers = true)]
    pub retune: Option<f64>,
    /// Write the PSD as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhaseTraceArgs {
    pub input: PathBuf,
    /// Frequency moved to DC before taking the phase; defaults to the recorded receiver offset.
    #[arg(long, value_parser = parse_frequency, allow_negative_numbers = true)]
    pub retune: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub points_per_chip: usize,
    /// Output CSV; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Usage errors exit with 2, everything else with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.into())
            }
        }
    )*};
}

runtime_from!(
    anyhow::Error,
    fpscatter_core::Error,
    crate::iq::IqError,
    std::io::Error,
    serde_json::Error
);

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::GenCarrier(a) => gen_carrier(g, a, stdout),
        Command::Backscatter(a) => backscatter(g, a, stdout),
        Command::Decode(a) => decode(g, a, stdout),
        Command::Obw(a) => obw(g, a, stdout),
        Command::PhaseTrace(a) => phase_trace(a, stdout),
        Command::Table => {
            stdout.write_all(load_table(g)?.to_text().as_bytes())?;
            Ok(())
        }
    }
}

fn load_table(g: &GlobalArgs) -> anyhow::Result<SpreadingTable> {
    match &g.table {
        Some(p) => read_table(p),
        None => Ok(SpreadingTable::ieee802154()),
    }
}

fn print_json<T: serde::Serialize>(stdout: &mut dyn Write, value: &T, also: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    stdout.write_all(text.as_bytes())?;
    if let Some(p) = also {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn timing_name(t: ChipTiming) -> &'static str {
    match t.point {
        SamplePoint::ChipEnd => "chip_end",
        SamplePoint::MidChip => "mid_chip",
    }
}

fn timing_from_header(h: &IqHeader) -> anyhow::Result<ChipTiming> {
    let point = match h.timing.as_deref() {
        None | Some("chip_end") => SamplePoint::ChipEnd,
        Some("mid_chip") => SamplePoint::MidChip,
        Some(other) => return Err(anyhow!("unknown chip timing `{other}` in sidecar")),
    };
    Ok(ChipTiming {
        point,
        reference_phase: h.reference_phase_rad.unwrap_or(0.0),
    })
}

fn random_symbols(count: usize, seed: u64) -> Vec<ZigbeeSymbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| ZigbeeSymbol::new(rng.random_range(0..16u8)).expect("in range"))
        .collect()
}

fn random_bits(count: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<bool>()).collect()
}

fn bits_lsb_first(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1 == 1))
        .collect()
}

fn gen_carrier(g: &GlobalArgs, a: &GenCarrierArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let fs = g.sample_rate.unwrap_or(fpscatter_core::DEFAULT_SAMPLE_RATE);
    let seed = g.seed.unwrap_or(0);
    let (signal, mut header) = if let Some(bit) = a.single_tone {
        let duration = a.duration.ok_or_else(|| usage("--single-tone needs --duration"))?;
        let sig = gen_single_tone(bit == 1, duration, fs)?;
        let mut h = IqHeader::for_signal(&sig);
        h.kind = Some("single_tone".into());
        h.carrier_offset_hz = Some(if bit == 1 { 500e3 } else { -500e3 });
        (sig, h)
    } else {
        let symbols = match (&a.symbols, a.random) {
            (Some(hex), _) => symbols_from_bytes(&parse_hex(hex).map_err(usage)?),
            (None, Some(n)) => random_symbols(n, seed),
            (None, None) => return Err(usage("one of --single-tone, --symbols or --random is required")),
        };
        if symbols.is_empty() {
            return Err(fpscatter_core::Error::EmptyPayload.into());
        }
        let chips = spread(&symbols, &load_table(g)?);
        let sig = oqpsk_modulate(&chips, fs)?;
        let mut h = IqHeader::for_signal(&sig);
        h.kind = Some("oqpsk".into());
        h.carrier_offset_hz = Some(0.0);
        h.rx_offset_hz = Some(0.0);
        h.timing = Some(timing_name(ChipTiming::OQPSK).into());
        h.reference_phase_rad = Some(ChipTiming::OQPSK.reference_phase);
        h.chip_count = Some(chips.len() as u64);
        h.seed = a.random.map(|_| seed);
        (sig, h)
    };
    header = write_iq(&a.out, &signal, &header)?;
    print_json(stdout, &header, None)
}

fn effective_config(g: &GlobalArgs, a: &BackscatterArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.scheme {
        cfg.scheme = s;
    }
    if let Some(v) = g.f_shift {
        cfg.f_shift = v;
    }
    if let Some(v) = g.sample_rate {
        cfg.sample_rate = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.snr_db {
        cfg.snr = v;
    }
    if let Some(v) = a.tag_model {
        cfg.tag_model = v;
    }
    if let Some(v) = a.harmonic_order {
        cfg.harmonic_order = v;
    }
    if let Some(hex) = &a.payload {
        cfg.payload = Payload::Hex(parse_hex(hex).map_err(usage)?);
    } else if let Some(n) = a.random {
        cfg.payload = Payload::Random { count: n };
    }
    Ok(cfg)
}

fn backscatter(g: &GlobalArgs, a: &BackscatterArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = effective_config(g, a)?;
    let table = load_table(g)?;
    let carrier = a.carrier.as_deref().map(read_iq).transpose()?;
    let sample_rate = match &carrier {
        Some((c, _)) if g.sample_rate.is_some_and(|r| r != c.sample_rate()) => {
            return Err(usage("--sample-rate differs from the carrier capture"));
        }
        Some((c, _)) => c.sample_rate(),
        None => cfg.sample_rate,
    };
    let params = LinkParams {
        sample_rate,
        f_shift: cfg.f_shift,
        tag_model: cfg.tag_model,
        harmonic_order: cfg.harmonic_order,
    };

    let (signal, schedule, rx_offset, chips_per_tag_bit) = match cfg.scheme {
        Scheme::Ips | Scheme::Fps => {
            let symbols = match &cfg.payload {
                Payload::Hex(b) => symbols_from_bytes(b),
                Payload::Random { count } => random_symbols(*count, cfg.seed),
            };
            match &carrier {
                None => {
                    let bs = single_tone_link(cfg.scheme, &symbols, &table, &params)?;
                    (bs.signal, bs.schedule, bs.rx_offset, None)
                }
                Some((c, h)) => {
                    let schedule = payload_schedule(cfg.scheme, &symbols, &table, cfg.f_shift)?;
                    let sig = apply_tag(c, &schedule, &params)?;
                    (sig, schedule, cfg.f_shift + h.carrier_offset_hz.unwrap_or(0.0), None)
                }
            }
        }
        Scheme::FpsCt => {
            let (c, h) = carrier
                .as_ref()
                .ok_or_else(|| usage("fps_ct needs --carrier (an O-QPSK capture)"))?;
            let bits = match &cfg.payload {
                Payload::Hex(b) => bits_lsb_first(b),
                Payload::Random { count } => random_bits(*count, cfg.seed),
            };
            if bits.is_empty() {
                return Err(fpscatter_core::Error::EmptyPayload.into());
            }
            let spc = samples_per_chip(sample_rate)?;
            let chip_count = match h.chip_count {
                Some(n) => n as usize,
                None => (c.len() / spc).saturating_sub(1),
            };
            let schedule = compile_ct_schedule(&bits, chip_count, &SchemeParams::ct(cfg.f_shift)?)?;
            let sig = apply_tag(c, &schedule, &params)?;
            (
                sig,
                schedule,
                cfg.f_shift + h.carrier_offset_hz.unwrap_or(0.0),
                Some((chip_count / bits.len()) as u64),
            )
        }
    };
    let signal = add_awgn(&signal, cfg.snr, cfg.seed.wrapping_add(NOISE_SEED_OFFSET));
    let timing = scheme_timing(cfg.scheme);

    let mut header = IqHeader::for_signal(&signal);
    header.kind = Some(cfg.scheme.name().into());
    header.carrier_offset_hz = carrier.as_ref().map_or(Some(-500e3), |(_, h)| h.carrier_offset_hz);
    header.rx_offset_hz = Some(rx_offset);
    header.timing = Some(timing_name(timing).into());
    header.reference_phase_rad = Some(timing.reference_phase);
    header.chip_count = Some(schedule.data_slots().len() as u64);
    header.chips_per_tag_bit = chips_per_tag_bit;
    header.seed = Some(cfg.seed);
    let header = write_iq(&a.out, &signal, &header)?;

    if let Some(p) = &a.dump_schedule {
        fs::write(p, schedule_jsonl(&schedule)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.save_config {
        fs::write(p, cfg.to_text()).with_context(|| format!("writing {}", p.display()))?;
    }
    print_json(stdout, &header, None)
}

/// Filters a capture at `rx_offset` and despreads every whole symbol.
pub fn decode_capture(
    signal: &ComplexBaseband,
    header: &IqHeader,
    rx_offset: Option<f64>,
    table: &SpreadingTable,
) -> anyhow::Result<DemodResult> {
    let offset = rx_offset.or(header.rx_offset_hz).unwrap_or(0.0);
    let filtered = channel_filter(signal, &ChannelConfig::default(), offset)?;
    Ok(decode_zigbee(&filtered, table, timing_from_header(header)?)?)
}

fn decode(g: &GlobalArgs, a: &DecodeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let table = load_table(g)?;
    let (signal, header) = read_iq(&a.input)?;
    let result = decode_capture(&signal, &header, a.rx_offset, &table)?;
    let tag_bits = match &a.compare {
        None => None,
        Some(p) => {
            let (carrier, carrier_header) = read_iq(p)?;
            let reference = decode_capture(&carrier, &carrier_header, None, &table)?;
            let group = header.chips_per_tag_bit.unwrap_or(1) as usize;
            Some(decode_tag_by_comparison(&reference, &result, group)?.tag_bits)
        }
    };
    print_json(
        stdout,
        &DecodeReport::new(&result, tag_bits.as_deref()),
        a.report.as_deref(),
    )
}

fn obw(_g: &GlobalArgs, a: &ObwArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(a.fraction > 0.0 && a.fraction < 1.0) {
        return Err(usage(format!("--fraction must lie in (0, 1), got {}", a.fraction)));
    }
    let (signal, header) = read_iq(&a.input)?;
    // Centring the band keeps its tails from wrapping around one edge of the spectrum only.
    let retune = a.retune.or(header.rx_offset_hz).unwrap_or(0.0);
    let psd = estimate_psd(&signal.frequency_shift(-retune), a.segment_len, a.overlap)?;
    if let Some(p) = &a.csv {
        fs::write(p, psd_csv(&psd, signal.sample_rate(), retune)?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    let mut report = ObwReport::from(occupied_bandwidth(&psd, a.fraction)?);
    report.f_low_hz += retune;
    report.f_high_hz += retune;
    print_json(stdout, &report, a.json.as_deref())
}

fn phase_trace(a: &PhaseTraceArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if a.points_per_chip == 0 {
        return Err(usage("--points-per-chip must be positive"));
    }
    let (signal, header) = read_iq(&a.input)?;
    let retune = a.retune.or(header.rx_offset_hz).unwrap_or(0.0);
    let shifted = signal.frequency_shift(-retune);
    let spc = samples_per_chip(signal.sample_rate())?;
    let step = (spc / a.points_per_chip).max(1);
    let mut out = String::from("time_s,phase_rad\n");
    let mut unwrapped = 0.0;
    let mut prev: Option<f64> = None;
    for (n, s) in shifted.samples().iter().enumerate().step_by(step) {
        let p = s.arg();
        if let Some(q) = prev {
            let mut d = p - q;
            d -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
            unwrapped += d;
        } else {
            unwrapped = p;
        }
        prev = Some(p);
        let t = n as f64 / signal.sample_rate();
        out.push_str(&format!("{t:.9e},{unwrapped:.9}\n"));
    }
    match &a.out {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display()))?,
        None => stdout.write_all(out.as_bytes())?,
    }
    Ok(())
}
