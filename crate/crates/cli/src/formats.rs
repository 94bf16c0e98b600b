//! Text and JSON artifacts written by the commands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fpscatter_core::phy::SpreadingTable;
use fpscatter_core::receiver::DemodResult;
use fpscatter_core::spectrum::{ObwResult, PsdEstimate};
use fpscatter_core::tag::TagSchedule;
use serde::{Deserialize, Serialize};

/// Floor used for empty PSD bins so the CSV never holds `-inf`.
pub const PSD_FLOOR_DB: f64 = -400.0;

pub fn read_table(path: &Path) -> Result<SpreadingTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading spreading table {}", path.display()))?;
    SpreadingTable::parse(&text).with_context(|| format!("parsing spreading table {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub index: usize,
    pub freq_hz: f64,
    pub phase_rad: f64,
    pub duration_s: f64,
}

pub fn schedule_records(schedule: &TagSchedule) -> Vec<ScheduleRecord> {
    schedule
        .slots()
        .iter()
        .enumerate()
        .map(|(index, s)| ScheduleRecord {
            index,
            freq_hz: s.wave.frequency(),
            phase_rad: s.wave.initial_phase(),
            duration_s: s.duration,
        })
        .collect()
}

/// One JSON object per slot, newline terminated.
pub fn schedule_jsonl(schedule: &TagSchedule) -> String {
    let mut out = String::new();
    for r in schedule_records(schedule) {
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_schedule_jsonl(text: &str) -> Result<Vec<ScheduleRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("schedule line {}", i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub symbols: Vec<u8>,
    pub hamming_distances: Vec<u32>,
    pub chip_errors: u32,
    pub tag_bits: Option<Vec<u8>>,
}

impl DecodeReport {
    pub fn new(result: &DemodResult, tag_bits: Option<&[bool]>) -> Self {
        Self {
            symbols: result.symbols.iter().map(|s| s.value()).collect(),
            hamming_distances: result.hamming_distances.clone(),
            chip_errors: result.chip_errors(),
            tag_bits: tag_bits.map(|b| b.iter().map(|&x| u8::from(x)).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObwReport {
    pub bandwidth_hz: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub fraction: f64,
}

impl From<ObwResult> for ObwReport {
    fn from(r: ObwResult) -> Self {
        Self {
            bandwidth_hz: r.bandwidth,
            f_low_hz: r.f_low,
            f_high_hz: r.f_high,
            fraction: r.energy_fraction,
        }
    }
}

/// Frequencies in the CSV are relative to `center_offset_hz`, the frequency
/// that was moved to DC before estimating.
pub fn psd_csv(psd: &PsdEstimate, sample_rate: f64, center_offset_hz: f64) -> Result<String> {
    if psd.psd.iter().all(|&p| p <= 0.0) {
        bail!("PSD is identically zero");
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# window={} rbw_hz={} bin_width_hz={} segment_len={} segments={} sample_rate_hz={} center_offset_hz={}",
        psd.window.name(),
        psd.rbw,
        psd.bin_width,
        psd.segment_len,
        psd.segment_count,
        sample_rate,
        center_offset_hz
    );
    out.push_str("freq_hz,psd_db\n");
    for (f, p) in psd.freqs.iter().zip(&psd.psd) {
        let db = if *p > 0.0 {
            (10.0 * p.log10()).max(PSD_FLOOR_DB)
        } else {
            PSD_FLOOR_DB
        };
        let _ = writeln!(out, "{f},{db:.6}");
    }
    Ok(out)
}
