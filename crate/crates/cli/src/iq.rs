//! Raw IQ capture files: little-endian `f32` (I, Q) pairs next to a JSON
//! sidecar named `<file>.json`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fpscatter_core::ComplexBaseband;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IqError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: malformed sidecar header: {source}", path.display())]
    Header { path: PathBuf, source: serde_json::Error },
    #[error("{}: short read, header promises {expected} samples but the file holds {found} bytes", path.display())]
    ShortRead { path: PathBuf, expected: u64, found: u64 },
    #[error("{}: {source}", path.display())]
    Signal {
        path: PathBuf,
        source: fpscatter_core::Error,
    },
}

/// Sidecar header. The first three fields are mandatory; the rest describe
/// how the capture was produced so later commands can pick sensible defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqHeader {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub num_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_offset_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_offset_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_phase_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chips_per_tag_bit: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl IqHeader {
    pub fn for_signal(signal: &ComplexBaseband) -> Self {
        Self {
            sample_rate_hz: signal.sample_rate(),
            center_freq_hz: signal.center_freq_label,
            num_samples: signal.len() as u64,
            kind: None,
            carrier_offset_hz: None,
            rx_offset_hz: None,
            timing: None,
            reference_phase_rad: None,
            chip_count: None,
            chips_per_tag_bit: None,
            seed: None,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IqError + '_ {
    move |source| IqError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes samples and sidecar. `header.num_samples` and the rate are taken from `signal`.
pub fn write_iq(path: &Path, signal: &ComplexBaseband, header: &IqHeader) -> Result<IqHeader, IqError> {
    let mut header = header.clone();
    header.sample_rate_hz = signal.sample_rate();
    header.num_samples = signal.len() as u64;
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for s in signal.samples() {
        w.write_all(&(s.re as f32).to_le_bytes()).map_err(io_err(path))?;
        w.write_all(&(s.im as f32).to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&side, json + "\n").map_err(io_err(&side))?;
    Ok(header)
}

pub fn read_header(path: &Path) -> Result<IqHeader, IqError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    serde_json::from_str(&text).map_err(|source| IqError::Header { path: side, source })
}

/// Reads a capture; extra trailing bytes are ignored, missing ones are a short read.
pub fn read_iq(path: &Path) -> Result<(ComplexBaseband, IqHeader), IqError> {
    let header = read_header(path)?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    let needed = header.num_samples * 8;
    if (bytes.len() as u64) < needed {
        return Err(IqError::ShortRead {
            path: path.to_owned(),
            expected: header.num_samples,
            found: bytes.len() as u64,
        });
    }
    let samples = bytes[..needed as usize]
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re.into(), im.into())
        })
        .collect();
    let signal = ComplexBaseband::new(samples, header.sample_rate_hz)
        .map_err(|source| IqError::Signal {
            path: path.to_owned(),
            source,
        })?
        .with_label(header.center_freq_hz);
    Ok((signal, header))
}
