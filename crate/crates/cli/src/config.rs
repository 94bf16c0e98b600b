//! Experiment configuration in a plain `key = value` text form.

use std::fmt;
use std::str::FromStr;

use fpscatter_core::channel::Snr;
use fpscatter_core::tag::{Scheme, TagModel, DEFAULT_F_SHIFT, DEFAULT_HARMONIC_ORDER};
use fpscatter_core::DEFAULT_SAMPLE_RATE;
use thiserror::Error;

use crate::units::{parse_hex, to_hex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Hex(Vec<u8>),
    /// `count` symbols (IPS, FPS) or tag bits (codeword translation) drawn from the seed.
    Random {
        count: usize,
    },
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Hex(b) => write!(f, "hex:{}", to_hex(b)),
            Payload::Random { count } => write!(f, "random:{count}"),
        }
    }
}

impl FromStr for Payload {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(h) = s.strip_prefix("hex:") {
            parse_hex(h).map(Payload::Hex)
        } else if let Some(n) = s.strip_prefix("random:") {
            n.parse()
                .map(|count| Payload::Random { count })
                .map_err(|_| format!("invalid random count `{n}`"))
        } else {
            Err(format!("payload `{s}` must be `hex:<digits>` or `random:<count>`"))
        }
    }
}

pub fn scheme_from_str(s: &str) -> Result<Scheme, String> {
    match s {
        "ips" => Ok(Scheme::Ips),
        "fps" => Ok(Scheme::Fps),
        "fps_ct" | "ct" => Ok(Scheme::FpsCt),
        _ => Err(format!("unknown scheme `{s}` (ips, fps, fps_ct)")),
    }
}

pub fn tag_model_name(m: TagModel) -> &'static str {
    match m {
        TagModel::FirstHarmonic => "first_harmonic",
        TagModel::TruncatedSeries => "truncated_series",
    }
}

pub fn tag_model_from_str(s: &str) -> Result<TagModel, String> {
    match s {
        "first_harmonic" => Ok(TagModel::FirstHarmonic),
        "truncated_series" => Ok(TagModel::TruncatedSeries),
        _ => Err(format!("unknown tag model `{s}` (first_harmonic, truncated_series)")),
    }
}

pub fn snr_to_string(snr: Snr) -> String {
    match snr {
        Snr::Noiseless => "noiseless".into(),
        Snr::Db(db) => format!("{db}"),
    }
}

pub fn snr_from_str(s: &str) -> Result<Snr, String> {
    if s == "noiseless" {
        return Ok(Snr::Noiseless);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Snr::Db(v)),
        _ => Err(format!("invalid SNR `{s}` (a dB value or `noiseless`)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub f_shift: f64,
    pub sample_rate: f64,
    pub snr: Snr,
    pub payload: Payload,
    pub tag_model: TagModel,
    pub harmonic_order: u32,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Fps,
            f_shift: DEFAULT_F_SHIFT,
            sample_rate: DEFAULT_SAMPLE_RATE,
            snr: Snr::Noiseless,
            payload: Payload::Random { count: 8 },
            tag_model: TagModel::FirstHarmonic,
            harmonic_order: DEFAULT_HARMONIC_ORDER,
            seed: 0,
        }
    }
}

const KEYS: [&str; 8] = [
    "scheme",
    "f_shift",
    "sample_rate",
    "snr_db",
    "payload",
    "tag_model",
    "harmonic_order",
    "seed",
];

impl ExperimentConfig {
    /// Keys missing from `text` keep their default values.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = [false; KEYS.len()];
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: String| ConfigError::Syntax { line: line_no, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let k = KEYS
                .iter()
                .position(|&k| k == key)
                .ok_or_else(|| ConfigError::UnknownKey {
                    line: line_no,
                    key: key.into(),
                })?;
            if std::mem::replace(&mut seen[k], true) {
                return Err(ConfigError::DuplicateKey {
                    line: line_no,
                    key: key.into(),
                });
            }
            let num = |v: &str| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| syntax(format!("invalid number `{v}`")))
            };
            match key {
                "scheme" => cfg.scheme = scheme_from_str(value).map_err(syntax)?,
                "f_shift" => cfg.f_shift = num(value)?,
                "sample_rate" => cfg.sample_rate = num(value)?,
                "snr_db" => cfg.snr = snr_from_str(value).map_err(syntax)?,
                "payload" => cfg.payload = value.parse().map_err(syntax)?,
                "tag_model" => cfg.tag_model = tag_model_from_str(value).map_err(syntax)?,
                "harmonic_order" => {
                    cfg.harmonic_order = value.parse().map_err(|_| syntax(format!("invalid order `{value}`")))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| syntax(format!("invalid seed `{value}`")))?,
                _ => unreachable!(),
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "scheme = {}\nf_shift = {}\nsample_rate = {}\nsnr_db = {}\npayload = {}\ntag_model = {}\nharmonic_order = {}\nseed = {}\n",
            self.scheme.name(),
            self.f_shift,
            self.sample_rate,
            snr_to_string(self.snr),
            self.payload,
            tag_model_name(self.tag_model),
            self.harmonic_order,
            self.seed
        )
    }
}
