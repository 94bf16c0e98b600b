//! IEEE 802.15.4 2.4 GHz baseband: DSSS spreading, half-sine O-QPSK and the
//! spreading-factor-1 single tone.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{samples_per_chip, ComplexBaseband, CHIP_DURATION};

/// Chips in one DSSS codeword.
pub const CHIPS_PER_SYMBOL: usize = 32;
/// Frequency deviation of the spreading-factor-1 single tone.
pub const SINGLE_TONE_OFFSET: f64 = 500.0e3;

const IEEE_TABLE_TEXT: &str = include_str!("../data/ieee802154_chips.txt");

/// A 4-bit data symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZigbeeSymbol(u8);

impl ZigbeeSymbol {
    pub fn new(value: u8) -> Result<Self> {
        if value < 16 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidSymbol(value.into()))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for ZigbeeSymbol {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

/// Splits bytes into symbols, low nibble first (b0 is the LSB of each group).
pub fn symbols_from_bytes(bytes: &[u8]) -> Vec<ZigbeeSymbol> {
    bytes
        .iter()
        .flat_map(|b| [ZigbeeSymbol(b & 0x0f), ZigbeeSymbol(b >> 4)])
        .collect()
}

/// Inverse of [`symbols_from_bytes`]; an odd trailing symbol fills a low nibble.
pub fn bytes_from_symbols(symbols: &[ZigbeeSymbol]) -> Vec<u8> {
    symbols
        .chunks(2)
        .map(|p| p[0].0 | p.get(1).map_or(0, |s| s.0 << 4))
        .collect()
}

/// A run of binary chips together with the chip period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipSequence {
    chips: Vec<bool>,
    chip_duration: f64,
}

impl ChipSequence {
    pub fn new(chips: Vec<bool>) -> Self {
        Self {
            chips,
            chip_duration: CHIP_DURATION,
        }
    }

    pub fn with_duration(chips: Vec<bool>, chip_duration: f64) -> Result<Self> {
        if !(chip_duration.is_finite() && chip_duration > 0.0) {
            return Err(Error::InvalidChipDuration(chip_duration));
        }
        Ok(Self { chips, chip_duration })
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let chips = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidChip(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(chips))
    }

    pub fn chips(&self) -> &[bool] {
        &self.chips
    }

    pub fn chip_duration(&self) -> f64 {
        self.chip_duration
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn to_bit_string(&self) -> String {
        self.chips.iter().map(|&c| if c { '1' } else { '0' }).collect()
    }
}

/// The 16-entry symbol-to-codeword map.
///
/// Codewords are packed into `u32` with chip 0 in the most significant bit so
/// that Hamming distance is a single `count_ones`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpreadingTable {
    codewords: [u32; 16],
}

impl SpreadingTable {
    /// The IEEE 802.15.4-2006 2.4 GHz symbol-to-chip table.
    pub fn ieee802154() -> Self {
        Self::parse(IEEE_TABLE_TEXT).expect("embedded chip table is well formed")
    }

    pub fn from_codewords(codewords: [u32; 16]) -> Self {
        Self { codewords }
    }

    /// Parses the text table format: 16 lines of `index <32 chip characters>`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut codewords = [0u32; 16];
        let mut seen = [false; 16];
        let mut rows = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let mut fields = line.split_whitespace();
            let (Some(idx), Some(bits), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::TableFormat {
                    line: lineno,
                    reason: "expected `index chips`",
                });
            };
            let idx: usize = idx.parse().ok().filter(|&v| v < 16).ok_or(Error::TableFormat {
                line: lineno,
                reason: "index must be 0..=15",
            })?;
            if seen[idx] {
                return Err(Error::TableFormat {
                    line: lineno,
                    reason: "duplicate index",
                });
            }
            if bits.len() != CHIPS_PER_SYMBOL {
                return Err(Error::TableFormat {
                    line: lineno,
                    reason: "codeword must have 32 chips",
                });
            }
            let mut word = 0u32;
            for c in bits.chars() {
                word = (word << 1)
                    | match c {
                        '0' => 0,
                        '1' => 1,
                        _ => {
                            return Err(Error::TableFormat {
                                line: lineno,
                                reason: "chips must be 0 or 1",
                            })
                        }
                    };
            }
            codewords[idx] = word;
            seen[idx] = true;
            rows += 1;
        }
        if rows != 16 {
            return Err(Error::TableFormat {
                line: 0,
                reason: "table needs exactly 16 rows",
            });
        }
        Ok(Self { codewords })
    }

    /// Renders the table in the format accepted by [`SpreadingTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.codewords.iter().enumerate() {
            let _ = writeln!(out, "{i} {w:032b}");
        }
        out
    }

    pub fn codeword(&self, symbol: ZigbeeSymbol) -> u32 {
        self.codewords[symbol.0 as usize]
    }

    pub fn codewords(&self) -> &[u32; 16] {
        &self.codewords
    }

    /// Smallest Hamming distance between two distinct codewords.
    pub fn min_distance(&self) -> u32 {
        let mut best = u32::MAX;
        for i in 0..16 {
            for j in i + 1..16 {
                best = best.min((self.codewords[i] ^ self.codewords[j]).count_ones());
            }
        }
        best
    }

    /// The table as a differential phase receiver sees it.
    ///
    /// Half-sine O-QPSK moves the phase by +π/2 or −π/2 per chip, and a
    /// differential receiver reports the direction of that move rather than
    /// the transmitted chip. Chip n of the image is `c[n] ^ c[n-1]` for even
    /// n and its complement for odd n, with `c[-1] = 0`. Inside a stream only
    /// chip 0 of each codeword depends on the previous codeword's last chip.
    pub fn phase_domain(&self) -> Self {
        let mut codewords = [0u32; 16];
        for (out, &word) in codewords.iter_mut().zip(&self.codewords) {
            *out = phase_image(word);
        }
        Self { codewords }
    }
}

fn phase_image(word: u32) -> u32 {
    let mut prev = false;
    let mut image = 0u32;
    for n in 0..CHIPS_PER_SYMBOL {
        let chip = (word >> (31 - n)) & 1 == 1;
        let dir = if n % 2 == 0 { chip ^ prev } else { !(chip ^ prev) };
        image = (image << 1) | dir as u32;
        prev = chip;
    }
    image
}

pub(crate) fn word_chips(word: u32) -> impl Iterator<Item = bool> {
    (0..CHIPS_PER_SYMBOL).map(move |n| (word >> (31 - n)) & 1 == 1)
}

/// Concatenates the codewords of `symbols`.
pub fn spread(symbols: &[ZigbeeSymbol], table: &SpreadingTable) -> ChipSequence {
    ChipSequence::new(symbols.iter().flat_map(|&s| word_chips(table.codeword(s))).collect())
}

/// Half-sine O-QPSK.
///
/// Even chips drive I, odd chips drive Q one chip period later; each pulse is
/// `sin(π t / 2Tc)` over two chip periods with amplitude ±1. The output spans
/// `(chips + 1)` chip periods so the last offset pulse finishes. Between the
/// first and last pulse peaks the envelope is exactly 1 and the phase moves
/// linearly by ±π/2 per chip.
pub fn oqpsk_modulate(chips: &ChipSequence, sample_rate: f64) -> Result<ComplexBaseband> {
    if chips.is_empty() {
        return Err(Error::EmptyChips);
    }
    let spc = samples_per_chip(sample_rate)?;
    let mut samples = alloc::vec![Complex64::new(0.0, 0.0); (chips.len() + 1) * spc];
    let pulse: Vec<f64> = (0..2 * spc)
        .map(|k| libm::sin(PI * k as f64 / (2 * spc) as f64))
        .collect();
    for (n, &chip) in chips.chips().iter().enumerate() {
        let amp = if chip { 1.0 } else { -1.0 };
        let start = n * spc;
        for (k, p) in pulse.iter().enumerate() {
            if let Some(s) = samples.get_mut(start + k) {
                if n % 2 == 0 {
                    s.re += amp * p;
                } else {
                    s.im += amp * p;
                }
            }
        }
    }
    ComplexBaseband::new(samples, sample_rate)
}

/// Spreading-factor-1 single tone: a constant PSDU of `0`s sits 500 kHz below
/// the channel center, a PSDU of `1`s 500 kHz above.
pub fn gen_single_tone(psdu_bit: bool, duration: f64, sample_rate: f64) -> Result<ComplexBaseband> {
    let min = 4.0e-6;
    if duration.is_nan() || duration < min {
        return Err(Error::DurationTooShort { duration, min });
    }
    crate::signal::check_rate(sample_rate)?;
    let freq = if psdu_bit {
        SINGLE_TONE_OFFSET
    } else {
        -SINGLE_TONE_OFFSET
    };
    let len = libm::round(duration * sample_rate) as usize;
    Ok(tone(freq, 0.0, len, sample_rate))
}

pub(crate) fn tone(freq: f64, phase: f64, len: usize, sample_rate: f64) -> ComplexBaseband {
    let samples = (0..len)
        .map(|n| Complex64::from_polar(1.0, 2.0 * PI * freq * n as f64 / sample_rate + phase))
        .collect();
    ComplexBaseband::from_parts(samples, sample_rate, crate::signal::CHANNEL_12_HZ)
}
