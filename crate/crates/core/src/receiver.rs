//! Commodity receiver model: differential chip demodulation, minimum
//! Hamming-distance despreading and the two-receiver tag decoder.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phy::{word_chips, ChipSequence, SpreadingTable, ZigbeeSymbol, CHIPS_PER_SYMBOL};
use crate::signal::{samples_per_chip, ComplexBaseband};

/// Where inside each chip the receiver takes its decision sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplePoint {
    /// End of the chip period. Half-sine O-QPSK pulse peaks and FPS slot
    /// boundaries sit here.
    ChipEnd,
    /// Middle of the following chip period, away from IPS phase jumps.
    MidChip,
}

/// Ideal chip clock: the simulator knows exactly where every chip lies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipTiming {
    pub point: SamplePoint,
    /// Phase standing in for the sample before chip 0.
    pub reference_phase: f64,
}

impl ChipTiming {
    /// FPS and codeword-free tag signals: chip-end sampling, reference 0.
    pub const CHIP_END: Self = Self {
        point: SamplePoint::ChipEnd,
        reference_phase: 0.0,
    };
    /// IPS: mid-chip sampling, reference 0.
    pub const MID_CHIP: Self = Self {
        point: SamplePoint::MidChip,
        reference_phase: 0.0,
    };
    /// Half-sine O-QPSK: chip 0 sits on the I axis and is reached from −π/2.
    pub const OQPSK: Self = Self {
        point: SamplePoint::ChipEnd,
        reference_phase: -FRAC_PI_2,
    };

    pub fn sample_index(&self, chip: usize, spc: usize) -> usize {
        match self.point {
            SamplePoint::ChipEnd => (chip + 1) * spc,
            SamplePoint::MidChip => (chip + 1) * spc + spc / 2,
        }
    }

    /// Number of chips whose decision sample lies inside `len` samples.
    pub fn chips_available(&self, len: usize, spc: usize) -> usize {
        let lead = self.sample_index(0, spc);
        if len <= lead {
            0
        } else {
            (len - 1 - lead) / spc + 1
        }
    }
}

/// Chip decision on one phase difference: `[0, π]` is chip 1, `(−π, 0)` chip 0.
pub fn chip_from_phase(delta: f64) -> bool {
    delta >= 0.0 || delta <= -PI
}

/// Despreader output plus demodulator diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodResult {
    pub chips: ChipSequence,
    pub chip_phases: Vec<f64>,
    pub symbols: Vec<ZigbeeSymbol>,
    pub hamming_distances: Vec<u32>,
}

impl DemodResult {
    /// Total chip disagreements with the chosen codewords.
    pub fn chip_errors(&self) -> u32 {
        self.hamming_distances.iter().sum()
    }
}

/// Samples `chip_count` chips and turns the sign of each phase step into a chip.
///
/// The first step is taken from `timing.reference_phase`. Returns the chips
/// and the per-chip phase differences.
pub fn demodulate_chips(
    signal: &ComplexBaseband,
    chip_count: usize,
    timing: ChipTiming,
) -> Result<(ChipSequence, Vec<f64>)> {
    let spc = samples_per_chip(signal.sample_rate())?;
    let available = timing.chips_available(signal.len(), spc);
    if chip_count > available {
        return Err(Error::SignalTooShort {
            requested: chip_count,
            available,
        });
    }
    let s = signal.samples();
    let mut prev = Complex64::from_polar(1.0, timing.reference_phase);
    let mut chips = Vec::with_capacity(chip_count);
    let mut phases = Vec::with_capacity(chip_count);
    for n in 0..chip_count {
        let cur = s[timing.sample_index(n, spc)];
        let delta = (cur * prev.conj()).arg();
        chips.push(chip_from_phase(delta));
        phases.push(delta);
        prev = cur;
    }
    Ok((ChipSequence::new(chips), phases))
}

/// Maps each 32-chip block to the nearest codeword. Ties go to the lower symbol.
pub fn despread(chips: &ChipSequence, table: &SpreadingTable) -> Result<DemodResult> {
    if !chips.len().is_multiple_of(CHIPS_PER_SYMBOL) {
        return Err(Error::NotWholeSymbols(chips.len()));
    }
    let mut symbols = Vec::with_capacity(chips.len() / CHIPS_PER_SYMBOL);
    let mut distances = Vec::with_capacity(symbols.capacity());
    for block in chips.chips().chunks(CHIPS_PER_SYMBOL) {
        let word = block.iter().fold(0u32, |w, &c| (w << 1) | c as u32);
        let (best, dist) = table
            .codewords()
            .iter()
            .enumerate()
            .map(|(i, cw)| (i, (cw ^ word).count_ones()))
            .fold((0, u32::MAX), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        symbols.push(ZigbeeSymbol::new(best as u8)?);
        distances.push(dist);
    }
    Ok(DemodResult {
        chips: chips.clone(),
        chip_phases: Vec::new(),
        symbols,
        hamming_distances: distances,
    })
}

/// Full receive chain on a retuned, filtered signal.
///
/// `table` is the transmit chip table; despreading runs against its
/// phase-domain image because the demodulator reports phase directions. All whole
/// symbols present in the signal are decoded.
pub fn decode_zigbee(signal: &ComplexBaseband, table: &SpreadingTable, timing: ChipTiming) -> Result<DemodResult> {
    let spc = samples_per_chip(signal.sample_rate())?;
    let chip_count = timing.chips_available(signal.len(), spc) / CHIPS_PER_SYMBOL * CHIPS_PER_SYMBOL;
    decode_chips(signal, chip_count, table, timing)
}

/// [`decode_zigbee`] with an explicit chip count.
pub fn decode_chips(
    signal: &ComplexBaseband,
    chip_count: usize,
    table: &SpreadingTable,
    timing: ChipTiming,
) -> Result<DemodResult> {
    let (chips, phases) = demodulate_chips(signal, chip_count, timing)?;
    let mut result = despread(&chips, &table.phase_domain())?;
    result.chip_phases = phases;
    Ok(result)
}

/// Phase-direction chips a receiver should see for `symbols`.
pub fn expected_phase_chips(symbols: &[ZigbeeSymbol], table: &SpreadingTable) -> ChipSequence {
    let image = table.phase_domain();
    ChipSequence::new(symbols.iter().flat_map(|&s| word_chips(image.codeword(s))).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagDecodeResult {
    pub tag_bits: Vec<bool>,
    /// Chips that disagree with their group's majority.
    pub chip_error_count: usize,
}

/// Two-receiver decoder: a reversed chip means the tag sent 1.
///
/// Per-chip XOR of the carrier and backscatter chip streams, then a majority
/// vote over each group of `bits_per_chip_group` chips (ties decode as 0).
pub fn decode_tag_by_comparison(
    carrier_decode: &DemodResult,
    backscatter_decode: &DemodResult,
    bits_per_chip_group: usize,
) -> Result<TagDecodeResult> {
    let a = carrier_decode.chips.chips();
    let b = backscatter_decode.chips.chips();
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if bits_per_chip_group == 0 || !a.len().is_multiple_of(bits_per_chip_group) {
        return Err(Error::TagLengthMismatch {
            tag_bits: bits_per_chip_group,
            chips: a.len(),
        });
    }
    let flips: Vec<bool> = a.iter().zip(b).map(|(x, y)| x ^ y).collect();
    let mut tag_bits = Vec::with_capacity(flips.len() / bits_per_chip_group);
    let mut chip_error_count = 0;
    for group in flips.chunks(bits_per_chip_group) {
        let ones = group.iter().filter(|&&f| f).count();
        let bit = 2 * ones > group.len();
        chip_error_count += if bit { group.len() - ones } else { ones };
        tag_bits.push(bit);
    }
    Ok(TagDecodeResult {
        tag_bits,
        chip_error_count,
    })
}
