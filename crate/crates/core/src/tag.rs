//! The backscatter tag: square-wave banks, switching schedules and the
//! rendered tag waveform.
//!
//! A tag shifts the reflected carrier by toggling between square waves. The
//! complex single-sideband series `Σ_n (1/n) e^{j(2π n f t + φ)}` over odd `n`
//! stands in for each wave; only the `n = 1` term survives the receiver's
//! channel filter, so [`TagModel::FirstHarmonic`] is the working model and
//! [`TagModel::TruncatedSeries`] exists to show the harmonic skirt.
//!
//! Schedules hold one slot per chip followed by a single settle slot. The
//! phase change carried by chip `n` is complete at the end of slot `n`, so the
//! settle slot gives a receiver something to sample after the last chip.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phy::ChipSequence;
use crate::signal::{check_rate, ComplexBaseband, CHANNEL_12_HZ, CHIP_DURATION};

pub const DEFAULT_F_SHIFT: f64 = 10.0e6;
pub const DEFAULT_HARMONIC_ORDER: u32 = 5;

/// Modulation scheme a schedule implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Instantaneous phase shift: four phases of one frequency.
    Ips,
    /// Frequency-phase shift: two frequencies by four phases.
    Fps,
    /// Frequency-phase shift codeword translation: two frequencies by two phases.
    FpsCt,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ips => "ips",
            Scheme::Fps => "fps",
            Scheme::FpsCt => "fps_ct",
        }
    }
}

/// Which part of the square-wave series to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagModel {
    FirstHarmonic,
    TruncatedSeries,
}

/// One tag square wave.
///
/// The initial phase is kept as a count of quarter turns so that bank
/// membership and continuity are exact integer comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWaveSpec {
    frequency: f64,
    quarter_turns: u8,
    harmonic_order: u32,
}

impl SquareWaveSpec {
    pub fn new(frequency: f64, quarter_turns: u8, harmonic_order: u32) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::InvalidParams("square-wave frequency must be positive"));
        }
        if harmonic_order.is_multiple_of(2) {
            return Err(Error::EvenHarmonicOrder(harmonic_order));
        }
        Ok(Self {
            frequency,
            quarter_turns: quarter_turns % 4,
            harmonic_order,
        })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Initial phase in radians, one of 0, π/2, π, 3π/2.
    pub fn initial_phase(&self) -> f64 {
        self.quarter_turns as f64 * FRAC_PI_2
    }

    pub fn quarter_turns(&self) -> u8 {
        self.quarter_turns
    }

    pub fn harmonic_order(&self) -> u32 {
        self.harmonic_order
    }

    fn same_wave(&self, other: &Self) -> bool {
        self.frequency == other.frequency && self.quarter_turns == other.quarter_turns
    }
}

/// `f_FP = Δφ / (2π ΔT)`: the extra frequency that accumulates `delta_phi`
/// over `delta_t`.
pub fn derive_f_fp(delta_phi: f64, delta_t: f64) -> Result<f64> {
    if !(delta_t.is_finite() && delta_t > 0.0) {
        return Err(Error::InvalidTransitionTime(delta_t));
    }
    Ok(delta_phi / TAU / delta_t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub f_shift: f64,
    pub f_fp: f64,
    pub delta_t: f64,
    pub delta_phi: f64,
}

impl SchemeParams {
    pub fn new(f_shift: f64, delta_phi: f64, delta_t: f64) -> Result<Self> {
        let f_fp = derive_f_fp(delta_phi, delta_t)?;
        if !(f_fp > 0.0 && f_shift.is_finite() && f_shift > f_fp) {
            return Err(Error::InvalidParams("need f_shift > f_fp > 0"));
        }
        Ok(Self {
            f_shift,
            f_fp,
            delta_t,
            delta_phi,
        })
    }

    /// ±π/2 per chip, the FPS setting (`f_FP` = 500 kHz).
    pub fn fps(f_shift: f64) -> Result<Self> {
        Self::new(f_shift, FRAC_PI_2, CHIP_DURATION)
    }

    /// +π per chip, the codeword-translation setting (`f_FP` = 1 MHz).
    pub fn ct(f_shift: f64) -> Result<Self> {
        Self::new(f_shift, PI, CHIP_DURATION)
    }
}

fn bank_of(freqs: &[f64], quarters: &[u8]) -> Result<Vec<SquareWaveSpec>> {
    let mut bank = Vec::with_capacity(freqs.len() * quarters.len());
    for &f in freqs {
        for &q in quarters {
            bank.push(SquareWaveSpec::new(f, q, DEFAULT_HARMONIC_ORDER)?);
        }
    }
    Ok(bank)
}

/// Four waves at `f_shift` with phases 0, π/2, π, 3π/2.
pub fn build_ips_bank(f_shift: f64) -> Result<Vec<SquareWaveSpec>> {
    bank_of(&[f_shift], &[0, 1, 2, 3])
}

/// Eight waves: `f_shift ± f_fp` by the four quadrant phases.
pub fn build_fps_bank(params: &SchemeParams) -> Result<Vec<SquareWaveSpec>> {
    bank_of(
        &[params.f_shift + params.f_fp, params.f_shift - params.f_fp],
        &[0, 1, 2, 3],
    )
}

/// Four waves: `f_shift + f_fp` and `f_shift`, phases 0 and π.
pub fn build_ct_bank(params: &SchemeParams) -> Result<Vec<SquareWaveSpec>> {
    if (params.delta_phi - PI).abs() > 1e-12 {
        return Err(Error::NotBitReversal(params.delta_phi));
    }
    bank_of(&[params.f_shift + params.f_fp, params.f_shift], &[0, 2])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub wave: SquareWaveSpec,
    pub duration: f64,
}

/// Per-slot switching plan of the tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSchedule {
    scheme: Scheme,
    slots: Vec<Slot>,
}

impl TagSchedule {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// All slots, including the trailing settle slot.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Slots that carry data (everything but the settle slot).
    pub fn data_slots(&self) -> &[Slot] {
        &self.slots[..self.slots.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.slots.iter().map(|s| s.duration).sum()
    }

    pub fn with_harmonic_order(mut self, order: u32) -> Result<Self> {
        if order.is_multiple_of(2) {
            return Err(Error::EvenHarmonicOrder(order));
        }
        for slot in &mut self.slots {
            slot.wave.harmonic_order = order;
        }
        Ok(self)
    }

    /// Checks every slot references a member of `bank`.
    pub fn uses_only(&self, bank: &[SquareWaveSpec]) -> bool {
        self.slots.iter().all(|s| bank.iter().any(|b| b.same_wave(&s.wave)))
    }
}

/// Quarter turns a wave of `freq` advances over `duration`, if that is whole.
fn quarter_advance(freq: f64, duration: f64) -> Result<u8> {
    let turns = 4.0 * freq * duration;
    let whole = libm::round(turns);
    if (turns - whole).abs() > 1e-6 {
        let phase = libm::fmod(TAU * freq * duration, TAU);
        return Err(Error::OffGrid(phase));
    }
    Ok(libm::fmod(whole, 4.0) as u8)
}

fn slot(freq: f64, quarters: u8, duration: f64) -> Result<Slot> {
    Ok(Slot {
        wave: SquareWaveSpec::new(freq, quarters, DEFAULT_HARMONIC_ORDER)?,
        duration,
    })
}

/// IPS switching plan starting at phase 0.
pub fn compile_ips_schedule(tag_chips: &ChipSequence, params: &SchemeParams) -> Result<TagSchedule> {
    compile_ips_schedule_from(tag_chips, params, 0)
}

/// IPS plan starting at `start_quarters` × π/2.
///
/// Slot `n` holds the cumulative phase before chip `n`; chip 1 adds +π/2 and
/// chip 0 adds −π/2 as an instantaneous jump at the end of the slot. Wave
/// phases are referenced to the schedule epoch, not to the slot start.
pub fn compile_ips_schedule_from(
    tag_chips: &ChipSequence,
    params: &SchemeParams,
    start_quarters: u8,
) -> Result<TagSchedule> {
    if tag_chips.is_empty() {
        return Err(Error::EmptyChips);
    }
    let dt = params.delta_t;
    let mut q = start_quarters % 4;
    let mut slots = Vec::with_capacity(tag_chips.len() + 1);
    for &chip in tag_chips.chips() {
        slots.push(slot(params.f_shift, q, dt)?);
        q = if chip { (q + 1) % 4 } else { (q + 3) % 4 };
    }
    slots.push(slot(params.f_shift, q, dt)?);
    Ok(TagSchedule {
        scheme: Scheme::Ips,
        slots,
    })
}

/// FPS switching plan starting at phase 0.
pub fn compile_fps_schedule(tag_chips: &ChipSequence, params: &SchemeParams) -> Result<TagSchedule> {
    compile_fps_schedule_from(tag_chips, params, 0)
}

/// FPS plan starting at `start_quarters` × π/2.
///
/// Chip 1 selects `f_shift + f_fp`, chip 0 selects `f_shift − f_fp`. Each
/// slot's initial phase is the previous slot's terminal phase, so the rendered
/// phase never jumps. The settle slot repeats the `+f_fp` frequency.
pub fn compile_fps_schedule_from(
    tag_chips: &ChipSequence,
    params: &SchemeParams,
    start_quarters: u8,
) -> Result<TagSchedule> {
    if tag_chips.is_empty() {
        return Err(Error::EmptyChips);
    }
    let dt = params.delta_t;
    let up = params.f_shift + params.f_fp;
    let down = params.f_shift - params.f_fp;
    let up_step = quarter_advance(up, dt)?;
    let down_step = quarter_advance(down, dt)?;
    if up_step != 1 || down_step != 3 {
        return Err(Error::OffGrid(libm::fmod(TAU * up * dt, TAU)));
    }
    let mut q = start_quarters % 4;
    let mut slots = Vec::with_capacity(tag_chips.len() + 1);
    for &chip in tag_chips.chips() {
        let (f, step) = if chip { (up, up_step) } else { (down, down_step) };
        slots.push(slot(f, q, dt)?);
        q = (q + step) % 4;
    }
    slots.push(slot(up, q, dt)?);
    Ok(TagSchedule {
        scheme: Scheme::Fps,
        slots,
    })
}

/// Codeword-translation plan.
///
/// Each tag bit covers `carrier_chip_count / tag_bits.len()` carrier chips.
/// During a 1 the tag selects `f_shift + f_fp`, adding π per chip and so
/// reversing the chip the receiver sees; during a 0 it selects `f_shift`,
/// which leaves the carrier phase alone.
pub fn compile_ct_schedule(tag_bits: &[bool], carrier_chip_count: usize, params: &SchemeParams) -> Result<TagSchedule> {
    if (params.delta_phi - PI).abs() > 1e-12 {
        return Err(Error::NotBitReversal(params.delta_phi));
    }
    if tag_bits.is_empty() || carrier_chip_count == 0 || !carrier_chip_count.is_multiple_of(tag_bits.len()) {
        return Err(Error::TagLengthMismatch {
            tag_bits: tag_bits.len(),
            chips: carrier_chip_count,
        });
    }
    let per_bit = carrier_chip_count / tag_bits.len();
    let dt = params.delta_t;
    let flip = params.f_shift + params.f_fp;
    let keep = params.f_shift;
    let flip_step = quarter_advance(flip, dt)?;
    let keep_step = quarter_advance(keep, dt)?;
    if flip_step != 2 || keep_step != 0 {
        return Err(Error::OffGrid(libm::fmod(TAU * flip * dt, TAU)));
    }
    let mut q = 0u8;
    let mut slots = Vec::with_capacity(carrier_chip_count + 1);
    for n in 0..carrier_chip_count {
        let (f, step) = if tag_bits[n / per_bit] {
            (flip, flip_step)
        } else {
            (keep, keep_step)
        };
        slots.push(slot(f, q, dt)?);
        q = (q + step) % 4;
    }
    slots.push(slot(keep, q, dt)?);
    Ok(TagSchedule {
        scheme: Scheme::FpsCt,
        slots,
    })
}

/// Renders `T(t)` for a schedule.
///
/// The highest emitted frequency (`harmonic_order × f` in truncated-series
/// mode) must sit below Nyquist, and every slot must span a whole number of
/// samples.
pub fn render_tag_waveform(schedule: &TagSchedule, sample_rate: f64, model: TagModel) -> Result<ComplexBaseband> {
    check_rate(sample_rate)?;
    for s in &schedule.slots {
        let order = match model {
            TagModel::FirstHarmonic => 1,
            TagModel::TruncatedSeries => s.wave.harmonic_order,
        };
        let required = 2.0 * order as f64 * s.wave.frequency;
        if sample_rate <= required {
            return Err(Error::Aliasing {
                sample_rate,
                required,
                freq: s.wave.frequency,
                order,
            });
        }
    }
    let global_epoch = schedule.scheme == Scheme::Ips;
    let mut samples = Vec::new();
    let mut start = 0usize;
    for s in &schedule.slots {
        let exact = s.duration * sample_rate;
        let count = libm::round(exact);
        if count < 1.0 || (exact - count).abs() > 1e-6 {
            return Err(Error::SlotDuration(s.duration));
        }
        let count = count as usize;
        let top = match model {
            TagModel::FirstHarmonic => 1,
            TagModel::TruncatedSeries => s.wave.harmonic_order,
        };
        let phi = s.wave.initial_phase();
        for k in 0..count {
            let idx = if global_epoch { start + k } else { k };
            let t = idx as f64 / sample_rate;
            let v: Complex64 = (1..=top)
                .step_by(2)
                .map(|n| Complex64::from_polar(1.0 / n as f64, TAU * n as f64 * s.wave.frequency * t + phi))
                .sum();
            samples.push(v);
        }
        start += count;
    }
    Ok(ComplexBaseband::from_parts(samples, sample_rate, CHANNEL_12_HZ))
}

/// Phase discontinuity at every slot boundary of a first-harmonic rendering.
///
/// Compares the first sample of each slot with the previous slot's wave
/// extrapolated by one sample, so the continuous frequency progression
/// cancels and only the switching jump remains. Results are wrapped to (−π, π].
pub fn boundary_phase_jumps(signal: &ComplexBaseband, schedule: &TagSchedule) -> Vec<f64> {
    let fs = signal.sample_rate();
    let s = signal.samples();
    let mut jumps = Vec::new();
    let mut idx = 0usize;
    for pair in schedule.slots.windows(2) {
        idx += libm::round(pair[0].duration * fs) as usize;
        if idx == 0 || idx >= s.len() {
            break;
        }
        let predicted = s[idx - 1] * Complex64::from_polar(1.0, TAU * pair[0].wave.frequency / fs);
        jumps.push((s[idx] * predicted.conj()).arg());
    }
    jumps
}
