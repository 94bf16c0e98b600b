use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample rate {0} Hz must be positive and finite")]
    InvalidSampleRate(f64),
    #[error("sample rate {sample_rate} Hz is not an integer multiple of {rate} Hz")]
    RateNotMultiple { sample_rate: f64, rate: f64 },
    #[error("signal must contain at least one sample")]
    EmptySignal,
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("symbol value {0} is outside 0..=15")]
    InvalidSymbol(u32),
    #[error("invalid chip character {0:?}")]
    InvalidChip(char),
    #[error("chip sequence must not be empty")]
    EmptyChips,
    #[error("chip duration {0} s must be positive")]
    InvalidChipDuration(f64),
    #[error("spreading table line {line}: {reason}")]
    TableFormat { line: usize, reason: &'static str },
    #[error("duration {duration} s is shorter than the minimum {min} s")]
    DurationTooShort { duration: f64, min: f64 },
    #[error("transition time {0} s must be positive")]
    InvalidTransitionTime(f64),
    #[error("invalid scheme parameters: {0}")]
    InvalidParams(&'static str),
    #[error("codeword translation needs a phase step of pi, got {0} rad")]
    NotBitReversal(f64),
    #[error("phase {0} rad does not land on the wave bank's phase grid")]
    OffGrid(f64),
    #[error("{tag_bits} tag bits do not evenly divide {chips} carrier chips")]
    TagLengthMismatch { tag_bits: usize, chips: usize },
    #[error("sample rate {sample_rate} Hz is below {required} Hz required to render harmonic {order} of {freq} Hz")]
    Aliasing {
        sample_rate: f64,
        required: f64,
        freq: f64,
        order: u32,
    },
    #[error("slot duration {0} s is not a positive whole number of samples and chips")]
    SlotDuration(f64),
    #[error("harmonic order {0} must be odd")]
    EvenHarmonicOrder(u32),
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid channel configuration: {0}")]
    InvalidChannel(&'static str),
    #[error("retune offset plus cutoff ({0} Hz) exceeds Nyquist ({1} Hz)")]
    AboveNyquist(f64, f64),
    #[error("signal has {available} chips, {requested} requested")]
    SignalTooShort { requested: usize, available: usize },
    #[error("chip count {0} is not a multiple of 32")]
    NotWholeSymbols(usize),
    #[error("segment length {0} must be a power of two of at least 64")]
    InvalidSegment(usize),
    #[error("overlap {0} must lie in [0, 0.9]")]
    InvalidOverlap(f64),
    #[error("signal of {len} samples is shorter than one {segment}-sample segment")]
    TooShortForSegment { len: usize, segment: usize },
    #[error("energy fraction {0} must lie in (0, 1)")]
    InvalidFraction(f64),
    #[error("spectrum has no power")]
    ZeroPower,
    #[error("payload is empty")]
    EmptyPayload,
}
