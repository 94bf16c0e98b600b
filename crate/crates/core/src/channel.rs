//! Backscatter signal model, AWGN and the receiver channel filter.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::phy;
use crate::signal::{check_rate, ComplexBaseband};

/// Channel 12 to channel 14.
pub const DEFAULT_CHANNEL_OFFSET: f64 = 10.0e6;
pub const DEFAULT_FILTER_CUTOFF: f64 = 1.5e6;
pub const DEFAULT_FILTER_TAPS: usize = 129;

/// `C(t) = A_c e^{j(2π f_c t + φ_c)}`, with `f_c` relative to the labeled channel center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierModel {
    pub amplitude: f64,
    pub freq_offset: f64,
    pub phase: f64,
}

impl CarrierModel {
    pub fn new(amplitude: f64, freq_offset: f64, phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidParams("carrier amplitude must be positive"));
        }
        Ok(Self {
            amplitude,
            freq_offset,
            phase,
        })
    }

    pub fn render(&self, len: usize, sample_rate: f64) -> Result<ComplexBaseband> {
        check_rate(sample_rate)?;
        if len == 0 {
            return Err(Error::EmptySignal);
        }
        let tone = phy::tone(self.freq_offset, self.phase, len, sample_rate);
        Ok(scale(&tone, self.amplitude))
    }
}

fn scale(signal: &ComplexBaseband, k: f64) -> ComplexBaseband {
    let samples = signal.samples().iter().map(|s| s * k).collect();
    ComplexBaseband::from_parts(samples, signal.sample_rate(), signal.center_freq_label)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Noiseless,
    Db(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr: Snr,
    /// One-sided low-pass cutoff.
    pub filter_cutoff: f64,
    pub filter_taps: usize,
    /// Carrier channel center to receiver channel center.
    pub channel_offset: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr: Snr::Noiseless,
            filter_cutoff: DEFAULT_FILTER_CUTOFF,
            filter_taps: DEFAULT_FILTER_TAPS,
            channel_offset: DEFAULT_CHANNEL_OFFSET,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.filter_cutoff.is_finite() && self.filter_cutoff > 0.0) {
            return Err(Error::InvalidChannel("filter cutoff must be positive"));
        }
        if self.filter_taps < 31 || self.filter_taps.is_multiple_of(2) {
            return Err(Error::InvalidChannel("filter taps must be odd and at least 31"));
        }
        if let Snr::Db(db) = self.snr {
            if !db.is_finite() {
                return Err(Error::InvalidChannel("snr must be finite"));
            }
        }
        Ok(())
    }
}

/// `B(t) = T(t) C(t)`, sample by sample.
pub fn backscatter_mix(carrier: &ComplexBaseband, tag_wave: &ComplexBaseband) -> Result<ComplexBaseband> {
    if carrier.sample_rate() != tag_wave.sample_rate() {
        return Err(Error::RateMismatch(carrier.sample_rate(), tag_wave.sample_rate()));
    }
    if carrier.len() != tag_wave.len() {
        return Err(Error::LengthMismatch(carrier.len(), tag_wave.len()));
    }
    let samples = carrier
        .samples()
        .iter()
        .zip(tag_wave.samples())
        .map(|(c, t)| c * t)
        .collect();
    Ok(ComplexBaseband::from_parts(
        samples,
        carrier.sample_rate(),
        carrier.center_freq_label,
    ))
}

/// A circularly symmetric complex Gaussian realization with per-sample
/// variance `variance`, reproducible from `seed`.
pub fn awgn_noise(len: usize, variance: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = libm::sqrt(variance / 2.0);
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

/// Noise variance giving `snr_db` against the signal's mean power.
pub fn noise_variance(signal: &ComplexBaseband, snr_db: f64) -> f64 {
    signal.mean_power() / libm::pow(10.0, snr_db / 10.0)
}

pub fn add_awgn(signal: &ComplexBaseband, snr: Snr, seed: u64) -> ComplexBaseband {
    match snr {
        Snr::Noiseless => signal.clone(),
        Snr::Db(db) => {
            let noise = awgn_noise(signal.len(), noise_variance(signal, db), seed);
            let samples = signal.samples().iter().zip(&noise).map(|(s, n)| s + n).collect();
            ComplexBaseband::from_parts(samples, signal.sample_rate(), signal.center_freq_label)
        }
    }
}

/// Hamming-windowed sinc low-pass with unit DC gain.
pub fn design_lowpass(cutoff: f64, sample_rate: f64, taps: usize) -> Vec<f64> {
    let fc = cutoff / sample_rate;
    let mid = (taps / 2) as f64;
    let denom = (taps - 1) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                libm::sin(TAU * fc * x) / (PI * x)
            };
            let window = 0.54 - 0.46 * libm::cos(TAU * i as f64 / denom);
            sinc * window
        })
        .collect();
    let gain: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= gain);
    h
}

/// Retunes by `-retune_offset` and low-pass filters.
///
/// The FIR output is re-centred on its group delay, so sample `k` of the
/// output lines up with sample `k` of the input. Samples beyond either end
/// are taken as zero.
pub fn channel_filter(signal: &ComplexBaseband, config: &ChannelConfig, retune_offset: f64) -> Result<ComplexBaseband> {
    config.validate()?;
    let nyquist = signal.sample_rate() / 2.0;
    let reach = retune_offset.abs() + config.filter_cutoff;
    if reach >= nyquist {
        return Err(Error::AboveNyquist(reach, nyquist));
    }
    let shifted = signal.frequency_shift(-retune_offset);
    let h = design_lowpass(config.filter_cutoff, signal.sample_rate(), config.filter_taps);
    let x = shifted.samples();
    let half = h.len() / 2;
    let n = x.len();
    let samples = (0..n)
        .map(|k| {
            let lo = (k + half).saturating_sub(n - 1);
            let hi = (k + half).min(h.len() - 1);
            (lo..=hi).map(|i| x[k + half - i] * h[i]).sum()
        })
        .collect();
    Ok(ComplexBaseband::from_parts(
        samples,
        signal.sample_rate(),
        signal.center_freq_label,
    ))
}
