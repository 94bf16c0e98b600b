//! The sampled complex-baseband signal shared by every stage.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// IEEE 802.15.4 2.4 GHz chip rate.
pub const CHIP_RATE: f64 = 2.0e6;
/// One chip period, 0.5 µs.
pub const CHIP_DURATION: f64 = 1.0 / CHIP_RATE;
/// Default complex sample rate. Leaves room for a 10 MHz tag shift.
pub const DEFAULT_SAMPLE_RATE: f64 = 64.0e6;
/// Carrier channel 12 center, used only as a label.
pub const CHANNEL_12_HZ: f64 = 2.410e9;

/// Uniformly sampled complex baseband.
///
/// `center_freq_label` records which RF channel center the zero frequency
/// stands for. Nothing in the processing chain reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBaseband {
    samples: Vec<Complex64>,
    sample_rate: f64,
    pub center_freq_label: f64,
}

impl ComplexBaseband {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self {
            samples,
            sample_rate,
            center_freq_label: CHANNEL_12_HZ,
        })
    }

    pub fn with_label(mut self, center_freq_label: f64) -> Self {
        self.center_freq_label = center_freq_label;
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean of |x|² over all samples.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Multiplies by `e^{j2π f t}`, moving every component up by `freq` Hz.
    pub fn frequency_shift(&self, freq: f64) -> Self {
        let step = 2.0 * core::f64::consts::PI * freq / self.sample_rate;
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(n, s)| s * Complex64::from_polar(1.0, step * n as f64))
            .collect();
        Self {
            samples,
            sample_rate: self.sample_rate,
            center_freq_label: self.center_freq_label,
        }
    }

    /// Keeps the first `len` samples.
    pub fn truncate(&mut self, len: usize) {
        if len > 0 {
            self.samples.truncate(len);
        }
    }

    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate: f64, label: f64) -> Self {
        Self {
            samples,
            sample_rate,
            center_freq_label: label,
        }
    }
}

pub(crate) fn check_rate(sample_rate: f64) -> Result<()> {
    if sample_rate.is_finite() && sample_rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSampleRate(sample_rate))
    }
}

/// Samples per chip, failing unless `sample_rate` is a whole multiple of the chip rate.
pub fn samples_per_chip(sample_rate: f64) -> Result<usize> {
    check_rate(sample_rate)?;
    let ratio = sample_rate / CHIP_RATE;
    let rounded = libm::round(ratio);
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio {
        return Err(Error::RateNotMultiple {
            sample_rate,
            rate: CHIP_RATE,
        });
    }
    Ok(rounded as usize)
}
