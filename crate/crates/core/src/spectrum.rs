//! Welch PSD estimation and occupied bandwidth.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Radix2Fft;
use crate::signal::ComplexBaseband;

pub const DEFAULT_SEGMENT_LEN: usize = 4096;
pub const DEFAULT_OVERLAP: f64 = 0.5;
pub const DEFAULT_OBW_FRACTION: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
}

impl Window {
    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
        }
    }

    /// Periodic window of `len` points.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * libm::cos(TAU * n as f64 / len as f64))
                .collect(),
        }
    }
}

/// Power spectral density on a DC-centred grid.
///
/// `freqs[len/2]` is 0 Hz; bins run from `-fs/2` up to `fs/2 - df`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    /// Equivalent noise bandwidth of one bin.
    pub rbw: f64,
    pub bin_width: f64,
    pub window: Window,
    pub segment_len: usize,
    pub segment_count: usize,
}

impl PsdEstimate {
    /// Integrated power, `Σ psd · df`.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.bin_width
    }

    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .psd
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        self.freqs[i]
    }
}

/// Welch-averaged periodogram with a Hann window.
///
/// Segments start every `segment_len × (1 − overlap)` samples; a trailing
/// partial segment is dropped. Scaling makes `Σ psd · df` the window-weighted
/// mean power, so a stationary input integrates to its mean power.
pub fn estimate_psd(signal: &ComplexBaseband, segment_len: usize, overlap: f64) -> Result<PsdEstimate> {
    if segment_len < 64 || !segment_len.is_power_of_two() {
        return Err(Error::InvalidSegment(segment_len));
    }
    if !(0.0..=0.9).contains(&overlap) {
        return Err(Error::InvalidOverlap(overlap));
    }
    if signal.len() < segment_len {
        return Err(Error::TooShortForSegment {
            len: signal.len(),
            segment: segment_len,
        });
    }
    let fs = signal.sample_rate();
    let window = Window::Hann;
    let w = window.coefficients(segment_len);
    let w_power: f64 = w.iter().map(|v| v * v).sum();
    let w_sum: f64 = w.iter().sum();
    let step = (libm::round(segment_len as f64 * (1.0 - overlap)) as usize).max(1);
    let fft = Radix2Fft::new(segment_len);

    let mut acc = alloc::vec![0.0f64; segment_len];
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); segment_len];
    let mut segments = 0usize;
    let x = signal.samples();
    let mut start = 0;
    while start + segment_len <= x.len() {
        for ((b, s), wv) in buf.iter_mut().zip(&x[start..start + segment_len]).zip(&w) {
            *b = s * wv;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (segments as f64 * fs * w_power);
    let half = segment_len / 2;
    let bin_width = fs / segment_len as f64;
    let mut psd = Vec::with_capacity(segment_len);
    let mut freqs = Vec::with_capacity(segment_len);
    for i in 0..segment_len {
        let k = (i + half) % segment_len;
        psd.push(acc[k] * scale);
        freqs.push((i as f64 - half as f64) * bin_width);
    }
    let enbw = segment_len as f64 * w_power / (w_sum * w_sum);
    Ok(PsdEstimate {
        freqs,
        psd,
        rbw: enbw * bin_width,
        bin_width,
        window,
        segment_len,
        segment_count: segments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObwResult {
    pub bandwidth: f64,
    pub f_low: f64,
    pub f_high: f64,
    pub energy_fraction: f64,
}

/// Occupied bandwidth by the equal-tails rule.
///
/// Each bin's power is spread evenly over its width. `f_low` is where the
/// cumulative power from below reaches `(1 − fraction)/2` of the total and
/// `f_high` where the cumulative power from above reaches the same share.
pub fn occupied_bandwidth(psd: &PsdEstimate, energy_fraction: f64) -> Result<ObwResult> {
    if !(energy_fraction > 0.0 && energy_fraction < 1.0) {
        return Err(Error::InvalidFraction(energy_fraction));
    }
    let total: f64 = psd.psd.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let tail = (1.0 - energy_fraction) / 2.0 * total;
    let df = psd.bin_width;
    let edge = |forward: bool| -> f64 {
        let n = psd.psd.len();
        let mut cum = 0.0;
        for step in 0..n {
            let i = if forward { step } else { n - 1 - step };
            let p = psd.psd[i];
            if p > 0.0 && cum + p >= tail {
                let frac = (tail - cum) / p;
                return if forward {
                    psd.freqs[i] - df / 2.0 + frac * df
                } else {
                    psd.freqs[i] + df / 2.0 - frac * df
                };
            }
            cum += p;
        }
        if forward {
            psd.freqs[n - 1] + df / 2.0
        } else {
            psd.freqs[0] - df / 2.0
        }
    };
    let f_low = edge(true);
    let f_high = edge(false);
    Ok(ObwResult {
        bandwidth: f_high - f_low,
        f_low,
        f_high,
        energy_fraction,
    })
}
