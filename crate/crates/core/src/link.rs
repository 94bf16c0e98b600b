//! End-to-end compositions of the carrier, tag, channel and receiver.

use crate::channel::{add_awgn, backscatter_mix, channel_filter, CarrierModel, ChannelConfig};
use crate::error::{Error, Result};
use crate::phy::{oqpsk_modulate, spread, SpreadingTable, ZigbeeSymbol, SINGLE_TONE_OFFSET};
use crate::receiver::{decode_zigbee, expected_phase_chips, ChipTiming, DemodResult};
use crate::signal::{samples_per_chip, ComplexBaseband, DEFAULT_SAMPLE_RATE};
use crate::tag::{
    compile_ct_schedule, compile_fps_schedule, compile_ips_schedule, render_tag_waveform, Scheme, SchemeParams,
    TagModel, TagSchedule, DEFAULT_F_SHIFT, DEFAULT_HARMONIC_ORDER,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub sample_rate: f64,
    pub f_shift: f64,
    pub tag_model: TagModel,
    pub harmonic_order: u32,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            f_shift: DEFAULT_F_SHIFT,
            tag_model: TagModel::FirstHarmonic,
            harmonic_order: DEFAULT_HARMONIC_ORDER,
        }
    }
}

/// A backscattered signal plus what a receiver needs to demodulate it.
#[derive(Debug, Clone)]
pub struct Backscatter {
    pub signal: ComplexBaseband,
    pub schedule: TagSchedule,
    /// Frequency the receiver retunes to, relative to the carrier channel center.
    pub rx_offset: f64,
    pub timing: ChipTiming,
}

/// Decision-sample convention for each scheme.
pub fn scheme_timing(scheme: Scheme) -> ChipTiming {
    match scheme {
        Scheme::Ips => ChipTiming::MID_CHIP,
        Scheme::Fps => ChipTiming::CHIP_END,
        Scheme::FpsCt => ChipTiming::OQPSK,
    }
}

/// Schedule carrying `symbols` with IPS or FPS on a single-tone carrier.
///
/// The tag plays the phase-direction image of each codeword, which is what a
/// differential receiver expects from a genuine O-QPSK transmitter.
pub fn payload_schedule(
    scheme: Scheme,
    symbols: &[ZigbeeSymbol],
    table: &SpreadingTable,
    f_shift: f64,
) -> Result<TagSchedule> {
    if symbols.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let chips = expected_phase_chips(symbols, table);
    let params = SchemeParams::fps(f_shift)?;
    match scheme {
        Scheme::Ips => compile_ips_schedule(&chips, &params),
        Scheme::Fps => compile_fps_schedule(&chips, &params),
        Scheme::FpsCt => Err(Error::InvalidParams(
            "codeword translation carries tag bits, not symbols",
        )),
    }
}

/// Renders the schedule and reflects `carrier` off it.
///
/// The carrier must be at least as long as the schedule; any excess is cut.
pub fn apply_tag(carrier: &ComplexBaseband, schedule: &TagSchedule, params: &LinkParams) -> Result<ComplexBaseband> {
    let schedule = schedule.clone().with_harmonic_order(params.harmonic_order)?;
    let tag = render_tag_waveform(&schedule, carrier.sample_rate(), params.tag_model)?;
    if carrier.len() < tag.len() {
        return Err(Error::LengthMismatch(carrier.len(), tag.len()));
    }
    let mut carrier = carrier.clone();
    carrier.truncate(tag.len());
    backscatter_mix(&carrier, &tag)
}

/// IPS or FPS backscatter of `symbols` on the −500 kHz single-tone carrier.
pub fn single_tone_link(
    scheme: Scheme,
    symbols: &[ZigbeeSymbol],
    table: &SpreadingTable,
    params: &LinkParams,
) -> Result<Backscatter> {
    let schedule = payload_schedule(scheme, symbols, table, params.f_shift)?;
    let spc = samples_per_chip(params.sample_rate)?;
    let len = schedule.slots().len() * spc;
    let carrier = CarrierModel::new(1.0, -SINGLE_TONE_OFFSET, 0.0)?.render(len, params.sample_rate)?;
    let signal = apply_tag(&carrier, &schedule, params)?;
    Ok(Backscatter {
        signal,
        schedule,
        rx_offset: params.f_shift - SINGLE_TONE_OFFSET,
        timing: scheme_timing(scheme),
    })
}

/// Codeword translation over an O-QPSK carrier of `carrier_symbols`.
///
/// Returns the carrier as the first receiver hears it and the backscattered
/// copy for the second receiver.
pub fn ct_link(
    carrier_symbols: &[ZigbeeSymbol],
    tag_bits: &[bool],
    table: &SpreadingTable,
    params: &LinkParams,
) -> Result<(ComplexBaseband, Backscatter)> {
    if carrier_symbols.is_empty() || tag_bits.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let chips = spread(carrier_symbols, table);
    let carrier = oqpsk_modulate(&chips, params.sample_rate)?;
    let schedule = compile_ct_schedule(tag_bits, chips.len(), &SchemeParams::ct(params.f_shift)?)?;
    let signal = apply_tag(&carrier, &schedule, params)?;
    let bs = Backscatter {
        signal,
        schedule,
        rx_offset: params.f_shift,
        timing: ChipTiming::OQPSK,
    };
    Ok((carrier, bs))
}

/// Noise, retune, channel filter and decode.
pub fn receive(
    signal: &ComplexBaseband,
    rx_offset: f64,
    timing: ChipTiming,
    channel: &ChannelConfig,
    table: &SpreadingTable,
    noise_seed: u64,
) -> Result<DemodResult> {
    let noisy = add_awgn(signal, channel.snr, noise_seed);
    let filtered = channel_filter(&noisy, channel, rx_offset)?;
    decode_zigbee(&filtered, table, timing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receiver::decode_tag_by_comparison;
    use alloc::vec::Vec;

    fn syms(v: &[u8]) -> Vec<ZigbeeSymbol> {
        v.iter().map(|&x| ZigbeeSymbol::new(x).unwrap()).collect()
    }

    #[test]
    fn fps_and_ips_loopback() {
        let table = SpreadingTable::ieee802154();
        let payload = syms(&[0, 5, 9, 15, 3]);
        for scheme in [Scheme::Fps, Scheme::Ips] {
            let bs = single_tone_link(scheme, &payload, &table, &LinkParams::default()).unwrap();
            let r = receive(
                &bs.signal,
                bs.rx_offset,
                bs.timing,
                &ChannelConfig::default(),
                &table,
                0,
            )
            .unwrap();
            assert_eq!(r.symbols, payload, "{scheme:?}");
            assert!(
                r.hamming_distances.iter().all(|&d| d == 0),
                "{scheme:?} {:?}",
                r.hamming_distances
            );
        }
    }

    #[test]
    fn ct_loopback() {
        let table = SpreadingTable::ieee802154();
        let carrier_syms = syms(&[1, 7, 12]);
        let bits: Vec<bool> = (0..96).map(|i| (i * 7 + i / 3) % 5 < 2).collect();
        let (carrier, bs) = ct_link(&carrier_syms, &bits, &table, &LinkParams::default()).unwrap();
        let ch = ChannelConfig::default();
        let a = receive(&carrier, 0.0, ChipTiming::OQPSK, &ch, &table, 1).unwrap();
        let b = receive(&bs.signal, bs.rx_offset, bs.timing, &ch, &table, 2).unwrap();
        assert_eq!(a.symbols, carrier_syms);
        let t = decode_tag_by_comparison(&a, &b, 1).unwrap();
        assert_eq!(t.tag_bits, bits);
    }

    #[test]
    fn empty_payload() {
        let table = SpreadingTable::ieee802154();
        assert!(matches!(
            single_tone_link(Scheme::Fps, &[], &table, &LinkParams::default()),
            Err(Error::EmptyPayload)
        ));
    }
}
