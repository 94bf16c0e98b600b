//! Parsing of durations, frequencies and hex payloads given on the command line.

/// Seconds from `1ms`, `500us`, `4µs`, `2e-3s` or a bare number of seconds.
pub fn parse_duration(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (num, scale) = [("ns", 1e-9), ("us", 1e-6), ("µs", 1e-6), ("ms", 1e-3), ("s", 1.0)]
        .iter()
        .find_map(|(suffix, scale)| t.strip_suffix(suffix).map(|n| (n, *scale)))
        .unwrap_or((t, 1.0));
    let value: f64 = num.trim().parse().map_err(|_| format!("invalid duration `{text}`"))?;
    if !(value.is_finite() && value > 0.0) {
        return Err(format!("duration `{text}` must be positive"));
    }
    Ok(value * scale)
}

/// Hertz from `10e6`, `10MHz`, `500kHz` or `-500k`.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let body = lower.strip_suffix("hz").unwrap_or(&lower);
    let (num, scale) = [("g", 1e9), ("m", 1e6), ("k", 1e3)]
        .iter()
        .find_map(|(suffix, scale)| body.strip_suffix(suffix).map(|n| (n, *scale)))
        .unwrap_or((body, 1.0));
    let value: f64 = num.trim().parse().map_err(|_| format!("invalid frequency `{text}`"))?;
    if !value.is_finite() {
        return Err(format!("invalid frequency `{text}`"));
    }
    Ok(value * scale)
}

pub fn parse_hex(text: &str) -> Result<Vec<u8>, String> {
    let t = text.trim().trim_start_matches("0x");
    if t.is_empty() || !t.len().is_multiple_of(2) {
        return Err(format!("hex payload `{text}` needs an even, non-zero number of digits"));
    }
    (0..t.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&t[i..i + 2], 16).map_err(|_| format!("invalid hex payload `{text}`")))
        .collect()
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("1ms"), Ok(1e-3));
        assert_eq!(parse_duration("500us"), Ok(500e-6));
        assert_eq!(parse_duration("0.25"), Ok(0.25));
        assert!(parse_duration("abc").is_err());
        assert!(parse_duration("-1ms").is_err());
    }

    #[test]
    fn frequencies() {
        assert_eq!(parse_frequency("10MHz"), Ok(10e6));
        assert_eq!(parse_frequency("-500k"), Ok(-500e3));
        assert_eq!(parse_frequency("64e6"), Ok(64e6));
    }

    #[test]
    fn hex() {
        assert_eq!(parse_hex("a5FF"), Ok(vec![0xa5, 0xff]));
        assert!(parse_hex("abc").is_err());
        assert!(parse_hex("").is_err());
        assert_eq!(to_hex(&[0, 0xab]), "00ab");
    }
}
