//! Reading RNG output and turning it into a min-entropy certificate.
//!
//! Symbols are counted into a dense table over `2^symbol_bits` values. The
//! plug-in Shannon estimate gives the deficiency that is fed to
//! [`crate::tails::certificate`] unchanged.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::alphabet::{bits_to_nats, Alphabet};
use crate::error::{Error, Result};
use crate::tails::{certificate, Certificate, Method};

pub const MAX_SYMBOL_BITS: u32 = 24;

/// Caveat attached to every stream certificate.
pub const INDEPENDENCE_CAVEAT: &str = "samples are assumed independent and the estimated \
deficiency is treated as exact; the certified rate upper-bounds the rate of a dependent source";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Format {
    /// Plain bytes, split into symbols most significant bit first.
    RawBinary,
    /// Hex digits, ASCII whitespace ignored, read as a bit string.
    HexText,
    /// Non-negative integers separated by commas or newlines.
    DecimalCsv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleStream {
    symbol_bits: u32,
    counts: Vec<u64>,
    total: u64,
    source_uri: String,
}

impl SampleStream {
    /// Build a stream from a dense count table of length `2^symbol_bits`.
    pub fn from_counts(symbol_bits: u32, counts: Vec<u64>, source_uri: impl Into<String>) -> Result<Self> {
        check_symbol_bits(symbol_bits)?;
        if counts.len() != 1usize << symbol_bits {
            return Err(Error::domain(format!(
                "{} counts for a {symbol_bits}-bit alphabet",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(Self {
            symbol_bits,
            counts,
            total,
            source_uri: source_uri.into(),
        })
    }

    pub fn symbol_bits(&self) -> u32 {
        self.symbol_bits
    }

    /// Dense counts indexed by symbol value.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, symbol: u32) -> u64 {
        self.counts.get(symbol as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn source_uri(&self) -> &str {
        &self.source_uri
    }

    pub fn distinct_symbols(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::from_bits(self.symbol_bits).expect("symbol_bits was validated")
    }

    /// Symbols in increasing order, each repeated by its count, as decimal CSV.
    pub fn to_decimal_csv(&self) -> String {
        let mut out = String::new();
        for (symbol, &c) in self.counts.iter().enumerate() {
            for _ in 0..c {
                out.push_str(&symbol.to_string());
                out.push('\n');
            }
        }
        out
    }
}

fn check_symbol_bits(symbol_bits: u32) -> Result<()> {
    if !(1..=MAX_SYMBOL_BITS).contains(&symbol_bits) {
        return Err(Error::domain(format!(
            "symbol_bits must lie in 1..={MAX_SYMBOL_BITS}, got {symbol_bits}"
        )));
    }
    Ok(())
}

/// Read samples from a file.
pub fn read_samples(path: impl AsRef<Path>, format: Format, symbol_bits: u32) -> Result<SampleStream> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    parse_samples(&bytes, format, symbol_bits, path.display().to_string())
}

/// Parse samples held in memory; `source_uri` is recorded as given.
pub fn parse_samples(
    bytes: &[u8],
    format: Format,
    symbol_bits: u32,
    source_uri: impl Into<String>,
) -> Result<SampleStream> {
    check_symbol_bits(symbol_bits)?;
    let mut counts = vec![0u64; 1usize << symbol_bits];
    match format {
        Format::RawBinary => {
            count_bits(bytes.iter().map(|&b| (b, 8)), symbol_bits, &mut counts);
        }
        Format::HexText => {
            let mut nibbles = Vec::with_capacity(bytes.len());
            for (offset, &b) in bytes.iter().enumerate() {
                if b.is_ascii_whitespace() {
                    continue;
                }
                let v = (b as char)
                    .to_digit(16)
                    .ok_or_else(|| Error::format(offset, format!("not a hex digit: {:?}", b as char)))?;
                nibbles.push((v as u8, 4));
            }
            count_bits(nibbles.into_iter(), symbol_bits, &mut counts);
        }
        Format::DecimalCsv => parse_csv(bytes, symbol_bits, &mut counts)?,
    }
    let stream = SampleStream::from_counts(symbol_bits, counts, source_uri)?;
    if stream.total == 0 {
        return Err(Error::format(bytes.len(), "no complete symbols in input"));
    }
    Ok(stream)
}

/// Feed `(value, width)` chunks as a bit string and count each complete
/// `symbol_bits`-bit symbol.
fn count_bits(chunks: impl Iterator<Item = (u8, u32)>, symbol_bits: u32, counts: &mut [u64]) {
    let mut acc: u64 = 0;
    let mut have: u32 = 0;
    let mask = (1u64 << symbol_bits) - 1;
    for (value, width) in chunks {
        acc = (acc << width) | u64::from(value);
        have += width;
        while have >= symbol_bits {
            let symbol = (acc >> (have - symbol_bits)) & mask;
            counts[symbol as usize] += 1;
            have -= symbol_bits;
        }
        acc &= (1u64 << have) - 1;
    }
    if have > 0 {
        log::warn!("dropping {have} trailing bits that do not fill a {symbol_bits}-bit symbol");
    }
}

fn parse_csv(bytes: &[u8], symbol_bits: u32, counts: &mut [u64]) -> Result<()> {
    let limit = 1u64 << symbol_bits;
    let mut start = 0;
    for end in (0..=bytes.len()).filter(|&i| i == bytes.len() || matches!(bytes[i], b',' | b'\n')) {
        let field = &bytes[start..end];
        let lead = field.iter().take_while(|b| b.is_ascii_whitespace()).count();
        let token = field.trim_ascii();
        let offset = start + lead;
        start = end + 1;
        if token.is_empty() {
            // blank lines are fine, an empty field before a comma is not
            if end < bytes.len() && bytes[end] == b',' {
                return Err(Error::format(offset, "empty field"));
            }
            continue;
        }
        let text = std::str::from_utf8(token).map_err(|_| Error::format(offset, "field is not ASCII"))?;
        let value: u64 = text
            .parse()
            .map_err(|_| Error::format(offset, format!("not a non-negative integer: {text:?}")))?;
        if value >= limit {
            return Err(Error::format(
                offset,
                format!("symbol {value} does not fit in {symbol_bits} bits"),
            ));
        }
        counts[value as usize] += 1;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationReport {
    /// Bits per symbol.
    pub plug_in_shannon: f64,
    /// Bits per symbol, at most `symbol_bits`.
    pub miller_madow_shannon: f64,
    /// `symbol_bits - plug_in_shannon`, in bits.
    pub deficiency_estimate: f64,
    /// Fewer than ten samples per alphabet symbol.
    pub small_count_warning: bool,
    pub distinct_symbols: usize,
}

pub fn estimate(s: &SampleStream) -> Result<EstimationReport> {
    if s.total == 0 {
        return Err(Error::domain("empty sample stream"));
    }
    let total = s.total as f64;
    let plug_in = s
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .clamp(0.0, f64::from(s.symbol_bits));
    let distinct = s.distinct_symbols();
    let correction = (distinct as f64 - 1.0) / (2.0 * total * std::f64::consts::LN_2);
    let bits = f64::from(s.symbol_bits);
    Ok(EstimationReport {
        plug_in_shannon: plug_in,
        miller_madow_shannon: (plug_in + correction).min(bits),
        deficiency_estimate: (bits - plug_in).max(0.0),
        small_count_warning: (s.total as u128) < 10u128 << s.symbol_bits,
        distinct_symbols: distinct,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamCertificate {
    pub certificate: Certificate,
    pub estimate: EstimationReport,
    pub caveat: &'static str,
}

/// Certificate for `n` fresh samples from the source behind `s`, with the
/// plug-in deficiency taken as exact.
pub fn certify_stream(s: &SampleStream, n: u64, epsilon: f64, method: Method) -> Result<StreamCertificate> {
    let estimate = estimate(s)?;
    let certificate = certificate(
        n,
        s.alphabet(),
        bits_to_nats(estimate.deficiency_estimate),
        epsilon,
        method,
    )?;
    Ok(StreamCertificate {
        certificate,
        estimate,
        caveat: INDEPENDENCE_CAVEAT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, format: Format, bits: u32) -> Result<SampleStream> {
        parse_samples(text.as_bytes(), format, bits, "mem")
    }

    #[test]
    fn hex_example() {
        let s = parse("ff00 ff00\n", Format::HexText, 8).unwrap();
        assert_eq!(s.total(), 4);
        assert_eq!(s.count(0xff), 2);
        assert_eq!(s.count(0x00), 2);
    }

    #[test]
    fn csv_example() {
        let s = parse("3,3,3", Format::DecimalCsv, 2).unwrap();
        assert_eq!(s.counts(), &[0, 0, 0, 3]);
        let s = parse("1\n2\n\n3,0\n", Format::DecimalCsv, 2).unwrap();
        assert_eq!(s.counts(), &[1, 1, 1, 1]);
    }

    #[test]
    fn raw_binary_chunks() {
        let s = parse_samples(&[7u8; 17], Format::RawBinary, 8, "mem").unwrap();
        assert_eq!(s.total(), 17);
        // 0b1010_0101 read as 2-bit symbols, high bits first: 2, 2, 1, 1
        let s = parse_samples(&[0xa5], Format::RawBinary, 2, "mem").unwrap();
        assert_eq!(s.counts(), &[0, 2, 2, 0]);
        // 3 bytes as 5-bit symbols: 4 symbols, 4 bits dropped
        let s = parse_samples(&[0xff, 0x00, 0xff], Format::RawBinary, 5, "mem").unwrap();
        assert_eq!(s.total(), 4);
        assert_eq!(s.count(31), 1);
        assert_eq!(s.count(28), 1);
        assert_eq!(s.count(0), 1);
        assert_eq!(s.count(15), 1);
    }

    #[test]
    fn format_errors_carry_offsets() {
        match parse("ff0g", Format::HexText, 8) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
        match parse("1, 2,x", Format::DecimalCsv, 4) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        match parse("1,4", Format::DecimalCsv, 2) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("1,,2", Format::DecimalCsv, 2).is_err());
        assert!(parse("", Format::HexText, 8).is_err());
        assert!(parse("ff", Format::HexText, 25).is_err());
        assert!(parse("ff", Format::HexText, 0).is_err());
    }

    #[test]
    fn estimate_examples() {
        let s = parse("3,3,3", Format::DecimalCsv, 2).unwrap();
        assert_eq!(estimate(&s).unwrap().plug_in_shannon, 0.0);

        let s = SampleStream::from_counts(3, vec![5; 8], "mem").unwrap();
        let e = estimate(&s).unwrap();
        assert_eq!(e.plug_in_shannon, 3.0);
        assert_eq!(e.deficiency_estimate, 0.0);
        assert_eq!(e.miller_madow_shannon, 3.0);
        assert!(e.small_count_warning);

        let s = SampleStream::from_counts(1, vec![3, 1], "mem").unwrap();
        let e = estimate(&s).unwrap();
        assert!((e.plug_in_shannon - 0.811_278_124_459_132_8).abs() < 1e-15);
        let mm = 0.811_278_124_459_132_8 + 1.0 / (8.0 * std::f64::consts::LN_2);
        assert!((e.miller_madow_shannon - mm).abs() < 1e-15);
        assert_eq!(e.distinct_symbols, 2);

        let empty = SampleStream::from_counts(1, vec![0, 0], "mem").unwrap();
        assert!(estimate(&empty).is_err());
    }

    #[test]
    fn uniform_stream_certifies_full_rate() {
        let s = SampleStream::from_counts(4, vec![100; 16], "mem").unwrap();
        let c = certify_stream(&s, 40, 1e-6, Method::Deficiency).unwrap();
        assert_eq!(c.certificate.deviation_t, 0.0);
        let full = 40.0 * 4.0 * std::f64::consts::LN_2;
        assert!((c.certificate.min_entropy_bound - full).abs() < 1e-12);
        assert_eq!(c.caveat, INDEPENDENCE_CAVEAT);
    }

    #[test]
    fn certify_stream_delegates() {
        let mut counts = vec![10u64; 256];
        counts[0] = 200;
        let s = SampleStream::from_counts(8, counts, "mem").unwrap();
        let e = estimate(&s).unwrap();
        for method in [Method::Deficiency, Method::holenstein_renner()] {
            let c = certify_stream(&s, 250, 2f64.powi(-60), method).unwrap();
            let direct = certificate(
                250,
                Alphabet::new(256).unwrap(),
                e.deficiency_estimate * std::f64::consts::LN_2,
                2f64.powi(-60),
                method,
            )
            .unwrap();
            assert_eq!(c.certificate, direct);
        }
    }

    proptest! {
        #[test]
        fn formats_agree(symbols in prop::collection::vec(0u8..=255, 1..200)) {
            let raw = parse_samples(&symbols, Format::RawBinary, 8, "a").unwrap();
            let hex: String = symbols.iter().map(|b| format!("{b:02x} ")).collect();
            let hex = parse(&hex, Format::HexText, 8).unwrap();
            let csv: Vec<String> = symbols.iter().map(|b| b.to_string()).collect();
            let csv = parse(&csv.join(","), Format::DecimalCsv, 8).unwrap();
            prop_assert_eq!(raw.counts(), hex.counts());
            prop_assert_eq!(raw.counts(), csv.counts());
            let again = parse(&raw.to_decimal_csv(), Format::DecimalCsv, 8).unwrap();
            prop_assert_eq!(again.counts(), raw.counts());
        }

        #[test]
        fn estimate_is_order_free(mut symbols in prop::collection::vec(0u8..16, 1..100), seed in any::<u64>()) {
            let a = parse_samples(&symbols, Format::RawBinary, 4, "a").unwrap();
            let k = (seed as usize) % symbols.len();
            symbols.rotate_left(k);
            symbols.reverse();
            let b = parse_samples(&symbols, Format::RawBinary, 4, "a").unwrap();
            prop_assert_eq!(estimate(&a).unwrap(), estimate(&b).unwrap());
            let e = estimate(&a).unwrap();
            prop_assert!(e.plug_in_shannon <= 4.0 && e.plug_in_shannon >= 0.0);
        }
    }
}
