//! XML coefficient file for the shaping filter.
//!
//! Schema:
//!
//! ```xml
//! <shaper Ts="1.0000000000000000e-2" n="3">
//!   <coef i="1">2.5000000000000000e-1</coef>
//!   ...
//! </shaper>
//! ```
//!
//! Values carry 17 significant digits so a write/read cycle reproduces every
//! coefficient bit-exactly.

use super::{ShaperError, ShaperFir};

/// Format with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_xml(sh: &ShaperFir) -> String {
    let mut out = String::with_capacity(64 + 48 * sh.len());
    out.push_str(&format!(
        "<shaper Ts=\"{}\" n=\"{}\">\n",
        format_f64(sh.ts),
        sh.len()
    ));
    for (i, a) in sh.h.iter().enumerate() {
        out.push_str(&format!(
            "  <coef i=\"{}\">{}</coef>\n",
            i + 1,
            format_f64(*a)
        ));
    }
    out.push_str("</shaper>\n");
    out
}

pub fn from_xml(text: &str) -> Result<ShaperFir, ShaperError> {
    let text = text.trim();
    let header_end = text
        .find('>')
        .ok_or_else(|| ShaperError::Parse("missing root element".into()))?;
    let header = &text[..header_end];
    if !header.starts_with("<shaper") {
        return Err(ShaperError::Parse("root element must be <shaper>".into()));
    }
    let ts: f64 = attr(header, "Ts")?
        .parse()
        .map_err(|e| ShaperError::Parse(format!("bad Ts attribute: {e}")))?;
    let n: usize = attr(header, "n")?
        .parse()
        .map_err(|e| ShaperError::Parse(format!("bad n attribute: {e}")))?;

    let mut h = vec![f64::NAN; n];
    let mut seen = 0usize;
    let mut rest = &text[header_end + 1..];
    while let Some(start) = rest.find("<coef") {
        let tag_end = rest[start..]
            .find('>')
            .ok_or_else(|| ShaperError::Parse("unterminated <coef>".into()))?
            + start;
        let tag = &rest[start..tag_end];
        let i: usize = attr(tag, "i")?
            .parse()
            .map_err(|e| ShaperError::Parse(format!("bad coef index: {e}")))?;
        let close = rest[tag_end..]
            .find("</coef>")
            .ok_or_else(|| ShaperError::Parse("missing </coef>".into()))?
            + tag_end;
        let value: f64 = rest[tag_end + 1..close]
            .trim()
            .parse()
            .map_err(|e| ShaperError::Parse(format!("bad coefficient value: {e}")))?;
        if i == 0 || i > n {
            return Err(ShaperError::Parse(format!(
                "coefficient index {i} outside 1..={n}"
            )));
        }
        if !h[i - 1].is_nan() {
            return Err(ShaperError::Parse(format!("duplicate coefficient {i}")));
        }
        h[i - 1] = value;
        seen += 1;
        rest = &rest[close + "</coef>".len()..];
    }
    if seen != n {
        return Err(ShaperError::Parse(format!(
            "expected {n} coefficients, found {seen}"
        )));
    }
    ShaperFir::new(ts, h)
}

fn attr<'a>(tag: &'a str, name: &str) -> Result<&'a str, ShaperError> {
    let pat = format!("{name}=\"");
    let start = tag
        .find(&pat)
        .ok_or_else(|| ShaperError::Parse(format!("missing attribute {name}")))?
        + pat.len();
    let end = tag[start..]
        .find('"')
        .ok_or_else(|| ShaperError::Parse(format!("unterminated attribute {name}")))?
        + start;
    Ok(&tag[start..end])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xml_roundtrip_is_bit_exact() {
        let sh = ShaperFir::new(
            0.01,
            vec![
                0.125,
                std::f64::consts::FRAC_1_PI / 2.0,
                1.0 - 0.125 - std::f64::consts::FRAC_1_PI / 2.0,
            ],
        )
        .unwrap();
        let xml = to_xml(&sh);
        let back = from_xml(&xml).unwrap();
        assert_eq!(back.ts.to_bits(), sh.ts.to_bits());
        for (a, b) in back.h.iter().zip(&sh.h) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // second generation identical as text
        assert_eq!(to_xml(&back), xml);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let sh = ShaperFir::new(0.01, vec![0.3, 0.7]).unwrap();
        let json = serde_json::to_string(&sh).unwrap();
        let back: ShaperFir = serde_json::from_str(&json).unwrap();
        assert_eq!(back.ts.to_bits(), sh.ts.to_bits());
        for (a, b) in back.h.iter().zip(&sh.h) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(from_xml("<not-a-shaper>").is_err());
        assert!(from_xml("<shaper Ts=\"0.01\" n=\"2\"><coef i=\"1\">1.0</coef></shaper>").is_err());
        assert!(from_xml(
            "<shaper Ts=\"0.01\" n=\"1\"><coef i=\"1\">0.5</coef><coef i=\"1\">0.5</coef></shaper>"
        )
        .is_err());
    }
}
