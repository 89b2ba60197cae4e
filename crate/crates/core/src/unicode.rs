//! Unicode character-class helpers used by the filters and metrics.
//!
//! Punctuation detection follows the Unicode general categories P*
//! (connector, dash, open, close, initial, final, other). The range table
//! below is frozen from UCD 13.0.0 so that filter
//! decisions do not drift with toolchain upgrades; it covers all planes.

use unicode_normalization::char::is_combining_mark;

/// Inclusive codepoint ranges whose general category is P*.
const PUNCT_RANGES: [(u32, u32); 185] = [
    (0x00021, 0x00023), (0x00025, 0x0002A), (0x0002C, 0x0002F), (0x0003A, 0x0003B),
    (0x0003F, 0x00040), (0x0005B, 0x0005D), (0x0005F, 0x0005F), (0x0007B, 0x0007B),
    (0x0007D, 0x0007D), (0x000A1, 0x000A1), (0x000A7, 0x000A7), (0x000AB, 0x000AB),
    (0x000B6, 0x000B7), (0x000BB, 0x000BB), (0x000BF, 0x000BF), (0x0037E, 0x0037E),
    (0x00387, 0x00387), (0x0055A, 0x0055F), (0x00589, 0x0058A), (0x005BE, 0x005BE),
    (0x005C0, 0x005C0), (0x005C3, 0x005C3), (0x005C6, 0x005C6), (0x005F3, 0x005F4),
    (0x00609, 0x0060A), (0x0060C, 0x0060D), (0x0061B, 0x0061B), (0x0061E, 0x0061F),
    (0x0066A, 0x0066D), (0x006D4, 0x006D4), (0x00700, 0x0070D), (0x007F7, 0x007F9),
    (0x00830, 0x0083E), (0x0085E, 0x0085E), (0x00964, 0x00965), (0x00970, 0x00970),
    (0x009FD, 0x009FD), (0x00A76, 0x00A76), (0x00AF0, 0x00AF0), (0x00C77, 0x00C77),
    (0x00C84, 0x00C84), (0x00DF4, 0x00DF4), (0x00E4F, 0x00E4F), (0x00E5A, 0x00E5B),
    (0x00F04, 0x00F12), (0x00F14, 0x00F14), (0x00F3A, 0x00F3D), (0x00F85, 0x00F85),
    (0x00FD0, 0x00FD4), (0x00FD9, 0x00FDA), (0x0104A, 0x0104F), (0x010FB, 0x010FB),
    (0x01360, 0x01368), (0x01400, 0x01400), (0x0166E, 0x0166E), (0x0169B, 0x0169C),
    (0x016EB, 0x016ED), (0x01735, 0x01736), (0x017D4, 0x017D6), (0x017D8, 0x017DA),
    (0x01800, 0x0180A), (0x01944, 0x01945), (0x01A1E, 0x01A1F), (0x01AA0, 0x01AA6),
    (0x01AA8, 0x01AAD), (0x01B5A, 0x01B60), (0x01BFC, 0x01BFF), (0x01C3B, 0x01C3F),
    (0x01C7E, 0x01C7F), (0x01CC0, 0x01CC7), (0x01CD3, 0x01CD3), (0x02010, 0x02027),
    (0x02030, 0x02043), (0x02045, 0x02051), (0x02053, 0x0205E), (0x0207D, 0x0207E),
    (0x0208D, 0x0208E), (0x02308, 0x0230B), (0x02329, 0x0232A), (0x02768, 0x02775),
    (0x027C5, 0x027C6), (0x027E6, 0x027EF), (0x02983, 0x02998), (0x029D8, 0x029DB),
    (0x029FC, 0x029FD), (0x02CF9, 0x02CFC), (0x02CFE, 0x02CFF), (0x02D70, 0x02D70),
    (0x02E00, 0x02E2E), (0x02E30, 0x02E4F), (0x02E52, 0x02E52), (0x03001, 0x03003),
    (0x03008, 0x03011), (0x03014, 0x0301F), (0x03030, 0x03030), (0x0303D, 0x0303D),
    (0x030A0, 0x030A0), (0x030FB, 0x030FB), (0x0A4FE, 0x0A4FF), (0x0A60D, 0x0A60F),
    (0x0A673, 0x0A673), (0x0A67E, 0x0A67E), (0x0A6F2, 0x0A6F7), (0x0A874, 0x0A877),
    (0x0A8CE, 0x0A8CF), (0x0A8F8, 0x0A8FA), (0x0A8FC, 0x0A8FC), (0x0A92E, 0x0A92F),
    (0x0A95F, 0x0A95F), (0x0A9C1, 0x0A9CD), (0x0A9DE, 0x0A9DF), (0x0AA5C, 0x0AA5F),
    (0x0AADE, 0x0AADF), (0x0AAF0, 0x0AAF1), (0x0ABEB, 0x0ABEB), (0x0FD3E, 0x0FD3F),
    (0x0FE10, 0x0FE19), (0x0FE30, 0x0FE52), (0x0FE54, 0x0FE61), (0x0FE63, 0x0FE63),
    (0x0FE68, 0x0FE68), (0x0FE6A, 0x0FE6B), (0x0FF01, 0x0FF03), (0x0FF05, 0x0FF0A),
    (0x0FF0C, 0x0FF0F), (0x0FF1A, 0x0FF1B), (0x0FF1F, 0x0FF20), (0x0FF3B, 0x0FF3D),
    (0x0FF3F, 0x0FF3F), (0x0FF5B, 0x0FF5B), (0x0FF5D, 0x0FF5D), (0x0FF5F, 0x0FF65),
    (0x10100, 0x10102), (0x1039F, 0x1039F), (0x103D0, 0x103D0), (0x1056F, 0x1056F),
    (0x10857, 0x10857), (0x1091F, 0x1091F), (0x1093F, 0x1093F), (0x10A50, 0x10A58),
    (0x10A7F, 0x10A7F), (0x10AF0, 0x10AF6), (0x10B39, 0x10B3F), (0x10B99, 0x10B9C),
    (0x10EAD, 0x10EAD), (0x10F55, 0x10F59), (0x11047, 0x1104D), (0x110BB, 0x110BC),
    (0x110BE, 0x110C1), (0x11140, 0x11143), (0x11174, 0x11175), (0x111C5, 0x111C8),
    (0x111CD, 0x111CD), (0x111DB, 0x111DB), (0x111DD, 0x111DF), (0x11238, 0x1123D),
    (0x112A9, 0x112A9), (0x1144B, 0x1144F), (0x1145A, 0x1145B), (0x1145D, 0x1145D),
    (0x114C6, 0x114C6), (0x115C1, 0x115D7), (0x11641, 0x11643), (0x11660, 0x1166C),
    (0x1173C, 0x1173E), (0x1183B, 0x1183B), (0x11944, 0x11946), (0x119E2, 0x119E2),
    (0x11A3F, 0x11A46), (0x11A9A, 0x11A9C), (0x11A9E, 0x11AA2), (0x11C41, 0x11C45),
    (0x11C70, 0x11C71), (0x11EF7, 0x11EF8), (0x11FFF, 0x11FFF), (0x12470, 0x12474),
    (0x16A6E, 0x16A6F), (0x16AF5, 0x16AF5), (0x16B37, 0x16B3B), (0x16B44, 0x16B44),
    (0x16E97, 0x16E9A), (0x16FE2, 0x16FE2), (0x1BC9F, 0x1BC9F), (0x1DA87, 0x1DA8B),
    (0x1E95E, 0x1E95F),
];

/// True when `c` carries a Unicode punctuation general category (P*).
/// The Indic danda and double danda fall in this set.
pub fn is_punctuation(c: char) -> bool {
    let cp = c as u32;
    let mut lo = 0usize;
    let mut hi = PUNCT_RANGES.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (a, b) = PUNCT_RANGES[mid];
        if cp < a {
            hi = mid;
        } else if cp > b {
            lo = mid + 1;
        } else {
            return true;
        }
    }
    false
}

/// True when `c` counts as a letter for script profiling: alphabetic, or a
/// combining mark (category M) such as an Indic matra or virama.
pub fn is_letterish(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c)
}

/// Remove all punctuation from `text`, leaving every other character as is.
pub fn strip_punctuation(text: &str) -> String {
    text.chars().filter(|&c| !is_punctuation(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_punctuation_classified() {
        for c in ['.', ',', '!', '?', ';', '"', '(', ')', '-', '_'] {
            assert!(is_punctuation(c), "{c:?} should be punctuation");
        }
        for c in ['a', 'Z', '5', ' ', '+', '$', '^'] {
            assert!(!is_punctuation(c), "{c:?} should not be punctuation");
        }
    }

    #[test]
    fn indic_and_arabic_punctuation_classified() {
        assert!(is_punctuation('\u{0964}')); // danda
        assert!(is_punctuation('\u{0965}')); // double danda
        assert!(is_punctuation('\u{061F}')); // Arabic question mark
        assert!(is_punctuation('\u{060C}')); // Arabic comma
        assert!(!is_punctuation('\u{0905}')); // Devanagari A
        assert!(!is_punctuation('\u{0966}')); // Devanagari zero
        assert!(!is_punctuation('\u{20B9}')); // rupee sign (currency)
    }

    #[test]
    fn letterish_counts_matras_and_viramas() {
        assert!(is_letterish('न'));
        assert!(is_letterish('\u{093E}')); // matra AA (spacing mark)
        assert!(is_letterish('\u{094D}')); // virama (non-spacing mark)
        assert!(is_letterish('a'));
        assert!(!is_letterish('5'));
        assert!(!is_letterish('\u{0964}'));
        assert!(!is_letterish(' '));
    }

    #[test]
    fn strip_punctuation_keeps_other_content() {
        assert_eq!(strip_punctuation("a.b,c!"), "abc");
        assert_eq!(strip_punctuation("\u{0964}\u{0964}\u{0964} \u{0965}\u{0965}"), " ");
        assert_eq!(strip_punctuation("नमस्ते।"), "नमस्ते");
    }

    #[test]
    fn range_table_is_sorted_and_disjoint() {
        for w in PUNCT_RANGES.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
        for (a, b) in PUNCT_RANGES {
            assert!(a <= b);
        }
    }
}
