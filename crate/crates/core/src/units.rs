//! Human-readable number formatting.

use alloc::format;
use alloc::string::String;

const PREFIXES: [(f64, &str); 6] = [(1e15, "P"), (1e12, "T"), (1e9, "G"), (1e6, "M"), (1e3, "k"), (1.0, "")];

/// `value` with a decimal SI prefix and three decimals, e.g. `107.479 T`.
pub fn si(value: f64, unit: &str) -> String {
    if !value.is_finite() {
        return format!("{value} {unit}");
    }
    let magnitude = value.abs();
    let (scale, prefix) = PREFIXES
        .iter()
        .copied()
        .find(|(scale, _)| magnitude >= *scale)
        .unwrap_or((1.0, ""));
    format!("{:.3} {prefix}{unit}", value / scale)
}

/// Rounds to six significant digits and prints in the shortest of plain or
/// scientific notation, like C's `%g`.
pub fn sig6(value: f64) -> String {
    if value == 0.0 {
        return String::from("0");
    }
    if !value.is_finite() {
        return if value.is_nan() {
            String::from("nan")
        } else if value > 0.0 {
            String::from("inf")
        } else {
            String::from("-inf")
        };
    }
    let sci = format!("{value:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{value:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(String::from(mantissa)))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixed() {
        assert_eq!(si(1.07479e14, "FLOP/s"), "107.479 TFLOP/s");
        assert_eq!(si(8.288e11, "B/s"), "828.800 GB/s");
        assert_eq!(si(4.2, "s"), "4.200 s");
        assert_eq!(si(0.5, "s"), "0.500 s");
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(129.68000001), "129.68");
        assert_eq!(sig6(1.07479e14), "1.07479e14");
        assert_eq!(sig6(3568435200.0), "3.56844e9");
        assert_eq!(sig6(0.000151200001), "0.0001512");
        assert_eq!(sig6(4.2e-6), "4.2e-6");
        assert_eq!(sig6(0.0000479185), "4.79185e-5");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(f64::INFINITY), "inf");
        assert_eq!(sig6(999999.6), "1e6");
    }
}
