/// Formats `x` with `digits` significant digits, like C's `%.{digits}g`:
/// trailing zeros are trimmed and scientific notation is used only for very
/// small or very large magnitudes.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Twelve significant digits, the precision of every CSV artifact.
pub fn format_csv_float(x: f64) -> String {
    format_sig(x, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(-0.0, 12), "0");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(25.0, 12), "25");
        assert_eq!(format_sig(-990.0, 12), "-990");
        assert_eq!(format_sig(std::f64::consts::LN_10, 12), "2.30258509299");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(1e-7, 12), "1e-7");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e14");
        assert_eq!(format_sig(9.999999999999999, 12), "10");
        assert_eq!(format_sig(0.0001234, 12), "0.0001234");
    }

    #[test]
    fn round_trips_within_precision() {
        for &x in &[std::f64::consts::PI, -1234.5678, 6.02214076e23, 1.602e-19] {
            let back: f64 = format_csv_float(x).parse().unwrap();
            assert!(((back - x) / x).abs() <= 5e-12, "{x} -> {back}");
        }
    }
}
