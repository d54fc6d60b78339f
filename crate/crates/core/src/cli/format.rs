//! Fixed 12-significant-digit number formatting for CSV output.

const DIGITS: usize = 12;

/// Like C's `%.12g`: shortest of fixed or scientific notation with twelve
/// significant digits and trailing zeros removed.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(-8.571428571428571), "-8.57142857143");
        assert_eq!(format_sig(0.011057), "0.011057");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(1.5e-9), "1.5e-09");
        assert_eq!(format_sig(2.0e15), "2e+15");
        assert_eq!(format_sig(999999999999.9), "1e+12");
        assert_eq!(format_sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.569e-5), "1.569e-05");
        assert_eq!(format_sig(1.569e-4), "0.0001569");
    }
}
