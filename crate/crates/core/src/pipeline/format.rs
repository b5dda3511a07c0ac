/// Significant digits in data and model files; enough to round-trip f64.
pub const DATA_DIGITS: usize = 17;
/// Significant digits in reports.
pub const REPORT_DIGITS: usize = 9;

/// Formats `v` with exactly `digits` significant digits, in positional
/// notation for moderate magnitudes and scientific notation otherwise.
pub fn sig(v: f64, digits: usize) -> String {
    assert!(digits > 0);
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

pub fn data(v: f64) -> String {
    sig(v, DATA_DIGITS)
}

pub fn report(v: f64) -> String {
    sig(v, REPORT_DIGITS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(report(0.5), "0.500000000");
        assert_eq!(report(-12.3456789012), "-12.3456789");
        assert_eq!(report(0.0), "0.00000000");
        assert_eq!(report(1.5e20), "1.50000000e20");
        assert_eq!(report(9.999999999), "10.0000000");
        assert_eq!(report(123456789012.0), "1.23456789e11");
        assert_eq!(report(123456789.0), "123456789");
        assert_eq!(data(0.1), "0.10000000000000001");
    }

    proptest! {
        #[test]
        fn data_digits_round_trip(v in prop::num::f64::NORMAL) {
            prop_assert_eq!(data(v).parse::<f64>().unwrap(), v);
        }

        #[test]
        fn small_and_large_round_trip(m in 1.0f64..10.0, e in -300i32..300) {
            let v = m * 10f64.powi(e);
            prop_assert_eq!(data(v).parse::<f64>().unwrap(), v);
        }
    }
}
