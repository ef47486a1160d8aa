//! Exact rational helpers: decimal parsing and fixed-point rendering.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn from_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a decimal literal such as `0.00406278`, `100e6` or `-1.5E+3`
/// without going through binary floating point.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let s = text.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - i32::try_from(frac_part.len()).ok()?;
    let ten = BigInt::from(10);
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= Rational::from_integer(factor);
    } else {
        value /= Rational::from_integer(factor);
    }
    Some(if negative { -value } else { value })
}

/// Parses either a decimal literal or an exact fraction `num/den`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n = parse_decimal(n)?;
            let d = parse_decimal(d)?;
            if d.is_zero() {
                None
            } else {
                Some(n / d)
            }
        }
        None => parse_decimal(text),
    }
}

/// Renders `value` with exactly `places` fractional digits, rounding half
/// away from zero.
pub fn format_decimal(value: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let floor = scaled.floor().to_integer();
    let rem = scaled - Rational::from_integer(floor.clone());
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let units = if rem >= half { floor + 1 } else { floor };
    let (int_part, frac_part) = units.div_rem(&scale);
    let sign = if value.is_negative() && !units_is_zero(&int_part, &frac_part) { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = places)
    }
}

fn units_is_zero(a: &BigInt, b: &BigInt) -> bool {
    a.is_zero() && b.is_zero()
}

/// Canonical decimal text for a rational: exact when the denominator has
/// only factors 2 and 5, otherwise `num/den`.
pub fn to_exact_string(value: &Rational) -> String {
    let mut den = value.denom().clone();
    let mut places = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    places += twos.max(fives);
    if places == 0 {
        return value.numer().to_string();
    }
    format_decimal(value, places)
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `floor(num / den)` for a non-negative integer numerator and a positive
/// rational denominator.
pub fn floor_div(num: u64, den: &Rational) -> Option<u64> {
    if !den.is_positive() {
        return None;
    }
    (from_u64(num) / den).floor().to_integer().to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_scientific_literals() {
        assert_eq!(parse_decimal("0.00406278").unwrap(), ratio(406278, 100_000_000));
        assert_eq!(parse_decimal("100e6").unwrap(), from_u64(100_000_000));
        assert_eq!(parse_decimal("1.5E+3").unwrap(), from_u64(1500));
        assert_eq!(parse_decimal("-2.5").unwrap(), -ratio(5, 2));
        assert_eq!(parse_decimal("7").unwrap(), from_u64(7));
        assert_eq!(parse_decimal(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_decimal("1e-3").unwrap(), ratio(1, 1000));
        assert!(parse_decimal("").is_none());
        assert!(parse_decimal("abc").is_none());
        assert!(parse_decimal("1.2.3").is_none());
        assert!(parse_decimal("e5").is_none());
        assert_eq!(parse_rational("3/2").unwrap(), ratio(3, 2));
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn rounds_half_away_from_zero() {
        assert_eq!(format_decimal(&ratio(136, 10), 2), "13.60");
        assert_eq!(format_decimal(&ratio(1, 200), 2), "0.01");
        assert_eq!(format_decimal(&ratio(1, 201), 2), "0.00");
        assert_eq!(format_decimal(&-ratio(1, 200), 2), "-0.01");
        assert_eq!(format_decimal(&-ratio(1, 1000), 2), "0.00");
        assert_eq!(format_decimal(&from_u64(2), 0), "2");
        assert_eq!(format_decimal(&ratio(2, 3), 3), "0.667");
    }

    #[test]
    fn exact_strings() {
        assert_eq!(to_exact_string(&parse_decimal("0.00406278").unwrap()), "0.00406278");
        assert_eq!(to_exact_string(&from_u64(12)), "12");
        assert_eq!(to_exact_string(&ratio(1, 3)), "1/3");
        assert_eq!(to_exact_string(&ratio(3, 4)), "0.75");
    }

    #[test]
    fn floor_division_truncates() {
        let bw = parse_decimal("0.00406278").unwrap();
        assert_eq!(floor_div(1024, &bw), Some(252044));
        assert_eq!(floor_div(0, &bw), Some(0));
        assert_eq!(floor_div(1, &Rational::zero()), None);
    }
}
