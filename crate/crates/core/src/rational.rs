//! Exact rational helpers: parsing, `p/q` rendering and decimal formatting.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number used for every money value and every bound.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational `{input}`: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

impl ParseRationalError {
    fn new(input: &str, reason: &'static str) -> Self {
        Self {
            input: input.to_string(),
            reason,
        }
    }
}

/// Shorthand for `numer/denom` as an exact rational.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(value: u64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `p/q`, an integer, or a decimal such as `0.0105`, `-1.5` or `2.5e-3`.
/// Decimals are converted exactly.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(ParseRationalError::new(input, "empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::new(input, "bad numerator"))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::new(input, "bad denominator"))?;
        if den.is_zero() {
            return Err(ParseRationalError::new(input, "zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    parse_decimal(s).ok_or_else(|| ParseRationalError::new(input, "not a number"))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let factor = Rational::from_integer(num_traits::pow(ten, scale.unsigned_abs() as usize));
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Some(if negative { -value } else { value })
}

/// Renders as `numerator/denominator`, always with an explicit denominator.
pub fn to_ratio_string(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

fn pow10(exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), exp as usize)
}

/// Rounds to the nearest integer, ties to even.
pub fn round_half_even(value: &Rational) -> BigInt {
    let floor = value.floor();
    let frac = value - &floor;
    let half = ratio(1, 2);
    let base = floor.to_integer();
    match frac.cmp(&half) {
        Ordering::Less => base,
        Ordering::Greater => base + 1,
        Ordering::Equal => {
            if base.is_even() {
                base
            } else {
                base + 1
            }
        }
    }
}

/// Fixed-point decimal with `decimals` digits after the point, round-half-even.
pub fn format_fixed(value: &Rational, decimals: u32) -> String {
    let scaled = round_half_even(&(value * Rational::from_integer(pow10(decimals))));
    render_scaled(&scaled, decimals)
}

fn render_scaled(scaled: &BigInt, decimals: u32) -> String {
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let body = if decimals == 0 {
        digits
    } else {
        let width = decimals as usize + 1;
        let padded = format!("{digits:0>width$}");
        let split = padded.len() - decimals as usize;
        format!("{}.{}", &padded[..split], &padded[split..])
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Decimal exponent `e` with `10^e <= |value| < 10^(e+1)`. `value` must be nonzero.
fn decimal_exponent(value: &Rational) -> i32 {
    let abs = value.abs();
    let ten = Rational::from_integer(BigInt::from(10));
    let one = Rational::one();
    let mut e = 0i32;
    let mut scaled = abs;
    while scaled >= ten {
        scaled /= &ten;
        e += 1;
    }
    while scaled < one {
        scaled *= &ten;
        e -= 1;
    }
    e
}

/// Plain decimal notation with `sig` significant digits, round-half-even.
pub fn format_significant(value: &Rational, sig: u32) -> String {
    assert!(sig > 0, "at least one significant digit");
    if value.is_zero() {
        return format_fixed(value, sig - 1);
    }
    let mut exp = decimal_exponent(value);
    loop {
        let decimals = sig as i32 - 1 - exp;
        let scaled = if decimals >= 0 {
            value * Rational::from_integer(pow10(decimals as u32))
        } else {
            value / Rational::from_integer(pow10((-decimals) as u32))
        };
        let rounded = round_half_even(&scaled);
        if rounded.abs() >= pow10(sig) {
            // rounding carried into a new leading digit
            exp += 1;
            continue;
        }
        return if decimals >= 0 {
            render_scaled(&rounded, decimals as u32)
        } else {
            (rounded * pow10((-decimals) as u32)).to_string()
        };
    }
}

/// Lossy conversion for plotting only.
pub fn to_f64(value: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter storing a rational as a `"p/q"` string.
pub mod serde_str {
    use super::{parse_rational, to_ratio_string, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&to_ratio_string(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for a list of `"p/q"` strings.
pub mod serde_str_vec {
    use super::{parse_rational, to_ratio_string, Rational};
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&to_ratio_string(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(deserializer)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Serde adapter for an optional `"p/q"` string (`null` when absent).
pub mod serde_str_opt {
    use super::{parse_rational, to_ratio_string, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Rational>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_some(&to_ratio_string(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(deserializer)?
            .map(|s| parse_rational(&s).map_err(D::Error::custom))
            .transpose()
    }
}
