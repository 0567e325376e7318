//! Float formatting for CSV and JSON outputs: 17 significant digits, so every
//! `f64` round-trips exactly.

use serde::ser::{Serialize, SerializeSeq, Serializer};
use serde_json::value::RawValue;

/// Renders `x` with 17 significant digits. Plain decimal notation for
/// exponents in `[-5, 16]`, scientific notation otherwise. Non-finite values
/// render as `null` in JSON contexts and `NaN`/`inf` in CSV.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=16).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{body}")
}

fn raw<E: serde::ser::Error>(x: f64) -> Result<Box<RawValue>, E> {
    let text = if x.is_finite() { format_f64(x) } else { "null".to_string() };
    RawValue::from_string(text).map_err(E::custom)
}

/// `serialize_with` adapter for `f64` fields.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw::<S::Error>(*x)?.serialize(s)
}

/// `serialize_with` adapter for `[f64; 2]` intervals.
pub fn ser_f64_pair<S: Serializer>(x: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
    ser_f64_slice(x, s)
}

/// `serialize_with` adapter for `Vec<f64>` fields.
pub fn ser_f64_vec<S: Serializer>(x: &[f64], s: S) -> Result<S::Ok, S::Error> {
    ser_f64_slice(x, s)
}

fn ser_f64_slice<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&raw::<S::Error>(x)?)?;
    }
    seq.end()
}
