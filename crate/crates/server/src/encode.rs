//! Compact JSON number formatting.
//!
//! Values travel with three significant digits in whichever of plain or
//! exponent notation is shorter: `1234567.8` becomes `123e4`, `0.25` stays
//! `0.25`.

use geotext_core::amount::Amount;

/// Shortest JSON text for `mantissa × 10^exp` (mantissa without trailing
/// zeros).
fn shortest(mantissa: u128, exp: i32) -> String {
    if mantissa == 0 {
        return "0".into();
    }
    let digits = mantissa.to_string();
    let plain = if exp >= 0 {
        format!("{digits}{}", "0".repeat(exp as usize))
    } else {
        let point = digits.len() as i32 + exp;
        if point > 0 {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        } else {
            format!("0.{}{digits}", "0".repeat((-point) as usize))
        }
    };
    if exp == 0 {
        return plain;
    }
    let sci = format!("{digits}e{exp}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn strip_zeros(mut m: u128, mut e: i32) -> (u128, i32) {
    while m != 0 && m.is_multiple_of(10) {
        m /= 10;
        e += 1;
    }
    (m, e)
}

/// Rounds `digits × 10^exp` half away from zero to three significant digits.
fn round3(units: u128, exp: i32) -> (u128, i32) {
    if units == 0 {
        return (0, 0);
    }
    let len = units.ilog10() as i32 + 1;
    if len <= 3 {
        return strip_zeros(units, exp);
    }
    let drop = (len - 3) as u32;
    let div = 10u128.pow(drop);
    let mut m = units / div;
    if units % div >= div / 2 {
        m += 1;
    }
    strip_zeros(m, exp + drop as i32)
}

/// Fixed-point amount at three significant digits.
pub fn amount3(a: Amount) -> String {
    let (m, e) = round3(a.units(), -(Amount::DECIMALS as i32));
    shortest(m, e)
}

/// Non-negative float at three significant digits.
pub fn float3(v: f64) -> String {
    if !v.is_finite() || v <= 0.0 {
        return "0".into();
    }
    // "d.dde±x" from the formatter, already rounded to three digits
    let s = format!("{v:.2e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let m: u128 = mant.replace('.', "").parse().expect("digits");
    let (m, e) = strip_zeros(m, exp - 2);
    shortest(m, e)
}

/// Shortest round-trip form of a layout coordinate.
pub fn coord(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

pub fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// `[a,b,c]` from already-encoded items.
pub fn array<I: IntoIterator<Item = String>>(items: I) -> String {
    let mut out = String::from("[");
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&item);
    }
    out.push(']');
    out
}
