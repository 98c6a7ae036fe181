//! Exact decimal ingestion and correctly rounded decimal rendering.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::real::{pack_big, to_big, Precision, Real};
use super::NumericsError;

const MAX_DECIMAL_EXPONENT: i64 = 100_000;

struct Parts {
    neg: bool,
    digits: String,
    exp10: i64,
}

fn split(s: &str) -> Option<Parts> {
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first()? {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    let all_digits = |x: &str| x.bytes().all(|b| b.is_ascii_digit());
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    let mut exp10 = 0i64;
    if let Some(e) = exponent {
        let (eneg, edigits) = match e.as_bytes().first()? {
            b'-' => (true, &e[1..]),
            b'+' => (false, &e[1..]),
            _ => (false, e),
        };
        if edigits.is_empty() || !all_digits(edigits) || edigits.len() > 9 {
            return None;
        }
        let v: i64 = edigits.parse().ok()?;
        exp10 = if eneg { -v } else { v };
    }
    Some(Parts {
        neg,
        digits: format!("{int_part}{frac_part}"),
        exp10: exp10 - frac_part.len() as i64,
    })
}

/// Validate the decimal grammar without converting.
pub fn is_decimal(s: &str) -> bool {
    split(s).is_some()
}

pub(crate) fn parse(s: &str, prec: Precision) -> Result<Real, NumericsError> {
    let invalid = || NumericsError::InvalidDecimal { text: s.to_string() };
    let parts = split(s).ok_or_else(invalid)?;
    let m = BigUint::parse_bytes(parts.digits.as_bytes(), 10).ok_or_else(invalid)?;
    if m.is_zero() {
        return Ok(Real::zero(prec));
    }
    if parts.exp10.abs() > MAX_DECIMAL_EXPONENT {
        return Err(invalid());
    }
    if parts.exp10 >= 0 {
        let v = m * BigUint::from(10u32).pow(parts.exp10 as u32);
        Ok(pack_big(parts.neg, &v, 0, prec))
    } else {
        let d = BigUint::from(10u32).pow(parts.exp10.unsigned_abs() as u32);
        let want = 64 * (prec.limbs() as u64 + 2);
        let shift = (want + d.bits()).saturating_sub(m.bits());
        let q = (m << shift) / d;
        Ok(pack_big(parts.neg, &q, -(shift as i64), prec))
    }
}

/// `round(|x| · 10^k)` as an integer.
fn scaled_integer(x: &Real, k: i64) -> BigUint {
    let mant = x.mantissa();
    let e2 = x.exponent().expect("nonzero") - 64 * mant.len() as i64;
    let mut num = to_big(mant);
    let mut den = BigUint::one();
    let ten = BigUint::from(10u32);
    if k >= 0 {
        num *= ten.pow(k as u32);
    } else {
        den *= ten.pow(k.unsigned_abs() as u32);
    }
    if e2 >= 0 {
        num <<= e2 as u64;
    } else {
        den <<= e2.unsigned_abs();
    }
    ((num << 1u32) + &den) / (den << 1u32)
}

pub(crate) fn format(x: &Real, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1);
    let mant = x.mantissa();
    let top = mant[mant.len() - 1] as f64;
    let log10 = ((x.exponent().expect("nonzero") - 64) as f64 + top.log2()) * std::f64::consts::LOG10_2;
    let mut d = log10.floor() as i64;
    let ten = BigUint::from(10u32);
    let upper = ten.pow(sig as u32);
    let lower = ten.pow(sig as u32 - 1);
    let n = loop {
        let n = scaled_integer(x, sig as i64 - 1 - d);
        if n >= upper {
            d += 1;
        } else if n < lower {
            d -= 1;
        } else {
            break n;
        }
    };
    let digits = n.to_string();
    let sign = if x.is_negative() { "-" } else { "" };
    if (-4..sig as i64).contains(&d) && d < 21 {
        let s = if d >= 0 {
            let (int, frac) = digits.split_at(d as usize + 1);
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-d - 1) as usize), digits)
        };
        format!("{sign}{s}")
    } else if digits.len() == 1 {
        format!("{sign}{digits}e{d}")
    } else {
        format!("{sign}{}.{}e{d}", &digits[..1], &digits[1..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: u32) -> Precision {
        Precision::new(d).unwrap()
    }

    #[test]
    fn grammar() {
        for ok in ["1", "-1.5", ".5", "5.", "+3e7", "2.5E-13", "0.000"] {
            assert!(is_decimal(ok), "{ok}");
        }
        for bad in ["", "-", ".", "1.2.3", "1e", "1e+", "abc", "1,5", "e5", "1.23e-"] {
            assert!(!is_decimal(bad), "{bad}");
        }
    }

    #[test]
    fn third_to_ten_digits() {
        let x = parse("1", p(10)).unwrap().div_u64(3);
        assert_eq!(format(&x, 10), "0.3333333333");
    }

    #[test]
    fn long_decimal_round_trips() {
        let s = "3.667478005759036774251039717268199614461081791918500377569718e-13";
        let x = parse(s, p(70)).unwrap();
        assert_eq!(format(&x, 61), s);
    }

    #[test]
    fn rendering_styles() {
        assert_eq!(format(&parse("-0.0043212684921210595889", p(30)).unwrap(), 8), "-0.0043212685");
        assert_eq!(format(&parse("123456", p(30)).unwrap(), 3), "1.23e5");
        assert_eq!(format(&parse("1e-8", p(30)).unwrap(), 1), "1e-8");
        assert_eq!(format(&parse("42", p(30)).unwrap(), 2), "42");
    }
}
