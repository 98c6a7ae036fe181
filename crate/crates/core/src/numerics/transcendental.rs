//! Elementary functions on [`Real`]: series kernels evaluated with guard
//! digits and rounded back to the argument's precision.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, LN_2};
use std::sync::{Mutex, OnceLock};

use super::real::{Precision, Real, GUARD_DIGITS};

struct Constants {
    pi: Real,
    ln2: Real,
}

fn constants(prec: Precision) -> (Real, Real) {
    static CACHE: OnceLock<Mutex<HashMap<u32, (Real, Real)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("constant cache poisoned").get(&prec.digits()) {
        return hit.clone();
    }
    let c = compute_constants(prec);
    let pair = (c.pi, c.ln2);
    cache
        .lock()
        .expect("constant cache poisoned")
        .insert(prec.digits(), pair.clone());
    pair
}

fn negligible(term: &Real, sum: &Real) -> bool {
    match (term.exponent(), sum.exponent()) {
        (None, _) => true,
        (Some(t), Some(s)) => t < s - term.precision().bits() as i64 - 4,
        (Some(_), None) => false,
    }
}

/// atan(1/n) by its Taylor series.
fn atan_inv(n: u64, wp: Precision) -> Real {
    let mut p = Real::one(wp).div_u64(n);
    let mut sum = p.clone();
    let n2 = n * n;
    let mut k = 0u64;
    loop {
        k += 1;
        p = p.div_u64(n2);
        let t = p.div_u64(2 * k + 1);
        if negligible(&t, &sum) {
            break;
        }
        if k % 2 == 1 {
            sum -= &t;
        } else {
            sum += &t;
        }
    }
    sum
}

/// atanh(1/n) by its Taylor series.
fn atanh_inv(n: u64, wp: Precision) -> Real {
    let mut p = Real::one(wp).div_u64(n);
    let mut sum = p.clone();
    let n2 = n * n;
    let mut k = 0u64;
    loop {
        k += 1;
        p = p.div_u64(n2);
        let t = p.div_u64(2 * k + 1);
        if negligible(&t, &sum) {
            break;
        }
        sum += &t;
    }
    sum
}

fn compute_constants(prec: Precision) -> Constants {
    let wp = prec.guarded();
    let pi = atan_inv(5, wp).mul_u64(16) - atan_inv(239, wp).mul_u64(4);
    let ln2 = atanh_inv(3, wp).mul_u64(2);
    Constants {
        pi: pi.with_precision(prec),
        ln2: ln2.with_precision(prec),
    }
}

fn digits_of(k: i64) -> u32 {
    (k.unsigned_abs().max(1) as f64).log10().ceil() as u32 + 1
}

impl Real {
    pub fn pi(prec: Precision) -> Real {
        constants(prec).0
    }

    pub fn ln2(prec: Precision) -> Real {
        constants(prec).1
    }

    /// expm1 for |r| ≲ 1 by scaled Taylor series and `E ← E(E+2)` doubling,
    /// which never cancels.
    fn expm1_kernel(r: &Real) -> Real {
        let bits = r.precision().bits() as f64;
        let target = (bits.sqrt() / 2.0).ceil() as i64;
        let j = match r.exponent() {
            None => return r.clone(),
            Some(e) => (e + target).max(0),
        };
        let y = r.ldexp(-j);
        let mut term = y.clone();
        let mut sum = y.clone();
        let mut k = 1u64;
        loop {
            k += 1;
            term = (&term * &y).div_u64(k);
            if negligible(&term, &sum) {
                break;
            }
            sum += &term;
        }
        for _ in 0..j {
            let two_plus = &sum + 2;
            sum = &sum * &two_plus;
        }
        sum
    }

    pub fn exp(&self) -> Real {
        let prec = self.precision();
        if self.is_zero() {
            return Real::one(prec);
        }
        let k = (self.to_f64() / LN_2).round();
        assert!(k.abs() < 4e18, "exp argument out of range");
        let k = k as i64;
        let wp = prec.plus(GUARD_DIGITS + digits_of(k));
        let r = self.with_precision(wp) - Real::ln2(wp).mul_i64(k);
        let e = Real::expm1_kernel(&r.with_precision(prec.guarded()));
        (e + 1).ldexp(k).with_precision(prec)
    }

    /// `exp(x) − 1` without cancellation for small `x`.
    pub fn expm1(&self) -> Real {
        let prec = self.precision();
        match self.exponent() {
            None => self.clone(),
            Some(e) if e <= 0 => {
                Real::expm1_kernel(&self.with_precision(prec.guarded())).with_precision(prec)
            }
            Some(_) => {
                let wp = prec.guarded();
                (self.with_precision(wp).exp() - 1).with_precision(prec)
            }
        }
    }

    /// Natural logarithm.
    ///
    /// # Panics
    /// On non-positive input.
    pub fn ln(&self) -> Real {
        assert!(self.is_positive(), "ln of non-positive Real");
        let prec = self.precision();
        let wp = prec.guarded();
        let mut e = self.exponent().expect("nonzero");
        let mut m = self.with_precision(wp).ldexp(-e);
        if m.to_f64() < std::f64::consts::FRAC_1_SQRT_2 {
            m = m.ldexp(1);
            e -= 1;
        }
        let m1 = &m - 1;
        let mut y = Real::from_f64(m.to_f64().ln(), wp);
        for _ in 0..12 {
            let t = y.expm1();
            let num = (&m1 - &t).ldexp(1);
            let den = &(&m + 1) + &t;
            let dy = num / den;
            let done = match (dy.exponent(), y.exponent()) {
                (None, _) => true,
                (Some(d), Some(ye)) => d < ye - wp.bits() as i64,
                (Some(_), None) => false,
            };
            y += &dy;
            if done {
                break;
            }
        }
        (y + Real::ln2(wp).mul_i64(e)).with_precision(prec)
    }

    /// `ln(1 + x)` without cancellation for small `x`.
    pub fn ln1p(&self) -> Real {
        let prec = self.precision();
        let wp = prec.guarded();
        let x = self.with_precision(wp);
        match x.exponent() {
            None => return self.clone(),
            Some(e) if e > -3 => return (x + 1).ln().with_precision(prec),
            _ => {}
        }
        // 2·atanh(y) with y = x/(2+x)
        let y = &x / &(&x + 2);
        let y2 = y.square();
        let mut p = y.clone();
        let mut sum = y;
        let mut k = 0u64;
        loop {
            k += 1;
            p = &p * &y2;
            let t = p.div_u64(2 * k + 1);
            if negligible(&t, &sum) {
                break;
            }
            sum += &t;
        }
        sum.ldexp(1).with_precision(prec)
    }

    pub fn sinh(&self) -> Real {
        let wp = self.precision().guarded();
        let x = self.with_precision(wp);
        let e = x.expm1();
        // sinh = (E + E/(E+1)) / 2 with E = expm1(x)
        let r = (&e + &(&e / &(&e + 1))).ldexp(-1);
        r.with_precision(self.precision())
    }

    pub fn cosh(&self) -> Real {
        let e = self.with_precision(self.precision().guarded()).exp();
        ((&e + &e.recip()).ldexp(-1)).with_precision(self.precision())
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(&self) -> (Real, Real) {
        let prec = self.precision();
        if self.is_zero() {
            return (Real::zero(prec), Real::one(prec));
        }
        let q = (self.to_f64() / FRAC_PI_2).round() as i64;
        let wp = prec.plus(GUARD_DIGITS + digits_of(q));
        let r = self.with_precision(wp) - Real::pi(wp).ldexp(-1).mul_i64(q);
        let r = r.with_precision(prec.guarded());
        let j = match r.exponent() {
            Some(e) => (e + 8).max(0),
            None => 0,
        };
        let y = r.ldexp(-j);
        let y2 = -y.square();
        let mut s = y.clone();
        let mut c = Real::one(y.precision());
        let mut ts = y.clone();
        let mut tc = Real::one(y.precision());
        let mut k = 1u64;
        loop {
            ts = (&ts * &y2).div_u64((2 * k) * (2 * k + 1));
            tc = (&tc * &y2).div_u64((2 * k - 1) * (2 * k));
            k += 1;
            if negligible(&ts, &s) && negligible(&tc, &c) {
                break;
            }
            s += &ts;
            c += &tc;
        }
        for _ in 0..j {
            let s2 = (&s * &c).ldexp(1);
            c = (&c - &s) * (&c + &s);
            s = s2;
        }
        let (s, c) = match q.rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        (s.with_precision(prec), c.with_precision(prec))
    }

    pub fn atan(&self) -> Real {
        let prec = self.precision();
        if self.is_zero() {
            return self.clone();
        }
        let wp = prec.guarded();
        let x = self.with_precision(wp).abs();
        let one = Real::one(wp);
        let inverted = x > one;
        let mut y = if inverted { x.recip() } else { x };
        const HALVINGS: i64 = 4;
        for _ in 0..HALVINGS {
            let d = (&y.square() + 1).sqrt() + 1;
            y = &y / &d;
        }
        let y2 = -y.square();
        let mut p = y.clone();
        let mut sum = y.clone();
        let mut k = 0u64;
        loop {
            k += 1;
            p = &p * &y2;
            let t = p.div_u64(2 * k + 1);
            if negligible(&t, &sum) {
                break;
            }
            sum += &t;
        }
        let mut r = sum.ldexp(HALVINGS);
        if inverted {
            r = Real::pi(wp).ldexp(-1) - r;
        }
        if self.is_negative() {
            r = -r;
        }
        r.with_precision(prec)
    }

    /// Angle of the point `(x, y) = (other, self)` in `(−π, π]`.
    pub fn atan2(&self, x: &Real) -> Real {
        let prec = self.precision().min(x.precision());
        let y = self;
        if x.is_zero() {
            return match y.signum() {
                0 => Real::zero(prec),
                s => Real::pi(prec).ldexp(-1).mul_i64(s as i64),
            };
        }
        let wp = prec.guarded();
        let base = (y.with_precision(wp) / x.with_precision(wp)).atan();
        let r = if x.is_positive() {
            base
        } else if y.is_negative() {
            base - Real::pi(wp)
        } else {
            base + Real::pi(wp)
        };
        r.with_precision(prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI_60: &str = "3.14159265358979323846264338327950288419716939937510582097494";
    const LN2_60: &str = "0.693147180559945309417232121458176568075500134360255254120680";
    const E_50: &str = "2.71828182845904523536028747135266249775724709369995";

    fn p(d: u32) -> Precision {
        Precision::new(d).unwrap()
    }

    fn agree(a: &Real, b: &str, digits: i32) {
        let b = Real::parse(b, a.precision()).unwrap();
        let err = ((a - &b) / &b).abs();
        let tol = Real::from_f64(10f64.powi(-digits), a.precision());
        assert!(err < tol, "{a} vs {b}");
    }

    #[test]
    fn constants_match_reference() {
        agree(&Real::pi(p(58)), PI_60, 57);
        agree(&Real::ln2(p(58)), LN2_60, 57);
    }

    #[test]
    fn exp_of_one() {
        agree(&Real::one(p(48)).exp(), E_50, 47);
    }

    #[test]
    fn log_inverts_exp() {
        for v in [1e-300, 1e-13, 0.5, 1.0 + 1e-20, 7.0, 3e200] {
            let x = Real::from_f64(v, p(40));
            let back = x.ln().exp();
            let rel = ((&back - &x) / &x).abs().to_f64();
            assert!(rel < 1e-38, "{v}: {rel}");
        }
    }

    #[test]
    fn ln_near_one_is_relative() {
        let d = Real::one(p(30)).ldexp(-80);
        let x = Real::one(p(30)) + &d;
        let back = x.ln().expm1();
        let rel = ((back - &d) / &d).abs().to_f64();
        assert!(rel < 1e-28, "{rel}");
    }

    #[test]
    fn expm1_small() {
        let x = Real::from_f64(1e-30, p(30));
        let e = x.expm1();
        let rel = ((&e - &x) / &x).abs().to_f64();
        assert!((rel - 5e-31).abs() < 1e-35);
    }

    #[test]
    fn trig_identities() {
        let x = Real::from_f64(2.5, p(40));
        let (s, c) = x.sin_cos();
        let one = s.square() + c.square();
        assert!((one - 1).abs().to_f64() < 1e-38);
        assert!((s.to_f64() - 2.5f64.sin()).abs() < 1e-15);
        let t = (s / c).atan();
        assert!((t + Real::pi(p(40)) - &x).abs().to_f64() < 1e-37);
    }

    #[test]
    fn atan2_quadrants() {
        let pr = p(30);
        let one = Real::one(pr);
        let pi = Real::pi(pr);
        let q = one.atan2(&-&one);
        assert!((q - pi.mul_u64(3).div_u64(4)).abs().to_f64() < 1e-29);
        let q = (-&one).atan2(&-&one);
        assert!((q + pi.mul_u64(3).div_u64(4)).abs().to_f64() < 1e-29);
    }

    #[test]
    fn sinh_small_argument() {
        let x = Real::from_f64(1e-20, p(30));
        let rel = ((x.sinh() - &x) / &x).abs().to_f64();
        assert!(rel < 1e-29, "{rel}");
    }

    #[test]
    fn ln1p_tiny_argument() {
        let prec = Precision::new(40).unwrap();
        let x = Real::parse("2.7e-31", prec).unwrap();
        let l = x.ln1p();
        let want = &x - &x.square().ldexp(-1);
        assert!(((&l - &want) / &want).abs().to_f64() < 1e-38);
        let big = Real::parse("0.75", prec).unwrap();
        assert!((&big.ln1p() - &Real::parse("1.75", prec).unwrap().ln()).abs().to_f64() < 1e-39);
    }
}
