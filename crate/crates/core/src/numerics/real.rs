use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigUint;
use smallvec::{smallvec, SmallVec};

use super::NumericsError;

pub(crate) type Limbs = SmallVec<[u64; 8]>;

const LOG2_10: f64 = 3.321_928_094_887_362;

/// Guard digits carried by transcendental kernels before rounding back.
pub(crate) const GUARD_DIGITS: u32 = 20;

/// Working precision in significant decimal digits.
///
/// The binary mantissa carries at least `⌈digits·log₂10⌉ + 16` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision(u32);

impl Precision {
    pub const MIN_DIGITS: u32 = 10;
    pub const DEFAULT: Precision = Precision(30);

    pub fn new(digits: u32) -> Result<Self, NumericsError> {
        if digits < Self::MIN_DIGITS {
            Err(NumericsError::PrecisionTooLow { digits })
        } else {
            Ok(Precision(digits))
        }
    }

    pub fn digits(self) -> u32 {
        self.0
    }

    pub fn bits(self) -> u32 {
        (self.0 as f64 * LOG2_10).ceil() as u32 + 16
    }

    pub fn limbs(self) -> usize {
        (self.bits() as usize).div_ceil(64)
    }

    /// Same precision plus `extra` digits.
    pub fn plus(self, extra: u32) -> Precision {
        Precision(self.0 + extra)
    }

    pub fn doubled(self) -> Precision {
        Precision(self.0 * 2)
    }

    pub(crate) fn guarded(self) -> Precision {
        self.plus(GUARD_DIGITS)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} digits", self.0)
    }
}

/// Extended-precision real number.
///
/// Value is `int(mant) · 2^(exp − 64·len)` with the top bit of the top limb
/// set; zero has an empty mantissa. Results of binary operations carry the
/// smaller of the two operand precisions.
#[derive(Clone)]
pub struct Real {
    neg: bool,
    exp: i64,
    mant: Limbs,
    prec: Precision,
}

// ---- limb helpers -------------------------------------------------------

fn shl_into(src: &[u64], s: u64, out: &mut [u64]) {
    let ls = (s / 64) as usize;
    let bs = (s % 64) as u32;
    for (i, &l) in src.iter().enumerate() {
        let j = i + ls;
        if j < out.len() {
            out[j] |= l << bs;
        }
        if bs > 0 && j + 1 < out.len() {
            out[j + 1] |= l >> (64 - bs);
        }
    }
}

fn shr_into(src: &[u64], s: u64, out: &mut [u64]) {
    let ls = (s / 64) as usize;
    let bs = (s % 64) as u32;
    for (i, o) in out.iter_mut().enumerate() {
        let j = i + ls;
        let lo = src.get(j).copied().unwrap_or(0);
        let hi = src.get(j + 1).copied().unwrap_or(0);
        *o = if bs == 0 { lo } else { (lo >> bs) | (hi << (64 - bs)) };
    }
}

fn bit_at(x: &[u64], k: u64) -> bool {
    x.get((k / 64) as usize)
        .map(|l| (l >> (k % 64)) & 1 == 1)
        .unwrap_or(false)
}

fn increment(x: &mut [u64]) -> bool {
    for l in x.iter_mut() {
        let (v, c) = l.overflowing_add(1);
        *l = v;
        if !c {
            return false;
        }
    }
    true
}

fn place(src: &[u64], shift: i64, out: &mut [u64]) {
    if shift >= 0 {
        shl_into(src, shift as u64, out);
    } else {
        shr_into(src, shift.unsigned_abs(), out);
    }
}

fn cmp_limbs(a: &[u64], b: &[u64]) -> Ordering {
    for i in (0..a.len().max(b.len())).rev() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

pub(crate) fn to_big(x: &[u64]) -> BigUint {
    let mut digits = Vec::with_capacity(x.len() * 2);
    for &l in x {
        digits.push(l as u32);
        digits.push((l >> 32) as u32);
    }
    BigUint::new(digits)
}

/// Round the integer `x · 2^e2` to a normalized mantissa of `prec`.
pub(crate) fn pack(neg: bool, x: &[u64], e2: i64, prec: Precision) -> Real {
    let top = match x.iter().rposition(|&l| l != 0) {
        Some(t) => t,
        None => return Real::zero(prec),
    };
    let bitlen = 64 * top as i64 + 64 - x[top].leading_zeros() as i64;
    let n = prec.limbs();
    let drop = bitlen - 64 * n as i64;
    let mut mant: Limbs = smallvec![0; n];
    let mut exp = bitlen + e2;
    if drop <= 0 {
        shl_into(&x[..=top], drop.unsigned_abs(), &mut mant);
    } else {
        let drop = drop as u64;
        shr_into(x, drop, &mut mant);
        if bit_at(x, drop - 1) && increment(&mut mant) {
            mant[n - 1] = 1 << 63;
            exp += 1;
        }
    }
    Real {
        neg,
        exp,
        mant,
        prec,
    }
}

pub(crate) fn pack_big(neg: bool, x: &BigUint, e2: i64, prec: Precision) -> Real {
    pack(neg, &x.to_u64_digits(), e2, prec)
}

// ---- construction and inspection ----------------------------------------

impl Real {
    pub fn zero(prec: Precision) -> Real {
        Real {
            neg: false,
            exp: 0,
            mant: Limbs::new(),
            prec,
        }
    }

    pub fn one(prec: Precision) -> Real {
        Real::from_u64(1, prec)
    }

    pub fn from_u64(v: u64, prec: Precision) -> Real {
        pack(false, &[v], 0, prec)
    }

    pub fn from_i64(v: i64, prec: Precision) -> Real {
        pack(v < 0, &[v.unsigned_abs()], 0, prec)
    }

    /// Exact conversion of a finite double.
    ///
    /// # Panics
    /// On NaN or infinity.
    pub fn from_f64(v: f64, prec: Precision) -> Real {
        assert!(v.is_finite(), "non-finite f64 {v} has no Real value");
        if v == 0.0 {
            return Real::zero(prec);
        }
        let bits = v.to_bits();
        let field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), field - 1075)
        };
        pack(v < 0.0, &[m], e, prec)
    }

    /// Parse a decimal string (`-1.25e-13`, `.5`, `42`) rounded to `prec`.
    pub fn parse(s: &str, prec: Precision) -> Result<Real, NumericsError> {
        super::decimal::parse(s, prec)
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_empty()
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.neg && !self.is_zero()
    }

    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.neg {
            -1
        } else {
            1
        }
    }

    /// Binary exponent `e` with `2^(e−1) ≤ |x| < 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.exp)
    }

    pub(crate) fn mantissa(&self) -> &[u64] {
        &self.mant
    }

    /// Top `k` limbs and the scale so that `|x| ≈ int(limbs) · 2^scale`.
    fn top(&self, k: usize) -> (&[u64], i64) {
        let len = self.mant.len();
        let k = k.min(len);
        (&self.mant[len - k..], self.exp - 64 * k as i64)
    }

    /// Re-round (or zero-extend) to a different precision.
    pub fn with_precision(&self, prec: Precision) -> Real {
        if self.is_zero() {
            return Real::zero(prec);
        }
        if prec.limbs() == self.mant.len() {
            let mut r = self.clone();
            r.prec = prec;
            return r;
        }
        let (x, e) = self.top(self.mant.len());
        pack(self.neg, x, e, prec)
    }

    pub fn abs(&self) -> Real {
        let mut r = self.clone();
        r.neg = false;
        r
    }

    /// Multiply by `2^k` exactly.
    pub fn ldexp(&self, k: i64) -> Real {
        let mut r = self.clone();
        if !r.is_zero() {
            r.exp += k;
        }
        r
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let n = self.mant.len();
        let hi = self.mant[n - 1] as f64;
        let mut e = self.exp - 64;
        let mut v = hi;
        while e > 1000 {
            v *= 2f64.powi(1000);
            e -= 1000;
            if v.is_infinite() {
                break;
            }
        }
        while e < -1000 {
            v *= 2f64.powi(-1000);
            e += 1000;
            if v == 0.0 {
                break;
            }
        }
        v *= 2f64.powi(e as i32);
        if self.neg {
            -v
        } else {
            v
        }
    }

    fn cmp_abs(&self, other: &Real) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => {}
            o => return o,
        }
        let (a, b) = (&self.mant, &other.mant);
        let la = a.len();
        let lb = b.len();
        for k in 0..la.max(lb) {
            let x = if k < la { a[la - 1 - k] } else { 0 };
            let y = if k < lb { b[lb - 1 - k] } else { 0 };
            match x.cmp(&y) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    // ---- arithmetic kernels ---------------------------------------------

    fn add_signed(&self, other: &Real, negate_other: bool) -> Real {
        let prec = self.prec.min(other.prec);
        let bneg = other.neg ^ negate_other;
        if other.is_zero() {
            return self.with_precision(prec);
        }
        if self.is_zero() {
            let mut r = other.with_precision(prec);
            r.neg = bneg;
            return r;
        }
        let n = prec.limbs();
        let w = n + 2;
        let (xa, sa) = self.top(n + 1);
        let (xb, sb) = other.top(n + 1);
        let scale = self.exp.max(other.exp) - (64 * w as i64 - 1);
        let mut a: SmallVec<[u64; 12]> = smallvec![0; w];
        let mut b: SmallVec<[u64; 12]> = smallvec![0; w];
        place(xa, sa - scale, &mut a);
        place(xb, sb - scale, &mut b);
        if self.neg == bneg {
            let mut carry = false;
            for (x, &y) in a.iter_mut().zip(b.iter()) {
                let (s1, c1) = x.overflowing_add(y);
                let (s2, c2) = s1.overflowing_add(carry as u64);
                *x = s2;
                carry = c1 || c2;
            }
            pack(self.neg, &a, scale, prec)
        } else {
            let (big, small, neg) = match cmp_limbs(&a, &b) {
                Ordering::Equal => return Real::zero(prec),
                Ordering::Greater => (a, b, self.neg),
                Ordering::Less => (b, a, bneg),
            };
            let mut d = big;
            let mut borrow = false;
            for (x, &y) in d.iter_mut().zip(small.iter()) {
                let (s1, b1) = x.overflowing_sub(y);
                let (s2, b2) = s1.overflowing_sub(borrow as u64);
                *x = s2;
                borrow = b1 || b2;
            }
            pack(neg, &d, scale, prec)
        }
    }

    fn mul_kernel(&self, other: &Real) -> Real {
        let prec = self.prec.min(other.prec);
        if self.is_zero() || other.is_zero() {
            return Real::zero(prec);
        }
        let n = prec.limbs();
        let (xa, ea) = self.top(n + 1);
        let (xb, eb) = other.top(n + 1);
        let mut p: SmallVec<[u64; 20]> = smallvec![0; xa.len() + xb.len()];
        for (i, &ai) in xa.iter().enumerate() {
            let mut carry: u128 = 0;
            for (j, &bj) in xb.iter().enumerate() {
                let t = ai as u128 * bj as u128 + p[i + j] as u128 + carry;
                p[i + j] = t as u64;
                carry = t >> 64;
            }
            p[i + xb.len()] = carry as u64;
        }
        pack(self.neg ^ other.neg, &p, ea + eb, prec)
    }

    fn div_kernel(&self, other: &Real) -> Real {
        let prec = self.prec.min(other.prec);
        assert!(!other.is_zero(), "Real division by zero");
        if self.is_zero() {
            return Real::zero(prec);
        }
        let n = prec.limbs();
        let (xa, sa) = self.top(n + 1);
        let (xb, sb) = other.top(n + 1);
        let s = 64 * (n + 1 + xb.len()) as u64;
        let q = (to_big(xa) << s) / to_big(xb);
        pack_big(self.neg ^ other.neg, &q, sa - sb - s as i64, prec)
    }

    /// Square root, correctly truncated via integer square root.
    ///
    /// # Panics
    /// On negative input.
    pub fn sqrt_exact(&self) -> Real {
        assert!(!self.is_negative(), "sqrt of negative Real");
        if self.is_zero() {
            return self.clone();
        }
        let n = self.prec.limbs();
        let (xa, sa) = self.top(n + 1);
        let mut s = (128 * (n + 1) as i64 - 64 * xa.len() as i64 + 2).max(0);
        if (sa - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let q = (to_big(xa) << s as u64).sqrt();
        pack_big(false, &q, (sa - s) / 2, self.prec)
    }

    /// `1/sqrt(x)` by Newton iteration from a double seed.
    ///
    /// # Panics
    /// On non-positive input.
    pub fn rsqrt(&self) -> Real {
        assert!(self.is_positive(), "rsqrt of non-positive Real");
        let e = self.exp;
        let half = e.div_euclid(2);
        // x = m · 4^half with m in [0.5, 2)
        let m = self.ldexp(-2 * half);
        let mut y = Real::from_f64(1.0 / m.to_f64().sqrt(), self.prec);
        let mut good = 50u32;
        let want = self.prec.bits() + 4;
        while good < want {
            let r = (&m * &y.square()) - 1;
            y = &y - &(&y * &r).ldexp(-1);
            good *= 2;
        }
        y.ldexp(-half)
    }

    /// Square root (Newton, within a couple of ulp).
    ///
    /// # Panics
    /// On negative input.
    pub fn sqrt(&self) -> Real {
        assert!(!self.is_negative(), "sqrt of negative Real");
        if self.is_zero() {
            return self.clone();
        }
        let r = self.rsqrt();
        let s = self * &r;
        // one Heron correction: s + (x − s²)·r/2
        let c = (self - &s.square()) * &r;
        s + c.ldexp(-1)
    }

    pub fn square(&self) -> Real {
        self.mul_kernel(self)
    }

    pub fn recip(&self) -> Real {
        Real::one(self.prec).div_kernel(self)
    }

    pub fn mul_u64(&self, k: u64) -> Real {
        if self.is_zero() || k == 0 {
            return Real::zero(self.prec);
        }
        let len = self.mant.len();
        let mut p: SmallVec<[u64; 12]> = smallvec![0; len + 1];
        let mut carry: u128 = 0;
        for (i, &l) in self.mant.iter().enumerate() {
            let t = l as u128 * k as u128 + carry;
            p[i] = t as u64;
            carry = t >> 64;
        }
        p[len] = carry as u64;
        pack(self.neg, &p, self.exp - 64 * len as i64, self.prec)
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        let r = self.mul_u64(k.unsigned_abs());
        if k < 0 {
            -r
        } else {
            r
        }
    }

    /// Division by a small integer via limb long division.
    pub fn div_u64(&self, d: u64) -> Real {
        assert!(d != 0, "Real division by zero");
        if self.is_zero() {
            return self.clone();
        }
        let len = self.mant.len();
        let mut q: SmallVec<[u64; 12]> = smallvec![0; len + 1];
        let mut rem: u128 = 0;
        for i in (0..=len).rev() {
            let limb = if i == 0 { 0 } else { self.mant[i - 1] };
            let cur = (rem << 64) | limb as u128;
            q[i] = (cur / d as u128) as u64;
            rem = cur % d as u128;
        }
        pack(self.neg, &q, self.exp - 64 * (len as i64 + 1), self.prec)
    }

    pub fn powi(&self, k: i32) -> Real {
        let mut base = if k < 0 { self.recip() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Real::one(self.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }

    pub fn hypot(&self, other: &Real) -> Real {
        (self.square() + other.square()).sqrt()
    }

    /// Decimal rendering with `sig` significant digits.
    pub fn to_decimal(&self, sig: usize) -> String {
        super::decimal::format(self, sig)
    }

    /// `true` when `|self − other| ≤ tol`.
    pub fn close_to(&self, other: &Real, tol: &Real) -> bool {
        (self - other).abs() <= *tol
    }
}

// ---- trait plumbing -----------------------------------------------------

impl PartialEq for Real {
    fn eq(&self, other: &Real) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Real) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Real) -> Ordering {
        match (self.signum(), other.signum()) {
            (a, b) if a != b => a.cmp(&b),
            (0, _) => Ordering::Equal,
            (-1, _) => other.cmp_abs(self),
            _ => self.cmp_abs(other),
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({}, {})", self.to_decimal(self.prec.digits() as usize), self.prec)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(self.prec.digits() as usize);
        f.write_str(&self.to_decimal(sig.max(1)))
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(mut self) -> Real {
        if !self.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        -self.clone()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                let f: fn(&Real, &Real) -> Real = $body;
                f(self, rhs)
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                self.$m(&rhs)
            }
        }
        impl $tr<i64> for &Real {
            type Output = Real;
            fn $m(self, rhs: i64) -> Real {
                self.$m(&Real::from_i64(rhs, self.prec))
            }
        }
        impl $tr<i64> for Real {
            type Output = Real;
            fn $m(self, rhs: i64) -> Real {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.add_signed(b, false));
binop!(Sub, sub, |a, b| a.add_signed(b, true));
binop!(Mul, mul, |a, b| a.mul_kernel(b));
binop!(Div, div, |a, b| a.div_kernel(b));

impl AddAssign<&Real> for Real {
    fn add_assign(&mut self, rhs: &Real) {
        *self = self.add_signed(rhs, false);
    }
}

impl AddAssign<Real> for Real {
    fn add_assign(&mut self, rhs: Real) {
        *self = self.add_signed(&rhs, false);
    }
}

impl SubAssign<&Real> for Real {
    fn sub_assign(&mut self, rhs: &Real) {
        *self = self.add_signed(rhs, true);
    }
}

impl SubAssign<Real> for Real {
    fn sub_assign(&mut self, rhs: Real) {
        *self = self.add_signed(&rhs, true);
    }
}

impl MulAssign<&Real> for Real {
    fn mul_assign(&mut self, rhs: &Real) {
        *self = self.mul_kernel(rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: u32) -> Precision {
        Precision::new(d).unwrap()
    }

    #[test]
    fn small_integers_are_exact() {
        let a = Real::from_i64(12345, p(30));
        let b = Real::from_i64(-678, p(30));
        assert_eq!((&a + &b).to_f64(), 11667.0);
        assert_eq!((&a - &b).to_f64(), 13023.0);
        assert_eq!((&a * &b).to_f64(), -8369910.0);
        assert_eq!((&a * &b / &b), a);
    }

    #[test]
    fn precision_is_minimum_of_operands() {
        let a = Real::from_i64(3, p(50));
        let b = Real::from_i64(7, p(20));
        assert_eq!((&a / &b).precision(), p(20));
        assert_eq!((&b + &a).precision(), p(20));
    }

    #[test]
    fn rejects_low_precision() {
        assert!(matches!(
            Precision::new(9),
            Err(NumericsError::PrecisionTooLow { digits: 9 })
        ));
    }

    #[test]
    fn cancellation_keeps_low_bits() {
        let one = Real::one(p(40));
        let tiny = Real::from_f64(1e-30, p(40));
        let x = &one + &tiny;
        let back = &x - &one;
        let rel = ((&back - &tiny) / &tiny).abs().to_f64();
        assert!(rel < 1e-8, "rel {rel}");
    }

    #[test]
    fn sqrt_squares_back() {
        let two = Real::from_u64(2, p(30));
        for r in [two.sqrt(), two.sqrt_exact(), two.rsqrt().recip()] {
            let err = (r.square() - &two).abs().to_f64();
            assert!(err < 1e-30, "err {err}");
        }
        let tiny = Real::from_f64(3e-250, p(60));
        let rel = ((tiny.sqrt().square() - &tiny) / &tiny).abs().to_f64();
        assert!(rel < 1e-60, "rel {rel}");
    }

    #[test]
    fn f64_round_trip() {
        for v in [1.0, -0.1, 3.5e-300, 7.25e250, 5e-324] {
            assert_eq!(Real::from_f64(v, p(20)).to_f64(), v);
        }
    }

    #[test]
    fn ordering_and_signs() {
        let a = Real::from_f64(-2.0, p(20));
        let b = Real::from_f64(1e-40, p(20));
        let z = Real::zero(p(20));
        assert!(a < z && z < b && a < b);
        assert_eq!((-&a).signum(), 1);
        assert_eq!(a.clone().max(b.clone()), b);
    }

    #[test]
    fn small_int_division() {
        let x = Real::one(p(30)).div_u64(3);
        let back = x.mul_u64(3);
        assert!((back - Real::one(p(30))).abs().to_f64() < 1e-30);
    }
}
