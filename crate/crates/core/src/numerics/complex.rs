use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::{Precision, Real};

/// Extended-precision complex number.
#[derive(Clone, PartialEq, Eq)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Complex {
        Complex { re, im }
    }

    pub fn zero(prec: Precision) -> Complex {
        Complex::new(Real::zero(prec), Real::zero(prec))
    }

    pub fn one(prec: Precision) -> Complex {
        Complex::new(Real::one(prec), Real::zero(prec))
    }

    pub fn i(prec: Precision) -> Complex {
        Complex::new(Real::zero(prec), Real::one(prec))
    }

    pub fn from_real(re: Real) -> Complex {
        let prec = re.precision();
        Complex::new(re, Real::zero(prec))
    }

    pub fn from_f64(re: f64, im: f64, prec: Precision) -> Complex {
        Complex::new(Real::from_f64(re, prec), Real::from_f64(im, prec))
    }

    /// Polar form `r·e^{iθ}`.
    pub fn from_polar(r: &Real, theta: &Real) -> Complex {
        let (s, c) = theta.sin_cos();
        Complex::new(r * &c, r * &s)
    }

    pub fn precision(&self) -> Precision {
        self.re.precision().min(self.im.precision())
    }

    pub fn with_precision(&self, prec: Precision) -> Complex {
        Complex::new(self.re.with_precision(prec), self.im.with_precision(prec))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Complex {
        Complex::new(self.re.clone(), -&self.im)
    }

    /// Multiply by `i`.
    pub fn mul_i(&self) -> Complex {
        Complex::new(-&self.im, self.re.clone())
    }

    pub fn scale(&self, k: &Real) -> Complex {
        Complex::new(&self.re * k, &self.im * k)
    }

    pub fn ldexp(&self, k: i64) -> Complex {
        Complex::new(self.re.ldexp(k), self.im.ldexp(k))
    }

    pub fn norm_sqr(&self) -> Real {
        self.re.square() + self.im.square()
    }

    /// Modulus; binary exponents are 64-bit so no intermediate overflows.
    pub fn abs(&self) -> Real {
        self.re.hypot(&self.im)
    }

    /// Argument in `(−π, π]`.
    pub fn arg(&self) -> Real {
        self.im.atan2(&self.re)
    }

    pub fn recip(&self) -> Complex {
        let d = self.norm_sqr();
        Complex::new(&self.re / &d, -(&self.im / &d))
    }

    /// Principal square root (branch cut on the negative real axis,
    /// `sqrt(−x) = +i·sqrt(x)`).
    pub fn sqrt(&self) -> Complex {
        let prec = self.precision();
        if self.is_zero() {
            return Complex::zero(prec);
        }
        let r = self.abs();
        if !self.re.is_negative() {
            let t = ((&r + &self.re).ldexp(-1)).sqrt();
            let im = &self.im / &t.ldexp(1);
            Complex::new(t, im)
        } else {
            let t = ((&r - &self.re).ldexp(-1)).sqrt();
            let re = self.im.abs() / t.ldexp(1);
            let im = if self.im.is_negative() { -t } else { t };
            Complex::new(re, im)
        }
    }

    pub fn exp(&self) -> Complex {
        let m = self.re.exp();
        Complex::from_polar(&m, &self.im)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Complex {
        Complex::new(self.abs().ln(), self.arg())
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} + {:?}i)", self.re, self.im)
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(self.precision().digits() as usize);
        write!(f, "{} {} {}i", self.re.to_decimal(sig), if self.im.is_negative() { "-" } else { "+" }, self.im.abs().to_decimal(sig))
    }
}

impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex::new(-self.re, -self.im)
    }
}

impl Neg for &Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        -self.clone()
    }
}

macro_rules! cbinop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Complex> for &Complex {
            type Output = Complex;
            fn $m(self, rhs: &Complex) -> Complex {
                let f: fn(&Complex, &Complex) -> Complex = $body;
                f(self, rhs)
            }
        }
        impl $tr<Complex> for Complex {
            type Output = Complex;
            fn $m(self, rhs: Complex) -> Complex {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Complex> for Complex {
            type Output = Complex;
            fn $m(self, rhs: &Complex) -> Complex {
                (&self).$m(rhs)
            }
        }
        impl $tr<Complex> for &Complex {
            type Output = Complex;
            fn $m(self, rhs: Complex) -> Complex {
                self.$m(&rhs)
            }
        }
    };
}

cbinop!(Add, add, |a, b| Complex::new(&a.re + &b.re, &a.im + &b.im));
cbinop!(Sub, sub, |a, b| Complex::new(&a.re - &b.re, &a.im - &b.im));
cbinop!(Mul, mul, |a, b| Complex::new(
    &a.re * &b.re - &a.im * &b.im,
    &a.re * &b.im + &a.im * &b.re
));
cbinop!(Div, div, |a, b| {
    let d = b.norm_sqr();
    Complex::new(
        (&a.re * &b.re + &a.im * &b.im) / &d,
        (&a.im * &b.re - &a.re * &b.im) / &d,
    )
});

impl Mul<&Real> for &Complex {
    type Output = Complex;
    fn mul(self, rhs: &Real) -> Complex {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Precision {
        Precision::new(30).unwrap()
    }

    #[test]
    fn sqrt_is_principal() {
        let z = Complex::from_f64(-4.0, 0.0, p());
        let r = z.sqrt();
        assert_eq!(r.to_f64(), (0.0, 2.0));
        let z = Complex::from_f64(-4.0, -1e-40, p());
        assert!(z.sqrt().im.is_negative());
        let z = Complex::from_f64(3.0, 4.0, p());
        let r = z.sqrt();
        assert!((&r * &r - &z).abs().to_f64() < 1e-28);
    }

    #[test]
    fn huge_modulus_does_not_overflow() {
        let big = Real::from_f64(1.0, p()).ldexp(1_500_000);
        let z = Complex::new(big.clone(), big);
        let a = z.abs();
        assert_eq!(a.exponent(), Some(1_500_001));
        let arg = z.arg().to_f64();
        assert!((arg - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Complex::from_f64(1.5, -2.0, p());
        let b = Complex::from_f64(-0.25, 7.0, p());
        let q = &(&a * &b) / &b;
        assert!((&q - &a).abs().to_f64() < 1e-28);
    }
}
