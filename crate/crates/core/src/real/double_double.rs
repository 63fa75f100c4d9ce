//! Unevaluated sum of two `f64`s (about 106 significant bits).
//!
//! Only what the forward pass needs is provided: the four operations,
//! `exp`, `ln`, `tanh` and `sqrt`. Algorithms follow the usual error-free
//! transformations (two-sum, Dekker split products).

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use num_traits::Float;

use super::Real;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DoubleDouble = DoubleDouble { hi: core::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = 134_217_729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    fn from_pair((hi, lo): (f64, f64)) -> Self {
        DoubleDouble { hi, lo }
    }

    fn mul_pow2(self, k: i32) -> Self {
        let s = Float::powi(2.0f64, k);
        DoubleDouble { hi: self.hi * s, lo: self.lo * s }
    }

    /// `exp(r) - 1` for `|r| <= 0.5`, without cancellation.
    fn expm1_small(r: Self) -> Self {
        const HALVINGS: i32 = 10;
        let x = r.mul_pow2(-HALVINGS);
        let mut term = x;
        let mut sum = x;
        let mut n = 1.0;
        loop {
            n += 1.0;
            term = term * x / DoubleDouble::lit(n);
            sum += term;
            if term.hi.abs() < 1e-36 * sum.hi.abs().max(1e-300) || n > 40.0 {
                break;
            }
        }
        // (1 + s)^2 - 1 = 2s + s^2
        for _ in 0..HALVINGS {
            sum = sum * DoubleDouble::lit(2.0) + sum * sum;
        }
        sum
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, y: Self) -> Self {
        if !self.hi.is_finite() || !y.hi.is_finite() {
            return DoubleDouble::lit(self.hi + y.hi);
        }
        let (s, e) = two_sum(self.hi, y.hi);
        let (t, f) = two_sum(self.lo, y.lo);
        let (s, e) = quick_two_sum(s, e + t);
        DoubleDouble::from_pair(quick_two_sum(s, e + f))
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, y: Self) -> Self {
        self + (-y)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, y: Self) -> Self {
        if !self.hi.is_finite() || !y.hi.is_finite() {
            return DoubleDouble::lit(self.hi * y.hi);
        }
        let (p, e) = two_prod(self.hi, y.hi);
        DoubleDouble::from_pair(quick_two_sum(p, e + (self.hi * y.lo + self.lo * y.hi)))
    }
}

impl Div for DoubleDouble {
    type Output = Self;

    fn div(self, y: Self) -> Self {
        if !self.hi.is_finite() || !y.hi.is_finite() || y.hi == 0.0 {
            return DoubleDouble::lit(self.hi / y.hi);
        }
        let q1 = self.hi / y.hi;
        let r = self - y * DoubleDouble::lit(q1);
        let q2 = r.hi / y.hi;
        let r = r - y * DoubleDouble::lit(q2);
        let q3 = r.hi / y.hi;
        DoubleDouble::from_pair(quick_two_sum(q1, q2)) + DoubleDouble::lit(q3)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for DoubleDouble {
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}

assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Real for DoubleDouble {
    const BYTES: usize = 16;

    fn lit(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    fn as_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn exp(self) -> Self {
        if self.hi == f64::NEG_INFINITY || self.hi < -745.0 {
            return Self::zero();
        }
        if self.hi > 709.0 {
            return Self::lit(f64::INFINITY);
        }
        let k = Float::round(self.hi / LN2.hi);
        let r = self - LN2 * Self::lit(k);
        (Self::one() + Self::expm1_small(r)).mul_pow2(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::lit(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        // Newton on exp(y) = x.
        let mut y = Self::lit(Float::ln(self.hi));
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::one();
        }
        y
    }

    fn tanh(self) -> Self {
        let a = self.abs();
        if a.hi > 40.0 {
            return Self::lit(Float::signum(self.hi));
        }
        let two_a = a * Self::lit(2.0);
        let t = if two_a.hi <= 0.5 { Self::expm1_small(two_a) } else { two_a.exp() - Self::one() };
        let r = t / (t + Self::lit(2.0));
        if self.hi < 0.0 {
            -r
        } else {
            r
        }
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::lit(Float::sqrt(self.hi));
        }
        let x = 1.0 / Float::sqrt(self.hi);
        let ax = Self::lit(self.hi * x);
        let corr = (self - ax * ax).hi * (x * 0.5);
        ax + Self::lit(corr)
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.hi.to_le_bytes());
        out.extend_from_slice(&self.lo.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        DoubleDouble { hi: f64::read_le(&bytes[..8]), lo: f64::read_le(&bytes[8..16]) }
    }
}
