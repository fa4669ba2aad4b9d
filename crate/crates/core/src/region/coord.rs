use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational coordinate.
pub type Q = Ratio<i128>;

/// Membership slack for float-backed regions.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// Scalar field a region can be built over.
pub trait Coord:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn abs(self) -> Self;
    /// Zero, exactly for rationals and within tolerance for floats.
    fn is_zero_tol(self) -> bool;
    /// `a ≤ b`, with the float tolerance applied to floats.
    fn le_tol(a: Self, b: Self) -> bool;
    /// Rescales a halfspace into a canonical representative.
    fn normalize_halfspace(normal: &mut [Self], offset: &mut Self);
}

impl Coord for Q {
    fn zero() -> Self {
        <Q as Zero>::zero()
    }
    fn one() -> Self {
        Q::from_integer(1)
    }
    fn abs(self) -> Self {
        Signed::abs(&self)
    }
    fn is_zero_tol(self) -> bool {
        Zero::is_zero(&self)
    }
    fn le_tol(a: Self, b: Self) -> bool {
        a <= b
    }

    /// Coprime integer coefficients.
    fn normalize_halfspace(normal: &mut [Self], offset: &mut Self) {
        let all = normal.iter().chain(std::iter::once(&*offset));
        let lcm = all.clone().fold(1i128, |l, q| l.lcm(q.denom()));
        let gcd = all.map(|q| (q * Q::from_integer(lcm)).to_integer()).fold(0i128, |g, n| g.gcd(&n));
        if gcd == 0 {
            return;
        }
        let scale = Q::new(lcm, gcd);
        for c in normal.iter_mut() {
            *c *= scale;
        }
        *offset *= scale;
    }
}

impl Coord for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn is_zero_tol(self) -> bool {
        f64::abs(self) <= FLOAT_TOLERANCE
    }
    fn le_tol(a: Self, b: Self) -> bool {
        a <= b + FLOAT_TOLERANCE
    }

    /// Largest normal component scaled to 1.
    fn normalize_halfspace(normal: &mut [Self], offset: &mut Self) {
        let s = normal.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if s > 0.0 {
            for c in normal.iter_mut() {
                *c /= s;
            }
            *offset /= s;
        }
    }
}

pub(crate) fn to_f64(q: Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
