//! The global q-exponent grid.
//!
//! Every q-exponent in the crate is an integer multiple of 1/8. The theta
//! series Theta(t) = sum_l (-1)^l q^{(2l+1)^2/8} t^{l+1/2} forces the 1/8
//! step; everything else (F_r, G_{r,s}, Psi, the Laurent pairs) lives on the
//! coarser 1/2 sub-grid, i.e. on multiples of 4 grid units.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A q-exponent measured in units of 1/8.
///
/// `Exp8(12)` denotes q^{3/2}. Arithmetic is plain integer arithmetic on the
/// grid index; the grid cannot be left by construction.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exp8(pub i64);

impl Exp8 {
    pub const ZERO: Exp8 = Exp8(0);

    /// Exponent n (an integer power of q).
    pub fn int(n: i64) -> Exp8 {
        Exp8(8 * n)
    }

    /// Exponent h/2 (a half-integer power of q).
    pub fn half(h: i64) -> Exp8 {
        Exp8(4 * h)
    }

    /// Grid index.
    pub fn raw(self) -> i64 {
        self.0
    }

    /// True when the exponent is an integer power of q.
    pub fn is_integral(self) -> bool {
        self.0 % 8 == 0
    }

    /// The exponent as an integer power of q; panics off the integer grid.
    pub fn as_int(self) -> i64 {
        assert!(self.is_integral(), "exponent {} is not integral", self);
        self.0 / 8
    }
}

impl Add for Exp8 {
    type Output = Exp8;
    fn add(self, rhs: Exp8) -> Exp8 {
        Exp8(self.0 + rhs.0)
    }
}

impl Sub for Exp8 {
    type Output = Exp8;
    fn sub(self, rhs: Exp8) -> Exp8 {
        Exp8(self.0 - rhs.0)
    }
}

impl AddAssign for Exp8 {
    fn add_assign(&mut self, rhs: Exp8) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Exp8 {
    fn sub_assign(&mut self, rhs: Exp8) {
        self.0 -= rhs.0;
    }
}

impl Neg for Exp8 {
    type Output = Exp8;
    fn neg(self) -> Exp8 {
        Exp8(-self.0)
    }
}

impl fmt::Display for Exp8 {
    /// Renders as a reduced fraction, never as a float: `3`, `1/2`, `9/8`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0;
        let g = gcd64(n.unsigned_abs(), 8) as i64;
        let (num, den) = (n / g, 8 / g);
        if den == 1 {
            write!(f, "{}", num)
        } else {
            write!(f, "{}/{}", num, den)
        }
    }
}

fn gcd64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Renders an exponent given in 1/2-units as a reduced fraction over 2.
pub fn half_to_string(h: i64) -> String {
    if h % 2 == 0 {
        format!("{}", h / 2)
    } else {
        format!("{}/2", h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_reduces() {
        assert_eq!(Exp8::int(3).to_string(), "3");
        assert_eq!(Exp8::half(1).to_string(), "1/2");
        assert_eq!(Exp8(9).to_string(), "9/8");
        assert_eq!(Exp8(-4).to_string(), "-1/2");
        assert_eq!(Exp8(0).to_string(), "0");
    }

    #[test]
    fn half_strings() {
        assert_eq!(half_to_string(7), "7/2");
        assert_eq!(half_to_string(6), "3");
        assert_eq!(half_to_string(-3), "-3/2");
    }
}
