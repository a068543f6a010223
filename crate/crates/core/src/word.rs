//! Fixed-width two's-complement integers shared by the interpreter, the
//! constraint evaluator and the SAT encoding.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Width of every SimpleDB integer, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Bitwidth(u32);

impl Bitwidth {
    pub const MIN_BITS: u32 = 2;
    pub const MAX_BITS: u32 = 32;

    pub fn new(bits: u32) -> Option<Bitwidth> {
        (Self::MIN_BITS..=Self::MAX_BITS)
            .contains(&bits)
            .then_some(Bitwidth(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn min_value(self) -> i64 {
        -(1i64 << (self.0 - 1))
    }

    pub fn max_value(self) -> i64 {
        (1i64 << (self.0 - 1)) - 1
    }

    pub fn contains(self, v: i64) -> bool {
        (self.min_value()..=self.max_value()).contains(&v)
    }

    /// Reduce `v` modulo 2^w into the signed range.
    pub fn wrap(self, v: i64) -> i64 {
        let m = 1i128 << self.0;
        let r = (v as i128).rem_euclid(m);
        if r > self.max_value() as i128 {
            (r - m) as i64
        } else {
            r as i64
        }
    }

    /// A source natural reinterpreted at this width.
    pub fn natural(self, n: u64) -> i64 {
        self.wrap((n & ((1u64 << self.0) - 1)) as i64)
    }

    pub fn add(self, a: i64, b: i64) -> i64 {
        self.wrap(a.wrapping_add(b))
    }

    pub fn sub(self, a: i64, b: i64) -> i64 {
        self.wrap(a.wrapping_sub(b))
    }

    pub fn mul(self, a: i64, b: i64) -> i64 {
        self.wrap(a.wrapping_mul(b))
    }

    /// Truncating division; division by zero yields zero.
    pub fn div(self, a: i64, b: i64) -> i64 {
        if b == 0 {
            0
        } else {
            self.wrap(a.wrapping_div(b))
        }
    }

    pub fn neg(self, a: i64) -> i64 {
        self.wrap(a.wrapping_neg())
    }

    /// Every representable value, smallest non-negative first:
    /// `0, 1, .., max, min, .., -1`.
    pub fn values(self) -> impl Iterator<Item = i64> {
        (0..=self.max_value()).chain(self.min_value()..0)
    }

    pub fn cardinality(self) -> usize {
        1usize << self.0
    }
}

impl Default for Bitwidth {
    fn default() -> Self {
        Bitwidth(4)
    }
}

impl TryFrom<u32> for Bitwidth {
    type Error = String;

    fn try_from(bits: u32) -> Result<Self, Self::Error> {
        Bitwidth::new(bits).ok_or_else(|| {
            format!(
                "bitwidth must lie in {}..={}, got {bits}",
                Bitwidth::MIN_BITS,
                Bitwidth::MAX_BITS
            )
        })
    }
}

impl From<Bitwidth> for u32 {
    fn from(w: Bitwidth) -> u32 {
        w.0
    }
}

impl fmt::Display for Bitwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-bit", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_four_bit_range() {
        let w = Bitwidth::new(4).unwrap();
        assert_eq!(w.min_value(), -8);
        assert_eq!(w.max_value(), 7);
        assert_eq!(w.add(7, 1), -8);
        assert_eq!(w.sub(-8, 1), 7);
        assert_eq!(w.mul(4, 4), 0);
        assert_eq!(w.neg(-8), -8);
        assert_eq!(w.natural(15), -1);
        assert_eq!(w.natural(16), 0);
    }

    #[test]
    fn division_truncates_toward_zero() {
        let w = Bitwidth::new(4).unwrap();
        assert_eq!(w.div(7, 2), 3);
        assert_eq!(w.div(-7, 2), -3);
        assert_eq!(w.div(7, -2), -3);
        assert_eq!(w.div(5, 0), 0);
        assert_eq!(w.div(-8, -1), -8);
    }

    #[test]
    fn value_order_starts_at_zero() {
        let w = Bitwidth::new(3).unwrap();
        let vals: Vec<_> = w.values().collect();
        assert_eq!(vals, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(w.cardinality(), 8);
    }

    #[test]
    fn rejects_out_of_range_widths() {
        assert!(Bitwidth::new(1).is_none());
        assert!(Bitwidth::new(33).is_none());
    }
}
