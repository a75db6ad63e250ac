//! Exact rational rates.
//!
//! Code rates and capacity values are compared exactly — e.g. the capacity
//! case boundaries must agree to the digit — so rates are kept as reduced
//! integer fractions, never floats.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A non-negative rational in lowest terms.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Rate {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rate {
    /// # Panics
    /// If `den` is zero.
    pub fn new(num: u64, den: u64) -> Rate {
        assert!(den != 0, "rate with zero denominator");
        let g = gcd(num, den).max(1);
        Rate {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Rate) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Rate) -> Ordering {
        // Cross-multiply in u128: no overflow for any u64 operands.
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_equality() {
        assert_eq!(Rate::new(2, 4), Rate::new(1, 2));
        assert_eq!(Rate::new(2, 4).num(), 1);
        assert_eq!(Rate::new(0, 7), Rate::new(0, 1));
        assert_eq!(Rate::new(6, 9), Rate::new(2, 3));
    }

    #[test]
    fn ordering_is_exact() {
        let half = Rate::new(1, 2);
        let three_fifths = Rate::new(3, 5);
        let two_thirds = Rate::new(2, 3);
        assert!(half < three_fifths && three_fifths < two_thirds);
        assert_eq!(two_thirds.cmp(&Rate::new(4, 6)), Ordering::Equal);
    }

    #[test]
    fn display() {
        assert_eq!(Rate::new(3, 5).to_string(), "3/5");
        assert_eq!(Rate::new(4, 4).to_string(), "1");
    }

    #[test]
    #[should_panic(expected = "zero denominator")]
    fn zero_denominator_panics() {
        Rate::new(1, 0);
    }
}
