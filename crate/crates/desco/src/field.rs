//! Binary extension fields GF(2^m) for 1 <= m <= 8.
//!
//! Elements are stored as `u8` bit patterns (polynomial coefficients over
//! GF(2)). Addition is XOR; multiplication reduces modulo a fixed irreducible
//! polynomial per field size. Multiplication and inversion go through
//! discrete-log tables built at compile time, so arithmetic is a couple of
//! table lookups at runtime.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Reduction polynomials, indexed by m. Entry m includes the x^m term, e.g.
/// 0x11B = x^8 + x^4 + x^3 + x + 1 (the AES polynomial).
const POLY: [u16; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11B];

/// Multiplicative generator per field size. For most sizes the element `x`
/// (bit pattern 2) is primitive, but under 0x11B it has order 51, so GF(256)
/// uses 3 = x + 1 instead.
const GEN: [u8; 9] = [0, 1, 2, 2, 2, 2, 2, 2, 3];

/// Carry-less peasant multiplication with reduction, used only to build the
/// tables (and as an independent cross-check in tests).
const fn gf_mul_slow(a: u8, b: u8, bits: u32) -> u8 {
    let poly = POLY[bits as usize];
    let high = 1u16 << bits;
    let mut a = a as u16;
    let mut b = b as u16;
    let mut acc: u16 = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & high != 0 {
            a ^= poly;
        }
    }
    acc as u8
}

struct Tables {
    exp: [[u8; 256]; 9],
    log: [[u8; 256]; 9],
}

const fn build_tables() -> Tables {
    let mut exp = [[0u8; 256]; 9];
    let mut log = [[0u8; 256]; 9];
    let mut m = 1usize;
    while m <= 8 {
        let group = (1u16 << m) - 1;
        let g = GEN[m];
        let mut x: u8 = 1;
        let mut i: u16 = 0;
        while i < group {
            exp[m][i as usize] = x;
            log[m][x as usize] = i as u8;
            x = gf_mul_slow(x, g, m as u32);
            i += 1;
        }
        m += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

/// A binary extension field GF(2^m), 1 <= m <= 8.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct Field {
    bits: u8,
}

impl Field {
    /// # Panics
    /// If `bits` is outside 1..=8.
    pub fn new(bits: u8) -> Field {
        assert!(
            (1..=8).contains(&bits),
            "field size must be GF(2^m) with 1 <= m <= 8, got m = {bits}"
        );
        Field { bits }
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    /// Number of elements, 2^m.
    pub fn order(&self) -> u16 {
        1u16 << self.bits
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            bits: self.bits,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1,
            bits: self.bits,
        }
    }

    /// A fixed primitive element; its powers enumerate every nonzero element.
    pub fn generator(&self) -> FieldElement {
        FieldElement {
            value: GEN[self.bits as usize],
            bits: self.bits,
        }
    }

    /// # Panics
    /// If `value` is not a valid bit pattern for this field.
    pub fn element(&self, value: u8) -> FieldElement {
        assert!(
            (value as u16) < self.order(),
            "0x{value:02x} is not an element of GF(2^{})",
            self.bits
        );
        FieldElement {
            value,
            bits: self.bits,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        let bits = self.bits;
        (0..self.order()).map(move |v| FieldElement {
            value: v as u8,
            bits,
        })
    }
}

/// An element of GF(2^m). Carries its field size so mixed-field arithmetic
/// panics instead of silently producing garbage.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u8,
    bits: u8,
}

impl FieldElement {
    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn field(&self) -> Field {
        Field { bits: self.bits }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Multiplicative inverse.
    ///
    /// # Panics
    /// If `self` is zero.
    pub fn inv(&self) -> FieldElement {
        assert!(self.value != 0, "inverse of zero in GF(2^{})", self.bits);
        let m = self.bits as usize;
        let group = (1u16 << m) - 1;
        let l = TABLES.log[m][self.value as usize] as u16;
        FieldElement {
            value: TABLES.exp[m][((group - l) % group) as usize],
            bits: self.bits,
        }
    }

    /// `self^e`, with `0^0 = 1`.
    ///
    /// # Panics
    /// If `self` is zero and `e < 0`.
    pub fn pow(&self, e: i64) -> FieldElement {
        if self.value == 0 {
            assert!(e >= 0, "negative power of zero in GF(2^{})", self.bits);
            return if e == 0 { self.field().one() } else { *self };
        }
        let m = self.bits as usize;
        let group = ((1u16 << m) - 1) as i64;
        let l = TABLES.log[m][self.value as usize] as i64;
        let idx = (l * e).rem_euclid(group);
        FieldElement {
            value: TABLES.exp[m][idx as usize],
            bits: self.bits,
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02x}/GF(2^{})", self.value, self.bits)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02x}", self.value)
    }
}

/// Field addition as a free function (same as the `+` operator).
pub fn ff_add(a: FieldElement, b: FieldElement) -> FieldElement {
    a + b
}

/// Field multiplication as a free function (same as the `*` operator).
pub fn ff_mul(a: FieldElement, b: FieldElement) -> FieldElement {
    a * b
}

fn check_same_field(a: FieldElement, b: FieldElement) {
    assert_eq!(
        a.bits, b.bits,
        "mixed-field arithmetic: GF(2^{}) vs GF(2^{})",
        a.bits, b.bits
    );
}

impl Add for FieldElement {
    type Output = FieldElement;
    // Characteristic 2: addition is carryless, i.e. bitwise XOR.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: FieldElement) -> FieldElement {
        check_same_field(self, rhs);
        FieldElement {
            value: self.value ^ rhs.value,
            bits: self.bits,
        }
    }
}

// Characteristic 2: subtraction coincides with addition. Kept as its own
// operator so call sites can say what they mean.
impl Sub for FieldElement {
    type Output = FieldElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self + rhs
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        check_same_field(self, rhs);
        if self.value == 0 || rhs.value == 0 {
            return FieldElement {
                value: 0,
                bits: self.bits,
            };
        }
        let m = self.bits as usize;
        let group = (1u16 << m) - 1;
        let l =
            TABLES.log[m][self.value as usize] as u16 + TABLES.log[m][rhs.value as usize] as u16;
        FieldElement {
            value: TABLES.exp[m][(l % group) as usize],
            bits: self.bits,
        }
    }
}

impl Div for FieldElement {
    type Output = FieldElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: FieldElement) -> FieldElement {
        self * rhs.inv()
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: FieldElement) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: FieldElement) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aes_field_known_values() {
        let f = Field::new(8);
        assert_eq!((f.element(0x53) + f.element(0xCA)).value(), 0x99);
        assert_eq!((f.element(0x02) * f.element(0x80)).value(), 0x1B);
        // 0x53 and 0xCA are multiplicative inverses under the AES polynomial.
        assert_eq!((f.element(0x53) * f.element(0xCA)).value(), 0x01);
        assert_eq!((f.element(0x57) * f.element(0x83)).value(), 0xC1);
    }

    #[test]
    fn table_mul_matches_peasant_mul_exhaustively() {
        for m in 1..=8u8 {
            let f = Field::new(m);
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(
                        (a * b).value(),
                        gf_mul_slow(a.value(), b.value(), m as u32),
                        "GF(2^{m}): {a} * {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn generator_is_primitive_in_every_field() {
        for m in 1..=8u8 {
            let f = Field::new(m);
            let g = f.generator();
            let mut seen = vec![false; f.order() as usize];
            let mut x = f.one();
            for _ in 0..f.order() - 1 {
                assert!(
                    !seen[x.value() as usize],
                    "GF(2^{m}): generator not primitive"
                );
                seen[x.value() as usize] = true;
                x *= g;
            }
            assert_eq!(x, f.one());
        }
    }

    #[test]
    fn field_axioms_exhaustive_small_fields() {
        for m in 1..=4u8 {
            let f = Field::new(m);
            for a in f.elements() {
                assert_eq!(a + f.zero(), a);
                assert_eq!(a * f.one(), a);
                assert_eq!(a + a, f.zero());
                if !a.is_zero() {
                    assert_eq!(a * a.inv(), f.one());
                }
                for b in f.elements() {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    if !b.is_zero() {
                        assert_eq!(a / b * b, a);
                    }
                    for c in f.elements() {
                        assert_eq!((a + b) + c, a + (b + c));
                        assert_eq!((a * b) * c, a * (b * c));
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
        }
    }

    #[test]
    fn pow_agrees_with_repeated_multiplication() {
        let f = Field::new(8);
        let g = f.generator();
        let mut x = f.one();
        for e in 0..260i64 {
            assert_eq!(g.pow(e), x, "g^{e}");
            x *= g;
        }
        assert_eq!(g.pow(-1), g.inv());
        assert_eq!(f.element(0xAB).pow(255), f.one());
        assert_eq!(f.zero().pow(0), f.one());
        assert_eq!(f.zero().pow(5), f.zero());
    }

    #[test]
    #[should_panic(expected = "mixed-field")]
    fn mixed_field_arithmetic_panics() {
        let _ = Field::new(2).one() + Field::new(3).one();
    }

    #[test]
    #[should_panic(expected = "inverse of zero")]
    fn inverse_of_zero_panics() {
        let _ = Field::new(4).zero().inv();
    }
}
