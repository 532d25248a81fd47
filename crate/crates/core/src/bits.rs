//! Three-valued bit vectors (0, 1, X) used for constants in MIR and for
//! every value in the interpreter.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
    X,
}

impl Bit {
    pub fn from_bool(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn char(self) -> char {
        match self {
            Bit::Zero => '0',
            Bit::One => '1',
            Bit::X => 'x',
        }
    }
}

/// Bits are stored least significant first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    bits: Vec<Bit>,
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

/// Most significant bit first, `x` for unknown bits.
impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits.iter().rev() {
            write!(f, "{}", b.char())?;
        }
        Ok(())
    }
}

impl Bits {
    pub fn x(width: usize) -> Bits {
        Bits {
            bits: vec![Bit::X; width],
        }
    }

    pub fn zeros(width: usize) -> Bits {
        Bits {
            bits: vec![Bit::Zero; width],
        }
    }

    pub fn from_bits_lsb(bits: Vec<Bit>) -> Bits {
        Bits { bits }
    }

    pub fn from_bool(b: bool) -> Bits {
        Bits {
            bits: vec![Bit::from_bool(b)],
        }
    }

    /// Two's-complement encoding of `v` truncated to `width` bits.
    pub fn from_i128(v: i128, width: usize) -> Bits {
        Bits::from_bigint(&BigInt::from(v), width)
    }

    pub fn from_u64(v: u64, width: usize) -> Bits {
        Bits::from_bigint(&BigInt::from(v), width)
    }

    pub fn from_bigint(v: &BigInt, width: usize) -> Bits {
        let modulus = BigInt::one() << width;
        let mut u = v % &modulus;
        if u.is_negative() {
            u += &modulus;
        }
        let bits = (0..width)
            .map(|i| Bit::from_bool(u.bit(i as u64)))
            .collect();
        Bits { bits }
    }

    /// Parses an MSB-first string of `0`, `1` and `x`.
    pub fn parse(s: &str) -> Option<Bits> {
        let bits = s
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Some(Bit::Zero),
                '1' => Some(Bit::One),
                'x' | 'X' => Some(Bit::X),
                _ => None,
            })
            .collect::<Option<Vec<Bit>>>()?;
        Some(Bits { bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn get(&self, i: usize) -> Bit {
        self.bits[i]
    }

    pub fn bits_lsb(&self) -> &[Bit] {
        &self.bits
    }

    pub fn is_defined(&self) -> bool {
        self.bits.iter().all(|b| *b != Bit::X)
    }

    pub fn is_all_x(&self) -> bool {
        self.bits.iter().all(|b| *b == Bit::X)
    }

    pub fn to_unsigned(&self) -> Option<BigInt> {
        if !self.is_defined() {
            return None;
        }
        let mut v = BigInt::zero();
        for (i, b) in self.bits.iter().enumerate() {
            if *b == Bit::One {
                v.set_bit(i as u64, true);
            }
        }
        Some(v)
    }

    pub fn to_signed(&self) -> Option<BigInt> {
        let u = self.to_unsigned()?;
        let w = self.width();
        if w > 0 && self.bits[w - 1] == Bit::One {
            Some(u - (BigInt::one() << w))
        } else {
            Some(u)
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        let u = self.to_unsigned()?;
        let (sign, digits) = u.to_u64_digits();
        match (sign, digits.as_slice()) {
            (Sign::NoSign, _) => Some(0),
            (_, [d]) => Some(*d),
            _ => None,
        }
    }

    pub fn to_i128(&self) -> Option<i128> {
        i128::try_from(self.to_signed()?).ok()
    }

    pub fn to_bool(&self) -> Option<bool> {
        match self.bits.first() {
            Some(Bit::One) => Some(true),
            Some(Bit::Zero) => Some(false),
            _ => None,
        }
    }

    /// Concatenates parts given most significant first.
    pub fn concat(parts: &[Bits]) -> Bits {
        let mut bits = vec![];
        for p in parts.iter().rev() {
            bits.extend_from_slice(&p.bits);
        }
        Bits { bits }
    }

    pub fn slice(&self, offset: usize, width: usize) -> Bits {
        Bits {
            bits: self.bits[offset..offset + width].to_vec(),
        }
    }

    pub fn sign_extend(&self, width: usize) -> Bits {
        let mut bits = self.bits.clone();
        let top = bits.last().copied().unwrap_or(Bit::Zero);
        bits.resize(width, top);
        Bits { bits }
    }

    pub fn truncate(&self, width: usize) -> Bits {
        Bits {
            bits: self.bits[..width].to_vec(),
        }
    }

    fn arith(&self, other: &Bits, f: impl Fn(BigInt, BigInt) -> BigInt) -> Bits {
        match (self.to_signed(), other.to_signed()) {
            (Some(a), Some(b)) => Bits::from_bigint(&f(a, b), self.width()),
            _ => Bits::x(self.width()),
        }
    }

    pub fn add(&self, other: &Bits) -> Bits {
        self.arith(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Bits) -> Bits {
        self.arith(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Bits) -> Bits {
        self.arith(other, |a, b| a * b)
    }

    pub fn neg(&self) -> Bits {
        match self.to_signed() {
            Some(a) => Bits::from_bigint(&-a, self.width()),
            None => Bits::x(self.width()),
        }
    }

    fn bitwise(&self, other: &Bits, f: impl Fn(Bit, Bit) -> Bit) -> Bits {
        Bits {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn and(&self, other: &Bits) -> Bits {
        self.bitwise(other, |a, b| match (a, b) {
            (Bit::Zero, _) | (_, Bit::Zero) => Bit::Zero,
            (Bit::One, Bit::One) => Bit::One,
            _ => Bit::X,
        })
    }

    pub fn or(&self, other: &Bits) -> Bits {
        self.bitwise(other, |a, b| match (a, b) {
            (Bit::One, _) | (_, Bit::One) => Bit::One,
            (Bit::Zero, Bit::Zero) => Bit::Zero,
            _ => Bit::X,
        })
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        self.bitwise(other, |a, b| match (a, b) {
            (Bit::X, _) | (_, Bit::X) => Bit::X,
            (a, b) => Bit::from_bool(a != b),
        })
    }

    pub fn not(&self) -> Bits {
        Bits {
            bits: self
                .bits
                .iter()
                .map(|b| match b {
                    Bit::Zero => Bit::One,
                    Bit::One => Bit::Zero,
                    Bit::X => Bit::X,
                })
                .collect(),
        }
    }

    /// Logical shift left by the unsigned value of `amount`.
    pub fn shl(&self, amount: &Bits) -> Bits {
        let w = self.width();
        match amount.to_unsigned() {
            Some(n) => {
                let n = usize::try_from(n).unwrap_or(usize::MAX).min(w);
                let mut bits = vec![Bit::Zero; n];
                bits.extend_from_slice(&self.bits[..w - n]);
                Bits { bits }
            }
            None => Bits::x(w),
        }
    }

    /// Arithmetic shift right by the unsigned value of `amount`.
    pub fn shr(&self, amount: &Bits) -> Bits {
        let w = self.width();
        match amount.to_unsigned() {
            Some(n) => {
                let n = usize::try_from(n).unwrap_or(usize::MAX).min(w);
                let top = self.bits.last().copied().unwrap_or(Bit::Zero);
                let mut bits = self.bits[n..].to_vec();
                bits.resize(w, top);
                Bits { bits }
            }
            None => Bits::x(w),
        }
    }

    pub fn eq_bits(&self, other: &Bits) -> Bits {
        let mut unknown = false;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            match (a, b) {
                (Bit::X, _) | (_, Bit::X) => unknown = true,
                (a, b) if a != b => return Bits::from_bool(false),
                _ => {}
            }
        }
        if unknown {
            Bits::x(1)
        } else {
            Bits::from_bool(true)
        }
    }

    /// Signed comparison producing one bit.
    pub fn cmp_bits(&self, other: &Bits, f: impl Fn(&BigInt, &BigInt) -> bool) -> Bits {
        match (self.to_signed(), other.to_signed()) {
            (Some(a), Some(b)) => Bits::from_bool(f(&a, &b)),
            _ => Bits::x(1),
        }
    }

    /// `sel ? a : b`; an unknown selector keeps bits where both agree.
    pub fn mux(sel: &Bits, a: &Bits, b: &Bits) -> Bits {
        match sel.to_bool() {
            Some(true) => a.clone(),
            Some(false) => b.clone(),
            None => a.bitwise(b, |x, y| if x == y { x } else { Bit::X }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_and_print() {
        assert_eq!(Bits::from_i128(5, 4).to_string(), "0101");
        assert_eq!(Bits::from_i128(-1, 3).to_string(), "111");
        assert_eq!(Bits::from_i128(-3, 4).to_signed().unwrap(), BigInt::from(-3));
        assert_eq!(Bits::parse("1x0").unwrap().to_string(), "1x0");
    }

    #[test]
    fn arithmetic_wraps() {
        let a = Bits::from_i128(7, 4);
        let b = Bits::from_i128(1, 4);
        assert_eq!(a.add(&b).to_i128(), Some(-8));
        assert_eq!(a.mul(&b).to_i128(), Some(7));
        assert!(a.add(&Bits::x(4)).is_all_x());
    }

    #[test]
    fn x_propagation_in_logic() {
        let x = Bits::x(1);
        let zero = Bits::from_bool(false);
        let one = Bits::from_bool(true);
        assert_eq!(x.and(&zero), zero);
        assert_eq!(x.or(&one), one);
        assert!(x.xor(&one).is_all_x());
        assert_eq!(Bits::mux(&one, &zero, &x), zero);
        assert_eq!(Bits::mux(&x, &one, &one), one);
    }

    #[test]
    fn concat_and_slice() {
        let c = Bits::concat(&[Bits::from_bool(true), Bits::from_i128(2, 3)]);
        assert_eq!(c.to_string(), "1010");
        assert_eq!(c.slice(0, 3).to_string(), "010");
        assert_eq!(c.slice(3, 1).to_string(), "1");
    }

    #[test]
    fn shifts() {
        let a = Bits::from_i128(-4, 4);
        assert_eq!(a.shr(&Bits::from_i128(1, 4)).to_i128(), Some(-2));
        assert_eq!(Bits::from_i128(3, 4).shl(&Bits::from_i128(2, 4)).to_string(), "1100");
    }
}
