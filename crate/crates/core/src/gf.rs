//! Arithmetic over GF(2^q) for q in {1, 4, 8}.
//!
//! Multiplication goes through log/antilog tables built from a fixed
//! primitive polynomial per field size:
//!
//! | q | polynomial            | reduction |
//! |---|-----------------------|-----------|
//! | 1 | x + 1                 | `0x3`     |
//! | 4 | x^4 + x + 1           | `0x13`    |
//! | 8 | x^8 + x^4 + x^3 + x^2 + 1 | `0x11D` |
//!
//! Addition is XOR in every field.

use crate::error::{Error, Result};

/// A field element. Only the low `q` bits are ever set.
pub type Symbol = u8;

/// Log/antilog tables for one binary extension field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    q: u8,
    order: usize,
    exp: Vec<Symbol>,
    log: Vec<u16>,
}

impl Field {
    /// Builds the tables for GF(2^q). Only q = 1, 4, 8 are supported.
    pub fn new(q: u8) -> Result<Self> {
        let poly: u16 = match q {
            1 => 0x3,
            4 => 0x13,
            8 => 0x11D,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unsupported field exponent q={other}; expected 1, 4 or 8"
                )))
            }
        };
        let size = 1usize << q;
        let order = size - 1;
        // exp is doubled so that log(a) + log(b) needs no modular reduction.
        let mut exp = vec![0 as Symbol; 2 * order];
        let mut log = vec![0u16; size];
        let mut x: u16 = 1;
        for i in 0..order {
            exp[i] = x as Symbol;
            exp[i + order] = x as Symbol;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << q) != 0 {
                x ^= poly;
            }
        }
        Ok(Self { q, order, exp, log })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    /// Number of elements, 2^q.
    pub fn size(&self) -> usize {
        self.order + 1
    }

    /// Bit mask selecting a valid symbol out of a random byte.
    pub fn mask(&self) -> Symbol {
        (self.size() - 1) as Symbol
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            return 0;
        }
        let la = self.log[a as usize] as usize;
        let lb = self.log[b as usize] as usize;
        self.exp[la + lb]
    }

    /// Multiplicative inverse. Panics on zero.
    #[inline]
    pub fn inv(&self, a: Symbol) -> Symbol {
        assert!(a != 0, "zero has no inverse in GF(2^{})", self.q);
        let la = self.log[a as usize] as usize;
        self.exp[(self.order - la) % self.order]
    }

    #[inline]
    pub fn div(&self, a: Symbol, b: Symbol) -> Symbol {
        self.mul(a, self.inv(b))
    }

    /// `dst[i] ^= c * src[i]` for every i.
    #[inline]
    pub fn axpy(&self, dst: &mut [Symbol], c: Symbol, src: &[Symbol]) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        let lc = self.log[c as usize] as usize;
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= self.exp[lc + self.log[s as usize] as usize];
            }
        }
    }

    /// `v[i] = c * v[i]` for every i.
    #[inline]
    pub fn scale(&self, v: &mut [Symbol], c: Symbol) {
        if c == 1 {
            return;
        }
        for x in v.iter_mut() {
            *x = self.mul(*x, c);
        }
    }
}

/// Multiplies two symbols of GF(2^q). Builds the tables on each call; use
/// [`Field`] directly in loops.
pub fn gf_mul(a: Symbol, b: Symbol, q: u8) -> Result<Symbol> {
    let field = Field::new(q)?;
    if (a as usize) >= field.size() || (b as usize) >= field.size() {
        return Err(Error::InvalidInput(format!(
            "symbols {a}, {b} out of range for GF(2^{q})"
        )));
    }
    Ok(field.mul(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Carry-less multiply followed by polynomial reduction, bit by bit.
    fn shift_and_reduce(a: u8, b: u8, q: u8, poly: u16) -> u8 {
        let mut acc: u16 = 0;
        let mut aa = a as u16;
        let mut bb = b;
        while bb != 0 {
            if bb & 1 != 0 {
                acc ^= aa;
            }
            bb >>= 1;
            aa <<= 1;
            if aa & (1 << q) != 0 {
                aa ^= poly;
            }
        }
        acc as u8
    }

    #[test]
    fn mul_matches_shift_and_reduce_oracle() {
        for (q, poly) in [(1u8, 0x3u16), (4, 0x13), (8, 0x11D)] {
            let f = Field::new(q).unwrap();
            for a in 0..f.size() as u16 {
                for b in 0..f.size() as u16 {
                    assert_eq!(
                        f.mul(a as u8, b as u8),
                        shift_and_reduce(a as u8, b as u8, q, poly),
                        "q={q} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn gf_mul_examples() {
        assert_eq!(gf_mul(0, 77, 8).unwrap(), 0);
        assert_eq!(gf_mul(1, 77, 8).unwrap(), 77);
        assert_eq!(gf_mul(2, 128, 8).unwrap(), 29);
        assert_eq!(shift_and_reduce(2, 128, 8, 0x11D), 29);
    }

    #[test]
    fn inverses() {
        for q in [1u8, 4, 8] {
            let f = Field::new(q).unwrap();
            for a in 1..f.size() {
                assert_eq!(f.mul(a as u8, f.inv(a as u8)), 1);
            }
        }
    }

    #[test]
    fn unsupported_q_rejected() {
        assert!(Field::new(2).is_err());
        assert!(Field::new(16).is_err());
        assert!(gf_mul(16, 1, 4).is_err());
    }

    #[test]
    fn field_axioms_gf16() {
        let f = Field::new(4).unwrap();
        for a in 0..16u8 {
            for b in 0..16u8 {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in 0..16u8 {
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                }
            }
        }
    }
}
