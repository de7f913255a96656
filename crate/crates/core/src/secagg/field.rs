use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The Mersenne prime 2^61 − 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Arithmetic modulo a prime `p < 2^63`. Elements are plain `u64` values in
/// `0..p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeField {
    p: u64,
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField { p: MERSENNE_61 }
    }
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 63 || !is_prime(p) {
            return Err(Error::Field(format!("{p} is not a prime below 2^63")));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Reduce any `u64` into the field.
    pub fn elem(&self, v: u64) -> u64 {
        v % self.p
    }

    /// Map a signed integer into the field.
    pub fn from_i128(&self, v: i128) -> u64 {
        v.rem_euclid(self.p as i128) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.p) {
            return Err(Error::Field("zero has no inverse".into()));
        }
        Ok(self.pow(a, self.p - 2))
    }

    /// Element-wise sum of two vectors, in place.
    pub fn add_assign(&self, acc: &mut [u64], other: &[u64]) {
        for (a, b) in acc.iter_mut().zip(other) {
            *a = self.add(*a, *b);
        }
    }

    pub fn sub_assign(&self, acc: &mut [u64], other: &[u64]) {
        for (a, b) in acc.iter_mut().zip(other) {
            *a = self.sub(*a, *b);
        }
    }
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for b in BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'bases: for a in BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        assert!(is_prime(257));
        assert!(is_prime(MERSENNE_61));
        assert!(!is_prime(256));
        assert!(!is_prime(561));
        assert!(PrimeField::new(1 << 20).is_err());
    }

    #[test]
    fn arithmetic_mod_257() {
        let f = PrimeField::new(257).unwrap();
        assert_eq!(f.add(200, 100), 43);
        assert_eq!(f.sub(3, 5), 255);
        assert_eq!(f.neg(0), 0);
        assert_eq!(f.mul(f.inv(7).unwrap(), 7), 1);
        assert_eq!(f.from_i128(-1), 256);
        assert!(f.inv(0).is_err());
    }

    #[test]
    fn inverse_in_large_field() {
        let f = PrimeField::default();
        for a in [1, 2, 12345, MERSENNE_61 - 1] {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
    }
}
