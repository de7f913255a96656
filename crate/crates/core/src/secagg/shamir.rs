use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PrimeField;
use crate::{Error, Result};

/// A point `(x, y)` on the sharing polynomial; `x` is never 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub x: u64,
    pub y: u64,
}

fn check_params(field: &PrimeField, secret: u64, n: usize, t: usize) -> Result<()> {
    if t == 0 || t > n || n as u64 >= field.modulus() {
        return Err(Error::Field(format!(
            "need 1 ≤ t ≤ n < p, got t = {t}, n = {n}, p = {}",
            field.modulus()
        )));
    }
    if secret >= field.modulus() {
        return Err(Error::Field(format!("secret {secret} outside the field")));
    }
    Ok(())
}

/// Evaluate `secret + c_1·x + … + c_{t−1}·x^{t−1}` at `x = 1..=n`.
pub fn share_with_coefficients(
    field: &PrimeField,
    secret: u64,
    coefficients: &[u64],
    n: usize,
) -> Result<Vec<Share>> {
    check_params(field, secret, n, coefficients.len() + 1)?;
    Ok((1..=n as u64)
        .map(|x| {
            // Horner, highest degree first.
            let y = coefficients
                .iter()
                .rev()
                .fold(0, |acc, &c| field.add(field.mul(acc, x), field.elem(c)));
            Share {
                x,
                y: field.add(field.mul(y, x), secret),
            }
        })
        .collect())
}

/// Split `secret` into `n` shares, any `t` of which reconstruct it. The
/// polynomial coefficients are drawn uniformly from the field.
pub fn share<R: Rng>(
    field: &PrimeField,
    secret: u64,
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<Vec<Share>> {
    check_params(field, secret, n, t)?;
    let coefficients: Vec<u64> = (1..t)
        .map(|_| rng.random_range(0..field.modulus()))
        .collect();
    share_with_coefficients(field, secret, &coefficients, n)
}

/// Lagrange interpolation at `x = 0` from at least `t` distinct shares.
pub fn reconstruct(field: &PrimeField, shares: &[Share], t: usize) -> Result<u64> {
    if shares.len() < t || shares.is_empty() {
        return Err(Error::Threshold {
            needed: t.max(1),
            got: shares.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for s in shares {
        if s.x % field.modulus() == 0 {
            return Err(Error::Field("share at x = 0".into()));
        }
        if !seen.insert(s.x) {
            return Err(Error::DuplicateShare(s.x));
        }
    }
    let mut secret = 0;
    for (i, si) in shares.iter().enumerate() {
        let mut num = 1;
        let mut den = 1;
        for (j, sj) in shares.iter().enumerate() {
            if i != j {
                num = field.mul(num, field.neg(field.elem(sj.x)));
                den = field.mul(den, field.sub(field.elem(si.x), field.elem(sj.x)));
            }
        }
        let basis = field.mul(num, field.inv(den)?);
        secret = field.add(secret, field.mul(field.elem(si.y), basis));
    }
    Ok(secret)
}
