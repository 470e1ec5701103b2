//! Quasi-random draw machinery for simulated maximum likelihood.

use crate::error::{Error, Result};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Radical-inverse (Halton) sequence for a prime base, with the first `skip`
/// elements discarded. Values are strictly inside (0, 1).
pub fn halton_sequence(count: usize, base: u64, skip: usize) -> Result<Vec<f64>> {
    if !is_prime(base) {
        return Err(Error::CompositeBase(base));
    }
    if count == 0 {
        return Err(Error::NoDraws);
    }
    Ok((1..=(skip + count))
        .skip(skip)
        .map(|i| radical_inverse(i as u64, base))
        .collect())
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
