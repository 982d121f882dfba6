use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_PRIMORIAL_ARG: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primorial {
    pub x: u64,
    /// Decimal digits of the product.
    pub value: String,
    pub ln_value: f64,
    /// `ln(product) / (x ln x)`.
    pub ratio: f64,
}

impl Primorial {
    pub fn as_biguint(&self) -> BigUint {
        self.value.parse().expect("primorial stores decimal digits")
    }
}

pub fn primes_up_to(x: u64) -> Vec<u64> {
    let n = x as usize;
    let mut sieve = vec![true; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if sieve[i] {
            out.push(i as u64);
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
    }
    out
}

/// Product of the primes `≤ x`.
pub fn primorial(x: u64) -> Result<Primorial> {
    if !(2..=MAX_PRIMORIAL_ARG).contains(&x) {
        return Err(Error::InvalidParameter(format!("primorial argument {x} outside [2, 10^4]")));
    }
    let primes = primes_up_to(x);
    let value = primes.iter().fold(BigUint::from(1u32), |acc, &p| acc * p);
    let ln_value: f64 = primes.iter().map(|&p| (p as f64).ln()).sum();
    let xf = x as f64;
    Ok(Primorial {
        x,
        value: value.to_string(),
        ln_value,
        ratio: ln_value / (xf * xf.ln()),
    })
}
