// Copyright 2026 The IntRS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Exact probabilities as reduced ratios of big integers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("probability {0} exceeds 1")]
    AboveOne(String),
    #[error("cannot parse probability {0:?}")]
    Parse(String),
}

/// A probability `num/den` in `[0, 1]`, always stored in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalProb {
    num: BigUint,
    den: BigUint,
}

impl RationalProb {
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self, RationalError> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        if num > den {
            return Err(RationalError::AboveOne(format!("{num}/{den}")));
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: BigUint, den: BigUint) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        if g.is_one() {
            Self { num, den }
        } else {
            Self {
                num: num / &g,
                den: den / g,
            }
        }
    }

    pub fn zero() -> Self {
        Self {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    pub fn one() -> Self {
        Self {
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    pub fn half() -> Self {
        Self {
            num: BigUint::one(),
            den: BigUint::from(2u8),
        }
    }

    /// `j / 2^bits`.
    pub fn dyadic(j: u64, bits: u32) -> Result<Self, RationalError> {
        Self::new(BigUint::from(j), BigUint::one() << bits)
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// `1 - self`.
    pub fn complement(&self) -> Self {
        Self::reduced(&self.den - &self.num, self.den.clone())
    }

    /// Compares `self` against `num/den` without building the second value.
    pub fn cmp_ratio(&self, num: &BigUint, den: &BigUint) -> Ordering {
        (&self.num * den).cmp(&(num * &self.den))
    }
}

impl Ord for RationalProb {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_ratio(&other.num, &other.den)
    }
}

impl PartialOrd for RationalProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `"num/den"`, a plain integer (`"0"` or `"1"`), or a decimal such as
/// `"0.001"`, which is read exactly as `1/1000`.
impl FromStr for RationalProb {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || RationalError::Parse(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: BigUint = n.trim().parse().map_err(|_| bad())?;
            let d: BigUint = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: BigUint = if int.is_empty() {
                BigUint::zero()
            } else {
                int.parse().map_err(|_| bad())?
            };
            let scale = BigUint::from(10u8).pow(frac.len() as u32);
            let frac: BigUint = frac.parse().map_err(|_| bad())?;
            return Self::new(int * &scale + frac, scale);
        }
        let n: BigUint = s.parse().map_err(|_| bad())?;
        Self::new(n, BigUint::one())
    }
}
