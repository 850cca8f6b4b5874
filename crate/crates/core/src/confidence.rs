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

//! Exact binomial confidence machinery without floating point.
//!
//! [`clopper_pearson_lower`] binary-searches the dyadic grid `j / 2^g` for the
//! largest point whose binomial upper tail does not exceed `alpha`. Each probe
//! first brackets the tail with directed-rounding dyadic arithmetic (63-bit
//! mantissas, rounded down for one bound and up for the other); only when the
//! bracket straddles `alpha` is the tail summed exactly in big integers. The
//! decision is therefore always the exact one.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::RationalProb;

/// Default resolution of the lower-bound grid.
pub const DEFAULT_GRID_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfidenceError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(String),
    #[error("invalid binomial count: {0}")]
    InvalidCount(String),
    #[error("grid_bits must be in 16..=62, got {0}")]
    GridBits(u32),
}

/// `successes` out of `trials` Bernoulli draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinomialCount {
    successes: u64,
    trials: u64,
}

impl BinomialCount {
    pub fn new(successes: u64, trials: u64) -> Result<Self, ConfidenceError> {
        if trials == 0 {
            return Err(ConfidenceError::InvalidCount("trials must be >= 1".into()));
        }
        if successes > trials {
            return Err(ConfidenceError::InvalidCount(format!(
                "{successes} successes out of {trials} trials"
            )));
        }
        Ok(Self { successes, trials })
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }
}

fn check_alpha(alpha: &RationalProb) -> Result<(), ConfidenceError> {
    if alpha.is_zero() || alpha.is_one() {
        return Err(ConfidenceError::InvalidAlpha(alpha.to_string()));
    }
    Ok(())
}

/// One-sided `(1 - alpha)` Clopper-Pearson lower bound, rounded down to the
/// grid `j / 2^grid_bits`.
///
/// Returns the largest grid point `p` with `P[Bin(trials, p) >= successes] <= alpha`,
/// which never exceeds the exact bound and trails it by less than one grid
/// step. Zero successes give zero.
pub fn clopper_pearson_lower(
    count: BinomialCount,
    alpha: &RationalProb,
    grid_bits: u32,
) -> Result<RationalProb, ConfidenceError> {
    check_alpha(alpha)?;
    if !(16..=62).contains(&grid_bits) {
        return Err(ConfidenceError::GridBits(grid_bits));
    }
    if count.successes == 0 {
        return Ok(RationalProb::zero());
    }
    let probe = TailProbe::new(count, alpha, grid_bits);
    // tail(lo) <= alpha < tail(hi) throughout; tail(1) = 1 > alpha.
    let (mut lo, mut hi) = (0u64, 1u64 << grid_bits);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe.tail_at_most_alpha(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RationalProb::dyadic(lo, grid_bits).expect("grid point below one"))
}

struct TailProbe<'a> {
    n: u64,
    k: u64,
    grid_bits: u32,
    alpha: &'a RationalProb,
    one_minus_alpha: RationalProb,
}

impl<'a> TailProbe<'a> {
    fn new(count: BinomialCount, alpha: &'a RationalProb, grid_bits: u32) -> Self {
        Self {
            n: count.trials,
            k: count.successes,
            grid_bits,
            alpha,
            one_minus_alpha: alpha.complement(),
        }
    }

    /// Sum the upper tail directly when it has fewer terms than the lower one.
    fn use_upper(&self) -> bool {
        self.n - self.k < self.k
    }

    fn fast_path_ok(&self) -> bool {
        self.grid_bits <= 32 && self.n < (1 << 31)
    }

    /// Decides `P[Bin(n, j / 2^g) >= k] <= alpha` for `1 <= k <= n`.
    fn tail_at_most_alpha(&self, j: u64) -> bool {
        if j == 0 {
            return true;
        }
        let a = j;
        let b = (1u64 << self.grid_bits) - j;
        if self.fast_path_ok() {
            if self.use_upper() {
                let hi = self.upper_sum_dyadic(a, b, Round::Up);
                if hi.cmp_ratio(self.alpha) != Ordering::Greater {
                    return true;
                }
                let lo = self.upper_sum_dyadic(a, b, Round::Down);
                if lo.cmp_ratio(self.alpha) == Ordering::Greater {
                    return false;
                }
            } else {
                // tail <= alpha  <=>  P[X <= k-1] >= 1 - alpha
                let lo = self.lower_sum_dyadic(a, b, Round::Down);
                if lo.cmp_ratio(&self.one_minus_alpha) != Ordering::Less {
                    return true;
                }
                let hi = self.lower_sum_dyadic(a, b, Round::Up);
                if hi.cmp_ratio(&self.one_minus_alpha) == Ordering::Less {
                    return false;
                }
            }
        }
        self.exact(a, b)
    }

    /// `sum_{i=k}^{n} C(n,i) p^i q^{n-i}` with every step rounded in `dir`.
    fn upper_sum_dyadic(&self, a: u64, b: u64, dir: Round) -> Dyadic {
        let g = self.grid_bits as i64;
        let p = Dyadic::from_parts(a as u128, -g, dir);
        let mut term = p.pow(self.n, dir);
        let mut sum = term;
        let mut i = self.n;
        while i > self.k {
            i -= 1;
            // T_i = T_{i+1} (i+1) b / ((n-i) a)
            term = term.mul_small((i + 1) * b, dir).div_small((self.n - i) * a, dir);
            sum = sum.add(term, dir);
        }
        sum
    }

    /// `sum_{i=0}^{k-1} C(n,i) p^i q^{n-i}` with every step rounded in `dir`.
    fn lower_sum_dyadic(&self, a: u64, b: u64, dir: Round) -> Dyadic {
        let g = self.grid_bits as i64;
        let q = Dyadic::from_parts(b as u128, -g, dir);
        let mut term = q.pow(self.n, dir);
        let mut sum = term;
        for i in 0..self.k - 1 {
            // T_{i+1} = T_i (n-i) a / ((i+1) b)
            term = term.mul_small((self.n - i) * a, dir).div_small((i + 1) * b, dir);
            sum = sum.add(term, dir);
        }
        sum
    }

    /// Exact decision with big-integer sums over the common denominator 2^(g n).
    fn exact(&self, a: u64, b: u64) -> bool {
        let (n, k) = (self.n, self.k);
        let big_a = BigUint::from(a);
        let big_b = BigUint::from(b);
        let scale_bits = self.grid_bits as u64 * n;
        let denom_pow = BigUint::one() << scale_bits;
        if self.use_upper() {
            let mut term = big_a.pow(n as u32);
            let mut sum = term.clone();
            let mut i = n;
            while i > k {
                i -= 1;
                term = term * BigUint::from(i + 1) * &big_b / (BigUint::from(n - i) * &big_a);
                sum += &term;
            }
            sum * self.alpha.den() <= self.alpha.num() * denom_pow
        } else {
            let mut term = big_b.pow(n as u32);
            let mut sum = term.clone();
            for i in 0..k - 1 {
                term = term * BigUint::from(n - i) * &big_a / (BigUint::from(i + 1) * &big_b);
                sum += &term;
            }
            sum * self.one_minus_alpha.den() >= self.one_minus_alpha.num() * denom_pow
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Round {
    Down,
    Up,
}

/// `mant * 2^exp` with `mant` zero or normalized into `[2^62, 2^63)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dyadic {
    mant: u64,
    exp: i64,
}

const MANT_BITS: u32 = 63;

impl Dyadic {
    const ZERO: Dyadic = Dyadic { mant: 0, exp: 0 };

    fn from_parts(x: u128, exp: i64, dir: Round) -> Dyadic {
        if x == 0 {
            return Self::ZERO;
        }
        let bits = 128 - x.leading_zeros();
        if bits <= MANT_BITS {
            let s = MANT_BITS - bits;
            return Dyadic {
                mant: (x << s) as u64,
                exp: exp - s as i64,
            };
        }
        let s = bits - MANT_BITS;
        let mut q = x >> s;
        let inexact = x & ((1u128 << s) - 1) != 0;
        let mut e = exp + s as i64;
        if dir == Round::Up && inexact {
            q += 1;
            if q == 1u128 << MANT_BITS {
                q >>= 1;
                e += 1;
            }
        }
        Dyadic {
            mant: q as u64,
            exp: e,
        }
    }

    fn mul(self, other: Dyadic, dir: Round) -> Dyadic {
        Self::from_parts(self.mant as u128 * other.mant as u128, self.exp + other.exp, dir)
    }

    fn mul_small(self, m: u64, dir: Round) -> Dyadic {
        Self::from_parts(self.mant as u128 * m as u128, self.exp, dir)
    }

    fn div_small(self, m: u64, dir: Round) -> Dyadic {
        let num = (self.mant as u128) << 64;
        let (mut q, r) = (num / m as u128, num % m as u128);
        if dir == Round::Up && r != 0 {
            q += 1;
        }
        Self::from_parts(q, self.exp - 64, dir)
    }

    fn add(self, other: Dyadic, dir: Round) -> Dyadic {
        if self.mant == 0 {
            return other;
        }
        if other.mant == 0 {
            return self;
        }
        let (hi, lo) = if self.exp >= other.exp {
            (self, other)
        } else {
            (other, self)
        };
        let base = hi.exp - 63;
        let big = (hi.mant as u128) << 63;
        let (small, sticky) = if lo.exp >= base {
            ((lo.mant as u128) << (lo.exp - base), false)
        } else {
            let s = base - lo.exp;
            if s >= 64 {
                (0, true)
            } else {
                let v = lo.mant as u128;
                (v >> s, v & ((1u128 << s) - 1) != 0)
            }
        };
        let bump = (dir == Round::Up && sticky) as u128;
        Self::from_parts(big + small + bump, base, dir)
    }

    fn pow(self, mut e: u64, dir: Round) -> Dyadic {
        let mut result = Dyadic {
            mant: 1 << 62,
            exp: -62,
        };
        let mut base = self;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(base, dir);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(base, dir);
            }
        }
        result
    }

    fn cmp_ratio(&self, r: &RationalProb) -> Ordering {
        if self.mant == 0 {
            return if r.is_zero() {
                Ordering::Equal
            } else {
                Ordering::Less
            };
        }
        let m = BigUint::from(self.mant);
        let (lhs, rhs) = if self.exp >= 0 {
            ((m << self.exp as u64) * r.den(), r.num().clone())
        } else {
            (m * r.den(), r.num() << self.exp.unsigned_abs())
        };
        lhs.cmp(&rhs)
    }
}

/// Exact two-sided p-value of `k` successes in `n` fair-coin trials:
/// `min(1, 2 min(P[X >= k], P[X <= k]))`. The denominator divides `2^n`.
pub fn binomial_two_sided_pvalue(k: u64, n: u64) -> Result<RationalProb, ConfidenceError> {
    if n == 0 {
        return Err(ConfidenceError::InvalidCount("n must be >= 1".into()));
    }
    if k > n {
        return Err(ConfidenceError::InvalidCount(format!("k = {k} > n = {n}")));
    }
    let mut upper = BigUint::zero();
    let mut lower = BigUint::zero();
    let mut c = BigUint::one();
    for i in 0..=n {
        if i >= k {
            upper += &c;
        }
        if i <= k {
            lower += &c;
        }
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    let num = std::cmp::min(upper, lower) << 1u32;
    let den = BigUint::one() << n;
    if num >= den {
        Ok(RationalProb::one())
    } else {
        Ok(RationalProb::new(num, den).expect("below one"))
    }
}
