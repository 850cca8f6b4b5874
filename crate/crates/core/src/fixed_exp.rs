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

//! `exp(-r)` for rational `r >= 0`, evaluated as a fixed-point integer with
//! integer operations only.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

const GUARD_BITS: u32 = 64;

/// Returns `round(exp(-num/den) * 2^frac_bits)`, accurate to within one unit
/// in the last place.
///
/// The argument is split as `n + f` with `f` in `[0, 1)`; `exp(-f)` is summed
/// as an alternating Taylor series and `exp(-1)^n` is raised by squaring, all
/// at `frac_bits + 64` working bits.
pub fn exp_neg_fixed(num: &BigUint, den: &BigUint, frac_bits: u32) -> BigUint {
    assert!(!den.is_zero(), "exp_neg_fixed: zero denominator");
    let work = frac_bits + GUARD_BITS;
    let (whole, rem) = num.div_rem(den);

    let frac_part = exp_neg_series(&rem, den, work);
    let mut acc = frac_part;
    if !whole.is_zero() {
        let e_inv = exp_neg_series(&BigUint::one(), &BigUint::one(), work);
        let p = pow_fixed(&e_inv, &whole, work);
        acc = mul_fixed(&acc, &p, work);
    }
    round_shift(&acc, GUARD_BITS)
}

/// `exp(-num/den)` for `num < den` (or `num == den == 1`) at `work` bits.
fn exp_neg_series(num: &BigUint, den: &BigUint, work: u32) -> BigUint {
    let one = BigUint::one() << work;
    if num.is_zero() {
        return one;
    }
    let mut pos = one.clone();
    let mut neg = BigUint::zero();
    let mut term = one;
    let mut i: u32 = 1;
    loop {
        term = term * num / (den * BigUint::from(i));
        if term.is_zero() {
            break;
        }
        if i % 2 == 1 {
            neg += &term;
        } else {
            pos += &term;
        }
        i += 1;
    }
    pos - neg
}

fn mul_fixed(a: &BigUint, b: &BigUint, work: u32) -> BigUint {
    round_shift(&(a * b), work)
}

fn pow_fixed(base: &BigUint, exp: &BigUint, work: u32) -> BigUint {
    let mut result = BigUint::one() << work;
    let mut b = base.clone();
    let bits = exp.bits();
    for i in 0..bits {
        if exp.bit(i) {
            result = mul_fixed(&result, &b, work);
            if result.is_zero() {
                return result;
            }
        }
        if i + 1 < bits {
            b = mul_fixed(&b, &b, work);
        }
    }
    result
}

fn round_shift(x: &BigUint, shift: u32) -> BigUint {
    if shift == 0 {
        return x.clone();
    }
    (x + (BigUint::one() << (shift - 1))) >> shift
}
