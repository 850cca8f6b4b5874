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

//! The discrete Gaussian `N_Z(mu, sigma^2)` on the integer lattice.
//!
//! Probabilities are exact rationals built from one table of fixed-point
//! weights `w(k) ~ exp(-k^2 / 2 sigma^2) * 2^104`, so every comparison made
//! downstream (CDF lookups, quantiles, oracle sums) is an exact integer
//! comparison over a single consistent table. The support is truncated to
//! `[mu - trunc, mu + trunc]` and renormalized, which makes the mass sum to
//! one exactly.
//!
//! Sampling is independent of the weight table: it is the exact rejection
//! sampler built from discrete Laplace proposals and `Bernoulli(exp(-g))`
//! coins, driven only by uniform integer draws.

use std::io::{Read, Write};

use num_bigint::BigUint;
use num_integer::Integer;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::fixed_exp::exp_neg_fixed;
use crate::rational::RationalProb;

/// Fractional bits of the fixed-point weight table.
pub const WEIGHT_FRAC_BITS: u32 = 104;

/// Upper bound on the support size `2 * trunc + 1`. Keeps the weight total,
/// at most `2^24 * 2^104`, inside a `u128`.
pub const MAX_SUPPORT: u64 = 1 << 24;

/// Smallest default truncation bound, whatever the scale.
pub const MIN_DEFAULT_TRUNC: u64 = 16;

/// Rejection rounds allowed per draw before the sampler reports failure.
pub const SAMPLER_ITERATION_CAP: u32 = 1_000_000;

const CDF_MAGIC: &[u8; 7] = b"IRSCDF1";

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("invalid noise parameters: {0}")]
    InvalidParams(String),
    #[error("x = {x} lies outside the support [{lo}, {hi}]")]
    OutOfSupport { x: i64, lo: i64, hi: i64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("sampler failed: {0}")]
    Internal(String),
    #[error("cdf table format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Location, scale and truncation of a discrete Gaussian.
///
/// The scale is the reduced rational `sigma_num / sigma_den` in lattice
/// units (one unit is one pixel level out of 255).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseParams {
    mu: i64,
    sigma_num: u64,
    sigma_den: u64,
    trunc: u64,
}

impl NoiseParams {
    /// Parameters with the default truncation `max(ceil(10 sigma), 16)`.
    pub fn new(mu: i64, sigma_num: u64, sigma_den: u64) -> Result<Self, NoiseError> {
        if sigma_num == 0 || sigma_den == 0 {
            return Err(NoiseError::InvalidParams(format!(
                "sigma must be positive, got {sigma_num}/{sigma_den}"
            )));
        }
        let g = sigma_num.gcd(&sigma_den);
        let (sigma_num, sigma_den) = (sigma_num / g, sigma_den / g);
        let trunc = min_trunc(sigma_num, sigma_den).max(MIN_DEFAULT_TRUNC);
        Self::checked(mu, sigma_num, sigma_den, trunc)
    }

    /// Zero-centred parameters with integer scale `sigma`.
    pub fn lattice(sigma: u64) -> Result<Self, NoiseError> {
        Self::new(0, sigma, 1)
    }

    pub fn centered(sigma_num: u64, sigma_den: u64) -> Result<Self, NoiseError> {
        Self::new(0, sigma_num, sigma_den)
    }

    /// Overrides the truncation bound; it may not drop below `ceil(10 sigma)`.
    pub fn with_trunc(self, trunc: u64) -> Result<Self, NoiseError> {
        let floor = min_trunc(self.sigma_num, self.sigma_den);
        if trunc < floor {
            return Err(NoiseError::InvalidParams(format!(
                "trunc {trunc} is below ceil(10 sigma) = {floor}"
            )));
        }
        Self::checked(self.mu, self.sigma_num, self.sigma_den, trunc)
    }

    /// Truncation below `ceil(10 sigma)`, for lattices small enough to
    /// enumerate. The distribution is still renormalized exactly over the
    /// narrow support, so it is a different (heavier-truncated) law.
    pub fn with_enumeration_support(self, trunc: u64) -> Result<Self, NoiseError> {
        if trunc == 0 {
            return Err(NoiseError::InvalidParams("trunc must be >= 1".into()));
        }
        Self::checked(self.mu, self.sigma_num, self.sigma_den, trunc)
    }

    pub fn with_mu(self, mu: i64) -> Self {
        Self { mu, ..self }
    }

    fn checked(mu: i64, sigma_num: u64, sigma_den: u64, trunc: u64) -> Result<Self, NoiseError> {
        if 2 * trunc + 1 > MAX_SUPPORT {
            return Err(NoiseError::InvalidParams(format!(
                "support 2*{trunc}+1 exceeds {MAX_SUPPORT} points"
            )));
        }
        if (sigma_num as u128) * (sigma_num as u128) > (u64::MAX as u128) {
            return Err(NoiseError::InvalidParams(format!(
                "sigma numerator {sigma_num} too large"
            )));
        }
        Ok(Self {
            mu,
            sigma_num,
            sigma_den,
            trunc,
        })
    }

    pub fn mu(&self) -> i64 {
        self.mu
    }

    pub fn sigma_num(&self) -> u64 {
        self.sigma_num
    }

    pub fn sigma_den(&self) -> u64 {
        self.sigma_den
    }

    pub fn trunc(&self) -> u64 {
        self.trunc
    }

    pub fn support(&self) -> (i64, i64) {
        let t = self.trunc as i64;
        (self.mu - t, self.mu + t)
    }

    /// Renders the scale as `"num/den"`, or just `"num"` when integral.
    pub fn sigma_string(&self) -> String {
        if self.sigma_den == 1 {
            self.sigma_num.to_string()
        } else {
            format!("{}/{}", self.sigma_num, self.sigma_den)
        }
    }
}

/// Parses a scale given as an integer (`"32"`) or a ratio (`"65/2"`).
pub fn parse_sigma(s: &str) -> Result<(u64, u64), NoiseError> {
    let bad = || NoiseError::InvalidParams(format!("cannot parse sigma {s:?}"));
    let (n, d) = match s.trim().split_once('/') {
        Some((n, d)) => (
            n.trim().parse().map_err(|_| bad())?,
            d.trim().parse().map_err(|_| bad())?,
        ),
        None => (s.trim().parse().map_err(|_| bad())?, 1),
    };
    if n == 0 || d == 0 {
        return Err(bad());
    }
    Ok((n, d))
}

fn min_trunc(sigma_num: u64, sigma_den: u64) -> u64 {
    (10 * sigma_num).div_ceil(sigma_den)
}

/// Fixed-point weights `w(0..=trunc)` for the scale of `params`. Each weight
/// is at least one unit so every support point carries positive mass.
fn weight_table(params: &NoiseParams) -> Vec<u128> {
    let a = BigUint::from(params.sigma_num);
    let b = BigUint::from(params.sigma_den);
    // k^2 / (2 sigma^2) = k^2 b^2 / (2 a^2)
    let den = BigUint::from(2u8) * &a * &a;
    let b2 = &b * &b;
    (0..=params.trunc)
        .map(|k| {
            let num = BigUint::from(k) * BigUint::from(k) * &b2;
            let w = exp_neg_fixed(&num, &den, WEIGHT_FRAC_BITS);
            let w: u128 = w.try_into().expect("weights never exceed 2^104");
            w.max(1)
        })
        .collect()
}

/// A discrete Gaussian with its weight table evaluated once.
#[derive(Debug, Clone)]
pub struct DiscreteGaussian {
    params: NoiseParams,
    weights: Vec<u128>,
    total: u128,
}

impl DiscreteGaussian {
    pub fn new(params: NoiseParams) -> Self {
        let weights = weight_table(&params);
        let tail: u128 = weights[1..].iter().sum();
        let total = weights[0] + 2 * tail;
        Self {
            params,
            weights,
            total,
        }
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    /// Unnormalized weight of offset `k` from the location; zero off support.
    pub fn weight(&self, k: i64) -> u128 {
        let a = k.unsigned_abs();
        if a > self.params.trunc {
            0
        } else {
            self.weights[a as usize]
        }
    }

    /// Normalizing constant: the sum of weights over the support.
    pub fn total(&self) -> u128 {
        self.total
    }

    pub fn pmf(&self, x: i64) -> Result<RationalProb, NoiseError> {
        let (lo, hi) = self.params.support();
        if x < lo || x > hi {
            return Err(NoiseError::OutOfSupport { x, lo, hi });
        }
        let w = self.weight(x - self.params.mu);
        Ok(RationalProb::new(w, self.total).expect("weight never exceeds the total"))
    }
}

/// Exact `P[X = x]` for `X ~ N_Z(mu, sigma^2)` truncated to its support.
pub fn pmf(params: &NoiseParams, x: i64) -> Result<RationalProb, NoiseError> {
    DiscreteGaussian::new(*params).pmf(x)
}

/// Cumulative masses of the zero-centred law over `-trunc..=trunc`, held as
/// integer partial sums over a common denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    params: NoiseParams,
    cum: Vec<u128>,
    total: u128,
}

pub fn build_cdf_table(params: &NoiseParams) -> Result<CdfTable, NoiseError> {
    if params.mu != 0 {
        return Err(NoiseError::Argument(format!(
            "cdf tables are centred; got mu = {}",
            params.mu
        )));
    }
    let dg = DiscreteGaussian::new(*params);
    let t = params.trunc as i64;
    let mut run = 0u128;
    let cum = (-t..=t)
        .map(|z| {
            run += dg.weight(z);
            run
        })
        .collect();
    Ok(CdfTable {
        params: *params,
        cum,
        total: dg.total,
    })
}

impl CdfTable {
    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn trunc(&self) -> i64 {
        self.params.trunc as i64
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    /// Partial sums, ascending over the support.
    pub fn cumulative(&self) -> &[u128] {
        &self.cum
    }

    /// Numerator of `Phi(z)` over [`Self::total`]; saturates outside the support.
    pub fn cdf_numerator(&self, z: i64) -> u128 {
        let t = self.trunc();
        if z < -t {
            0
        } else if z >= t {
            self.total
        } else {
            self.cum[(z + t) as usize]
        }
    }

    pub fn cdf(&self, z: i64) -> RationalProb {
        RationalProb::new(self.cdf_numerator(z), self.total).expect("partial sum <= total")
    }

    /// Generalized quantile `min { z : Phi(z) >= p }` for `p` in `(0, 1]`.
    pub fn inverse_cdf(&self, p: &RationalProb) -> Result<i64, NoiseError> {
        if p.is_zero() {
            return Err(NoiseError::Argument("quantile of p = 0 is undefined".into()));
        }
        let total = BigUint::from(self.total);
        let target = p.num() * &total;
        let den = p.den();
        // First index whose partial sum reaches p.
        let idx = self.cum.partition_point(|&c| BigUint::from(c) * den < target);
        debug_assert!(idx < self.cum.len());
        Ok(idx as i64 - self.trunc())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), NoiseError> {
        w.write_all(CDF_MAGIC)?;
        let t: u32 = self
            .params
            .trunc
            .try_into()
            .map_err(|_| NoiseError::Argument("trunc exceeds u32".into()))?;
        w.write_all(&t.to_le_bytes())?;
        w.write_all(&self.params.sigma_num.to_le_bytes())?;
        w.write_all(&self.params.sigma_den.to_le_bytes())?;
        for &c in &self.cum {
            w.write_all(&c.to_le_bytes())?;
            w.write_all(&self.total.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(27 + self.cum.len() * 32);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Parses and validates a serialized table: common denominator, strictly
    /// increasing sums ending at the total, and a symmetric pmf.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NoiseError> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(7)? != CDF_MAGIC {
            return Err(r.error_at(0, "bad magic, expected IRSCDF1"));
        }
        let trunc = u32::from_le_bytes(r.array()?) as u64;
        let sigma_num = u64::from_le_bytes(r.array()?);
        let sigma_den = u64::from_le_bytes(r.array()?);
        let params = NoiseParams::new(0, sigma_num, sigma_den)
            .and_then(|p| p.with_enumeration_support(trunc))
            .map_err(|e| r.error_at(7, &e.to_string()))?;
        if params.sigma_num != sigma_num {
            return Err(r.error_at(11, "sigma is not in lowest terms"));
        }
        let n = 2 * trunc as usize + 1;
        let mut cum = Vec::with_capacity(n);
        let mut total = None;
        for i in 0..n {
            let at = r.pos;
            let num = u128::from_le_bytes(r.array()?);
            let den = u128::from_le_bytes(r.array()?);
            match total {
                None => total = Some(den),
                Some(t) if t != den => {
                    return Err(r.error_at(at + 16, "entries do not share one denominator"))
                }
                _ => {}
            }
            if let Some(&prev) = cum.last() {
                if num <= prev {
                    return Err(r.error_at(at, &format!("entry {i} is not increasing")));
                }
            } else if num == 0 {
                return Err(r.error_at(at, "first entry has zero mass"));
            }
            cum.push(num);
        }
        if r.pos != bytes.len() {
            return Err(r.error_at(r.pos, "trailing bytes"));
        }
        let total = total.expect("support is never empty");
        if *cum.last().expect("non-empty") != total {
            return Err(r.error_at(r.pos - 32, "final entry is not 1"));
        }
        let table = CdfTable { params, cum, total };
        let t = table.trunc();
        for z in 0..=t {
            let up = table.cdf_numerator(z) - table.cdf_numerator(z - 1);
            let down = table.cdf_numerator(-z) - table.cdf_numerator(-z - 1);
            if up != down {
                return Err(r.error_at(27, &format!("pmf is not symmetric at {z}")));
            }
        }
        Ok(table)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, NoiseError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NoiseError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(self.error_at(self.pos, "unexpected end of input"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], NoiseError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn error_at(&self, offset: usize, msg: &str) -> NoiseError {
        NoiseError::Format {
            offset,
            msg: msg.to_string(),
        }
    }
}

/// Deterministic generator for stream `stream` under root seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `[0, n)` by masked rejection on 64-bit words.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, n: u128) -> u128 {
    assert!(n > 0, "uniform_below(0)");
    if n == 1 {
        return 0;
    }
    let bits = 128 - (n - 1).leading_zeros();
    let mask = if bits == 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    };
    loop {
        let mut x = rng.next_u64() as u128;
        if bits > 64 {
            x |= (rng.next_u64() as u128) << 64;
        }
        x &= mask;
        if x < n {
            return x;
        }
    }
}

/// `Bernoulli(num/den)` for `num <= den`.
fn bernoulli<R: RngCore + ?Sized>(rng: &mut R, num: u128, den: u128) -> bool {
    uniform_below(rng, den) < num
}

/// `Bernoulli(exp(-num/den))` for `num <= den`.
fn bernoulli_exp_unit<R: RngCore + ?Sized>(rng: &mut R, num: u128, den: u128) -> bool {
    if num == 0 {
        return true;
    }
    let mut k: u128 = 1;
    loop {
        let d = den.saturating_mul(k);
        if bernoulli(rng, num, d) {
            k += 1;
        } else {
            return k % 2 == 1;
        }
    }
}

/// `Bernoulli(exp(-num/den))` for any non-negative ratio.
fn bernoulli_exp<R: RngCore + ?Sized>(rng: &mut R, num: u128, den: u128) -> bool {
    let whole = num / den;
    let mut i = 0;
    while i < whole {
        if !bernoulli_exp_unit(rng, 1, 1) {
            return false;
        }
        i += 1;
    }
    bernoulli_exp_unit(rng, num % den, den)
}

/// Discrete Laplace with integer scale `t`: `P[Y = y] ~ exp(-|y| / t)`.
fn discrete_laplace<R: RngCore + ?Sized>(rng: &mut R, t: u128) -> SignedMag {
    loop {
        let u = uniform_below(rng, t);
        if !bernoulli_exp(rng, u, t) {
            continue;
        }
        let mut v: u128 = 0;
        while bernoulli_exp_unit(rng, 1, 1) {
            v += 1;
        }
        let y = u + t * v;
        let negative = bernoulli(rng, 1, 2);
        if negative && y == 0 {
            continue;
        }
        return SignedMag { mag: y, negative };
    }
}

struct SignedMag {
    mag: u128,
    negative: bool,
}

/// Exact sampler for a truncated discrete Gaussian.
#[derive(Debug, Clone)]
pub struct DiscreteGaussianSampler {
    params: NoiseParams,
    laplace_scale: u128,
    // gamma(y) = (|y| t b^2 - a^2)^2 / (2 a^2 t^2 b^2)
    shift: u128,
    lead: u128,
    gamma_den: u128,
}

impl DiscreteGaussianSampler {
    pub fn new(params: NoiseParams) -> Result<Self, NoiseError> {
        let a = params.sigma_num as u128;
        let b = params.sigma_den as u128;
        let t = a / b + 1;
        let overflow = || NoiseError::InvalidParams("sigma too large for the sampler".into());
        let lead = t.checked_mul(b * b).ok_or_else(overflow)?;
        let shift = a * a;
        let gamma_den = (2 * a * a)
            .checked_mul(t * t)
            .and_then(|v| v.checked_mul(b * b))
            .ok_or_else(overflow)?;
        Ok(Self {
            params,
            laplace_scale: t,
            shift,
            lead,
            gamma_den,
        })
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<i64, NoiseError> {
        let trunc = self.params.trunc as u128;
        for _ in 0..SAMPLER_ITERATION_CAP {
            let y = discrete_laplace(rng, self.laplace_scale);
            let scaled = y
                .mag
                .checked_mul(self.lead)
                .ok_or_else(|| NoiseError::Internal("proposal overflow".into()))?;
            let diff = scaled.abs_diff(self.shift);
            let gamma_num = diff
                .checked_mul(diff)
                .ok_or_else(|| NoiseError::Internal("acceptance overflow".into()))?;
            if bernoulli_exp(rng, gamma_num, self.gamma_den) && y.mag <= trunc {
                let mag = y.mag as i64;
                return Ok(self.params.mu + if y.negative { -mag } else { mag });
            }
        }
        Err(NoiseError::Internal(format!(
            "no sample accepted after {SAMPLER_ITERATION_CAP} rounds"
        )))
    }

    /// Fills `out` with i.i.d. draws.
    pub fn fill<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [i64]) -> Result<(), NoiseError> {
        for slot in out {
            *slot = self.sample(rng)?;
        }
        Ok(())
    }
}

/// One draw from `N_Z(mu, sigma^2)` truncated to the support of `params`.
pub fn sample<R: RngCore + ?Sized>(params: &NoiseParams, rng: &mut R) -> Result<i64, NoiseError> {
    DiscreteGaussianSampler::new(*params)?.sample(rng)
}

/// `count` pre-drawn i.i.d. noise vectors of length `dim`.
pub fn sample_noise_pool<R: RngCore + ?Sized>(
    params: &NoiseParams,
    count: usize,
    dim: usize,
    rng: &mut R,
) -> Result<Vec<Vec<i64>>, NoiseError> {
    if count == 0 {
        return Err(NoiseError::Argument("noise pool count must be >= 1".into()));
    }
    let sampler = DiscreteGaussianSampler::new(*params)?;
    (0..count)
        .map(|_| {
            let mut v = vec![0i64; dim];
            sampler.fill(rng, &mut v)?;
            Ok(v)
        })
        .collect()
}
