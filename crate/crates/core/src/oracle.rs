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

//! Exhaustive ground truth on tiny lattices.
//!
//! A [`TinyDomain`] is the box `[-w, w]^d` with at most 20000 points, either
//! wrapped (coordinates taken mod `2w + 1`) or clamped at the faces. Noise
//! is the discrete Gaussian truncated to `[-w, w]`, so on the wrapped lattice
//! every shift is a bijection and the smoothed class probabilities can be
//! computed exactly by enumeration.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;
use thiserror::Error;

use crate::certifier::{certified_radius, CertError, NoisyClassifier};
use crate::discrete_gaussian::{
    build_cdf_table, stream_rng, uniform_below, CdfTable, DiscreteGaussian, DiscreteGaussianSampler,
    NoiseError, NoiseParams,
};
use crate::rational::RationalProb;

pub const MAX_DIM: usize = 3;
pub const MAX_HALF_WIDTH: i64 = 8;
pub const MAX_POINTS: usize = 20_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Cert(#[from] CertError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Wrapped,
    Clamped,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Wrapped => "wrapped",
            Boundary::Clamped => "clamped",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TinyDomain {
    d: usize,
    w: i64,
    m: i64,
    boundary: Boundary,
    noise: NoiseParams,
    table: CdfTable,
    /// Product weight of every noise vector, indexed like domain points.
    noise_weights: Vec<BigUint>,
    /// The same weights as little-endian limbs, for fast exact accumulation.
    noise_limbs: Vec<Limbs>,
    /// Flattened coordinates of every noise vector.
    noise_coords: Vec<i64>,
    total: BigUint,
}

/// Fixed-width unsigned integer; a product of three u128 weights plus
/// up to 2^20 summands fits comfortably.
const LIMBS: usize = 7;
type Limbs = [u64; LIMBS];

fn to_limbs(v: &BigUint) -> Limbs {
    let digits = v.to_u64_digits();
    assert!(digits.len() < LIMBS, "weight product exceeds the limb width");
    let mut out = [0u64; LIMBS];
    out[..digits.len()].copy_from_slice(&digits);
    out
}

#[inline]
fn add_limbs(acc: &mut Limbs, v: &Limbs) {
    let mut carry = false;
    for (a, &b) in acc.iter_mut().zip(v) {
        let (s1, c1) = a.overflowing_add(b);
        let (s2, c2) = s1.overflowing_add(carry as u64);
        *a = s2;
        carry = c1 || c2;
    }
    debug_assert!(!carry);
}

fn from_limbs(v: &Limbs) -> BigUint {
    let mut bytes = Vec::with_capacity(LIMBS * 8);
    for l in v {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    BigUint::from_bytes_le(&bytes)
}

impl TinyDomain {
    pub fn new(
        d: usize,
        w: i64,
        sigma_num: u64,
        sigma_den: u64,
        boundary: Boundary,
    ) -> Result<Self, OracleError> {
        if !(1..=MAX_DIM).contains(&d) || !(1..=MAX_HALF_WIDTH).contains(&w) {
            return Err(OracleError::Domain(format!(
                "need 1 <= d <= {MAX_DIM}, 1 <= w <= {MAX_HALF_WIDTH}"
            )));
        }
        let m = 2 * w + 1;
        let points = (m as usize).pow(d as u32);
        if points > MAX_POINTS {
            return Err(OracleError::Domain(format!(
                "{points} points exceed {MAX_POINTS}"
            )));
        }
        let noise = NoiseParams::centered(sigma_num, sigma_den)?.with_enumeration_support(w as u64)?;
        let table = build_cdf_table(&noise)?;
        let dist = DiscreteGaussian::new(noise);
        let mut dom = Self {
            d,
            w,
            m,
            boundary,
            noise,
            table,
            noise_weights: Vec::new(),
            noise_limbs: Vec::new(),
            noise_coords: Vec::new(),
            total: BigUint::from(dist.total()).pow(d as u32),
        };
        dom.noise_weights = (0..points)
            .map(|i| {
                dom.coords(i)
                    .iter()
                    .fold(BigUint::one(), |acc, &n| acc * dist.weight(n))
            })
            .collect();
        dom.noise_limbs = dom.noise_weights.iter().map(to_limbs).collect();
        dom.noise_coords = (0..points).flat_map(|i| dom.coords(i)).collect();
        Ok(dom)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> i64 {
        self.w
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }

    pub fn num_points(&self) -> usize {
        self.noise_weights.len()
    }

    /// Common denominator of all exact probabilities: `total^d`.
    pub fn denominator(&self) -> &BigUint {
        &self.total
    }

    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            out.push((idx % self.m as usize) as i64 - self.w);
            idx /= self.m as usize;
        }
        out
    }

    pub fn index(&self, z: &[i64]) -> Result<usize, OracleError> {
        if z.len() != self.d || z.iter().any(|v| v.abs() > self.w) {
            return Err(OracleError::Domain(format!("point {z:?} outside the domain")));
        }
        Ok(self.index_unchecked(z))
    }

    fn index_unchecked(&self, z: &[i64]) -> usize {
        z.iter()
            .rev()
            .fold(0usize, |acc, &v| acc * self.m as usize + (v + self.w) as usize)
    }

    fn wrap(&self, v: i64) -> i64 {
        (v + self.w).rem_euclid(self.m) - self.w
    }

    /// `z + delta` under the boundary rule; `None` when a clamped translate
    /// leaves the box.
    pub fn translate(&self, z: &[i64], delta: &[i64]) -> Option<Vec<i64>> {
        let moved: Vec<i64> = z.iter().zip(delta).map(|(a, b)| a + b).collect();
        match self.boundary {
            Boundary::Wrapped => Some(moved.into_iter().map(|v| self.wrap(v)).collect()),
            Boundary::Clamped => moved.iter().all(|v| v.abs() <= self.w).then_some(moved),
        }
    }

    /// Where noise vector `n` sends point `z`.
    fn noisy(&self, z: &[i64], n: &[i64], out: &mut [i64]) {
        for ((o, &a), &b) in out.iter_mut().zip(z).zip(n) {
            *o = self.move_coord(a, b);
        }
    }

    #[inline]
    fn move_coord(&self, a: i64, b: i64) -> i64 {
        match self.boundary {
            Boundary::Wrapped => self.wrap(a + b),
            Boundary::Clamped => (a + b).clamp(-self.w, self.w),
        }
    }

    /// Index of the point noise vector `n_idx` sends `x` to.
    #[inline]
    fn noisy_index(&self, x: &[i64], n_idx: usize) -> usize {
        let n = &self.noise_coords[n_idx * self.d..(n_idx + 1) * self.d];
        let mut idx = 0usize;
        for i in (0..self.d).rev() {
            idx = idx * self.m as usize + (self.move_coord(x[i], n[i]) + self.w) as usize;
        }
        idx
    }

    /// Exact law of `x + n` as per-point masses over [`Self::denominator`].
    fn density(&self, x: &[i64]) -> Vec<BigUint> {
        let mut p = vec![[0u64; LIMBS]; self.num_points()];
        for (n_idx, w) in self.noise_limbs.iter().enumerate() {
            add_limbs(&mut p[self.noisy_index(x, n_idx)], w);
        }
        p.iter().map(from_limbs).collect()
    }

    /// Exact weighted class masses at `x`; divide by [`Self::denominator`].
    pub fn class_masses(&self, f: &TabularClassifier, x: &[i64]) -> Result<Vec<BigUint>, OracleError> {
        self.index(x)?;
        if f.labels.len() != self.num_points() {
            return Err(OracleError::Domain(
                "classifier table does not cover the domain".into(),
            ));
        }
        let mut masses = vec![[0u64; LIMBS]; f.classes];
        for (n_idx, w) in self.noise_limbs.iter().enumerate() {
            add_limbs(&mut masses[f.labels[self.noisy_index(x, n_idx)] as usize], w);
        }
        Ok(masses.iter().map(from_limbs).collect())
    }
}

/// Total map from domain points to class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabularClassifier {
    classes: usize,
    labels: Vec<u16>,
}

impl TabularClassifier {
    pub fn new(classes: usize, labels: Vec<u16>) -> Result<Self, OracleError> {
        if classes < 2 || labels.iter().any(|&l| l as usize >= classes) {
            return Err(OracleError::Domain(
                "labels must lie in 0..classes with classes >= 2".into(),
            ));
        }
        Ok(Self { classes, labels })
    }

    pub fn constant(domain: &TinyDomain, classes: usize, label: u16) -> Result<Self, OracleError> {
        Self::new(classes, vec![label; domain.num_points()])
    }

    pub fn from_fn(
        domain: &TinyDomain,
        classes: usize,
        f: impl Fn(&[i64]) -> u16,
    ) -> Result<Self, OracleError> {
        Self::new(
            classes,
            (0..domain.num_points()).map(|i| f(&domain.coords(i))).collect(),
        )
    }

    /// Each point independently takes `majority` with probability
    /// `q_percent / 100`, otherwise a uniformly chosen other class.
    pub fn random_biased<R: RngCore>(
        domain: &TinyDomain,
        classes: usize,
        majority: u16,
        q_percent: u64,
        rng: &mut R,
    ) -> Result<Self, OracleError> {
        let labels = (0..domain.num_points())
            .map(|_| {
                if uniform_below(rng, 100) < q_percent as u128 {
                    majority
                } else {
                    let other = uniform_below(rng, classes as u128 - 1) as u16;
                    if other >= majority {
                        other + 1
                    } else {
                        other
                    }
                }
            })
            .collect();
        Self::new(classes, labels)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn label_at(&self, domain: &TinyDomain, z: &[i64]) -> Result<u16, OracleError> {
        Ok(self.labels[domain.index(z)?])
    }

    pub fn set_label(&mut self, domain: &TinyDomain, z: &[i64], label: u16) -> Result<(), OracleError> {
        let idx = domain.index(z)?;
        self.labels[idx] = label;
        Ok(())
    }
}

/// `P[f(x + n) = c]` as an exact rational.
pub fn exact_smoothed_prob(
    domain: &TinyDomain,
    f: &TabularClassifier,
    x: &[i64],
    c: usize,
) -> Result<RationalProb, OracleError> {
    let masses = domain.class_masses(f, x)?;
    let mass = masses
        .get(c)
        .ok_or_else(|| OracleError::Domain(format!("class {c} out of range")))?;
    Ok(RationalProb::new(mass.clone(), domain.denominator().clone()).expect("mass <= total"))
}

fn argmax_big(masses: &[BigUint]) -> usize {
    let mut best = 0;
    for (i, m) in masses.iter().enumerate().skip(1) {
        if m > &masses[best] {
            best = i;
        }
    }
    best
}

/// Result of checking one certificate against exact probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceReport {
    pub label: usize,
    pub p_a: RationalProb,
    /// `None` when `p_a <= 1/2` (nothing to certify).
    pub quantile_z: Option<i64>,
    pub radius_sq_x4: u64,
    pub covered_checked: usize,
    /// Covered perturbations where some other class has mass `>=` the label's.
    pub violations: Vec<Vec<i64>>,
    /// Smallest `|delta|^2` at which the label loses strict majority, if any.
    pub min_breaking_l2_sq: Option<u64>,
}

impl InstanceReport {
    pub fn certified(&self) -> bool {
        self.quantile_z.is_some()
    }
}

/// Certifies `f` at `x` from its exact top-class probability and checks
/// every perturbation in the box against the exact smoothed classifier.
pub fn check_instance(
    domain: &TinyDomain,
    f: &TabularClassifier,
    x: &[i64],
) -> Result<InstanceReport, OracleError> {
    let masses = domain.class_masses(f, x)?;
    let label = argmax_big(&masses);
    let p_a = RationalProb::new(masses[label].clone(), domain.denominator().clone()).expect("mass <= total");
    let cert = certified_radius(domain.table(), &p_a)?;
    let (quantile_z, radius_sq_x4) = match cert {
        Some((z, r)) => (Some(z), r),
        None => (None, 0),
    };

    let mut report = InstanceReport {
        label,
        p_a,
        quantile_z,
        radius_sq_x4,
        covered_checked: 0,
        violations: Vec::new(),
        min_breaking_l2_sq: None,
    };
    for d_idx in 0..domain.num_points() {
        let delta = domain.coords(d_idx);
        let Some(moved) = domain.translate(x, &delta) else {
            continue;
        };
        let l2_sq: u64 = delta.iter().map(|v| (v * v) as u64).sum();
        let shifted = domain.class_masses(f, &moved)?;
        let holds = shifted
            .iter()
            .enumerate()
            .all(|(c, m)| c == label || m < &shifted[label]);
        if !holds {
            report.min_breaking_l2_sq = Some(report.min_breaking_l2_sq.map_or(l2_sq, |b| b.min(l2_sq)));
        }
        if cert.is_some() && crate::certifier::covers(radius_sq_x4, l2_sq) {
            report.covered_checked += 1;
            if !holds {
                report.violations.push(delta);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub rows: Vec<(String, InstanceReport)>,
}

impl SweepReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|(_, r)| r.violations.len()).sum()
    }

    pub fn certified(&self) -> usize {
        self.rows.iter().filter(|(_, r)| r.certified()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "instance,label,p_a_num,p_a_den,quantile_z,radius_sq_x4,covered_checked,violations,min_breaking_l2_sq\n",
        );
        for (name, r) in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                name,
                r.label,
                r.p_a.num(),
                r.p_a.den(),
                r.quantile_z.map(|z| z.to_string()).unwrap_or_default(),
                r.radius_sq_x4,
                r.covered_checked,
                r.violations.len(),
                r.min_breaking_l2_sq.map(|v| v.to_string()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// Runs [`check_instance`] over named instances.
pub fn certificate_soundness_sweep<'a>(
    domain: &TinyDomain,
    instances: impl IntoIterator<Item = (String, &'a TabularClassifier, Vec<i64>)>,
) -> Result<SweepReport, OracleError> {
    let mut report = SweepReport::default();
    for (name, f, x) in instances {
        report.rows.push((name, check_instance(domain, f, &x)?));
    }
    Ok(report)
}

/// Seeded random classifiers centred on the origin: a random majority class
/// held with a random bias in `[50, 98]` percent.
pub fn random_instances(
    domain: &TinyDomain,
    count: usize,
    classes: usize,
    seed: u64,
) -> Result<Vec<TabularClassifier>, OracleError> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let majority = uniform_below(&mut rng, classes as u128) as u16;
            let q = 50 + uniform_below(&mut rng, 49) as u64;
            TabularClassifier::random_biased(domain, classes, majority, q, &mut rng)
        })
        .collect()
}

/// Two-class half-space classifiers `<z, u> >= -k` around the origin for
/// every direction `u` with entries in `[-2, 2]` and every threshold giving
/// class 0 the majority. Axis directions put the class-0 probability
/// exactly on an atom of the CDF. Each is paired with a copy nudged just
/// above its probability by flipping the nearest class-1 point.
pub fn half_space_fixtures(domain: &TinyDomain) -> Result<Vec<(String, TabularClassifier)>, OracleError> {
    let d = domain.dim();
    let w = domain.half_width();
    let mut dirs: Vec<Vec<i64>> = Vec::new();
    for idx in 0..5usize.pow(d as u32) {
        let u: Vec<i64> = (0..d)
            .map(|i| (idx / 5usize.pow(i as u32) % 5) as i64 - 2)
            .collect();
        let g = u.iter().fold(0i64, |g, &v| num_integer::gcd(g, v));
        if g == 1 {
            dirs.push(u);
        }
    }
    let mut out = Vec::new();
    for u in &dirs {
        let reach: i64 = u.iter().map(|v| v.abs()).sum::<i64>() * w;
        for k in 0..reach {
            let f = TabularClassifier::from_fn(domain, 2, |z| {
                let dot: i64 = z.iter().zip(u).map(|(a, b)| a * b).sum();
                u16::from(dot < -k)
            })?;
            // Nearest point still voting class 1.
            let nearest = (0..domain.num_points())
                .map(|i| domain.coords(i))
                .filter(|z| f.label_at(domain, z).map(|l| l == 1).unwrap_or(false))
                .min_by_key(|z| z.iter().map(|v| v * v).sum::<i64>());
            let Some(z) = nearest else {
                break;
            };
            let dir = u.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            out.push((format!("halfspace u=({dir}) k={k}"), f.clone()));
            let mut g = f;
            g.set_label(domain, &z, 0)?;
            out.push((format!("halfspace+1 u=({dir}) k={k}"), g));
        }
    }
    Ok(out)
}

/// Checks that on the wrapped lattice the likelihood ratio between the
/// noise centred at `x + delta` and at `x` orders points exactly as
/// `<z, delta>` does.
///
/// Three routes: the exact integer exponent of the untruncated Gaussian,
/// the tabulated weights on points where neither noise value is truncated
/// or wrapped, and equality of the two normalizers.
pub fn likelihood_ratio_order_check(
    domain: &TinyDomain,
    x: &[i64],
    delta: &[i64],
) -> Result<bool, OracleError> {
    domain.index(x)?;
    if delta.len() != domain.dim() {
        return Err(OracleError::Domain("delta has the wrong dimension".into()));
    }
    let pts: Vec<Vec<i64>> = (0..domain.num_points()).map(|i| domain.coords(i)).collect();
    let inner = |z: &[i64]| -> i64 { z.iter().zip(delta).map(|(a, b)| a * b).sum() };
    // sum (z-x)^2 - sum (z-x-delta)^2, so that ratio = exp(E / (2 sigma^2)).
    let exponent = |z: &[i64]| -> i64 {
        z.iter()
            .zip(x)
            .zip(delta)
            .map(|((&zi, &xi), &di)| (zi - xi).pow(2) - (zi - xi - di).pow(2))
            .sum()
    };
    for z in &pts {
        for z2 in &pts {
            if (exponent(z).cmp(&exponent(z2))) != inner(z).cmp(&inner(z2)) {
                return Ok(false);
            }
        }
    }

    let dist = DiscreteGaussian::new(*domain.noise());
    const MIN_RAW_WEIGHT: u128 = 1 << 40;
    let weight = |v: &[i64]| -> Option<BigUint> {
        let mut acc = BigUint::one();
        for &c in v {
            let w = dist.weight(c);
            if w < MIN_RAW_WEIGHT {
                return None;
            }
            acc *= w;
        }
        Some(acc)
    };
    // (pY(z), pX(z)) on points whose noise offsets stay inside the support.
    let ratios: Vec<(i64, BigUint, BigUint)> = pts
        .iter()
        .filter_map(|z| {
            let nx: Vec<i64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
            let ny: Vec<i64> = nx.iter().zip(delta).map(|(a, b)| a - b).collect();
            Some((inner(z), weight(&ny)?, weight(&nx)?))
        })
        .collect();
    for (i1, y1, x1) in &ratios {
        for (i2, y2, x2) in &ratios {
            if i1 < i2 && (y1 * x2).cmp(&(y2 * x1)) != Ordering::Less {
                return Ok(false);
            }
        }
    }

    if domain.boundary() == Boundary::Wrapped {
        let shifted = domain
            .translate(x, delta)
            .ok_or_else(|| OracleError::Domain("translate failed".into()))?;
        let norm = |c: &[i64]| -> BigUint { domain.density(c).into_iter().sum() };
        if norm(x) != norm(&shifted) || norm(x) != *domain.denominator() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NpReport {
    pub checks: usize,
    pub failures: usize,
}

/// Enumerative check of the Neyman-Pearson lemma in both directions for
/// `X = x + n` and `Y = x + delta + n` on the domain.
///
/// For thresholds `t` drawn from the exact likelihood ratios, with
/// `L = {z : pY(z) / pX(z) <= t}`, every random set `h` with
/// `P[X in h] >= P[X in L]` must satisfy `P[Y in h] >= P[Y in L]`; with
/// `L = {z : ratio >= t}` and `P[X in h] <= P[X in L]`, `P[Y in h] <= P[Y in L]`.
pub fn neyman_pearson_check(
    domain: &TinyDomain,
    x: &[i64],
    delta: &[i64],
    sets_per_threshold: usize,
    seed: u64,
) -> Result<NpReport, OracleError> {
    let shifted = domain
        .translate(x, delta)
        .ok_or_else(|| OracleError::Domain("x + delta leaves the domain".into()))?;
    let px = domain.density(x);
    let py = domain.density(&shifted);
    let n = domain.num_points();
    // ratio(a) <= ratio(b) via cross-multiplication; zero pX means infinite ratio.
    let cmp_ratio = |a: usize, b: usize| -> Ordering { (&py[a] * &px[b]).cmp(&(&py[b] * &px[a])) };
    let mass = |p: &[BigUint], set: &[bool]| -> BigUint {
        p.iter().zip(set).filter(|(_, &s)| s).map(|(v, _)| v).sum()
    };

    let mut rng = stream_rng(seed, 1);
    let mut report = NpReport::default();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_ratio(a, b));
    let step = (n / 24).max(1);
    for t_pos in (0..n).step_by(step) {
        let t = order[t_pos];
        for upper in [false, true] {
            let in_l: Vec<bool> = (0..n)
                .map(|z| match cmp_ratio(z, t) {
                    Ordering::Less => !upper,
                    Ordering::Equal => true,
                    Ordering::Greater => upper,
                })
                .collect();
            let lx = mass(&px, &in_l);
            let ly = mass(&py, &in_l);
            for _ in 0..sets_per_threshold {
                let mut h: Vec<bool> = (0..n).map(|_| uniform_below(&mut rng, 2) == 1).collect();
                // Grow (part 1) or shrink (part 2) h until the premise holds.
                loop {
                    let hx = mass(&px, &h);
                    let ok = if upper { hx <= lx } else { hx >= lx };
                    if ok {
                        break;
                    }
                    let candidates: Vec<usize> = (0..n).filter(|&z| h[z] == upper).collect();
                    let pick = candidates[uniform_below(&mut rng, candidates.len() as u128) as usize];
                    h[pick] = !upper;
                }
                let hy = mass(&py, &h);
                let holds = if upper { hy <= ly } else { hy >= ly };
                report.checks += 1;
                if !holds {
                    report.failures += 1;
                }
            }
        }
    }
    Ok(report)
}

/// The tabular classifier under sampled noise, for Monte-Carlo runs
/// against the exact probabilities.
pub struct TabularVote<'a> {
    domain: &'a TinyDomain,
    f: &'a TabularClassifier,
    x: Vec<i64>,
    sampler: DiscreteGaussianSampler,
}

impl<'a> TabularVote<'a> {
    pub fn new(domain: &'a TinyDomain, f: &'a TabularClassifier, x: &[i64]) -> Result<Self, OracleError> {
        domain.index(x)?;
        Ok(Self {
            domain,
            f,
            x: x.to_vec(),
            sampler: DiscreteGaussianSampler::new(*domain.noise())?,
        })
    }
}

impl NoisyClassifier for TabularVote<'_> {
    fn num_classes(&self) -> usize {
        self.f.classes
    }

    fn tally<R: RngCore>(&self, rng: &mut R, samples: u64) -> Result<Vec<u64>, CertError> {
        let d = self.domain.dim();
        let mut counts = vec![0u64; self.f.classes];
        let mut n = vec![0i64; d];
        let mut t = vec![0i64; d];
        for _ in 0..samples {
            self.sampler.fill(rng, &mut n)?;
            self.domain.noisy(&self.x, &n, &mut t);
            counts[self.f.labels[self.domain.index_unchecked(&t)] as usize] += 1;
        }
        Ok(counts)
    }
}
