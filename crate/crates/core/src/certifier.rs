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

//! Monte-Carlo prediction and certification of the noise-smoothed classifier.
//!
//! The smoothed classifier returns the class the base model most often
//! outputs on `clamp(x + n)` with `n` drawn coordinate-wise from the discrete
//! Gaussian. A certificate carries the integer `radius_sq_x4 = (2 z)^2` where
//! `z` is the lattice quantile of the noise at the confidence lower bound;
//! a perturbation `delta` is covered iff `4 |delta|^2 < radius_sq_x4`.

use std::cmp::Ordering;

use rand::RngCore;
use thiserror::Error;

use crate::confidence::{
    binomial_two_sided_pvalue, clopper_pearson_lower, BinomialCount, ConfidenceError, DEFAULT_GRID_BITS,
};
use crate::discrete_gaussian::{
    build_cdf_table, stream_rng, uniform_below, CdfTable, DiscreteGaussianSampler, NoiseError, NoiseParams,
};
use crate::qnn::{perturb_into, LatticeInput, QnnError, QuantizedModel, Workspace};
use crate::rational::RationalProb;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("certificate is an abstention; it covers no perturbation")]
    Abstained,
    #[error("CDF table does not match the configured noise ({0})")]
    TableMismatch(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] QnnError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertConfig {
    pub noise: NoiseParams,
    pub n1: u64,
    pub n2: u64,
    pub alpha: RationalProb,
    pub seed: u64,
    pub grid_bits: u32,
}

impl CertConfig {
    pub fn new(
        noise: NoiseParams,
        n1: u64,
        n2: u64,
        alpha: RationalProb,
        seed: u64,
    ) -> Result<Self, CertError> {
        let cfg = Self {
            noise,
            n1,
            n2,
            alpha,
            seed,
            grid_bits: DEFAULT_GRID_BITS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CertError> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(CertError::Config("n1 and n2 must be at least 1".into()));
        }
        if self.alpha.is_zero() || self.alpha.is_one() {
            return Err(CertError::Config(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if self.noise.mu() != 0 {
            return Err(CertError::Config("certification noise must be centered".into()));
        }
        Ok(())
    }
}

/// Squared l2 magnitude of a perturbation, in lattice units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PerturbationBound {
    pub l2_sq: u64,
}

impl PerturbationBound {
    pub fn new(l2_sq: u64) -> Self {
        Self { l2_sq }
    }

    pub fn of_delta(delta: &[i64]) -> Self {
        Self {
            l2_sq: delta.iter().map(|&v| (v * v) as u64).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Certified {
        label: usize,
        p_lb: RationalProb,
        quantile_z: i64,
        radius_sq_x4: u64,
    },
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateResult {
    pub outcome: Outcome,
    /// Class selected in round 1, reported even when abstaining.
    pub candidate: usize,
    /// Round-2 hits of `candidate`.
    pub n2_count: u64,
    pub lower_bound: RationalProb,
    pub round1_counts: Vec<u64>,
    pub round2_counts: Vec<u64>,
}

impl CertificateResult {
    pub fn label(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Certified { label, .. } => Some(label),
            Outcome::Abstain => None,
        }
    }

    pub fn is_abstain(&self) -> bool {
        self.outcome == Outcome::Abstain
    }

    pub fn radius_sq_x4(&self) -> Option<u64> {
        match self.outcome {
            Outcome::Certified { radius_sq_x4, .. } => Some(radius_sq_x4),
            Outcome::Abstain => None,
        }
    }

    pub fn is_covered(&self, bound: PerturbationBound) -> Result<bool, CertError> {
        match self.outcome {
            Outcome::Certified { radius_sq_x4, .. } => Ok(covers(radius_sq_x4, bound.l2_sq)),
            Outcome::Abstain => Err(CertError::Abstained),
        }
    }
}

/// `4 * l2_sq < radius_sq_x4`, without overflow.
pub fn covers(radius_sq_x4: u64, l2_sq: u64) -> bool {
    (l2_sq as u128) * 4 < radius_sq_x4 as u128
}

/// Quantile and squared-radius form of a lower bound, or `None` when the
/// bound does not exceed one half.
///
/// The upper bound of the runner-up is taken as `1 - p_lb`; when the two
/// quantiles are not mirror images (the bound sits on an atom of the CDF)
/// the smaller gap is used. The gap is then reduced by one half-step on
/// each side: the lattice quantile `z` only guarantees that the
/// continuity-corrected quantile exceeds `z - 1/2`, and shifts that are
/// not axis-aligned can exploit the difference. The certified radius is
/// therefore `z - 1/2`, stored as `radius_sq_x4 = (2z - 1)^2`.
pub fn certified_radius(table: &CdfTable, p_lb: &RationalProb) -> Result<Option<(i64, u64)>, CertError> {
    if p_lb.cmp(&RationalProb::half()) != Ordering::Greater {
        return Ok(None);
    }
    let z_a = table.inverse_cdf(p_lb)?;
    let upper = p_lb.complement();
    let gap = if upper.is_zero() {
        2 * z_a
    } else {
        (z_a - table.inverse_cdf(&upper)?).min(2 * z_a)
    };
    debug_assert!(gap >= 0 && gap % 2 == 0);
    let diameter = (gap - 1).max(0) as u64;
    Ok(Some((z_a, diameter * diameter)))
}

/// A base classifier evaluated under fresh noise, abstracted so the
/// statistical machinery can run against mocks.
pub trait NoisyClassifier: Sync {
    fn num_classes(&self) -> usize;

    /// Per-class counts over `samples` independent noisy evaluations.
    fn tally<R: RngCore>(&self, rng: &mut R, samples: u64) -> Result<Vec<u64>, CertError>;
}

/// A quantized model evaluated on `clamp(x + noise)`.
pub struct ModelVote<'a> {
    model: &'a QuantizedModel,
    input: &'a LatticeInput,
    sampler: &'a DiscreteGaussianSampler,
}

impl<'a> ModelVote<'a> {
    pub fn new(
        model: &'a QuantizedModel,
        input: &'a LatticeInput,
        sampler: &'a DiscreteGaussianSampler,
    ) -> Result<Self, CertError> {
        if input.dim() != model.input_dim() {
            return Err(QnnError::InputShape {
                expected: model.input_dim(),
                got: input.dim(),
            }
            .into());
        }
        Ok(Self {
            model,
            input,
            sampler,
        })
    }
}

impl NoisyClassifier for ModelVote<'_> {
    fn num_classes(&self) -> usize {
        self.model.num_classes()
    }

    fn tally<R: RngCore>(&self, rng: &mut R, samples: u64) -> Result<Vec<u64>, CertError> {
        let d = self.input.dim();
        let mut counts = vec![0u64; self.num_classes()];
        let mut noise = vec![0i64; d];
        let mut noisy = vec![0u8; d];
        let mut ws = Workspace::new();
        for _ in 0..samples {
            self.sampler.fill(rng, &mut noise)?;
            perturb_into(self.input.pixels(), &noise, &mut noisy)?;
            counts[self.model.classify_with(&noisy, &mut ws)?] += 1;
        }
        Ok(counts)
    }
}

/// Mock classifier voting class 0 with probability `num / den`, else class 1.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliVote {
    num: u64,
    den: u64,
}

impl BernoulliVote {
    pub fn new(num: u64, den: u64) -> Result<Self, CertError> {
        if den == 0 || num > den {
            return Err(CertError::Config(format!("bad probability {num}/{den}")));
        }
        Ok(Self { num, den })
    }
}

impl NoisyClassifier for BernoulliVote {
    fn num_classes(&self) -> usize {
        2
    }

    fn tally<R: RngCore>(&self, rng: &mut R, samples: u64) -> Result<Vec<u64>, CertError> {
        let mut hits = 0;
        for _ in 0..samples {
            if uniform_below(rng, self.den as u128) < self.num as u128 {
                hits += 1;
            }
        }
        Ok(vec![hits, samples - hits])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub label: Option<usize>,
    pub counts: Vec<u64>,
    pub p_value: RationalProb,
}

/// Indices of the largest and second-largest counts; ties go to the lower index.
fn top_two(counts: &[u64]) -> (usize, usize) {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    (order[0], order.get(1).copied().unwrap_or(order[0]))
}

/// Certification driver for one noise level.
#[derive(Debug, Clone)]
pub struct Certifier {
    cfg: CertConfig,
    sampler: DiscreteGaussianSampler,
    table: CdfTable,
}

impl Certifier {
    pub fn new(cfg: CertConfig) -> Result<Self, CertError> {
        cfg.validate()?;
        let table = build_cdf_table(&cfg.noise)?;
        Self::with_table(cfg, table)
    }

    /// Uses a precomputed table, which must describe the configured noise.
    pub fn with_table(cfg: CertConfig, table: CdfTable) -> Result<Self, CertError> {
        cfg.validate()?;
        if table.params() != &cfg.noise {
            return Err(CertError::TableMismatch(format!(
                "table sigma {} trunc {}, config sigma {} trunc {}",
                table.params().sigma_string(),
                table.params().trunc(),
                cfg.noise.sigma_string(),
                cfg.noise.trunc()
            )));
        }
        let sampler = DiscreteGaussianSampler::new(cfg.noise)?;
        Ok(Self { cfg, sampler, table })
    }

    pub fn config(&self) -> &CertConfig {
        &self.cfg
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }

    pub fn sampler(&self) -> &DiscreteGaussianSampler {
        &self.sampler
    }

    pub fn certify(&self, model: &QuantizedModel, x: &LatticeInput) -> Result<CertificateResult, CertError> {
        self.certify_item(model, x, 0)
    }

    /// Certifies dataset item `item`; rounds 1 and 2 use rng streams
    /// `2 * item` and `2 * item + 1`.
    pub fn certify_item(
        &self,
        model: &QuantizedModel,
        x: &LatticeInput,
        item: u64,
    ) -> Result<CertificateResult, CertError> {
        let votes = ModelVote::new(model, x, &self.sampler)?;
        self.certify_votes(&votes, item)
    }

    pub fn certify_votes<V: NoisyClassifier>(
        &self,
        votes: &V,
        item: u64,
    ) -> Result<CertificateResult, CertError> {
        let mut rng1 = stream_rng(self.cfg.seed, 2 * item);
        let round1_counts = votes.tally(&mut rng1, self.cfg.n1)?;
        let (candidate, _) = top_two(&round1_counts);

        let mut rng2 = stream_rng(self.cfg.seed, 2 * item + 1);
        let round2_counts = votes.tally(&mut rng2, self.cfg.n2)?;
        let n2_count = round2_counts[candidate];

        let lower_bound = clopper_pearson_lower(
            BinomialCount::new(n2_count, self.cfg.n2)?,
            &self.cfg.alpha,
            self.cfg.grid_bits,
        )?;
        let outcome = match certified_radius(&self.table, &lower_bound)? {
            Some((quantile_z, radius_sq_x4)) => Outcome::Certified {
                label: candidate,
                p_lb: lower_bound.clone(),
                quantile_z,
                radius_sq_x4,
            },
            None => Outcome::Abstain,
        };
        Ok(CertificateResult {
            outcome,
            candidate,
            n2_count,
            lower_bound,
            round1_counts,
            round2_counts,
        })
    }

    pub fn predict(&self, model: &QuantizedModel, x: &LatticeInput, n: u64) -> Result<Prediction, CertError> {
        self.predict_item(model, x, n, 0)
    }

    /// Prediction for dataset item `item` from `n` noisy votes on stream `2 * item`.
    pub fn predict_item(
        &self,
        model: &QuantizedModel,
        x: &LatticeInput,
        n: u64,
        item: u64,
    ) -> Result<Prediction, CertError> {
        let votes = ModelVote::new(model, x, &self.sampler)?;
        self.predict_votes(&votes, n, item)
    }

    pub fn predict_votes<V: NoisyClassifier>(
        &self,
        votes: &V,
        n: u64,
        item: u64,
    ) -> Result<Prediction, CertError> {
        if n == 0 {
            return Err(CertError::Config("prediction needs at least one sample".into()));
        }
        let mut rng = stream_rng(self.cfg.seed, 2 * item);
        let counts = votes.tally(&mut rng, n)?;
        let (a, b) = top_two(&counts);
        let (n_a, n_b) = (counts[a], if a == b { 0 } else { counts[b] });
        let p_value = binomial_two_sided_pvalue(n_a, n_a + n_b)?;
        let label = (p_value <= self.cfg.alpha).then_some(a);
        Ok(Prediction {
            label,
            counts,
            p_value,
        })
    }
}
