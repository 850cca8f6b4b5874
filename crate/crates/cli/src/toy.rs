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

//! The bundled toy model: a nearest-centroid classifier over noisy blob
//! data, written as a two-layer int8 network.
//!
//! Centroids are averaged over `TOY_AUGMENT` noisy, clamped copies of each
//! training item, so the model matches the noise it is certified under. The
//! network scores every ordered class pair `(b, a)` with the integer
//! hyperplane halfway between the two centroids, applies a ReLU, and gives
//! class `a` the logit `-sum_b relu(score(b, a))`. A class wins exactly when
//! no other centroid is closer, up to rounding of the weights.

use intrs_core::discrete_gaussian::{stream_rng, DiscreteGaussianSampler, NoiseParams};
use intrs_core::qnn::{perturb_into, Dense, Layer, QnnError, QuantParams, QuantizedModel};

use crate::dataset::{synthetic_blobs, Dataset};
use crate::error::CliError;

/// Noise levels with a bundled fixture.
pub const TOY_SIGMAS: [u64; 4] = [16, 32, 64, 128];
pub const TOY_TRAIN_SEED: u64 = 1;
pub const TOY_TRAIN_ITEMS: usize = 600;
pub const TOY_AUGMENT: u64 = 20;
pub const TOY_NOISE_SEED: u64 = 2;
pub const TOY_TEST_SEED: u64 = 7;
pub const TOY_TEST_ITEMS: usize = 300;

/// Right shift of the first layer; hinge values saturate at `255 * 2^(s+1)`.
const HINGE_SHIFT: u8 = 4;

pub fn fixture_name(sigma: u64) -> String {
    format!("toy_sigma{sigma}.irsqnn")
}

pub fn toy_test_set() -> Dataset {
    synthetic_blobs(TOY_TEST_SEED, TOY_TEST_ITEMS)
}

/// Trains the toy model for lattice noise `sigma`.
pub fn toy_model(sigma: u64) -> Result<QuantizedModel, CliError> {
    let train = synthetic_blobs(TOY_TRAIN_SEED, TOY_TRAIN_ITEMS);
    let sampler = DiscreteGaussianSampler::new(NoiseParams::lattice(sigma)?)?;
    let centroids = noisy_centroids(&train, &sampler)?;
    Ok(centroid_model(&centroids)?)
}

fn noisy_centroids(ds: &Dataset, sampler: &DiscreteGaussianSampler) -> Result<Vec<Vec<i64>>, CliError> {
    let mut sums = vec![vec![0i64; ds.dim]; ds.classes];
    let mut counts = vec![0i64; ds.classes];
    let mut noise = vec![0i64; ds.dim];
    let mut noisy = vec![0u8; ds.dim];
    for (i, item) in ds.items.iter().enumerate() {
        let mut rng = stream_rng(TOY_NOISE_SEED, i as u64);
        for _ in 0..TOY_AUGMENT {
            sampler.fill(&mut rng, &mut noise)?;
            perturb_into(item.input.pixels(), &noise, &mut noisy)?;
            for (s, &p) in sums[item.label].iter_mut().zip(&noisy) {
                *s += p as i64;
            }
            counts[item.label] += 1;
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(s, n)| s.into_iter().map(|v| div_round(v, n.max(1))).collect())
        .collect())
}

/// `num / den` rounded half away from zero; `den > 0`.
fn div_round(num: i64, den: i64) -> i64 {
    let q = (num.abs() + den / 2) / den;
    if num < 0 {
        -q
    } else {
        q
    }
}

/// The pairwise hinge network for integer `centroids` in `[0, 255]^d`.
pub fn centroid_model(centroids: &[Vec<i64>]) -> Result<QuantizedModel, QnnError> {
    let classes = centroids.len();
    let dim = centroids.first().map_or(0, Vec::len);
    let pairs: Vec<(usize, usize)> = (0..classes)
        .flat_map(|a| (0..classes).filter(move |&b| b != a).map(move |b| (b, a)))
        .collect();
    let max_diff = pairs
        .iter()
        .flat_map(|&(b, a)| centroids[b].iter().zip(&centroids[a]).map(|(x, y)| (x - y).abs()))
        .max()
        .unwrap_or(0)
        .max(1);

    let mut weights = Vec::with_capacity(pairs.len() * dim);
    let mut bias = Vec::with_capacity(pairs.len());
    for &(b, a) in &pairs {
        for (x, y) in centroids[b].iter().zip(&centroids[a]) {
            weights.push(div_round(127 * (x - y), max_diff) as i8);
        }
        let norm = |c: &[i64]| c.iter().map(|v| v * v).sum::<i64>();
        bias.push(div_round(-127 * (norm(&centroids[b]) - norm(&centroids[a])), 2 * max_diff) as i32);
    }

    let mut head = vec![0i8; classes * pairs.len()];
    for (r, &(_, a)) in pairs.iter().enumerate() {
        head[a * pairs.len() + r] = -1;
    }

    let hidden = pairs.len() as u32;
    QuantizedModel::new(
        dim,
        classes,
        vec![
            Layer::Dense(Dense {
                in_dim: dim as u32,
                out_dim: hidden,
                weights,
                bias,
                quant: QuantParams::new(1 << 30, HINGE_SHIFT, -128),
            }),
            Layer::Relu {
                len: hidden,
                zero_point: -128,
            },
            Layer::Dense(Dense {
                in_dim: hidden,
                out_dim: classes as u32,
                weights: head,
                bias: vec![0; classes],
                quant: QuantParams::PASS_THROUGH,
            }),
            Layer::ArgmaxHead {
                classes: classes as u32,
            },
        ],
    )
}
