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

use intrs_core::certifier::{certified_radius, BernoulliVote, CertConfig, Certifier};
use intrs_core::confidence::{clopper_pearson_lower, BinomialCount};
use intrs_core::qnn::{Dense, Layer, QuantParams};
use intrs_core::{LatticeInput, NoiseParams, Outcome, QuantizedModel, RationalProb};
use num_bigint::BigUint;
use num_traits::One;

fn alpha() -> RationalProb {
    RationalProb::new(1u32, 1000u32).unwrap()
}

fn certifier(sigma: u64, n1: u64, n2: u64, seed: u64) -> Certifier {
    Certifier::new(CertConfig::new(NoiseParams::lattice(sigma).unwrap(), n1, n2, alpha(), seed).unwrap())
        .unwrap()
}

#[test]
fn coin_flip_classifier_is_almost_never_certified() {
    let c = certifier(4, 100, 1000, 2024);
    let coin = BernoulliVote::new(1, 2).unwrap();
    let trials = 1000;
    let mut false_certs = 0;
    for item in 0..trials {
        if !c.certify_votes(&coin, item).unwrap().is_abstain() {
            false_certs += 1;
        }
    }
    assert!(
        false_certs * 1000 <= 4 * trials,
        "{false_certs} false certificates"
    );
}

#[test]
fn coin_flip_prediction_abstains() {
    let c = certifier(4, 1, 1, 77);
    let coin = BernoulliVote::new(1, 2).unwrap();
    let abstains = (0..1000)
        .filter(|&i| c.predict_votes(&coin, 100, i).unwrap().label.is_none())
        .count();
    assert!(abstains >= 990, "{abstains}");
}

#[test]
fn more_samples_mean_fewer_abstentions() {
    let c = certifier(4, 1, 1, 31);
    let v = BernoulliVote::new(74, 100).unwrap();
    let rate = |n: u64| {
        (0..500)
            .filter(|&i| c.predict_votes(&v, n, i).unwrap().label.is_none())
            .count()
    };
    let (small, large) = (rate(100), rate(10_000));
    assert!(small > large, "abstain {small} at N=100 vs {large} at N=10^4");
}

fn constant_model(d: u32) -> QuantizedModel {
    QuantizedModel::new(
        d as usize,
        2,
        vec![
            Layer::Dense(Dense {
                in_dim: d,
                out_dim: 2,
                weights: vec![0; 2 * d as usize],
                bias: vec![0, 5],
                quant: QuantParams::PASS_THROUGH,
            }),
            Layer::ArgmaxHead { classes: 2 },
        ],
    )
    .unwrap()
}

#[test]
fn constant_model_commits_from_eleven_samples() {
    let c = certifier(8, 1, 1, 5);
    let m = constant_model(6);
    let x = LatticeInput::new(vec![9; 6]);
    // 2 * 2^-N <= 1/1000 first holds at N = 11.
    assert_eq!(c.predict(&m, &x, 10).unwrap().label, None);
    assert_eq!(c.predict(&m, &x, 11).unwrap().label, Some(1));
}

#[test]
fn constant_model_bound_matches_closed_form() {
    let c = certifier(16, 20, 1000, 8);
    let m = constant_model(4);
    let cert = c.certify(&m, &LatticeInput::new(vec![0, 50, 100, 255])).unwrap();
    // Largest j with (j / 2^20)^1000 <= 1/1000.
    let bits = 20u64;
    let fits = |j: u64| BigUint::from(j).pow(1000) * 1000u32 <= BigUint::one() << (bits * 1000);
    let (mut lo, mut hi) = (0u64, 1u64 << bits);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let want = RationalProb::dyadic(lo, bits as u32).unwrap();
    assert_eq!(cert.lower_bound, want);
    match cert.outcome {
        Outcome::Certified {
            label,
            quantile_z,
            radius_sq_x4,
            ..
        } => {
            assert_eq!(label, 1);
            assert_eq!(quantile_z, c.table().inverse_cdf(&want).unwrap());
            // p ~ 0.99312 lies near 2.46 sigma; the support tops out at 10 sigma.
            assert!((38..=41).contains(&quantile_z), "{quantile_z}");
            assert_eq!(radius_sq_x4, ((2 * quantile_z - 1) as u64).pow(2));
        }
        Outcome::Abstain => panic!("abstained"),
    }
}

#[test]
fn radius_grows_with_hits() {
    for sigma in [1u64, 3, 25] {
        let c = certifier(sigma, 1, 1, 0);
        let mut prev = 0u64;
        for k in (0..=1000u64).step_by(7).chain([1000]) {
            let lb = clopper_pearson_lower(BinomialCount::new(k, 1000).unwrap(), &alpha(), 20).unwrap();
            let r = certified_radius(c.table(), &lb).unwrap().map_or(0, |(_, r)| r);
            assert!(r >= prev, "sigma {sigma} k {k}");
            prev = r;
        }
        assert!(prev > 0);
    }
}

#[test]
fn seeds_fix_the_whole_result() {
    let c = certifier(6, 30, 300, 123);
    let v = BernoulliVote::new(9, 10).unwrap();
    for item in 0..20 {
        assert_eq!(
            c.certify_votes(&v, item).unwrap(),
            c.certify_votes(&v, item).unwrap()
        );
    }
    let other = certifier(6, 30, 300, 124);
    let differs = (0..20).any(|i| other.certify_votes(&v, i).unwrap() != c.certify_votes(&v, i).unwrap());
    assert!(differs);
}
