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

//! Integer-only randomized smoothing for int8-quantized classifiers.
//!
//! The smoothed classifier votes over `f(clamp(x + n))` with `n` drawn from a
//! discrete Gaussian on the integer lattice. Every step after the noise draw,
//! including the confidence bound and the certified radius, runs on integers
//! and exact rationals:
//!
//! * [`discrete_gaussian`]: exact pmf/CDF tables and an exact rejection sampler.
//! * [`confidence`]: Clopper-Pearson lower bounds and binomial p-values.
//! * [`qnn`]: the int8 inference engine and its `IRSQNN1` model format.
//! * [`certifier`]: Monte-Carlo prediction and certification.
//! * [`oracle`]: exhaustive ground truth on tiny lattices.

pub mod certifier;
pub mod confidence;
pub mod discrete_gaussian;
pub mod fixed_exp;
pub mod oracle;
pub mod qnn;
pub mod rational;

pub use certifier::{CertConfig, CertificateResult, Certifier, Outcome, PerturbationBound};
pub use confidence::BinomialCount;
pub use discrete_gaussian::{CdfTable, DiscreteGaussian, NoiseParams};
pub use qnn::{LatticeInput, QuantizedModel};
pub use rational::RationalProb;
