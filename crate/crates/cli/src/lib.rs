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

//! Batch certification, prediction and benchmarking on top of `intrs-core`.
//!
//! Everything in this crate is harness code: dataset files, CSV output,
//! metrics and the float32 reference used by `bench`. The certification
//! path itself lives in `intrs-core` and never sees a float.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod runner;
pub mod toy;

pub use dataset::{Dataset, Item};
pub use error::CliError;
pub use metrics::MetricsReport;
