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

use std::path::PathBuf;

use intrs_cli::dataset::load_dataset;
use intrs_cli::runner::read_model;
use intrs_cli::toy::{fixture_name, toy_model, toy_test_set, TOY_SIGMAS};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

#[test]
fn bundled_models_load_with_expected_shape() {
    for sigma in TOY_SIGMAS {
        let model = read_model(&fixture(&fixture_name(sigma))).unwrap();
        assert_eq!(model.num_classes(), 3);
        assert_eq!(model.input_dim(), 16);
    }
}

#[test]
fn bundled_models_match_the_generator() {
    for sigma in TOY_SIGMAS {
        let bytes = std::fs::read(fixture(&fixture_name(sigma))).unwrap();
        assert_eq!(bytes, toy_model(sigma).unwrap().to_bytes(), "sigma {sigma}");
    }
}

#[test]
fn bundled_test_set_matches_the_generator() {
    let ds = load_dataset(&fixture("toy_test.irsidx"), Some(3)).unwrap();
    assert_eq!(ds.items, toy_test_set().items);
    assert_eq!((ds.dim, ds.classes, ds.len()), (16, 3, 300));
}
