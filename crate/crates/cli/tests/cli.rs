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

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use intrs_cli::dataset::{load_dataset, synthetic_blobs};
use intrs_core::discrete_gaussian::{build_cdf_table, CdfTable, NoiseParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_intrs"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Drops the trailing wall-time column.
fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn small_certify(dir: &Path, threads: &str, out: &str) -> String {
    let data = dir.join("small.csv");
    if !data.exists() {
        intrs_cli::dataset::save_dataset(&synthetic_blobs(7, 9), &data).unwrap();
    }
    let out = dir.join(out);
    let o = run(&[
        "certify",
        "--model",
        s(&fixture("toy_sigma32.irsqnn")),
        "--dataset",
        s(&data),
        "--sigma",
        "32",
        "--n1",
        "10",
        "--n2",
        "200",
        "--seed",
        "3",
        "--threads",
        threads,
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out).unwrap()
}

#[test]
fn certificate_csv_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let got = strip_timing(&small_certify(dir.path(), "1", "c.csv"));
    let golden = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/certify_small.csv"),
    )
    .unwrap();
    assert_eq!(got.trim_end(), golden.trim_end());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = strip_timing(&small_certify(dir.path(), "1", "a.csv"));
    let four = strip_timing(&small_certify(dir.path(), "4", "b.csv"));
    assert_eq!(one, four);
    let m1 = std::fs::read(dir.path().join("a.metrics.csv")).unwrap();
    let m4 = std::fs::read(dir.path().join("b.metrics.csv")).unwrap();
    assert_eq!(m1, m4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.irsidx");
    intrs_cli::dataset::save_dataset(&synthetic_blobs(7, 6), &data).unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "model = {}\ndataset = {}\nsigma = 1000\nn1 = 10\nn2 = 100\nthreads = 1\nout = {}\n",
            s(&fixture("toy_sigma32.irsqnn")),
            s(&data),
            s(&dir.path().join("p.csv"))
        ),
    )
    .unwrap();
    // sigma from the file is overridden on the command line
    let o = run(&["predict", "--config", s(&cfg), "--sigma", "32", "--n", "1,11"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "n,items,correct,wrong,abstain,correct_frac,wrong_frac,abstain_frac"
    );
    assert!(lines[1].starts_with("1,6,0,0,6,"), "{csv}");
    assert_eq!(lines.len(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["certify", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["bench", "--reps", "0"]).status.code(), Some(1));
    let missing = dir.path().join("nope.irsqnn");
    let o = run(&[
        "certify",
        "--model",
        s(&missing),
        "--dataset",
        s(&missing),
        "--sigma",
        "4",
        "--out",
        s(&dir.path().join("o.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "label,p0\n0,3\n").unwrap();
    let o = run(&[
        "certify",
        "--model",
        s(&fixture("toy_sigma32.irsqnn")),
        "--dataset",
        s(&bad),
        "--sigma",
        "4",
        "--out",
        s(&dir.path().join("o.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn csv_label_error_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    let mut text = synthetic_blobs(7, 3).to_csv().replace("# classes=3\n", "");
    text.push_str("9,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1\n");
    std::fs::write(&bad, text).unwrap();
    let err = load_dataset(&bad, Some(3)).unwrap_err().to_string();
    assert!(err.contains("line 5") && err.contains("label 9"), "{err}");
}

#[test]
fn gen_dataset_and_build_cdf() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["d.csv", "d.irsidx"] {
        let p = dir.path().join(name);
        assert!(
            run(&["gen-dataset", "--seed", "7", "--count", "30", "--out", s(&p)])
                .status
                .success()
        );
        assert_eq!(
            load_dataset(&p, None).unwrap().items,
            synthetic_blobs(7, 30).items
        );
    }
    let p = dir.path().join("t.irscdf");
    assert!(run(&["build-cdf", "--sigma", "5/2", "--out", s(&p)])
        .status
        .success());
    let table = CdfTable::from_bytes(&std::fs::read(&p).unwrap()).unwrap();
    assert_eq!(
        table,
        build_cdf_table(&NoiseParams::centered(5, 2).unwrap()).unwrap()
    );
    assert_eq!(
        run(&["build-cdf", "--sigma", "0", "--out", s(&p)]).status.code(),
        Some(1)
    );
}

#[test]
fn certify_with_stored_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.irscdf");
    assert!(run(&["build-cdf", "--sigma", "32", "--out", s(&table)])
        .status
        .success());
    let data = dir.path().join("d.irsidx");
    intrs_cli::dataset::save_dataset(&synthetic_blobs(7, 3), &data).unwrap();
    let args = |sigma: &'static str, out: &str| {
        vec![
            "certify".to_string(),
            "--model".into(),
            s(&fixture("toy_sigma32.irsqnn")).into(),
            "--dataset".into(),
            s(&data).into(),
            "--sigma".into(),
            sigma.into(),
            "--n2".into(),
            "100".into(),
            "--cdf".into(),
            s(&table).into(),
            "--out".into(),
            s(&dir.path().join(out)).into(),
        ]
    };
    assert!(bin().args(args("32", "a.csv")).output().unwrap().status.success());
    // a table for another sigma is a data error
    assert_eq!(
        bin().args(args("16", "b.csv")).output().unwrap().status.code(),
        Some(2)
    );
}

#[test]
fn oracle_sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "oracle-sweep",
        "--dim",
        "1",
        "--half-width",
        "4",
        "--sigma",
        "1",
        "--instances",
        "20",
        "--fixtures",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 9));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violations=0"));
}

#[test]
fn bench_reports_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = run(&[
        "bench",
        "--model",
        s(&fixture("toy_sigma32.irsqnn")),
        "--reps",
        "100",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(
        csv.contains("int_payload_bytes,114\n") && csv.contains("float_payload_bytes,456\n"),
        "{csv}"
    );
}
