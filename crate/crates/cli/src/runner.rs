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

//! Batch certification and prediction over a dataset.
//!
//! Items run in parallel on a dedicated rayon pool. Each item draws its
//! noise from rng streams keyed by the item index, so the output does not
//! depend on the number of threads.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use intrs_core::certifier::{CertConfig, Certifier};
use intrs_core::discrete_gaussian::CdfTable;
use intrs_core::qnn::{load_model, QuantizedModel};
use rayon::prelude::*;

use crate::dataset::{load_dataset, Dataset};
use crate::error::CliError;
use crate::metrics::{certificates_csv, predict_csv, CertRow, MetricsReport, PredictRow};

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn read_model(path: &Path) -> Result<QuantizedModel, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(path, e))?;
    load_model(&bytes).map_err(|e| CliError::data(path, e))
}

pub fn read_cdf(path: &Path) -> Result<CdfTable, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(path, e))?;
    CdfTable::from_bytes(&bytes).map_err(|e| CliError::data(path, e))
}

/// Builds the certifier, reusing a stored CDF table when one is given.
pub fn make_certifier(cfg: CertConfig, cdf: Option<&Path>) -> Result<Certifier, CliError> {
    Ok(match cdf {
        Some(path) => Certifier::with_table(cfg, read_cdf(path)?)?,
        None => Certifier::new(cfg)?,
    })
}

fn check_shapes(model: &QuantizedModel, ds: &Dataset) -> Result<(), CliError> {
    if model.input_dim() != ds.dim || model.num_classes() != ds.classes {
        return Err(CliError::Data(format!(
            "model expects d={} C={}, dataset {} has d={} C={}",
            model.input_dim(),
            model.num_classes(),
            ds.name,
            ds.dim,
            ds.classes
        )));
    }
    Ok(())
}

pub fn certify_dataset(
    certifier: &Certifier,
    model: &QuantizedModel,
    ds: &Dataset,
    threads: usize,
) -> Result<Vec<CertRow>, CliError> {
    check_shapes(model, ds)?;
    thread_pool(threads)?.install(|| {
        ds.items
            .par_iter()
            .enumerate()
            .map(|(i, item)| {
                let start = Instant::now();
                let result = certifier.certify_item(model, &item.input, i as u64)?;
                Ok(CertRow {
                    input_id: i,
                    true_label: item.label,
                    result,
                    wall_time_us: start.elapsed().as_micros() as u64,
                })
            })
            .collect()
    })
}

pub fn predict_dataset(
    certifier: &Certifier,
    model: &QuantizedModel,
    ds: &Dataset,
    ns: &[u64],
    threads: usize,
) -> Result<Vec<PredictRow>, CliError> {
    check_shapes(model, ds)?;
    let pool = thread_pool(threads)?;
    ns.iter()
        .map(|&n| {
            let labels: Vec<Option<usize>> = pool.install(|| {
                ds.items
                    .par_iter()
                    .enumerate()
                    .map(|(i, item)| Ok(certifier.predict_item(model, &item.input, n, i as u64)?.label))
                    .collect::<Result<_, CliError>>()
            })?;
            let mut row = PredictRow {
                n,
                correct: 0,
                wrong: 0,
                abstain: 0,
            };
            for (label, item) in labels.iter().zip(&ds.items) {
                match label {
                    None => row.abstain += 1,
                    Some(l) if *l == item.label => row.correct += 1,
                    Some(_) => row.wrong += 1,
                }
            }
            Ok(row)
        })
        .collect()
}

/// Paths written next to a certificate CSV `out`.
pub fn companion_paths(out: &Path) -> (PathBuf, PathBuf) {
    (
        out.with_extension("metrics.csv"),
        out.with_extension("summary.csv"),
    )
}

#[derive(Debug, Clone)]
pub struct CertifyJob {
    pub model: PathBuf,
    pub dataset: PathBuf,
    pub cdf: Option<PathBuf>,
    pub cfg: CertConfig,
    pub threads: usize,
    pub radius_grid: Vec<u64>,
    pub out: PathBuf,
}

/// Certifies every item and writes the certificate CSV to `out`, the CA
/// curve to `out.metrics.csv` and the summary to `out.summary.csv`.
pub fn run_certify(job: &CertifyJob) -> Result<MetricsReport, CliError> {
    let model = read_model(&job.model)?;
    let ds = load_dataset(&job.dataset, Some(model.num_classes()))?;
    let certifier = make_certifier(job.cfg.clone(), job.cdf.as_deref())?;
    let rows = certify_dataset(&certifier, &model, &ds, job.threads)?;
    let report = MetricsReport::from_rows(&rows, &job.radius_grid);
    let (metrics, summary) = companion_paths(&job.out);
    fs::write(&job.out, certificates_csv(&rows)).map_err(|e| CliError::data(&job.out, e))?;
    fs::write(&metrics, report.curve_csv()).map_err(|e| CliError::data(&metrics, e))?;
    fs::write(&summary, report.summary_csv()).map_err(|e| CliError::data(&summary, e))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct PredictJob {
    pub model: PathBuf,
    pub dataset: PathBuf,
    pub cfg: CertConfig,
    pub threads: usize,
    pub ns: Vec<u64>,
    pub out: PathBuf,
}

pub fn run_predict(job: &PredictJob) -> Result<Vec<PredictRow>, CliError> {
    let model = read_model(&job.model)?;
    let ds = load_dataset(&job.dataset, Some(model.num_classes()))?;
    let certifier = Certifier::new(job.cfg.clone())?;
    let rows = predict_dataset(&certifier, &model, &ds, &job.ns, job.threads)?;
    fs::write(&job.out, predict_csv(&rows)).map_err(|e| CliError::data(&job.out, e))?;
    Ok(rows)
}
