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
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intrs_cli::bench::{reference_architecture, run_bench};
use intrs_cli::config::ConfigFile;
use intrs_cli::dataset::{save_dataset, synthetic_blobs};
use intrs_cli::metrics::{default_radius_grid, parse_n_list, parse_radius_grid};
use intrs_cli::runner::{read_model, run_certify, run_predict, CertifyJob, PredictJob};
use intrs_cli::toy::toy_model;
use intrs_cli::CliError;
use intrs_core::certifier::CertConfig;
use intrs_core::discrete_gaussian::{build_cdf_table, parse_sigma, NoiseParams};
use intrs_core::oracle::{
    certificate_soundness_sweep, half_space_fixtures, random_instances, Boundary, TinyDomain,
};
use intrs_core::RationalProb;

#[derive(Parser)]
#[command(
    name = "intrs",
    version,
    about = "Integer randomized smoothing certification tools"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify every item of a dataset.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n1: Option<u64>,
        #[arg(long)]
        n2: Option<u64>,
        /// Radii for the CA curve: "0,8,16" or "start:stop:step" (lattice units).
        #[arg(long)]
        radius_grid: Option<String>,
        /// Precomputed IRSCDF1 table for the noise.
        #[arg(long)]
        cdf: Option<PathBuf>,
    },
    /// Predict every item at several sample sizes.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sample sizes.
        #[arg(long)]
        n: Option<String>,
    },
    /// Time integer and float32 forward passes.
    Bench {
        /// Model to time; the built-in reference architecture when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive soundness check on a tiny lattice.
    OracleSweep {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 6)]
        half_width: i64,
        #[arg(long, default_value = "1")]
        sigma: String,
        #[arg(long, default_value = "wrapped")]
        boundary: String,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Also run the half-space fixtures.
        #[arg(long)]
        fixtures: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the seeded blob dataset (.csv or IRSIDX1).
    GenDataset {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the IRSCDF1 table for a noise scale.
    BuildCdf {
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        trunc: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the toy model for a noise scale.
    ToyModel {
        #[arg(long)]
        sigma: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Noise scale in lattice units, "32" or "65/2".
    #[arg(long)]
    sigma: Option<String>,
    /// Failure probability, "0.001" or "1/1000".
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn noise_from(s: &str) -> Result<NoiseParams, CliError> {
    let (n, d) = parse_sigma(s)?;
    Ok(NoiseParams::centered(n, d)?)
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required")))
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

struct Resolved {
    file: ConfigFile,
    model: PathBuf,
    dataset: PathBuf,
    cfg: CertConfig,
    out: PathBuf,
    threads: usize,
}

fn resolve(c: Common, n1: Option<u64>, n2: Option<u64>) -> Result<Resolved, CliError> {
    let file = match &c.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let path = |v: &str| Ok(PathBuf::from(v));
    let model = required(file.pick(c.model, "model", path)?, "model")?;
    let dataset = required(file.pick(c.dataset, "dataset", path)?, "dataset")?;
    let out = required(file.pick(c.out, "out", path)?, "out")?;
    let sigma = required(file.pick(c.sigma, "sigma", |v| Ok(v.to_string()))?, "sigma")?;
    let alpha = file
        .pick(c.alpha, "alpha", |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "0.001".into());
    let alpha: RationalProb = alpha
        .parse()
        .map_err(|e| CliError::Usage(format!("alpha: {e}")))?;
    let seed = file.pick(c.seed, "seed", num)?.unwrap_or(0);
    let threads = file
        .pick(c.threads, "threads", num)?
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let n1 = file.pick(n1, "n1", num)?.unwrap_or(100);
    let n2 = file.pick(n2, "n2", num)?.unwrap_or(10_000);
    let cfg = CertConfig::new(noise_from(&sigma)?, n1, n2, alpha, seed)?;
    Ok(Resolved {
        file,
        model,
        dataset,
        cfg,
        out,
        threads,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::data(path, e))
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Certify {
            common,
            n1,
            n2,
            radius_grid,
            cdf,
        } => {
            let r = resolve(common, n1, n2)?;
            let grid = match r.file.pick(radius_grid, "radius-grid", |v| Ok(v.to_string()))? {
                Some(g) => parse_radius_grid(&g).map_err(CliError::Usage)?,
                None => default_radius_grid(&r.cfg.noise),
            };
            let cdf = r.file.pick(cdf, "cdf", |v| Ok(PathBuf::from(v)))?;
            let job = CertifyJob {
                model: r.model,
                dataset: r.dataset,
                cdf,
                cfg: r.cfg,
                threads: r.threads,
                radius_grid: grid,
                out: r.out,
            };
            let m = run_certify(&job)?;
            println!(
                "items={} certified={} cp={:.4} abstain={:.4} ca0={:.4} abstain_only={} median_us={}",
                m.items,
                m.certified,
                m.cp(),
                m.abstain_rate(),
                m.ca0(),
                m.abstain_only(),
                m.median_us
            );
        }
        Command::Predict { common, n } => {
            let r = resolve(common, None, None)?;
            let ns = r
                .file
                .pick(n, "n", |v| Ok(v.to_string()))?
                .unwrap_or_else(|| "100,1000,10000".into());
            let job = PredictJob {
                model: r.model,
                dataset: r.dataset,
                cfg: r.cfg,
                threads: r.threads,
                ns: parse_n_list(&ns)?,
                out: r.out,
            };
            for row in run_predict(&job)? {
                println!(
                    "n={} correct={} wrong={} abstain={}",
                    row.n, row.correct, row.wrong, row.abstain
                );
            }
        }
        Command::Bench {
            model,
            reps,
            seed,
            out,
        } => {
            let model = match model {
                Some(p) => read_model(&p)?,
                None => reference_architecture(seed),
            };
            let report = run_bench(&model, reps, seed)?;
            print!("{}", report.to_csv());
            if report.time_ratio() > 1.0 {
                eprintln!("warning: int8 forward slower than the float32 reference on this machine");
            }
            if let Some(p) = out {
                write(&p, &report.to_csv())?;
            }
        }
        Command::OracleSweep {
            dim,
            half_width,
            sigma,
            boundary,
            instances,
            fixtures,
            seed,
            out,
        } => {
            let boundary = match boundary.as_str() {
                "wrapped" => Boundary::Wrapped,
                "clamped" => Boundary::Clamped,
                other => return Err(CliError::Usage(format!("unknown boundary {other:?}"))),
            };
            let (sn, sd) = parse_sigma(&sigma)?;
            let domain = TinyDomain::new(dim, half_width, sn, sd, boundary)?;
            let random = random_instances(&domain, instances, 3, seed)?;
            let fixed = if fixtures {
                half_space_fixtures(&domain)?
            } else {
                Vec::new()
            };
            let origin = vec![0i64; dim];
            let named = random
                .iter()
                .enumerate()
                .map(|(i, f)| (format!("random-{i}"), f, origin.clone()))
                .chain(fixed.iter().map(|(n, f)| (n.clone(), f, origin.clone())));
            let report = certificate_soundness_sweep(&domain, named)?;
            write(&out, &report.to_csv())?;
            println!(
                "instances={} certified={} violations={}",
                report.rows.len(),
                report.certified(),
                report.violations()
            );
            if report.violations() > 0 {
                return Err(CliError::Internal(format!(
                    "{} certificate violations",
                    report.violations()
                )));
            }
        }
        Command::GenDataset { seed, count, out } => save_dataset(&synthetic_blobs(seed, count), &out)?,
        Command::BuildCdf { sigma, trunc, out } => {
            let mut noise = noise_from(&sigma)?;
            if let Some(t) = trunc {
                noise = noise.with_trunc(t)?;
            }
            let table = build_cdf_table(&noise)?;
            std::fs::write(&out, table.to_bytes()).map_err(|e| CliError::data(&out, e))?;
        }
        Command::ToyModel { sigma, out } => {
            std::fs::write(&out, toy_model(sigma)?.to_bytes()).map_err(|e| CliError::data(&out, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
