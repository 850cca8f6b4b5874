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

//! Certified percentage, certified accuracy curves and CSV output.
//!
//! `CA(r)` divides by the number of certified items, not by the dataset
//! size; the dataset-size variant is reported next to it as `ca_full`.

use intrs_core::certifier::{CertificateResult, Outcome};
use intrs_core::discrete_gaussian::NoiseParams;

use crate::error::CliError;

/// One certified (or abstained) dataset item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertRow {
    pub input_id: usize,
    pub true_label: usize,
    pub result: CertificateResult,
    pub wall_time_us: u64,
}

impl CertRow {
    pub fn correct(&self) -> bool {
        self.result.label() == Some(self.true_label)
    }
}

/// `R >= r` for `R^2 = radius_sq_x4 / 4`, in lattice units.
pub fn reaches(radius_sq_x4: u64, r: u64) -> bool {
    radius_sq_x4 as u128 >= 4 * (r as u128) * (r as u128)
}

/// Certified radius in lattice units, for display.
pub fn radius_lattice(radius_sq_x4: u64) -> f64 {
    (radius_sq_x4 as f64).sqrt() / 2.0
}

/// Parses `"0,8,16"` or an inclusive range `"start:stop:step"`.
pub fn parse_radius_grid(s: &str) -> Result<Vec<u64>, String> {
    let num = |v: &str| v.trim().parse::<u64>().map_err(|_| format!("bad radius {v:?}"));
    let grid: Vec<u64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range {s:?} is not start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step == 0 || start > stop {
            return Err(format!("empty or unbounded range {s:?}"));
        }
        (start..=stop).step_by(step as usize).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("radius grid {s:?} must be non-empty and increasing"));
    }
    Ok(grid)
}

/// Seventeen radii from 0 to `4 * ceil(sigma)`, which lies past the largest
/// radius `N2 = 10^4` samples can certify.
pub fn default_radius_grid(noise: &NoiseParams) -> Vec<u64> {
    let s = noise.sigma_num().div_ceil(noise.sigma_den());
    let mut grid: Vec<u64> = (0..=16).map(|k| k * s / 4).collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaPoint {
    pub radius: u64,
    /// Items certified with the true label and `R >= radius`.
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub items: u64,
    pub certified: u64,
    pub curve: Vec<CaPoint>,
    pub mean_us: u64,
    pub median_us: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_rows(rows: &[CertRow], grid: &[u64]) -> Self {
        let certified = rows.iter().filter(|r| !r.result.is_abstain()).count() as u64;
        let curve = grid
            .iter()
            .map(|&radius| CaPoint {
                radius,
                hits: rows
                    .iter()
                    .filter(|row| {
                        row.correct() && row.result.radius_sq_x4().is_some_and(|q| reaches(q, radius))
                    })
                    .count() as u64,
            })
            .collect();
        let mut times: Vec<u64> = rows.iter().map(|r| r.wall_time_us).collect();
        times.sort_unstable();
        let mean_us = if times.is_empty() {
            0
        } else {
            times.iter().sum::<u64>() / times.len() as u64
        };
        Self {
            items: rows.len() as u64,
            certified,
            curve,
            mean_us,
            median_us: times.get(times.len() / 2).copied().unwrap_or(0),
        }
    }

    pub fn abstained(&self) -> u64 {
        self.items - self.certified
    }

    pub fn cp(&self) -> f64 {
        ratio(self.certified, self.items)
    }

    pub fn abstain_rate(&self) -> f64 {
        ratio(self.abstained(), self.items)
    }

    /// Nothing was certified, so every CA value is reported as 0.
    pub fn abstain_only(&self) -> bool {
        self.certified == 0
    }

    pub fn ca(&self, point: &CaPoint) -> f64 {
        ratio(point.hits, self.certified)
    }

    pub fn ca_full(&self, point: &CaPoint) -> f64 {
        ratio(point.hits, self.items)
    }

    /// `CA(0)`, or 0 with an empty grid.
    pub fn ca0(&self) -> f64 {
        self.curve.first().map_or(0.0, |p| self.ca(p))
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("radius_lattice,radius_norm,hits,ca,ca_full,abstain_only\n");
        for p in &self.curve {
            out.push_str(&format!(
                "{},{:.6},{},{:.6},{:.6},{}\n",
                p.radius,
                p.radius as f64 / 255.0,
                p.hits,
                self.ca(p),
                self.ca_full(p),
                self.abstain_only() as u8
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        format!(
            "metric,value\nitems,{}\ncertified,{}\nabstained,{}\ncp,{:.6}\nabstain_rate,{:.6}\n\
             abstain_only,{}\nmean_us,{}\nmedian_us,{}\n",
            self.items,
            self.certified,
            self.abstained(),
            self.cp(),
            self.abstain_rate(),
            self.abstain_only() as u8,
            self.mean_us,
            self.median_us
        )
    }
}

pub const CERT_HEADER: &str = "input_id,true_label,predicted_label,n2_count,p_lb_num,p_lb_den,\
quantile_z,radius_sq_x4,radius_lattice,radius_norm,abstain_flag,wall_time_us";

/// One row per item. Abstentions leave the label, quantile and radius
/// fields empty but keep the round-2 count and lower bound.
pub fn certificates_csv(rows: &[CertRow]) -> String {
    let mut out = String::from(CERT_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.result;
        let (label, z, rsq, rl, rn) = match &r.outcome {
            Outcome::Certified {
                label,
                quantile_z,
                radius_sq_x4,
                ..
            } => {
                let rl = radius_lattice(*radius_sq_x4);
                (
                    label.to_string(),
                    quantile_z.to_string(),
                    radius_sq_x4.to_string(),
                    format!("{rl:.4}"),
                    format!("{:.6}", rl / 255.0),
                )
            }
            Outcome::Abstain => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{label},{},{},{},{z},{rsq},{rl},{rn},{},{}\n",
            row.input_id,
            row.true_label,
            r.n2_count,
            r.lower_bound.num(),
            r.lower_bound.den(),
            r.is_abstain() as u8,
            row.wall_time_us
        ));
    }
    out
}

/// Correct / wrong / abstain counts of `predict` at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictRow {
    pub n: u64,
    pub correct: u64,
    pub wrong: u64,
    pub abstain: u64,
}

impl PredictRow {
    pub fn items(&self) -> u64 {
        self.correct + self.wrong + self.abstain
    }
}

pub fn predict_csv(rows: &[PredictRow]) -> String {
    let mut out = String::from("n,items,correct,wrong,abstain,correct_frac,wrong_frac,abstain_frac\n");
    for r in rows {
        let t = r.items();
        out.push_str(&format!(
            "{},{t},{},{},{},{:.4},{:.4},{:.4}\n",
            r.n,
            r.correct,
            r.wrong,
            r.abstain,
            ratio(r.correct, t),
            ratio(r.wrong, t),
            ratio(r.abstain, t)
        ));
    }
    out
}

pub fn parse_n_list(s: &str) -> Result<Vec<u64>, CliError> {
    let ns = s
        .split(',')
        .map(|v| v.trim().parse::<u64>().ok().filter(|&n| n > 0))
        .collect::<Option<Vec<u64>>>()
        .ok_or_else(|| CliError::Usage(format!("bad sample-size list {s:?}")))?;
    if ns.is_empty() {
        return Err(CliError::Usage("empty sample-size list".into()));
    }
    Ok(ns)
}
