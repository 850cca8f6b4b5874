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

//! Labelled lattice datasets: CSV and `IRSIDX1` files, and the seeded
//! three-class blob generator used by the desk-scale runs.

use std::fs;
use std::path::Path;

use intrs_core::discrete_gaussian::stream_rng;
use intrs_core::qnn::LatticeInput;
use rand::Rng;

use crate::error::CliError;

pub const DATASET_MAGIC: &[u8; 7] = b"IRSIDX1";

/// Pixel count of a blob item.
pub const BLOB_DIM: usize = 16;
pub const BLOB_CLASSES: usize = 3;
/// Leading pixels that carry the class brightness; the rest are background.
pub const BLOB_SIGNAL_PIXELS: usize = 8;
pub const BLOB_BACKGROUND: i64 = 128;
pub const BLOB_JITTER: i64 = 4;
/// Inclusive brightness range of each class.
pub const BLOB_LEVELS: [(i64, i64); BLOB_CLASSES] = [(0, 10), (14, 30), (40, 128)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub input: LatticeInput,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub dim: usize,
    pub classes: usize,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Idx,
}

impl Format {
    /// `.csv` files are text; everything else is treated as `IRSIDX1`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Idx,
        }
    }
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        classes: usize,
        items: Vec<Item>,
    ) -> Result<Self, String> {
        if dim == 0 {
            return Err("dimension must be positive".into());
        }
        if !(2..=256).contains(&classes) {
            return Err(format!("class count {classes} outside [2, 256]"));
        }
        for (i, item) in items.iter().enumerate() {
            if item.input.dim() != dim {
                return Err(format!(
                    "item {i} has {} pixels, expected {dim}",
                    item.input.dim()
                ));
            }
            if item.label >= classes {
                return Err(format!("item {i} has label {} but C = {classes}", item.label));
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            classes,
            items,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Count of items carrying each label.
    pub fn label_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.classes];
        for item in &self.items {
            counts[item.label] += 1;
        }
        counts
    }

    /// Text form: a `# classes=C` line, a header, then `label,p0,..` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# classes={}\nlabel", self.classes);
        for j in 0..self.dim {
            out.push_str(&format!(",p{j}"));
        }
        out.push('\n');
        for item in &self.items {
            out.push_str(&item.label.to_string());
            for p in item.input.pixels() {
                out.push(',');
                out.push_str(&p.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form. Blank lines, a `label,...` header and `#`
    /// comments are skipped. Without a `# classes=C` line the class count
    /// is taken from `classes`, or else from the largest label.
    pub fn from_csv(name: &str, text: &str, classes: Option<usize>) -> Result<Self, String> {
        let mut declared = None;
        let mut rows: Vec<(usize, usize, Vec<u8>)> = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("classes=") {
                    let c = v
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| format!("line {lineno}: bad class count {v:?}"))?;
                    declared = Some(c);
                }
                continue;
            }
            if line.starts_with("label") {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let label = fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| format!("line {lineno}: bad label"))?;
            let pixels = fields
                .enumerate()
                .map(|(j, f)| {
                    f.parse::<u8>()
                        .map_err(|_| format!("line {lineno}: pixel {j} = {f:?} is not in [0, 255]"))
                })
                .collect::<Result<Vec<u8>, String>>()?;
            match dim {
                None => dim = Some(pixels.len()),
                Some(d) if d != pixels.len() => {
                    return Err(format!("line {lineno}: {} pixels, expected {d}", pixels.len()));
                }
                _ => {}
            }
            rows.push((lineno, label, pixels));
        }
        let dim = dim.ok_or("no data rows")?;
        if let (Some(d), Some(c)) = (declared, classes) {
            if d != c {
                return Err(format!("file declares {d} classes, expected {c}"));
            }
        }
        let classes = declared
            .or(classes)
            .unwrap_or_else(|| rows.iter().map(|r| r.1 + 1).max().unwrap_or(2).max(2));
        if let Some((lineno, label, _)) = rows.iter().find(|r| r.1 >= classes) {
            return Err(format!("line {lineno}: label {label} outside [0, {classes})"));
        }
        let items = rows
            .into_iter()
            .map(|(_, label, pixels)| Item {
                input: LatticeInput::new(pixels),
                label,
            })
            .collect();
        Self::new(name, dim, classes, items)
    }

    /// Binary form: magic, then count, d and C as u32 LE, then per item a
    /// label byte followed by d pixel bytes.
    pub fn to_idx(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(19 + self.len() * (self.dim + 1));
        out.extend_from_slice(DATASET_MAGIC);
        for v in [self.len(), self.dim, self.classes] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for item in &self.items {
            out.push(item.label as u8);
            out.extend_from_slice(item.input.pixels());
        }
        out
    }

    pub fn from_idx(name: &str, bytes: &[u8]) -> Result<Self, String> {
        if bytes.len() < 19 || &bytes[..7] != DATASET_MAGIC {
            return Err("missing IRSIDX1 header".into());
        }
        let word = |i: usize| u32::from_le_bytes(bytes[7 + 4 * i..11 + 4 * i].try_into().unwrap()) as usize;
        let (count, dim, classes) = (word(0), word(1), word(2));
        let stride = dim + 1;
        let body = &bytes[19..];
        if dim == 0 || body.len() != count.checked_mul(stride).ok_or("item count overflows")? {
            return Err(format!(
                "body holds {} bytes, header promises {count} items of {stride}",
                body.len()
            ));
        }
        let mut items = Vec::with_capacity(count);
        for (i, rec) in body.chunks_exact(stride).enumerate() {
            let label = rec[0] as usize;
            if label >= classes {
                return Err(format!("item {i}: label {label} outside [0, {classes})"));
            }
            items.push(Item {
                input: LatticeInput::new(rec[1..].to_vec()),
                label,
            });
        }
        Self::new(name, dim, classes, items)
    }
}

fn name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a dataset; `classes`, when given, must agree with the file.
pub fn load_dataset(path: &Path, classes: Option<usize>) -> Result<Dataset, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(path, e))?;
    let ds = if bytes.starts_with(DATASET_MAGIC) {
        Dataset::from_idx(&name_of(path), &bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::data(path, "neither IRSIDX1 nor UTF-8 text"))?;
        Dataset::from_csv(&name_of(path), text, classes)
    }
    .map_err(|e| CliError::data(path, e))?;
    if let Some(c) = classes {
        if ds.classes != c {
            return Err(CliError::data(
                path,
                format!("dataset has {} classes, model has {c}", ds.classes),
            ));
        }
    }
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<(), CliError> {
    let bytes = match Format::from_path(path) {
        Format::Csv => ds.to_csv().into_bytes(),
        Format::Idx => ds.to_idx(),
    };
    fs::write(path, bytes).map_err(|e| CliError::data(path, e))
}

/// `count` blob items from `seed`; item `i` has label `i % 3`.
///
/// Each item draws a brightness from its class range, fills the signal
/// pixels with it and the remaining pixels with the background level, then
/// adds independent jitter in `[-BLOB_JITTER, BLOB_JITTER]` to every pixel.
pub fn synthetic_blobs(seed: u64, count: usize) -> Dataset {
    let mut rng = stream_rng(seed, 0);
    let items = (0..count)
        .map(|i| {
            let label = i % BLOB_CLASSES;
            let (lo, hi) = BLOB_LEVELS[label];
            let level = rng.gen_range(lo..=hi);
            let pixels = (0..BLOB_DIM)
                .map(|j| {
                    let base = if j < BLOB_SIGNAL_PIXELS {
                        level
                    } else {
                        BLOB_BACKGROUND
                    };
                    (base + rng.gen_range(-BLOB_JITTER..=BLOB_JITTER)).clamp(0, 255) as u8
                })
                .collect();
            Item {
                input: LatticeInput::new(pixels),
                label,
            }
        })
        .collect();
    Dataset::new(format!("blobs-seed{seed}"), BLOB_DIM, BLOB_CLASSES, items).expect("blob layout is valid")
}
