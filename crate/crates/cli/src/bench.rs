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

//! Forward-pass microbenchmark against a float32 reference.
//!
//! The float path in this module exists only for comparison. It never
//! feeds a certificate.

use std::hint::black_box;
use std::time::Instant;

use intrs_core::discrete_gaussian::stream_rng;
use intrs_core::qnn::{Conv2d, Dense, LatticeInput, Layer, QuantParams, QuantizedModel, Workspace};
use rand::Rng;

use crate::error::CliError;

pub const FLOAT_MAGIC: &[u8; 7] = b"IRSF321";

#[derive(Debug, Clone)]
enum FloatStage {
    Dense {
        rows: usize,
        cols: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Conv {
        layer: Conv2d,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Relu,
}

/// The same architecture with dequantized weights `w * scale`, where
/// `scale = scale_mult / 2^(31 + right_shift)` (1 for pass-through layers).
#[derive(Debug, Clone)]
pub struct FloatModel {
    input_dim: usize,
    stages: Vec<FloatStage>,
}

fn layer_scale(q: QuantParams) -> f32 {
    if q.is_pass_through() {
        1.0
    } else {
        (q.scale_mult as f64 / 2f64.powi(31 + q.right_shift as i32)) as f32
    }
}

impl FloatModel {
    pub fn from_quantized(model: &QuantizedModel) -> Self {
        let deq = |w: &[i8], b: &[i32], q: QuantParams| {
            let s = layer_scale(q);
            (
                w.iter().map(|&v| v as f32 * s).collect::<Vec<_>>(),
                b.iter().map(|&v| v as f32 * s).collect::<Vec<_>>(),
            )
        };
        let stages = model
            .layers()
            .iter()
            .filter_map(|layer| match layer {
                Layer::Dense(d) => {
                    let (weights, bias) = deq(&d.weights, &d.bias, d.quant);
                    Some(FloatStage::Dense {
                        rows: d.out_dim as usize,
                        cols: d.in_dim as usize,
                        weights,
                        bias,
                    })
                }
                Layer::Conv2d(c) => {
                    let (weights, bias) = deq(&c.weights, &c.bias, c.quant);
                    Some(FloatStage::Conv {
                        layer: c.clone(),
                        weights,
                        bias,
                    })
                }
                Layer::Relu { .. } => Some(FloatStage::Relu),
                Layer::ArgmaxHead { .. } => None,
            })
            .collect();
        Self {
            input_dim: model.input_dim(),
            stages,
        }
    }

    pub fn forward(&self, pixels: &[u8]) -> Vec<f32> {
        assert_eq!(pixels.len(), self.input_dim);
        let mut cur: Vec<f32> = pixels.iter().map(|&p| p as f32).collect();
        for stage in &self.stages {
            cur = match stage {
                FloatStage::Dense {
                    rows,
                    cols,
                    weights,
                    bias,
                } => (0..*rows)
                    .map(|r| {
                        let w = &weights[r * cols..(r + 1) * cols];
                        bias[r] + w.iter().zip(&cur).map(|(a, b)| a * b).sum::<f32>()
                    })
                    .collect(),
                FloatStage::Conv { layer, weights, bias } => conv_f32(layer, weights, bias, &cur),
                FloatStage::Relu => cur.into_iter().map(|v| v.max(0.0)).collect(),
            };
        }
        cur
    }
}

fn conv_f32(c: &Conv2d, weights: &[f32], bias: &[f32], x: &[f32]) -> Vec<f32> {
    let (in_h, in_w) = (c.in_height as usize, c.in_width as usize);
    let (k_h, k_w) = (c.kernel_h as usize, c.kernel_w as usize);
    let (out_h, out_w) = (c.out_height() as usize, c.out_width() as usize);
    let (stride, pad) = (c.stride as usize, c.padding as isize);
    let fan_in = c.fan_in();
    let mut patch = vec![0f32; fan_in];
    let mut out = vec![0f32; c.out_channels as usize * out_h * out_w];
    for oy in 0..out_h {
        for ox in 0..out_w {
            let mut idx = 0;
            for ci in 0..c.in_channels as usize {
                for ky in 0..k_h {
                    let iy = (oy * stride + ky) as isize - pad;
                    for kx in 0..k_w {
                        let ix = (ox * stride + kx) as isize - pad;
                        patch[idx] = if iy >= 0 && ix >= 0 && (iy as usize) < in_h && (ix as usize) < in_w {
                            x[(ci * in_h + iy as usize) * in_w + ix as usize]
                        } else {
                            0.0
                        };
                        idx += 1;
                    }
                }
            }
            for oc in 0..c.out_channels as usize {
                let w = &weights[oc * fan_in..(oc + 1) * fan_in];
                out[(oc * out_h + oy) * out_w + ox] =
                    bias[oc] + w.iter().zip(&patch).map(|(a, b)| a * b).sum::<f32>();
            }
        }
    }
    out
}

/// The float counterpart of an `IRSQNN1` file: identical header and layer
/// records, except that weights and biases are f32 and the requantization
/// triple becomes an f32 scale plus an i32 zero point.
pub fn float_container(model: &QuantizedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(FLOAT_MAGIC);
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&(model.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(model.num_classes() as u32).to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u16).to_le_bytes());
    for layer in model.layers() {
        out.push(layer.kind());
        let dims: Vec<u32> = match layer {
            Layer::Dense(d) => vec![d.in_dim, d.out_dim],
            Layer::Conv2d(c) => vec![
                c.in_channels,
                c.in_height,
                c.in_width,
                c.out_channels,
                c.kernel_h,
                c.kernel_w,
                c.stride,
                c.padding,
            ],
            Layer::Relu { len, .. } => vec![*len],
            Layer::ArgmaxHead { classes } => vec![*classes],
        };
        for d in dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        let s = layer_scale(layer.quant());
        for &w in layer.weights() {
            out.extend_from_slice(&(w as f32 * s).to_le_bytes());
        }
        for &b in layer.bias() {
            out.extend_from_slice(&(b as f32 * s).to_le_bytes());
        }
        out.extend_from_slice(&s.to_le_bytes());
        out.extend_from_slice(&layer.quant().zero_point.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub reps: u64,
    pub weights: u64,
    pub int_ns_per_forward: f64,
    pub float_ns_per_forward: f64,
    pub int_payload_bytes: u64,
    pub float_payload_bytes: u64,
    pub int_container_bytes: u64,
    pub float_container_bytes: u64,
}

impl BenchReport {
    pub fn time_ratio(&self) -> f64 {
        self.int_ns_per_forward / self.float_ns_per_forward
    }

    /// True when the int8 weight payload is exactly a quarter of the f32 one.
    pub fn payload_is_quarter(&self) -> bool {
        4 * self.int_payload_bytes == self.float_payload_bytes
    }

    /// Fraction of the float container saved, in percent (rounded down).
    pub fn container_saving_pct(&self) -> u64 {
        100 - (100 * self.int_container_bytes).div_ceil(self.float_container_bytes)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "metric,value\nreps,{}\nweights,{}\nint_ns_per_forward,{:.1}\nfloat_ns_per_forward,{:.1}\n\
             int_over_float_time,{:.4}\nint_payload_bytes,{}\nfloat_payload_bytes,{}\n\
             int_container_bytes,{}\nfloat_container_bytes,{}\ncontainer_saving_pct,{}\n",
            self.reps,
            self.weights,
            self.int_ns_per_forward,
            self.float_ns_per_forward,
            self.time_ratio(),
            self.int_payload_bytes,
            self.float_payload_bytes,
            self.int_container_bytes,
            self.float_container_bytes,
            self.container_saving_pct(),
        )
    }
}

/// Times `reps` forward passes of each path over a fixed batch of random inputs.
pub fn run_bench(model: &QuantizedModel, reps: u64, seed: u64) -> Result<BenchReport, CliError> {
    if reps == 0 {
        return Err(CliError::Usage("reps must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let inputs: Vec<Vec<u8>> = (0..16)
        .map(|_| (0..model.input_dim()).map(|_| rng.gen::<u8>()).collect())
        .collect();
    let float = FloatModel::from_quantized(model);

    let mut ws = Workspace::new();
    // warm both paths once before timing
    for x in &inputs {
        black_box(model.forward_with(x, &mut ws)?);
        black_box(float.forward(x));
    }
    let start = Instant::now();
    for i in 0..reps {
        black_box(model.forward_with(black_box(&inputs[i as usize % inputs.len()]), &mut ws)?);
    }
    let int_ns = start.elapsed().as_nanos() as f64 / reps as f64;
    let start = Instant::now();
    for i in 0..reps {
        black_box(float.forward(black_box(&inputs[i as usize % inputs.len()])));
    }
    let float_ns = start.elapsed().as_nanos() as f64 / reps as f64;

    let weights = model.weight_count() as u64;
    Ok(BenchReport {
        reps,
        weights,
        int_ns_per_forward: int_ns,
        float_ns_per_forward: float_ns,
        int_payload_bytes: weights,
        float_payload_bytes: 4 * weights,
        int_container_bytes: model.to_bytes().len() as u64,
        float_container_bytes: float_container(model).len() as u64,
    })
}

/// A CIFAR-shaped convolutional network with random int8 weights, for
/// timing at a realistic size: two 3x3 convolutions on a 3x32x32 input and
/// a dense layer to 10 classes.
pub fn reference_architecture(seed: u64) -> QuantizedModel {
    let mut rng = stream_rng(seed, 1);
    let mut weights = |n: usize| (0..n).map(|_| rng.gen_range(-127i8..=127)).collect::<Vec<_>>();
    let conv = |in_c: u32, hw: u32, out_c: u32, stride: u32, w: Vec<i8>, zp_shift: u8| Conv2d {
        in_channels: in_c,
        in_height: hw,
        in_width: hw,
        out_channels: out_c,
        kernel_h: 3,
        kernel_w: 3,
        stride,
        padding: 1,
        weights: w,
        bias: vec![0; out_c as usize],
        quant: QuantParams::new(1 << 30, zp_shift, -128),
    };
    let c1 = conv(3, 32, 16, 1, weights(16 * 27), 10);
    let c2 = conv(16, 32, 32, 2, weights(32 * 144), 12);
    let flat = c2.out_len();
    let dense = Dense {
        in_dim: flat as u32,
        out_dim: 10,
        weights: weights(10 * flat),
        bias: vec![0; 10],
        quant: QuantParams::PASS_THROUGH,
    };
    let (l1, l2) = (c1.out_len() as u32, flat as u32);
    QuantizedModel::new(
        3 * 32 * 32,
        10,
        vec![
            Layer::Conv2d(c1),
            Layer::Relu {
                len: l1,
                zero_point: -128,
            },
            Layer::Conv2d(c2),
            Layer::Relu {
                len: l2,
                zero_point: -128,
            },
            Layer::Dense(dense),
            Layer::ArgmaxHead { classes: 10 },
        ],
    )
    .expect("reference architecture is valid")
}

/// Convenience for tests: the integer and float argmax on one input.
pub fn both_labels(
    model: &QuantizedModel,
    float: &FloatModel,
    pixels: &[u8],
) -> Result<(usize, usize), CliError> {
    let int_label = model.classify(&LatticeInput::new(pixels.to_vec()))?;
    let logits = float.forward(pixels);
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    Ok((int_label, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_reps_is_an_argument_error() {
        let model = reference_architecture(0);
        assert!(matches!(run_bench(&model, 0, 0), Err(CliError::Usage(_))));
    }

    #[test]
    fn payload_and_container_sizes() {
        let model = reference_architecture(0);
        let r = run_bench(&model, 2, 0).unwrap();
        assert!(r.payload_is_quarter());
        assert_eq!(r.int_payload_bytes, model.weight_count() as u64);
        assert!(r.container_saving_pct() >= 40, "{}", r.to_csv());
    }

    #[test]
    fn float_reference_tracks_the_integer_model() {
        let model = crate::toy::toy_model(32).unwrap();
        let float = FloatModel::from_quantized(&model);
        let test = crate::toy::toy_test_set();
        let agree = test
            .items
            .iter()
            .filter(|it| {
                let (a, b) = both_labels(&model, &float, it.input.pixels()).unwrap();
                a == b
            })
            .count();
        assert!(agree * 100 >= test.len() * 95, "{agree}/{}", test.len());
    }
}
