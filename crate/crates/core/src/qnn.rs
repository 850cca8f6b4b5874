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

//! Integer-only inference for int8-quantized feed-forward classifiers.
//!
//! Activations travel as int8 values with a per-layer zero point; the network
//! input is raw pixels in `[0, 255]` with zero point 0. Each dense or conv
//! layer computes `acc = bias + sum w * (a - zp_in)` in int32 and requantizes
//!
//! ```text
//! out = clamp(round_half_away(acc * scale_mult / 2^(31 + right_shift)) + zero_point, -128, 127)
//! ```
//!
//! A layer whose multiplier is zero is pass-through: it emits the raw int32
//! accumulator and may only feed the argmax head. The loader proves
//! `fan_in * 128 * 255 + |bias| < 2^31` for every layer, so no accumulator
//! can overflow on any input.

use std::io::Write;

use thiserror::Error;

pub const MODEL_MAGIC: &[u8; 7] = b"IRSQNN1";
pub const FORMAT_VERSION: u16 = 1;

/// Largest magnitude of `a - zp_in` for any activation or pixel.
const MAX_INPUT_MAG: i64 = 255;
/// Largest magnitude of an int8 weight.
const MAX_WEIGHT_MAG: i64 = 128;

#[derive(Debug, Error)]
pub enum QnnError {
    #[error("model format error at byte {offset}{}: {msg}", layer_suffix(*.layer))]
    Format {
        offset: usize,
        layer: Option<usize>,
        msg: String,
    },
    #[error("invalid layer {layer}: {msg}")]
    Invalid { layer: usize, msg: String },
    #[error("layer {layer} may overflow its int32 accumulator (worst case {bound})")]
    AccumulatorOverflow { layer: usize, bound: i64 },
    #[error("input has {got} values, model expects {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("pixel value {0} outside [0, 255]")]
    PixelRange(i64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn layer_suffix(layer: Option<usize>) -> String {
    layer.map(|l| format!(" (layer {l})")).unwrap_or_default()
}

/// Fixed-point requantization constants of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantParams {
    pub scale_mult: i32,
    pub right_shift: u8,
    pub zero_point: i32,
}

impl QuantParams {
    pub const PASS_THROUGH: QuantParams = QuantParams {
        scale_mult: 0,
        right_shift: 0,
        zero_point: 0,
    };

    pub fn new(scale_mult: i32, right_shift: u8, zero_point: i32) -> Self {
        Self {
            scale_mult,
            right_shift,
            zero_point,
        }
    }

    pub fn is_pass_through(&self) -> bool {
        *self == Self::PASS_THROUGH
    }

    fn validate(&self) -> Result<(), String> {
        if self.is_pass_through() {
            return Ok(());
        }
        if !((1 << 30)..=i32::MAX).contains(&self.scale_mult) {
            return Err(format!(
                "scale_mult {} not normalized to [2^30, 2^31)",
                self.scale_mult
            ));
        }
        if self.right_shift > 62 {
            return Err(format!("right_shift {} exceeds 62", self.right_shift));
        }
        if !(-128..=127).contains(&self.zero_point) {
            return Err(format!("zero_point {} outside int8", self.zero_point));
        }
        Ok(())
    }

    /// Rescales an accumulator to the int8 output domain.
    #[inline]
    pub fn requantize(&self, acc: i32) -> i32 {
        if self.scale_mult == 0 {
            return acc;
        }
        let prod = acc as i128 * self.scale_mult as i128;
        let shift = 31 + self.right_shift as u32;
        let half = 1i128 << (shift - 1);
        let mag = (prod.abs() + half) >> shift;
        let rounded = if prod < 0 { -mag } else { mag };
        (rounded + self.zero_point as i128).clamp(-128, 127) as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dense {
    pub in_dim: u32,
    pub out_dim: u32,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<i8>,
    pub bias: Vec<i32>,
    pub quant: QuantParams,
}

/// 2-D convolution over a CHW tensor; output is CHW as well.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conv2d {
    pub in_channels: u32,
    pub in_height: u32,
    pub in_width: u32,
    pub out_channels: u32,
    pub kernel_h: u32,
    pub kernel_w: u32,
    pub stride: u32,
    pub padding: u32,
    /// `out_channels x in_channels x kernel_h x kernel_w`, row-major.
    pub weights: Vec<i8>,
    pub bias: Vec<i32>,
    pub quant: QuantParams,
}

impl Conv2d {
    pub fn out_height(&self) -> u32 {
        (self.in_height + 2 * self.padding - self.kernel_h) / self.stride + 1
    }

    pub fn out_width(&self) -> u32 {
        (self.in_width + 2 * self.padding - self.kernel_w) / self.stride + 1
    }

    pub fn fan_in(&self) -> usize {
        (self.in_channels * self.kernel_h * self.kernel_w) as usize
    }

    pub fn in_len(&self) -> usize {
        (self.in_channels * self.in_height * self.in_width) as usize
    }

    pub fn out_len(&self) -> usize {
        (self.out_channels * self.out_height() * self.out_width()) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    /// `max(a, zero_point)`; the zero point must match the incoming one.
    Relu {
        len: u32,
        zero_point: i32,
    },
    ArgmaxHead {
        classes: u32,
    },
}

impl Layer {
    /// Tag byte of the layer record in `IRSQNN1` files.
    pub fn kind(&self) -> u8 {
        match self {
            Layer::Dense(_) => 0,
            Layer::Conv2d(_) => 1,
            Layer::Relu { .. } => 2,
            Layer::ArgmaxHead { .. } => 3,
        }
    }

    pub fn weights(&self) -> &[i8] {
        match self {
            Layer::Dense(d) => &d.weights,
            Layer::Conv2d(c) => &c.weights,
            _ => &[],
        }
    }

    pub fn bias(&self) -> &[i32] {
        match self {
            Layer::Dense(d) => &d.bias,
            Layer::Conv2d(c) => &c.bias,
            _ => &[],
        }
    }

    pub fn quant(&self) -> QuantParams {
        match self {
            Layer::Dense(d) => d.quant,
            Layer::Conv2d(c) => c.quant,
            Layer::Relu { zero_point, .. } => QuantParams::new(0, 0, *zero_point),
            Layer::ArgmaxHead { .. } => QuantParams::PASS_THROUGH,
        }
    }
}

/// A vector of pixels on the integer lattice `[0, 255]^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeInput {
    pixels: Vec<u8>,
}

impl LatticeInput {
    pub fn new(pixels: Vec<u8>) -> Self {
        Self { pixels }
    }

    pub fn from_values(values: &[i64]) -> Result<Self, QnnError> {
        values
            .iter()
            .map(|&v| u8::try_from(v).map_err(|_| QnnError::PixelRange(v)))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn dim(&self) -> usize {
        self.pixels.len()
    }
}

/// `clamp(x + noise, 0, 255)` entrywise.
pub fn perturb_and_clamp(input: &LatticeInput, noise: &[i64]) -> Result<LatticeInput, QnnError> {
    let mut out = vec![0u8; input.dim()];
    perturb_into(input.pixels(), noise, &mut out)?;
    Ok(LatticeInput::new(out))
}

/// Allocation-free form of [`perturb_and_clamp`].
pub fn perturb_into(pixels: &[u8], noise: &[i64], out: &mut [u8]) -> Result<(), QnnError> {
    if noise.len() != pixels.len() || out.len() != pixels.len() {
        return Err(QnnError::InputShape {
            expected: pixels.len(),
            got: noise.len(),
        });
    }
    for ((o, &p), &n) in out.iter_mut().zip(pixels).zip(noise) {
        *o = (p as i64).saturating_add(n).clamp(0, 255) as u8;
    }
    Ok(())
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(logits: &[i32]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
enum Stage {
    Dense {
        in_zp: i32,
        rows: usize,
        cols: usize,
        weights: Vec<i16>,
        bias: Vec<i32>,
        quant: QuantParams,
    },
    Conv {
        in_zp: i32,
        geom: ConvGeom,
        weights: Vec<i16>,
        bias: Vec<i32>,
        quant: QuantParams,
    },
    Relu {
        zero_point: i32,
    },
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    in_c: usize,
    in_h: usize,
    in_w: usize,
    out_c: usize,
    k_h: usize,
    k_w: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
}

/// Reusable scratch buffers for [`QuantizedModel::forward_with`].
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    cur: Vec<i32>,
    next: Vec<i32>,
    centered: Vec<i16>,
    patches: Vec<i16>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// A validated int8 classifier over `[0, 255]^input_dim`.
#[derive(Debug, Clone)]
pub struct QuantizedModel {
    input_dim: usize,
    num_classes: usize,
    layers: Vec<Layer>,
    stages: Vec<Stage>,
}

impl QuantizedModel {
    /// Validates shapes, requantization constants and the accumulator bound.
    pub fn new(input_dim: usize, num_classes: usize, layers: Vec<Layer>) -> Result<Self, QnnError> {
        let invalid = |layer: usize, msg: String| QnnError::Invalid { layer, msg };
        if input_dim == 0 {
            return Err(invalid(0, "input dimension must be positive".into()));
        }
        let mut cur_len = input_dim;
        let mut cur_zp = 0i32;
        let mut raw_int32 = false;
        let mut head_seen = false;
        let mut stages = Vec::with_capacity(layers.len());

        for (idx, layer) in layers.iter().enumerate() {
            if head_seen {
                return Err(invalid(idx, "layers after the argmax head".into()));
            }
            if raw_int32 && !matches!(layer, Layer::ArgmaxHead { .. }) {
                return Err(invalid(
                    idx,
                    "only the argmax head may follow a pass-through layer".into(),
                ));
            }
            match layer {
                Layer::Dense(d) => {
                    let (rows, cols) = (d.out_dim as usize, d.in_dim as usize);
                    if cols != cur_len {
                        return Err(invalid(
                            idx,
                            format!("expects {cols} inputs, previous layer emits {cur_len}"),
                        ));
                    }
                    if rows == 0 || d.weights.len() != rows * cols || d.bias.len() != rows {
                        return Err(invalid(idx, "weight or bias length does not match shape".into()));
                    }
                    d.quant.validate().map_err(|m| invalid(idx, m))?;
                    check_accumulator(idx, cols, &d.bias)?;
                    stages.push(Stage::Dense {
                        in_zp: cur_zp,
                        rows,
                        cols,
                        weights: d.weights.iter().map(|&w| w as i16).collect(),
                        bias: d.bias.clone(),
                        quant: d.quant,
                    });
                    cur_len = rows;
                    cur_zp = d.quant.zero_point;
                    raw_int32 = d.quant.is_pass_through();
                }
                Layer::Conv2d(c) => {
                    if c.in_len() != cur_len {
                        return Err(invalid(
                            idx,
                            format!("expects {} inputs, previous layer emits {cur_len}", c.in_len()),
                        ));
                    }
                    if c.stride == 0
                        || c.kernel_h == 0
                        || c.kernel_w == 0
                        || c.out_channels == 0
                        || c.kernel_h > c.in_height + 2 * c.padding
                        || c.kernel_w > c.in_width + 2 * c.padding
                    {
                        return Err(invalid(idx, "degenerate convolution geometry".into()));
                    }
                    if c.weights.len() != c.out_channels as usize * c.fan_in()
                        || c.bias.len() != c.out_channels as usize
                    {
                        return Err(invalid(idx, "weight or bias length does not match shape".into()));
                    }
                    c.quant.validate().map_err(|m| invalid(idx, m))?;
                    check_accumulator(idx, c.fan_in(), &c.bias)?;
                    let geom = ConvGeom {
                        in_c: c.in_channels as usize,
                        in_h: c.in_height as usize,
                        in_w: c.in_width as usize,
                        out_c: c.out_channels as usize,
                        k_h: c.kernel_h as usize,
                        k_w: c.kernel_w as usize,
                        stride: c.stride as usize,
                        pad: c.padding as usize,
                        out_h: c.out_height() as usize,
                        out_w: c.out_width() as usize,
                    };
                    stages.push(Stage::Conv {
                        in_zp: cur_zp,
                        geom,
                        weights: c.weights.iter().map(|&w| w as i16).collect(),
                        bias: c.bias.clone(),
                        quant: c.quant,
                    });
                    cur_len = c.out_len();
                    cur_zp = c.quant.zero_point;
                    raw_int32 = c.quant.is_pass_through();
                }
                Layer::Relu { len, zero_point } => {
                    if *len as usize != cur_len {
                        return Err(invalid(
                            idx,
                            format!("relu over {len} values, previous layer emits {cur_len}"),
                        ));
                    }
                    if *zero_point != cur_zp {
                        return Err(invalid(
                            idx,
                            format!("relu zero point {zero_point} differs from incoming {cur_zp}"),
                        ));
                    }
                    stages.push(Stage::Relu {
                        zero_point: *zero_point,
                    });
                }
                Layer::ArgmaxHead { classes } => {
                    if *classes as usize != cur_len || cur_len != num_classes {
                        return Err(invalid(idx, format!(
                            "head over {classes} classes, previous layer emits {cur_len}, model declares {num_classes}"
                        )));
                    }
                    head_seen = true;
                }
            }
        }
        if !head_seen {
            return Err(invalid(layers.len(), "model has no argmax head".into()));
        }
        if num_classes < 2 {
            return Err(invalid(layers.len() - 1, "need at least two classes".into()));
        }
        Ok(Self {
            input_dim,
            num_classes,
            layers,
            stages,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total number of int8 weights.
    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights().len()).sum()
    }

    pub fn forward(&self, input: &LatticeInput) -> Result<Vec<i32>, QnnError> {
        let mut ws = Workspace::new();
        Ok(self.forward_with(input.pixels(), &mut ws)?.to_vec())
    }

    pub fn classify(&self, input: &LatticeInput) -> Result<usize, QnnError> {
        let mut ws = Workspace::new();
        self.classify_with(input.pixels(), &mut ws)
    }

    pub fn classify_with(&self, pixels: &[u8], ws: &mut Workspace) -> Result<usize, QnnError> {
        Ok(argmax(self.forward_with(pixels, ws)?))
    }

    /// Runs the network, returning the logits held inside `ws`.
    pub fn forward_with<'w>(&self, pixels: &[u8], ws: &'w mut Workspace) -> Result<&'w [i32], QnnError> {
        if pixels.len() != self.input_dim {
            return Err(QnnError::InputShape {
                expected: self.input_dim,
                got: pixels.len(),
            });
        }
        ws.cur.clear();
        ws.cur.extend(pixels.iter().map(|&p| p as i32));
        for stage in &self.stages {
            match stage {
                Stage::Dense {
                    in_zp,
                    rows,
                    cols,
                    weights,
                    bias,
                    quant,
                } => {
                    center(&ws.cur, *in_zp, &mut ws.centered);
                    ws.next.clear();
                    ws.next.resize(*rows, 0);
                    gemv(weights, *cols, &ws.centered, bias, &mut ws.next);
                    for v in ws.next.iter_mut() {
                        *v = quant.requantize(*v);
                    }
                    std::mem::swap(&mut ws.cur, &mut ws.next);
                }
                Stage::Conv {
                    in_zp,
                    geom,
                    weights,
                    bias,
                    quant,
                } => {
                    center(&ws.cur, *in_zp, &mut ws.centered);
                    im2col(geom, &ws.centered, &mut ws.patches);
                    let positions = geom.out_h * geom.out_w;
                    let fan_in = geom.in_c * geom.k_h * geom.k_w;
                    ws.next.clear();
                    ws.next.resize(geom.out_c * positions, 0);
                    for oc in 0..geom.out_c {
                        let w = &weights[oc * fan_in..(oc + 1) * fan_in];
                        let out = &mut ws.next[oc * positions..(oc + 1) * positions];
                        for (pos, o) in out.iter_mut().enumerate() {
                            let patch = &ws.patches[pos * fan_in..(pos + 1) * fan_in];
                            *o = quant.requantize(bias[oc].wrapping_add(dot(w, patch)));
                        }
                    }
                    std::mem::swap(&mut ws.cur, &mut ws.next);
                }
                Stage::Relu { zero_point } => {
                    for v in ws.cur.iter_mut() {
                        *v = (*v).max(*zero_point);
                    }
                }
            }
        }
        Ok(&ws.cur)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), QnnError> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.input_dim as u32).to_le_bytes())?;
        w.write_all(&(self.num_classes as u32).to_le_bytes())?;
        w.write_all(&(self.layers.len() as u16).to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&[layer.kind()])?;
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
                w.write_all(&d.to_le_bytes())?;
            }
            let weights: Vec<u8> = layer.weights().iter().map(|&v| v as u8).collect();
            w.write_all(&weights)?;
            for b in layer.bias() {
                w.write_all(&b.to_le_bytes())?;
            }
            let q = layer.quant();
            w.write_all(&q.scale_mult.to_le_bytes())?;
            w.write_all(&[q.right_shift])?;
            w.write_all(&q.zero_point.to_le_bytes())?;
        }
        Ok(())
    }
}

fn check_accumulator(layer: usize, fan_in: usize, bias: &[i32]) -> Result<(), QnnError> {
    let max_bias = bias.iter().map(|b| (*b as i64).abs()).max().unwrap_or(0);
    let bound = fan_in as i64 * MAX_WEIGHT_MAG * MAX_INPUT_MAG + max_bias;
    if bound >= 1i64 << 31 {
        return Err(QnnError::AccumulatorOverflow { layer, bound });
    }
    Ok(())
}

fn center(src: &[i32], zp: i32, dst: &mut Vec<i16>) {
    dst.clear();
    dst.extend(src.iter().map(|&v| (v - zp) as i16));
}

// The accumulator bound checked in `QuantizedModel::new` rules out
// overflow in `dot` and `gemv`. Wrapping operations keep both loops
// vectorizable in builds with overflow checks.
#[inline]
fn dot(w: &[i16], x: &[i16]) -> i32 {
    w.iter().zip(x).fold(0i32, |acc, (&a, &b)| {
        acc.wrapping_add((a as i32).wrapping_mul(b as i32))
    })
}

/// `out[r] = bias[r] + W[r] . x`, four rows per pass over `x`.
fn gemv(weights: &[i16], cols: usize, x: &[i16], bias: &[i32], out: &mut [i32]) {
    let rows = out.len();
    let mut r = 0;
    while r + 4 <= rows {
        let w0 = &weights[r * cols..(r + 1) * cols];
        let w1 = &weights[(r + 1) * cols..(r + 2) * cols];
        let w2 = &weights[(r + 2) * cols..(r + 3) * cols];
        let w3 = &weights[(r + 3) * cols..(r + 4) * cols];
        let (mut a0, mut a1, mut a2, mut a3) = (0i32, 0i32, 0i32, 0i32);
        for c in 0..cols {
            let v = x[c] as i32;
            a0 = a0.wrapping_add((w0[c] as i32).wrapping_mul(v));
            a1 = a1.wrapping_add((w1[c] as i32).wrapping_mul(v));
            a2 = a2.wrapping_add((w2[c] as i32).wrapping_mul(v));
            a3 = a3.wrapping_add((w3[c] as i32).wrapping_mul(v));
        }
        out[r] = bias[r].wrapping_add(a0);
        out[r + 1] = bias[r + 1].wrapping_add(a1);
        out[r + 2] = bias[r + 2].wrapping_add(a2);
        out[r + 3] = bias[r + 3].wrapping_add(a3);
        r += 4;
    }
    while r < rows {
        out[r] = bias[r].wrapping_add(dot(&weights[r * cols..(r + 1) * cols], x));
        r += 1;
    }
}

/// Unfolds padded receptive fields into rows of length `in_c * k_h * k_w`.
/// Padding contributes zero, i.e. the real value 0 after centering.
fn im2col(g: &ConvGeom, x: &[i16], patches: &mut Vec<i16>) {
    let fan_in = g.in_c * g.k_h * g.k_w;
    patches.clear();
    patches.resize(g.out_h * g.out_w * fan_in, 0);
    let mut idx = 0;
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            for ci in 0..g.in_c {
                for ky in 0..g.k_h {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    for kx in 0..g.k_w {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if iy >= 0 && ix >= 0 && (iy as usize) < g.in_h && (ix as usize) < g.in_w {
                            patches[idx] = x[(ci * g.in_h + iy as usize) * g.in_w + ix as usize];
                        }
                        idx += 1;
                    }
                }
            }
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    layer: Option<usize>,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], QnnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.err(&format!("truncated while reading {what}"))),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8, QnnError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, QnnError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, QnnError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn i32(&mut self, what: &str) -> Result<i32, QnnError> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn err(&self, msg: &str) -> QnnError {
        QnnError::Format {
            offset: self.pos,
            layer: self.layer,
            msg: msg.to_string(),
        }
    }
}

/// Parses and validates an `IRSQNN1` model.
pub fn load_model(bytes: &[u8]) -> Result<QuantizedModel, QnnError> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        layer: None,
    };
    if c.take(7, "magic")? != MODEL_MAGIC {
        c.pos = 0;
        return Err(c.err("bad magic, expected IRSQNN1"));
    }
    let version = c.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(c.err(&format!("unsupported version {version}")));
    }
    let d = c.u32("input dimension")? as usize;
    let classes = c.u32("class count")? as usize;
    let count = c.u16("layer count")? as usize;
    let mut layers = Vec::with_capacity(count);
    for idx in 0..count {
        c.layer = Some(idx);
        let kind = c.u8("layer kind")?;
        let layer = match kind {
            0 => {
                let in_dim = c.u32("dense in_dim")?;
                let out_dim = c.u32("dense out_dim")?;
                let n = (in_dim as usize)
                    .checked_mul(out_dim as usize)
                    .ok_or_else(|| c.err("dense shape overflows"))?;
                let weights = read_weights(&mut c, n)?;
                let bias = read_bias(&mut c, out_dim as usize)?;
                let quant = read_quant(&mut c)?;
                Layer::Dense(Dense {
                    in_dim,
                    out_dim,
                    weights,
                    bias,
                    quant,
                })
            }
            1 => {
                let mut dims = [0u32; 8];
                for d in dims.iter_mut() {
                    *d = c.u32("conv2d dims")?;
                }
                let [in_channels, in_height, in_width, out_channels, kernel_h, kernel_w, stride, padding] =
                    dims;
                let n = [out_channels, in_channels, kernel_h, kernel_w]
                    .iter()
                    .try_fold(1usize, |acc, &v| acc.checked_mul(v as usize))
                    .ok_or_else(|| c.err("conv2d shape overflows"))?;
                let weights = read_weights(&mut c, n)?;
                let bias = read_bias(&mut c, out_channels as usize)?;
                let quant = read_quant(&mut c)?;
                Layer::Conv2d(Conv2d {
                    in_channels,
                    in_height,
                    in_width,
                    out_channels,
                    kernel_h,
                    kernel_w,
                    stride,
                    padding,
                    weights,
                    bias,
                    quant,
                })
            }
            2 => {
                let len = c.u32("relu length")?;
                let q = read_quant(&mut c)?;
                Layer::Relu {
                    len,
                    zero_point: q.zero_point,
                }
            }
            3 => {
                let classes = c.u32("head classes")?;
                read_quant(&mut c)?;
                Layer::ArgmaxHead { classes }
            }
            other => return Err(c.err(&format!("unknown layer kind {other}"))),
        };
        layers.push(layer);
    }
    c.layer = None;
    if c.pos != bytes.len() {
        return Err(c.err("trailing bytes after the last layer"));
    }
    QuantizedModel::new(d, classes, layers)
}

fn read_weights(c: &mut Cursor<'_>, n: usize) -> Result<Vec<i8>, QnnError> {
    Ok(c.take(n, "weights")?.iter().map(|&b| b as i8).collect())
}

fn read_bias(c: &mut Cursor<'_>, n: usize) -> Result<Vec<i32>, QnnError> {
    (0..n).map(|_| c.i32("bias")).collect()
}

fn read_quant(c: &mut Cursor<'_>) -> Result<QuantParams, QnnError> {
    let scale_mult = c.i32("scale_mult")?;
    let right_shift = c.u8("right_shift")?;
    let zero_point = c.i32("zero_point")?;
    Ok(QuantParams::new(scale_mult, right_shift, zero_point))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense d->d with weight 1 on the diagonal, raw int32 output.
    fn identity(d: u32) -> QuantizedModel {
        let mut weights = vec![0i8; (d * d) as usize];
        for i in 0..d as usize {
            weights[i * d as usize + i] = 1;
        }
        QuantizedModel::new(
            d as usize,
            d as usize,
            vec![
                Layer::Dense(Dense {
                    in_dim: d,
                    out_dim: d,
                    weights,
                    bias: vec![0; d as usize],
                    quant: QuantParams::PASS_THROUGH,
                }),
                Layer::ArgmaxHead { classes: d },
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_model_preserves_argmax() {
        let m = identity(4);
        let x = LatticeInput::new(vec![3, 9, 200, 7]);
        assert_eq!(m.forward(&x).unwrap(), vec![3, 9, 200, 7]);
        assert_eq!(m.classify(&x).unwrap(), 2);
        let back = load_model(&m.to_bytes()).unwrap();
        assert_eq!(back.classify(&x).unwrap(), 2);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[5, 5, 1]), 0);
        assert_eq!(argmax(&[1, 5, 5]), 1);
    }

    #[test]
    fn constant_network_ignores_input() {
        let q = QuantParams::new(1 << 30, 2, 3); // x / 8 + 3
        let m = QuantizedModel::new(
            3,
            2,
            vec![
                Layer::Dense(Dense {
                    in_dim: 3,
                    out_dim: 2,
                    weights: vec![0; 6],
                    bias: vec![100, -100],
                    quant: q,
                }),
                Layer::ArgmaxHead { classes: 2 },
            ],
        )
        .unwrap();
        for x in [[0u8, 0, 0], [255, 1, 77]] {
            // 100/8 = 12.5 -> 13 ; -12.5 -> -13
            assert_eq!(m.forward(&LatticeInput::new(x.to_vec())).unwrap(), vec![16, -10]);
        }
    }

    #[test]
    fn requantize_rounds_half_away_from_zero() {
        let q = QuantParams::new(1 << 30, 0, 0); // x / 2
        assert_eq!(q.requantize(3), 2);
        assert_eq!(q.requantize(-3), -2);
        assert_eq!(q.requantize(2), 1);
        assert_eq!(q.requantize(1000), 127);
        assert_eq!(q.requantize(-1000), -128);
        let shifted = QuantParams::new(1 << 30, 0, -128);
        assert_eq!(shifted.requantize(0), -128);
    }

    #[test]
    fn perturbation_clamps() {
        let x = LatticeInput::new(vec![250, 3, 100]);
        assert_eq!(perturb_and_clamp(&x, &[0, 0, 0]).unwrap(), x);
        let y = perturb_and_clamp(&x, &[20, -10, 5]).unwrap();
        assert_eq!(y.pixels(), &[255, 0, 105]);
        assert!(perturb_and_clamp(&x, &[1, 2]).is_err());
    }

    #[test]
    fn rejects_bad_models() {
        assert!(load_model(&[]).is_err());
        let bytes = identity(3).to_bytes();
        assert!(matches!(
            load_model(&bytes[..bytes.len() - 2]),
            Err(QnnError::Format { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'J';
        assert!(load_model(&bad).is_err());

        // fan-in 70000 * 128 * 255 overflows int32
        let big = QuantizedModel::new(
            70_000,
            2,
            vec![
                Layer::Dense(Dense {
                    in_dim: 70_000,
                    out_dim: 2,
                    weights: vec![1; 140_000],
                    bias: vec![0, 0],
                    quant: QuantParams::PASS_THROUGH,
                }),
                Layer::ArgmaxHead { classes: 2 },
            ],
        );
        assert!(matches!(big, Err(QnnError::AccumulatorOverflow { layer: 0, .. })));

        let mismatched = QuantizedModel::new(
            3,
            2,
            vec![
                Layer::Dense(Dense {
                    in_dim: 4,
                    out_dim: 2,
                    weights: vec![0; 8],
                    bias: vec![0; 2],
                    quant: QuantParams::PASS_THROUGH,
                }),
                Layer::ArgmaxHead { classes: 2 },
            ],
        );
        assert!(matches!(mismatched, Err(QnnError::Invalid { layer: 0, .. })));

        let no_head = QuantizedModel::new(
            2,
            2,
            vec![Layer::Dense(Dense {
                in_dim: 2,
                out_dim: 2,
                weights: vec![0; 4],
                bias: vec![0; 2],
                quant: QuantParams::PASS_THROUGH,
            })],
        );
        assert!(no_head.is_err());

        let bad_mult = QuantizedModel::new(
            2,
            2,
            vec![
                Layer::Dense(Dense {
                    in_dim: 2,
                    out_dim: 2,
                    weights: vec![0; 4],
                    bias: vec![0; 2],
                    quant: QuantParams::new(12345, 0, 0),
                }),
                Layer::ArgmaxHead { classes: 2 },
            ],
        );
        assert!(bad_mult.is_err());
    }

    #[test]
    fn load_error_names_layer() {
        let mut bytes = identity(2).to_bytes();
        // corrupt the kind byte of layer 1 (the head)
        let head_kind = bytes.len() - (1 + 4 + 9);
        bytes[head_kind] = 9;
        let err = load_model(&bytes).unwrap_err().to_string();
        assert!(err.contains("layer 1"), "{err}");
    }

    #[test]
    fn input_shape_mismatch() {
        let m = identity(3);
        assert!(matches!(
            m.forward(&LatticeInput::new(vec![1, 2])),
            Err(QnnError::InputShape { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn conv_with_padding_sums_neighbourhood() {
        // 1x3x3 input, 3x3 all-ones kernel, padding 1: each output is the
        // sum over the in-bounds neighbourhood.
        let conv = Conv2d {
            in_channels: 1,
            in_height: 3,
            in_width: 3,
            out_channels: 1,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: 1,
            weights: vec![1; 9],
            bias: vec![0],
            quant: QuantParams::PASS_THROUGH,
        };
        let m =
            QuantizedModel::new(9, 9, vec![Layer::Conv2d(conv), Layer::ArgmaxHead { classes: 9 }]).unwrap();
        let x = LatticeInput::new((1..=9).collect());
        let y = m.forward(&x).unwrap();
        assert_eq!(y, vec![12, 21, 16, 27, 45, 33, 24, 39, 28]);
    }
}
