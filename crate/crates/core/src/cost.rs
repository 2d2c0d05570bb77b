//! Analytical computational and bandwidth complexity of Conv2D and LSTM
//! layers.
//!
//! A multiply-accumulate counts as two FLOPs. Bandwidth complexity is the
//! compulsory traffic of the algorithm: every input read once, every output
//! written once, and the weights read once per image (Conv2D, by default) or
//! per timestep (LSTM, by default). Conv2D bias and activation are not
//! counted.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roofline::ComplexityPoint;

/// Largest `n*h*w*c_in*c_out` the Conv2D enumeration oracle accepts.
pub const CONV2D_ORACLE_LIMIT: u64 = 10_000_000;
/// Largest `B*T*h*(h+d)` the LSTM evaluation oracle accepts.
pub const LSTM_ORACLE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("invalid layer: {0}")]
    InvalidSpec(String),
    #[error("unknown {layer} parameter {name:?}")]
    UnknownParameter { layer: &'static str, name: String },
    #[error("{name} = {value}: {reason}")]
    InvalidValue { name: String, value: f64, reason: String },
    #[error("instance size {size} exceeds oracle limit {limit}")]
    OracleTooLarge { size: u64, limit: u64 },
}

/// Dense 2D convolution, NHWC input, KH x KW x C x C' filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conv2DSpec {
    pub n: u64,
    pub h: u64,
    pub w: u64,
    pub c_in: u64,
    pub k_h: u64,
    pub k_w: u64,
    pub c_out: u64,
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default)]
    pub padding: u64,
    pub elem_bytes: u64,
    #[serde(default)]
    pub weight_traffic: ConvWeightTraffic,
}

/// How Conv2D filter weights are charged to bandwidth complexity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvWeightTraffic {
    /// Filters are read once per image, so traffic is linear in the batch.
    #[default]
    PerSample,
    /// Filters are read once for the whole batch.
    ResidentOnce,
}

fn one() -> u64 {
    1
}

fn check_elem_bytes(elem_bytes: u64) -> Result<(), CostError> {
    if matches!(elem_bytes, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(CostError::InvalidSpec(alloc::format!(
            "elem_bytes must be 2, 4 or 8, got {elem_bytes}"
        )))
    }
}

fn check_positive(fields: &[(&str, u64)]) -> Result<(), CostError> {
    for (name, v) in fields {
        if *v == 0 {
            return Err(CostError::InvalidSpec(alloc::format!("{name} must be at least 1")));
        }
    }
    Ok(())
}

impl Conv2DSpec {
    pub fn validate(&self) -> Result<(), CostError> {
        check_positive(&[
            ("n", self.n),
            ("h", self.h),
            ("w", self.w),
            ("c_in", self.c_in),
            ("k_h", self.k_h),
            ("k_w", self.k_w),
            ("c_out", self.c_out),
            ("stride", self.stride),
        ])?;
        check_elem_bytes(self.elem_bytes)?;
        if self.h + 2 * self.padding < self.k_h || self.w + 2 * self.padding < self.k_w {
            return Err(CostError::InvalidSpec(alloc::format!(
                "kernel {}x{} does not fit padded input {}x{}",
                self.k_h,
                self.k_w,
                self.h + 2 * self.padding,
                self.w + 2 * self.padding
            )));
        }
        Ok(())
    }
}

/// `floor((h + 2p - k) / stride) + 1` for each spatial axis.
pub fn conv2d_output_dims(s: &Conv2DSpec) -> (u64, u64) {
    let out = |len: u64, k: u64| (len + 2 * s.padding).saturating_sub(k) / s.stride + 1;
    (out(s.h, s.k_h), out(s.w, s.k_w))
}

/// Compulsory Conv2D traffic, in elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2DTraffic {
    pub input: u128,
    pub weights: u128,
    pub output: u128,
}

impl Conv2DTraffic {
    pub fn total_elems(&self) -> u128 {
        self.input + self.weights + self.output
    }
}

pub fn conv2d_traffic(s: &Conv2DSpec) -> Conv2DTraffic {
    let (ho, wo) = conv2d_output_dims(s);
    let u = u128::from;
    Conv2DTraffic {
        input: u(s.n) * u(s.h) * u(s.w) * u(s.c_in),
        weights: match s.weight_traffic {
            ConvWeightTraffic::PerSample => u(s.n) * u(s.k_h) * u(s.k_w) * u(s.c_in) * u(s.c_out),
            ConvWeightTraffic::ResidentOnce => u(s.k_h) * u(s.k_w) * u(s.c_in) * u(s.c_out),
        },
        output: u(s.n) * u(ho) * u(wo) * u(s.c_out),
    }
}

/// Exact Conv2D FLOP count from the closed form.
pub fn conv2d_flops(s: &Conv2DSpec) -> u128 {
    let (ho, wo) = conv2d_output_dims(s);
    let u = u128::from;
    2 * u(s.n) * u(ho) * u(wo) * u(s.c_out) * u(s.c_in) * u(s.k_h) * u(s.k_w)
}

pub fn conv2d_complexity(s: &Conv2DSpec) -> ComplexityPoint {
    ComplexityPoint {
        cc: conv2d_flops(s) as f64,
        bc: (conv2d_traffic(s).total_elems() * u128::from(s.elem_bytes)) as f64,
    }
}

/// Counts FLOPs by walking the convolution loop nest.
///
/// Every position of the padded input is tested as a window origin; valid
/// origins are stride-aligned and leave room for the whole kernel. Each
/// accumulated product contributes one multiply and one add.
pub fn conv2d_flops_oracle(s: &Conv2DSpec) -> Result<u64, CostError> {
    let size = [s.n, s.h, s.w, s.c_in, s.c_out]
        .iter()
        .fold(1u64, |a, b| a.saturating_mul(*b));
    if size > CONV2D_ORACLE_LIMIT {
        return Err(CostError::OracleTooLarge {
            size,
            limit: CONV2D_ORACLE_LIMIT,
        });
    }
    let padded_h = s.h + 2 * s.padding;
    let padded_w = s.w + 2 * s.padding;
    let mut flops = 0u64;
    for _batch in 0..s.n {
        for y in 0..padded_h {
            if y % s.stride != 0 || y + s.k_h > padded_h {
                continue;
            }
            for x in 0..padded_w {
                if x % s.stride != 0 || x + s.k_w > padded_w {
                    continue;
                }
                for _co in 0..s.c_out {
                    for _ci in 0..s.c_in {
                        for _kh in 0..s.k_h {
                            for _kw in 0..s.k_w {
                                flops += 2;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(flops)
}

/// How LSTM weights are charged to bandwidth complexity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightTraffic {
    /// Weights are re-read from memory at every timestep.
    #[default]
    StreamedPerStep,
    /// Weights are read once for the whole sequence.
    ResidentOnce,
}

/// Single-layer LSTM forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmSpec {
    pub batch: u64,
    pub seq_len: u64,
    pub input_features: u64,
    pub hidden: u64,
    pub elem_bytes: u64,
    #[serde(default)]
    pub weight_traffic: WeightTraffic,
    /// FLOPs charged per sigmoid/tanh evaluation.
    #[serde(default = "one")]
    pub activation_flops: u64,
}

impl LstmSpec {
    pub fn validate(&self) -> Result<(), CostError> {
        check_positive(&[
            ("batch", self.batch),
            ("seq_len", self.seq_len),
            ("input_features", self.input_features),
            ("hidden", self.hidden),
        ])?;
        check_elem_bytes(self.elem_bytes)
    }
}

/// FLOPs of one cell update for one sample.
fn lstm_cell_flops(s: &LstmSpec) -> u128 {
    let h = u128::from(s.hidden);
    let d = u128::from(s.input_features);
    let act = u128::from(s.activation_flops);
    // four gate mat-vecs over [h_{t-1}, x_t] plus bias
    let gates = 4 * (2 * h * (h + d) + h);
    // C_t = f*C + i*C^ (3 per element), h_t = o * tanh(C_t) (1 per element)
    let elementwise = 3 * h + h;
    // sigmoid on f, i, o; tanh on C^ and C_t
    let activations = act * 5 * h;
    gates + elementwise + activations
}

pub fn lstm_flops(s: &LstmSpec) -> u128 {
    u128::from(s.seq_len) * u128::from(s.batch) * lstm_cell_flops(s)
}

pub fn lstm_complexity(s: &LstmSpec) -> ComplexityPoint {
    let h = u128::from(s.hidden);
    let d = u128::from(s.input_features);
    let t = u128::from(s.seq_len);
    let b = u128::from(s.batch);
    let weight_elems = 4 * h * (h + d) + 4 * h;
    let weight_reads = match s.weight_traffic {
        WeightTraffic::StreamedPerStep => t * weight_elems,
        WeightTraffic::ResidentOnce => weight_elems,
    };
    let activation_elems = t * b * (d + 4 * h);
    ComplexityPoint {
        cc: lstm_flops(s) as f64,
        bc: ((weight_reads + activation_elems) * u128::from(s.elem_bytes)) as f64,
    }
}

/// Scalar arithmetic that counts what it executes.
struct CountingAlu {
    flops: u64,
    activation_cost: u64,
}

impl CountingAlu {
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.flops += 1;
        a * b
    }

    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.flops += 1;
        a + b
    }

    fn sigmoid(&mut self, x: f64) -> f64 {
        self.flops += self.activation_cost;
        1.0 / (1.0 + libm::exp(-x))
    }

    fn tanh(&mut self, x: f64) -> f64 {
        self.flops += self.activation_cost;
        libm::tanh(x)
    }
}

fn synthetic_weight(gate: u64, row: u64, col: u64) -> f64 {
    ((gate * 31 + row * 7 + col * 3) % 17) as f64 / 17.0 - 0.5
}

/// Counts FLOPs by evaluating the LSTM cell equations on synthetic data,
/// sample by sample and step by step.
pub fn lstm_flops_oracle(s: &LstmSpec) -> Result<u64, CostError> {
    let size = [s.batch, s.seq_len, s.hidden, s.hidden.saturating_add(s.input_features)]
        .iter()
        .fold(1u64, |a, b| a.saturating_mul(*b));
    if size > LSTM_ORACLE_LIMIT {
        return Err(CostError::OracleTooLarge {
            size,
            limit: LSTM_ORACLE_LIMIT,
        });
    }
    let h = s.hidden as usize;
    let d = s.input_features as usize;
    // [gate][row][col] over the concatenation [h_{t-1}, x_t]
    let weights: Vec<Vec<Vec<f64>>> = (0..4u64)
        .map(|g| {
            (0..h as u64)
                .map(|r| (0..(h + d) as u64).map(|c| synthetic_weight(g, r, c)).collect())
                .collect()
        })
        .collect();
    let biases: Vec<Vec<f64>> = (0..4u64)
        .map(|g| (0..h as u64).map(|r| synthetic_weight(g, r, 99)).collect())
        .collect();

    let mut alu = CountingAlu {
        flops: 0,
        activation_cost: s.activation_flops,
    };
    for sample in 0..s.batch {
        let mut hidden = vec![0.0; h];
        let mut cell = vec![0.0; h];
        for step in 0..s.seq_len {
            let mut z = hidden.clone();
            z.extend((0..d).map(|j| ((sample + step + j as u64) % 5) as f64 * 0.1));

            let gate = |alu: &mut CountingAlu, g: usize, row: usize| {
                let mut acc = 0.0;
                for (w, x) in weights[g][row].iter().zip(&z) {
                    let p = alu.mul(*w, *x);
                    acc = alu.add(acc, p);
                }
                alu.add(acc, biases[g][row])
            };
            let mut next_hidden = vec![0.0; h];
            for row in 0..h {
                let pre_f = gate(&mut alu, 0, row);
                let f = alu.sigmoid(pre_f);
                let pre_i = gate(&mut alu, 1, row);
                let i = alu.sigmoid(pre_i);
                let pre_c = gate(&mut alu, 2, row);
                let c_hat = alu.tanh(pre_c);
                let pre_o = gate(&mut alu, 3, row);
                let o = alu.sigmoid(pre_o);

                let kept = alu.mul(f, cell[row]);
                let written = alu.mul(i, c_hat);
                cell[row] = alu.add(kept, written);
                let squashed = alu.tanh(cell[row]);
                next_hidden[row] = alu.mul(o, squashed);
            }
            hidden = next_hidden;
        }
    }
    Ok(alu.flops)
}

/// Lower bound on serialized stages: gates, then cell state, then hidden
/// state, repeated for every timestep.
pub fn lstm_sequential_depth(s: &LstmSpec) -> u64 {
    3 * s.seq_len
}

/// Kernel-launch count model for a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationModel {
    pub kernels_per_step: u64,
    /// Launches outside the recurrent loop (LSTM only).
    pub epilogue_invocations: u64,
}

impl InvocationModel {
    pub fn new(kernels_per_step: u64, epilogue_invocations: u64) -> Self {
        Self {
            kernels_per_step,
            epilogue_invocations,
        }
    }
}

/// A layer with analytical cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2D(Conv2DSpec),
    Lstm(LstmSpec),
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Conv2D(_) => "conv2d",
            Self::Lstm(_) => "lstm",
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        match self {
            Self::Conv2D(s) => s.validate(),
            Self::Lstm(s) => s.validate(),
        }
    }

    pub fn complexity(&self) -> ComplexityPoint {
        match self {
            Self::Conv2D(s) => conv2d_complexity(s),
            Self::Lstm(s) => lstm_complexity(s),
        }
    }

    /// Returns a copy with one field set.
    ///
    /// Field names are those of the layer struct. `k` sets both kernel
    /// dimensions and `batch` is accepted for Conv2D `n`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self, CostError> {
        let bad = |reason: &str| CostError::InvalidValue {
            name: name.into(),
            value,
            reason: reason.into(),
        };
        if !(value.is_finite() && value >= 0.0 && libm::trunc(value) == value && value <= 9.0e15) {
            return Err(bad("must be a non-negative integer"));
        }
        let v = value as u64;
        let mut next = *self;
        match &mut next {
            Self::Conv2D(s) => match name {
                "n" | "batch" => s.n = v,
                "h" => s.h = v,
                "w" => s.w = v,
                "c_in" => s.c_in = v,
                "c_out" => s.c_out = v,
                "k_h" => s.k_h = v,
                "k_w" => s.k_w = v,
                "k" => {
                    s.k_h = v;
                    s.k_w = v;
                }
                "stride" => s.stride = v,
                "padding" => s.padding = v,
                "elem_bytes" => s.elem_bytes = v,
                _ => {
                    return Err(CostError::UnknownParameter {
                        layer: "conv2d",
                        name: name.into(),
                    })
                }
            },
            Self::Lstm(s) => match name {
                "batch" => s.batch = v,
                "seq_len" => s.seq_len = v,
                "input_features" => s.input_features = v,
                "hidden" => s.hidden = v,
                "elem_bytes" => s.elem_bytes = v,
                "activation_flops" => s.activation_flops = v,
                _ => {
                    return Err(CostError::UnknownParameter {
                        layer: "lstm",
                        name: name.into(),
                    })
                }
            },
        }
        next.validate().map_err(|e| match e {
            CostError::InvalidSpec(reason) => bad(&reason),
            other => other,
        })?;
        Ok(next)
    }
}

/// Predicted kernel launches: `kernels_per_step` for Conv2D,
/// `kernels_per_step * T + epilogue` for LSTM.
pub fn invocation_estimate(layer: &LayerSpec, model: InvocationModel) -> u64 {
    match layer {
        LayerSpec::Conv2D(_) => model.kernels_per_step,
        LayerSpec::Lstm(s) => model.kernels_per_step * s.seq_len + model.epilogue_invocations,
    }
}
