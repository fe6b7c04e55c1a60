//! Refiner parameters, their canonical tensor listing and a seeded initializer.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::nn::{Attention, Conv3x3, LayerNorm, Linear};
use crate::error::{Error, Result};

/// Side of the coarse-mask neighbourhood fed to the node encoder.
pub const CONTEXT_SIDE: usize = 3;

/// Hyperparameters. They are stored in the weight-file header.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RefinerConfig {
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_dim: usize,
    /// Number of video-level instance queries.
    pub queries: usize,
    /// Channels of the low-level image branch input: 3 for RGB, 1 for the
    /// coarse-mask signed distance map.
    pub low_input: usize,
    pub low_channels: usize,
    /// Signed distances are clipped to `±sdt_clip` pixels then scaled to `[-1, 1]`.
    pub sdt_clip: f64,
    pub ln_eps: f64,
    /// Normalize before each residual branch (true) or after the sum.
    pub pre_norm: bool,
}

impl Default for RefinerConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            heads: 4,
            layers: 3,
            ffn_dim: 128,
            queries: 1,
            low_input: 1,
            low_channels: 8,
            sdt_clip: 8.0,
            ln_eps: 1e-5,
            pre_norm: true,
        }
    }
}

impl RefinerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.hidden == 0 || self.hidden % 8 != 0 {
            return bad("hidden size must be a positive multiple of 8");
        }
        if self.heads == 0 || self.hidden % self.heads != 0 {
            return bad("hidden size must be divisible by the head count");
        }
        if self.layers == 0 || self.ffn_dim == 0 || self.low_channels == 0 {
            return bad("layer count, feed-forward and low-level widths must be positive");
        }
        if self.queries == 0 {
            return bad("at least one instance query is required");
        }
        if self.low_input != 1 && self.low_input != 3 {
            return bad("low-level input must have 1 (signed distance) or 3 (RGB) channels");
        }
        let positive = |v: f64| v > 0.0;
        if !positive(self.sdt_clip) || !positive(self.ln_eps) {
            return bad("sdt_clip and ln_eps must be positive");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    /// Node-encoder input width: coarse context then low-level features.
    pub fn encoder_input(&self) -> usize {
        CONTEXT_SIDE * CONTEXT_SIDE + self.low_channels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub conv: [Conv3x3; 3],
    /// Context and low-level features to hidden; no bias.
    pub input: Linear,
    /// Positional encoding to hidden.
    pub pos: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub nal_norm: LayerNorm,
    pub nal: Attention,
    pub ffn_norm: LayerNorm,
    pub ffn_in: Linear,
    pub ffn_out: Linear,
    pub igl_norm: LayerNorm,
    pub igl: Attention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderWeights {
    pub norm: LayerNorm,
    /// Generates the per-instance dynamic kernel from the mean instance query.
    pub generator: Linear,
    pub out_bias: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinerWeights {
    pub config: RefinerConfig,
    pub encoder: EncoderWeights,
    pub layers: Vec<LayerWeights>,
    pub decoder: DecoderWeights,
    /// `queries x hidden`, row-major.
    pub queries: Vec<f32>,
}

/// A named parameter tensor in canonical order.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f32],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [f32],
}

macro_rules! tensor_list {
    ($w:expr, $out:ident, $T:ident, $as:ident, $iter:ident, $($m:tt)*) => {{
        fn push<'a>(out: &mut Vec<$T<'a>>, name: String, shape: Vec<usize>, data: &'a $($m)* [f32]) {
            out.push($T { name, shape, data });
        }
        fn linear<'a>(out: &mut Vec<$T<'a>>, name: &str, l: &'a $($m)* Linear) {
            push(out, format!("{name}.weight"), vec![l.out_dim, l.in_dim], &$($m)* l.weight[..]);
            if let Some(b) = &$($m)* l.bias {
                push(out, format!("{name}.bias"), vec![l.out_dim], &$($m)* b[..]);
            }
        }
        fn norm<'a>(out: &mut Vec<$T<'a>>, name: &str, n: &'a $($m)* LayerNorm) {
            let d = n.gamma.len();
            push(out, format!("{name}.gamma"), vec![d], &$($m)* n.gamma[..]);
            push(out, format!("{name}.beta"), vec![d], &$($m)* n.beta[..]);
        }
        fn attention<'a>(out: &mut Vec<$T<'a>>, name: &str, a: &'a $($m)* Attention) {
            linear(out, &format!("{name}.q"), &$($m)* a.q);
            linear(out, &format!("{name}.k"), &$($m)* a.k);
            linear(out, &format!("{name}.v"), &$($m)* a.v);
            linear(out, &format!("{name}.o"), &$($m)* a.o);
        }
        let w = $w;
        let hidden = w.config.hidden;
        let nq = w.queries.len() / hidden.max(1);
        let mut $out: Vec<$T<'_>> = Vec::new();
        for (i, c) in w.encoder.conv.$iter().enumerate() {
            let shape = vec![c.out_ch, c.in_ch, 3, 3];
            let bias_shape = vec![c.out_ch];
            push(&mut $out, format!("encoder.conv{i}.weight"), shape, &$($m)* c.weight[..]);
            push(&mut $out, format!("encoder.conv{i}.bias"), bias_shape, &$($m)* c.bias[..]);
        }
        linear(&mut $out, "encoder.input", &$($m)* w.encoder.input);
        linear(&mut $out, "encoder.pos", &$($m)* w.encoder.pos);
        for (i, l) in w.layers.$iter().enumerate() {
            norm(&mut $out, &format!("layers.{i}.nal_norm"), &$($m)* l.nal_norm);
            attention(&mut $out, &format!("layers.{i}.nal"), &$($m)* l.nal);
            norm(&mut $out, &format!("layers.{i}.ffn_norm"), &$($m)* l.ffn_norm);
            linear(&mut $out, &format!("layers.{i}.ffn_in"), &$($m)* l.ffn_in);
            linear(&mut $out, &format!("layers.{i}.ffn_out"), &$($m)* l.ffn_out);
            norm(&mut $out, &format!("layers.{i}.igl_norm"), &$($m)* l.igl_norm);
            attention(&mut $out, &format!("layers.{i}.igl"), &$($m)* l.igl);
        }
        norm(&mut $out, "decoder.norm", &$($m)* w.decoder.norm);
        linear(&mut $out, "decoder.generator", &$($m)* w.decoder.generator);
        push(&mut $out, "decoder.out_bias".to_string(), vec![1], core::slice::$as(&$($m)* w.decoder.out_bias));
        push(&mut $out, "queries".to_string(), vec![nq, hidden], &$($m)* w.queries[..]);
        $out
    }};
}

fn layer_zeros(c: &RefinerConfig) -> LayerWeights {
    let h = c.hidden;
    LayerWeights {
        nal_norm: norm_zeros(h, c.ln_eps),
        nal: Attention::zeros(h, c.heads),
        ffn_norm: norm_zeros(h, c.ln_eps),
        ffn_in: Linear::zeros(h, c.ffn_dim, true),
        ffn_out: Linear::zeros(c.ffn_dim, h, true),
        igl_norm: norm_zeros(h, c.ln_eps),
        igl: Attention::zeros(h, c.heads),
    }
}

fn norm_zeros(dim: usize, eps: f64) -> LayerNorm {
    LayerNorm { gamma: vec![0.0; dim], beta: vec![0.0; dim], eps }
}

impl RefinerWeights {
    /// Every parameter zero, layer-norm gains included.
    pub fn zeros(config: RefinerConfig) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let h = c.hidden;
        let encoder = EncoderWeights {
            conv: [
                Conv3x3::zeros(c.low_input, c.low_channels),
                Conv3x3::zeros(c.low_channels, c.low_channels),
                Conv3x3::zeros(c.low_channels, c.low_channels),
            ],
            input: Linear::zeros(c.encoder_input(), h, false),
            pos: Linear::zeros(h, h, true),
        };
        let layers = (0..c.layers).map(|_| layer_zeros(c)).collect();
        let decoder = DecoderWeights { norm: norm_zeros(h, c.ln_eps), generator: Linear::zeros(h, h, true), out_bias: 0.0 };
        Ok(Self { encoder, layers, decoder, queries: vec![0.0; c.queries * h], config })
    }

    /// Deterministic initializer: weights `U(±1/√fan_in)`, biases and
    /// layer-norm offsets `U(±0.1)`, gains `1 + U(±0.1)`, queries `U(±1)`.
    pub fn seeded(config: RefinerConfig, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in w.tensors_mut() {
            let fan_in: usize = t.shape.iter().skip(1).product::<usize>().max(1);
            let (lo, hi, offset) = if t.name.ends_with(".weight") {
                let a = 1.0 / libm::sqrt(fan_in as f64);
                (-a, a, 0.0)
            } else if t.name.ends_with(".gamma") {
                (-0.1, 0.1, 1.0)
            } else if t.name == "queries" {
                (-1.0, 1.0, 0.0)
            } else {
                (-0.1, 0.1, 0.0)
            };
            for v in t.data.iter_mut() {
                *v = (offset + rng.gen_range(lo..hi)) as f32;
            }
        }
        Ok(w)
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        tensor_list!(self, out, TensorRef, from_ref, iter,)
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        tensor_list!(self, out, TensorMut, from_mut, iter_mut, mut)
    }

    /// `queries x hidden` instance-query matrix.
    pub fn query_matrix(&self) -> super::nn::Mat {
        let h = self.config.hidden;
        super::nn::Mat { rows: self.queries.len() / h, cols: h, data: self.queries.iter().map(|&v| v as f64).collect() }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// Fills parameters from `(name, shape, values)` triples; every tensor of
    /// the configured model must be supplied exactly once with its shape.
    pub fn from_tensors(config: RefinerConfig, tensors: &[(String, Vec<usize>, Vec<f32>)]) -> Result<Self> {
        let mut w = Self::zeros(config)?;
        let mut seen = 0usize;
        for slot in w.tensors_mut() {
            let Some((_, shape, data)) = tensors.iter().find(|(n, _, _)| *n == slot.name) else {
                return Err(Error::WeightShapeMismatch {
                    name: slot.name,
                    expected: format!("{:?}", slot.shape),
                    found: "missing".to_string(),
                });
            };
            if *shape != slot.shape || data.len() != slot.data.len() {
                return Err(Error::WeightShapeMismatch {
                    name: slot.name,
                    expected: format!("{:?}", slot.shape),
                    found: format!("{shape:?}"),
                });
            }
            slot.data.copy_from_slice(data);
            seen += 1;
        }
        if let Some((name, shape, _)) = tensors.iter().find(|(n, _, _)| !w.tensors().iter().any(|t| t.name == *n)) {
            return Err(Error::WeightShapeMismatch {
                name: name.clone(),
                expected: "no such tensor".to_string(),
                found: format!("{shape:?}"),
            });
        }
        if seen != tensors.len() {
            return Err(Error::InvalidConfig("duplicate tensor names".to_string()));
        }
        Ok(w)
    }
}
