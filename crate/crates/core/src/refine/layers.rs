//! Node attention, instance guidance and the dynamic pixel decoder.

use alloc::vec::Vec;

use super::encoder::{encode_nodes, RgbFrame};
use super::nn::Mat;
use super::tokens::TokenSequence;
use super::weights::{LayerWeights, RefinerConfig, RefinerWeights};
use crate::error::Result;
use crate::mask::BinaryMask;

/// Per-token foreground probabilities, aligned with the token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePrediction {
    pub probabilities: Vec<f64>,
}

/// Attention matrices of one forward pass: `nal[layer][head]` is
/// `tokens x tokens`, `igl[layer][head]` is `tokens x queries`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttentionCapture {
    pub nal: Vec<Vec<Mat>>,
    pub igl: Vec<Vec<Mat>>,
}

/// Logits are clamped so probabilities stay strictly inside `(0, 1)`.
pub const LOGIT_CLAMP: f64 = 30.0;

fn residual(
    x: &Mat,
    cfg: &RefinerConfig,
    norm: &super::nn::LayerNorm,
    name: &str,
    branch: impl FnOnce(&Mat) -> Result<Mat>,
) -> Result<Mat> {
    if cfg.pre_norm {
        Ok(x.add(&branch(&norm.forward(x, name)?)?))
    } else {
        norm.forward(&x.add(&branch(x)?), name)
    }
}

/// Self-attention over all tokens followed by the feed-forward block.
pub fn nal_forward(x: &Mat, layer: &LayerWeights, cfg: &RefinerConfig) -> Result<(Mat, Vec<Mat>)> {
    let mut maps = Vec::new();
    let x1 = residual(x, cfg, &layer.nal_norm, "nal_norm", |h| {
        let (out, m) = layer.nal.attend(h, h, "nal")?;
        maps = m;
        Ok(out)
    })?;
    let out = residual(&x1, cfg, &layer.ffn_norm, "ffn_norm", |h| {
        let hidden = layer.ffn_in.forward(h, "ffn_in")?;
        let hidden = hidden.map_rows(|r| r.iter().map(|v| v.max(0.0)).collect());
        layer.ffn_out.forward(&hidden, "ffn_out")
    })?;
    out.ensure_finite("node attention layer")?;
    Ok((out, maps))
}

/// Cross-attention from tokens (queries) to the instance embeddings (keys and
/// values). The instance embeddings are read only.
pub fn igl_forward(x: &Mat, queries: &Mat, layer: &LayerWeights, cfg: &RefinerConfig) -> Result<(Mat, Vec<Mat>)> {
    if queries.rows == 0 {
        return Err(crate::error::Error::InvalidConfig("at least one instance query is required".into()));
    }
    let mut maps = Vec::new();
    let out = residual(x, cfg, &layer.igl_norm, "igl_norm", |h| {
        let (out, m) = layer.igl.attend(h, queries, "igl")?;
        maps = m;
        Ok(out)
    })?;
    out.ensure_finite("instance guidance layer")?;
    Ok((out, maps))
}

fn sigmoid(logit: f64) -> f64 {
    let z = logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + libm::exp(-z))
}

/// Final normalization, then a per-token dot product with a kernel generated
/// from the mean instance query, plus a scalar bias, through a sigmoid.
pub fn decode_pixels(x: &Mat, weights: &RefinerWeights) -> NodePrediction {
    let dec = &weights.decoder;
    let q = weights.query_matrix();
    let mut mean = alloc::vec![0.0; q.cols];
    for i in 0..q.rows {
        for (m, v) in mean.iter_mut().zip(q.row(i)) {
            *m += v / q.rows as f64;
        }
    }
    let kernel = dec.generator.apply(&mean);
    let probabilities = (0..x.rows)
        .map(|i| {
            let h = dec.norm.apply(x.row(i));
            let logit: f64 = h.iter().zip(&kernel).map(|(a, b)| a * b).sum::<f64>() + dec.out_bias as f64;
            sigmoid(logit)
        })
        .collect();
    NodePrediction { probabilities }
}

/// Output of [`forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub prediction: NodePrediction,
    pub attention: Option<AttentionCapture>,
}

/// Encoder, `layers x (NAL, IGL)`, decoder.
pub fn forward(
    weights: &RefinerWeights,
    seq: &TokenSequence,
    coarse: &[BinaryMask],
    rgb: Option<&[RgbFrame]>,
    capture: bool,
) -> Result<ForwardOutput> {
    let cfg = &weights.config;
    let queries = weights.query_matrix();
    let mut x = encode_nodes(seq, coarse, rgb, weights)?;
    let mut cap = capture.then(AttentionCapture::default);
    for layer in &weights.layers {
        let (y, nal) = nal_forward(&x, layer, cfg)?;
        let (z, igl) = igl_forward(&y, &queries, layer, cfg)?;
        if let Some(c) = cap.as_mut() {
            c.nal.push(nal);
            c.igl.push(igl);
        }
        x = z;
    }
    Ok(ForwardOutput { prediction: decode_pixels(&x, weights), attention: cap })
}
