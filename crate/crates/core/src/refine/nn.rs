//! Minimal dense layers over `f64` activations with `f32` parameters.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major `rows x cols` activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Mat {
        let mut data = Vec::new();
        let mut cols = 0;
        for i in 0..self.rows {
            let r = f(self.row(i));
            cols = r.len();
            data.extend(r);
        }
        Mat { rows: self.rows, cols, data }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn ensure_finite(&self, stage: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteActivation(stage))
        }
    }

    /// Rows selected by `order`.
    pub fn permuted(&self, order: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Mat { rows: order.len(), cols: self.cols, data }
    }
}

fn shape_error(name: &str, expected: usize, found: usize) -> Error {
    Error::WeightShapeMismatch {
        name: alloc::string::String::from(name),
        expected: alloc::format!("{expected}"),
        found: alloc::format!("{found}"),
    }
}

/// `y = W x (+ b)` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f32>,
    pub bias: Option<Vec<f32>>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize, bias: bool) -> Self {
        Self { in_dim, out_dim, weight: vec![0.0; in_dim * out_dim], bias: bias.then(|| vec![0.0; out_dim]) }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        (0..self.out_dim)
            .map(|o| {
                let w = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                let dot: f64 = w.iter().zip(x).map(|(&w, &x)| w as f64 * x).sum();
                dot + self.bias.as_ref().map_or(0.0, |b| b[o] as f64)
            })
            .collect()
    }

    pub fn forward(&self, x: &Mat, name: &str) -> Result<Mat> {
        if x.cols != self.in_dim {
            return Err(shape_error(name, self.in_dim, x.cols));
        }
        Ok(x.map_rows(|r| self.apply(r)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub eps: f64,
}

impl LayerNorm {
    pub fn identity(dim: usize, eps: f64) -> Self {
        Self { gamma: vec![1.0; dim], beta: vec![0.0; dim], eps }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / libm::sqrt(var + self.eps);
        x.iter().zip(self.gamma.iter().zip(&self.beta)).map(|(v, (&g, &b))| (v - mean) * inv * g as f64 + b as f64).collect()
    }

    pub fn forward(&self, x: &Mat, name: &str) -> Result<Mat> {
        if x.cols != self.gamma.len() {
            return Err(shape_error(name, self.gamma.len(), x.cols));
        }
        Ok(x.map_rows(|r| self.apply(r)))
    }
}

/// Numerically stable softmax; identical inputs get bit-identical weights.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Multi-head attention projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub heads: usize,
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
}

impl Attention {
    pub fn zeros(dim: usize, heads: usize) -> Self {
        Self {
            heads,
            q: Linear::zeros(dim, dim, true),
            k: Linear::zeros(dim, dim, true),
            v: Linear::zeros(dim, dim, true),
            o: Linear::zeros(dim, dim, true),
        }
    }

    /// `softmax(Q Kᵀ / √d_head) V` per head, heads concatenated, then the
    /// output projection. Returns the output and one `queries x keys`
    /// attention matrix per head.
    pub fn attend(&self, queries: &Mat, keys: &Mat, name: &str) -> Result<(Mat, Vec<Mat>)> {
        let q = self.q.forward(queries, name)?;
        let k = self.k.forward(keys, name)?;
        let v = self.v.forward(keys, name)?;
        let dim = q.cols;
        if dim % self.heads != 0 {
            return Err(shape_error(name, self.heads, dim));
        }
        let dh = dim / self.heads;
        let scale = 1.0 / libm::sqrt(dh as f64);
        let mut concat = Mat::zeros(q.rows, dim);
        let mut maps = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let mut map = Mat::zeros(q.rows, k.rows);
            for i in 0..q.rows {
                let qi = &q.row(i)[cols.clone()];
                let scores: Vec<f64> =
                    (0..k.rows).map(|j| qi.iter().zip(&k.row(j)[cols.clone()]).map(|(a, b)| a * b).sum::<f64>() * scale).collect();
                let weights = softmax(&scores);
                let out = &mut concat.row_mut(i)[cols.clone()];
                for (j, &a) in weights.iter().enumerate() {
                    for (o, &vv) in out.iter_mut().zip(&v.row(j)[cols.clone()]) {
                        *o += a * vv;
                    }
                }
                map.row_mut(i).copy_from_slice(&weights);
            }
            maps.push(map);
        }
        Ok((self.o.forward(&concat, name)?, maps))
    }
}

/// 3x3 convolution with zero padding over a `channels x height x width` map.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3x3 {
    pub in_ch: usize,
    pub out_ch: usize,
    /// `out x in x 3 x 3`
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Conv3x3 {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        Self { in_ch, out_ch, weight: vec![0.0; out_ch * in_ch * 9], bias: vec![0.0; out_ch] }
    }

    pub fn apply(&self, input: &[f64], width: usize, height: usize, relu: bool) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.in_ch * width * height);
        let plane = width * height;
        let mut out = vec![0.0; self.out_ch * plane];
        for o in 0..self.out_ch {
            let dst = &mut out[o * plane..(o + 1) * plane];
            dst.iter_mut().for_each(|v| *v = self.bias[o] as f64);
            for i in 0..self.in_ch {
                let src = &input[i * plane..(i + 1) * plane];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let w = self.weight[((o * self.in_ch + i) * 3 + ky) * 3 + kx] as f64;
                        if w == 0.0 {
                            continue;
                        }
                        for y in 0..height {
                            let sy = y as isize + ky as isize - 1;
                            if sy < 0 || sy as usize >= height {
                                continue;
                            }
                            for x in 0..width {
                                let sx = x as isize + kx as isize - 1;
                                if sx < 0 || sx as usize >= width {
                                    continue;
                                }
                                dst[y * width + x] += w * src[sy as usize * width + sx as usize];
                            }
                        }
                    }
                }
            }
            if relu {
                dst.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        out
    }
}
