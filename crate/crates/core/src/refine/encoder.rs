//! Node encoder: coarse-mask context, a low-level image embedding and the
//! positional encoding, projected to the hidden size.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::nn::Mat;
use super::tokens::{NodeToken, TokenSequence};
use super::weights::{EncoderWeights, RefinerWeights, CONTEXT_SIDE};
use crate::error::{Error, Result};
use crate::incoherence::{build_pyramid, MaskPyramid};
use crate::mask::{squared_distance_transform, BinaryMask, UNREACHABLE};

/// Receptive radius of the three stacked 3x3 convolutions.
const CONV_REACH: usize = 3;

/// An RGB frame with channels in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f32; 3]>,
}

/// Signed Euclidean distance to the mask contour, positive inside, clipped to
/// `±clip` and scaled to `[-1, 1]`.
pub fn signed_distance(mask: &BinaryMask, clip: f64) -> Vec<f64> {
    let to_fg = squared_distance_transform(mask);
    let to_bg = squared_distance_transform(&mask.not());
    let d = |sq: u64| if sq == UNREACHABLE { clip } else { libm::sqrt(sq as f64).min(clip) };
    (0..mask.len())
        .map(|i| {
            let (r, c) = (i / mask.width(), i % mask.width());
            if mask.get(r, c) {
                d(to_bg[i]) / clip
            } else {
                -d(to_fg[i]) / clip
            }
        })
        .collect()
}

/// Row/column rectangle `[r0, r1) x [c0, c1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Rect {
    fn width(&self) -> usize {
        self.c1 - self.c0
    }

    fn height(&self) -> usize {
        self.r1 - self.r0
    }
}

/// Runs the three-layer convolutional branch on `input` (`channels x h x w`).
/// ReLU follows the first two layers.
pub fn low_level_features(enc: &EncoderWeights, input: &[f64], width: usize, height: usize) -> Vec<f64> {
    let a = enc.conv[0].apply(input, width, height, true);
    let b = enc.conv[1].apply(&a, width, height, true);
    enc.conv[2].apply(&b, width, height, false)
}

/// Low-level input channels of one frame restricted to `rect`.
fn frame_input(mask: &BinaryMask, rgb: Option<&RgbFrame>, clip: f64, rect: Rect) -> Vec<f64> {
    let w = mask.width();
    match rgb {
        Some(img) => {
            let mut out = vec![0.0; 3 * rect.width() * rect.height()];
            let plane = rect.width() * rect.height();
            for r in rect.r0..rect.r1 {
                for c in rect.c0..rect.c1 {
                    let px = img.data[r * w + c];
                    let i = (r - rect.r0) * rect.width() + (c - rect.c0);
                    for ch in 0..3 {
                        out[ch * plane + i] = px[ch] as f64;
                    }
                }
            }
            out
        }
        None => {
            let sdt = signed_distance(mask, clip);
            let mut out = Vec::with_capacity(rect.width() * rect.height());
            for r in rect.r0..rect.r1 {
                out.extend_from_slice(&sdt[r * w + rect.c0..r * w + rect.c1]);
            }
            out
        }
    }
}

/// The cell's footprint clipped to the unpadded frame, if any pixel remains.
fn footprint(tok: &NodeToken, width: usize, height: usize) -> Option<Rect> {
    let (r0, c0) = tok.origin();
    let s = tok.side();
    let rect = Rect { r0, c0, r1: (r0 + s).min(height), c1: (c0 + s).min(width) };
    (rect.r0 < rect.r1 && rect.c0 < rect.c1).then_some(rect)
}

/// Averaged low-level embedding of each token of one frame.
fn frame_low_level(enc: &EncoderWeights, tokens: &[NodeToken], mask: &BinaryMask, rgb: Option<&RgbFrame>, clip: f64) -> Vec<Vec<f64>> {
    let (w, h) = mask.dims();
    let channels = enc.conv[2].out_ch;
    let rects: Vec<Option<Rect>> = tokens.iter().map(|t| footprint(t, w, h)).collect();
    let Some(bbox) = rects.iter().flatten().copied().reduce(|a, b| Rect {
        r0: a.r0.min(b.r0),
        r1: a.r1.max(b.r1),
        c0: a.c0.min(b.c0),
        c1: a.c1.max(b.c1),
    }) else {
        return vec![vec![0.0; channels]; tokens.len()];
    };
    // Outputs more than CONV_REACH pixels inside the crop equal the full-frame result.
    let crop = Rect {
        r0: bbox.r0.saturating_sub(CONV_REACH),
        c0: bbox.c0.saturating_sub(CONV_REACH),
        r1: (bbox.r1 + CONV_REACH).min(h),
        c1: (bbox.c1 + CONV_REACH).min(w),
    };
    let input = frame_input(mask, rgb, clip, crop);
    let feats = low_level_features(enc, &input, crop.width(), crop.height());
    let plane = crop.width() * crop.height();
    rects
        .iter()
        .map(|rect| {
            let Some(rect) = rect else {
                return vec![0.0; channels];
            };
            let n = (rect.width() * rect.height()) as f64;
            (0..channels)
                .map(|ch| {
                    let mut sum = 0.0;
                    for r in rect.r0..rect.r1 {
                        let base = ch * plane + (r - crop.r0) * crop.width();
                        for c in rect.c0..rect.c1 {
                            sum += feats[base + c - crop.c0];
                        }
                    }
                    sum / n
                })
                .collect()
        })
        .collect()
}

/// Coarse-mask values of the 3x3 neighbourhood of the cell at its own level,
/// row-major, 0 outside the padded frame.
fn context(pyramid: &MaskPyramid, tok: &NodeToken) -> Vec<f64> {
    let level = pyramid.level(tok.level);
    let half = (CONTEXT_SIDE / 2) as isize;
    let mut out = Vec::with_capacity(CONTEXT_SIDE * CONTEXT_SIDE);
    for dr in -half..=half {
        for dc in -half..=half {
            let v = level.get_or_false(tok.row as isize + dr, tok.col as isize + dc);
            out.push(if v { 1.0 } else { 0.0 });
        }
    }
    out
}

/// Embeds each token as `W_in [context ‖ low-level] + W_pos PE + b_pos`.
///
/// `coarse[i]` is frame `window.start + i`; `rgb`, when present, is aligned
/// the same way and requires a 3-channel low-level branch. Without it the
/// coarse mask's signed distance map is used.
pub fn encode_nodes(seq: &TokenSequence, coarse: &[BinaryMask], rgb: Option<&[RgbFrame]>, weights: &RefinerWeights) -> Result<Mat> {
    let cfg = &weights.config;
    let enc = &weights.encoder;
    let want_channels = if rgb.is_some() { 3 } else { 1 };
    if enc.conv[0].in_ch != want_channels {
        return Err(Error::WeightShapeMismatch {
            name: "encoder.conv0.weight".to_string(),
            expected: format!("{want_channels} input channels"),
            found: format!("{}", enc.conv[0].in_ch),
        });
    }
    if enc.input.in_dim != cfg.encoder_input() || enc.input.out_dim != cfg.hidden {
        return Err(Error::WeightShapeMismatch {
            name: "encoder.input.weight".to_string(),
            expected: format!("[{}, {}]", cfg.hidden, cfg.encoder_input()),
            found: format!("[{}, {}]", enc.input.out_dim, enc.input.in_dim),
        });
    }
    if coarse.len() != seq.window.len {
        return Err(Error::InvalidConfig(format!("{} coarse frames given for a {}-frame clip", coarse.len(), seq.window.len)));
    }
    if let Some(frames) = rgb {
        if frames.len() != coarse.len() {
            return Err(Error::InvalidConfig("RGB and coarse frame counts differ".to_string()));
        }
        for (img, m) in frames.iter().zip(coarse) {
            if (img.width, img.height) != m.dims() || img.data.len() != m.len() {
                return Err(Error::ResolutionMismatch { expected: m.dims(), found: (img.width, img.height) });
            }
        }
    }

    let mut out = Mat::zeros(seq.len(), cfg.hidden);
    let mut i = 0;
    while i < seq.len() {
        let t = seq.tokens[i].t;
        let j = i + seq.tokens[i..].iter().take_while(|tok| tok.t == t).count();
        let idx = t - seq.window.start;
        let mask = &coarse[idx];
        let pyramid = build_pyramid(mask)?;
        let frame_tokens = &seq.tokens[i..j];
        let low = frame_low_level(enc, frame_tokens, mask, rgb.map(|f| &f[idx]), cfg.sdt_clip);
        for (k, tok) in frame_tokens.iter().enumerate() {
            let mut features = context(&pyramid, tok);
            features.extend_from_slice(&low[k]);
            let a = enc.input.apply(&features);
            let b = enc.pos.apply(&tok.positional_encoding(cfg.hidden));
            for (o, (x, y)) in out.row_mut(i + k).iter_mut().zip(a.iter().zip(&b)) {
                *o = x + y;
            }
        }
        i = j;
    }
    out.ensure_finite("node encoder")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::tokens::ClipWindow;
    use crate::refine::weights::RefinerConfig;

    fn disk(w: usize, h: usize, cr: f64, cc: f64, rad: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |r, c| (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2) < rad * rad).unwrap()
    }

    #[test]
    fn signed_distance_signs_and_clip() {
        let m = disk(20, 20, 10.0, 10.0, 5.0);
        let s = signed_distance(&m, 4.0);
        assert_eq!(s[10 * 20 + 10], 1.0);
        assert_eq!(s[0], -1.0);
        for (i, v) in s.iter().enumerate() {
            assert_eq!(*v > 0.0, m.get(i / 20, i % 20));
            assert!((-1.0..=1.0).contains(v));
        }
        let empty = signed_distance(&BinaryMask::new(4, 4).unwrap(), 8.0);
        assert!(empty.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn zero_weights_give_positional_bias() {
        let mut w = RefinerWeights::zeros(RefinerConfig::default()).unwrap();
        for (k, b) in w.encoder.pos.bias.as_mut().unwrap().iter_mut().enumerate() {
            *b = k as f32 * 0.25 - 3.0;
        }
        let seq = TokenSequence {
            window: ClipWindow { start: 1, len: 1 },
            tokens: vec![NodeToken { t: 1, level: 1, row: 2, col: 3 }, NodeToken { t: 1, level: 3, row: 0, col: 0 }],
        };
        let x = encode_nodes(&seq, &[disk(16, 16, 6.0, 6.0, 4.0)], None, &w).unwrap();
        for i in 0..2 {
            for (k, v) in x.row(i).iter().enumerate() {
                assert_eq!(*v, k as f64 * 0.25 - 3.0);
            }
        }
    }

    #[test]
    fn identical_cells_differ_only_by_position() {
        // two translated copies of the same local pattern with no positional projection
        let mut w = RefinerWeights::seeded(RefinerConfig::default(), 3).unwrap();
        w.encoder.pos.weight.iter_mut().for_each(|v| *v = 0.0);
        let m = BinaryMask::from_fn(32, 16, |r, c| (2..6).contains(&r) && ((2..5).contains(&c) || (18..21).contains(&c))).unwrap();
        let seq = TokenSequence {
            window: ClipWindow { start: 1, len: 1 },
            tokens: vec![NodeToken { t: 1, level: 1, row: 1, col: 2 }, NodeToken { t: 1, level: 1, row: 1, col: 10 }],
        };
        let x = encode_nodes(&seq, &[m], None, &w).unwrap();
        for k in 0..64 {
            assert!((x.get(0, k) - x.get(1, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn cropped_convolution_matches_full_frame() {
        let w = RefinerWeights::seeded(RefinerConfig::default(), 9).unwrap();
        let m = disk(40, 24, 12.0, 20.0, 7.0);
        let toks = [NodeToken { t: 1, level: 1, row: 4, col: 8 }, NodeToken { t: 1, level: 2, row: 2, col: 5 }];
        let got = frame_low_level(&w.encoder, &toks, &m, None, 8.0);
        let full = low_level_features(&w.encoder, &signed_distance(&m, 8.0), 40, 24);
        for (tok, feat) in toks.iter().zip(&got) {
            let rect = footprint(tok, 40, 24).unwrap();
            for (ch, v) in feat.iter().enumerate() {
                let mut sum = 0.0;
                for r in rect.r0..rect.r1 {
                    for c in rect.c0..rect.c1 {
                        sum += full[ch * 960 + r * 40 + c];
                    }
                }
                let want = sum / (rect.width() * rect.height()) as f64;
                assert!((v - want).abs() < 1e-12, "{v} vs {want}");
            }
        }
    }

    #[test]
    fn rgb_requires_three_channel_branch() {
        let w = RefinerWeights::zeros(RefinerConfig::default()).unwrap();
        let seq = TokenSequence { window: ClipWindow { start: 1, len: 1 }, tokens: Vec::new() };
        let img = RgbFrame { width: 8, height: 8, data: vec![[0.5; 3]; 64] };
        let err = encode_nodes(&seq, &[BinaryMask::new(8, 8).unwrap()], Some(&[img]), &w);
        assert!(matches!(err, Err(Error::WeightShapeMismatch { .. })));
    }
}
