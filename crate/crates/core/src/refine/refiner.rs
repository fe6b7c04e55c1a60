//! The refiner interface and its reference implementations.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encoder::RgbFrame;
use super::layers::{forward, AttentionCapture, NodePrediction};
use super::tokens::{group_quadtree, ClipWindow, NodeToken, TokenSequence};
use super::weights::RefinerWeights;
use crate::dataset::{Tracklet, VideoDataset};
use crate::error::{Error, Result};
use crate::incoherence::{FineCoord, IncoherenceQuadtree, LEVELS};
use crate::mask::BinaryMask;
use crate::seed;

/// One clip of one instance handed to a refiner. Carries no category: refiners
/// are class-agnostic.
#[derive(Debug, Clone, Copy)]
pub struct ClipInput<'a> {
    pub video_id: u64,
    pub instance_id: u64,
    pub window: ClipWindow,
    /// Dense coarse masks of the window's frames, in order.
    pub coarse: &'a [BinaryMask],
    pub rgb: Option<&'a [RgbFrame]>,
    /// Quadtree of the whole tracklet.
    pub quadtree: &'a IncoherenceQuadtree,
    /// Fine targets inside the window, ordered by (t, row, col).
    pub coords: &'a [FineCoord],
}

/// Predicts a foreground probability for every target coordinate of a clip.
pub trait Refiner: Sync {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction>;
}

impl<R: Refiner + ?Sized> Refiner for &R {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction> {
        (**self).refine(clip)
    }
}

/// The same probability everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRefiner(pub f64);

impl Refiner for ConstantRefiner {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction> {
        Ok(NodePrediction { probabilities: alloc::vec![self.0; clip.coords.len()] })
    }
}

fn gt_label(gt: &Tracklet, c: &FineCoord) -> Result<bool> {
    if c.t == 0 || c.t > gt.length() {
        return Err(Error::CoordOutOfBounds { t: c.t, row: c.row, col: c.col });
    }
    match gt.frame(c.t) {
        None => Ok(false),
        Some(m) if c.row < m.height() && c.col < m.width() => Ok(m.get(c.row, c.col)),
        Some(_) => Err(Error::CoordOutOfBounds { t: c.t, row: c.row, col: c.col }),
    }
}

/// Ground-truth labels as 0/1 probabilities, each flipped independently with
/// `flip_prob` under a ChaCha stream seeded by `seed` (one draw per coordinate).
pub fn oracle_refiner(coords: &[FineCoord], gt: &Tracklet, flip_prob: f64, seed: u64) -> Result<NodePrediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = flip_prob.clamp(0.0, 1.0);
    let probabilities = coords
        .iter()
        .map(|c| {
            let label = gt_label(gt, c)?;
            let flip = rng.gen_bool(p);
            Ok(if label != flip { 1.0 } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(NodePrediction { probabilities })
}

/// Answers from ground truth looked up by (video, instance id). Each clip
/// gets its own stream derived from `(seed, video, instance, clip start)`.
#[derive(Debug, Clone, Copy)]
pub struct OracleRefiner<'a> {
    pub gt: &'a VideoDataset,
    pub flip_prob: f64,
    pub seed: u64,
}

impl Refiner for OracleRefiner<'_> {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction> {
        let gt = self
            .gt
            .tracklet(clip.video_id, clip.instance_id)
            .ok_or(Error::DanglingReference { kind: "ground-truth instance", id: clip.instance_id })?;
        let s = seed::derive(&[self.seed, clip.video_id, clip.instance_id, clip.window.start as u64]);
        oracle_refiner(clip.coords, gt, self.flip_prob, s)
    }
}

/// Probability of the finest flagged token covering each coordinate; 0.5
/// when no token covers it.
pub fn token_probabilities(seq: &TokenSequence, pred: &NodePrediction, coords: &[FineCoord]) -> Vec<f64> {
    coords
        .iter()
        .map(|c| {
            (1..LEVELS)
                .find_map(|level| {
                    let tok = NodeToken { t: c.t, level, row: c.row >> level, col: c.col >> level };
                    seq.position(&tok).map(|i| pred.probabilities[i])
                })
                .unwrap_or(0.5)
        })
        .collect()
}

/// The forward-only transformer.
#[derive(Debug, Clone, Copy)]
pub struct TransformerRefiner<'a> {
    pub weights: &'a RefinerWeights,
}

impl TransformerRefiner<'_> {
    /// Token sequence, per-token predictions and attention maps of a clip.
    pub fn run(&self, clip: &ClipInput<'_>, capture: bool) -> Result<(TokenSequence, NodePrediction, Option<AttentionCapture>)> {
        let seq = group_quadtree(clip.quadtree, clip.window)?;
        let out = forward(self.weights, &seq, clip.coarse, clip.rgb, capture)?;
        Ok((seq, out.prediction, out.attention))
    }
}

impl Refiner for TransformerRefiner<'_> {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction> {
        let (seq, pred, _) = self.run(clip, false)?;
        Ok(NodePrediction { probabilities: token_probabilities(&seq, &pred, clip.coords) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VideoMeta;
    use crate::incoherence::{coords_of, detect_incoherence, expand_to_fine, tracklet_pyramids};
    use crate::refine::weights::RefinerConfig;
    use alloc::vec;

    fn disk_track(id: u64, shift: usize) -> Tracklet {
        let frames = (0..3)
            .map(|t| {
                Some(
                    BinaryMask::from_fn(24, 24, |r, c| {
                        let (dr, dc) = (r as f64 - 11.0, c as f64 - 9.0 - (t + shift) as f64);
                        dr * dr + dc * dc < 40.0
                    })
                    .unwrap(),
                )
            })
            .collect();
        Tracklet { id, video_id: 1, category_id: 1, score: 1.0, frames }
    }

    fn meta() -> VideoMeta {
        VideoMeta { id: 1, width: 24, height: 24, length: 3, file_names: Vec::new() }
    }

    #[test]
    fn oracle_flip_extremes_and_rate() {
        let gt = disk_track(1, 0);
        let coords: Vec<_> = (1..=3).flat_map(|t| (0..24).flat_map(move |row| (0..24).map(move |col| FineCoord { t, row, col }))).collect();
        let exact = oracle_refiner(&coords, &gt, 0.0, 5).unwrap();
        let flipped = oracle_refiner(&coords, &gt, 1.0, 5).unwrap();
        for ((c, a), b) in coords.iter().zip(&exact.probabilities).zip(&flipped.probabilities) {
            let label = gt.frame(c.t).unwrap().get(c.row, c.col);
            assert_eq!(*a, if label { 1.0 } else { 0.0 });
            assert_eq!(*b, 1.0 - a);
        }
        let many: Vec<_> = (0..10_000).map(|i| FineCoord { t: 1 + i % 3, row: (i / 3) % 24, col: i % 24 }).collect();
        let a = oracle_refiner(&many, &gt, 0.0, 9).unwrap();
        let b = oracle_refiner(&many, &gt, 0.25, 9).unwrap();
        let rate = a.probabilities.iter().zip(&b.probabilities).filter(|(x, y)| x != y).count() as f64 / 1e4;
        assert!((rate - 0.25).abs() < 0.02, "{rate}");
    }

    #[test]
    fn oracle_refiner_looks_up_by_instance() {
        let gt = VideoDataset {
            videos: vec![meta()],
            annotations: vec![disk_track(7, 0)],
            categories: [(1, "blob".into())].into_iter().collect(),
        };
        let coarse = disk_track(7, 1);
        let qt = detect_incoherence(&tracklet_pyramids(&coarse, &meta()).unwrap(), false).unwrap();
        let coords = coords_of(&expand_to_fine(&qt));
        let masks = coarse.dense_frames(24, 24).unwrap();
        let clip = ClipInput {
            video_id: 1,
            instance_id: 7,
            window: ClipWindow { start: 1, len: 3 },
            coarse: &masks,
            rgb: None,
            quadtree: &qt,
            coords: &coords,
        };
        let p = OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 }.refine(&clip).unwrap();
        for (c, v) in coords.iter().zip(&p.probabilities) {
            assert_eq!(*v == 1.0, gt.annotations[0].frame(c.t).unwrap().get(c.row, c.col));
        }
        let missing = ClipInput { instance_id: 8, ..clip };
        assert!(OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 }.refine(&missing).is_err());
        assert_eq!(ConstantRefiner(0.5).refine(&clip).unwrap().probabilities, vec![0.5; coords.len()]);
    }

    #[test]
    fn transformer_covers_every_coordinate() {
        let w = RefinerWeights::seeded(RefinerConfig::default(), 42).unwrap();
        let coarse = disk_track(1, 0);
        let qt = detect_incoherence(&tracklet_pyramids(&coarse, &meta()).unwrap(), false).unwrap();
        let coords = coords_of(&expand_to_fine(&qt));
        let masks = coarse.dense_frames(24, 24).unwrap();
        let clip = ClipInput {
            video_id: 1,
            instance_id: 1,
            window: ClipWindow { start: 1, len: 3 },
            coarse: &masks,
            rgb: None,
            quadtree: &qt,
            coords: &coords,
        };
        let r = TransformerRefiner { weights: &w };
        let p = r.refine(&clip).unwrap();
        assert_eq!(p.probabilities.len(), coords.len());
        assert!(p.probabilities.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert_eq!(r.refine(&clip).unwrap(), p);
        let (seq, _, cap) = r.run(&clip, true).unwrap();
        let cap = cap.unwrap();
        assert_eq!(cap.nal.len(), 3);
        assert_eq!(cap.nal[0][0].rows, seq.len());
    }
}
