use alloc::vec::Vec;

use crate::dataset::{Tracklet, VideoDataset, VideoMeta};
use crate::error::{Error, Result};
use crate::incoherence::{coords_of, detect_incoherence, expand_to_fine, tracklet_pyramids, ungated_fine, IncoherenceQuadtree};
use crate::mask::{dilate, BinaryMask};
use crate::refine::{apply_corrections, ClipInput, ClipWindow, NodePrediction, Refiner, CORRECTION_THRESHOLD};

/// Which fine pixels seed the correction region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RegionSource {
    /// Pixels under flagged L1 cells of the quadtree only.
    Quadtree,
    /// Pixels under every incoherent L1 cell, whether or not its ancestors
    /// are flagged. Parent gating skips stretches of contour that clip a
    /// coarse cell's corner, and those stretches are never revisited.
    #[default]
    Ungated,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrectionConfig {
    /// A prediction overwrites a label only when its confidence exceeds this.
    pub threshold: f64,
    /// Frames per clip; `None` groups the whole video into one clip.
    pub clip_len: Option<usize>,
    pub region_source: RegionSource,
    /// Growth of the detected fine region before refinement, in pixels.
    pub region_dilation: u32,
    /// Also root cells whose coarsest value flips between adjacent frames.
    pub temporal: bool,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            threshold: CORRECTION_THRESHOLD,
            clip_len: None,
            region_source: RegionSource::Ungated,
            region_dilation: crate::incoherence::TRAINING_DILATION,
            temporal: false,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig("correction threshold must lie in [0.5, 1)".into()));
        }
        if self.clip_len == Some(0) {
            return Err(Error::InvalidConfig("clip length must be positive".into()));
        }
        Ok(())
    }
}

/// Pixel accounting of a correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChangeStats {
    /// Pixels handed to the refiner.
    pub candidates: u64,
    /// Pixels whose label changed.
    pub changed: u64,
    /// Pixels of every present frame of every corrected tracklet.
    pub pixels: u64,
}

impl ChangeStats {
    pub fn fraction(&self) -> f64 {
        if self.pixels == 0 {
            0.0
        } else {
            self.changed as f64 / self.pixels as f64
        }
    }

    pub fn merge(&mut self, other: &ChangeStats) {
        self.candidates += other.candidates;
        self.changed += other.changed;
        self.pixels += other.pixels;
    }
}

/// Quadtree of the coarse masks and the per-frame pixels eligible for
/// correction: fine incoherent pixels grown by `region_dilation`, limited to
/// frames where the instance is present.
pub fn correction_region(tracklet: &Tracklet, video: &VideoMeta, cfg: &CorrectionConfig) -> Result<(IncoherenceQuadtree, Vec<BinaryMask>)> {
    let pyramids = tracklet_pyramids(tracklet, video)?;
    let qt = detect_incoherence(&pyramids, cfg.temporal)?;
    let region = expand_to_fine(&qt)
        .iter()
        .zip(&pyramids)
        .zip(&tracklet.frames)
        .map(|((m, p), f)| match f {
            Some(_) if cfg.region_source == RegionSource::Ungated => dilate(&m.or(&ungated_fine(p)), cfg.region_dilation),
            Some(_) => dilate(m, cfg.region_dilation),
            None => BinaryMask::new(m.width(), m.height()).expect("frame dims are positive"),
        })
        .collect();
    Ok((qt, region))
}

/// One correction of one tracklet, clip by clip.
pub fn correct_tracklet(
    tracklet: &Tracklet,
    video: &VideoMeta,
    refiner: &dyn Refiner,
    cfg: &CorrectionConfig,
) -> Result<(Tracklet, ChangeStats)> {
    cfg.validate()?;
    let (qt, region) = correction_region(tracklet, video, cfg)?;
    let coords = coords_of(&region);
    let dense = tracklet.dense_frames(video.width, video.height)?;
    let mut probabilities = Vec::with_capacity(coords.len());
    let mut lo = 0;
    for window in ClipWindow::tiling(tracklet.length(), cfg.clip_len) {
        let hi = lo + coords[lo..].iter().take_while(|c| c.t <= window.end()).count();
        if hi > lo {
            let clip = ClipInput {
                video_id: tracklet.video_id,
                instance_id: tracklet.id,
                window,
                coarse: &dense[window.start - 1..window.end()],
                rgb: None,
                quadtree: &qt,
                coords: &coords[lo..hi],
            };
            let pred = refiner.refine(&clip)?;
            if pred.probabilities.len() != hi - lo {
                return Err(Error::PredictionCount { expected: hi - lo, found: pred.probabilities.len() });
            }
            probabilities.extend(pred.probabilities);
        }
        lo = hi;
    }
    let corrected = apply_corrections(tracklet, &NodePrediction { probabilities }, &coords, cfg.threshold)?;
    let mut stats = ChangeStats { candidates: coords.len() as u64, ..ChangeStats::default() };
    for (a, b) in tracklet.frames.iter().zip(&corrected.frames) {
        if let (Some(a), Some(b)) = (a, b) {
            stats.changed += a.xor(b).count();
            stats.pixels += a.len() as u64;
        }
    }
    Ok((corrected, stats))
}

/// Corrects every tracklet of `ds` in order.
pub fn correction_pass(ds: &VideoDataset, refiner: &dyn Refiner, cfg: &CorrectionConfig) -> Result<(VideoDataset, ChangeStats)> {
    let mut stats = ChangeStats::default();
    let mut annotations = Vec::with_capacity(ds.annotations.len());
    for t in &ds.annotations {
        let video = ds.video(t.video_id).ok_or(Error::DanglingReference { kind: "video", id: t.video_id })?;
        let (c, s) = correct_tracklet(t, video, refiner, cfg)?;
        stats.merge(&s);
        annotations.push(c);
    }
    Ok((VideoDataset { annotations, ..ds.clone() }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::{ConstantRefiner, OracleRefiner};
    use crate::selfcorrect::{degrade_dataset, synthesize_dataset, DegradeParams, SynthConfig};

    fn suite() -> (VideoDataset, VideoDataset) {
        let gt = synthesize_dataset(&SynthConfig { videos: 3, width: 64, height: 48, seed: 3, ..SynthConfig::default() }).unwrap();
        let (coarse, _) = degrade_dataset(&gt, &DegradeParams { seed: 3, ..DegradeParams::default() }).unwrap();
        (gt, coarse)
    }

    #[test]
    fn half_confidence_is_identity() {
        let (_, coarse) = suite();
        let (out, stats) = correction_pass(&coarse, &ConstantRefiner(0.5), &CorrectionConfig::default()).unwrap();
        assert_eq!(out, coarse);
        assert_eq!(stats.changed, 0);
        assert!(stats.candidates > 0);
    }

    #[test]
    fn oracle_fixes_region_and_nothing_else() {
        let (gt, coarse) = suite();
        let cfg = CorrectionConfig::default();
        let oracle = OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 };
        let (out, stats) = correction_pass(&coarse, &oracle, &cfg).unwrap();
        assert!(stats.changed > 0);
        for ((c, o), g) in coarse.annotations.iter().zip(&out.annotations).zip(&gt.annotations) {
            let video = coarse.video(c.video_id).unwrap();
            let (_, region) = correction_region(c, video, &cfg).unwrap();
            for (i, r) in region.iter().enumerate() {
                let (c, o, g) = (c.frames[i].as_ref().unwrap(), o.frames[i].as_ref().unwrap(), g.frames[i].as_ref().unwrap());
                assert_eq!(o.and(r), g.and(r));
                assert_eq!(o.and_not(r), c.and_not(r));
            }
        }
    }

    #[test]
    fn quadtree_source_is_narrower() {
        let (_, coarse) = suite();
        let t = &coarse.annotations[0];
        let video = coarse.video(t.video_id).unwrap();
        let wide = CorrectionConfig::default();
        let narrow = CorrectionConfig { region_source: RegionSource::Quadtree, region_dilation: 0, ..wide.clone() };
        let (qt, a) = correction_region(t, video, &narrow).unwrap();
        let (_, b) = correction_region(t, video, &wide).unwrap();
        assert_eq!(a, expand_to_fine(&qt));
        for (a, b) in a.iter().zip(&b) {
            assert_eq!(a.and_not(b).count(), 0);
        }
    }

    #[test]
    fn ground_truth_is_a_fixed_point() {
        let (gt, _) = suite();
        let oracle = OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 };
        let (out, stats) = correction_pass(&gt, &oracle, &CorrectionConfig::default()).unwrap();
        assert_eq!(out, gt);
        assert_eq!(stats.changed, 0);
    }

    #[test]
    fn clip_length_does_not_change_oracle_output() {
        let (gt, coarse) = suite();
        let oracle = OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 };
        let all = correction_pass(&coarse, &oracle, &CorrectionConfig::default()).unwrap();
        let short = correction_pass(&coarse, &oracle, &CorrectionConfig { clip_len: Some(2), ..CorrectionConfig::default() }).unwrap();
        assert_eq!(all, short);
    }

    #[test]
    fn rejects_bad_config() {
        let (_, coarse) = suite();
        for cfg in [
            CorrectionConfig { threshold: 0.4, ..CorrectionConfig::default() },
            CorrectionConfig { threshold: 1.0, ..CorrectionConfig::default() },
            CorrectionConfig { clip_len: Some(0), ..CorrectionConfig::default() },
        ] {
            assert!(correction_pass(&coarse, &ConstantRefiner(0.9), &cfg).is_err());
        }
    }

    #[test]
    fn wrong_prediction_count_is_an_error() {
        struct Short;
        impl Refiner for Short {
            fn refine(&self, _: &ClipInput<'_>) -> Result<NodePrediction> {
                Ok(NodePrediction { probabilities: alloc::vec![1.0] })
            }
        }
        let (_, coarse) = suite();
        assert!(matches!(correction_pass(&coarse, &Short, &CorrectionConfig::default()), Err(Error::PredictionCount { .. })));
    }
}
