//! Clip-length study: correction with a temporally correlated noisy oracle
//! whose answers are pooled over the frames of each clip.

use alloc::vec;
use alloc::vec::Vec;

use super::pass::{correction_pass, CorrectionConfig};
use crate::dataset::{Tracklet, VideoDataset};
use crate::error::{Error, Result};
use crate::incoherence::FineCoord;
use crate::mask::BinaryMask;
use crate::metrics::{evaluate, MetricConfig};
use crate::refine::{ClipInput, NodePrediction, Refiner};
use crate::seed;

/// Ground truth with label flips that persist for `corr_len` frames at a pixel:
/// the flip of `(y, x)` in frame `t` is keyed by `(t - 1) / corr_len`.
#[derive(Debug, Clone, Copy)]
pub struct NoisyOracle<'a> {
    pub gt: &'a VideoDataset,
    pub flip_prob: f64,
    pub corr_len: usize,
    pub seed: u64,
}

impl NoisyOracle<'_> {
    fn instance(&self, video_id: u64, instance_id: u64) -> Result<&Tracklet> {
        self.gt.tracklet(video_id, instance_id).ok_or(Error::DanglingReference { kind: "ground-truth instance", id: instance_id })
    }

    /// Noisy 0/1 answer for one pixel.
    pub fn label(&self, gt: &Tracklet, c: &FineCoord) -> f64 {
        let truth = gt.frame(c.t).is_some_and(|m| c.row < m.height() && c.col < m.width() && m.get(c.row, c.col));
        let block = ((c.t - 1) / self.corr_len.max(1)) as u64;
        let u = seed::unit(&[self.seed, gt.video_id, gt.id, c.row as u64, c.col as u64, block]);
        let flip = u < self.flip_prob;
        if truth != flip {
            1.0
        } else {
            0.0
        }
    }
}

impl Refiner for NoisyOracle<'_> {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction> {
        let gt = self.instance(clip.video_id, clip.instance_id)?;
        Ok(NodePrediction { probabilities: clip.coords.iter().map(|c| self.label(gt, c)).collect() })
    }
}

/// Centroid `(row, col)` of a mask, or `None` when empty.
fn centroid(m: &BinaryMask) -> Option<(f64, f64)> {
    let n = m.count();
    if n == 0 {
        return None;
    }
    let (mut r, mut c) = (0.0, 0.0);
    for (y, x) in m.ones() {
        r += y as f64;
        c += x as f64;
    }
    Some((r / n as f64, c / n as f64))
}

/// Averages the oracle's answers for a pixel over every frame of the clip,
/// following the coarse mask's centroid motion between frames. A one-frame
/// clip reproduces the oracle.
#[derive(Debug, Clone, Copy)]
pub struct TemporalVote<'a> {
    pub oracle: NoisyOracle<'a>,
}

impl Refiner for TemporalVote<'_> {
    fn refine(&self, clip: &ClipInput<'_>) -> Result<NodePrediction> {
        let gt = self.oracle.instance(clip.video_id, clip.instance_id)?;
        let centres: Vec<Option<(f64, f64)>> = clip.coarse.iter().map(centroid).collect();
        let probabilities = clip
            .coords
            .iter()
            .map(|c| {
                let here = centres[c.t - clip.window.start];
                let (mut sum, mut n) = (0.0, 0usize);
                for (k, there) in centres.iter().enumerate() {
                    let (dr, dc) = match (here, there) {
                        (Some(a), Some(b)) => (libm::round(b.0 - a.0) as i64, libm::round(b.1 - a.1) as i64),
                        _ => (0, 0),
                    };
                    let (row, col) = (c.row as i64 + dr, c.col as i64 + dc);
                    let m = &clip.coarse[k];
                    if row < 0 || col < 0 || row as usize >= m.height() || col as usize >= m.width() {
                        continue;
                    }
                    let t = clip.window.start + k;
                    sum += self.oracle.label(gt, &FineCoord { t, row: row as usize, col: col as usize });
                    n += 1;
                }
                if n == 0 {
                    0.5
                } else {
                    sum / n as f64
                }
            })
            .collect();
        Ok(NodePrediction { probabilities })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipStudyConfig {
    /// `None` is a single clip spanning the whole video.
    pub clip_lengths: Vec<Option<usize>>,
    pub flip_prob: f64,
    pub corr_len: usize,
    pub seed: u64,
    pub correction: CorrectionConfig,
    pub metric: MetricConfig,
}

impl Default for ClipStudyConfig {
    fn default() -> Self {
        Self {
            clip_lengths: vec![Some(1), Some(5), Some(10), None],
            flip_prob: 0.3,
            corr_len: 2,
            seed: 0,
            correction: CorrectionConfig::default(),
            metric: MetricConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClipStudyRow {
    pub clip_len: Option<usize>,
    pub boundary_ap: f64,
    pub mask_ap: f64,
    pub changed_fraction: f64,
}

/// One correction pass of `coarse` per clip length, each scored against `gt`.
pub fn clip_length_study(gt: &VideoDataset, coarse: &VideoDataset, cfg: &ClipStudyConfig) -> Result<Vec<ClipStudyRow>> {
    if !(0.0..=1.0).contains(&cfg.flip_prob) || cfg.corr_len == 0 {
        return Err(Error::InvalidConfig("flip probability must lie in [0, 1] and correlation length be positive".into()));
    }
    let vote = TemporalVote { oracle: NoisyOracle { gt, flip_prob: cfg.flip_prob, corr_len: cfg.corr_len, seed: cfg.seed } };
    cfg.clip_lengths
        .iter()
        .map(|&clip_len| {
            let correction = CorrectionConfig { clip_len, ..cfg.correction.clone() };
            let (corrected, stats) = correction_pass(coarse, &vote, &correction)?;
            let report = evaluate(gt, &corrected.annotations, &cfg.metric)?;
            Ok(ClipStudyRow { clip_len, boundary_ap: report.boundary.ap, mask_ap: report.mask.ap, changed_fraction: stats.fraction() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfcorrect::{degrade_dataset, synthesize_dataset, DegradeParams, SynthConfig};

    fn suite() -> (VideoDataset, VideoDataset) {
        let gt =
            synthesize_dataset(&SynthConfig { videos: 2, frames: 6, width: 48, height: 48, seed: 4, ..SynthConfig::default() }).unwrap();
        let (coarse, _) = degrade_dataset(&gt, &DegradeParams { seed: 4, ..DegradeParams::default() }).unwrap();
        (gt, coarse)
    }

    #[test]
    fn flips_persist_within_a_block() {
        let (gt, _) = suite();
        let oracle = NoisyOracle { gt: &gt, flip_prob: 0.5, corr_len: 2, seed: 9 };
        let t = &gt.annotations[0];
        let mut same = 0;
        let mut total = 0;
        for row in 0..48 {
            for col in 0..48 {
                let flip = |t_: usize| {
                    let c = FineCoord { t: t_, row, col };
                    (oracle.label(t, &c) == 1.0) != t.frame(t_).unwrap().get(row, col)
                };
                assert_eq!(flip(1), flip(2));
                same += usize::from(flip(2) == flip(3));
                total += 1;
            }
        }
        // blocks 1-2 and 3-4 flip independently
        assert!(same < total);
    }

    #[test]
    fn zero_noise_matches_truth() {
        let (gt, _) = suite();
        let oracle = NoisyOracle { gt: &gt, flip_prob: 0.0, corr_len: 3, seed: 0 };
        let t = &gt.annotations[0];
        for (row, col) in [(0, 0), (20, 20), (47, 3)] {
            let truth = t.frame(2).unwrap().get(row, col);
            assert_eq!(oracle.label(t, &FineCoord { t: 2, row, col }), if truth { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn study_has_one_row_per_length() {
        let (gt, coarse) = suite();
        let rows = clip_length_study(&gt, &coarse, &ClipStudyConfig::default()).unwrap();
        assert_eq!(rows.iter().map(|r| r.clip_len).collect::<Vec<_>>(), [Some(1), Some(5), Some(10), None]);
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.boundary_ap) && (0.0..=1.0).contains(&r.mask_ap));
            assert!(r.changed_fraction > 0.0);
        }
    }

    #[test]
    fn single_frame_vote_is_the_oracle() {
        let (gt, coarse) = suite();
        let cfg = ClipStudyConfig { clip_lengths: alloc::vec![Some(1)], ..ClipStudyConfig::default() };
        let rows = clip_length_study(&gt, &coarse, &cfg).unwrap();
        let oracle = NoisyOracle { gt: &gt, flip_prob: cfg.flip_prob, corr_len: cfg.corr_len, seed: cfg.seed };
        let (direct, _) =
            correction_pass(&coarse, &oracle, &CorrectionConfig { clip_len: Some(1), ..CorrectionConfig::default() }).unwrap();
        let report = evaluate(&gt, &direct.annotations, &cfg.metric).unwrap();
        assert_eq!(rows[0].boundary_ap, report.boundary.ap);
    }

    #[test]
    fn rejects_bad_noise() {
        let (gt, coarse) = suite();
        assert!(clip_length_study(&gt, &coarse, &ClipStudyConfig { flip_prob: 1.5, ..ClipStudyConfig::default() }).is_err());
        assert!(clip_length_study(&gt, &coarse, &ClipStudyConfig { corr_len: 0, ..ClipStudyConfig::default() }).is_err());
    }
}
