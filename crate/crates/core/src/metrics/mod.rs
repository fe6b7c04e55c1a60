//! Tube mask AP and Tube-Boundary AP.
//!
//! Evaluation runs in two stages so callers can fan out across videos:
//! [`score_video`] builds IoU matrices for one video, [`accumulate`] reduces
//! them in a fixed (video id, category id) order. [`evaluate`] chains the two.

mod ap;
mod report;
mod tube;

pub use ap::{greedy_match, interpolated_ap, score_family, IouMatrix, RECALL_POINTS};
pub use report::{APReport, CategoryReport, FamilyReport, MatchDiagnostics, MatchPair, RecallAt, VideoBand};
pub use tube::{align_tracklets, boundary_region, tube_boundary_counts, tube_boundary_iou, tube_mask_counts, tube_mask_iou, TubeRegions};

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::dataset::{Tracklet, VideoDataset, VideoMeta};
use crate::error::{Error, Result};
use crate::mask::BandMode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryD {
    Pixels(u32),
    /// Fraction of the image diagonal, rounded up.
    DiagonalFraction(f64),
}

impl Default for BoundaryD {
    fn default() -> Self {
        BoundaryD::DiagonalFraction(0.02)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub boundary_d: BoundaryD,
    pub band_mode: BandMode,
    /// Strictly increasing, in `(0, 1]`.
    pub thresholds: Vec<f64>,
    /// `k` values reported as AR@k (detections per video).
    pub max_dets: Vec<usize>,
    /// Detections per video considered for AP.
    pub max_dets_ap: usize,
}

/// `0.50:0.05:0.95`
pub fn default_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            boundary_d: BoundaryD::default(),
            band_mode: BandMode::TwoSided,
            thresholds: default_thresholds(),
            max_dets: alloc::vec![1, 10],
            max_dets_ap: 100,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::InvalidConfig("at least one IoU threshold is required".to_string()));
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidConfig("IoU thresholds must lie in (0, 1]".to_string()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("IoU thresholds must be strictly increasing".to_string()));
        }
        match self.boundary_d {
            BoundaryD::Pixels(0) => return Err(Error::InvalidConfig("boundary d must be at least 1 pixel".to_string())),
            BoundaryD::DiagonalFraction(f) if !(f > 0.0 && f.is_finite()) => {
                return Err(Error::InvalidConfig("boundary d fraction must be positive".to_string()))
            }
            _ => {}
        }
        if self.max_dets.contains(&0) || self.max_dets_ap == 0 {
            return Err(Error::InvalidConfig("detection limits must be positive".to_string()));
        }
        Ok(())
    }

    /// Band width in pixels for a `width x height` frame, at least 1.
    pub fn resolve_d(&self, width: usize, height: usize) -> u32 {
        match self.boundary_d {
            BoundaryD::Pixels(p) => p.max(1),
            BoundaryD::DiagonalFraction(f) => {
                let diag = libm::sqrt((width * width + height * height) as f64);
                (libm::ceil(f * diag) as u32).max(1)
            }
        }
    }
}

/// IoU matrices of one video for every category that has ground truth or
/// predictions in it, ascending by category id.
#[derive(Debug, Clone)]
pub struct VideoScores {
    pub video_id: u64,
    pub d: u32,
    pub cells: Vec<VideoCell>,
}

#[derive(Debug, Clone)]
pub struct VideoCell {
    pub category_id: u64,
    pub mask: IouMatrix,
    pub boundary: IouMatrix,
}

/// Checks that every prediction refers to a known video and category and has
/// the video's length and resolution.
pub fn check_predictions(gt: &VideoDataset, preds: &[Tracklet]) -> Result<()> {
    for p in preds {
        let v = gt.video(p.video_id).ok_or(Error::DanglingReference { kind: "video", id: p.video_id })?;
        if !gt.categories.contains_key(&p.category_id) {
            return Err(Error::DanglingReference { kind: "category", id: p.category_id });
        }
        if p.frames.len() != v.length {
            return Err(Error::InvalidDataset(alloc::format!(
                "prediction {} spans {} frames, video {} has {}",
                p.id,
                p.frames.len(),
                v.id,
                v.length
            )));
        }
        for m in p.frames.iter().flatten() {
            if m.dims() != (v.width, v.height) {
                return Err(Error::ResolutionMismatch { expected: (v.width, v.height), found: m.dims() });
            }
        }
    }
    Ok(())
}

/// Builds both IoU families for one video. Categories are scored independently.
pub fn score_video(video: &VideoMeta, gt: &[&Tracklet], preds: &[&Tracklet], cfg: &MetricConfig) -> VideoScores {
    let d = cfg.resolve_d(video.width, video.height);
    let cats: BTreeSet<u64> = gt.iter().chain(preds).map(|t| t.category_id).collect();
    let mut cells = Vec::with_capacity(cats.len());

    let gt_mask: Vec<_> = gt.iter().map(|t| TubeRegions::mask(t)).collect();
    let gt_band: Vec<_> = gt.iter().map(|t| TubeRegions::boundary(t, d, cfg.band_mode)).collect();
    let pr_mask: Vec<_> = preds.iter().map(|t| TubeRegions::mask(t)).collect();
    let pr_band: Vec<_> = preds.iter().map(|t| TubeRegions::boundary(t, d, cfg.band_mode)).collect();

    for cat in cats {
        let gi: Vec<usize> = (0..gt.len()).filter(|&i| gt[i].category_id == cat).collect();
        let pi: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].category_id == cat).collect();
        let gt_ids: Vec<u64> = gi.iter().map(|&i| gt[i].id).collect();
        let pred_keys: Vec<(u64, f64)> = pi.iter().map(|&i| (preds[i].id, preds[i].score)).collect();
        let mask = IouMatrix::new(gt_ids.clone(), pred_keys.clone(), |p, g| pr_mask[pi[p]].iou(&gt_mask[gi[g]]));
        let boundary = IouMatrix::new(gt_ids, pred_keys, |p, g| pr_band[pi[p]].iou(&gt_band[gi[g]]));
        cells.push(VideoCell { category_id: cat, mask, boundary });
    }
    VideoScores { video_id: video.id, d, cells }
}

/// Reduces per-video scores into a report. Order of `videos` does not matter.
pub fn accumulate(gt: &VideoDataset, videos: &[VideoScores], cfg: &MetricConfig) -> APReport {
    let mut sorted: Vec<&VideoScores> = videos.iter().collect();
    sorted.sort_by_key(|v| v.video_id);
    let categories: Vec<u64> = gt.categories.keys().copied().collect();
    let mask_cells: Vec<_> = sorted.iter().flat_map(|v| v.cells.iter().map(move |c| (v.video_id, c.category_id, &c.mask))).collect();
    let band_cells: Vec<_> = sorted.iter().flat_map(|v| v.cells.iter().map(move |c| (v.video_id, c.category_id, &c.boundary))).collect();
    let mask = score_family(&categories, &mask_cells, cfg);
    let boundary = score_family(&categories, &band_cells, cfg);
    let mut notes = Vec::new();
    if !mask.defined {
        notes.push("no ground truth instances: AP undefined, reported as 0".to_string());
    }
    APReport {
        band_mode: cfg.band_mode,
        thresholds: cfg.thresholds.clone(),
        resolved_d: sorted.iter().map(|v| VideoBand { video_id: v.video_id, d: v.d }).collect(),
        mask,
        boundary,
        notes,
    }
}

/// Groups `gt` and `preds` by video, in `gt.videos` order.
pub fn per_video<'a>(gt: &'a VideoDataset, preds: &'a [Tracklet]) -> Vec<(&'a VideoMeta, Vec<&'a Tracklet>, Vec<&'a Tracklet>)> {
    gt.videos
        .iter()
        .map(|v| {
            let g = gt.annotations.iter().filter(|t| t.video_id == v.id).collect();
            let p = preds.iter().filter(|t| t.video_id == v.id).collect();
            (v, g, p)
        })
        .collect()
}

/// Scores `preds` against `gt` with both tube mask IoU and tube-boundary IoU.
pub fn evaluate(gt: &VideoDataset, preds: &[Tracklet], cfg: &MetricConfig) -> Result<APReport> {
    cfg.validate()?;
    check_predictions(gt, preds)?;
    let scores: Vec<_> = per_video(gt, preds).into_iter().map(|(v, g, p)| score_video(v, &g, &p, cfg)).collect();
    Ok(accumulate(gt, &scores, cfg))
}

/// Matching and AP for arbitrary tracklet lists with a caller-supplied IoU.
/// Tracklets are grouped by (video, category); `iou(gt, pred)`.
pub fn match_and_score(
    gt: &[&Tracklet],
    preds: &[&Tracklet],
    cfg: &MetricConfig,
    mut iou: impl FnMut(&Tracklet, &Tracklet) -> f64,
) -> FamilyReport {
    let keys: BTreeSet<(u64, u64)> = gt.iter().chain(preds).map(|t| (t.video_id, t.category_id)).collect();
    let categories: Vec<u64> = gt.iter().map(|t| t.category_id).collect::<BTreeSet<_>>().into_iter().collect();
    let mut matrices = Vec::new();
    for &(video, cat) in &keys {
        let g: Vec<&Tracklet> = gt.iter().copied().filter(|t| (t.video_id, t.category_id) == (video, cat)).collect();
        let p: Vec<&Tracklet> = preds.iter().copied().filter(|t| (t.video_id, t.category_id) == (video, cat)).collect();
        let m = IouMatrix::new(g.iter().map(|t| t.id).collect(), p.iter().map(|t| (t.id, t.score)).collect(), |pi, gi| iou(g[gi], p[pi]));
        matrices.push((video, cat, m));
    }
    let cells: Vec<_> = matrices.iter().map(|(v, c, m)| (*v, *c, m)).collect();
    score_family(&categories, &cells, cfg)
}
