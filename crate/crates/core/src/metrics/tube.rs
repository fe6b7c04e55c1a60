//! Tube IoU: per-frame intersections and unions summed over an aligned range.

use alloc::vec::Vec;

use crate::dataset::{Tracklet, VideoMeta};
use crate::error::{Error, Result};
use crate::mask::{boundary_band, BandMode, BinaryMask};

/// Extends both tracklets to frames `1..=T` of `video`, filling absent frames
/// with empty masks.
pub fn align_tracklets(a: &Tracklet, b: &Tracklet, video: &VideoMeta) -> Result<(Vec<BinaryMask>, Vec<BinaryMask>)> {
    for t in [a, b] {
        if t.frames.len() != video.length {
            return Err(Error::InvalidDataset(alloc::format!(
                "tracklet {} spans {} frames, video {} has {}",
                t.id,
                t.frames.len(),
                video.id,
                video.length
            )));
        }
    }
    if let (Some(ra), Some(rb)) = (a.resolution(), b.resolution()) {
        if ra != rb {
            return Err(Error::ResolutionMismatch { expected: ra, found: rb });
        }
    }
    Ok((a.dense_frames(video.width, video.height)?, b.dense_frames(video.width, video.height)?))
}

fn ratio((inter, union): (u64, u64)) -> f64 {
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// `(Σ|A_t ∩ B_t|, Σ|A_t ∪ B_t|)` over aligned sequences.
pub fn tube_mask_counts(a: &[BinaryMask], b: &[BinaryMask]) -> (u64, u64) {
    assert_eq!(a.len(), b.len(), "tubes must be aligned");
    a.iter().zip(b).fold((0, 0), |(i, u), (x, y)| (i + x.intersection_count(y), u + x.union_count(y)))
}

/// Tube mask IoU; 0 when both tubes are entirely empty.
pub fn tube_mask_iou(a: &[BinaryMask], b: &[BinaryMask]) -> f64 {
    ratio(tube_mask_counts(a, b))
}

/// Counts for the boundary-restricted tube IoU, where each tube is first
/// intersected with its own boundary band of width `d`.
pub fn tube_boundary_counts(a: &[BinaryMask], b: &[BinaryMask], d: u32, mode: BandMode) -> (u64, u64) {
    assert_eq!(a.len(), b.len(), "tubes must be aligned");
    let ra: Vec<_> = a.iter().map(|m| boundary_region(m, d, mode)).collect();
    let rb: Vec<_> = b.iter().map(|m| boundary_region(m, d, mode)).collect();
    tube_mask_counts(&ra, &rb)
}

pub fn tube_boundary_iou(a: &[BinaryMask], b: &[BinaryMask], d: u32, mode: BandMode) -> f64 {
    ratio(tube_boundary_counts(a, b, d, mode))
}

/// `M ∩ band(M, d)`.
pub fn boundary_region(mask: &BinaryMask, d: u32, mode: BandMode) -> BinaryMask {
    boundary_band(mask, d, mode).band.and(mask)
}

/// Per-frame regions of one tracklet, precomputed once and reused for every
/// pairing. Absent frames stay `None` and count as empty.
#[derive(Debug, Clone)]
pub struct TubeRegions {
    frames: Vec<Option<BinaryMask>>,
}

impl TubeRegions {
    pub fn mask(t: &Tracklet) -> Self {
        Self { frames: t.frames.clone() }
    }

    pub fn boundary(t: &Tracklet, d: u32, mode: BandMode) -> Self {
        Self { frames: t.frames.iter().map(|f| f.as_ref().map(|m| boundary_region(m, d, mode))).collect() }
    }

    pub fn counts(&self, other: &Self) -> (u64, u64) {
        assert_eq!(self.frames.len(), other.frames.len(), "tubes must be aligned");
        let mut inter = 0;
        let mut union = 0;
        for (a, b) in self.frames.iter().zip(&other.frames) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    inter += a.intersection_count(b);
                    union += a.union_count(b);
                }
                (Some(m), None) | (None, Some(m)) => union += m.count(),
                (None, None) => {}
            }
        }
        (inter, union)
    }

    pub fn iou(&self, other: &Self) -> f64 {
        ratio(self.counts(other))
    }
}
