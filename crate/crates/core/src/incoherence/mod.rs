//! Incoherent-region detection over mask pyramids.
//!
//! A cell at level `l >= 1` is spatially incoherent when its 2x2 child block
//! at `l - 1` is not constant. Roots are L3 cells (optionally also L3 cells
//! that flip value between adjacent frames); detection then descends only
//! inside flagged parents down to L1. The L0 pixels under flagged L1 cells
//! are the refinement targets.

mod pyramid;

pub use pyramid::{build_pyramid, padded_size, MaskPyramid, LEVELS, ROOT_SIZE};

use alloc::vec::Vec;

use crate::dataset::{Tracklet, VideoMeta};
use crate::error::{Error, Result};
use crate::mask::{dilate, BinaryMask};

/// A fine (L0) pixel of a video, with a 1-based frame index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FineCoord {
    pub t: usize,
    pub row: usize,
    pub col: usize,
}

/// Flags for L1..L3 of one frame, stored as rasters at each level's size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCells {
    flags: [BinaryMask; LEVELS - 1],
}

impl FrameCells {
    /// Flag raster of level `l` (1..=3).
    pub fn level(&self, l: usize) -> &BinaryMask {
        &self.flags[l - 1]
    }

    pub fn is_flagged(&self, l: usize, row: usize, col: usize) -> bool {
        let f = self.level(l);
        row < f.height() && col < f.width() && f.get(row, col)
    }

    /// Flagged `(row, col)` cells of level `l`, row-major.
    pub fn cells(&self, l: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.level(l).ones()
    }

    pub fn count(&self) -> usize {
        self.flags.iter().map(|f| f.count() as usize).sum()
    }
}

/// Per-frame, multi-level sparse incoherent cells of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct IncoherenceQuadtree {
    pub width: usize,
    pub height: usize,
    frames: Vec<FrameCells>,
}

impl IncoherenceQuadtree {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Cells of 1-based frame `t`.
    pub fn frame(&self, t: usize) -> &FrameCells {
        &self.frames[t - 1]
    }

    pub fn frames(&self) -> &[FrameCells] {
        &self.frames
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        (padded_size(self.width), padded_size(self.height))
    }

    pub fn is_empty(&self) -> bool {
        self.frames.iter().all(|f| f.count() == 0)
    }

    pub fn from_frames(width: usize, height: usize, frames: Vec<FrameCells>) -> Self {
        Self { width, height, frames }
    }
}

/// Plug-in point for incoherence detectors over one instance's frames.
pub trait Detector {
    fn detect(&self, pyramids: &[MaskPyramid]) -> Result<IncoherenceQuadtree>;
}

/// The deterministic non-constancy detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleDetector {
    pub temporal: bool,
}

impl Detector for OracleDetector {
    fn detect(&self, pyramids: &[MaskPyramid]) -> Result<IncoherenceQuadtree> {
        detect_incoherence(pyramids, self.temporal)
    }
}

/// Cells of level `l` whose 2x2 child block at `l - 1` is non-constant.
pub fn spatial_incoherence(p: &MaskPyramid, l: usize) -> BinaryMask {
    assert!((1..LEVELS).contains(&l));
    let child = p.level(l - 1);
    let (w, h) = p.level(l).dims();
    BinaryMask::from_fn(w, h, |r, c| {
        let a = child.get(2 * r, 2 * c);
        a != child.get(2 * r, 2 * c + 1) || a != child.get(2 * r + 1, 2 * c) || a != child.get(2 * r + 1, 2 * c + 1)
    })
    .expect("level dims are positive")
}

fn parent_flagged(parent: &BinaryMask, own: &BinaryMask) -> BinaryMask {
    let (w, h) = own.dims();
    BinaryMask::from_fn(w, h, |r, c| own.get(r, c) && parent.get(r / 2, c / 2)).expect("level dims are positive")
}

pub fn detect_incoherence(pyramids: &[MaskPyramid], temporal: bool) -> Result<IncoherenceQuadtree> {
    let Some(first) = pyramids.first() else {
        return Err(Error::EmptyClip);
    };
    let dims = first.dims();
    if let Some(p) = pyramids.iter().find(|p| p.dims() != dims) {
        return Err(Error::ResolutionMismatch { expected: dims, found: p.dims() });
    }

    let top = LEVELS - 1;
    let mut frames = Vec::with_capacity(pyramids.len());
    for (i, p) in pyramids.iter().enumerate() {
        let mut roots = spatial_incoherence(p, top);
        if temporal {
            let here = p.level(top);
            for n in [i.checked_sub(1), Some(i + 1)].into_iter().flatten() {
                if let Some(q) = pyramids.get(n) {
                    roots = roots.or(&here.xor(q.level(top)));
                }
            }
        }
        let l2 = parent_flagged(&roots, &spatial_incoherence(p, 2));
        let l1 = parent_flagged(&l2, &spatial_incoherence(p, 1));
        frames.push(FrameCells { flags: [l1, l2, roots] });
    }
    Ok(IncoherenceQuadtree { width: dims.0, height: dims.1, frames })
}

/// Pyramids for every frame of `tracklet` (absent frames are empty masks).
pub fn tracklet_pyramids(tracklet: &Tracklet, video: &VideoMeta) -> Result<Vec<MaskPyramid>> {
    tracklet.dense_frames(video.width, video.height)?.iter().map(build_pyramid).collect()
}

/// Per-instance detection on a tracklet's own masks.
pub fn detect_tracklet(tracklet: &Tracklet, video: &VideoMeta, detector: &dyn Detector) -> Result<IncoherenceQuadtree> {
    detector.detect(&tracklet_pyramids(tracklet, video)?)
}

/// L0 pixels lying inside flagged L1 cells, per frame, cropped to the
/// unpadded frame.
pub fn expand_to_fine(qt: &IncoherenceQuadtree) -> Vec<BinaryMask> {
    qt.frames
        .iter()
        .map(|f| {
            let mut m = BinaryMask::new(qt.width, qt.height).expect("quadtree dims are positive");
            for (r, c) in f.cells(1) {
                for (rr, cc) in [(2 * r, 2 * c), (2 * r, 2 * c + 1), (2 * r + 1, 2 * c), (2 * r + 1, 2 * c + 1)] {
                    if rr < qt.height && cc < qt.width {
                        m.set(rr, cc, true);
                    }
                }
            }
            m
        })
        .collect()
}

/// L0 pixels under every spatially incoherent L1 cell, ignoring whether the
/// ancestors are flagged, cropped to the unpadded frame. A superset of the
/// frame's [`expand_to_fine`] pixels without temporal roots.
pub fn ungated_fine(p: &MaskPyramid) -> BinaryMask {
    let l1 = spatial_incoherence(p, 1);
    let (w, h) = p.dims();
    BinaryMask::from_fn(w, h, |r, c| l1.get(r / 2, c / 2)).expect("pyramid dims are positive")
}

/// The set bits of per-frame masks as coordinates, ordered by (t, row, col).
pub fn coords_of(frames: &[BinaryMask]) -> Vec<FineCoord> {
    frames.iter().enumerate().flat_map(|(i, m)| m.ones().map(move |(row, col)| FineCoord { t: i + 1, row, col })).collect()
}

/// Fine targets dilated by `radius` (3 for training-region growth).
pub fn training_region(qt: &IncoherenceQuadtree, radius: u32) -> Vec<BinaryMask> {
    expand_to_fine(qt).iter().map(|m| dilate(m, radius)).collect()
}

/// Dilation applied to ground-truth incoherent regions for training.
pub const TRAINING_DILATION: u32 = 3;

/// Fine incoherent pixels over the `T x H x W` volume.
pub fn incoherence_fraction(qt: &IncoherenceQuadtree) -> f64 {
    let volume = (qt.num_frames() * qt.width * qt.height) as f64;
    if volume == 0.0 {
        return 0.0;
    }
    expand_to_fine(qt).iter().map(|m| m.count() as f64).sum::<f64>() / volume
}

/// Fraction for a whole video: union over instances of their fine pixels.
pub fn video_incoherence_fraction(quadtrees: &[IncoherenceQuadtree]) -> f64 {
    let Some(first) = quadtrees.first() else {
        return 0.0;
    };
    let mut union = expand_to_fine(first);
    for qt in &quadtrees[1..] {
        for (u, m) in union.iter_mut().zip(expand_to_fine(qt)) {
            *u = u.or(&m);
        }
    }
    let volume = (first.num_frames() * first.width * first.height) as f64;
    union.iter().map(|m| m.count() as f64).sum::<f64>() / volume
}
