//! Videos, tracklets and datasets.
//!
//! Frame indices on every public interface are 1-based: frame `t` of a video
//! of length `T` satisfies `1 <= t <= T`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct VideoMeta {
    pub id: u64,
    pub width: usize,
    pub height: usize,
    pub length: usize,
    pub file_names: Vec<String>,
}

/// One video instance: per-frame masks plus category and score.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub id: u64,
    pub video_id: u64,
    pub category_id: u64,
    /// 1.0 for ground truth.
    pub score: f64,
    /// `frames[t - 1]` is the mask of frame `t`; `None` where the instance is absent.
    pub frames: Vec<Option<BinaryMask>>,
}

impl Tracklet {
    pub fn length(&self) -> usize {
        self.frames.len()
    }

    /// Mask of 1-based frame `t`.
    pub fn frame(&self, t: usize) -> Option<&BinaryMask> {
        t.checked_sub(1).and_then(|i| self.frames.get(i)).and_then(Option::as_ref)
    }

    /// First and last frames with a present mask, 1-based.
    pub fn span(&self) -> Option<(usize, usize)> {
        let b = self.frames.iter().position(Option::is_some)?;
        let e = self.frames.iter().rposition(Option::is_some)?;
        Some((b + 1, e + 1))
    }

    /// `(width, height)` of the first present mask.
    pub fn resolution(&self) -> Option<(usize, usize)> {
        self.frames.iter().flatten().next().map(BinaryMask::dims)
    }

    /// Masks for all frames, with empty masks of `(width, height)` where absent.
    pub fn dense_frames(&self, width: usize, height: usize) -> Result<Vec<BinaryMask>> {
        self.frames
            .iter()
            .map(|f| match f {
                Some(m) => {
                    if m.dims() != (width, height) {
                        return Err(Error::ResolutionMismatch { expected: (width, height), found: m.dims() });
                    }
                    Ok(m.clone())
                }
                None => BinaryMask::new(width, height),
            })
            .collect()
    }

    /// Applies `f` to every present mask.
    pub fn map_masks(&self, mut f: impl FnMut(usize, &BinaryMask) -> BinaryMask) -> Tracklet {
        let frames = self.frames.iter().enumerate().map(|(i, m)| m.as_ref().map(|m| f(i + 1, m))).collect();
        Tracklet { frames, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VideoDataset {
    pub videos: Vec<VideoMeta>,
    pub annotations: Vec<Tracklet>,
    pub categories: BTreeMap<u64, String>,
}

impl VideoDataset {
    pub fn video(&self, id: u64) -> Option<&VideoMeta> {
        self.videos.iter().find(|v| v.id == id)
    }

    pub fn tracklets_of(&self, video_id: u64) -> impl Iterator<Item = &Tracklet> {
        self.annotations.iter().filter(move |t| t.video_id == video_id)
    }

    pub fn tracklet(&self, video_id: u64, id: u64) -> Option<&Tracklet> {
        self.annotations.iter().find(|t| t.video_id == video_id && t.id == id)
    }

    /// Checks every structural invariant: ids resolve, lengths and resolutions agree.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for v in &self.videos {
            if v.length == 0 {
                return Err(Error::InvalidDataset(alloc::format!("video {} has length 0", v.id)));
            }
            if v.width == 0 || v.height == 0 {
                return Err(Error::InvalidShape { width: v.width, height: v.height });
            }
            if seen.insert(v.id, ()).is_some() {
                return Err(Error::InvalidDataset(alloc::format!("duplicate video id {}", v.id)));
            }
        }
        for t in &self.annotations {
            self.check_tracklet(t)?;
        }
        Ok(())
    }

    pub(crate) fn check_tracklet(&self, t: &Tracklet) -> Result<()> {
        let v = self.video(t.video_id).ok_or(Error::DanglingReference { kind: "video", id: t.video_id })?;
        if !self.categories.contains_key(&t.category_id) {
            return Err(Error::DanglingReference { kind: "category", id: t.category_id });
        }
        if t.frames.len() != v.length {
            return Err(Error::InvalidDataset(alloc::format!(
                "tracklet {} has {} frames, video {} has {}",
                t.id,
                t.frames.len(),
                v.id,
                v.length
            )));
        }
        for m in t.frames.iter().flatten() {
            if m.dims() != (v.width, v.height) {
                return Err(Error::ResolutionMismatch { expected: (v.width, v.height), found: m.dims() });
            }
        }
        if !(0.0..=1.0).contains(&t.score) {
            return Err(Error::InvalidDataset(alloc::format!("tracklet {} score {} outside [0, 1]", t.id, t.score)));
        }
        Ok(())
    }

    /// The subset of this dataset covering `video_ids`, in this dataset's order.
    pub fn restricted_to(&self, video_ids: &[u64]) -> VideoDataset {
        VideoDataset {
            videos: self.videos.iter().filter(|v| video_ids.contains(&v.id)).cloned().collect(),
            annotations: self.annotations.iter().filter(|t| video_ids.contains(&t.video_id)).cloned().collect(),
            categories: self.categories.clone(),
        }
    }

    pub fn total_pixels(&self) -> u64 {
        self.videos.iter().map(|v| (v.width * v.height * v.length) as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Ratios used by the HQ-YTVIS resplit: 75 / 12.5 / 12.5.
pub const HQ_YTVIS_RATIOS: (f64, f64, f64) = (0.75, 0.125, 0.125);

/// Seeded shuffle, then a contiguous train/val/test cut.
///
/// Val and test sizes are `round(n * ratio)`; train takes the remainder.
pub fn split_dataset<T: Clone>(items: &[T], ratios: (f64, f64, f64), seed: u64) -> Result<Split<T>> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !r.is_finite() || *r < 0.0) || libm::fabs(tr + va + te - 1.0) > 1e-9 {
        return Err(Error::InvalidConfig(alloc::format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let n = items.len();
    let n_val = (libm::round(n as f64 * va) as usize).min(n);
    let n_test = (libm::round(n as f64 * te) as usize).min(n - n_val);

    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(n - n_test);
    let val = shuffled.split_off(n - n_test - n_val);
    Ok(Split { train: shuffled, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn hq_ytvis_sizes() {
        let ids: Vec<u32> = (0..2238).collect();
        let s = split_dataset(&ids, HQ_YTVIS_RATIOS, 7).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1678, 280, 280));
    }

    #[test]
    fn small_split_and_determinism() {
        let ids: Vec<u32> = (0..8).collect();
        let a = split_dataset(&ids, (0.5, 0.25, 0.25), 1).unwrap();
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (4, 2, 2));
        assert_eq!(a, split_dataset(&ids, (0.5, 0.25, 0.25), 1).unwrap());
        let b = split_dataset(&ids, (0.5, 0.25, 0.25), 2).unwrap();
        assert_eq!((b.train.len(), b.val.len(), b.test.len()), (4, 2, 2));
    }

    #[test]
    fn errors() {
        let empty: Vec<u32> = vec![];
        assert_eq!(split_dataset(&empty, HQ_YTVIS_RATIOS, 0), Err(Error::EmptyInput));
        assert!(split_dataset(&[1], (0.5, 0.5, 0.5), 0).is_err());
    }

    #[test]
    fn span_is_one_based() {
        let m = BinaryMask::full(2, 2).unwrap();
        let t = Tracklet { id: 1, video_id: 1, category_id: 1, score: 1.0, frames: vec![None, Some(m)] };
        assert_eq!(t.span(), Some((2, 2)));
        assert!(t.frame(1).is_none());
        assert!(t.frame(2).is_some());
        assert!(t.frame(0).is_none());
    }

    proptest! {
        #[test]
        fn split_is_partition(n in 1usize..300, a in 0.0f64..1.0, b in 0.0f64..1.0, seed in any::<u64>()) {
            let (va, te) = (a / 2.0, b / 2.0);
            let tr = 1.0 - va - te;
            let ids: Vec<usize> = (0..n).collect();
            let s = split_dataset(&ids, (tr, va, te), seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, ids);
        }
    }
}
