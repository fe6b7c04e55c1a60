//! Quadtree sequence grouping: every flagged cell of every frame in a clip
//! becomes one token, ordered canonically by (t, level, row, col).

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::incoherence::{FrameCells, IncoherenceQuadtree, LEVELS};

/// A flagged quadtree cell. `t` is 1-based; `level` is 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeToken {
    pub t: usize,
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

impl NodeToken {
    /// Side of the cell in L0 pixels.
    pub fn side(&self) -> usize {
        1 << self.level
    }

    /// `(row, col)` of the cell's top-left L0 pixel (padded frame coordinates).
    pub fn origin(&self) -> (usize, usize) {
        (self.row * self.side(), self.col * self.side())
    }

    /// Sinusoidal encoding of `(t, level, row·2^l, col·2^l)`, `dim / 8`
    /// frequencies per component, laid out component by component as
    /// interleaved `sin, cos` pairs.
    pub fn positional_encoding(&self, dim: usize) -> Vec<f64> {
        let (r0, c0) = self.origin();
        let freqs = dim / 8;
        let mut out = Vec::with_capacity(dim);
        for v in [self.t as f64, self.level as f64, r0 as f64, c0 as f64] {
            for i in 0..freqs {
                let w = 1.0 / libm::pow(10000.0, i as f64 / freqs as f64);
                out.push(libm::sin(v * w));
                out.push(libm::cos(v * w));
            }
        }
        out
    }
}

/// A window of `len` frames starting at 1-based frame `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipWindow {
    pub start: usize,
    pub len: usize,
}

impl ClipWindow {
    /// Last frame, inclusive.
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn contains(&self, t: usize) -> bool {
        t >= self.start && t < self.start + self.len
    }

    pub fn frames(&self) -> core::ops::RangeInclusive<usize> {
        self.start..=self.end()
    }

    /// Consecutive non-overlapping windows covering `num_frames`; `None`
    /// means a single window over the whole video.
    pub fn tiling(num_frames: usize, clip_len: Option<usize>) -> Vec<ClipWindow> {
        let step = clip_len.unwrap_or(num_frames).max(1);
        (1..=num_frames).step_by(step).map(|start| ClipWindow { start, len: step.min(num_frames + 1 - start) }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub window: ClipWindow,
    pub tokens: Vec<NodeToken>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of the token at `(t, level, row, col)`.
    pub fn position(&self, token: &NodeToken) -> Option<usize> {
        self.tokens.binary_search(token).ok()
    }
}

/// Groups the flagged cells of `frames` (1-based frame index, cells) inside
/// `window`. Input order does not matter; frames outside the window are skipped.
pub fn group_sequence(frames: &[(usize, &FrameCells)], window: ClipWindow) -> Result<TokenSequence> {
    if window.len == 0 || window.start == 0 {
        return Err(Error::EmptyClip);
    }
    let mut ts: Vec<usize> = frames.iter().map(|(t, _)| *t).filter(|&t| window.contains(t)).collect();
    ts.sort_unstable();
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig("frame listed twice in clip".to_string()));
    }
    let mut tokens = Vec::new();
    for &(t, cells) in frames.iter().filter(|(t, _)| window.contains(*t)) {
        for level in 1..LEVELS {
            tokens.extend(cells.cells(level).map(|(row, col)| NodeToken { t, level, row, col }));
        }
    }
    tokens.sort_unstable();
    Ok(TokenSequence { window, tokens })
}

/// [`group_sequence`] over a whole-tracklet quadtree; `window` must lie
/// inside the tracklet.
pub fn group_quadtree(qt: &IncoherenceQuadtree, window: ClipWindow) -> Result<TokenSequence> {
    if window.len == 0 || window.start == 0 {
        return Err(Error::EmptyClip);
    }
    if window.end() > qt.num_frames() {
        return Err(Error::InvalidConfig(alloc::format!(
            "clip frames {}..={} exceed the {} frames of the video",
            window.start,
            window.end(),
            qt.num_frames()
        )));
    }
    let frames: Vec<(usize, &FrameCells)> = window.frames().map(|t| (t, qt.frame(t))).collect();
    group_sequence(&frames, window)
}
