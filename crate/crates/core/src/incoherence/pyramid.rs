use crate::error::Result;
use crate::mask::{resample, BinaryMask, ResampleDirection};

/// Number of pyramid levels: L0 (full resolution) to L3 (1/8).
pub const LEVELS: usize = 4;
/// Side of an L3 cell in L0 pixels.
pub const ROOT_SIZE: usize = 1 << (LEVELS - 1);

/// One frame at L0..L3. L0 is the input padded with background to a multiple
/// of 8; each coarser level is a majority ×2 downsample of the previous one.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPyramid {
    levels: [BinaryMask; LEVELS],
    width: usize,
    height: usize,
}

impl MaskPyramid {
    pub fn level(&self, l: usize) -> &BinaryMask {
        &self.levels[l]
    }

    /// Unpadded `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        self.levels[0].dims()
    }

    /// `(columns, rows)` of background padding added on the right and bottom.
    pub fn pad(&self) -> (usize, usize) {
        let (pw, ph) = self.padded_dims();
        (pw - self.width, ph - self.height)
    }
}

pub fn padded_size(n: usize) -> usize {
    n.div_ceil(ROOT_SIZE) * ROOT_SIZE
}

pub fn build_pyramid(mask: &BinaryMask) -> Result<MaskPyramid> {
    let (w, h) = mask.dims();
    let l0 = if w % ROOT_SIZE == 0 && h % ROOT_SIZE == 0 { mask.clone() } else { mask.padded(padded_size(w), padded_size(h))? };
    let l1 = resample(&l0, ResampleDirection::Down, 2)?;
    let l2 = resample(&l1, ResampleDirection::Down, 2)?;
    let l3 = resample(&l2, ResampleDirection::Down, 2)?;
    Ok(MaskPyramid { levels: [l0, l1, l2, l3], width: w, height: h })
}
