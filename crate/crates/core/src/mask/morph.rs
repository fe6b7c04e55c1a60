use super::{squared_distance_transform, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MorphOp {
    Dilate,
    Erode,
}

/// Morphology with the Euclidean disk `{(dy, dx) : dy² + dx² ≤ radius²}`.
///
/// Pixels outside the image count as background, so erosion eats inward
/// from the frame border.
pub fn morph(mask: &BinaryMask, op: MorphOp, radius: u32) -> BinaryMask {
    match op {
        MorphOp::Dilate => dilate(mask, radius),
        MorphOp::Erode => erode(mask, radius),
    }
}

pub fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let r2 = (radius as u64).pow(2);
    let dist = squared_distance_transform(mask);
    let (w, h) = mask.dims();
    let mut out = BinaryMask::new(w, h).expect("dims of an existing mask");
    for (i, &d) in dist.iter().enumerate() {
        if d <= r2 {
            out.set_index(i, true);
        }
    }
    out
}

pub fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let r = radius as usize;
    let r2 = (radius as u64).pow(2);
    let dist = squared_distance_transform(&mask.not());
    let (w, h) = mask.dims();
    let mut out = BinaryMask::new(w, h).expect("dims of an existing mask");
    for (row, col) in mask.ones() {
        // the nearest outside pixel is always axis-aligned
        let border = (row + 1).min(col + 1).min(h - row).min(w - col);
        if border > r && dist[row * w + col] > r2 {
            out.set(row, col, true);
        }
    }
    out
}
