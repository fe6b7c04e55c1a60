use super::{squared_distance_transform, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BandMode {
    /// Pixels on both sides of the contour.
    #[default]
    TwoSided,
    /// Band intersected with the mask.
    InnerOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryBand {
    pub band: BinaryMask,
    pub d: u32,
    pub mode: BandMode,
}

/// Set pixels with a 4-neighbour that is unset or outside the image.
pub fn contour(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = BinaryMask::new(w, h).expect("dims of an existing mask");
    for (r, c) in mask.ones() {
        let (ri, ci) = (r as isize, c as isize);
        let edge = !mask.get_or_false(ri - 1, ci)
            || !mask.get_or_false(ri + 1, ci)
            || !mask.get_or_false(ri, ci - 1)
            || !mask.get_or_false(ri, ci + 1);
        if edge {
            out.set(r, c, true);
        }
    }
    out
}

/// All pixels within Euclidean distance `d` of the contour of `mask`.
pub fn boundary_band(mask: &BinaryMask, d: u32, mode: BandMode) -> BoundaryBand {
    let edge = contour(mask);
    let (w, h) = mask.dims();
    let mut band = BinaryMask::new(w, h).expect("dims of an existing mask");
    if !edge.is_empty() {
        let d2 = (d as u64).pow(2);
        for (i, dist) in squared_distance_transform(&edge).into_iter().enumerate() {
            if dist <= d2 {
                band.set_index(i, true);
            }
        }
        if mode == BandMode::InnerOnly {
            band = band.and(mask);
        }
    }
    BoundaryBand { band, d, mode }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Materialise the contour set and filter pixels by pairwise distance.
    fn brute_band(mask: &BinaryMask, d: u32, mode: BandMode) -> BinaryMask {
        let (w, h) = mask.dims();
        let edge: Vec<(usize, usize)> = mask
            .ones()
            .filter(|&(r, c)| {
                let n = [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)];
                n.iter().any(|&(dr, dc)| !mask.get_or_false(r as isize + dr, c as isize + dc))
            })
            .collect();
        let d2 = (d as i64).pow(2);
        BinaryMask::from_fn(w, h, |r, c| {
            let near = edge.iter().any(|&(er, ec)| (r as i64 - er as i64).pow(2) + (c as i64 - ec as i64).pow(2) <= d2);
            near && (mode == BandMode::TwoSided || mask.get(r, c))
        })
        .unwrap()
    }

    #[test]
    fn empty_mask_empty_band() {
        let m = BinaryMask::new(6, 6).unwrap();
        for d in [0, 1, 10] {
            assert!(boundary_band(&m, d, BandMode::TwoSided).band.is_empty());
        }
    }

    #[test]
    fn single_pixel_d0() {
        let mut m = BinaryMask::new(5, 5).unwrap();
        m.set(2, 3, true);
        let b = boundary_band(&m, 0, BandMode::TwoSided);
        assert_eq!(b.band, m);
    }

    #[test]
    fn centered_square_d1() {
        let m = BinaryMask::from_fn(8, 8, |r, c| (2..6).contains(&r) && (2..6).contains(&c)).unwrap();
        let b = boundary_band(&m, 1, BandMode::TwoSided);
        assert_eq!(b.band, brute_band(&m, 1, BandMode::TwoSided));
        // ring of 12 contour pixels, 16 outside neighbours, 4 inner pixels
        assert_eq!(b.band.count(), 12 + 16 + 4);
    }

    #[test]
    fn border_touching_object_has_contour() {
        let m = BinaryMask::full(4, 4).unwrap();
        assert_eq!(contour(&m).count(), 12);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..18, 1usize..18).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h).prop_map(move |v| BinaryMask::from_bools(w, h, &v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in arb_mask(), d in 0u32..6, inner in any::<bool>()) {
            let mode = if inner { BandMode::InnerOnly } else { BandMode::TwoSided };
            prop_assert_eq!(boundary_band(&m, d, mode).band, brute_band(&m, d, mode));
        }

        #[test]
        fn monotone_in_d(m in arb_mask(), d1 in 0u32..5, extra in 0u32..5) {
            let a = boundary_band(&m, d1, BandMode::TwoSided).band;
            let b = boundary_band(&m, d1 + extra, BandMode::TwoSided).band;
            prop_assert!(a.is_subset(&b));
        }

        #[test]
        fn saturates_at_diagonal(m in arb_mask()) {
            let (w, h) = m.dims();
            let diag = libm::ceil(libm::sqrt((w * w + h * h) as f64)) as u32;
            if !m.is_empty() {
                prop_assert_eq!(boundary_band(&m, diag, BandMode::TwoSided).band.count(), (w * h) as u64);
                prop_assert_eq!(boundary_band(&m, diag, BandMode::InnerOnly).band, m.clone());
            }
        }
    }
}
