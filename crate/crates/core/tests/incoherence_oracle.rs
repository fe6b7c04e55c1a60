//! Pyramid and quadtree structure against independent recomputation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmt_core::incoherence::{
    build_pyramid, detect_incoherence, expand_to_fine, incoherence_fraction, spatial_incoherence, IncoherenceQuadtree,
};
use vmt_core::mask::BinaryMask;

type Grid = Vec<Vec<bool>>;

/// Padded L0 followed by repeated 2x2 majority with ties to foreground.
fn oracle_levels(m: &BinaryMask) -> Vec<Grid> {
    let (w, h) = m.dims();
    let (pw, ph) = (w.div_ceil(8) * 8, h.div_ceil(8) * 8);
    let mut levels: Vec<Grid> = vec![(0..ph).map(|r| (0..pw).map(|c| r < h && c < w && m.get(r, c)).collect()).collect()];
    for _ in 1..4 {
        let p = levels.last().unwrap();
        let next = (0..p.len() / 2)
            .map(|r| {
                (0..p[0].len() / 2)
                    .map(|c| {
                        p[2 * r][2 * c] as u8 + p[2 * r][2 * c + 1] as u8 + p[2 * r + 1][2 * c] as u8 + p[2 * r + 1][2 * c + 1] as u8 >= 2
                    })
                    .collect()
            })
            .collect();
        levels.push(next);
    }
    levels
}

fn non_constant(child: &Grid, r: usize, c: usize) -> bool {
    let v = [child[2 * r][2 * c], child[2 * r][2 * c + 1], child[2 * r + 1][2 * c], child[2 * r + 1][2 * c + 1]];
    v.iter().any(|&x| x != v[0])
}

fn grid_of(m: &BinaryMask) -> Grid {
    (0..m.height()).map(|r| (0..m.width()).map(|c| m.get(r, c)).collect()).collect()
}

pub fn random_mask(rng: &mut ChaCha8Rng) -> BinaryMask {
    let (w, h) = (rng.gen_range(1..41), rng.gen_range(1..41));
    match rng.gen_range(0..3) {
        0 => {
            let p = rng.gen_range(0.0..1.0);
            BinaryMask::from_fn(w, h, |_, _| rng.gen_bool(p)).unwrap()
        }
        1 => {
            let (cy, cx, rad) = (rng.gen_range(0.0..h as f64), rng.gen_range(0.0..w as f64), rng.gen_range(0.5..15.0));
            BinaryMask::from_fn(w, h, |r, c| (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2) < rad * rad).unwrap()
        }
        _ => {
            let (r0, c0) = (rng.gen_range(0..h), rng.gen_range(0..w));
            let (r1, c1) = (rng.gen_range(r0..=h), rng.gen_range(c0..=w));
            BinaryMask::from_fn(w, h, |r, c| (r0..r1).contains(&r) && (c0..c1).contains(&c)).unwrap()
        }
    }
}

fn detect_one(m: &BinaryMask) -> IncoherenceQuadtree {
    detect_incoherence(&[build_pyramid(m).unwrap()], false).unwrap()
}

#[test]
fn pyramid_matches_recursive_majority() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = random_mask(&mut rng);
        let p = build_pyramid(&m).unwrap();
        for (l, want) in oracle_levels(&m).iter().enumerate() {
            assert_eq!(&grid_of(p.level(l)), want, "level {l}");
        }
    }
}

#[test]
fn recursive_majority_differs_from_direct_block_majority() {
    // three 2x2 blocks tie (foreground), one is empty: the recursive level 2
    // value is set although only 6 of 16 pixels are
    let m = BinaryMask::from_fn(8, 8, |r, c| r < 4 && c < 4 && !(r >= 2 && c >= 2) && c % 2 == 0).unwrap();
    assert_eq!((0..4).flat_map(|r| (0..4).map(move |c| (r, c))).filter(|&(r, c)| m.get(r, c)).count(), 6);
    assert!(build_pyramid(&m).unwrap().level(2).get(0, 0));
}

/// Spatial incoherence, parent gating, nesting, tiling and fine expansion of
/// one mask against the recursive-majority oracle.
pub fn check_quadtree(m: &BinaryMask) {
    let levels = oracle_levels(m);
    let p = build_pyramid(m).unwrap();
    let qt = detect_one(m);
    let f = qt.frame(1);
    for l in 1..4 {
        // spatial incoherence is exactly non-constancy of the child block
        let spatial = grid_of(&spatial_incoherence(&p, l));
        assert_eq!((spatial.len(), spatial[0].len()), (levels[l].len(), levels[l][0].len()));
        for (r, row) in spatial.iter().enumerate() {
            for (c, &s) in row.iter().enumerate() {
                let direct = non_constant(&levels[l - 1], r, c);
                assert_eq!(s, direct);
                let parent = l == 3 || f.is_flagged(l + 1, r / 2, c / 2);
                assert_eq!(f.is_flagged(l, r, c), direct && parent, "level {l} cell ({r}, {c})");
            }
        }
        // nesting and tiling: children of a flagged cell are four cells of
        // the next level whose footprints partition the parent's
        if l >= 2 {
            for (r, c) in f.cells(l) {
                let side = 1usize << l;
                let mut covered = vec![vec![0u8; side]; side];
                for (cr, cc) in [(2 * r, 2 * c), (2 * r, 2 * c + 1), (2 * r + 1, 2 * c), (2 * r + 1, 2 * c + 1)] {
                    assert!(cr < levels[l - 1].len() && cc < levels[l - 1][0].len());
                    let cs = side / 2;
                    for y in cr * cs..(cr + 1) * cs {
                        for x in cc * cs..(cc + 1) * cs {
                            covered[y - r * side][x - c * side] += 1;
                        }
                    }
                }
                assert!(covered.iter().flatten().all(|&n| n == 1));
            }
            for (r, c) in f.cells(l - 1) {
                assert!(f.is_flagged(l, r / 2, c / 2));
            }
        }
    }
    // fine targets are the unpadded pixels of flagged L1 cells
    let fine = &expand_to_fine(&qt)[0];
    for r in 0..m.height() {
        for c in 0..m.width() {
            assert_eq!(fine.get(r, c), f.is_flagged(1, r / 2, c / 2));
        }
    }
}

#[test]
fn quadtree_structure_on_random_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        check_quadtree(&random_mask(&mut rng));
    }
}

/// A pattern whose every cell at every level has a non-constant child block:
/// a set parent gets three set children, an unset parent one.
fn multi_scale_checkerboard(side: usize) -> BinaryMask {
    let pick = |value: bool, i: usize| if value { i != 3 } else { i == 0 };
    BinaryMask::from_fn(side, side, |r, c| {
        let mut v = (r / 8 + c / 8) % 2 == 0;
        for l in (0..3).rev() {
            let (y, x) = ((r >> l) & 1, (c >> l) & 1);
            v = pick(v, 2 * y + x);
        }
        v
    })
    .unwrap()
}

#[test]
fn multi_scale_checkerboard_is_fully_incoherent() {
    let m = multi_scale_checkerboard(32);
    let qt = detect_incoherence(&[build_pyramid(&m).unwrap(), build_pyramid(&m).unwrap()], false).unwrap();
    assert_eq!(incoherence_fraction(&qt), 1.0);
    assert_eq!(qt.frame(1).cells(3).count(), 16);
}

#[test]
fn translation_by_a_root_shifts_every_level() {
    let blob = |dy: usize, dx: usize| {
        BinaryMask::from_fn(64, 64, |r, c| {
            let (y, x) = (r as f64 - 20.0 - dy as f64, c as f64 - 22.0 - dx as f64);
            y * y / 90.0 + x * x / 40.0 + 0.3 * (y * x / 60.0).sin() < 1.0
        })
        .unwrap()
    };
    let a = detect_one(&blob(0, 0));
    for (dy, dx) in [(8, 0), (0, 8), (8, 16)] {
        let b = detect_one(&blob(dy, dx));
        assert!(!a.is_empty());
        for l in 1..4 {
            let want: Vec<_> = a.frame(1).cells(l).map(|(r, c)| (r + (dy >> l), c + (dx >> l))).collect();
            assert_eq!(b.frame(1).cells(l).collect::<Vec<_>>(), want, "level {l}");
        }
    }
}

#[test]
fn sanity_bounds() {
    for m in [BinaryMask::new(40, 24).unwrap(), BinaryMask::full(40, 24).unwrap()] {
        assert!(detect_one(&m).is_empty());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = BinaryMask::from_fn(64, 64, |_, _| rng.gen_bool(0.5)).unwrap();
    let f = incoherence_fraction(&detect_one(&noise));
    assert!(f > 0.25, "noise flagged only {f}");
}
