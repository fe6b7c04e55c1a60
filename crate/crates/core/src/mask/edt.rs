//! Exact squared Euclidean distance transform (Meijster, Roerdink & Hesselink).
//!
//! Two separable passes over integer arithmetic, so results are bit-exact on
//! every platform.

use alloc::vec;
use alloc::vec::Vec;

use super::BinaryMask;

/// Marker for pixels with no feature pixel anywhere in the image.
pub const UNREACHABLE: u64 = u64::MAX;

/// For every pixel, the squared Euclidean distance to the nearest set pixel
/// of `features`, row-major. All entries are [`UNREACHABLE`] when `features`
/// is empty.
pub fn squared_distance_transform(features: &BinaryMask) -> Vec<u64> {
    let (w, h) = features.dims();
    if features.is_empty() {
        return vec![UNREACHABLE; w * h];
    }
    let inf = (w + h) as i64;

    // Column pass: vertical distance to the nearest feature in the same column.
    let mut g = vec![0i64; w * h];
    for x in 0..w {
        g[x] = if features.get(0, x) { 0 } else { inf };
        for y in 1..h {
            g[y * w + x] = if features.get(y, x) { 0 } else { (g[(y - 1) * w + x] + 1).min(inf) };
        }
        for y in (0..h - 1).rev() {
            let below = g[(y + 1) * w + x];
            if below < g[y * w + x] {
                g[y * w + x] = below + 1;
            }
        }
    }

    // Row pass: lower envelope of parabolas.
    let mut out = vec![UNREACHABLE; w * h];
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + row[i].pow(2);
        let sep = |i: usize, u: usize| {
            let (i64_, u64_) = (i as i64, u as i64);
            (u64_ * u64_ - i64_ * i64_ + row[u].pow(2) - row[i].pow(2)) / (2 * (u64_ - i64_))
        };
        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let ww = 1 + sep(s[q as usize], u);
                if ww < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = ww;
                }
            }
        }
        for u in (0..w).rev() {
            let d = f(u as i64, s[q as usize]);
            out[y * w + u] = if d >= inf * inf { UNREACHABLE } else { d as u64 };
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    out
}
