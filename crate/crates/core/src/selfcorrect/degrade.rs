//! Annotation degradation: polygon subsampling plus random morphology, or a
//! constant halo.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Tracklet, VideoDataset};
use crate::error::{Error, Result};
use crate::mask::{dilate, erode, BinaryMask};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DegradeMode {
    /// Trace, keep every `stride`-th vertex, re-rasterize, then one random
    /// dilation or erosion.
    #[default]
    Subsample,
    /// Dilate by `halo_radius`: a constant inflation around the true contour.
    Halo,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegradeParams {
    pub mode: DegradeMode,
    pub stride: usize,
    pub halo_radius: u32,
    /// Inclusive range of the random morphology radius.
    pub morph_radius: (u32, u32),
    /// Probability that the random operation is a dilation rather than an erosion.
    pub p_dilate: f64,
    pub seed: u64,
}

impl Default for DegradeParams {
    fn default() -> Self {
        Self { mode: DegradeMode::Subsample, stride: 6, halo_radius: 5, morph_radius: (0, 3), p_dilate: 0.5, seed: 0 }
    }
}

impl DegradeParams {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::InvalidConfig("polygon stride must be at least 1".to_string()));
        }
        if self.morph_radius.0 > self.morph_radius.1 {
            return Err(Error::InvalidConfig("morphology radius range is reversed".to_string()));
        }
        if !(0.0..=1.0).contains(&self.p_dilate) {
            return Err(Error::InvalidConfig("dilation probability must lie in [0, 1]".to_string()));
        }
        Ok(())
    }
}

/// A frame left unchanged because its polygon collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateFrame {
    pub video_id: u64,
    pub tracklet_id: u64,
    pub t: usize,
    pub vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegradeReport {
    pub degenerate: Vec<DegenerateFrame>,
}

const EAST: (i64, i64) = (1, 0);

fn turn_right((dx, dy): (i64, i64)) -> (i64, i64) {
    (-dy, dx)
}

fn turn_left((dx, dy): (i64, i64)) -> (i64, i64) {
    (dy, -dx)
}

/// Outer boundary of the 4-connected component containing `start` (its first
/// pixel in raster order), as the turning corners of its pixel-edge contour.
/// Corners are `(x, y)` grid points; the interior stays on the right.
fn trace_outer(inside: &impl Fn(i64, i64) -> bool, start: (usize, usize)) -> Vec<(i64, i64)> {
    let origin = (start.1 as i64, start.0 as i64);
    let (mut p, mut d) = (origin, EAST);
    let mut vertices = Vec::new();
    // Pixels (row, col) to the left and right of the edge leaving `p` along `d`.
    let ahead = |(x, y): (i64, i64), (dx, dy): (i64, i64)| match (dx, dy) {
        (1, 0) => (inside(y - 1, x), inside(y, x)),
        (0, 1) => (inside(y, x), inside(y, x - 1)),
        (-1, 0) => (inside(y, x - 1), inside(y - 1, x - 1)),
        _ => (inside(y - 1, x - 1), inside(y - 1, x)),
    };
    let mut moved = false;
    loop {
        let (l, r) = ahead(p, d);
        if r && !l {
            p = (p.0 + d.0, p.1 + d.1);
            moved = true;
        } else {
            d = if r { turn_left(d) } else { turn_right(d) };
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
        }
        if moved && p == origin && d == EAST {
            break;
        }
    }
    vertices
}

/// Fills pixels whose centres fall inside any polygon (even-odd per polygon).
fn rasterize(polygons: &[Vec<(i64, i64)>], width: usize, height: usize) -> BinaryMask {
    let mut out = BinaryMask::new(width, height).expect("frame dims are positive");
    let mut xs = Vec::new();
    for poly in polygons {
        for row in 0..height {
            let y = row as f64 + 0.5;
            xs.clear();
            for i in 0..poly.len() {
                let (x1, y1) = (poly[i].0 as f64, poly[i].1 as f64);
                let (x2, y2) = {
                    let q = poly[(i + 1) % poly.len()];
                    (q.0 as f64, q.1 as f64)
                };
                if (y1 <= y) != (y2 <= y) {
                    xs.push(x1 + (y - y1) * (x2 - x1) / (y2 - y1));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let lo = libm::ceil(pair[0] - 0.5).max(0.0) as usize;
                let hi = libm::ceil(pair[1] - 0.5).min(width as f64).max(0.0) as usize;
                for col in lo..hi {
                    out.set(row, col, true);
                }
            }
        }
    }
    out
}

/// Outer contours of every 4-connected component, ordered by first pixel.
pub fn trace_polygons(mask: &BinaryMask) -> Vec<Vec<(i64, i64)>> {
    let (w, h) = mask.dims();
    let mut label = vec![0u32; w * h];
    let mut polygons = Vec::new();
    let mut stack = Vec::new();
    for (r, c) in mask.ones() {
        if label[r * w + c] != 0 {
            continue;
        }
        let id = polygons.len() as u32 + 1;
        label[r * w + c] = id;
        stack.push((r, c));
        while let Some((y, x)) = stack.pop() {
            let nbrs = [(y.wrapping_sub(1), x), (y + 1, x), (y, x.wrapping_sub(1)), (y, x + 1)];
            for (ny, nx) in nbrs {
                if ny < h && nx < w && label[ny * w + nx] == 0 && mask.get(ny, nx) {
                    label[ny * w + nx] = id;
                    stack.push((ny, nx));
                }
            }
        }
        let inside = |row: i64, col: i64| {
            row >= 0 && col >= 0 && (row as usize) < h && (col as usize) < w && label[row as usize * w + col as usize] == id
        };
        polygons.push(trace_outer(&inside, (r, c)));
    }
    polygons
}

/// Keeps every `stride`-th contour vertex of every component and fills the
/// result. Fails when a subsampled polygon has fewer than 3 vertices.
pub fn subsample_polygons(mask: &BinaryMask, stride: usize) -> Result<BinaryMask> {
    let polygons: Vec<Vec<(i64, i64)>> = trace_polygons(mask).into_iter().map(|p| p.into_iter().step_by(stride).collect()).collect();
    if let Some(p) = polygons.iter().find(|p| p.len() < 3) {
        return Err(Error::DegenerateMask { vertices: p.len() });
    }
    Ok(rasterize(&polygons, mask.width(), mask.height()))
}

fn degrade_frame(mask: &BinaryMask, params: &DegradeParams, rng: &mut ChaCha8Rng) -> Result<BinaryMask> {
    match params.mode {
        DegradeMode::Halo => Ok(dilate(mask, params.halo_radius)),
        DegradeMode::Subsample => {
            let base = if params.stride == 1 { mask.clone() } else { subsample_polygons(mask, params.stride)? };
            let (lo, hi) = params.morph_radius;
            let radius = rng.gen_range(lo..=hi);
            let grow = rng.gen_bool(params.p_dilate);
            Ok(if grow { dilate(&base, radius) } else { erode(&base, radius) })
        }
    }
}

/// Degrades every present frame of `tracklet`. Each frame draws from its own
/// stream keyed by `(seed, video, tracklet, t)`. Degenerate frames are kept
/// as they were and listed in the report.
pub fn degrade(tracklet: &Tracklet, params: &DegradeParams) -> Result<(Tracklet, DegradeReport)> {
    params.validate()?;
    let mut report = DegradeReport::default();
    let mut out = tracklet.clone();
    for (i, frame) in out.frames.iter_mut().enumerate() {
        let Some(mask) = frame.as_mut() else { continue };
        let t = i + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(&[params.seed, tracklet.video_id, tracklet.id, t as u64]));
        match degrade_frame(mask, params, &mut rng) {
            Ok(m) => *mask = m,
            Err(Error::DegenerateMask { vertices }) => {
                report.degenerate.push(DegenerateFrame { video_id: tracklet.video_id, tracklet_id: tracklet.id, t, vertices })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, report))
}

/// [`degrade`] over every tracklet; videos and categories are kept.
pub fn degrade_dataset(ds: &VideoDataset, params: &DegradeParams) -> Result<(VideoDataset, DegradeReport)> {
    let mut report = DegradeReport::default();
    let mut annotations = Vec::with_capacity(ds.annotations.len());
    for t in &ds.annotations {
        let (d, r) = degrade(t, params)?;
        annotations.push(d);
        report.degenerate.extend(r.degenerate);
    }
    Ok((VideoDataset { annotations, ..ds.clone() }, report))
}
