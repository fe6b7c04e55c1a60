//! PNG overlays for auditing the metric and the detector: each instance's
//! mask, its boundary band at the resolved `d`, and outlines of its
//! incoherent cells.

use std::path::{Path, PathBuf};

use image::{ImageFormat, Rgb, RgbImage};
use rayon::prelude::*;
use vmt_core::dataset::{Tracklet, VideoDataset, VideoMeta};
use vmt_core::incoherence::{IncoherenceQuadtree, LEVELS};
use vmt_core::mask::{boundary_band, BandMode};
use vmt_core::metrics::MetricConfig;

use crate::error::{Error, Result};

const BACKGROUND: [u8; 3] = [24, 24, 24];
const PALETTE: [[u8; 3]; 6] = [[230, 25, 75], [60, 180, 75], [0, 130, 200], [245, 130, 48], [145, 30, 180], [70, 240, 240]];
/// Outline colours for levels 1, 2 and 3.
const CELL_COLOURS: [[u8; 3]; LEVELS - 1] = [[255, 255, 255], [255, 225, 25], [255, 120, 0]];

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayConfig {
    /// Output pixels per input pixel.
    pub scale: u32,
    pub metric: MetricConfig,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        Self { scale: 4, metric: MetricConfig::default() }
    }
}

fn blend(base: [u8; 3], top: [u8; 3], alpha: f32) -> [u8; 3] {
    let mix = |b: u8, t: u8| (b as f32 * (1.0 - alpha) + t as f32 * alpha).round() as u8;
    [mix(base[0], top[0]), mix(base[1], top[1]), mix(base[2], top[2])]
}

/// Frame `t` (1-based) of `video` with `instances` and their quadtrees drawn.
/// Mask pixels are tinted, band pixels counted by the metric (mask inside
/// the band) are drawn solid, band pixels outside the mask faintly.
pub fn render_frame(video: &VideoMeta, instances: &[(&Tracklet, &IncoherenceQuadtree)], t: usize, cfg: &OverlayConfig) -> RgbImage {
    let (w, h) = (video.width, video.height);
    let d = cfg.metric.resolve_d(w, h);
    let mut px = vec![BACKGROUND; w * h];
    for (i, (track, _)) in instances.iter().enumerate() {
        let Some(mask) = track.frame(t) else { continue };
        let colour = PALETTE[i % PALETTE.len()];
        let band = boundary_band(mask, d, BandMode::TwoSided).band;
        for r in 0..h {
            for c in 0..w {
                let (inside, near) = (mask.get(r, c), band.get(r, c));
                let alpha = match (inside, near) {
                    (true, true) => 1.0,
                    (true, false) => 0.45,
                    (false, true) if cfg.metric.band_mode == BandMode::TwoSided => 0.25,
                    _ => continue,
                };
                px[r * w + c] = blend(px[r * w + c], colour, alpha);
            }
        }
    }
    let s = cfg.scale.max(1);
    let mut img = RgbImage::from_fn(w as u32 * s, h as u32 * s, |x, y| Rgb(px[(y / s) as usize * w + (x / s) as usize]));
    for (_, qt) in instances {
        if t > qt.num_frames() {
            continue;
        }
        for l in (1..LEVELS).rev() {
            for (r, c) in qt.frame(t).cells(l) {
                outline(&mut img, (r << l) as u32 * s, (c << l) as u32 * s, (1u32 << l) * s, CELL_COLOURS[l - 1]);
            }
        }
    }
    img
}

/// Square outline with top-left `(y, x)` and side `side`, clipped to the image.
fn outline(img: &mut RgbImage, y: u32, x: u32, side: u32, colour: [u8; 3]) {
    let (w, h) = img.dimensions();
    let (y1, x1) = ((y + side).min(h), (x + side).min(w));
    for yy in y..y1 {
        for xx in x..x1 {
            if yy == y || xx == x || yy + 1 == y + side || xx + 1 == x + side {
                img.put_pixel(xx, yy, Rgb(colour));
            }
        }
    }
}

pub fn frame_file_name(video_id: u64, t: usize) -> String {
    format!("video{video_id}_frame{t:03}.png")
}

/// Writes one PNG per frame of every video in `ds` (or only `video`), and
/// returns the paths in (video, frame) order.
pub fn write_overlays(
    ds: &VideoDataset,
    quadtrees: &[IncoherenceQuadtree],
    cfg: &OverlayConfig,
    out_dir: &Path,
    video: Option<u64>,
) -> Result<Vec<PathBuf>> {
    if let Some(id) = video {
        ds.video(id).ok_or(vmt_core::Error::DanglingReference { kind: "video", id })?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let jobs: Vec<(&VideoMeta, usize)> =
        ds.videos.iter().filter(|v| video.is_none_or(|id| id == v.id)).flat_map(|v| (1..=v.length).map(move |t| (v, t))).collect();
    jobs.par_iter()
        .map(|&(v, t)| {
            let instances: Vec<(&Tracklet, &IncoherenceQuadtree)> =
                ds.annotations.iter().zip(quadtrees).filter(|(a, _)| a.video_id == v.id).collect();
            let path = out_dir.join(frame_file_name(v.id, t));
            render_frame(v, &instances, t, cfg)
                .save_with_format(&path, ImageFormat::Png)
                .map_err(|source| Error::Image { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use vmt_core::incoherence::{detect_incoherence, tracklet_pyramids};
    use vmt_core::mask::BinaryMask;

    fn one_square() -> (VideoMeta, Tracklet, IncoherenceQuadtree) {
        let video = VideoMeta { id: 1, width: 16, height: 16, length: 1, file_names: vec![] };
        let m = BinaryMask::from_fn(16, 16, |r, c| (5..11).contains(&r) && (3..13).contains(&c)).unwrap();
        let t = Tracklet { id: 1, video_id: 1, category_id: 1, score: 1.0, frames: vec![Some(m)] };
        let qt = detect_incoherence(&tracklet_pyramids(&t, &video).unwrap(), false).unwrap();
        (video, t, qt)
    }

    #[test]
    fn band_and_interior_are_distinguished() {
        let (video, t, qt) = one_square();
        let cfg = OverlayConfig { scale: 1, ..OverlayConfig::default() };
        let img = render_frame(&video, &[(&t, &IncoherenceQuadtree::from_frames(16, 16, vec![]))], 1, &cfg);
        let at = |r: u32, c: u32| img.get_pixel(c, r).0;
        assert_eq!(img.dimensions(), (16, 16));
        assert_eq!(at(0, 0), BACKGROUND);
        // d = 1 at 16x16: the mask's outer ring is solid
        assert_eq!(at(5, 3), PALETTE[0]);
        assert_eq!(at(8, 8), blend(BACKGROUND, PALETTE[0], 0.45));
        assert_eq!(at(4, 8), blend(BACKGROUND, PALETTE[0], 0.25));
        assert!(!qt.is_empty());
    }

    #[test]
    fn cells_are_outlined_at_scale() {
        let (video, t, qt) = one_square();
        let cfg = OverlayConfig { scale: 3, ..OverlayConfig::default() };
        let img = render_frame(&video, &[(&t, &qt)], 1, &cfg);
        assert_eq!(img.dimensions(), (48, 48));
        let (r, c) = qt.frame(1).cells(1).next().unwrap();
        let (y, x) = ((r * 2 * 3) as u32, (c * 2 * 3) as u32);
        assert_eq!(img.get_pixel(x, y).0, CELL_COLOURS[0]);
    }

    #[test]
    fn writes_one_png_per_frame() {
        let (video, t, qt) = one_square();
        let ds = VideoDataset { videos: vec![video], annotations: vec![t], categories: [(1, "x".to_string())].into() };
        let dir = tempfile::tempdir().unwrap();
        let paths = write_overlays(&ds, &[qt], &OverlayConfig::default(), dir.path(), None).unwrap();
        assert_eq!(paths, vec![dir.path().join("video1_frame001.png")]);
        let img = image::open(&paths[0]).unwrap();
        assert_eq!((img.width(), img.height()), (64, 64));
        assert!(write_overlays(&ds, &[], &OverlayConfig::default(), dir.path(), Some(7)).is_err());
    }
}
