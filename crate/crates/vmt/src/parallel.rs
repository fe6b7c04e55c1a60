//! Rayon fan-out over videos and tracklets. Every reduction runs in a fixed
//! order, so results do not depend on the number of threads.

use rayon::prelude::*;
use vmt_core::dataset::{Tracklet, VideoDataset};
use vmt_core::incoherence::{detect_incoherence, tracklet_pyramids, IncoherenceQuadtree};
use vmt_core::metrics::{accumulate, check_predictions, per_video, score_video, APReport, MetricConfig};
use vmt_core::refine::Refiner;
use vmt_core::selfcorrect::{correct_tracklet, iterate_with, ChangeStats, CorrectionConfig, LoopConfig, LoopHistory};

use crate::error::{Error, Result};

/// Runs `f` on a pool of `jobs` threads; 0 picks the number of cores.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// [`vmt_core::metrics::evaluate`] with videos scored in parallel.
pub fn evaluate(gt: &VideoDataset, preds: &[Tracklet], cfg: &MetricConfig) -> Result<APReport> {
    cfg.validate()?;
    check_predictions(gt, preds)?;
    let scores: Vec<_> = per_video(gt, preds).into_par_iter().map(|(v, g, p)| score_video(v, &g, &p, cfg)).collect();
    Ok(accumulate(gt, &scores, cfg))
}

/// [`vmt_core::selfcorrect::correction_pass`] with tracklets corrected in
/// parallel. Output order and statistics match the sequential pass.
pub fn correction_pass(ds: &VideoDataset, refiner: &dyn Refiner, cfg: &CorrectionConfig) -> Result<(VideoDataset, ChangeStats)> {
    let results: Vec<_> = ds
        .annotations
        .par_iter()
        .map(|t| {
            let video = ds.video(t.video_id).ok_or(vmt_core::Error::DanglingReference { kind: "video", id: t.video_id })?;
            correct_tracklet(t, video, refiner, cfg)
        })
        .collect::<vmt_core::Result<_>>()?;
    let mut stats = ChangeStats::default();
    let mut annotations = Vec::with_capacity(results.len());
    for (t, s) in results {
        stats.merge(&s);
        annotations.push(t);
    }
    Ok((VideoDataset { annotations, ..ds.clone() }, stats))
}

/// [`vmt_core::selfcorrect::iterate`] with parallel passes and scoring.
pub fn iterate<R: Refiner>(
    train_coarse: &VideoDataset,
    val_gt: &VideoDataset,
    build: impl FnMut(&VideoDataset, usize) -> vmt_core::Result<R>,
    cfg: &LoopConfig,
) -> Result<LoopHistory> {
    let ids: Vec<u64> = val_gt.videos.iter().map(|v| v.id).collect();
    if let Some(&id) = ids.iter().find(|id| train_coarse.video(**id).is_none()) {
        return Err(vmt_core::Error::DanglingReference { kind: "validation video", id }.into());
    }
    Ok(iterate_with(
        train_coarse,
        cfg,
        build,
        |ds, r| correction_pass(ds, r, &cfg.correction).map_err(into_core),
        |ds| evaluate(val_gt, &ds.restricted_to(&ids).annotations, &cfg.metric).map_err(into_core),
    )?)
}

/// The passes above only fail with kernel errors; unwrap them for the core loop.
fn into_core(e: Error) -> vmt_core::Error {
    match e {
        Error::Core(c) => c,
        other => vmt_core::Error::InvalidDataset(other.to_string()),
    }
}

/// Quadtree of every tracklet, in annotation order.
pub fn detect(ds: &VideoDataset, temporal: bool) -> Result<Vec<IncoherenceQuadtree>> {
    Ok(ds
        .annotations
        .par_iter()
        .map(|t| {
            let video = ds.video(t.video_id).ok_or(vmt_core::Error::DanglingReference { kind: "video", id: t.video_id })?;
            detect_incoherence(&tracklet_pyramids(t, video)?, temporal)
        })
        .collect::<vmt_core::Result<_>>()?)
}
