use alloc::vec::Vec;

use super::pass::{correction_pass, ChangeStats, CorrectionConfig};
use crate::dataset::VideoDataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, APReport, MetricConfig};
use crate::refine::Refiner;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub max_iters: usize,
    /// Stop once consecutive AP^B values (fractions) differ by less than this.
    pub epsilon: f64,
    pub correction: CorrectionConfig,
    pub metric: MetricConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self { max_iters: 4, epsilon: 0.001, correction: CorrectionConfig::default(), metric: MetricConfig::default() }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("at least one iteration is required".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("saturation epsilon must be positive".into()));
        }
        self.correction.validate()?;
        self.metric.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub dataset: VideoDataset,
    pub report: APReport,
    pub stats: ChangeStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopHistory {
    /// Scores of the annotations before any correction.
    pub initial: APReport,
    pub iterations: Vec<IterationRecord>,
    /// True when the loop stopped on saturation rather than the iteration cap.
    pub saturated: bool,
}

impl LoopHistory {
    /// AP^B before correction followed by the value after each iteration.
    pub fn boundary_ap(&self) -> Vec<f64> {
        core::iter::once(self.initial.boundary.ap).chain(self.iterations.iter().map(|r| r.report.boundary.ap)).collect()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.iterations.last()
    }
}

/// The loop with pluggable steps. `build` derives a refiner from the current
/// annotations and the 1-based iteration, `pass` runs one correction and
/// `score` evaluates a set of annotations.
pub fn iterate_with<R>(
    train_coarse: &VideoDataset,
    cfg: &LoopConfig,
    mut build: impl FnMut(&VideoDataset, usize) -> Result<R>,
    mut pass: impl FnMut(&VideoDataset, &R) -> Result<(VideoDataset, ChangeStats)>,
    mut score: impl FnMut(&VideoDataset) -> Result<APReport>,
) -> Result<LoopHistory> {
    cfg.validate()?;
    let initial = score(train_coarse)?;
    let mut previous = initial.boundary.ap;
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut saturated = false;
    for iteration in 1..=cfg.max_iters {
        let current = iterations.last().map_or(train_coarse, |r| &r.dataset);
        let refiner = build(current, iteration)?;
        let (dataset, stats) = pass(current, &refiner)?;
        let report = score(&dataset)?;
        let ap = report.boundary.ap;
        iterations.push(IterationRecord { iteration, dataset, report, stats });
        if libm::fabs(ap - previous) < cfg.epsilon {
            saturated = true;
            break;
        }
        previous = ap;
    }
    Ok(LoopHistory { initial, iterations, saturated })
}

/// Alternates refiner construction and correction passes over
/// `train_coarse`, scoring the current annotations of the videos in
/// `val_gt` against it after each pass.
pub fn iterate<R: Refiner>(
    train_coarse: &VideoDataset,
    val_gt: &VideoDataset,
    build: impl FnMut(&VideoDataset, usize) -> Result<R>,
    cfg: &LoopConfig,
) -> Result<LoopHistory> {
    let ids: Vec<u64> = val_gt.videos.iter().map(|v| v.id).collect();
    if let Some(v) = ids.iter().find(|id| train_coarse.video(**id).is_none()) {
        return Err(Error::DanglingReference { kind: "validation video", id: *v });
    }
    iterate_with(
        train_coarse,
        cfg,
        build,
        |ds, r| correction_pass(ds, r, &cfg.correction),
        |ds| evaluate(val_gt, &ds.restricted_to(&ids).annotations, &cfg.metric),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::{ConstantRefiner, OracleRefiner};
    use crate::selfcorrect::{degrade_dataset, synthesize_dataset, DegradeParams, SynthConfig};

    fn suite() -> (VideoDataset, VideoDataset) {
        let gt = synthesize_dataset(&SynthConfig { videos: 4, width: 64, height: 64, seed: 1, ..SynthConfig::default() }).unwrap();
        let (coarse, _) = degrade_dataset(&gt, &DegradeParams { seed: 1, ..DegradeParams::default() }).unwrap();
        (gt, coarse)
    }

    #[test]
    fn oracle_improves_then_saturates() {
        let (gt, coarse) = suite();
        let h = iterate(&coarse, &gt, |_, _| Ok(OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 }), &LoopConfig::default()).unwrap();
        let ap = h.boundary_ap();
        assert!(ap[1] > ap[0]);
        assert!(h.iterations.len() <= 4);
        assert_eq!(ap.len(), h.iterations.len() + 1);
        assert_eq!(h.iterations.iter().map(|r| r.iteration).collect::<Vec<_>>(), (1..=h.iterations.len()).collect::<Vec<_>>());
    }

    #[test]
    fn cap_is_respected_without_saturation() {
        let (gt, coarse) = suite();
        let cfg = LoopConfig { max_iters: 3, ..LoopConfig::default() };
        // scores that keep moving never saturate
        let h = iterate_with(&coarse, &cfg, |_, i| Ok(i), |ds, _| Ok((ds.clone(), ChangeStats::default())), {
            let mut k = 0.0;
            move |ds| {
                let mut r = evaluate(&gt, &ds.annotations, &MetricConfig::default())?;
                k += 0.1;
                r.boundary.ap = k;
                Ok(r)
            }
        })
        .unwrap();
        assert_eq!(h.iterations.len(), 3);
        assert!(!h.saturated);
    }

    #[test]
    fn ground_truth_saturates_at_once() {
        let (gt, _) = suite();
        // a confident all-foreground refiner damages perfect masks, the oracle does not
        let h = iterate(&gt, &gt, |_, _| Ok(ConstantRefiner(1.0)), &LoopConfig::default()).unwrap();
        assert!(h.boundary_ap()[1] < 1.0);
        let h = iterate(&gt, &gt, |_, _| Ok(OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 }), &LoopConfig::default()).unwrap();
        assert_eq!(h.boundary_ap(), [1.0, 1.0]);
        assert!(h.saturated);
        assert_eq!(h.last().unwrap().dataset, gt);
    }

    #[test]
    fn builder_sees_current_annotations() {
        let (gt, coarse) = suite();
        let mut seen = Vec::new();
        iterate(
            &coarse,
            &gt,
            |ds, i| {
                seen.push((i, ds == &coarse));
                Ok(OracleRefiner { gt: &gt, flip_prob: 0.0, seed: 0 })
            },
            &LoopConfig { max_iters: 2, ..LoopConfig::default() },
        )
        .unwrap();
        assert_eq!(seen, [(1, true), (2, false)]);
    }

    #[test]
    fn validation_videos_must_exist() {
        let (gt, coarse) = suite();
        let train = coarse.restricted_to(&[1, 2]);
        assert!(matches!(
            iterate(&train, &gt, |_, _| Ok(ConstantRefiner(0.5)), &LoopConfig::default()),
            Err(Error::DanglingReference { .. })
        ));
        assert!(iterate(&coarse, &gt, |_, _| Ok(ConstantRefiner(0.5)), &LoopConfig { max_iters: 0, ..LoopConfig::default() }).is_err());
    }
}
