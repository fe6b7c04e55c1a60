//! Annotation degradation, correction passes and the iterative
//! self-correction loop, plus the synthetic videos that exercise them.

mod degrade;
mod harness;
mod iterate;
mod pass;
mod synth;

pub use degrade::{
    degrade, degrade_dataset, subsample_polygons, trace_polygons, DegenerateFrame, DegradeMode, DegradeParams, DegradeReport,
};
pub use harness::{clip_length_study, ClipStudyConfig, ClipStudyRow, NoisyOracle, TemporalVote};
pub use iterate::{iterate, iterate_with, IterationRecord, LoopConfig, LoopHistory};
pub use pass::{correct_tracklet, correction_pass, correction_region, ChangeStats, CorrectionConfig, RegionSource};
pub use synth::{synthesize_dataset, SynthConfig, CATEGORIES, MAX_AREA, MIN_AREA};
