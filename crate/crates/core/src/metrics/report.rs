use alloc::string::String;
use alloc::vec::Vec;

use crate::mask::BandMode;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatchPair {
    pub gt_id: u64,
    pub pred_id: u64,
    pub iou: f64,
}

/// Matching outcome of one (video, category) cell at the lowest threshold.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatchDiagnostics {
    pub video_id: u64,
    pub category_id: u64,
    pub pairs: Vec<MatchPair>,
    pub unmatched_gt: Vec<u64>,
    pub unmatched_pred: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RecallAt {
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CategoryReport {
    pub category_id: u64,
    pub num_gt: usize,
    /// Per threshold; `None` when the category has no ground truth.
    pub ap: Vec<Option<f64>>,
    /// `recall[k][threshold]` for each configured AR@k.
    pub recall: Vec<Vec<Option<f64>>>,
}

/// AP / AR for one IoU family. All values lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FamilyReport {
    /// False when no category had ground truth; `ap` is then reported as 0.
    pub defined: bool,
    pub ap: f64,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ar: Vec<RecallAt>,
    pub per_category: Vec<CategoryReport>,
    pub diagnostics: Vec<MatchDiagnostics>,
}

impl FamilyReport {
    pub fn ar_at(&self, k: usize) -> Option<f64> {
        self.ar.iter().find(|r| r.k == k).map(|r| r.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VideoBand {
    pub video_id: u64,
    pub d: u32,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct APReport {
    pub band_mode: BandMode,
    pub thresholds: Vec<f64>,
    /// Boundary width actually used for each video.
    pub resolved_d: Vec<VideoBand>,
    /// Tube mask AP family.
    pub mask: FamilyReport,
    /// Tube-boundary AP family.
    pub boundary: FamilyReport,
    pub notes: Vec<String>,
}
