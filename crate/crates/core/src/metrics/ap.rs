//! COCO-style greedy matching and 101-point interpolated AP / AR.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::report::{CategoryReport, FamilyReport, MatchDiagnostics, MatchPair, RecallAt};
use super::MetricConfig;

/// Number of recall sample points used for interpolated precision.
pub const RECALL_POINTS: usize = 101;

/// IoUs between the predictions and ground truths of one category in one
/// video. Predictions are kept sorted by descending score, ties by id.
#[derive(Debug, Clone, PartialEq)]
pub struct IouMatrix {
    pub gt_ids: Vec<u64>,
    pub pred_ids: Vec<u64>,
    pub scores: Vec<f64>,
    /// Row-major, `pred x gt`.
    pub ious: Vec<f64>,
}

impl IouMatrix {
    /// Builds the matrix, sorting predictions into matching order.
    pub fn new(gt_ids: Vec<u64>, preds: Vec<(u64, f64)>, mut iou: impl FnMut(usize, usize) -> f64) -> Self {
        let mut order: Vec<usize> = (0..preds.len()).collect();
        order.sort_by(|&a, &b| preds[b].1.total_cmp(&preds[a].1).then(preds[a].0.cmp(&preds[b].0)));
        let mut ious = Vec::with_capacity(order.len() * gt_ids.len());
        for &p in &order {
            for g in 0..gt_ids.len() {
                ious.push(iou(p, g));
            }
        }
        Self { pred_ids: order.iter().map(|&p| preds[p].0).collect(), scores: order.iter().map(|&p| preds[p].1).collect(), gt_ids, ious }
    }

    #[inline]
    pub fn iou(&self, pred: usize, gt: usize) -> f64 {
        self.ious[pred * self.gt_ids.len() + gt]
    }
}

/// Greedy matching at one threshold: each prediction, in score order, takes
/// the unmatched ground truth with the highest IoU `>= threshold` (lowest
/// index on ties). Returns the matched gt index per prediction.
pub fn greedy_match(m: &IouMatrix, threshold: f64, max_dets: usize) -> Vec<Option<usize>> {
    let n = m.pred_ids.len().min(max_dets);
    let mut taken = vec![false; m.gt_ids.len()];
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for (g, &used) in taken.iter().enumerate() {
            if used {
                continue;
            }
            let iou = m.iou(p, g);
            if iou >= threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
        }
        out.push(best.map(|(g, _)| g));
    }
    out
}

/// 101-point interpolated AP from detections `(score, is_tp)` already in the
/// global evaluation order. `None` when there is no ground truth.
pub fn interpolated_ap(dets: &[(f64, bool)], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    // stable: equal scores keep video order
    order.sort_by(|&a, &b| dets[b].0.total_cmp(&dets[a].0));
    let mut recall = Vec::with_capacity(dets.len());
    let mut precision = Vec::with_capacity(dets.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &i in &order {
        if dets[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / num_gt as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let mut sum = 0.0;
    for k in 0..RECALL_POINTS {
        let r = recall_point(k);
        let idx = recall.partition_point(|&x| x < r);
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}

/// `k`-th recall sample, identical to `np.linspace(0, 1, 101)`.
fn recall_point(k: usize) -> f64 {
    if k == RECALL_POINTS - 1 {
        1.0
    } else {
        k as f64 * 0.01
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Scores one metric family from per-(video, category) IoU matrices.
///
/// `cells` must be in the reduction order (video id, then category id).
pub fn score_family(categories: &[u64], cells: &[(u64, u64, &IouMatrix)], cfg: &MetricConfig) -> FamilyReport {
    let nt = cfg.thresholds.len();
    let max_all = cfg.max_dets.iter().copied().chain([cfg.max_dets_ap]).max().unwrap_or(0);

    let mut by_cat: BTreeMap<u64, Vec<(u64, &IouMatrix)>> = categories.iter().map(|&c| (c, Vec::new())).collect();
    for &(video, cat, m) in cells {
        if let Some(v) = by_cat.get_mut(&cat) {
            v.push((video, m));
        }
    }

    let mut per_category = Vec::new();
    let mut diagnostics = Vec::new();
    for (&cat, cells) in &by_cat {
        let num_gt: usize = cells.iter().map(|(_, m)| m.gt_ids.len()).sum();
        let mut ap = Vec::with_capacity(nt);
        let mut recall = vec![Vec::with_capacity(nt); cfg.max_dets.len()];
        for (ti, &thr) in cfg.thresholds.iter().enumerate() {
            let matches: Vec<_> = cells.iter().map(|(_, m)| greedy_match(m, thr, max_all)).collect();
            let dets: Vec<(f64, bool)> = cells
                .iter()
                .zip(&matches)
                .flat_map(|((_, m), mt)| m.scores.iter().zip(mt).take(cfg.max_dets_ap).map(|(&s, g)| (s, g.is_some())))
                .collect();
            ap.push(interpolated_ap(&dets, num_gt));
            for (ki, &k) in cfg.max_dets.iter().enumerate() {
                let tp: usize = matches.iter().map(|mt| mt.iter().take(k).filter(|g| g.is_some()).count()).sum();
                recall[ki].push((num_gt > 0).then(|| tp as f64 / num_gt as f64));
            }
            if ti == 0 {
                for ((video, m), mt) in cells.iter().zip(&matches) {
                    diagnostics.push(diagnose(*video, cat, m, mt));
                }
            }
        }
        per_category.push(CategoryReport { category_id: cat, num_gt, ap, recall });
    }

    let at = |t: f64| cfg.thresholds.iter().position(|&x| libm::fabs(x - t) < 1e-9);
    let ap_at = |ti: Option<usize>| ti.and_then(|ti| mean(per_category.iter().map(|c| c.ap[ti])));
    let ap = mean(per_category.iter().flat_map(|c| c.ap.iter().copied()));
    let ar = cfg
        .max_dets
        .iter()
        .enumerate()
        .map(|(ki, &k)| RecallAt { k, value: mean(per_category.iter().flat_map(|c| c.recall[ki].iter().copied())).unwrap_or(0.0) })
        .collect();
    diagnostics.sort_by_key(|d: &MatchDiagnostics| (d.video_id, d.category_id));
    FamilyReport {
        defined: ap.is_some(),
        ap: ap.unwrap_or(0.0),
        ap50: ap_at(at(0.5)),
        ap75: ap_at(at(0.75)),
        ar,
        per_category,
        diagnostics,
    }
}

fn diagnose(video_id: u64, category_id: u64, m: &IouMatrix, matched: &[Option<usize>]) -> MatchDiagnostics {
    let mut pairs = Vec::new();
    let mut unmatched_pred = Vec::new();
    let mut gt_used = vec![false; m.gt_ids.len()];
    for (p, g) in matched.iter().enumerate() {
        match g {
            Some(g) => {
                gt_used[*g] = true;
                pairs.push(MatchPair { gt_id: m.gt_ids[*g], pred_id: m.pred_ids[p], iou: m.iou(p, *g) });
            }
            None => unmatched_pred.push(m.pred_ids[p]),
        }
    }
    unmatched_pred.extend(m.pred_ids.iter().skip(matched.len()));
    let unmatched_gt = m.gt_ids.iter().zip(&gt_used).filter(|(_, &u)| !u).map(|(&g, _)| g).collect();
    MatchDiagnostics { video_id, category_id, pairs, unmatched_gt, unmatched_pred }
}
