//! JSON dumps of quadtrees, detection statistics and attention maps.

use serde_json::{json, Value};
use vmt_core::dataset::VideoDataset;
use vmt_core::incoherence::{incoherence_fraction, video_incoherence_fraction, IncoherenceQuadtree, LEVELS};
use vmt_core::refine::nn::Mat;
use vmt_core::refine::{AttentionCapture, TokenSequence};

/// Incoherence share below which a video counts as sparse.
pub const SPARSE_FRACTION: f64 = 0.10;

fn cells_value(qt: &IncoherenceQuadtree, t: usize) -> Value {
    let f = qt.frame(t);
    let levels: serde_json::Map<String, Value> =
        (1..LEVELS).map(|l| (l.to_string(), json!(f.cells(l).map(|(r, c)| [r, c]).collect::<Vec<_>>()))).collect();
    json!({ "t": t, "levels": levels })
}

/// Per-video fractions, in `ds.videos` order. `quadtrees` follows `ds.annotations`.
pub fn video_fractions(ds: &VideoDataset, quadtrees: &[IncoherenceQuadtree]) -> Vec<(u64, f64)> {
    ds.videos
        .iter()
        .map(|v| {
            let mine: Vec<IncoherenceQuadtree> =
                ds.annotations.iter().zip(quadtrees).filter(|(t, _)| t.video_id == v.id).map(|(_, q)| q.clone()).collect();
            (v.id, video_incoherence_fraction(&mine))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionSummary {
    pub videos: usize,
    pub median: f64,
    pub max: f64,
    /// Share of videos whose fraction is below [`SPARSE_FRACTION`].
    pub sparse_share: f64,
}

pub fn summarize(fractions: &[f64]) -> FractionSummary {
    let mut s = fractions.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => s[n / 2],
        _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    };
    FractionSummary {
        videos: n,
        median,
        max: s.last().copied().unwrap_or(0.0),
        sparse_share: if n == 0 { 0.0 } else { s.iter().filter(|&&f| f < SPARSE_FRACTION).count() as f64 / n as f64 },
    }
}

pub fn summary_value(s: &FractionSummary) -> Value {
    json!({
        "videos": s.videos,
        "median_fraction": s.median,
        "max_fraction": s.max,
        "sparse_threshold": SPARSE_FRACTION,
        "sparse_share": s.sparse_share,
    })
}

/// Every flagged cell of every tracklet, grouped by video, with fractions.
pub fn quadtree_value(ds: &VideoDataset, quadtrees: &[IncoherenceQuadtree], temporal: bool) -> Value {
    let fractions = video_fractions(ds, quadtrees);
    let videos: Vec<Value> = ds
        .videos
        .iter()
        .zip(&fractions)
        .map(|(v, (_, fraction))| {
            let instances: Vec<Value> = ds
                .annotations
                .iter()
                .zip(quadtrees)
                .filter(|(t, _)| t.video_id == v.id)
                .map(|(t, qt)| {
                    json!({
                        "instance_id": t.id,
                        "category_id": t.category_id,
                        "fraction": incoherence_fraction(qt),
                        "frames": (1..=qt.num_frames()).map(|f| cells_value(qt, f)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({ "video_id": v.id, "fraction": fraction, "instances": instances })
        })
        .collect();
    let summary = summarize(&fractions.iter().map(|f| f.1).collect::<Vec<_>>());
    json!({ "temporal": temporal, "videos": videos, "summary": summary_value(&summary) })
}

/// Head-averaged attention matrix of one layer.
fn mean_over_heads(maps: &[Mat]) -> Mat {
    let mut out = Mat::zeros(maps[0].rows, maps[0].cols);
    for m in maps {
        for (o, v) in out.data.iter_mut().zip(&m.data) {
            *o += v / maps.len() as f64;
        }
    }
    out
}

/// The `k` largest entries of a row as `[column, weight]`, ties by column.
fn top_k(row: &[f64], k: usize) -> Vec<Value> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|j| json!([j, row[j]])).collect()
}

/// Per layer and query node, the `k` most attended nodes (NAL) and the
/// weight on each instance query (IGL), both averaged over heads.
pub fn attention_value(seq: &TokenSequence, cap: &AttentionCapture, probabilities: &[f64], k: usize) -> Value {
    let tokens: Vec<Value> = seq
        .tokens
        .iter()
        .zip(probabilities)
        .map(|(t, p)| json!({ "t": t.t, "level": t.level, "row": t.row, "col": t.col, "foreground": p }))
        .collect();
    let layers: Vec<Value> = cap
        .nal
        .iter()
        .zip(&cap.igl)
        .enumerate()
        .map(|(i, (nal, igl))| {
            let (nal, igl) = (mean_over_heads(nal), mean_over_heads(igl));
            let nodes: Vec<Value> =
                (0..nal.rows).map(|q| json!({ "query": q, "top": top_k(nal.row(q), k), "instance_weights": igl.row(q) })).collect();
            json!({ "layer": i + 1, "nodes": nodes })
        })
        .collect();
    json!({
        "window": { "start": seq.window.start, "len": seq.window.len },
        "tokens": tokens,
        "layers": layers,
    })
}
