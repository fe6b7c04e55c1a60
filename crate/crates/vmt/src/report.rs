//! Rendering of evaluation reports and loop histories.

use serde_json::{json, Value};
use vmt_core::mask::BandMode;
use vmt_core::metrics::{APReport, FamilyReport};
use vmt_core::selfcorrect::{ClipStudyRow, LoopHistory};

use crate::error::Result;
use crate::json::{self, Style};

pub const TABLE_COLUMNS: [&str; 6] = ["AP^B", "AP^B_75", "AR^B_1", "AP^M", "AP^M_75", "AR^M_1"];

/// A fraction rendered as a percentage with one decimal; `-` when undefined.
pub fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.1}", 100.0 * v))
}

pub fn band_mode_name(mode: BandMode) -> &'static str {
    match mode {
        BandMode::TwoSided => "two-sided",
        BandMode::InnerOnly => "inner-only",
    }
}

fn family_cells(f: &FamilyReport) -> [String; 3] {
    [percent(Some(f.ap)), percent(f.ap75), percent(f.ar_at(1))]
}

/// Right-aligned columns separated by two spaces.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> =
        (0..header.len()).map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0)).collect();
    let line =
        |cells: &mut dyn Iterator<Item = &str>| cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ") + "\n";
    let mut out = line(&mut header.iter().copied());
    for r in rows {
        out += &line(&mut r.iter().map(String::as_str));
    }
    out
}

/// The six headline columns, values x100 with one decimal, and the band width.
pub fn report_table(r: &APReport) -> String {
    let mut cells: Vec<String> = family_cells(&r.boundary).into();
    cells.extend(family_cells(&r.mask));
    let mut out = render_table(&TABLE_COLUMNS, &[cells]);
    let lo = r.resolved_d.iter().map(|v| v.d).min();
    let hi = r.resolved_d.iter().map(|v| v.d).max();
    let mode = band_mode_name(r.band_mode);
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo == hi => out += &format!("boundary d = {lo} px, band {mode}\n"),
        (Some(lo), Some(hi)) => out += &format!("boundary d = {lo}..{hi} px, band {mode}\n"),
        _ => {}
    }
    for n in &r.notes {
        out += &format!("note: {n}\n");
    }
    out
}

pub fn report_json(r: &APReport) -> Result<String> {
    json::to_string(r, Style::Pretty)
}

/// One entry per iteration, iteration 0 being the annotations before correction.
pub fn history_value(h: &LoopHistory) -> Value {
    let mut rows = vec![json!({
        "iteration": 0,
        "boundary_ap": h.initial.boundary.ap,
        "mask_ap": h.initial.mask.ap,
        "changed_fraction": 0.0,
    })];
    for it in &h.iterations {
        rows.push(json!({
            "iteration": it.iteration,
            "boundary_ap": it.report.boundary.ap,
            "mask_ap": it.report.mask.ap,
            "changed_fraction": it.stats.fraction(),
        }));
    }
    json!({ "iterations": rows, "saturated": h.saturated })
}

pub fn history_table(h: &LoopHistory) -> String {
    let v = history_value(h);
    let rows: Vec<Vec<String>> = v["iterations"]
        .as_array()
        .expect("built above")
        .iter()
        .map(|r| {
            vec![
                r["iteration"].to_string(),
                percent(r["boundary_ap"].as_f64()),
                percent(r["mask_ap"].as_f64()),
                format!("{:.4}", r["changed_fraction"].as_f64().unwrap_or(0.0)),
            ]
        })
        .collect();
    let mut out = render_table(&["iteration", "AP^B", "AP^M", "changed"], &rows);
    out += if h.saturated { "saturated\n" } else { "stopped at the iteration cap\n" };
    out
}

fn clip_label(len: Option<usize>) -> String {
    len.map_or_else(|| "all".to_string(), |n| n.to_string())
}

pub fn clip_study_value(rows: &[ClipStudyRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "clip_len": clip_label(r.clip_len),
                    "boundary_ap": r.boundary_ap,
                    "mask_ap": r.mask_ap,
                    "changed_fraction": r.changed_fraction,
                })
            })
            .collect(),
    )
}

pub fn clip_study_table(rows: &[ClipStudyRow]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![clip_label(r.clip_len), percent(Some(r.boundary_ap)), percent(Some(r.mask_ap)), format!("{:.4}", r.changed_fraction)])
        .collect();
    render_table(&["clip", "AP^B", "AP^M", "changed"], &cells)
}
