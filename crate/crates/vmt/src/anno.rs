//! YTVIS-style annotation and result files.
//!
//! Documents carry `videos[].{id,width,height,length,file_names}`,
//! `annotations[].{id,video_id,category_id,segmentations,score?}` and
//! `categories[].{id,name}`. A segmentation is `null` (instance absent) or
//! `{"size": [h, w], "counts": ...}` with counts given either as an integer
//! list or as a COCO compressed string. Unknown fields are ignored. Frame
//! `t` of a video is entry `t - 1` of `segmentations`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde_json::{json, Map, Value};
use vmt_core::dataset::{Tracklet, VideoDataset, VideoMeta};
use vmt_core::mask::{rle_decode, rle_encode, BinaryMask, Rle};
use vmt_core::Error as CoreError;

use crate::error::{Error, Result};
use crate::json::{self, Style};

/// A JSON value and the path that reached it.
#[derive(Clone, Copy)]
struct Node<'a> {
    value: &'a Value,
    path: &'a str,
}

struct Owned<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> Owned<'a> {
    fn node(&self) -> Node<'_> {
        Node { value: self.value, path: &self.path }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

impl<'a> Node<'a> {
    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::schema(self.path, format!("expected {expected}, found {}", kind(self.value))))
    }

    fn object(&self) -> Result<&'a Map<String, Value>> {
        self.value.as_object().map_or_else(|| self.fail("an object"), Ok)
    }

    /// A present, non-null field.
    fn field(&self, key: &str) -> Result<Owned<'a>> {
        match self.object()?.get(key) {
            Some(Value::Null) | None => Err(Error::schema(self.path, format!("missing field `{key}`"))),
            Some(value) => Ok(Owned { value, path: format!("{}.{key}", self.path) }),
        }
    }

    fn optional(&self, key: &str) -> Result<Option<Owned<'a>>> {
        Ok(match self.object()?.get(key) {
            Some(Value::Null) | None => None,
            Some(value) => Some(Owned { value, path: format!("{}.{key}", self.path) }),
        })
    }

    fn items(&self) -> Result<Vec<Owned<'a>>> {
        let items = self.value.as_array().map_or_else(|| self.fail("an array"), Ok)?;
        Ok(items.iter().enumerate().map(|(i, value)| Owned { value, path: format!("{}[{i}]", self.path) }).collect())
    }

    fn u64(&self) -> Result<u64> {
        self.value.as_u64().map_or_else(|| self.fail("a non-negative integer"), Ok)
    }

    fn positive(&self) -> Result<usize> {
        match self.value.as_u64() {
            Some(n) if n > 0 => usize::try_from(n).map_err(|_| Error::schema(self.path, "value out of range")),
            _ => self.fail("a positive integer"),
        }
    }

    fn str(&self) -> Result<&'a str> {
        self.value.as_str().map_or_else(|| self.fail("a string"), Ok)
    }

    fn f64(&self) -> Result<f64> {
        self.value.as_f64().map_or_else(|| self.fail("a number"), Ok)
    }

    fn at<T>(&self, r: vmt_core::Result<T>) -> Result<T> {
        r.map_err(|source| Error::At { path: self.path.to_string(), source })
    }
}

fn parse_categories(root: Node<'_>) -> Result<BTreeMap<u64, String>> {
    let mut out = BTreeMap::new();
    for c in root.field("categories")?.node().items()? {
        let c = c.node();
        let id = c.field("id")?.node().u64()?;
        let name = c.field("name")?.node().str()?.to_string();
        if out.insert(id, name).is_some() {
            return Err(Error::schema(c.path, format!("duplicate category id {id}")));
        }
    }
    Ok(out)
}

fn parse_video(v: Node<'_>) -> Result<VideoMeta> {
    let id = v.field("id")?.node().u64()?;
    let width = v.field("width")?.node().positive()?;
    let height = v.field("height")?.node().positive()?;
    let file_names = match v.optional("file_names")? {
        Some(f) => f.node().items()?.iter().map(|n| n.node().str().map(str::to_string)).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let length = match v.optional("length")? {
        Some(l) => {
            let l = l.node();
            let n = l.positive()?;
            if !file_names.is_empty() && file_names.len() != n {
                return Err(Error::schema(l.path, format!("length {n} disagrees with {} file names", file_names.len())));
            }
            n
        }
        None if !file_names.is_empty() => file_names.len(),
        None => return Err(Error::schema(v.path, "missing field `length`")),
    };
    Ok(VideoMeta { id, width, height, length, file_names })
}

fn parse_videos(root: Node<'_>) -> Result<Vec<VideoMeta>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in root.field("videos")?.node().items()? {
        let meta = parse_video(v.node())?;
        if !seen.insert(meta.id) {
            return Err(Error::schema(&v.path, format!("duplicate video id {}", meta.id)));
        }
        out.push(meta);
    }
    Ok(out)
}

fn parse_rle(s: Node<'_>, video: &VideoMeta) -> Result<BinaryMask> {
    let size = s.field("size")?;
    let dims = size.node().items()?;
    if dims.len() != 2 {
        return Err(Error::schema(&size.path, format!("expected [height, width], found {} entries", dims.len())));
    }
    let (h, w) = (dims[0].node().positive()?, dims[1].node().positive()?);
    if (w, h) != (video.width, video.height) {
        return size.node().at(Err(CoreError::ResolutionMismatch { expected: (video.width, video.height), found: (w, h) }));
    }
    let counts = s.field("counts")?;
    let c = counts.node();
    match c.value {
        Value::String(text) => {
            let rle = c.at(Rle::from_coco_string(text, w, h))?;
            c.at(rle.decode())
        }
        Value::Array(_) => {
            let runs = c
                .items()?
                .iter()
                .map(|n| {
                    let n = n.node();
                    u32::try_from(n.u64()?).map_err(|_| Error::schema(n.path, "run length exceeds 32 bits"))
                })
                .collect::<Result<Vec<u32>>>()?;
            c.at(rle_decode(&runs, w, h))
        }
        _ => c.fail("an integer list or a compressed string"),
    }
}

/// Which annotation fields a document must carry.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Annotations,
    /// Top-level result arrays: `id` defaults to the 1-based position.
    Results,
}

fn parse_tracklet(
    a: Node<'_>,
    position: usize,
    videos: &HashMap<u64, &VideoMeta>,
    categories: &BTreeMap<u64, String>,
    kind: Kind,
) -> Result<Tracklet> {
    let id = match (kind, a.optional("id")?) {
        (_, Some(n)) => n.node().u64()?,
        (Kind::Results, None) => position as u64 + 1,
        (Kind::Annotations, None) => return Err(Error::schema(a.path, "missing field `id`")),
    };
    let vid = a.field("video_id")?;
    let video_id = vid.node().u64()?;
    let video =
        *videos.get(&video_id).map_or_else(|| vid.node().at(Err(CoreError::DanglingReference { kind: "video", id: video_id })), Ok)?;
    let cat = a.field("category_id")?;
    let category_id = cat.node().u64()?;
    if !categories.contains_key(&category_id) {
        return cat.node().at(Err(CoreError::DanglingReference { kind: "category", id: category_id }));
    }
    let score = match a.optional("score")? {
        Some(s) => {
            let v = s.node().f64()?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::schema(&s.path, format!("score {v} outside [0, 1]")));
            }
            v
        }
        None => 1.0,
    };
    let segs = a.field("segmentations")?;
    let entries = segs.node().items()?;
    if entries.len() != video.length {
        return Err(Error::schema(
            &segs.path,
            format!("expected {} entries (video {} length), found {}", video.length, video.id, entries.len()),
        ));
    }
    let frames = entries
        .iter()
        .map(|e| match e.value {
            Value::Null => Ok(None),
            _ => parse_rle(e.node(), video).map(Some),
        })
        .collect::<Result<Vec<_>>>()?;
    if frames.iter().all(Option::is_none) {
        return Err(Error::schema(&segs.path, "every frame is null; a tracklet needs at least one mask"));
    }
    Ok(Tracklet { id, video_id, category_id, score, frames })
}

fn parse_annotations(list: Node<'_>, videos: &[VideoMeta], categories: &BTreeMap<u64, String>, kind: Kind) -> Result<Vec<Tracklet>> {
    let by_id: HashMap<u64, &VideoMeta> = videos.iter().map(|v| (v.id, v)).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, a) in list.items()?.iter().enumerate() {
        let t = parse_tracklet(a.node(), i, &by_id, categories, kind)?;
        if !seen.insert((t.video_id, t.id)) {
            return Err(Error::schema(&a.path, format!("duplicate annotation id {} in video {}", t.id, t.video_id)));
        }
        out.push(t);
    }
    Ok(out)
}

/// Builds a dataset from a parsed annotation document.
pub fn parse_dataset_value(doc: &Value) -> Result<VideoDataset> {
    let root = Node { value: doc, path: "$" };
    let categories = parse_categories(root)?;
    let videos = parse_videos(root)?;
    let annotations = parse_annotations(root.field("annotations")?.node(), &videos, &categories, Kind::Annotations)?;
    let ds = VideoDataset { videos, annotations, categories };
    ds.validate()?;
    Ok(ds)
}

/// Builds a dataset from annotation JSON text. Annotation order is preserved.
pub fn parse_dataset(text: &str) -> Result<VideoDataset> {
    parse_dataset_value(&serde_json::from_str(text)?)
}

/// Predictions from a result document, resolved against `gt`.
///
/// Accepts a full annotation document (with `score` per annotation) or the
/// usual top-level array of annotations. Video sizes, lengths and category
/// ids come from `gt`; `score` defaults to 1.0.
pub fn parse_results(text: &str, gt: &VideoDataset) -> Result<Vec<Tracklet>> {
    let doc: Value = serde_json::from_str(text)?;
    let root = Node { value: &doc, path: "$" };
    match &doc {
        Value::Array(_) => parse_annotations(root, &gt.videos, &gt.categories, Kind::Results),
        Value::Object(_) => Ok(parse_dataset_value(&doc)?.annotations),
        _ => root.fail("an object or an array"),
    }
}

fn segmentation(m: &Option<BinaryMask>) -> Value {
    match m {
        None => Value::Null,
        Some(m) => json!({ "size": [m.height(), m.width()], "counts": rle_encode(m) }),
    }
}

/// Annotation JSON of `ds`, with integer-list RLE and `null` for absent frames.
pub fn write_dataset(ds: &VideoDataset) -> Value {
    json!({
        "videos": ds.videos.iter().map(|v| json!({
            "id": v.id,
            "width": v.width,
            "height": v.height,
            "length": v.length,
            "file_names": v.file_names,
        })).collect::<Vec<_>>(),
        "annotations": ds.annotations.iter().map(|t| json!({
            "id": t.id,
            "video_id": t.video_id,
            "category_id": t.category_id,
            "score": t.score,
            "segmentations": t.frames.iter().map(segmentation).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "categories": ds.categories.iter().map(|(id, name)| json!({ "id": id, "name": name })).collect::<Vec<_>>(),
    })
}

/// Canonical text of [`write_dataset`].
pub fn dataset_to_string(ds: &VideoDataset) -> Result<String> {
    json::to_string(&write_dataset(ds), Style::Compact)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<VideoDataset> {
    parse_dataset(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn read_results(path: &Path, gt: &VideoDataset) -> Result<Vec<Tracklet>> {
    parse_results(&read_text(path)?, gt).map_err(|e| e.in_file(path))
}

pub fn write_dataset_file(path: &Path, ds: &VideoDataset) -> Result<()> {
    write_text(path, &dataset_to_string(ds)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "videos": [{"id": 1, "width": 2, "height": 2, "length": 1, "file_names": ["a/0.jpg"]}],
        "annotations": [{"id": 5, "video_id": 1, "category_id": 3, "segmentations": [{"size": [2, 2], "counts": [0, 4]}]}],
        "categories": [{"id": 3, "name": "cat"}]
    }"#;

    fn with_annotation(annotation: &str, length: usize) -> String {
        format!(
            r#"{{"videos": [{{"id": 1, "width": 2, "height": 2, "length": {length}}}],
                "annotations": [{annotation}], "categories": [{{"id": 1, "name": "x"}}]}}"#
        )
    }

    fn schema_path(e: Error) -> String {
        match e {
            Error::Schema { path, .. } | Error::At { path, .. } => path,
            other => panic!("not a located error: {other}"),
        }
    }

    #[test]
    fn minimal_document() {
        let ds = parse_dataset(MINIMAL).unwrap();
        assert_eq!(ds.annotations.len(), 1);
        let t = &ds.annotations[0];
        assert_eq!((t.id, t.score), (5, 1.0));
        assert_eq!(t.frame(1).unwrap(), &BinaryMask::full(2, 2).unwrap());
        assert_eq!(ds.categories[&3], "cat");
    }

    #[test]
    fn null_entries_are_absent_frames() {
        let doc = with_annotation(
            r#"{"id": 1, "video_id": 1, "category_id": 1, "segmentations": [null, {"size": [2, 2], "counts": [1, 1, 2]}]}"#,
            2,
        );
        let ds = parse_dataset(&doc).unwrap();
        assert_eq!(ds.annotations[0].span(), Some((2, 2)));
    }

    #[test]
    fn dangling_video_is_reported_with_its_path() {
        let doc = MINIMAL.replace(r#""video_id": 1"#, r#""video_id": 9"#);
        match parse_dataset(&doc).unwrap_err() {
            Error::At { path, source } => {
                assert_eq!(path, "$.annotations[0].video_id");
                assert_eq!(source, CoreError::DanglingReference { kind: "video", id: 9 });
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn counts_mismatch_is_reported_with_its_path() {
        let doc = MINIMAL.replace("[0, 4]", "[3]");
        match parse_dataset(&doc).unwrap_err() {
            Error::At { path, source } => {
                assert_eq!(path, "$.annotations[0].segmentations[0].counts");
                assert_eq!(source, CoreError::CountsMismatch { sum: 3, expected: 4 });
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn schema_errors_carry_paths() {
        let cases = [
            (MINIMAL.replace(r#""width": 2,"#, ""), "$.videos[0]"),
            (MINIMAL.replace(r#""width": 2"#, r#""width": "2""#), "$.videos[0].width"),
            (MINIMAL.replace(r#""name": "cat""#, r#""name": 3"#), "$.categories[0].name"),
            (MINIMAL.replace(r#""size": [2, 2]"#, r#""size": [2]"#), "$.annotations[0].segmentations[0].size"),
            (MINIMAL.replace(r#""size": [2, 2]"#, r#""size": [2, 3]"#), "$.annotations[0].segmentations[0].size"),
            (MINIMAL.replace(r#""counts": [0, 4]"#, r#""counts": {}"#), "$.annotations[0].segmentations[0].counts"),
            (MINIMAL.replace(r#""counts": [0, 4]"#, r#""counts": [0, -4]"#), "$.annotations[0].segmentations[0].counts[1]"),
            (MINIMAL.replace(r#""length": 1"#, r#""length": 2"#), "$.videos[0].length"),
            (MINIMAL.replace(r#""category_id": 3"#, r#""category_id": 4"#), "$.annotations[0].category_id"),
            (MINIMAL.replace(r#""id": 5, "#, ""), "$.annotations[0]"),
            (MINIMAL.replace(r#"{"size": [2, 2], "counts": [0, 4]}"#, "null"), "$.annotations[0].segmentations"),
        ];
        for (doc, path) in cases {
            assert_eq!(schema_path(parse_dataset(&doc).unwrap_err()), path, "{doc}");
        }
    }

    #[test]
    fn wrong_segmentation_count_is_a_schema_error() {
        let doc = with_annotation(r#"{"id": 1, "video_id": 1, "category_id": 1, "segmentations": [null]}"#, 2);
        let e = parse_dataset(&doc).unwrap_err();
        assert!(e.to_string().contains("expected 2 entries"), "{e}");
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let doc = MINIMAL.replace(r#""id": 5,"#, r#""id": 5, "iscrowd": 0, "bboxes": [null],"#);
        assert_eq!(parse_dataset(&doc).unwrap(), parse_dataset(MINIMAL).unwrap());
    }

    #[test]
    fn compressed_counts_are_accepted() {
        let m = BinaryMask::from_fn(2, 2, |r, c| r == 0 && c == 0).unwrap();
        let s = Rle::encode(&m).to_coco_string();
        let doc = MINIMAL.replace("[0, 4]", &format!("{s:?}"));
        assert_eq!(parse_dataset(&doc).unwrap().annotations[0].frame(1).unwrap(), &m);
    }

    #[test]
    fn duplicates_are_rejected() {
        let doc = MINIMAL.replace(r#"{"id": 3, "name": "cat"}"#, r#"{"id": 3, "name": "cat"}, {"id": 3, "name": "dog"}"#);
        assert_eq!(schema_path(parse_dataset(&doc).unwrap_err()), "$.categories[1]");
    }

    #[test]
    fn round_trip() {
        let ds = parse_dataset(MINIMAL).unwrap();
        assert_eq!(parse_dataset(&dataset_to_string(&ds).unwrap()).unwrap(), ds);
        let doc = with_annotation(
            r#"{"id": 1, "video_id": 1, "category_id": 1, "segmentations": [null, {"size": [2, 2], "counts": [1, 3]}]}"#,
            2,
        );
        let ds = parse_dataset(&doc).unwrap();
        let written = write_dataset(&ds);
        assert!(written["annotations"][0]["segmentations"][0].is_null());
        assert_eq!(parse_dataset_value(&written).unwrap(), ds);
    }

    #[test]
    fn result_arrays_resolve_against_ground_truth() {
        let gt = parse_dataset(MINIMAL).unwrap();
        let preds = parse_results(
            r#"[{"video_id": 1, "category_id": 3, "score": 0.25, "segmentations": [{"size": [2, 2], "counts": [4]}]},
                {"video_id": 1, "category_id": 3, "segmentations": [{"size": [2, 2], "counts": [0, 4]}]}]"#,
            &gt,
        )
        .unwrap();
        assert_eq!(preds.iter().map(|p| (p.id, p.score)).collect::<Vec<_>>(), [(1, 0.25), (2, 1.0)]);
        let bad = parse_results(r#"[{"video_id": 1, "category_id": 3, "score": 2, "segmentations": [null]}]"#, &gt);
        assert_eq!(schema_path(bad.unwrap_err()), "$[0].score");
        assert!(parse_results("3", &gt).is_err());
    }

    #[test]
    fn syntax_errors_are_validation_errors() {
        let e = parse_dataset("{").unwrap_err();
        assert!(matches!(e, Error::Syntax(_)));
        assert_eq!(e.exit_code(), 1);
    }
}
