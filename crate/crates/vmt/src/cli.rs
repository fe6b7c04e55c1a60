//! The `vmt` command line.
//!
//! Every subcommand resolves its full configuration before doing any work,
//! writes files through the canonical JSON writer and returns its console
//! output as text, so reruns with the same inputs are byte-identical
//! whatever `--jobs` is.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use vmt_core::dataset::{split_dataset, VideoDataset};
use vmt_core::incoherence::coords_of;
use vmt_core::mask::BandMode;
use vmt_core::metrics::{BoundaryD, MetricConfig};
use vmt_core::refine::{
    group_quadtree, ClipInput, ClipWindow, ConstantRefiner, NodePrediction, OracleRefiner, Refiner, RefinerConfig, RefinerWeights,
    TransformerRefiner,
};
use vmt_core::seed;
use vmt_core::selfcorrect::{
    clip_length_study, correction_region, degrade_dataset, synthesize_dataset, ClipStudyConfig, CorrectionConfig, DegradeMode,
    DegradeParams, LoopConfig, RegionSource, SynthConfig,
};

use crate::anno::{read_dataset, read_results, write_dataset_file, write_text};
use crate::error::{Error, Result};
use crate::json::{self, Style};
use crate::{dump, overlay, parallel, report, weights};

#[derive(Debug, Parser)]
#[command(name = "vmt", version, about = "Video instance segmentation evaluation and annotation self-correction")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Never changes output bytes.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predictions against ground truth (AP^B and AP^M).
    Evaluate {
        gt: PathBuf,
        pred: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect incoherent regions of every tracklet and report their share.
    #[command(alias = "detect-incoherence")]
    Detect {
        annotations: PathBuf,
        /// Also root cells whose coarsest value flips between adjacent frames.
        #[arg(long)]
        temporal: bool,
        /// Quadtree dump destination.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Turn accurate annotations into coarse ones.
    Degrade {
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Subsample)]
        mode: Mode,
        #[arg(long, default_value_t = 6)]
        stride: usize,
        #[arg(long, default_value_t = 5)]
        halo_radius: u32,
        #[arg(long, default_value_t = 0)]
        morph_min: u32,
        #[arg(long, default_value_t = 3)]
        morph_max: u32,
        #[arg(long, default_value_t = 0.5)]
        p_dilate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One correction pass over every tracklet.
    Correct {
        coarse: PathBuf,
        #[command(flatten)]
        refiner: RefinerArgs,
        #[command(flatten)]
        correction: CorrectionArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Alternate correction passes until AP^B saturates.
    Iterate {
        coarse: PathBuf,
        val_gt: PathBuf,
        #[command(flatten)]
        refiner: RefinerArgs,
        #[command(flatten)]
        correction: CorrectionArgs,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value_t = 4)]
        max_iters: usize,
        /// Saturation tolerance on AP^B, as a fraction.
        #[arg(long, default_value_t = 0.001)]
        epsilon: f64,
        /// Receives history.json and iteration_<k>.json.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Generate a synthetic dataset of smooth moving blobs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        videos: usize,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 1)]
        min_instances: usize,
        #[arg(long, default_value_t = 3)]
        max_instances: usize,
        #[arg(long, default_value_t = 0.03)]
        area_min: f64,
        #[arg(long, default_value_t = 0.10)]
        area_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render PNG frames with masks, boundary bands and incoherent cells.
    Overlay {
        annotations: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=32))]
        scale: u32,
        /// Only this video.
        #[arg(long)]
        video: Option<u64>,
        #[arg(long)]
        temporal: bool,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Split videos into train, val and test files.
    Split {
        annotations: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Three comma-separated ratios summing to 1.
        #[arg(long, value_parser = parse_ratios, default_value = "0.75,0.125,0.125")]
        ratios: (f64, f64, f64),
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write seeded refiner weights.
    InitWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 4)]
        heads: usize,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 128)]
        ffn_dim: usize,
        #[arg(long, default_value_t = 1)]
        queries: usize,
        #[arg(long, default_value_t = 8)]
        low_channels: usize,
        #[arg(long, default_value_t = 8.0)]
        sdt_clip: f64,
    },
    /// Dump the refiner's attention for one instance and clip.
    Attention {
        annotations: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        video: u64,
        #[arg(long)]
        instance: u64,
        /// Frames per clip, or `all`.
        #[arg(long, value_parser = parse_clip_len, default_value = "all")]
        clip_len: ClipLen,
        /// Any frame of the clip to inspect.
        #[arg(long, default_value_t = 1)]
        frame: usize,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long)]
        temporal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correct with a temporally correlated noisy oracle at several clip lengths.
    ClipStudy {
        gt: PathBuf,
        coarse: PathBuf,
        /// Comma-separated clip lengths; `all` is one clip per video.
        #[arg(long, value_delimiter = ',', value_parser = parse_clip_len, default_value = "1,5,10,all")]
        lengths: Vec<ClipLen>,
        #[arg(long, default_value_t = 0.3)]
        flip_prob: f64,
        /// Frames sharing one noise pattern.
        #[arg(long, default_value_t = 2)]
        corr_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Band {
    TwoSided,
    InnerOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Subsample,
    Halo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Region {
    Quadtree,
    Ungated,
}

/// A clip length, `None` meaning the whole video.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipLen(pub Option<usize>);

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Band width: pixels (`3`) or a percentage of the image diagonal (`2%`).
    #[arg(long, value_parser = parse_boundary_d, default_value = "2%")]
    pub boundary_d: BoundaryD,
    #[arg(long, value_enum, default_value_t = Band::TwoSided)]
    pub band_mode: Band,
    /// IoU thresholds: `lo:step:hi` or a comma-separated list.
    #[arg(long, value_parser = parse_thresholds, default_value = "0.5:0.05:0.95")]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds(pub Vec<f64>);

impl MetricArgs {
    pub fn config(&self) -> MetricConfig {
        MetricConfig {
            boundary_d: self.boundary_d,
            band_mode: match self.band_mode {
                Band::TwoSided => BandMode::TwoSided,
                Band::InnerOnly => BandMode::InnerOnly,
            },
            thresholds: self.thresholds.0.clone(),
            ..MetricConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CorrectionArgs {
    /// Confidence a prediction must exceed to overwrite a label.
    #[arg(long, default_value_t = vmt_core::refine::CORRECTION_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_parser = parse_clip_len, default_value = "all")]
    pub clip_len: ClipLen,
    #[arg(long, value_enum, default_value_t = Region::Ungated)]
    pub region: Region,
    #[arg(long, default_value_t = vmt_core::incoherence::TRAINING_DILATION)]
    pub region_dilation: u32,
    #[arg(long)]
    pub temporal: bool,
}

impl CorrectionArgs {
    pub fn config(&self) -> CorrectionConfig {
        CorrectionConfig {
            threshold: self.threshold,
            clip_len: self.clip_len.0,
            region_source: match self.region {
                Region::Quadtree => RegionSource::Quadtree,
                Region::Ungated => RegionSource::Ungated,
            },
            region_dilation: self.region_dilation,
            temporal: self.temporal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RefinerArgs {
    /// `oracle:<gt.json>`, `transformer:<weights>` or `constant:<p>`.
    #[arg(long)]
    pub refiner: String,
    /// Oracle label noise.
    #[arg(long, default_value_t = 0.0)]
    pub flip_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_boundary_d(s: &str) -> std::result::Result<BoundaryD, String> {
    let bad = || format!("expected pixels (`3`) or a diagonal percentage (`2%`), found `{s}`");
    match s.strip_suffix('%') {
        Some(p) => p.trim().parse::<f64>().map(|p| BoundaryD::DiagonalFraction(p / 100.0)).map_err(|_| bad()),
        None => s.trim().parse::<u32>().map(BoundaryD::Pixels).map_err(|_| bad()),
    }
}

fn parse_thresholds(s: &str) -> std::result::Result<Thresholds, String> {
    let nums = |sep: char| s.split(sep).map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
    if s.contains(':') {
        let v = nums(':').map_err(|e| format!("bad threshold range `{s}`: {e}"))?;
        let [lo, step, hi] = v[..] else { return Err(format!("expected lo:step:hi, found `{s}`")) };
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(format!("empty threshold range `{s}`"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        // rounding keeps 0.5 + 2 * 0.05 equal to the literal 0.6
        Ok(Thresholds((0..n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()))
    } else {
        nums(',').map(Thresholds).map_err(|e| format!("bad threshold list `{s}`: {e}"))
    }
}

fn parse_clip_len(s: &str) -> std::result::Result<ClipLen, String> {
    match s.trim() {
        "all" => Ok(ClipLen(None)),
        n => n.parse::<usize>().map(|n| ClipLen(Some(n))).map_err(|_| format!("expected a frame count or `all`, found `{s}`")),
    }
}

fn parse_ratios(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three ratios, found `{s}`")),
    }
}

/// A loaded `--refiner` source.
enum RefinerSource {
    Oracle(VideoDataset),
    Transformer(Box<RefinerWeights>),
    Constant(f64),
}

/// A refiner borrowing from its [`RefinerSource`].
enum AnyRefiner<'a> {
    Oracle(OracleRefiner<'a>),
    Transformer(TransformerRefiner<'a>),
    Constant(ConstantRefiner),
}

impl Refiner for AnyRefiner<'_> {
    fn refine(&self, clip: &ClipInput<'_>) -> vmt_core::Result<NodePrediction> {
        match self {
            AnyRefiner::Oracle(r) => r.refine(clip),
            AnyRefiner::Transformer(r) => r.refine(clip),
            AnyRefiner::Constant(r) => r.refine(clip),
        }
    }
}

impl RefinerSource {
    fn load(spec: &str) -> Result<Self> {
        let (kind, arg) = spec.split_once(':').ok_or_else(|| Error::Usage(format!("--refiner expects kind:argument, found `{spec}`")))?;
        match kind {
            "oracle" => Ok(RefinerSource::Oracle(read_dataset(Path::new(arg))?)),
            "transformer" => Ok(RefinerSource::Transformer(Box::new(weights::load(Path::new(arg))?))),
            "constant" => match arg.parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => Ok(RefinerSource::Constant(p)),
                _ => Err(Error::Usage(format!("constant refiner needs a probability in [0, 1], found `{arg}`"))),
            },
            _ => Err(Error::Usage(format!("unknown refiner `{kind}`; expected oracle, transformer or constant"))),
        }
    }

    fn refiner(&self, flip_prob: f64, seed: u64) -> AnyRefiner<'_> {
        match self {
            RefinerSource::Oracle(gt) => AnyRefiner::Oracle(OracleRefiner { gt, flip_prob, seed }),
            RefinerSource::Transformer(weights) => AnyRefiner::Transformer(TransformerRefiner { weights }),
            RefinerSource::Constant(p) => AnyRefiner::Constant(ConstantRefiner(*p)),
        }
    }
}

fn check_flip(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Usage(format!("--flip-prob must lie in [0, 1], found {p}")))
    }
}

/// Writes `text` to `path` when given; otherwise it becomes console output.
fn emit(path: Option<&Path>, text: String) -> Result<String> {
    match path {
        Some(p) => write_text(p, &text).map(|_| String::new()),
        None => Ok(text),
    }
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::Evaluate { gt, pred, metric, format, out } => {
            let cfg = metric.config();
            cfg.validate()?;
            let gt_ds = read_dataset(&gt)?;
            let preds = read_results(&pred, &gt_ds)?;
            let r = parallel::evaluate(&gt_ds, &preds, &cfg)?;
            let text = match format {
                Format::Table => report::report_table(&r),
                Format::Json => report::report_json(&r)?,
            };
            emit(out.as_deref(), text)
        }
        Command::Detect { annotations, temporal, out, format } => {
            let ds = read_dataset(&annotations)?;
            let qts = parallel::detect(&ds, temporal)?;
            if let Some(out) = &out {
                write_text(out, &json::to_string(&dump::quadtree_value(&ds, &qts, temporal), Style::Compact)?)?;
            }
            let fractions: Vec<f64> = dump::video_fractions(&ds, &qts).into_iter().map(|(_, f)| f).collect();
            let s = dump::summarize(&fractions);
            Ok(match format {
                Format::Json => json::to_string(&dump::summary_value(&s), Style::Pretty)?,
                Format::Table => report::render_table(
                    &["videos", "median", "max", "share < 0.10"],
                    &[vec![s.videos.to_string(), format!("{:.4}", s.median), format!("{:.4}", s.max), format!("{:.3}", s.sparse_share)]],
                ),
            })
        }
        Command::Degrade { gt, out, mode, stride, halo_radius, morph_min, morph_max, p_dilate, seed } => {
            let params = DegradeParams {
                mode: match mode {
                    Mode::Subsample => DegradeMode::Subsample,
                    Mode::Halo => DegradeMode::Halo,
                },
                stride,
                halo_radius,
                morph_radius: (morph_min, morph_max),
                p_dilate,
                seed,
            };
            params.validate()?;
            let ds = read_dataset(&gt)?;
            let (coarse, rep) = degrade_dataset(&ds, &params)?;
            write_dataset_file(&out, &coarse)?;
            let mut text = format!("{} tracklets degraded\n", coarse.annotations.len());
            for d in &rep.degenerate {
                text += &format!("kept unchanged (degenerate): video {} instance {} frame {}\n", d.video_id, d.tracklet_id, d.t);
            }
            Ok(text)
        }
        Command::Correct { coarse, refiner, correction, out } => {
            let cfg = correction.config();
            cfg.validate()?;
            check_flip(refiner.flip_prob)?;
            let ds = read_dataset(&coarse)?;
            let source = RefinerSource::load(&refiner.refiner)?;
            let (corrected, stats) = parallel::correction_pass(&ds, &source.refiner(refiner.flip_prob, refiner.seed), &cfg)?;
            write_dataset_file(&out, &corrected)?;
            Ok(format!("{} candidate pixels, {} changed ({:.4} of annotated pixels)\n", stats.candidates, stats.changed, stats.fraction()))
        }
        Command::Iterate { coarse, val_gt, refiner, correction, metric, max_iters, epsilon, out_dir, format } => {
            let cfg = LoopConfig { max_iters, epsilon, correction: correction.config(), metric: metric.config() };
            cfg.validate()?;
            check_flip(refiner.flip_prob)?;
            let train = read_dataset(&coarse)?;
            let val = read_dataset(&val_gt)?;
            let source = RefinerSource::load(&refiner.refiner)?;
            let (flip, base) = (refiner.flip_prob, refiner.seed);
            let history = parallel::iterate(&train, &val, |_, it| Ok(source.refiner(flip, seed::derive(&[base, it as u64]))), &cfg)?;
            write_text(&out_dir.join("history.json"), &json::to_string(&report::history_value(&history), Style::Pretty)?)?;
            for it in &history.iterations {
                write_dataset_file(&out_dir.join(format!("iteration_{}.json", it.iteration)), &it.dataset)?;
            }
            Ok(match format {
                Format::Table => report::history_table(&history),
                Format::Json => json::to_string(&report::history_value(&history), Style::Pretty)?,
            })
        }
        Command::Synth { out, videos, frames, width, height, min_instances, max_instances, area_min, area_max, seed } => {
            let cfg = SynthConfig { videos, frames, width, height, min_instances, max_instances, area: (area_min, area_max), seed };
            let ds = synthesize_dataset(&cfg)?;
            write_dataset_file(&out, &ds)?;
            Ok(format!("{} videos, {} instances\n", ds.videos.len(), ds.annotations.len()))
        }
        Command::Overlay { annotations, out_dir, scale, video, temporal, metric } => {
            let cfg = overlay::OverlayConfig { scale, metric: metric.config() };
            cfg.metric.validate()?;
            let ds = read_dataset(&annotations)?;
            let qts = parallel::detect(&ds, temporal)?;
            let paths = overlay::write_overlays(&ds, &qts, &cfg, &out_dir, video)?;
            Ok(format!("{} frames written to {}\n", paths.len(), out_dir.display()))
        }
        Command::Split { annotations, out_dir, ratios, seed } => {
            let ds = read_dataset(&annotations)?;
            let ids: Vec<u64> = ds.videos.iter().map(|v| v.id).collect();
            let split = split_dataset(&ids, ratios, seed)?;
            let mut text = String::new();
            for (name, part) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
                let mut part = part.clone();
                part.sort_unstable();
                write_dataset_file(&out_dir.join(format!("{name}.json")), &ds.restricted_to(&part))?;
                text += &format!("{name}: {} videos\n", part.len());
            }
            Ok(text)
        }
        Command::InitWeights { out, seed, hidden, heads, layers, ffn_dim, queries, low_channels, sdt_clip } => {
            let cfg = RefinerConfig { hidden, heads, layers, ffn_dim, queries, low_channels, sdt_clip, ..RefinerConfig::default() };
            let w = RefinerWeights::seeded(cfg, seed)?;
            weights::save(&out, &w)?;
            Ok(format!("{} parameters\n", w.parameter_count()))
        }
        Command::Attention { annotations, weights: wpath, video, instance, clip_len, frame, top_k, temporal, out } => {
            let ds = read_dataset(&annotations)?;
            let w = weights::load(&wpath)?;
            let track = ds.tracklet(video, instance).ok_or_else(|| Error::Usage(format!("no instance {instance} in video {video}")))?;
            let meta = ds.video(video).ok_or_else(|| Error::Usage(format!("no video {video}")))?;
            let cfg = CorrectionConfig { clip_len: clip_len.0, temporal, ..CorrectionConfig::default() };
            cfg.validate()?;
            let window = ClipWindow::tiling(track.length(), cfg.clip_len)
                .into_iter()
                .find(|w| w.contains(frame))
                .ok_or_else(|| Error::Usage(format!("frame {frame} is outside 1..={}", track.length())))?;
            let (qt, region) = correction_region(track, meta, &cfg)?;
            let coords: Vec<_> = coords_of(&region).into_iter().filter(|c| window.contains(c.t)).collect();
            let dense = track.dense_frames(meta.width, meta.height)?;
            let clip = ClipInput {
                video_id: video,
                instance_id: instance,
                window,
                coarse: &dense[window.start - 1..window.end()],
                rgb: None,
                quadtree: &qt,
                coords: &coords,
            };
            let value = if group_quadtree(&qt, window)?.is_empty() {
                serde_json::json!({ "window": { "start": window.start, "len": window.len }, "tokens": [], "layers": [] })
            } else {
                let (seq, pred, cap) = TransformerRefiner { weights: &w }.run(&clip, true)?;
                let cap = cap.expect("capture was requested");
                dump::attention_value(&seq, &cap, &pred.probabilities, top_k)
            };
            emit(out.as_deref(), json::to_string(&value, Style::Pretty)?)
        }
        Command::ClipStudy { gt, coarse, lengths, flip_prob, corr_len, seed, metric, format } => {
            check_flip(flip_prob)?;
            if corr_len == 0 {
                return Err(Error::Usage("--corr-len must be at least 1".into()));
            }
            let cfg = ClipStudyConfig {
                clip_lengths: lengths.iter().map(|l| l.0).collect(),
                flip_prob,
                corr_len,
                seed,
                correction: CorrectionConfig::default(),
                metric: metric.config(),
            };
            cfg.metric.validate()?;
            let gt_ds = read_dataset(&gt)?;
            let coarse_ds = read_dataset(&coarse)?;
            let rows = clip_length_study(&gt_ds, &coarse_ds, &cfg)?;
            Ok(match format {
                Format::Table => report::clip_study_table(&rows),
                Format::Json => json::to_string(&report::clip_study_value(&rows), Style::Pretty)?,
            })
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code: 0 on success, 1 for invalid input or usage, 2 for I/O failures.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match parallel::with_jobs(cli.jobs, || execute(cli.command)).and_then(|r| r) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write output: {e}");
                2
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
