//! The `radiomap` command line.
//!
//! Each subcommand is a thin wrapper over one library call. Structured
//! results go to stdout as a single JSON document carrying
//! [`SCHEMA_VERSION`]; failures print one JSON line to stderr and return a
//! nonzero code from [`exit`].
//!
//! Parameter precedence is built-in defaults, then `--config <json>`, then
//! explicit flags. `RADIOMAP_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cr::{cr_map_fast, CrParams};
use crate::error::Error;
use crate::fuse::{build_stack, export_stack};
use crate::glcm::{re_map_fast, Direction, GlcmParams};
use crate::image::{BinaryMask, FeatureMap};
use crate::imgio::{encode_mask_pgm, encode_nifti_slice, load_raster, read_image, save_raster};
use crate::metrics::{confusion, summarize, Confusion, ScoreSummary};
use crate::phantom::{generate, PhantomSpec};
use crate::preprocess::prepare;
use crate::stability::{load_curve, sdd};
use crate::stats::{bonferroni, load_paired, wilcoxon_signed_rank_with, Alternative, Method};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the maximum number of worker threads.
pub const THREADS_ENV: &str = "RADIOMAP_THREADS";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Unknown subcommand or malformed flags.
    pub const USAGE: i32 = 2;
    /// Config file or parameter values rejected.
    pub const CONFIG: i32 = 3;
    /// File system failure.
    pub const IO: i32 = 4;
    /// Input files that cannot be decoded or paired.
    pub const DATA: i32 = 5;
}

#[derive(Parser, Debug)]
#[command(
    name = "radiomap",
    version,
    about = "Radiomic feature maps and segmentation evaluation"
)]
struct Cli {
    /// JSON file overriding built-in defaults.
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute CR and/or RE maps for one slice.
    Features(FeaturesArgs),
    /// Stack a raw slice with feature maps into one raster.
    Fuse(FuseArgs),
    /// Score predicted masks against ground truth.
    Eval(EvalArgs),
    /// Stability (SDD) of a validation curve.
    Curve(CurveArgs),
    /// Paired Wilcoxon signed-rank test with Bonferroni adjustment.
    Stats(StatsArgs),
    /// Render a synthetic lesion phantom and its mask.
    Phantom(PhantomArgs),
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    #[arg(long = "in", value_name = "IMAGE")]
    input: PathBuf,
    /// Axial slice for NIfTI input (default: middle slice).
    #[arg(long)]
    slice: Option<usize>,
    /// Emit the concentration-rate map.
    #[arg(long)]
    cr: bool,
    /// Emit the Rényi-entropy map.
    #[arg(long)]
    re: bool,
    #[arg(long, value_name = "STEM")]
    out: PathBuf,
    #[arg(long)]
    cr_radius: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    exclude: Option<usize>,
    #[arg(long)]
    re_radius: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated co-occurrence distances.
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct FuseArgs {
    #[arg(long, value_name = "IMAGE")]
    raw: PathBuf,
    #[arg(long)]
    slice: Option<usize>,
    /// Raster stem whose channels are appended; repeatable.
    #[arg(long = "maps", value_name = "STEM")]
    maps: Vec<PathBuf>,
    /// Keep feature channels in their native units.
    #[arg(long)]
    no_normalize_features: bool,
    #[arg(long, value_name = "STEM")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_name = "MASK", requires = "gt", conflicts_with_all = ["pred_dir", "gt_dir"])]
    pred: Option<PathBuf>,
    #[arg(long, value_name = "MASK", requires = "pred")]
    gt: Option<PathBuf>,
    #[arg(long, value_name = "DIR", requires = "gt_dir")]
    pred_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR", requires = "pred_dir")]
    gt_dir: Option<PathBuf>,
    /// Per-slice CSV destination.
    #[arg(long, value_name = "CSV")]
    csv: Option<PathBuf>,
    /// Aggregate JSON destination (also printed to stdout).
    #[arg(long, value_name = "JSON")]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Print a JSON document instead of the bare value.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Number of comparisons for the Bonferroni adjustment.
    #[arg(long)]
    comparisons: Option<usize>,
    #[arg(long, value_enum)]
    alternative: Option<Alternative>,
    #[arg(long, value_enum)]
    method: Option<Method>,
}

#[derive(Args, Debug)]
struct PhantomArgs {
    /// Phantom description; the built-in phantom when omitted.
    #[arg(long, value_name = "JSON")]
    spec: Option<PathBuf>,
    #[arg(long, value_name = "STEM")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

/// Effective defaults after applying a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunConfig {
    pub cr: CrParams,
    pub re: GlcmParams,
    pub normalize_features: Option<bool>,
    pub stats: StatsConfig,
    pub phantom: Option<PhantomSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub comparisons: usize,
    pub alternative: Alternative,
    pub method: Method,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            comparisons: 1,
            alternative: Alternative::TwoSided,
            method: Method::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrSection {
    radius: Option<usize>,
    count: Option<usize>,
    exclude: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReSection {
    radius: Option<usize>,
    alpha: Option<f64>,
    distances: Option<Vec<usize>>,
    directions: Option<Vec<Direction>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    cr: Option<CrSection>,
    re: Option<ReSection>,
    normalize_features: Option<bool>,
    stats: Option<StatsConfig>,
    phantom: Option<PhantomSpec>,
}

impl RunConfig {
    /// Parses a config document; omitted fields keep their defaults.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut cfg = RunConfig::default();
        if let Some(c) = raw.cr {
            cfg.cr.radius = c.radius.unwrap_or(cfg.cr.radius);
            cfg.cr.count = c.count.unwrap_or(cfg.cr.count);
            cfg.cr.exclude = c.exclude.unwrap_or(cfg.cr.exclude);
        }
        if let Some(r) = raw.re {
            cfg.re.radius = r.radius.unwrap_or(cfg.re.radius);
            cfg.re.alpha = r.alpha.unwrap_or(cfg.re.alpha);
            if let Some(d) = r.distances {
                cfg.re.distances = d;
            }
            if let Some(d) = r.directions {
                cfg.re.directions = d;
            }
        }
        cfg.normalize_features = raw.normalize_features;
        if let Some(s) = raw.stats {
            cfg.stats = s;
        }
        cfg.phantom = raw.phantom;
        Ok(cfg)
    }
}

/// A failure with its exit code and a short machine-readable kind.
#[derive(Debug)]
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, "config", message)
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(exit::IO, "io", format!("{}: {err}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidParams(_) | Error::OutOfRange { .. } => Self::config(message),
            Error::Io(_) => Self::new(exit::IO, "io", message),
            _ => Self::new(exit::DATA, "data", message),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the CLI with process stdout/stderr and returns the exit code.
/// `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output sinks.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return exit::OK;
            }
            let kind = match e.kind() {
                ErrorKind::InvalidSubcommand => "unknown_subcommand",
                _ => "usage",
            };
            let message = e.to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            report(err, &Failure::new(exit::USAGE, kind, first));
            return exit::USAGE;
        }
    };
    let result = thread_pool().and_then(|pool| {
        pool.install(|| {
            let mut buf = Vec::new();
            dispatch(cli, &mut buf).map(|()| buf)
        })
    });
    match result.and_then(|buf| {
        out.write_all(&buf)
            .map_err(|e| Failure::new(exit::IO, "io", e.to_string()))
    }) {
        Ok(()) => exit::OK,
        Err(f) => {
            report(err, &f);
            f.code
        }
    }
}

fn report(err: &mut dyn Write, f: &Failure) {
    let line = serde_json::json!({
        "error": { "kind": f.kind, "code": f.code, "message": f.message }
    });
    let _ = writeln!(err, "{line}");
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(v) = std::env::var_os(THREADS_ENV) {
        let n = v
            .to_str()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(|| Failure::config(format!("{THREADS_ENV} must be a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            RunConfig::from_json(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", p.display())))
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> CliResult<()> {
    writeln!(out, "{value}").map_err(|e| Failure::new(exit::IO, "io", e.to_string()))
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Features(a) => features(a, &cfg, out),
        Command::Fuse(a) => fuse(a, &cfg, out),
        Command::Eval(a) => eval(a, out),
        Command::Curve(a) => curve(a, out),
        Command::Stats(a) => stats(a, &cfg, out),
        Command::Phantom(a) => phantom(a, &cfg, out),
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn features(a: FeaturesArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let (want_cr, want_re) = if a.cr || a.re {
        (a.cr, a.re)
    } else {
        (true, true)
    };
    let mut cr = cfg.cr;
    cr.radius = a.cr_radius.unwrap_or(cr.radius);
    cr.count = a.count.unwrap_or(cr.count);
    cr.exclude = a.exclude.unwrap_or(cr.exclude);
    let mut re = cfg.re.clone();
    re.radius = a.re_radius.unwrap_or(re.radius);
    re.alpha = a.alpha.unwrap_or(re.alpha);
    if let Some(d) = a.distances {
        re.distances = d;
    }
    if want_cr {
        cr.validate()?;
    }
    if want_re {
        re.validate()?;
    }

    let img = read_image(&a.input, a.slice)?;
    let q = prepare(&img);
    let mut maps: Vec<(&str, FeatureMap)> = Vec::new();
    if want_cr {
        maps.push(("cr", cr_map_fast(&q, &cr)?));
    }
    if want_re {
        maps.push(("re", re_map_fast(&q, &re)?));
    }
    let refs: Vec<(&str, &FeatureMap)> = maps.iter().map(|(n, m)| (*n, m)).collect();
    let (bin, json) = save_raster(&refs, &a.out)?;

    let mut doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "features",
        "width": img.width(),
        "height": img.height(),
        "channels": maps.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
        "data": path_string(&bin),
        "sidecar": path_string(&json),
    });
    if want_cr {
        doc["cr"] = serde_json::to_value(cr).expect("plain struct");
    }
    if want_re {
        doc["re"] = serde_json::to_value(&re).expect("plain struct");
    }
    emit(out, &doc)
}

fn fuse(a: FuseArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let normalize = if a.no_normalize_features {
        false
    } else {
        cfg.normalize_features.unwrap_or(true)
    };
    let raw = read_image(&a.raw, a.slice)?;
    let mut maps: Vec<(String, FeatureMap)> = Vec::new();
    for stem in &a.maps {
        maps.extend(load_raster(stem)?.to_feature_maps());
    }
    let refs: Vec<(&str, &FeatureMap)> = maps.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let stack = build_stack(&raw, &refs, normalize)?;
    let (bin, json) = export_stack(&stack, &a.out)?;
    emit(
        out,
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": "fuse",
            "width": stack.dims().0,
            "height": stack.dims().1,
            "channels": stack.names(),
            "normalize_features": normalize,
            "data": path_string(&bin),
            "sidecar": path_string(&json),
        }),
    )
}

fn read_mask(path: &Path) -> CliResult<BinaryMask> {
    Ok(BinaryMask::from_image(&read_image(path, None)?))
}

/// Regular files in `dir`, keyed by file name.
fn list_files(dir: &Path) -> CliResult<BTreeMap<String, PathBuf>> {
    let mut files = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Failure::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            files.insert(entry.file_name().to_string_lossy().into_owned(), path);
        }
    }
    Ok(files)
}

/// Pairs files by identical name; any file without a partner is an error.
fn pair_dirs(pred: &Path, gt: &Path) -> CliResult<Vec<(String, PathBuf, PathBuf)>> {
    let p = list_files(pred)?;
    let mut g = list_files(gt)?;
    let mut pairs = Vec::with_capacity(p.len());
    let mut unpaired = Vec::new();
    for (name, path) in p {
        match g.remove(&name) {
            Some(gt_path) => pairs.push((name, path, gt_path)),
            None => unpaired.push(path_string(&pred.join(&name))),
        }
    }
    unpaired.extend(g.keys().map(|name| path_string(&gt.join(name))));
    if !unpaired.is_empty() {
        return Err(Failure::new(
            exit::DATA,
            "unpaired",
            format!("files without a counterpart: {}", unpaired.join(", ")),
        ));
    }
    if pairs.is_empty() {
        return Err(Failure::new(exit::DATA, "data", "no mask files found"));
    }
    Ok(pairs)
}

/// One row of the per-slice evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub name: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub dice: f64,
    pub precision: f64,
    pub sensitivity: f64,
}

impl EvalRow {
    fn new(name: String, c: Confusion) -> Self {
        let s = c.scores();
        Self {
            name,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            dice: s.dice,
            precision: s.precision,
            sensitivity: s.sensitivity,
        }
    }
}

/// Aggregate evaluation document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub n: usize,
    #[serde(flatten)]
    pub summary: ScoreSummary,
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let pairs = match (a.pred, a.gt, a.pred_dir, a.gt_dir) {
        (Some(p), Some(g), None, None) => {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path_string(&p));
            vec![(name, p, g)]
        }
        (None, None, Some(pd), Some(gd)) => pair_dirs(&pd, &gd)?,
        _ => {
            return Err(Failure::new(
                exit::USAGE,
                "usage",
                "give either --pred/--gt or --pred-dir/--gt-dir",
            ))
        }
    };
    let mut rows = Vec::with_capacity(pairs.len());
    for (name, p, g) in pairs {
        let c = confusion(&read_mask(&p)?, &read_mask(&g)?)?;
        rows.push(EvalRow::new(name, c));
    }
    let scores: Vec<_> = rows
        .iter()
        .map(|r| crate::metrics::SliceScores {
            dice: r.dice,
            precision: r.precision,
            sensitivity: r.sensitivity,
        })
        .collect();
    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        n: rows.len(),
        summary: summarize(&scores)?,
    };

    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r)
                .map_err(|e| Failure::new(exit::IO, "io", e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Failure::new(exit::IO, "io", e.to_string()))?;
        write_file(path, &bytes)?;
    }
    let doc = serde_json::to_value(&report).expect("plain struct");
    if let Some(path) = &a.json {
        let mut text = serde_json::to_string_pretty(&doc).expect("plain struct");
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    emit(out, &doc)
}

fn curve(a: CurveArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = read_text(&a.input)?;
    let c = load_curve(&text)?;
    let value = sdd(&c);
    if a.json {
        emit(
            out,
            &serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "n": c.scores().len(),
                "sdd": value,
            }),
        )
    } else {
        writeln!(out, "{value}").map_err(|e| Failure::new(exit::IO, "io", e.to_string()))
    }
}

/// Output document of the `stats` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schema_version: u32,
    pub n_pairs: usize,
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub statistic: f64,
    pub pvalue: f64,
    pub pvalue_adjusted: f64,
    pub comparisons: usize,
    pub alternative: Alternative,
    pub method: Method,
}

fn stats(a: StatsArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let comparisons = a.comparisons.unwrap_or(cfg.stats.comparisons);
    let alternative = a.alternative.unwrap_or(cfg.stats.alternative);
    let method = a.method.unwrap_or(cfg.stats.method);
    if comparisons == 0 {
        return Err(Failure::config("comparisons must be >= 1"));
    }
    let samples = load_paired(&read_text(&a.input)?)?;
    let r = wilcoxon_signed_rank_with(&samples, alternative, method)?;
    let adjusted = bonferroni(&[r.pvalue], comparisons)?[0];
    let report = StatsReport {
        schema_version: SCHEMA_VERSION,
        n_pairs: r.n_pairs,
        n: r.n,
        w_plus: r.w_plus,
        w_minus: r.w_minus,
        statistic: r.statistic,
        pvalue: r.pvalue,
        pvalue_adjusted: adjusted,
        comparisons,
        alternative,
        method: r.method,
    };
    emit(out, &serde_json::to_value(&report).expect("plain struct"))
}

fn phantom(a: PhantomArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let mut spec = match &a.spec {
        Some(path) => serde_json::from_str::<PhantomSpec>(&read_text(path)?)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?,
        None => cfg.phantom.clone().unwrap_or_default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let (img, mask) = generate(&spec)?;
    let image_path = with_suffix(&a.out, ".nii");
    let mask_path = with_suffix(&a.out, "_mask.pgm");
    write_file(&image_path, &encode_nifti_slice(&img)?)?;
    write_file(&mask_path, &encode_mask_pgm(&mask))?;
    emit(
        out,
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": "phantom",
            "width": spec.width,
            "height": spec.height,
            "seed": spec.seed,
            "lesion_pixels": mask.count(),
            "image": path_string(&image_path),
            "mask": path_string(&mask_path),
        }),
    )
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
