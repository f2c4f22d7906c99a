//! Deterministic readers and writers for the pipeline's file artifacts.
//!
//! Three carriers: CSV for tabular data (datasets, histograms, sweep and
//! evaluation results), PGM P2 for images (intensity and class maps), and
//! JSON for structured documents (trained models, fit reports, scenes).
//! Every text artifact begins with a provenance header naming the tool
//! version, the command line that produced it, and the seed; CSV and PGM
//! carry it as `#` comment lines, JSON as leading fields since the grammar
//! has no comments.
//!
//! Writers are pure functions of their inputs: field order is fixed, floats
//! print in the shortest form that parses back to the same bits, and nothing
//! records wall-clock state. Rerunning a command with the same inputs and
//! seed therefore reproduces every output byte for byte.
//!
//! Readers reject structural problems (wrong column counts, non-contiguous
//! photon numbers, dimension mismatches) with [`Error::InvalidFormat`];
//! filesystem failures stay [`Error::Io`]. The two map onto different exit
//! codes in the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassLabel, Evaluation, LabeledItem, MLPModel, N_CLASSES, N_HIDDEN};
use crate::error::{Error, Result};
use crate::fitting::{FitConfig, FitResult};
use crate::imaging::{
    ClassMap, EmitterKind, EmitterSpec, HistogramGrid, PixelClass, ScalarImage, Scene,
    SeparationEstimate,
};
use crate::sampling::{FeatureVector, PhotonHistogram, N_FEATURES};

/// Provenance stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputHeader {
    pub tool_version: String,
    pub command_line: String,
    pub seed: u64,
}

impl OutputHeader {
    pub fn new(command_line: impl Into<String>, seed: u64) -> OutputHeader {
        OutputHeader {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: command_line.into(),
            seed,
        }
    }

    /// The three `#` comment lines placed at the top of CSV and PGM files.
    fn comment_lines(&self) -> String {
        format!(
            "# quastim {}\n# command: {}\n# seed: {}\n",
            self.tool_version, self.command_line, self.seed
        )
    }
}

/// Wraps I/O failures with the path; the error stays [`Error::Io`].
fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_context(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_context(path, e))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
}

fn parse_f64(what: &str, line_no: usize, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::format(what, format!("line {line_no}: {token:?} is not a number")))
}

fn parse_u64(what: &str, line_no: usize, token: &str) -> Result<u64> {
    token.parse::<u64>().map_err(|_| {
        Error::format(
            what,
            format!("line {line_no}: {token:?} is not a nonnegative integer"),
        )
    })
}

// ---------------------------------------------------------------------------
// Labeled feature datasets
// ---------------------------------------------------------------------------

/// Dataset CSV: 21 feature columns then the class label.
pub fn write_dataset_csv(path: &Path, header: &OutputHeader, items: &[LabeledItem]) -> Result<()> {
    let mut out = header.comment_lines();
    for i in 0..N_FEATURES {
        let sep = if i + 1 == N_FEATURES { "" } else { "," };
        write!(out, "f{i}{sep}").unwrap();
    }
    out.push_str(",label\n");
    for item in items {
        for v in item.features.as_slice() {
            write!(out, "{v},").unwrap();
        }
        out.push_str(item.label.as_str());
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<LabeledItem>> {
    const WHAT: &str = "dataset file";
    let text = read_file(path)?;
    let mut lines = data_lines(&text);
    let (line_no, first) = lines
        .next()
        .ok_or_else(|| Error::format(WHAT, "no column header line"))?;
    let columns = first.split(',').count();
    if columns != N_FEATURES + 1 {
        return Err(Error::format(
            WHAT,
            format!(
                "line {line_no}: expected {N_FEATURES} feature columns plus a label, got {} columns",
                columns
            ),
        ));
    }
    let mut items = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != N_FEATURES + 1 {
            return Err(Error::format(
                WHAT,
                format!(
                    "line {line_no}: expected {} fields, got {}",
                    N_FEATURES + 1,
                    fields.len()
                ),
            ));
        }
        let mut features = [0.0; N_FEATURES];
        for (slot, token) in features.iter_mut().zip(&fields) {
            *slot = parse_f64(WHAT, line_no, token)?;
        }
        let label: ClassLabel = fields[N_FEATURES]
            .parse()
            .map_err(|e| Error::format(WHAT, format!("line {line_no}: {e}")))?;
        items.push(LabeledItem {
            features: FeatureVector(features),
            label,
        });
    }
    Ok(items)
}

/// Companion document for a generated dataset: settings plus split sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub tool_version: String,
    pub command_line: String,
    pub seed: u64,
    pub shots: u64,
    pub per_class: usize,
    pub n_max: usize,
    pub brightness_jitter: Option<(f64, f64)>,
    /// (train, validation, test) item counts.
    pub split_sizes: (usize, usize, usize),
    /// File names of the three split CSVs, same order.
    pub files: (String, String, String),
}

pub fn write_manifest_json(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_file(path, &text)
}

// ---------------------------------------------------------------------------
// Trained models
// ---------------------------------------------------------------------------

/// On-disk form of a trained network. `schema_version` guards layout changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub tool_version: String,
    pub command_line: String,
    pub seed: u64,
    pub schema_version: u32,
    pub n_features: usize,
    pub n_hidden: usize,
    pub n_classes: usize,
    pub labels: Vec<String>,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

pub fn write_model_json(path: &Path, header: &OutputHeader, model: &MLPModel) -> Result<()> {
    let doc = ModelDocument {
        tool_version: header.tool_version.clone(),
        command_line: header.command_line.clone(),
        seed: header.seed,
        schema_version: MODEL_SCHEMA_VERSION,
        n_features: N_FEATURES,
        n_hidden: N_HIDDEN,
        n_classes: N_CLASSES,
        labels: model.labels.iter().map(|l| l.as_str().to_string()).collect(),
        w1: model.w1.iter().map(|row| row.to_vec()).collect(),
        b1: model.b1.to_vec(),
        w2: model.w2.iter().map(|row| row.to_vec()).collect(),
        b2: model.b2.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
    text.push('\n');
    write_file(path, &text)
}

pub fn read_model_json(path: &Path) -> Result<MLPModel> {
    const WHAT: &str = "model file";
    let text = read_file(path)?;
    let doc: ModelDocument =
        serde_json::from_str(&text).map_err(|e| Error::format(WHAT, e.to_string()))?;
    if doc.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::format(
            WHAT,
            format!(
                "schema version {} (this build reads {MODEL_SCHEMA_VERSION})",
                doc.schema_version
            ),
        ));
    }
    if (doc.n_features, doc.n_hidden, doc.n_classes) != (N_FEATURES, N_HIDDEN, N_CLASSES) {
        return Err(Error::format(
            WHAT,
            format!(
                "layer sizes {}-{}-{} do not match this build's {N_FEATURES}-{N_HIDDEN}-{N_CLASSES}",
                doc.n_features, doc.n_hidden, doc.n_classes
            ),
        ));
    }
    let expected: Vec<&str> = ClassLabel::ALL.iter().map(|l| l.as_str()).collect();
    if doc.labels != expected {
        return Err(Error::format(
            WHAT,
            format!("labels {:?} are not the expected {:?}", doc.labels, expected),
        ));
    }
    let mut model = MLPModel::zeroed();
    fill_matrix(WHAT, "w1", &doc.w1, &mut model.w1)?;
    fill_vector(WHAT, "b1", &doc.b1, &mut model.b1)?;
    fill_matrix(WHAT, "w2", &doc.w2, &mut model.w2)?;
    fill_vector(WHAT, "b2", &doc.b2, &mut model.b2)?;
    Ok(model)
}

fn fill_matrix<const C: usize, const R: usize>(
    what: &str,
    name: &str,
    src: &[Vec<f64>],
    dst: &mut [[f64; C]; R],
) -> Result<()> {
    if src.len() != R || src.iter().any(|row| row.len() != C) {
        return Err(Error::format(what, format!("{name} is not {R}x{C}")));
    }
    for (d, s) in dst.iter_mut().zip(src) {
        d.copy_from_slice(s);
    }
    Ok(())
}

fn fill_vector<const N: usize>(
    what: &str,
    name: &str,
    src: &[f64],
    dst: &mut [f64; N],
) -> Result<()> {
    if src.len() != N {
        return Err(Error::format(what, format!("{name} has {} entries, expected {N}", src.len())));
    }
    dst.copy_from_slice(src);
    Ok(())
}

// ---------------------------------------------------------------------------
// Histograms and distributions
// ---------------------------------------------------------------------------

/// Single histogram CSV: `n,count` rows for n = 0..=n_max.
pub fn write_histogram_csv(
    path: &Path,
    header: &OutputHeader,
    hist: &PhotonHistogram,
) -> Result<()> {
    let mut out = header.comment_lines();
    writeln!(out, "# shots: {}", hist.shots()).unwrap();
    out.push_str("n,count\n");
    for (n, c) in hist.counts().iter().enumerate() {
        writeln!(out, "{n},{c}").unwrap();
    }
    write_file(path, &out)
}

/// Reads `n,count` or `n,p` rows into a probability vector over n = 0..=n_max.
///
/// The column header decides the mode: integer counts are normalized by
/// their total, probabilities pass through unchanged. Rows must cover
/// consecutive photon numbers starting at 0.
pub fn read_distribution_csv(path: &Path) -> Result<Vec<f64>> {
    const WHAT: &str = "distribution file";
    let text = read_file(path)?;
    let mut lines = data_lines(&text);
    let (line_no, first) = lines
        .next()
        .ok_or_else(|| Error::format(WHAT, "no column header line"))?;
    let counts_mode = match first {
        "n,count" => true,
        "n,p" => false,
        other => {
            return Err(Error::format(
                WHAT,
                format!("line {line_no}: column header {other:?} is neither \"n,count\" nor \"n,p\""),
            ))
        }
    };
    let mut values: Vec<f64> = Vec::new();
    for (line_no, line) in lines {
        let (n_tok, v_tok) = line.split_once(',').ok_or_else(|| {
            Error::format(WHAT, format!("line {line_no}: expected two fields"))
        })?;
        let n = parse_u64(WHAT, line_no, n_tok.trim())? as usize;
        if n != values.len() {
            return Err(Error::format(
                WHAT,
                format!("line {line_no}: photon number {n} out of order, expected {}", values.len()),
            ));
        }
        let v = if counts_mode {
            parse_u64(WHAT, line_no, v_tok.trim())? as f64
        } else {
            parse_f64(WHAT, line_no, v_tok.trim())?
        };
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::format(WHAT, "no data rows"));
    }
    if counts_mode {
        let total: f64 = values.iter().sum();
        if total > 0.0 {
            for v in &mut values {
                *v /= total;
            }
        }
    }
    Ok(values)
}

/// Full raster archive: one `ix,iy,c0..c{n_max}` row per pixel.
pub fn write_histogram_grid_csv(
    path: &Path,
    header: &OutputHeader,
    grid: &HistogramGrid,
) -> Result<()> {
    let n_bins = grid.get(0, 0).counts().len();
    let mut out = header.comment_lines();
    writeln!(out, "# width: {}", grid.width()).unwrap();
    writeln!(out, "# height: {}", grid.height()).unwrap();
    writeln!(out, "# pitch: {}", grid.pitch()).unwrap();
    writeln!(out, "# shots: {}", grid.shots()).unwrap();
    out.push_str("ix,iy");
    for n in 0..n_bins {
        write!(out, ",c{n}").unwrap();
    }
    out.push('\n');
    for iy in 0..grid.height() {
        for ix in 0..grid.width() {
            write!(out, "{ix},{iy}").unwrap();
            for c in grid.get(ix, iy).counts() {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

/// Gray level encoding a pixel class in the class-map PGM.
pub fn class_gray(class: PixelClass) -> u8 {
    match class {
        PixelClass::Background => 0,
        PixelClass::Light(ClassLabel::C) => 51,
        PixelClass::Light(ClassLabel::T) => 102,
        PixelClass::Light(ClassLabel::CT) => 153,
        PixelClass::Light(ClassLabel::TT) => 204,
        PixelClass::Light(ClassLabel::CTT) => 255,
    }
}

/// Classes in gray order, for the legend and its tests.
pub const CLASS_GRAY_TABLE: [(u8, &str); 6] = [
    (0, "BG"),
    (51, "C"),
    (102, "T"),
    (153, "CT"),
    (204, "TT"),
    (255, "CTT"),
];

fn pgm_body(header: &OutputHeader, width: usize, height: usize, pixels: &[u8]) -> String {
    let mut out = String::from("P2\n");
    out.push_str(&header.comment_lines());
    writeln!(out, "{width} {height}").unwrap();
    out.push_str("255\n");
    // Rows chunked to 16 samples per line to respect the historical
    // 70-character PGM line limit.
    for row in pixels.chunks(width) {
        for chunk in row.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

/// PGM of a [0, 1] intensity image; values clamp then scale to 0..=255.
pub fn write_intensity_pgm(path: &Path, header: &OutputHeader, image: &ScalarImage) -> Result<()> {
    let pixels: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    write_file(path, &pgm_body(header, image.width(), image.height(), &pixels))
}

pub fn write_class_map_pgm(path: &Path, header: &OutputHeader, map: &ClassMap) -> Result<()> {
    let pixels: Vec<u8> = map.cells().iter().map(|&c| class_gray(c)).collect();
    write_file(path, &pgm_body(header, map.width(), map.height(), &pixels))
}

/// Sidecar mapping gray levels in the class-map PGM to class names.
pub fn write_class_legend(path: &Path, header: &OutputHeader) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("# gray level -> pixel class\n");
    for (gray, name) in CLASS_GRAY_TABLE {
        writeln!(out, "{gray} {name}").unwrap();
    }
    write_file(path, &out)
}

/// Plot-ready intensity values: `ix,iy,intensity`.
pub fn write_intensity_csv(path: &Path, header: &OutputHeader, image: &ScalarImage) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("ix,iy,intensity\n");
    for iy in 0..image.height() {
        for ix in 0..image.width() {
            writeln!(out, "{ix},{iy},{}", image.get(ix, iy)).unwrap();
        }
    }
    write_file(path, &out)
}

/// Plot-ready class map: `ix,iy,class`.
pub fn write_class_map_csv(path: &Path, header: &OutputHeader, map: &ClassMap) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("ix,iy,class\n");
    for iy in 0..map.height() {
        for ix in 0..map.width() {
            writeln!(out, "{ix},{iy},{}", map.get(ix, iy)).unwrap();
        }
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Evaluation and sweep results
// ---------------------------------------------------------------------------

/// Confusion matrix CSV with the overall accuracy in a comment line.
pub fn write_confusion_csv(path: &Path, header: &OutputHeader, eval: &Evaluation) -> Result<()> {
    let mut out = header.comment_lines();
    writeln!(out, "# accuracy: {}", eval.accuracy()).unwrap();
    out.push_str("true");
    for label in ClassLabel::ALL {
        write!(out, ",{label}").unwrap();
    }
    out.push('\n');
    for (i, label) in ClassLabel::ALL.iter().enumerate() {
        write!(out, "{label}").unwrap();
        for j in 0..N_CLASSES {
            write!(out, ",{}", eval.confusion[i][j]).unwrap();
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Loss history of a training run: `epoch,train_loss,validation_loss`.
pub fn write_training_curve_csv(
    path: &Path,
    header: &OutputHeader,
    history: &[crate::classifier::EpochRecord],
) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("epoch,train_loss,validation_loss\n");
    for (epoch, rec) in history.iter().enumerate() {
        writeln!(out, "{epoch},{},{}", rec.train_loss, rec.val_loss).unwrap();
    }
    write_file(path, &out)
}

/// Accuracy as a function of shots per histogram: `shots,accuracy`.
pub fn write_eval_curve_csv(
    path: &Path,
    header: &OutputHeader,
    rows: &[(u64, f64)],
) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("shots,accuracy\n");
    for (shots, accuracy) in rows {
        writeln!(out, "{shots},{accuracy}").unwrap();
    }
    write_file(path, &out)
}

/// Separation sweep results, one row per true separation.
///
/// `plateau_flag` is 1 when most direct-fit repeats collapsed to a single
/// component, in which case `s_direct` holds the configured plateau value.
pub fn write_sweep_csv(
    path: &Path,
    header: &OutputHeader,
    estimates: &[SeparationEstimate],
) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("s_true,s_direct,plateau_flag,s_classified\n");
    for e in estimates {
        writeln!(
            out,
            "{},{},{},{}",
            e.true_separation,
            e.direct.value(),
            u8::from(e.direct.is_plateau()),
            e.classified
        )
        .unwrap();
    }
    write_file(path, &out)
}

/// One feature-space scatter point: the three projected coordinates of a
/// histogram with `shots` samples. `shots == 0` marks the exact-distribution
/// anchor computed from the closed-form p(n) instead of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScatterRow {
    pub label: ClassLabel,
    pub shots: u64,
    pub projection: (f64, f64, f64),
}

pub fn write_features_csv(
    path: &Path,
    header: &OutputHeader,
    rows: &[FeatureScatterRow],
) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("# rows with shots = 0 are exact-distribution anchors\n");
    out.push_str("class,shots,p0,p1,p2\n");
    for row in rows {
        let (p0, p1, p2) = row.projection;
        writeln!(out, "{},{},{p0},{p1},{p2}", row.label, row.shots).unwrap();
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Fit reports
// ---------------------------------------------------------------------------

/// JSON report of a distribution fit: the winning allocation plus the
/// measured and theory probabilities it was scored on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tool_version: String,
    pub command_line: String,
    pub seed: u64,
    pub grid_step: f64,
    pub n_fit_max: usize,
    pub objective: f64,
    pub total_mean: f64,
    pub active_sources: usize,
    pub modes: Vec<FitReportMode>,
    pub bars: Vec<FitReportBar>,
}

/// Mean photon numbers of one distinguishable mode's sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReportMode {
    pub coherent: f64,
    pub thermal1: f64,
    pub thermal2: f64,
}

/// Measured vs fitted probability at one photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReportBar {
    pub n: usize,
    pub measured: f64,
    pub theory: f64,
}

pub fn fit_report(
    header: &OutputHeader,
    result: &FitResult,
    p_exp: &[f64],
    cfg: &FitConfig,
) -> FitReport {
    let modes = result
        .best
        .mode_means()
        .into_iter()
        .map(|(coherent, thermal1, thermal2)| FitReportMode {
            coherent,
            thermal1,
            thermal2,
        })
        .collect();
    let bars = p_exp
        .iter()
        .enumerate()
        .map(|(n, &measured)| FitReportBar {
            n,
            measured,
            theory: result.theory.p(n),
        })
        .collect();
    FitReport {
        tool_version: header.tool_version.clone(),
        command_line: header.command_line.clone(),
        seed: header.seed,
        grid_step: cfg.grid_step,
        n_fit_max: cfg.n_fit_max,
        objective: result.objective,
        total_mean: result.best.total_mean(),
        active_sources: result.best.active_sources(),
        modes,
        bars,
    }
}

pub fn write_fit_report_json(path: &Path, report: &FitReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("fit report serializes");
    text.push('\n');
    write_file(path, &text)
}

/// The report's bar data as CSV for plotting: `n,measured,theory`.
pub fn write_fit_bars_csv(path: &Path, header: &OutputHeader, report: &FitReport) -> Result<()> {
    let mut out = header.comment_lines();
    out.push_str("n,measured,theory\n");
    for bar in &report.bars {
        writeln!(out, "{},{},{}", bar.n, bar.measured, bar.theory).unwrap();
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Scene descriptions
// ---------------------------------------------------------------------------

/// A scene file: emitters plus grid geometry, with optional sampling
/// settings that command-line flags override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub emitters: Vec<EmitterDocument>,
    /// (width, height) in pixels.
    pub grid: (usize, usize),
    /// Field of view along x in beam-waist units.
    pub extent: f64,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// One emitter: position and peak in beam-waist units, kind "C" or "T".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterDocument {
    pub x: f64,
    pub y: f64,
    pub kind: String,
    pub peak_mean: f64,
    #[serde(default = "default_waist")]
    pub waist: f64,
}

fn default_waist() -> f64 {
    1.0
}

pub fn read_scene_json(path: &Path) -> Result<SceneDocument> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format("scene file", e.to_string()))
}

impl SceneDocument {
    pub fn to_scene(&self) -> Result<Scene> {
        let emitters = self
            .emitters
            .iter()
            .map(|e| {
                let kind: EmitterKind = e.kind.parse()?;
                Ok(EmitterSpec {
                    x: e.x,
                    y: e.y,
                    waist: e.waist,
                    kind,
                    peak_mean: e.peak_mean,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(emitters, self.grid, self.extent)
    }
}
