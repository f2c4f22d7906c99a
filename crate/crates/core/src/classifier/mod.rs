//! Photon-statistics classifier: a 21-input, 10-sigmoid-hidden, 5-softmax
//! feedforward network.
//!
//! The five classes cover every combination of up to one coherent and up to
//! two thermal sources a pixel can see: C, T, CT, TT, CTT. Features are the
//! empirical probabilities p(0)..p(20). Training uses Møller's scaled
//! conjugate gradient (see [`train_scg`]) on the KL divergence from the
//! one-hot target, which for one-hot targets is the cross-entropy
//! −ln p[target]. Early stopping keeps the weights from the epoch with the
//! lowest validation loss.
//!
//! Dataset generation samples histograms per class from the exact
//! distributions, optionally jittering overall brightness per histogram
//! (log-uniform scale on every source mean) so a model destined for imaging
//! sees the dim pixels it will meet in a raster scan.

pub mod probe;
mod scg;

pub use scg::{train_scg, train_seeded, EpochRecord, TrainConfig};

use crate::error::{Error, Result};
use crate::photon_stats::{distribution_mix, DistinguishableMix, ModeSpec, DEFAULT_N_MAX};
use crate::sampling::{draw_counts, to_features, FeatureVector, StreamRng, N_FEATURES};

pub const N_HIDDEN: usize = 10;
pub const N_CLASSES: usize = 5;

/// Total trainable parameters: 10·21 + 10 + 5·10 + 5.
pub const PARAM_COUNT: usize =
    N_HIDDEN * N_FEATURES + N_HIDDEN + N_CLASSES * N_HIDDEN + N_CLASSES;

/// The five light classes, in fixed order; the order is part of the
/// model-file contract and of every confusion-matrix layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    C,
    T,
    CT,
    TT,
    CTT,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; N_CLASSES] = [
        ClassLabel::C,
        ClassLabel::T,
        ClassLabel::CT,
        ClassLabel::TT,
        ClassLabel::CTT,
    ];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::C => 0,
            ClassLabel::T => 1,
            ClassLabel::CT => 2,
            ClassLabel::TT => 3,
            ClassLabel::CTT => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        ClassLabel::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::C => "C",
            ClassLabel::T => "T",
            ClassLabel::CT => "CT",
            ClassLabel::TT => "TT",
            ClassLabel::CTT => "CTT",
        }
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::format("class label", format!("unknown label {s:?}")))
    }
}

/// Network weights. `labels` pins the output ordering in serialized models.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPModel {
    pub w1: [[f64; N_FEATURES]; N_HIDDEN],
    pub b1: [f64; N_HIDDEN],
    pub w2: [[f64; N_HIDDEN]; N_CLASSES],
    pub b2: [f64; N_CLASSES],
    pub labels: [ClassLabel; N_CLASSES],
}

impl MLPModel {
    /// Weights uniform in [−0.5, 0.5], drawn in parameter order (w1 row-major,
    /// b1, w2 row-major, b2) from the seed's init stream.
    pub fn init(seed: u64) -> MLPModel {
        let mut rng = StreamRng::new(seed, INIT_STREAM);
        let mut draw = || rng.uniform() - 0.5;
        let mut model = MLPModel::zeroed();
        for row in &mut model.w1 {
            for w in row.iter_mut() {
                *w = draw();
            }
        }
        for b in &mut model.b1 {
            *b = draw();
        }
        for row in &mut model.w2 {
            for w in row.iter_mut() {
                *w = draw();
            }
        }
        for b in &mut model.b2 {
            *b = draw();
        }
        model
    }

    pub fn zeroed() -> MLPModel {
        MLPModel {
            w1: [[0.0; N_FEATURES]; N_HIDDEN],
            b1: [0.0; N_HIDDEN],
            w2: [[0.0; N_HIDDEN]; N_CLASSES],
            b2: [0.0; N_CLASSES],
            labels: ClassLabel::ALL,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_params().iter().all(|p| p.is_finite())
    }

    /// Flat parameter vector: w1 row-major, b1, w2 row-major, b2.
    pub fn to_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(PARAM_COUNT);
        for row in &self.w1 {
            v.extend_from_slice(row);
        }
        v.extend_from_slice(&self.b1);
        for row in &self.w2 {
            v.extend_from_slice(row);
        }
        v.extend_from_slice(&self.b2);
        v
    }

    pub fn from_params(params: &[f64]) -> MLPModel {
        assert_eq!(params.len(), PARAM_COUNT);
        let mut model = MLPModel::zeroed();
        let mut it = params.iter().copied();
        for row in &mut model.w1 {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in &mut model.b1 {
            *b = it.next().unwrap();
        }
        for row in &mut model.w2 {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in &mut model.b2 {
            *b = it.next().unwrap();
        }
        model
    }
}

/// Stream id for weight initialization, distinct from dataset streams.
const INIT_STREAM: u64 = u64::MAX - 1;

/// Stream id for the dataset shuffle.
const SHUFFLE_STREAM: u64 = u64::MAX;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn hidden_activations(model: &MLPModel, x: &FeatureVector) -> [f64; N_HIDDEN] {
    let mut h = [0.0; N_HIDDEN];
    for (i, row) in model.w1.iter().enumerate() {
        let mut z = model.b1[i];
        for (w, xv) in row.iter().zip(x.as_slice()) {
            z += w * xv;
        }
        h[i] = sigmoid(z);
    }
    h
}

fn softmax(logits: &[f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; N_CLASSES];
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

/// Class probabilities for one feature vector.
pub fn forward(model: &MLPModel, x: &FeatureVector) -> [f64; N_CLASSES] {
    let h = hidden_activations(model, x);
    let mut logits = model.b2;
    for (c, row) in model.w2.iter().enumerate() {
        for (w, hv) in row.iter().zip(&h) {
            logits[c] += w * hv;
        }
    }
    softmax(&logits)
}

/// KL divergence from a one-hot target: −ln predicted[target].
pub fn kl_loss(predicted: &[f64; N_CLASSES], target: ClassLabel) -> f64 {
    -predicted[target.index()].ln()
}

/// Index of the largest entry; ties go to the lower class index.
pub fn argmax_tie_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicted label under the argmax rule.
pub fn predict(model: &MLPModel, x: &FeatureVector) -> ClassLabel {
    ClassLabel::ALL[argmax_tie_low(&forward(model, x))]
}

/// One labeled training item.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub features: FeatureVector,
    pub label: ClassLabel,
}

/// Items in split order: train, then validation, then test.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<LabeledItem>,
    n_train: usize,
    n_val: usize,
}

impl LabeledDataset {
    /// Splits positionally: the first ⌊train·n⌋ items train, the next
    /// ⌊val·n⌋ validate, the rest test. Callers shuffle before splitting.
    pub fn new(items: Vec<LabeledItem>, split: (f64, f64, f64)) -> Result<LabeledDataset> {
        let (tr, va, te) = split;
        if tr < 0.0 || va < 0.0 || te < 0.0 || (tr + va + te - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "split fractions must be nonnegative and sum to 1, got ({tr}, {va}, {te})"
            )));
        }
        let n = items.len();
        let n_train = (tr * n as f64).floor() as usize;
        let n_val = (va * n as f64).floor() as usize;
        Ok(LabeledDataset {
            items,
            n_train,
            n_val,
        })
    }

    pub fn from_splits(
        train: Vec<LabeledItem>,
        validation: Vec<LabeledItem>,
        test: Vec<LabeledItem>,
    ) -> LabeledDataset {
        let n_train = train.len();
        let n_val = validation.len();
        let mut items = train;
        items.extend(validation);
        items.extend(test);
        LabeledDataset {
            items,
            n_train,
            n_val,
        }
    }

    pub fn items(&self) -> &[LabeledItem] {
        &self.items
    }

    pub fn train(&self) -> &[LabeledItem] {
        &self.items[..self.n_train]
    }

    pub fn validation(&self) -> &[LabeledItem] {
        &self.items[self.n_train..self.n_train + self.n_val]
    }

    pub fn test(&self) -> &[LabeledItem] {
        &self.items[self.n_train + self.n_val..]
    }
}

/// Mean KL loss over a batch.
pub fn batch_loss(model: &MLPModel, batch: &[LabeledItem]) -> f64 {
    assert!(!batch.is_empty());
    let sum: f64 = batch
        .iter()
        .map(|item| kl_loss(&forward(model, &item.features), item.label))
        .sum();
    sum / batch.len() as f64
}

/// Exact gradient of `batch_loss` in `to_params` layout.
pub fn gradient(model: &MLPModel, batch: &[LabeledItem]) -> Vec<f64> {
    loss_and_gradient(model, batch).1
}

/// Mean KL loss and its exact gradient in one pass over the batch.
pub fn loss_and_gradient(model: &MLPModel, batch: &[LabeledItem]) -> (f64, Vec<f64>) {
    assert!(!batch.is_empty());
    let mut loss = 0.0;
    let mut g_w1 = [[0.0; N_FEATURES]; N_HIDDEN];
    let mut g_b1 = [0.0; N_HIDDEN];
    let mut g_w2 = [[0.0; N_HIDDEN]; N_CLASSES];
    let mut g_b2 = [0.0; N_CLASSES];

    for item in batch {
        let x = item.features.as_slice();
        let h = hidden_activations(model, &item.features);
        let mut logits = model.b2;
        for (c, row) in model.w2.iter().enumerate() {
            for (w, hv) in row.iter().zip(&h) {
                logits[c] += w * hv;
            }
        }
        let y = softmax(&logits);
        loss -= y[item.label.index()].ln();

        // d loss / d logits = y − onehot
        let mut dz2 = y;
        dz2[item.label.index()] -= 1.0;

        let mut dh = [0.0; N_HIDDEN];
        for (c, &d) in dz2.iter().enumerate() {
            g_b2[c] += d;
            for (i, &hv) in h.iter().enumerate() {
                g_w2[c][i] += d * hv;
                dh[i] += d * model.w2[c][i];
            }
        }
        for i in 0..N_HIDDEN {
            let dz1 = dh[i] * h[i] * (1.0 - h[i]);
            g_b1[i] += dz1;
            for (gw, xv) in g_w1[i].iter_mut().zip(x) {
                *gw += dz1 * xv;
            }
        }
    }

    let inv = 1.0 / batch.len() as f64;
    let mut out = Vec::with_capacity(PARAM_COUNT);
    for row in &g_w1 {
        out.extend(row.iter().map(|g| g * inv));
    }
    out.extend(g_b1.iter().map(|g| g * inv));
    for row in &g_w2 {
        out.extend(row.iter().map(|g| g * inv));
    }
    out.extend(g_b2.iter().map(|g| g * inv));
    (loss * inv, out)
}

/// Accuracy plus the 5×5 confusion matrix (rows true, columns predicted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub correct: u64,
    pub total: u64,
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.correct as f64 / self.total as f64
    }
}

pub fn evaluate(model: &MLPModel, items: &[LabeledItem]) -> Evaluation {
    let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
    let mut correct = 0;
    for item in items {
        let pred = predict(model, &item.features);
        confusion[item.label.index()][pred.index()] += 1;
        if pred == item.label {
            correct += 1;
        }
    }
    Evaluation {
        correct,
        total: items.len() as u64,
        confusion,
    }
}

/// The source mixes each class is sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDefinitions {
    mixes: [DistinguishableMix; N_CLASSES],
}

impl ClassDefinitions {
    pub fn new(mixes: [DistinguishableMix; N_CLASSES]) -> ClassDefinitions {
        ClassDefinitions { mixes }
    }

    pub fn mix_for(&self, label: ClassLabel) -> &DistinguishableMix {
        &self.mixes[label.index()]
    }
}

/// Per-source mean photon number of the default class definitions.
pub const DEFAULT_SOURCE_MEAN: f64 = 1.2;

impl Default for ClassDefinitions {
    /// Every source carries mean 1.2 (the middle of the 1–1.5 bright-pixel
    /// regime); composite classes stack one mode per source, so totals differ
    /// across classes exactly as the statistics do.
    fn default() -> Self {
        let coherent = || ModeSpec::coherent(DEFAULT_SOURCE_MEAN.sqrt(), 0.0).unwrap();
        let thermal = || ModeSpec::thermal(DEFAULT_SOURCE_MEAN).unwrap();
        ClassDefinitions {
            mixes: [
                DistinguishableMix::new(vec![coherent()]).unwrap(),
                DistinguishableMix::new(vec![thermal()]).unwrap(),
                DistinguishableMix::new(vec![coherent(), thermal()]).unwrap(),
                DistinguishableMix::new(vec![thermal(), thermal()]).unwrap(),
                DistinguishableMix::new(vec![coherent(), thermal(), thermal()]).unwrap(),
            ],
        }
    }
}

/// Knobs for synthetic dataset generation.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub shots: u64,
    pub histograms_per_class: usize,
    pub seed: u64,
    /// Truncation for the sampled distributions (and so the feature support).
    pub n_max: usize,
    /// Log-uniform per-histogram brightness scale (lo, hi); None = fixed.
    pub brightness_jitter: Option<(f64, f64)>,
}

impl DatasetConfig {
    pub fn new(shots: u64, histograms_per_class: usize, seed: u64) -> DatasetConfig {
        DatasetConfig {
            shots,
            histograms_per_class,
            seed,
            n_max: DEFAULT_N_MAX,
            brightness_jitter: None,
        }
    }
}

/// Samples `histograms_per_class` histograms per class, converts to features,
/// shuffles, and splits 70/15/15.
///
/// Histogram (class c, index i) draws on stream c·per_class + i; the shuffle
/// has its own stream. Identical config → bitwise-identical dataset.
pub fn generate_dataset(defs: &ClassDefinitions, cfg: &DatasetConfig) -> Result<LabeledDataset> {
    let mut items = Vec::with_capacity(N_CLASSES * cfg.histograms_per_class);
    for label in ClassLabel::ALL {
        let base = defs.mix_for(label);
        let base_dist = distribution_mix(base, cfg.n_max);
        for i in 0..cfg.histograms_per_class {
            let stream = (label.index() * cfg.histograms_per_class + i) as u64;
            let mut rng = StreamRng::new(cfg.seed, stream);
            let hist = match cfg.brightness_jitter {
                None => draw_counts(&base_dist, cfg.shots, &mut rng),
                Some((lo, hi)) => {
                    let scale = rng.uniform_in(lo.ln(), hi.ln()).exp();
                    let dist = distribution_mix(&base.scaled(scale), cfg.n_max);
                    draw_counts(&dist, cfg.shots, &mut rng)
                }
            };
            items.push(LabeledItem {
                features: to_features(&hist)?,
                label,
            });
        }
    }
    // Fisher-Yates on a dedicated stream.
    let mut rng = StreamRng::new(cfg.seed, SHUFFLE_STREAM);
    for i in (1..items.len()).rev() {
        items.swap(i, rng.below(i + 1));
    }
    LabeledDataset::new(items, (0.70, 0.15, 0.15))
}
