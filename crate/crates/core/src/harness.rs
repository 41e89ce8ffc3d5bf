//! Training, evaluation, robustness sweeps and the two multi-model
//! deinterleaving strategies.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::cells::{gru_cell, lstm_cell};
use crate::autograd::{
    grad_check, load_checkpoint, random_projection, save_checkpoint, Adam, Graph, Tensor, Var, DEFAULT_EPS,
};
use crate::classical::{toas_from_dtoa, Baseline, ClassMapper};
use crate::dataset::{generate_dataset, ExperimentConfig, PredictionRecord, Sample, Split};
use crate::error::{Error, Result};
use crate::models::{Model, ModelKind, ModelSpec, Preset};
use crate::simulator::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub preset: Preset,
    pub experiment: u32,
    pub kind: ModelKind,
    /// When set, every sample is cut into consecutive windows of this many
    /// pulses and each window is trained on as its own sequence.
    pub crop: Option<usize>,
    /// Rescales each batch gradient to at most this global L2 norm.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    /// Accepted for interface completeness; no dropout is applied.
    pub dropout: f64,
}

impl TrainConfig {
    /// Declared defaults: Adam at 1e-3, batches of 16, 30 epochs.
    pub fn new(experiment: u32, kind: ModelKind) -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 0,
            preset: Preset::Desk,
            experiment,
            kind,
            crop: None,
            clip_norm: None,
            dropout: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::invalid("clip_norm must be positive"));
        }
        if self.crop == Some(0) {
            return Err(Error::invalid("crop length must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the per-sequence losses seen during the epoch.
    pub train_loss: f64,
    pub holdout_accuracy: Option<f64>,
}

/// Provenance stored in checkpoints next to the model spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub config: TrainConfig,
    pub train_samples: usize,
    pub final_loss: f64,
    pub curve: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub meta: TrainMeta,
}

impl TrainedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_checkpoint(path, &self.model.spec, &self.meta, &self.model.params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (spec, meta, params): (ModelSpec, TrainMeta, _) = load_checkpoint(path)?;
        let model = Model::from_parts(spec, params).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(TrainedModel { model, meta })
    }
}

fn check_labels(samples: &[Sample], num_classes: usize) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        if s.dtoa.len() != s.labels.len() {
            return Err(Error::invalid(format!("sample {i}: dtoa and labels differ in length")));
        }
        if let Some(l) = s.labels.iter().find(|l| **l >= num_classes) {
            return Err(Error::ClassMismatch(format!(
                "sample {i} has label {l} but the model has {num_classes} classes"
            )));
        }
    }
    Ok(())
}

/// Mean cross-entropy of one sequence and the gradients of every parameter.
pub fn sample_loss_and_grads(model: &Model, dtoa: &[f64], labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut g = Graph::new();
    let vars = model.bind(&mut g, true);
    let logits = model.forward(&mut g, &vars, dtoa)?;
    let probs = g.softmax(logits, 1)?;
    let ce = g.cross_entropy(probs, labels)?;
    let loss = g.mean(ce)?;
    g.backward(loss)?;
    let grads = vars
        .iter()
        .map(|v| g.grad(*v).expect("parameters require gradients").to_vec())
        .collect();
    Ok((g.value(loss).item(), grads))
}

/// Training units as `(sample, start, len)`: whole samples, or consecutive
/// windows when cropping. A trailing window shorter than `crop` is dropped.
fn training_units(data: &[Sample], crop: Option<usize>) -> Vec<(usize, usize, usize)> {
    let mut units = Vec::new();
    for (i, s) in data.iter().enumerate() {
        let n = s.dtoa.len();
        match crop {
            Some(len) if len < n => units.extend((0..n / len).map(|w| (i, w * len, len))),
            _ => units.push((i, 0, n)),
        }
    }
    units
}

/// Window of a sample re-encoded so that it starts with DTOA 0.
fn window(s: &Sample, start: usize, len: usize) -> (Vec<f64>, &[usize]) {
    let mut dtoa = s.dtoa[start..start + len].to_vec();
    dtoa[0] = 0.0;
    (dtoa, &s.labels[start..start + len])
}

fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) {
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= scale);
    }
}

/// Minimizes the mean per-pulse cross-entropy with Adam. Batches average
/// per-sample gradients in a fixed order, so a seed fixes the trajectory.
pub fn train(
    spec: ModelSpec,
    data: &[Sample],
    holdout: Option<&[Sample]>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainedModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    check_labels(data, spec.num_classes)?;
    let mut model = Model::init(spec, config.seed)?;
    let mut adam = Adam::new(config.learning_rate);
    let mut rng = rng_from_seed(config.seed ^ 0x5_eed0_f7a1);
    let mut units = training_units(data, config.crop);
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        units.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in units.chunks(config.batch_size) {
            let mut acc = model.params.zero_grads();
            for &(i, start, len) in batch {
                let (dtoa, labels) = window(&data[i], start, len);
                let (loss, grads) = sample_loss_and_grads(&model, &dtoa, labels)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, sample: i });
                }
                total += loss;
                for (a, g) in acc.iter_mut().zip(&grads) {
                    a.iter_mut().zip(g).for_each(|(x, y)| *x += y);
                }
            }
            let scale = 1.0 / batch.len() as f64;
            acc.iter_mut().flatten().for_each(|x| *x *= scale);
            if let Some(max_norm) = config.clip_norm {
                clip_global_norm(&mut acc, max_norm);
            }
            adam.step(&mut model.params, &acc)?;
        }
        let holdout_accuracy = match holdout {
            Some(h) if !h.is_empty() => Some(evaluate_model(&model, h)?.accuracy),
            _ => None,
        };
        let stats = EpochStats {
            epoch,
            train_loss: total / units.len() as f64,
            holdout_accuracy,
        };
        on_epoch(&stats);
        curve.push(stats);
    }
    let final_loss = curve.last().map_or(f64::NAN, |s| s.train_loss);
    Ok(TrainedModel {
        model,
        meta: TrainMeta {
            config: config.clone(),
            train_samples: data.len(),
            final_loss,
            curve,
        },
    })
}

/// Pooled per-pulse scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` for classes absent from the ground truth.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub samples: usize,
    pub pulses: u64,
}

impl Metrics {
    /// Accumulates `(truth, predicted)` label sequences, one pair per sample.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a [usize], &'a [usize])>,
        num_classes: usize,
    ) -> Result<Self> {
        let mut confusion = vec![vec![0u64; num_classes]; num_classes];
        let mut samples = 0;
        for (i, (truth, pred)) in pairs.into_iter().enumerate() {
            if truth.len() != pred.len() {
                return Err(Error::invalid(format!(
                    "sample {i}: {} labels but {} predictions",
                    truth.len(),
                    pred.len()
                )));
            }
            for (&t, &p) in truth.iter().zip(pred) {
                if t >= num_classes || p >= num_classes {
                    return Err(Error::ClassMismatch(format!(
                        "sample {i}: label pair ({t}, {p}) outside {num_classes} classes"
                    )));
                }
                confusion[t][p] += 1;
            }
            samples += 1;
        }
        let pulses: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..num_classes).map(|c| confusion[c][c]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let support: u64 = row.iter().sum();
                (support > 0).then(|| row[c] as f64 / support as f64)
            })
            .collect();
        Ok(Metrics {
            accuracy: if pulses == 0 { 0.0 } else { trace as f64 / pulses as f64 },
            per_class_accuracy,
            confusion,
            samples,
            pulses,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.confusion.len()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Scores predicted label sequences against the samples' labels.
pub fn evaluate(predictions: &[Vec<usize>], samples: &[Sample], num_classes: usize) -> Result<Metrics> {
    if predictions.len() != samples.len() {
        return Err(Error::invalid(format!(
            "{} prediction rows for {} samples",
            predictions.len(),
            samples.len()
        )));
    }
    Metrics::from_pairs(
        samples.iter().zip(predictions).map(|(s, p)| (&s.labels[..], &p[..])),
        num_classes,
    )
}

pub fn predict_all(model: &Model, samples: &[Sample]) -> Result<Vec<Vec<usize>>> {
    samples.iter().map(|s| model.predict_labels(&s.dtoa)).collect()
}

pub fn evaluate_model(model: &Model, samples: &[Sample]) -> Result<Metrics> {
    check_labels(samples, model.spec.num_classes)?;
    evaluate(&predict_all(model, samples)?, samples, model.spec.num_classes)
}

/// Prediction rows in the shared JSONL schema.
pub fn prediction_records(samples: &[Sample], predictions: &[Vec<usize>]) -> Vec<PredictionRecord> {
    samples
        .iter()
        .zip(predictions)
        .enumerate()
        .map(|(index, (s, labels))| PredictionRecord {
            index,
            seed: s.meta.seed,
            labels: labels.clone(),
        })
        .collect()
}

/// Class labels a classical deinterleaver assigns to one sample.
pub fn baseline_labels(baseline: &Baseline, mapper: &ClassMapper, dtoa: &[f64]) -> Result<Vec<usize>> {
    let result = baseline.run(&toas_from_dtoa(dtoa))?;
    Ok(mapper.labels(&result))
}

pub fn baseline_predict_all(baseline: &Baseline, config: &ExperimentConfig, samples: &[Sample]) -> Result<Vec<Vec<usize>>> {
    let mapper = ClassMapper::new(config);
    samples.iter().map(|s| baseline_labels(baseline, &mapper, &s.dtoa)).collect()
}

/// Impairment pattern of a robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// Pulse loss only.
    #[serde(rename = "a")]
    A,
    /// Noise pulses only.
    #[serde(rename = "b")]
    B,
    /// Equal loss and noise rates.
    #[serde(rename = "c")]
    C,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::A => "a",
            Condition::B => "b",
            Condition::C => "c",
        }
    }

    /// `(rho_l, rho_n)` at sweep value `rho`.
    pub fn rates(self, rho: f64) -> (f64, f64) {
        match self {
            Condition::A => (rho, 0.0),
            Condition::B => (0.0, rho),
            Condition::C => (rho, rho),
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Condition::A),
            "b" | "B" => Ok(Condition::B),
            "c" | "C" => Ok(Condition::C),
            _ => Err(Error::invalid(format!("unknown condition `{s}` (a | b | c)"))),
        }
    }
}

/// `0, step, 2 step, .. <= max`.
pub fn rho_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub experiment: u32,
    pub condition: Condition,
    pub rho_l: f64,
    pub rho_n: f64,
    pub accuracy: f64,
    pub n_pulses: u64,
}

pub const SWEEP_HEADER: &str = "model,experiment,condition,rho_l,rho_n,accuracy,n_pulses";

/// Evaluates `predict` on a fresh fixed-rate test set at every grid point.
/// Every grid point reuses the same sample seeds.
pub fn sweep(
    name: &str,
    config: &ExperimentConfig,
    condition: Condition,
    grid: &[f64],
    count: usize,
    seed: u64,
    mut predict: impl FnMut(&[f64]) -> Result<Vec<usize>>,
) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&rho| {
            let (rho_l, rho_n) = condition.rates(rho);
            let fixed = config.clone().with_fixed_rates(rho_l, rho_n);
            let samples = generate_dataset(&fixed, count, seed, Split::Test)?;
            let predictions = samples.iter().map(|s| predict(&s.dtoa)).collect::<Result<Vec<_>>>()?;
            let m = evaluate(&predictions, &samples, config.num_classes())?;
            Ok(SweepRow {
                model: name.to_string(),
                experiment: config.id,
                condition,
                rho_l,
                rho_n,
                accuracy: m.accuracy,
                n_pulses: m.pulses,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.model,
            r.experiment,
            r.condition.name(),
            r.rho_l,
            r.rho_n,
            r.accuracy,
            r.n_pulses
        );
    }
    out
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, sweep_csv(rows)).map_err(|e| Error::io(path, e))
}

/// One joint-schema model labels every pulse in a single pass.
pub fn parallel_deinterleave(model: &Model, config: &ExperimentConfig, dtoa: &[f64]) -> Result<Vec<usize>> {
    if model.spec.num_classes != config.num_classes() {
        return Err(Error::ClassMismatch(format!(
            "model has {} classes, experiment {} has {}",
            model.spec.num_classes,
            config.id,
            config.num_classes()
        )));
    }
    model.predict_labels(dtoa)
}

/// DTOA of the pulses at `indices` (ascending), recomputed over the
/// sub-stream with a leading 0.
pub fn sub_stream_dtoa(dtoa: &[f64], indices: &[usize]) -> Vec<f64> {
    let toas = toas_from_dtoa(dtoa);
    let mut out = Vec::with_capacity(indices.len());
    let mut prev = None;
    for &i in indices {
        out.push(prev.map_or(0.0, |p| toas[i] - p));
        prev = Some(toas[i]);
    }
    out
}

/// Second-stage model for the pulses of one modulation mode. Its last class
/// is its noise class.
#[derive(Debug, Clone)]
pub struct Stage2 {
    pub mode_class: usize,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteOutput {
    pub mode_class: usize,
    /// Positions of the routed pulses in the full stream.
    pub indices: Vec<usize>,
    pub stage2_labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerialOutput {
    /// Flattened `(mode, range)` class per pulse; the last id is noise.
    pub labels: Vec<usize>,
    pub routes: Vec<RouteOutput>,
    /// Modes that received no pulses and were not run.
    pub skipped_modes: Vec<usize>,
    pub num_classes: usize,
}

/// Two-stage labeling from given stage-1 mode labels. Route `r` owns final
/// ids `offset_r .. offset_r + C_r - 1`; stage-2 noise, stage-1 noise and
/// modes without a route all map to the final noise id.
pub fn serial_from_modes(mode_labels: &[usize], stage2: &[Stage2], dtoa: &[f64]) -> Result<SerialOutput> {
    if mode_labels.len() != dtoa.len() {
        return Err(Error::invalid("one stage-1 label per pulse is required"));
    }
    let num_classes = stage2.iter().map(|s| s.model.spec.num_classes - 1).sum::<usize>() + 1;
    let noise = num_classes - 1;
    let mut labels = vec![noise; dtoa.len()];
    let mut routes = Vec::new();
    let mut skipped_modes = Vec::new();
    let mut offset = 0;
    for s in stage2 {
        let c = s.model.spec.num_classes;
        let indices: Vec<usize> = (0..dtoa.len()).filter(|&i| mode_labels[i] == s.mode_class).collect();
        if indices.is_empty() {
            skipped_modes.push(s.mode_class);
        } else {
            let stage2_labels = s.model.predict_labels(&sub_stream_dtoa(dtoa, &indices))?;
            for (&i, &l) in indices.iter().zip(&stage2_labels) {
                if l + 1 < c {
                    labels[i] = offset + l;
                }
            }
            routes.push(RouteOutput {
                mode_class: s.mode_class,
                indices,
                stage2_labels,
            });
        }
        offset += c - 1;
    }
    Ok(SerialOutput {
        labels,
        routes,
        skipped_modes,
        num_classes,
    })
}

/// Stage-1 model labels modes, then each mode's sub-stream goes to its
/// stage-2 model.
pub fn serial_deinterleave(stage1: &Model, stage2: &[Stage2], dtoa: &[f64]) -> Result<SerialOutput> {
    let modes = stage1.predict_labels(dtoa)?;
    serial_from_modes(&modes, stage2, dtoa)
}

/// Class of `config` whose target range contains `pri`, or the nearest one.
pub fn range_class(config: &ExperimentConfig, pri: f64) -> usize {
    let distance = |(lo, hi): (f64, f64)| if pri < lo { lo - pri } else if pri > hi { pri - hi } else { 0.0 };
    config
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.targets.is_empty())
        .map(|(i, c)| (i, c.targets.iter().map(|t| distance(t.pri_range)).fold(f64::INFINITY, f64::min)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(config.noise_class, |(i, _)| i)
}

/// One line of a gradient-check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub name: String,
    /// Worst relative error over all seeds.
    pub max_rel_error: f64,
    pub seeds: usize,
}

fn random_tensor<R: Rng>(shape: &[usize], rng: &mut R) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape and data agree")
}

type Probe = Box<dyn Fn(&mut Graph, &[Var], u64) -> Result<Var>>;

/// Finite-difference checks of every tape op and of each model kind at
/// short sequence length, `seeds` random draws each.
pub fn gradcheck_suite(base_seed: u64, seeds: usize) -> Result<Vec<GradCheckEntry>> {
    let project = |g: &mut Graph, v: Var, seed: u64| random_projection(g, v, &mut rng_from_seed(seed));
    let unary = |f: fn(&mut Graph, Var) -> Var| -> Probe {
        Box::new(move |g, p, s| {
            let y = f(g, p[0]);
            random_projection(g, y, &mut rng_from_seed(s))
        })
    };
    let ops: Vec<(&str, Vec<Vec<usize>>, Probe)> = vec![
        ("matmul", vec![vec![3, 4], vec![4, 2]], Box::new(move |g, p, s| {
            let y = g.matmul(p[0], p[1])?;
            project(g, y, s)
        })),
        ("add_row_broadcast", vec![vec![3, 4], vec![4]], Box::new(move |g, p, s| {
            let y = g.add(p[0], p[1])?;
            project(g, y, s)
        })),
        ("sub", vec![vec![2, 3], vec![2, 3]], Box::new(move |g, p, s| {
            let y = g.sub(p[0], p[1])?;
            project(g, y, s)
        })),
        ("mul", vec![vec![2, 3], vec![2, 3]], Box::new(move |g, p, s| {
            let y = g.mul(p[0], p[1])?;
            project(g, y, s)
        })),
        ("concat", vec![vec![2, 3], vec![2, 2]], Box::new(move |g, p, s| {
            let y = g.concat(&[p[0], p[1]], 1)?;
            project(g, y, s)
        })),
        ("slice", vec![vec![4, 3]], Box::new(move |g, p, s| {
            let y = g.slice(p[0], 0, 1, 2)?;
            project(g, y, s)
        })),
        ("transpose", vec![vec![2, 5]], Box::new(move |g, p, s| {
            let y = g.transpose(p[0])?;
            project(g, y, s)
        })),
        ("sigmoid", vec![vec![3, 3]], unary(Graph::sigmoid)),
        ("tanh", vec![vec![3, 3]], unary(Graph::tanh)),
        ("relu", vec![vec![3, 3]], unary(Graph::relu)),
        ("softmax", vec![vec![3, 4]], Box::new(move |g, p, s| {
            let y = g.softmax(p[0], 1)?;
            project(g, y, s)
        })),
        ("sum_mean", vec![vec![3, 4]], Box::new(|g, p, _| {
            let a = g.sum(p[0]);
            let b = g.mean(p[0])?;
            let y = g.mul(a, b)?;
            Ok(g.sum(y))
        })),
        ("conv1d_dilated", vec![vec![2, 9], vec![3, 2, 3], vec![3]], Box::new(move |g, p, s| {
            let d = 1 << (s % 3);
            let y = g.conv1d_dilated(p[0], p[1], Some(p[2]), d)?;
            project(g, y, s)
        })),
        ("softmax_cross_entropy", vec![vec![5, 4]], Box::new(|g, p, s| {
            let probs = g.softmax(p[0], 1)?;
            let targets: Vec<usize> = (0..5).map(|i| (i + s as usize) % 4).collect();
            let ce = g.cross_entropy(probs, &targets)?;
            g.mean(ce)
        })),
        ("lstm_sequence", vec![vec![5, 2], vec![5, 12], vec![12]], Box::new(move |g, p, s| {
            let y = g.lstm_sequence(p[0], p[1], p[2], s % 2 == 1)?;
            project(g, y, s)
        })),
        ("gru_sequence", vec![vec![5, 2], vec![5, 9], vec![9]], Box::new(move |g, p, s| {
            let y = g.gru_sequence(p[0], p[1], p[2], s % 2 == 1)?;
            project(g, y, s)
        })),
        ("lstm_cell_composed", vec![vec![1, 2], vec![1, 3], vec![1, 3], vec![5, 12], vec![12]], Box::new(move |g, p, s| {
            let (h, c) = lstm_cell(g, p[0], p[1], p[2], p[3], p[4])?;
            let y = g.concat(&[h, c], 1)?;
            project(g, y, s)
        })),
        ("gru_cell_composed", vec![vec![1, 2], vec![1, 3], vec![5, 9], vec![9]], Box::new(move |g, p, s| {
            let y = gru_cell(g, p[0], p[1], p[2], p[3])?;
            project(g, y, s)
        })),
    ];
    let mut report = Vec::new();
    for (name, shapes, probe) in &ops {
        let mut worst: f64 = 0.0;
        for k in 0..seeds {
            let seed = base_seed.wrapping_mul(1000).wrapping_add(k as u64);
            let mut rng = rng_from_seed(seed);
            let params: Vec<Tensor> = shapes.iter().map(|s| random_tensor(s, &mut rng)).collect();
            let f = |g: &mut Graph, p: &[Var]| probe(g, p, seed);
            worst = worst.max(grad_check(&f, &params, DEFAULT_EPS, None, &mut rng)?);
        }
        report.push(GradCheckEntry { name: name.to_string(), max_rel_error: worst, seeds });
    }
    for kind in [ModelKind::Blstm, ModelKind::Bgru, ModelKind::Dcn] {
        let mut worst: f64 = 0.0;
        for k in 0..seeds {
            let seed = base_seed.wrapping_mul(1000).wrapping_add(k as u64);
            let spec = match kind {
                ModelKind::Dcn => ModelSpec::dcn(2, 3),
                ModelKind::Blstm => ModelSpec::blstm(3, 3),
                ModelKind::Bgru => ModelSpec::bgru(3, 3),
            };
            let mut model = Model::init(spec, seed)?;
            let mut rng = rng_from_seed(seed ^ 0xfeed);
            // random biases keep ReLU inputs off the kink at zero
            for t in model.params.tensors_mut().filter(|t| t.rank() == 1) {
                t.data_mut().iter_mut().for_each(|v| *v += rng.random_range(-0.5..0.5));
            }
            let len = 4 + (seed % 13) as usize;
            let dtoa: Vec<f64> = (0..len).map(|i| if i == 0 { 0.0 } else { rng.random_range(1.0..100.0) }).collect();
            let labels: Vec<usize> = (0..len).map(|_| rng.random_range(0..3)).collect();
            let params: Vec<Tensor> = model.params.tensors().cloned().collect();
            let f = |g: &mut Graph, vars: &[Var]| {
                let z = model.forward(g, vars, &dtoa)?;
                let p = g.softmax(z, 1)?;
                let ce = g.cross_entropy(p, &labels)?;
                g.mean(ce)
            };
            worst = worst.max(grad_check(&f, &params, DEFAULT_EPS, Some(40), &mut rng)?);
        }
        report.push(GradCheckEntry {
            name: format!("model_{}", kind.name().to_ascii_lowercase()),
            max_rel_error: worst,
            seeds,
        });
    }
    Ok(report)
}
