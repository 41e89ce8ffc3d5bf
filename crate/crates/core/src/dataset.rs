//! Experiment configurations, labeled sample drawing and JSONL serialization.
//!
//! Five built-in experiments define the class schemas used for training:
//! PRI modulation mode (1), constant-PRI value range (2), staggered-PRI value
//! range (3), mode and range jointly (4) and mode with two emitters per class (5).
//! Class ids are dense from zero and the noise class is always last.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{
    compute_dtoa, rng_from_seed, simulate_stream, EmitterSpec, NoiseSpec, PlacedEmitter,
    DEFAULT_JITTER_SIGMA,
};

/// Default number of pulses per sample.
pub const DEFAULT_SEQ_LEN: usize = 1000;
pub const DEFAULT_TRAIN_SIZE: usize = 2000;
pub const DEFAULT_TEST_SIZE: usize = 500;

/// Parameter space of one emitter's modulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModeTemplate {
    Constant,
    /// Inclusive ranges for K (groups per period) and J (pulses per group).
    DwellSwitch {
        groups: (usize, usize),
        pulses_per_group: (usize, usize),
    },
    /// Inclusive range for M (values per period).
    Staggered { values_per_period: (usize, usize) },
}

impl ModeTemplate {
    pub fn name(&self) -> &'static str {
        match self {
            ModeTemplate::Constant => "constant",
            ModeTemplate::DwellSwitch { .. } => "dwell_switch",
            ModeTemplate::Staggered { .. } => "staggered",
        }
    }
}

/// One emitter slot of a class: a modulation template and its PRI value range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTemplate {
    #[serde(flatten)]
    pub mode: ModeTemplate,
    pub pri_range: (f64, f64),
}

impl TargetTemplate {
    pub fn constant(lo: f64, hi: f64) -> Self {
        TargetTemplate {
            mode: ModeTemplate::Constant,
            pri_range: (lo, hi),
        }
    }

    pub fn staggered(m: (usize, usize), lo: f64, hi: f64) -> Self {
        TargetTemplate {
            mode: ModeTemplate::Staggered {
                values_per_period: m,
            },
            pri_range: (lo, hi),
        }
    }

    pub fn dwell_switch(k: (usize, usize), j: (usize, usize), lo: f64, hi: f64) -> Self {
        TargetTemplate {
            mode: ModeTemplate::DwellSwitch {
                groups: k,
                pulses_per_group: j,
            },
            pri_range: (lo, hi),
        }
    }

    /// Draws an emitter uniformly from this template. Stagger and dwell
    /// values are i.i.d. over the PRI range.
    pub fn draw<R: Rng>(&self, class_label: usize, rng: &mut R) -> EmitterSpec {
        let (lo, hi) = self.pri_range;
        let value = |rng: &mut R| rng.random_range(lo..hi);
        match &self.mode {
            ModeTemplate::Constant => EmitterSpec::constant(value(rng), class_label),
            ModeTemplate::DwellSwitch {
                groups,
                pulses_per_group,
            } => {
                let k = rng.random_range(groups.0..=groups.1);
                let j = rng.random_range(pulses_per_group.0..=pulses_per_group.1);
                let pris = (0..k).map(|_| value(rng)).collect();
                EmitterSpec::dwell_switch(pris, j, class_label)
            }
            ModeTemplate::Staggered { values_per_period } => {
                let m = rng.random_range(values_per_period.0..=values_per_period.1);
                let pris = (0..m).map(|_| value(rng)).collect();
                EmitterSpec::staggered(pris, class_label)
            }
        }
    }
}

/// What a class means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantic {
    ModMode,
    PriRange,
    ModModePlusRange,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: String,
    pub semantic: Semantic,
    /// One entry per emitter of this class in every sample; empty for noise.
    pub targets: Vec<TargetTemplate>,
}

impl ClassDef {
    fn new(name: &str, semantic: Semantic, targets: Vec<TargetTemplate>) -> Self {
        ClassDef {
            name: name.to_string(),
            semantic,
            targets,
        }
    }

    fn noise() -> Self {
        ClassDef::new("noise", Semantic::Noise, Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: u32,
    pub classes: Vec<ClassDef>,
    pub rho_l_range: (f64, f64),
    pub rho_n_range: (f64, f64),
    pub seq_len: usize,
    pub noise_class: usize,
    pub jitter_sigma: f64,
}

const DS_GROUPS: (usize, usize) = (4, 6);
const DS_PULSES: (usize, usize) = (4, 6);
const STAGGER_M: (usize, usize) = (3, 10);
const STAGGER_M7: (usize, usize) = (7, 7);

/// Built-in class schema and training ranges of experiments 1 to 5.
pub fn builtin_config(experiment_id: u32) -> Result<ExperimentConfig> {
    use Semantic::*;
    let (classes, rho) = match experiment_id {
        1 => (
            vec![
                ClassDef::new("constant", ModMode, vec![TargetTemplate::constant(20.0, 100.0)]),
                ClassDef::new(
                    "dwell_switch",
                    ModMode,
                    vec![TargetTemplate::dwell_switch(DS_GROUPS, DS_PULSES, 20.0, 100.0)],
                ),
                ClassDef::new(
                    "staggered",
                    ModMode,
                    vec![TargetTemplate::staggered(STAGGER_M, 20.0, 100.0)],
                ),
                ClassDef::noise(),
            ],
            (0.0, 0.25),
        ),
        2 => (
            [(20.0, 40.0), (40.0, 60.0), (60.0, 80.0), (80.0, 100.0)]
                .iter()
                .map(|&(a, b)| {
                    ClassDef::new(
                        &format!("constant_{a}_{b}"),
                        PriRange,
                        vec![TargetTemplate::constant(a, b)],
                    )
                })
                .chain(std::iter::once(ClassDef::noise()))
                .collect(),
            (0.0, 0.5),
        ),
        3 => (
            [(20.0, 40.0), (40.0, 70.0), (70.0, 100.0)]
                .iter()
                .map(|&(a, b)| {
                    ClassDef::new(
                        &format!("staggered_{a}_{b}"),
                        PriRange,
                        vec![TargetTemplate::staggered(STAGGER_M7, a, b)],
                    )
                })
                .chain(std::iter::once(ClassDef::noise()))
                .collect(),
            (0.0, 0.5),
        ),
        4 => (
            vec![
                ClassDef::new(
                    "constant_20_60",
                    ModModePlusRange,
                    vec![TargetTemplate::constant(20.0, 60.0)],
                ),
                ClassDef::new(
                    "constant_60_100",
                    ModModePlusRange,
                    vec![TargetTemplate::constant(60.0, 100.0)],
                ),
                ClassDef::new(
                    "staggered",
                    ModMode,
                    vec![TargetTemplate::staggered(STAGGER_M, 20.0, 100.0)],
                ),
                ClassDef::noise(),
            ],
            (0.0, 0.5),
        ),
        5 => (
            vec![
                ClassDef::new(
                    "constant",
                    ModMode,
                    vec![
                        TargetTemplate::constant(20.0, 60.0),
                        TargetTemplate::constant(60.0, 100.0),
                    ],
                ),
                ClassDef::new(
                    "staggered",
                    ModMode,
                    vec![
                        TargetTemplate::staggered(STAGGER_M7, 20.0, 60.0),
                        TargetTemplate::staggered(STAGGER_M7, 60.0, 100.0),
                    ],
                ),
                ClassDef::noise(),
            ],
            (0.0, 0.25),
        ),
        other => return Err(Error::invalid(format!("unknown experiment id {other}"))),
    };
    let noise_class = classes.len() - 1;
    Ok(ExperimentConfig {
        id: experiment_id,
        classes,
        rho_l_range: rho,
        rho_n_range: rho,
        seq_len: DEFAULT_SEQ_LEN,
        noise_class,
        jitter_sigma: DEFAULT_JITTER_SIGMA,
    })
}

impl ExperimentConfig {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_targets(&self) -> usize {
        self.classes.iter().map(|c| c.targets.len()).sum()
    }

    pub fn with_seq_len(mut self, seq_len: usize) -> Self {
        self.seq_len = seq_len;
        self
    }

    /// Fixes both rates for every drawn sample.
    pub fn with_fixed_rates(mut self, rho_l: f64, rho_n: f64) -> Self {
        self.rho_l_range = (rho_l, rho_l);
        self.rho_n_range = (rho_n, rho_n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len < 2 {
            return Err(Error::invalid("seq_len must be at least 2"));
        }
        if self.classes.is_empty() || self.noise_class >= self.classes.len() {
            return Err(Error::invalid("noise class outside the class list"));
        }
        if self.num_targets() == 0 {
            return Err(Error::invalid("configuration has no target emitters"));
        }
        for (name, (lo, hi)) in [("rho_l", self.rho_l_range), ("rho_n", self.rho_n_range)] {
            if !(0.0 <= lo && lo <= hi && hi < 1.0) {
                return Err(Error::invalid(format!("{name} range ({lo}, {hi}) outside [0,1)")));
            }
        }
        for c in &self.classes {
            for t in &c.targets {
                let (a, b) = t.pri_range;
                if !(0.0 < a && a < b) {
                    return Err(Error::invalid(format!(
                        "class {}: empty PRI range ({a}, {b})",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything needed to regenerate a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub experiment: u32,
    pub seed: u64,
    pub rho_l: f64,
    pub rho_n: f64,
    pub emitters: Vec<PlacedEmitter>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub dtoa: Vec<f64>,
    pub labels: Vec<usize>,
    pub meta: SampleMeta,
}

fn uniform_in<R: Rng>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.0 < range.1 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Draws one labeled sample. Rates come from the config ranges.
pub fn draw_sample(config: &ExperimentConfig, seed: u64) -> Result<Sample> {
    draw_sample_with_sources(config, seed).map(|(sample, _)| sample)
}

/// Like [`draw_sample`], also returning the index into `meta.emitters` of the
/// emitter behind every pulse (`None` for noise).
///
/// The stream is simulated with emitter indices as labels and mapped to class
/// ids afterwards. Emitters are listed class by class, so index order agrees
/// with class order and the interleaving tie rule gives the same stream.
pub fn draw_sample_with_sources(config: &ExperimentConfig, seed: u64) -> Result<(Sample, Vec<Option<usize>>)> {
    config.validate()?;
    let mut rng = rng_from_seed(seed);
    let rho_l = uniform_in(config.rho_l_range, &mut rng);
    let rho_n = uniform_in(config.rho_n_range, &mut rng);
    let mut emitters = Vec::with_capacity(config.num_targets());
    let mut by_source = Vec::with_capacity(config.num_targets());
    for (class_id, class) in config.classes.iter().enumerate() {
        for target in &class.targets {
            let mut spec = target.draw(class_id, &mut rng);
            let placed = PlacedEmitter::random_phase(spec.clone(), &mut rng);
            spec.class_label = by_source.len();
            by_source.push(PlacedEmitter {
                spec,
                t0: placed.t0,
            });
            emitters.push(placed);
        }
    }
    let noise = NoiseSpec {
        rho_l,
        rho_n,
        jitter_sigma: config.jitter_sigma,
    };
    let n_sources = by_source.len();
    let stream = simulate_stream(&by_source, &noise, n_sources, config.seq_len, &mut rng)?;
    let (dtoa, source_labels) = compute_dtoa(&stream)?;
    let sources: Vec<Option<usize>> = source_labels
        .iter()
        .map(|&s| (s < n_sources).then_some(s))
        .collect();
    let labels = sources
        .iter()
        .map(|s| s.map_or(config.noise_class, |i| emitters[i].spec.class_label))
        .collect();
    let sample = Sample {
        dtoa,
        labels,
        meta: SampleMeta {
            experiment: config.id,
            seed,
            rho_l,
            rho_n,
            emitters,
        },
    };
    Ok((sample, sources))
}

/// Which partition a sample seed belongs to. Seed ranges never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

pub fn sample_seed(base_seed: u64, split: Split, index: usize) -> u64 {
    let tag = match split {
        Split::Train => 0u64,
        Split::Test => 1u64 << 31,
    };
    (base_seed << 32) | tag | (index as u64 & 0x7fff_ffff)
}

pub fn generate_dataset(
    config: &ExperimentConfig,
    count: usize,
    base_seed: u64,
    split: Split,
) -> Result<Vec<Sample>> {
    (0..count)
        .map(|i| draw_sample(config, sample_seed(base_seed, split, i)))
        .collect()
}

/// Renders with 17 significant digits; parses back to the same bits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    dtoa: Vec<f64>,
    labels: Vec<usize>,
    meta: SampleMeta,
}

fn sample_line(sample: &Sample) -> Result<String> {
    let mut line = String::with_capacity(sample.dtoa.len() * 24 + 256);
    line.push_str("{\"dtoa\":[");
    for (i, x) in sample.dtoa.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&format_f64(*x));
    }
    line.push_str("],\"labels\":");
    line.push_str(&serde_json::to_string(&sample.labels)?);
    line.push_str(",\"meta\":");
    line.push_str(&serde_json::to_string(&sample.meta)?);
    line.push('}');
    Ok(line)
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub(crate) fn create_writer(path: &Path) -> Result<Box<dyn Write>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(if is_gz(path) {
        Box::new(BufWriter::new(GzEncoder::new(file, Compression::default())))
    } else {
        Box::new(BufWriter::new(file))
    })
}

pub(crate) fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Read> = if is_gz(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(inner)))
}

pub fn write_jsonl(samples: &[Sample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    for s in samples {
        writeln!(w, "{}", sample_line(s)?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads JSON lines, one record per line. Blank lines are skipped.
///
/// A line that fails to parse reports its own number and the last line that
/// did parse.
pub(crate) fn read_lines_as<T, F>(path: &Path, mut convert: F) -> Result<Vec<T>>
where
    F: FnMut(&str) -> std::result::Result<T, String>,
{
    let reader = open_reader(path)?;
    let mut out = Vec::new();
    let mut last_complete = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match convert(&line) {
            Ok(v) => {
                out.push(v);
                last_complete = line_no;
            }
            Err(message) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("{message} (last complete line: {last_complete})"),
                })
            }
        }
    }
    Ok(out)
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    read_lines_as(path.as_ref(), |line| {
        let rec: SampleRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if rec.dtoa.len() != rec.labels.len() {
            return Err(format!(
                "field `labels`: length {} differs from `dtoa` length {}",
                rec.labels.len(),
                rec.dtoa.len()
            ));
        }
        Ok(Sample {
            dtoa: rec.dtoa,
            labels: rec.labels,
            meta: rec.meta,
        })
    })
}

/// Per-pulse predicted labels for one sample, shared by models and baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub seed: u64,
    pub labels: Vec<usize>,
}

pub fn write_predictions_jsonl(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions_jsonl(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    read_lines_as(path.as_ref(), |line| {
        serde_json::from_str(line).map_err(|e| e.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_schemas() {
        let c = builtin_config(1).unwrap();
        assert_eq!(c.num_classes(), 4);
        assert!(c.classes[..3].iter().all(|k| k.targets.len() == 1));
        assert_eq!(c.rho_l_range, (0.0, 0.25));

        let c = builtin_config(2).unwrap();
        assert_eq!(c.num_classes(), 5);
        let ranges: Vec<_> = c.classes[..4].iter().map(|k| k.targets[0].pri_range).collect();
        assert_eq!(
            ranges,
            vec![(20.0, 40.0), (40.0, 60.0), (60.0, 80.0), (80.0, 100.0)]
        );
        assert_eq!(c.rho_n_range, (0.0, 0.5));

        let c = builtin_config(3).unwrap();
        assert_eq!(c.num_classes(), 4);
        assert!(c.classes[..3].iter().all(|k| k.targets[0].mode
            == ModeTemplate::Staggered {
                values_per_period: (7, 7)
            }));

        let c = builtin_config(4).unwrap();
        assert_eq!(c.num_classes(), 4);

        let c = builtin_config(5).unwrap();
        assert_eq!(c.num_classes(), 3);
        assert_eq!(c.classes[0].targets.len(), 2);
        assert_eq!(c.classes[1].targets.len(), 2);
        assert_eq!(c.noise_class, 2);
        assert_eq!(c.rho_l_range, (0.0, 0.25));

        assert!(builtin_config(0).is_err());
        assert!(builtin_config(6).is_err());
    }

    #[test]
    fn sample_contract() {
        let c = builtin_config(1).unwrap();
        let s = draw_sample(&c, 42).unwrap();
        assert_eq!(s.dtoa.len(), 1000);
        assert_eq!(s.labels.len(), 1000);
        assert_eq!(s.dtoa[0], 0.0);
        assert!(s.dtoa.iter().all(|&d| d >= 0.0));
        assert!(s.labels.iter().all(|&l| l < 4));
        assert_eq!(s.meta.emitters.len(), 3);
        assert_eq!(draw_sample(&c, 42).unwrap(), s);
    }

    #[test]
    fn split_seeds_are_disjoint() {
        let a = sample_seed(7, Split::Train, 5);
        let b = sample_seed(7, Split::Test, 5);
        assert_ne!(a, b);
        assert_ne!(sample_seed(7, Split::Train, 0), sample_seed(8, Split::Train, 0));
    }

    #[test]
    fn seventeen_digit_rendering() {
        assert_eq!(format_f64(50.0), "5.0000000000000000e1");
        for x in [0.0, 0.1, 1.0 / 3.0, 99.99999999999, 1e-300, 12345.678901234567] {
            let back: f64 = format_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let c = builtin_config(2).unwrap().with_seq_len(1);
        assert!(draw_sample(&c, 1).is_err());
        let mut c = builtin_config(2).unwrap();
        c.rho_l_range = (0.2, 1.0);
        assert!(draw_sample(&c, 1).is_err());
    }
}
