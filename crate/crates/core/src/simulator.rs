//! Pulse-train simulation.
//!
//! Emitters produce PRI sequences under one of three modulation patterns
//! (constant, dwell & switch, staggered). A PRI sequence becomes a TOA train,
//! receives Gaussian measurement jitter and Bernoulli pulse loss, and is then
//! merged with the other emitters and with uniformly distributed noise pulses.
//! The network observable is the DTOA of the merged stream with a leading zero.
//!
//! Times are dimensionless units (nominally microseconds): PRIs live in
//! (20, 100) and the default jitter is 0.1.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seedable generator used by every stochastic operation in the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Default TOA measurement jitter (standard deviation).
pub const DEFAULT_JITTER_SIGMA: f64 = 0.1;

/// PRI modulation pattern of an emitter, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PriPattern {
    Constant {
        pri: f64,
    },
    /// `group_pris` holds the K dwell values; each is held for `pulses_per_group` (J) pulses.
    DwellSwitch {
        group_pris: Vec<f64>,
        pulses_per_group: usize,
    },
    /// `pris` holds the M values cycled through each period.
    Staggered {
        pris: Vec<f64>,
    },
}

impl PriPattern {
    pub fn mode_name(&self) -> &'static str {
        match self {
            PriPattern::Constant { .. } => "constant",
            PriPattern::DwellSwitch { .. } => "dwell_switch",
            PriPattern::Staggered { .. } => "staggered",
        }
    }

    /// All distinct PRI values the pattern can emit.
    pub fn values(&self) -> &[f64] {
        match self {
            PriPattern::Constant { pri } => std::slice::from_ref(pri),
            PriPattern::DwellSwitch { group_pris, .. } => group_pris,
            PriPattern::Staggered { pris } => pris,
        }
    }

    /// Number of PRIs after which the sequence repeats.
    pub fn period_len(&self) -> usize {
        match self {
            PriPattern::Constant { .. } => 1,
            PriPattern::DwellSwitch {
                group_pris,
                pulses_per_group,
            } => group_pris.len() * pulses_per_group,
            PriPattern::Staggered { pris } => pris.len(),
        }
    }

    pub fn max_pri(&self) -> f64 {
        self.values().iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_pri(&self) -> f64 {
        self.values().iter().copied().fold(f64::MAX, f64::min)
    }

    pub fn mean_pri(&self) -> f64 {
        let v = self.values();
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    #[serde(flatten)]
    pub pattern: PriPattern,
    pub class_label: usize,
}

impl EmitterSpec {
    pub fn constant(pri: f64, class_label: usize) -> Self {
        EmitterSpec {
            pattern: PriPattern::Constant { pri },
            class_label,
        }
    }

    pub fn dwell_switch(group_pris: Vec<f64>, pulses_per_group: usize, class_label: usize) -> Self {
        EmitterSpec {
            pattern: PriPattern::DwellSwitch {
                group_pris,
                pulses_per_group,
            },
            class_label,
        }
    }

    pub fn staggered(pris: Vec<f64>, class_label: usize) -> Self {
        EmitterSpec {
            pattern: PriPattern::Staggered { pris },
            class_label,
        }
    }

    fn validate(&self) -> Result<()> {
        let values = self.pattern.values();
        if values.is_empty() {
            return Err(Error::invalid(format!(
                "{} emitter has no PRI values",
                self.pattern.mode_name()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!("nonpositive PRI {v}")));
        }
        if let PriPattern::DwellSwitch {
            pulses_per_group, ..
        } = self.pattern
        {
            if pulses_per_group == 0 {
                return Err(Error::invalid("dwell & switch needs J >= 1"));
            }
        }
        Ok(())
    }
}

/// Single pulse: time of arrival and source class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub toa: f64,
    pub label: usize,
}

/// Time-ordered pulse sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseStream {
    pub pulses: Vec<Pulse>,
}

impl PulseStream {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        PulseStream { pulses }
    }

    pub fn from_toas(toas: &[f64], label: usize) -> Self {
        PulseStream {
            pulses: toas.iter().map(|&toa| Pulse { toa, label }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn toas(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.toa).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.pulses.iter().map(|p| p.label).collect()
    }

    /// Stable sort by TOA, lower label first on ties, then insertion order.
    pub fn sort(&mut self) {
        self.pulses
            .sort_by(|a, b| a.toa.total_cmp(&b.toa).then(a.label.cmp(&b.label)));
    }

    pub fn is_sorted(&self) -> bool {
        self.pulses.windows(2).all(|w| w[0].toa <= w[1].toa)
    }

    /// Sub-stream of pulses carrying `label`, in order.
    pub fn of_label(&self, label: usize) -> PulseStream {
        PulseStream {
            pulses: self
                .pulses
                .iter()
                .filter(|p| p.label == label)
                .copied()
                .collect(),
        }
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("PRI count must be at least 1"));
    }
    Ok(())
}

pub fn gen_constant_pri(spec: &EmitterSpec, n: usize) -> Result<Vec<f64>> {
    check_count(n)?;
    match &spec.pattern {
        PriPattern::Constant { pri } => {
            spec.validate()?;
            Ok(vec![*pri; n])
        }
        other => Err(Error::WrongMode {
            expected: "constant",
            found: other.mode_name(),
        }),
    }
}

/// Value at index i is `group_pris[(i / J) % K]`.
pub fn gen_dwell_switch(spec: &EmitterSpec, n: usize) -> Result<Vec<f64>> {
    check_count(n)?;
    match &spec.pattern {
        PriPattern::DwellSwitch {
            group_pris,
            pulses_per_group,
        } => {
            spec.validate()?;
            Ok((0..n)
                .map(|i| group_pris[(i / pulses_per_group) % group_pris.len()])
                .collect())
        }
        other => Err(Error::WrongMode {
            expected: "dwell_switch",
            found: other.mode_name(),
        }),
    }
}

pub fn gen_staggered(spec: &EmitterSpec, n: usize) -> Result<Vec<f64>> {
    check_count(n)?;
    match &spec.pattern {
        PriPattern::Staggered { pris } => {
            spec.validate()?;
            Ok((0..n).map(|i| pris[i % pris.len()]).collect())
        }
        other => Err(Error::WrongMode {
            expected: "staggered",
            found: other.mode_name(),
        }),
    }
}

/// First `n` PRIs of any emitter.
pub fn generate_pris(spec: &EmitterSpec, n: usize) -> Result<Vec<f64>> {
    match spec.pattern {
        PriPattern::Constant { .. } => gen_constant_pri(spec, n),
        PriPattern::DwellSwitch { .. } => gen_dwell_switch(spec, n),
        PriPattern::Staggered { .. } => gen_staggered(spec, n),
    }
}

/// Cumulative sum starting at `t0`; output has one more element than `pris`.
pub fn pri_to_toa(pris: &[f64], t0: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(pris.len() + 1);
    out.push(t0);
    let mut t = t0;
    for &p in pris {
        if !(p > 0.0) {
            return Err(Error::invalid(format!("nonpositive PRI {p}")));
        }
        t += p;
        out.push(t);
    }
    Ok(out)
}

/// Adds independent N(0, sigma^2) noise to every TOA and re-sorts; labels travel with pulses.
pub fn apply_jitter<R: Rng>(stream: &PulseStream, sigma: f64, rng: &mut R) -> Result<PulseStream> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("jitter sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(stream.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let mut out = PulseStream {
        pulses: stream
            .pulses
            .iter()
            .map(|p| Pulse {
                toa: p.toa + normal.sample(rng),
                label: p.label,
            })
            .collect(),
    };
    out.sort();
    Ok(out)
}

/// Keeps each pulse independently with probability `1 - rho_l`.
pub fn apply_pulse_loss<R: Rng>(
    stream: &PulseStream,
    rho_l: f64,
    rng: &mut R,
) -> Result<PulseStream> {
    if !(0.0..1.0).contains(&rho_l) {
        return Err(Error::invalid(format!("loss rate must lie in [0,1), got {rho_l}")));
    }
    if rho_l == 0.0 {
        return Ok(stream.clone());
    }
    Ok(PulseStream {
        pulses: stream
            .pulses
            .iter()
            .filter(|_| rng.random::<f64>() >= rho_l)
            .copied()
            .collect(),
    })
}

/// Merges sorted streams into one sorted stream.
pub fn interleave(streams: &[PulseStream]) -> PulseStream {
    let mut merged = PulseStream {
        pulses: streams.iter().flat_map(|s| s.pulses.iter().copied()).collect(),
    };
    merged.sort();
    merged
}

/// `floor(x + 0.5)` for nonnegative `x`.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Number of noise pulses for `target_count` pulses from `n_targets` emitters.
///
/// The resulting noise share of the stream is `rho_n / (rho_n + D)`.
pub fn noise_pulse_count(rho_n: f64, target_count: usize, n_targets: usize) -> usize {
    if n_targets == 0 {
        return 0;
    }
    round_half_up(rho_n * target_count as f64 / n_targets as f64)
}

/// Adds noise pulses uniformly distributed over `window`.
///
/// Target pulses are those not already carrying `noise_label`.
pub fn inject_noise<R: Rng>(
    stream: &PulseStream,
    rho_n: f64,
    n_targets: usize,
    window: (f64, f64),
    noise_label: usize,
    rng: &mut R,
) -> Result<PulseStream> {
    let (start, end) = window;
    if !(end > start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::invalid(format!("invalid noise window ({start}, {end})")));
    }
    if !(rho_n >= 0.0) || !rho_n.is_finite() {
        return Err(Error::invalid(format!("noise ratio must be >= 0, got {rho_n}")));
    }
    let targets = stream.pulses.iter().filter(|p| p.label != noise_label).count();
    let count = noise_pulse_count(rho_n, targets, n_targets);
    if count == 0 {
        return Ok(stream.clone());
    }
    let mut out = stream.clone();
    out.pulses.extend((0..count).map(|_| Pulse {
        toa: rng.random_range(start..end),
        label: noise_label,
    }));
    out.sort();
    Ok(out)
}

/// DTOA with a leading zero, plus the per-pulse labels.
pub fn compute_dtoa(stream: &PulseStream) -> Result<(Vec<f64>, Vec<usize>)> {
    if stream.is_empty() {
        return Err(Error::invalid("cannot encode an empty pulse stream"));
    }
    let mut dtoa = Vec::with_capacity(stream.len());
    dtoa.push(0.0);
    dtoa.extend(stream.pulses.windows(2).map(|w| w[1].toa - w[0].toa));
    Ok((dtoa, stream.labels()))
}

/// Loss, noise and jitter settings of one simulated observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rho_l: f64,
    pub rho_n: f64,
    pub jitter_sigma: f64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        NoiseSpec {
            rho_l: 0.0,
            rho_n: 0.0,
            jitter_sigma: 0.0,
        }
    }

    pub fn new(rho_l: f64, rho_n: f64) -> Self {
        NoiseSpec {
            rho_l,
            rho_n,
            jitter_sigma: DEFAULT_JITTER_SIGMA,
        }
    }
}

/// An emitter together with the TOA of its first pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedEmitter {
    #[serde(flatten)]
    pub spec: EmitterSpec,
    pub t0: f64,
}

impl PlacedEmitter {
    /// Places the emitter at a uniformly random phase in `[0, max PRI)`.
    pub fn random_phase<R: Rng>(spec: EmitterSpec, rng: &mut R) -> Self {
        let t0 = rng.random_range(0.0..spec.pattern.max_pri());
        PlacedEmitter { spec, t0 }
    }

    /// Clean (unjittered, lossless) train of all pulses with TOA below `horizon`.
    pub fn train(&self, horizon: f64) -> Result<PulseStream> {
        self.spec.validate()?;
        if self.t0 >= horizon {
            return Ok(PulseStream::default());
        }
        let n = ((horizon - self.t0) / self.spec.pattern.min_pri()).ceil() as usize + 1;
        let pris = generate_pris(&self.spec, n)?;
        let toas = pri_to_toa(&pris, self.t0)?;
        Ok(PulseStream::from_toas(
            &toas.into_iter().take_while(|&t| t < horizon).collect::<Vec<_>>(),
            self.spec.class_label,
        ))
    }

    /// Clean train of exactly `n` pulses.
    pub fn first_pulses(&self, n: usize) -> Result<PulseStream> {
        if n == 0 {
            return Ok(PulseStream::default());
        }
        let toas = if n == 1 {
            vec![self.t0]
        } else {
            pri_to_toa(&generate_pris(&self.spec, n - 1)?, self.t0)?
        };
        Ok(PulseStream::from_toas(&toas, self.spec.class_label))
    }
}

const MAX_WINDOW_ATTEMPTS: usize = 12;

/// Runs the full pipeline: per-emitter jitter then loss, interleave, noise, truncate to `seq_len`.
///
/// The observation window grows until the merged stream holds at least
/// `seq_len` pulses; the first `seq_len` are returned.
pub fn simulate_stream<R: Rng>(
    emitters: &[PlacedEmitter],
    noise: &NoiseSpec,
    noise_label: usize,
    seq_len: usize,
    rng: &mut R,
) -> Result<PulseStream> {
    if emitters.is_empty() {
        return Err(Error::invalid("at least one emitter is required"));
    }
    if seq_len == 0 {
        return Err(Error::invalid("sequence length must be positive"));
    }
    let d = emitters.len() as f64;
    let rate: f64 = emitters
        .iter()
        .map(|e| (1.0 - noise.rho_l) / e.spec.pattern.mean_pri())
        .sum::<f64>()
        * (1.0 + noise.rho_n / d);
    let latest_start = emitters.iter().map(|e| e.t0).fold(0.0, f64::max);
    let mut horizon = latest_start + 1.1 * seq_len as f64 / rate.max(f64::MIN_POSITIVE);
    if !horizon.is_finite() {
        return Err(Error::invalid("emitter rates cannot fill the observation window"));
    }

    for _ in 0..MAX_WINDOW_ATTEMPTS {
        let mut trains = Vec::with_capacity(emitters.len());
        for e in emitters {
            let clean = e.train(horizon)?;
            let jittered = apply_jitter(&clean, noise.jitter_sigma, rng)?;
            trains.push(apply_pulse_loss(&jittered, noise.rho_l, rng)?);
        }
        let merged = interleave(&trains);
        let mut stream = inject_noise(
            &merged,
            noise.rho_n,
            emitters.len(),
            (0.0, horizon),
            noise_label,
            rng,
        )?;
        if stream.len() >= seq_len {
            stream.pulses.truncate(seq_len);
            return Ok(stream);
        }
        horizon *= 1.5;
    }
    Err(Error::invalid(format!(
        "observation window could not produce {seq_len} pulses"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_examples() {
        let e = EmitterSpec::constant(50.0, 0);
        assert_eq!(gen_constant_pri(&e, 4).unwrap(), vec![50.0; 4]);
        let e = EmitterSpec::constant(20.5, 0);
        assert_eq!(gen_constant_pri(&e, 1).unwrap(), vec![20.5]);
        let e = EmitterSpec::constant(30.0, 0);
        assert_eq!(gen_constant_pri(&e, 3).unwrap(), vec![30.0; 3]);
    }

    #[test]
    fn constant_errors() {
        assert!(gen_constant_pri(&EmitterSpec::constant(50.0, 0), 0).is_err());
        let stag = EmitterSpec::staggered(vec![30.0], 0);
        assert!(matches!(
            gen_constant_pri(&stag, 3),
            Err(Error::WrongMode { .. })
        ));
    }

    #[test]
    fn dwell_switch_examples() {
        let e = EmitterSpec::dwell_switch(vec![30.0, 60.0], 2, 1);
        assert_eq!(
            gen_dwell_switch(&e, 8).unwrap(),
            vec![30.0, 30.0, 60.0, 60.0, 30.0, 30.0, 60.0, 60.0]
        );
        let e = EmitterSpec::dwell_switch(vec![25.0], 3, 1);
        assert_eq!(gen_dwell_switch(&e, 4).unwrap(), vec![25.0; 4]);
        let e = EmitterSpec::dwell_switch(vec![20.0, 50.0, 90.0], 1, 1);
        assert_eq!(
            gen_dwell_switch(&e, 6).unwrap(),
            vec![20.0, 50.0, 90.0, 20.0, 50.0, 90.0]
        );
    }

    #[test]
    fn dwell_switch_errors() {
        let e = EmitterSpec::dwell_switch(vec![], 2, 1);
        assert!(gen_dwell_switch(&e, 3).is_err());
        let c = EmitterSpec::constant(40.0, 0);
        assert!(matches!(gen_dwell_switch(&c, 3), Err(Error::WrongMode { .. })));
    }

    #[test]
    fn staggered_examples() {
        let e = EmitterSpec::staggered(vec![30.0, 50.0, 70.0], 2);
        assert_eq!(
            gen_staggered(&e, 7).unwrap(),
            vec![30.0, 50.0, 70.0, 30.0, 50.0, 70.0, 30.0]
        );
        let e = EmitterSpec::staggered(vec![40.0], 2);
        assert_eq!(gen_staggered(&e, 3).unwrap(), vec![40.0; 3]);
        let e = EmitterSpec::staggered(vec![21.0, 99.0], 2);
        assert_eq!(gen_staggered(&e, 4).unwrap(), vec![21.0, 99.0, 21.0, 99.0]);
        assert!(gen_staggered(&EmitterSpec::staggered(vec![], 2), 3).is_err());
    }

    #[test]
    fn pri_to_toa_examples() {
        assert_eq!(
            pri_to_toa(&[50.0, 50.0, 50.0], 0.0).unwrap(),
            vec![0.0, 50.0, 100.0, 150.0]
        );
        assert_eq!(pri_to_toa(&[], 7.0).unwrap(), vec![7.0]);
        assert_eq!(pri_to_toa(&[30.0, 70.0], 10.0).unwrap(), vec![10.0, 40.0, 110.0]);
        assert!(pri_to_toa(&[30.0, 0.0], 0.0).is_err());
        assert!(pri_to_toa(&[-1.0], 0.0).is_err());
    }

    #[test]
    fn zero_jitter_is_identity() {
        let s = PulseStream::from_toas(&[0.0, 50.0, 100.0], 0);
        let mut rng = rng_from_seed(3);
        assert_eq!(apply_jitter(&s, 0.0, &mut rng).unwrap(), s);
        assert!(apply_jitter(&s, -0.1, &mut rng).is_err());
    }

    #[test]
    fn jitter_resorts_near_coincident_pulses() {
        let s = PulseStream::new(vec![
            Pulse { toa: 0.0, label: 0 },
            Pulse {
                toa: 0.0001,
                label: 1,
            },
        ]);
        let mut swapped = false;
        for seed in 0..64 {
            let out = apply_jitter(&s, 0.1, &mut rng_from_seed(seed)).unwrap();
            assert!(out.is_sorted());
            swapped |= out.pulses[0].label == 1;
        }
        assert!(swapped, "some seed should reorder the pair");
    }

    #[test]
    fn zero_loss_is_identity() {
        let s = PulseStream::from_toas(&[1.0, 2.0, 3.0], 0);
        assert_eq!(apply_pulse_loss(&s, 0.0, &mut rng_from_seed(1)).unwrap(), s);
        assert!(apply_pulse_loss(&s, 1.0, &mut rng_from_seed(1)).is_err());
        assert!(apply_pulse_loss(&s, -0.1, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn near_total_loss_empties_stream() {
        let toas: Vec<f64> = (0..1000).map(f64::from).collect();
        let s = PulseStream::from_toas(&toas, 0);
        let kept: usize = (0..20)
            .map(|seed| {
                apply_pulse_loss(&s, 0.9999, &mut rng_from_seed(seed))
                    .unwrap()
                    .len()
            })
            .sum();
        assert!(kept < 20);
    }

    #[test]
    fn interleave_examples() {
        let a = PulseStream::new(vec![
            Pulse { toa: 0.0, label: 0 },
            Pulse {
                toa: 100.0,
                label: 0,
            },
        ]);
        let b = PulseStream::new(vec![Pulse { toa: 50.0, label: 1 }]);
        let m = interleave(&[a, b.clone()]);
        assert_eq!(m.toas(), vec![0.0, 50.0, 100.0]);
        assert_eq!(m.labels(), vec![0, 1, 0]);

        assert_eq!(interleave(&[PulseStream::default(), b.clone()]), b);

        // tie: lower class first, regardless of operand order
        let a = PulseStream::new(vec![Pulse { toa: 10.0, label: 0 }]);
        let b = PulseStream::new(vec![Pulse { toa: 10.0, label: 1 }]);
        assert_eq!(interleave(&[b, a]).labels(), vec![0, 1]);
    }

    #[test]
    fn noise_counts_follow_ratio() {
        // 900 target pulses from 3 emitters at rho_n = 0.25 -> 75 noise pulses,
        // i.e. a noise share of 0.25 / 3.25.
        assert_eq!(noise_pulse_count(0.25, 900, 3), 75);
        assert!((75.0 / 975.0 - 0.25 / 3.25_f64).abs() < 1e-12);
        assert_eq!(noise_pulse_count(0.5, 600, 2), 150);
        assert!((150.0 / 750.0 - 0.5 / 2.5_f64).abs() < 1e-12);
        // round half up
        assert_eq!(noise_pulse_count(0.5, 3, 1), 2);
    }

    #[test]
    fn inject_noise_examples() {
        let toas: Vec<f64> = (0..300).map(|i| f64::from(i) * 10.0).collect();
        let s = interleave(&[
            PulseStream::from_toas(&toas, 0),
            PulseStream::from_toas(&toas, 1),
            PulseStream::from_toas(&toas, 2),
        ]);
        let mut rng = rng_from_seed(11);
        let out = inject_noise(&s, 0.25, 3, (0.0, 3000.0), 3, &mut rng).unwrap();
        let noise: Vec<_> = out.pulses.iter().filter(|p| p.label == 3).collect();
        assert_eq!(noise.len(), 75);
        assert!(noise.iter().all(|p| (0.0..3000.0).contains(&p.toa)));
        assert!(out.is_sorted());

        assert_eq!(inject_noise(&s, 0.0, 3, (0.0, 1.0), 3, &mut rng).unwrap(), s);
        assert!(inject_noise(&s, 0.1, 3, (5.0, 5.0), 3, &mut rng).is_err());
    }

    #[test]
    fn dtoa_examples() {
        let s = PulseStream::from_toas(&[0.0, 50.0, 100.0], 4);
        let (d, l) = compute_dtoa(&s).unwrap();
        assert_eq!(d, vec![0.0, 50.0, 50.0]);
        assert_eq!(l, vec![4, 4, 4]);

        let s = PulseStream::from_toas(&[7.0], 1);
        assert_eq!(compute_dtoa(&s).unwrap(), (vec![0.0], vec![1]));

        let s = PulseStream::new(vec![
            Pulse { toa: 0.0, label: 0 },
            Pulse { toa: 30.0, label: 1 },
            Pulse {
                toa: 100.0,
                label: 0,
            },
        ]);
        assert_eq!(compute_dtoa(&s).unwrap().0, vec![0.0, 30.0, 70.0]);
        assert!(compute_dtoa(&PulseStream::default()).is_err());
    }

    #[test]
    fn simulate_stream_has_exact_length() {
        let emitters = vec![
            PlacedEmitter {
                spec: EmitterSpec::constant(45.0, 0),
                t0: 3.0,
            },
            PlacedEmitter {
                spec: EmitterSpec::staggered(vec![30.0, 60.0, 90.0], 1),
                t0: 11.0,
            },
        ];
        let mut rng = rng_from_seed(5);
        let s = simulate_stream(&emitters, &NoiseSpec::new(0.3, 0.4), 2, 1000, &mut rng).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.is_sorted());
        assert!(s.pulses.iter().all(|p| p.label <= 2));
    }
}
