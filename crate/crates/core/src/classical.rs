//! Classical deinterleavers that first find a PRI and then search pulses.
//!
//! Two PRI finders are provided: the sequential difference histogram (SDIF)
//! and the PRI transform. Both feed the same greedy [`sequence_search`] and
//! the same extraction loop: every chain found for a period is removed from
//! the residue, chains sharing a period form one [`EmitterGroup`], and pulses
//! never claimed by a chain stay residue. [`ClassMapper`] turns emitter
//! groups into experiment class ids so baselines can be scored like models.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{ExperimentConfig, ModeTemplate};
use crate::error::{Error, Result};

/// Parameters of the greedy chain search shared by both deinterleavers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Relative half-width of the acceptance window around a predicted pulse.
    pub tolerance: f64,
    /// Consecutive predicted positions that may be empty before a chain ends.
    pub max_misses: usize,
    /// Shortest chain the deinterleavers accept as an emitter.
    pub min_chain: usize,
    /// Smallest share of chain steps spanning exactly one period. Chains that
    /// only ever skip positions belong to a multiple of the searched period.
    pub min_direct_fraction: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            tolerance: 0.05,
            max_misses: 3,
            min_chain: 5,
            min_direct_fraction: 0.25,
        }
    }
}

impl SearchParams {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 0.5) {
            return Err(Error::invalid("tolerance must lie in (0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&self.min_direct_fraction) {
            return Err(Error::invalid("min_direct_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bin_width: f64,
    pub max_diff_order: usize,
    /// Threshold scale `x` in `x * N * exp(-k * tau / bin_width)`.
    pub threshold_x: f64,
    /// Threshold decay `k`.
    pub threshold_k: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub search: SearchParams,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            bin_width: 1.0,
            max_diff_order: 12,
            threshold_x: 0.1,
            threshold_k: 0.005,
            tau_min: 15.0,
            tau_max: 110.0,
            search: SearchParams::default(),
        }
    }
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) {
            return Err(Error::invalid("bin_width must be positive"));
        }
        if !(self.threshold_k > 0.0 && self.threshold_k < 1.0) {
            return Err(Error::invalid("threshold_k must lie in (0, 1)"));
        }
        if !(self.threshold_x > 0.0) {
            return Err(Error::invalid("threshold_x must be positive"));
        }
        check_range(self.tau_min, self.tau_max)?;
        self.search.validate()
    }

    fn bins(&self) -> usize {
        ((self.tau_max - self.tau_min) / self.bin_width).ceil() as usize
    }

    /// Detection threshold at lag `tau` for a stream of `n` pulses.
    pub fn threshold(&self, tau: f64, n: usize) -> f64 {
        self.threshold_x * n as f64 * (-self.threshold_k * tau / self.bin_width).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriTransformConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub bins: usize,
    /// A peak must reach this fraction of the spectrum maximum.
    pub peak_threshold: f64,
    /// A peak must exceed this multiple of `sqrt(pairs in bin)`, the level
    /// expected from incoherent phases. Kept low because the sub-trains of a
    /// staggered emitter sit at different phases and partly cancel at the
    /// frame period.
    pub clutter_factor: f64,
    /// A peak must exceed `alpha * T / tau`, the pair count of a full train.
    pub alpha: f64,
    pub search: SearchParams,
}

impl Default for PriTransformConfig {
    fn default() -> Self {
        PriTransformConfig {
            tau_min: 15.0,
            tau_max: 110.0,
            bins: 95,
            peak_threshold: 0.3,
            clutter_factor: 1.5,
            alpha: 0.3,
            search: SearchParams::default(),
        }
    }
}

impl PriTransformConfig {
    pub fn validate(&self) -> Result<()> {
        check_range(self.tau_min, self.tau_max)?;
        if self.bins == 0 {
            return Err(Error::invalid("bins must be positive"));
        }
        if !(0.0..=1.0).contains(&self.peak_threshold) {
            return Err(Error::invalid("peak_threshold must lie in [0, 1]"));
        }
        self.search.validate()
    }

    pub fn bin_width(&self) -> f64 {
        (self.tau_max - self.tau_min) / self.bins as f64
    }

    /// Same search range with a different upper edge and bin count keeping
    /// the bin width.
    pub fn with_tau_max(mut self, tau_max: f64) -> Self {
        let w = self.bin_width();
        self.tau_max = tau_max;
        self.bins = ((tau_max - self.tau_min) / w).round().max(1.0) as usize;
        self
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if lo > 0.0 && lo < hi && hi.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("invalid lag range ({lo}, {hi})")))
    }
}

/// Histogram bin of `tau`, if it lies in `[lo, lo + bins * width)`.
fn bin_of(tau: f64, lo: f64, width: f64, bins: usize) -> Option<usize> {
    if tau < lo {
        return None;
    }
    let b = ((tau - lo) / width) as usize;
    (b < bins).then_some(b)
}

/// Counts of `toa[i + order] - toa[i]` over the configured lag bins, as
/// `(bin center, count)` pairs.
pub fn sdif_histogram(toas: &[f64], order: usize, config: &HistogramConfig) -> Result<Vec<(f64, usize)>> {
    Ok(histogram_with_sums(toas, order, config)?
        .into_iter()
        .map(|(c, n, _)| (c, n))
        .collect())
}

/// Histogram bins with the sum of the differences in each bin, so a bin can
/// report the mean lag it actually collected.
fn histogram_with_sums(toas: &[f64], order: usize, config: &HistogramConfig) -> Result<Vec<(f64, usize, f64)>> {
    if order == 0 || toas.len() < order + 1 {
        return Err(Error::invalid(format!(
            "difference order {order} needs at least {} pulses, got {}",
            order + 1,
            toas.len()
        )));
    }
    let bins = config.bins();
    let mut out: Vec<(f64, usize, f64)> = (0..bins)
        .map(|b| (config.tau_min + (b as f64 + 0.5) * config.bin_width, 0, 0.0))
        .collect();
    for w in toas.windows(order + 1) {
        let d = w[order] - w[0];
        if let Some(b) = bin_of(d, config.tau_min, config.bin_width, bins) {
            out[b].1 += 1;
            out[b].2 += d;
        }
    }
    Ok(out)
}

/// Bins whose count exceeds the SDIF threshold for a stream of `n` pulses,
/// returned as `(bin center, count)` in ascending lag order.
pub fn sdif_nominate(hist: &[(f64, usize)], n: usize, config: &HistogramConfig) -> Vec<(f64, usize)> {
    hist.iter()
        .copied()
        .filter(|(tau, count)| *count as f64 > config.threshold(*tau, n))
        .collect()
}

/// One PRI-spectrum bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBin {
    pub tau: f64,
    pub magnitude: f64,
    /// Number of pulse pairs whose difference fell in the bin.
    pub pairs: usize,
    /// Mean difference of those pairs; the period the phases are taken at.
    pub mean_lag: f64,
}

/// PRI-transform spectrum. Every pair `(m, n)` with `t_n - t_m` in bin `k`
/// contributes `exp(2 pi i t_n / P_k)`, with times measured from the first
/// pulse and `P_k` the mean pair difference of the bin. Pairs from a train
/// with period `P_k` add coherently; pairs at a multiple of the true period
/// alternate in phase and cancel.
pub fn pri_transform_spectrum(toas: &[f64], config: &PriTransformConfig) -> Result<Vec<SpectrumBin>> {
    if toas.len() < 2 {
        return Err(Error::invalid("PRI transform needs at least two pulses"));
    }
    let (lo, width, bins) = (config.tau_min, config.bin_width(), config.bins);
    let origin = toas[0];
    let mut pairs: Vec<Vec<usize>> = vec![Vec::new(); bins];
    let mut lag_sum = vec![0.0; bins];
    for n in 1..toas.len() {
        for m in (0..n).rev() {
            let d = toas[n] - toas[m];
            if d >= config.tau_max {
                break;
            }
            if let Some(b) = bin_of(d, lo, width, bins) {
                pairs[b].push(n);
                lag_sum[b] += d;
            }
        }
    }
    Ok((0..bins)
        .map(|b| {
            let count = pairs[b].len();
            let tau = lo + (b as f64 + 0.5) * width;
            if count == 0 {
                return SpectrumBin { tau, magnitude: 0.0, pairs: 0, mean_lag: tau };
            }
            let period = lag_sum[b] / count as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for &n in &pairs[b] {
                let phase = 2.0 * PI * (toas[n] - origin) / period;
                re += phase.cos();
                im += phase.sin();
            }
            SpectrumBin {
                tau,
                magnitude: re.hypot(im),
                pairs: count,
                mean_lag: period,
            }
        })
        .collect())
}

/// Spectrum bins passing every detection threshold, strongest first.
pub fn pri_transform_peaks(spectrum: &[SpectrumBin], span: f64, config: &PriTransformConfig) -> Vec<SpectrumBin> {
    let max = spectrum.iter().map(|b| b.magnitude).fold(0.0, f64::max);
    let mut peaks: Vec<SpectrumBin> = spectrum
        .iter()
        .enumerate()
        .filter(|(i, b)| {
            let left = i.checked_sub(1).map_or(0.0, |j| spectrum[j].magnitude);
            let right = spectrum.get(i + 1).map_or(0.0, |s| s.magnitude);
            let local_max = b.magnitude >= left && b.magnitude >= right;
            let level = (config.peak_threshold * max)
                .max(config.clutter_factor * (b.pairs as f64).sqrt())
                .max(config.alpha * span / b.tau);
            local_max && b.magnitude > 0.0 && b.magnitude > level
        })
        .map(|(_, b)| *b)
        .collect();
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    peaks
}

/// Index of the toa closest to `target` inside `[target - half, target + half]`.
fn closest_in_window(toas: &[f64], from: usize, target: f64, half: f64) -> Option<usize> {
    let start = from + toas[from..].partition_point(|t| *t < target - half);
    let mut best: Option<usize> = None;
    for (i, t) in toas.iter().enumerate().skip(start) {
        if *t > target + half {
            break;
        }
        if best.is_none_or(|b| (t - target).abs() < (toas[b] - target).abs()) {
            best = Some(i);
        }
    }
    best
}

/// Chain grown from `start` with period `pri`.
fn grow_chain(toas: &[f64], start: usize, pri: f64, params: &SearchParams) -> Vec<usize> {
    let half = params.tolerance * pri;
    let mut chain = vec![start];
    let mut last = start;
    'grow: loop {
        for step in 1..=params.max_misses + 1 {
            let target = toas[last] + step as f64 * pri;
            if let Some(i) = closest_in_window(toas, last + 1, target, half) {
                chain.push(i);
                last = i;
                continue 'grow;
            }
        }
        break;
    }
    chain
}

/// Longest greedy chain with period `pri`: from every start pulse, accept the
/// pulse closest to each predicted position within `pri * tolerance`, allowing
/// up to `max_misses` consecutive empty predictions. Chains of a single pulse
/// are no chain and yield an empty set; the earliest start wins ties.
pub fn sequence_search(toas: &[f64], pri: f64, params: &SearchParams) -> Vec<usize> {
    if !(pri > 0.0) {
        return Vec::new();
    }
    let mut best: Vec<usize> = Vec::new();
    let mut covered = vec![false; toas.len()];
    for start in 0..toas.len() {
        // a pulse already inside an earlier chain can only regrow a suffix of it
        if covered[start] {
            continue;
        }
        let chain = grow_chain(toas, start, pri, params);
        for &i in &chain {
            covered[i] = true;
        }
        if chain.len() > best.len() {
            best = chain;
        }
    }
    if best.len() < 2 {
        best.clear();
    }
    best
}

/// Share of chain steps spanning one period rather than several.
fn direct_fraction(toas: &[f64], chain: &[usize], pri: f64) -> f64 {
    if chain.len() < 2 {
        return 0.0;
    }
    let direct = chain
        .windows(2)
        .filter(|w| ((toas[w[1]] - toas[w[0]]) / pri).round() as i64 == 1)
        .count();
    direct as f64 / (chain.len() - 1) as f64
}

/// Period implied by a chain's end points and the whole periods it spans.
fn refine_period(toas: &[f64], chain: &[usize], pri: f64) -> f64 {
    let (first, last) = (toas[chain[0]], toas[chain[chain.len() - 1]]);
    let spans = ((last - first) / pri).round();
    if spans >= 1.0 {
        (last - first) / spans
    } else {
        pri
    }
}

/// Pulses sharing one period. More than one chain means either a staggered
/// emitter whose positions within the frame were found separately, or several
/// emitters with the same PRI; the pulse train alone cannot tell them apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterGroup {
    pub period: f64,
    /// Original pulse indices of each extracted chain, in extraction order.
    pub chains: Vec<Vec<usize>>,
}

impl EmitterGroup {
    pub fn is_ambiguous(&self) -> bool {
        self.chains.len() > 1
    }

    pub fn pulse_count(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deinterleaving {
    /// Group index per input pulse, `None` for residue.
    pub assignment: Vec<Option<usize>>,
    pub groups: Vec<EmitterGroup>,
}

impl Deinterleaving {
    pub fn found_pris(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.period).collect()
    }

    /// Groups whose chains could be one staggered emitter or several
    /// emitters sharing a PRI.
    pub fn ambiguous_groups(&self) -> Vec<&EmitterGroup> {
        self.groups.iter().filter(|g| g.is_ambiguous()).collect()
    }

    pub fn residue_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }
}

/// Removes every acceptable chain of period `pri` from the residue.
fn extract_group(
    toas: &[f64],
    residue: &mut Vec<usize>,
    pri: f64,
    params: &SearchParams,
) -> Option<EmitterGroup> {
    let mut group = EmitterGroup { period: pri, chains: Vec::new() };
    loop {
        let sub: Vec<f64> = residue.iter().map(|&i| toas[i]).collect();
        let chain = sequence_search(&sub, group.period, params);
        if chain.len() < params.min_chain || direct_fraction(&sub, &chain, group.period) < params.min_direct_fraction {
            break;
        }
        if group.chains.is_empty() {
            group.period = refine_period(&sub, &chain, group.period);
        }
        let picked: Vec<usize> = chain.iter().map(|&k| residue[k]).collect();
        let mut keep = vec![true; residue.len()];
        for &k in &chain {
            keep[k] = false;
        }
        let mut k = 0;
        residue.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        group.chains.push(picked);
    }
    (!group.chains.is_empty()).then_some(group)
}

fn finish(n: usize, groups: Vec<EmitterGroup>) -> Deinterleaving {
    let mut assignment = vec![None; n];
    for (g, group) in groups.iter().enumerate() {
        for &i in group.chains.iter().flatten() {
            assignment[i] = Some(g);
        }
    }
    Deinterleaving { assignment, groups }
}

fn check_sorted(toas: &[f64]) -> Result<()> {
    if toas.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(Error::invalid("TOAs must be sorted"))
    }
}

/// SDIF deinterleaving: for orders 1, 2, .. build the difference histogram of
/// the residue, try nominated lags in ascending order, and after the first
/// successful extraction restart from order 1.
pub fn sdif_deinterleave(toas: &[f64], config: &HistogramConfig) -> Result<Deinterleaving> {
    config.validate()?;
    check_sorted(toas)?;
    let mut residue: Vec<usize> = (0..toas.len()).collect();
    let mut groups = Vec::new();
    'outer: loop {
        for order in 1..=config.max_diff_order {
            if residue.len() < order + 1 {
                break 'outer;
            }
            let sub: Vec<f64> = residue.iter().map(|&i| toas[i]).collect();
            let hist = histogram_with_sums(&sub, order, config)?;
            let n = residue.len();
            for (tau, count, sum) in hist {
                if count == 0 || count as f64 <= config.threshold(tau, n) {
                    continue;
                }
                if let Some(group) = extract_group(toas, &mut residue, sum / count as f64, &config.search) {
                    groups.push(group);
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok(finish(toas.len(), groups))
}

/// PRI-transform deinterleaving: take the strongest qualifying spectrum peak
/// of the residue, extract its chains, and recompute the spectrum.
pub fn pri_transform_deinterleave(toas: &[f64], config: &PriTransformConfig) -> Result<Deinterleaving> {
    config.validate()?;
    check_sorted(toas)?;
    let mut residue: Vec<usize> = (0..toas.len()).collect();
    let mut groups = Vec::new();
    'outer: while residue.len() >= config.search.min_chain {
        let sub: Vec<f64> = residue.iter().map(|&i| toas[i]).collect();
        let span = sub[sub.len() - 1] - sub[0];
        let spectrum = pri_transform_spectrum(&sub, config)?;
        for peak in pri_transform_peaks(&spectrum, span, config) {
            if let Some(group) = extract_group(toas, &mut residue, peak.mean_lag, &config.search) {
                groups.push(group);
                continue 'outer;
            }
        }
        break;
    }
    Ok(finish(toas.len(), groups))
}

/// Maps emitter groups to the classes of an experiment by modulation mode and
/// PRI range; groups matching no class and residue pulses become noise.
#[derive(Debug, Clone)]
pub struct ClassMapper {
    config: ExperimentConfig,
}

impl ClassMapper {
    pub fn new(config: &ExperimentConfig) -> Self {
        ClassMapper { config: config.clone() }
    }

    fn find(&self, mut accept: impl FnMut(&ModeTemplate, (f64, f64)) -> bool) -> Option<usize> {
        self.config.classes.iter().enumerate().find_map(|(c, class)| {
            class
                .targets
                .iter()
                .any(|t| accept(&t.mode, t.pri_range))
                .then_some(c)
        })
    }

    /// Class id of one group.
    pub fn classify(&self, group: &EmitterGroup) -> usize {
        let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        let m = group.chains.len();
        let staggered = (m > 1)
            .then(|| {
                self.find(|mode, range| match mode {
                    ModeTemplate::Staggered { values_per_period: (lo, hi) } => {
                        (*lo..=*hi).contains(&m) && inside(group.period / m as f64, range)
                    }
                    _ => false,
                })
            })
            .flatten();
        staggered
            .or_else(|| self.find(|mode, range| matches!(mode, ModeTemplate::Constant) && inside(group.period, range)))
            .or_else(|| {
                self.find(|mode, range| matches!(mode, ModeTemplate::DwellSwitch { .. }) && inside(group.period, range))
            })
            .unwrap_or(self.config.noise_class)
    }

    /// Class id per pulse.
    pub fn labels(&self, result: &Deinterleaving) -> Vec<usize> {
        let classes: Vec<usize> = result.groups.iter().map(|g| self.classify(g)).collect();
        result
            .assignment
            .iter()
            .map(|a| a.map_or(self.config.noise_class, |g| classes[g]))
            .collect()
    }
}

/// Which classical deinterleaver to run, with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Baseline {
    Sdif(HistogramConfig),
    Pritran(PriTransformConfig),
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Sdif(_) => "sdif",
            Baseline::Pritran(_) => "pritran",
        }
    }

    /// Default configuration with the lag range widened to cover every
    /// period the experiment can produce, including staggered frames.
    pub fn for_experiment(method: &str, config: &ExperimentConfig) -> Result<Self> {
        let tau_max = experiment_tau_max(config);
        match method {
            "sdif" => Ok(Baseline::Sdif(HistogramConfig {
                tau_max,
                ..HistogramConfig::default()
            })),
            "pritran" => Ok(Baseline::Pritran(PriTransformConfig::default().with_tau_max(tau_max))),
            _ => Err(Error::invalid(format!("unknown baseline `{method}` (sdif | pritran)"))),
        }
    }

    pub fn run(&self, toas: &[f64]) -> Result<Deinterleaving> {
        match self {
            Baseline::Sdif(c) => sdif_deinterleave(toas, c),
            Baseline::Pritran(c) => pri_transform_deinterleave(toas, c),
        }
    }
}

/// Longest period (plus a margin) among an experiment's emitter templates.
pub fn experiment_tau_max(config: &ExperimentConfig) -> f64 {
    let default = HistogramConfig::default().tau_max;
    config
        .classes
        .iter()
        .flat_map(|c| &c.targets)
        .map(|t| match t.mode {
            ModeTemplate::Staggered { values_per_period: (_, m) } => t.pri_range.1 * m as f64 * 1.1,
            _ => t.pri_range.1 * 1.1,
        })
        .fold(default, f64::max)
}

/// Recovers absolute arrival times from a DTOA sequence (first pulse at 0).
pub fn toas_from_dtoa(dtoa: &[f64]) -> Vec<f64> {
    dtoa.iter()
        .scan(0.0, |t, d| {
            *t += d;
            Some(*t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{rng_from_seed, EmitterSpec, PlacedEmitter};
    use rand::Rng;

    fn params(max_misses: usize) -> SearchParams {
        SearchParams {
            max_misses,
            ..SearchParams::default()
        }
    }

    #[test]
    fn sequence_search_examples() {
        assert_eq!(sequence_search(&[0.0, 50.0, 100.0, 150.0], 50.0, &params(3)), vec![0, 1, 2, 3]);
        assert_eq!(sequence_search(&[0.0, 50.0, 150.0], 50.0, &params(1)), vec![0, 1, 2]);
        assert!(sequence_search(&[0.0, 50.0, 100.0], 200.0, &params(3)).is_empty());
        assert_eq!(sequence_search(&[0.0, 50.0, 200.0], 50.0, &params(1)), vec![0, 1]);
    }

    fn clean_train(pri: f64, t0: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| t0 + pri * i as f64).collect()
    }

    #[test]
    fn histogram_single_emitter() {
        let toas = clean_train(50.3, 3.3, 100);
        let hist = sdif_histogram(&toas, 1, &HistogramConfig::default()).unwrap();
        let total: usize = hist.iter().map(|(_, n)| n).sum();
        let (center, count) = hist.iter().max_by_key(|(_, n)| *n).unwrap();
        assert_eq!((*center, *count, total), (50.5, 99, 99));
    }

    #[test]
    fn histogram_errors_and_empty_range() {
        let cfg = HistogramConfig::default();
        assert!(sdif_histogram(&[1.0], 1, &cfg).is_err());
        let toas = clean_train(5.0, 0.0, 30);
        assert!(sdif_histogram(&toas, 1, &cfg).unwrap().iter().all(|(_, n)| *n == 0));
    }

    #[test]
    fn pri_transform_suppresses_subharmonic() {
        let toas = clean_train(50.0, 0.0, 100);
        let spec = pri_transform_spectrum(&toas, &PriTransformConfig::default()).unwrap();
        let at = |tau: f64| spec.iter().find(|b| b.tau - 0.5 <= tau && tau < b.tau + 0.5).unwrap().magnitude;
        let peak = spec.iter().max_by(|a, b| a.magnitude.total_cmp(&b.magnitude)).unwrap();
        assert!((peak.tau - 50.5).abs() < 1e-9);
        assert!(at(100.0) < at(50.0));
    }

    #[test]
    fn both_baselines_recover_two_clean_emitters() {
        let mut rng = rng_from_seed(11);
        let mut stream = Vec::new();
        for (pri, label) in [(30.0, 0), (70.0, 1)] {
            let e = PlacedEmitter::random_phase(EmitterSpec::constant(pri, label), &mut rng);
            stream.extend(e.train(3000.0).unwrap().pulses);
        }
        stream.sort_by(|a, b| a.toa.total_cmp(&b.toa));
        let toas: Vec<f64> = stream.iter().map(|p| p.toa).collect();
        for result in [
            sdif_deinterleave(&toas, &HistogramConfig::default()).unwrap(),
            pri_transform_deinterleave(&toas, &PriTransformConfig::default()).unwrap(),
        ] {
            let mut pris = result.found_pris();
            pris.sort_by(f64::total_cmp);
            assert_eq!(pris.len(), 2, "{pris:?}");
            assert!((pris[0] - 30.0).abs() < 1.0 && (pris[1] - 70.0).abs() < 1.0);
            assert_eq!(result.residue_count(), 0);
            for g in &result.groups {
                let labels: Vec<usize> = g.chains.iter().flatten().map(|&i| stream[i].label).collect();
                assert!(labels.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }

    #[test]
    fn uniform_noise_yields_no_pri() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let mut toas: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..6000.0)).collect();
            toas.sort_by(f64::total_cmp);
            let r = sdif_deinterleave(&toas, &HistogramConfig::default()).unwrap();
            assert!(r.groups.is_empty(), "seed {seed}: {:?}", r.found_pris());
            let r = pri_transform_deinterleave(&toas, &PriTransformConfig::default()).unwrap();
            assert!(r.groups.is_empty(), "seed {seed}: {:?}", r.found_pris());
        }
    }

    #[test]
    fn staggered_frame_is_grouped() {
        let e = PlacedEmitter {
            spec: EmitterSpec::staggered(vec![31.0, 47.0, 59.0], 0),
            t0: 4.0,
        };
        let toas = e.train(4000.0).unwrap().toas();
        let cfg = PriTransformConfig::default().with_tau_max(200.0);
        let r = pri_transform_deinterleave(&toas, &cfg).unwrap();
        assert_eq!(r.groups.len(), 1, "{:?}", r.groups);
        assert!((r.groups[0].period - 137.0).abs() < 1.0);
        assert_eq!(r.groups[0].chains.len(), 3);
        assert!(r.groups[0].is_ambiguous());
        assert_eq!(r.residue_count(), 0);
    }

    #[test]
    fn toas_round_trip_through_dtoa() {
        assert_eq!(toas_from_dtoa(&[0.0, 2.0, 3.5]), vec![0.0, 2.0, 5.5]);
    }
}
