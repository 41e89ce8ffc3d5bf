//! Checks shared by the integration tests and the acceptance run.

#![allow(dead_code)]

use deinterleave::classical::{pri_transform_spectrum, toas_from_dtoa, Baseline, HistogramConfig, PriTransformConfig};
use deinterleave::dataset::{builtin_config, draw_sample_with_sources, sample_seed, ExperimentConfig, Split};
use deinterleave::harness::{range_class, serial_from_modes, sub_stream_dtoa, Metrics, Stage2};
use deinterleave::models::Model;
use deinterleave::simulator::{
    generate_pris, rng_from_seed, simulate_stream, EmitterSpec, NoiseSpec, PlacedEmitter, PriPattern,
};
use rand::Rng;

/// Kolmogorov-Smirnov distance of `xs` from U(0,1) and its asymptotic p-value.
pub fn ks_uniform(xs: &mut [f64]) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (d, p.clamp(0.0, 1.0))
}

/// Outcome of the simulator invariant suite on one experiment.
#[derive(Debug, Default)]
pub struct SimulatorReport {
    pub samples: usize,
    pub failures: Vec<String>,
    /// Pooled standardized loss count: sum of (lost - n p) over sum of n p (1 - p), as a z-score.
    pub loss_z: f64,
    /// Share of samples whose noise TOAs fail a 1% KS test against uniform.
    pub ks_reject_rate: f64,
    pub noise_samples: usize,
}

impl SimulatorReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.loss_z.abs() < 4.0 && self.ks_reject_rate < 0.03
    }
}

/// Clean TOAs of an emitter's train, relative to its first pulse.
fn clean_relative(e: &PlacedEmitter, n: usize) -> Vec<f64> {
    let pris = generate_pris(&e.spec, n).expect("valid emitter");
    std::iter::once(0.0)
        .chain(pris.iter().scan(0.0, |t, p| {
            *t += p;
            Some(*t)
        }))
        .collect()
}

/// Matches observed TOAs of one emitter onto its clean train. Returns the
/// clean index of every observed pulse, or `None` if no alignment explains
/// all of them within `tol`.
fn align(observed: &[f64], clean: &[f64], tol: f64) -> Option<Vec<usize>> {
    'start: for m0 in 0..clean.len().min(64) {
        let mut idx = vec![m0];
        let mut m = m0;
        for &t in &observed[1..] {
            let target = t - observed[0] + clean[m0];
            while m + 1 < clean.len() && clean[m + 1] < target - tol {
                m += 1;
            }
            m += 1;
            if m >= clean.len() || (clean[m] - target).abs() > tol {
                continue 'start;
            }
            idx.push(m);
        }
        return Some(idx);
    }
    None
}

/// Simulator invariants on `count` samples of an experiment: exact length,
/// leading zero, PRI reconstruction of every emitter, stagger periods,
/// binomial loss counts and uniform noise placement.
pub fn simulator_invariants(experiment: u32, count: usize) -> SimulatorReport {
    let config = builtin_config(experiment).expect("builtin experiment");
    let mut report = SimulatorReport {
        samples: count,
        ..Default::default()
    };
    let (mut dev, mut var) = (0.0, 0.0);
    let mut rejects = 0;
    let tol = 8.0 * config.jitter_sigma * 2f64.sqrt();
    for i in 0..count {
        let seed = sample_seed(11, Split::Train, i);
        let (sample, sources) = draw_sample_with_sources(&config, seed).expect("draw");
        let mut fail = |msg: String| report.failures.push(format!("experiment {experiment} sample {i}: {msg}"));
        if sample.dtoa.len() != config.seq_len || sample.labels.len() != config.seq_len {
            fail(format!("length {}", sample.dtoa.len()));
            continue;
        }
        if sample.dtoa[0] != 0.0 {
            fail("dtoa[0] is not 0".into());
        }
        if sample.dtoa.iter().any(|d| *d < 0.0) {
            fail("negative dtoa".into());
        }
        let toas = toas_from_dtoa(&sample.dtoa);
        for (k, e) in sample.meta.emitters.iter().enumerate() {
            if let PriPattern::Staggered { pris } = &e.spec.pattern {
                let m = pris.len();
                let expect_m7 = matches!(experiment, 3 | 5);
                if (expect_m7 && m != 7) || (!expect_m7 && !(3..=10).contains(&m)) {
                    fail(format!("emitter {k} has {m} stagger values"));
                }
                let seq = generate_pris(&e.spec, 3 * m).expect("valid emitter");
                if (0..2 * m).any(|j| seq[j] != seq[j + m]) {
                    fail(format!("emitter {k} is not periodic with period {m}"));
                }
            }
            let observed: Vec<f64> = (0..toas.len()).filter(|&j| sources[j] == Some(k)).map(|j| toas[j]).collect();
            if observed.len() < 3 {
                continue;
            }
            let span = observed[observed.len() - 1] - observed[0];
            let clean = clean_relative(e, (span / e.spec.pattern.min_pri()) as usize + 80);
            match align(&observed, &clean, tol) {
                None => fail(format!("emitter {k} pulses do not match its PRI pattern")),
                Some(idx) => {
                    let interior = (idx[idx.len() - 1] - idx[0] - 1) as f64;
                    let lost = interior - (observed.len() - 2) as f64;
                    let p = sample.meta.rho_l;
                    dev += lost - interior * p;
                    var += interior * p * (1.0 - p);
                }
            }
        }
        let end = toas[toas.len() - 1];
        let mut noise: Vec<f64> = (1..toas.len() - 1)
            .filter(|&j| sources[j].is_none())
            .map(|j| toas[j] / end)
            .collect();
        if sample.labels.iter().zip(&sources).any(|(l, s)| s.is_none() != (*l == config.noise_class)) {
            fail("noise labels disagree with sources".into());
        }
        if noise.len() >= 20 {
            report.noise_samples += 1;
            if ks_uniform(&mut noise).1 < 0.01 {
                rejects += 1;
            }
        }
    }
    report.loss_z = if var > 0.0 { dev / var.sqrt() } else { 0.0 };
    report.ks_reject_rate = if report.noise_samples > 0 {
        rejects as f64 / report.noise_samples as f64
    } else {
        0.0
    };
    report
}

/// PRIs in [lo, hi] whose pairwise ratios stay clear of small-integer
/// ratios, so that each train is separable in principle.
pub fn separable_pris<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    'retry: loop {
        let pris: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        for a in 0..n {
            for b in 0..a {
                let r = pris[a] / pris[b];
                for p in 1..=5 {
                    for q in 1..=5 {
                        if (r / (p as f64 / q as f64) - 1.0).abs() < 0.08 {
                            continue 'retry;
                        }
                    }
                }
            }
        }
        return pris;
    }
}

/// Clean constant-PRI stream with pulses labeled by emitter index.
pub fn clean_constant_stream(pris: &[f64], seq_len: usize, seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let emitters: Vec<PlacedEmitter> = pris
        .iter()
        .enumerate()
        .map(|(k, &p)| PlacedEmitter::random_phase(EmitterSpec::constant(p, k), &mut rng))
        .collect();
    let stream = simulate_stream(&emitters, &NoiseSpec::clean(), pris.len(), seq_len, &mut rng).expect("clean stream");
    (stream.toas(), stream.labels())
}

/// Per-pulse accuracy of a classical method on clean constant-PRI streams,
/// with each found group scored as its majority emitter. The first and last
/// two pulses of every emitter are left out.
pub fn baseline_oracle_accuracy(method: &str, emitters: usize, seeds: std::ops::Range<u64>) -> f64 {
    let baseline = match method {
        "sdif" => Baseline::Sdif(HistogramConfig::default()),
        _ => Baseline::Pritran(PriTransformConfig::default()),
    };
    let (mut correct, mut total) = (0usize, 0usize);
    for seed in seeds {
        let mut rng = rng_from_seed(seed ^ 0xbade);
        let pris = separable_pris(emitters, 20.0, 100.0, &mut rng);
        let (toas, truth) = clean_constant_stream(&pris, 400, seed);
        let result = baseline.run(&toas).expect("baseline run");
        let groups = result.groups.len();
        let mut votes = vec![vec![0usize; emitters]; groups];
        for (a, &t) in result.assignment.iter().zip(&truth) {
            if let Some(g) = a {
                votes[*g][t] += 1;
            }
        }
        let owner: Vec<usize> = votes
            .iter()
            .map(|v| (0..emitters).max_by_key(|&k| (v[k], std::cmp::Reverse(k))).unwrap_or(0))
            .collect();
        for k in 0..emitters {
            let positions: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] == k).collect();
            if positions.len() <= 4 {
                continue;
            }
            for &j in &positions[2..positions.len() - 2] {
                total += 1;
                if result.assignment[j].is_some_and(|g| owner[g] == k) {
                    correct += 1;
                }
            }
        }
    }
    correct as f64 / total.max(1) as f64
}

/// Whether the PRI-transform magnitude at the true PRI beats its second and
/// third multiples on a clean constant-PRI stream.
pub fn fundamental_beats_multiples(seed: u64) -> bool {
    let mut rng = rng_from_seed(seed ^ 0x4a2);
    let pri = rng.random_range(20.0..50.0);
    let (toas, _) = clean_constant_stream(&[pri], 300, seed);
    let cfg = PriTransformConfig {
        tau_min: 10.0,
        tau_max: 3.5 * pri,
        bins: (3.5 * pri - 10.0).round() as usize,
        ..PriTransformConfig::default()
    };
    let spectrum = pri_transform_spectrum(&toas, &cfg).expect("spectrum");
    let near = |tau: f64| {
        spectrum
            .iter()
            .filter(|b| (b.tau - tau).abs() <= cfg.bin_width())
            .map(|b| b.magnitude)
            .fold(0.0, f64::max)
    };
    let fundamental = near(pri);
    fundamental > near(2.0 * pri) && fundamental > near(3.0 * pri)
}

/// Stage-2 schema for a mode of experiment 5.
pub fn stage2_config(mode_class: usize) -> ExperimentConfig {
    builtin_config(if mode_class == 0 { 2 } else { 3 }).expect("builtin experiment")
}

/// Compares serial output under oracle stage-1 labels with each stage-2
/// model run on its own. Returns the per-mode metrics of both paths.
pub fn serial_oracle_metrics(stage2: &[Stage2], samples: usize, seq_len: usize, seed: u64) -> Vec<(Metrics, Metrics)> {
    let config = builtin_config(5).expect("builtin").with_seq_len(seq_len);
    let mut standalone: Vec<Vec<(Vec<usize>, Vec<usize>)>> = vec![Vec::new(); stage2.len()];
    let mut routed: Vec<Vec<(Vec<usize>, Vec<usize>)>> = vec![Vec::new(); stage2.len()];
    for i in 0..samples {
        let (sample, sources) = draw_sample_with_sources(&config, sample_seed(seed, Split::Test, i)).expect("draw");
        let serial = serial_from_modes(&sample.labels, stage2, &sample.dtoa).expect("serial");
        for (r, s) in stage2.iter().enumerate() {
            let indices: Vec<usize> = (0..sample.labels.len()).filter(|&j| sample.labels[j] == s.mode_class).collect();
            if indices.is_empty() {
                continue;
            }
            let cfg = stage2_config(s.mode_class);
            let truth: Vec<usize> = indices
                .iter()
                .map(|&j| {
                    let e = &sample.meta.emitters[sources[j].expect("mode pulses come from emitters")];
                    range_class(&cfg, e.spec.pattern.mean_pri())
                })
                .collect();
            let alone = s.model.predict_labels(&sub_stream_dtoa(&sample.dtoa, &indices)).expect("predict");
            standalone[r].push((truth.clone(), alone));
            let route = serial.routes.iter().find(|x| x.mode_class == s.mode_class).expect("route ran");
            assert_eq!(route.indices, indices);
            routed[r].push((truth, route.stage2_labels.clone()));
        }
    }
    stage2
        .iter()
        .enumerate()
        .map(|(r, s)| {
            let c = s.model.spec.num_classes;
            let a = Metrics::from_pairs(standalone[r].iter().map(|(t, p)| (&t[..], &p[..])), c).expect("metrics");
            let b = Metrics::from_pairs(routed[r].iter().map(|(t, p)| (&t[..], &p[..])), c).expect("metrics");
            (a, b)
        })
        .collect()
}

/// Bitwise equality of two metric records.
pub fn metrics_bitwise_equal(a: &Metrics, b: &Metrics) -> bool {
    let bits = |m: &Metrics| {
        (
            m.accuracy.to_bits(),
            m.per_class_accuracy.iter().map(|x| x.map(f64::to_bits)).collect::<Vec<_>>(),
            m.confusion.clone(),
            m.samples,
            m.pulses,
        )
    };
    bits(a) == bits(b)
}

/// Untrained model for contract checks.
pub fn small_model(spec: deinterleave::models::ModelSpec, seed: u64) -> Model {
    Model::init(spec, seed).expect("valid spec")
}
