//! Two-stage labeling on experiment 5: pulses are split by modulation mode
//! and each mode's sub-stream is re-encoded and labeled by PRI range.

use deinterleave::dataset::{builtin_config, draw_sample_with_sources, generate_dataset, Split};
use deinterleave::harness::{range_class, serial_deinterleave, serial_from_modes, train, Stage2, TrainConfig};
use deinterleave::models::{Model, ModelSpec};

fn quick(experiment: u32, spec: ModelSpec) -> deinterleave::Result<Model> {
    let config = builtin_config(experiment)?.with_seq_len(200);
    let data = generate_dataset(&config, 200, 4, Split::Train)?;
    let cfg = TrainConfig {
        epochs: 10,
        learning_rate: 1e-2,
        crop: Some(100),
        ..TrainConfig::new(experiment, spec.kind)
    };
    Ok(train(spec, &data, None, &cfg, |_| {})?.model)
}

fn main() -> deinterleave::Result<()> {
    let exp5 = builtin_config(5)?.with_seq_len(300);
    let stage1 = quick(5, ModelSpec::bgru(16, exp5.num_classes()))?;
    let stage2 = vec![
        Stage2 { mode_class: 0, model: quick(2, ModelSpec::bgru(16, 5))? },
        Stage2 { mode_class: 1, model: quick(3, ModelSpec::bgru(16, 4))? },
    ];

    let (sample, sources) = draw_sample_with_sources(&exp5, 11)?;
    let with_model = serial_deinterleave(&stage1, &stage2, &sample.dtoa)?;
    let with_oracle = serial_from_modes(&sample.labels, &stage2, &sample.dtoa)?;
    println!("final classes: {}", with_model.num_classes);
    for (name, out) in [("stage-1 model", &with_model), ("oracle modes", &with_oracle)] {
        println!("{name}:");
        for r in &out.routes {
            let cfg = builtin_config(if r.mode_class == 0 { 2 } else { 3 })?;
            let correct = r
                .indices
                .iter()
                .zip(&r.stage2_labels)
                .filter(|(&i, &l)| sources[i].is_some_and(|s| range_class(&cfg, sample.meta.emitters[s].spec.pattern.mean_pri()) == l))
                .count();
            println!("    mode {} -> {} pulses, {correct} with the right range", r.mode_class, r.indices.len());
        }
        if !out.skipped_modes.is_empty() {
            println!("    skipped modes {:?}", out.skipped_modes);
        }
    }
    Ok(())
}
