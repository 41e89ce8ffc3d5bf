//! Trains a small BLSTM on experiment 2 (constant-PRI emitters labeled by PRI
//! range), saves the checkpoint and reports per-class accuracy.
//!
//! Pass an epoch count as the first argument for a longer run.

use deinterleave::dataset::{builtin_config, generate_dataset, Split};
use deinterleave::harness::{evaluate_model, train, TrainConfig, TrainedModel};
use deinterleave::models::{ModelKind, ModelSpec};

fn main() -> deinterleave::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let config = builtin_config(2)?.with_seq_len(300);
    let data = generate_dataset(&config, 200, 1, Split::Train)?;
    let test = generate_dataset(&config, 50, 1, Split::Test)?;

    let spec = ModelSpec::blstm(32, config.num_classes());
    let cfg = TrainConfig {
        epochs,
        learning_rate: 1e-2,
        crop: Some(100),
        clip_norm: Some(1.0),
        ..TrainConfig::new(2, ModelKind::Blstm)
    };
    println!("training {} parameters for {epochs} epochs", spec.param_count());
    let trained = train(spec, &data, Some(&test), &cfg, |s| {
        println!("epoch {:>2}  loss {:.4}  test {:.4}", s.epoch, s.train_loss, s.holdout_accuracy.unwrap_or(f64::NAN))
    })?;

    let path = std::env::temp_dir().join("exp2-blstm.ckpt");
    trained.save(&path)?;
    let reloaded = TrainedModel::load(&path)?;
    let metrics = evaluate_model(&reloaded.model, &test)?;
    println!("\noverall accuracy {:.4} over {} pulses", metrics.accuracy, metrics.pulses);
    for (class, acc) in config.classes.iter().zip(&metrics.per_class_accuracy) {
        println!("    {:<20} {}", class.name, acc.map_or("-".into(), |a| format!("{a:.3}")));
    }
    Ok(())
}
