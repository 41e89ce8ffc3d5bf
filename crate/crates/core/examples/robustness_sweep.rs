//! Accuracy of a briefly trained model and of the PRI transform over fixed
//! loss and noise rates, written as CSV.

use deinterleave::classical::{Baseline, ClassMapper};
use deinterleave::dataset::{builtin_config, generate_dataset, Split};
use deinterleave::harness::{baseline_labels, rho_grid, sweep, sweep_csv, train, Condition, TrainConfig};
use deinterleave::models::{ModelKind, ModelSpec};

fn main() -> deinterleave::Result<()> {
    let config = builtin_config(2)?.with_seq_len(300);
    let data = generate_dataset(&config, 300, 5, Split::Train)?;
    let cfg = TrainConfig {
        epochs: 10,
        learning_rate: 1e-2,
        crop: Some(100),
        clip_norm: Some(1.0),
        ..TrainConfig::new(2, ModelKind::Bgru)
    };
    let model = train(ModelSpec::bgru(24, config.num_classes()), &data, None, &cfg, |_| {})?.model;
    let baseline = Baseline::for_experiment("pritran", &config)?;
    let mapper = ClassMapper::new(&config);

    let grid = rho_grid(0.5, 0.1);
    let mut rows = Vec::new();
    for condition in [Condition::A, Condition::B, Condition::C] {
        rows.extend(sweep("BGRU", &config, condition, &grid, 20, 9, |d| model.predict_labels(d))?);
        rows.extend(sweep("PRI-transform", &config, condition, &grid, 20, 9, |d| baseline_labels(&baseline, &mapper, d))?);
    }
    print!("{}", sweep_csv(&rows));
    Ok(())
}
