//! BLSTM, BGRU and dilated-convolution models sized to the same parameter
//! budget, trained briefly on the staggered-PRI experiment.

use deinterleave::dataset::{builtin_config, generate_dataset, Split};
use deinterleave::harness::{evaluate_model, train, TrainConfig};
use deinterleave::models::{ModelKind, ModelSpec, Preset};

fn main() -> deinterleave::Result<()> {
    let config = builtin_config(3)?.with_seq_len(300);
    let data = generate_dataset(&config, 120, 3, Split::Train)?;
    let test = generate_dataset(&config, 40, 3, Split::Test)?;
    let c = config.num_classes();
    for preset in [Preset::Desk, Preset::P211k, Preset::P611k] {
        let sizes: Vec<String> = [ModelKind::Blstm, ModelKind::Bgru, ModelKind::Dcn]
            .iter()
            .map(|&k| {
                let s = ModelSpec::from_preset(k, preset, c);
                format!("{} {}", k.name(), s.param_count())
            })
            .collect();
        println!("preset {:<5} {}", preset.name(), sizes.join(", "));
    }
    println!();
    for kind in [ModelKind::Blstm, ModelKind::Bgru, ModelKind::Dcn] {
        let spec = ModelSpec::from_preset(kind, Preset::Desk, c);
        let cfg = TrainConfig {
            epochs: 10,
            learning_rate: 1e-2,
            crop: Some(100),
            clip_norm: Some(1.0),
            ..TrainConfig::new(3, kind)
        };
        let t = std::time::Instant::now();
        let trained = train(spec, &data, None, &cfg, |_| {})?;
        let m = evaluate_model(&trained.model, &test)?;
        println!("{:<5} accuracy {:.4}  ({:.1}s)", kind.name(), m.accuracy, t.elapsed().as_secs_f64());
    }
    Ok(())
}
