//! Time for one forward and backward pass over a 1000-pulse sequence for
//! each architecture at the desk budget.

use std::time::Instant;

use deinterleave::dataset::{builtin_config, generate_dataset, Split};
use deinterleave::harness::sample_loss_and_grads;
use deinterleave::models::{Model, ModelKind, ModelSpec, Preset};

fn main() -> deinterleave::Result<()> {
    let config = builtin_config(2)?;
    let data = generate_dataset(&config, 10, 1, Split::Train)?;
    for kind in [ModelKind::Blstm, ModelKind::Bgru, ModelKind::Dcn] {
        let spec = ModelSpec::from_preset(kind, Preset::Desk, config.num_classes());
        let model = Model::init(spec.clone(), 0)?;
        let t = Instant::now();
        for s in &data {
            sample_loss_and_grads(&model, &s.dtoa, &s.labels)?;
        }
        let ms = t.elapsed().as_secs_f64() * 1000.0 / data.len() as f64;
        println!("{:<5} {:>6} params  {ms:>7.1} ms per sample", kind.name(), spec.param_count());
    }
    Ok(())
}
