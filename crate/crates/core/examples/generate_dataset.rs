//! Writes a small labeled dataset for every built-in experiment and reads it
//! back.

use deinterleave::dataset::{builtin_config, generate_dataset, read_jsonl, write_jsonl, Split};

fn main() -> deinterleave::Result<()> {
    let dir = std::env::temp_dir().join("deinterleave-example");
    std::fs::create_dir_all(&dir).map_err(|e| deinterleave::Error::Io { path: dir.clone(), source: e })?;
    for exp in 1..=5 {
        let config = builtin_config(exp)?;
        let samples = generate_dataset(&config, 8, 2024, Split::Train)?;
        let path = dir.join(format!("exp{exp}.jsonl.gz"));
        write_jsonl(&samples, &path)?;
        let back = read_jsonl(&path)?;
        assert_eq!(back[3].dtoa, samples[3].dtoa);

        let mut counts = vec![0usize; config.num_classes()];
        samples.iter().flat_map(|s| &s.labels).for_each(|&l| counts[l] += 1);
        let names: Vec<_> = config.classes.iter().map(|c| c.name.as_str()).collect();
        println!("experiment {exp}: {} samples x {} pulses -> {}", samples.len(), config.seq_len, path.display());
        for (n, c) in names.iter().zip(&counts) {
            println!("    {n:<22} {c}");
        }
    }
    Ok(())
}
