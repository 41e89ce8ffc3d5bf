//! Interleaves one emitter of each PRI modulation with loss, noise and
//! jitter, then prints the DTOA encoding.

use deinterleave::simulator::{compute_dtoa, rng_from_seed, simulate_stream, EmitterSpec, NoiseSpec, PlacedEmitter};

fn main() -> deinterleave::Result<()> {
    let mut rng = rng_from_seed(42);
    let specs = [
        EmitterSpec::constant(37.0, 0),
        EmitterSpec::dwell_switch(vec![52.0, 61.0, 70.0, 44.0], 5, 1),
        EmitterSpec::staggered(vec![31.0, 47.0, 59.0], 2),
    ];
    let emitters: Vec<PlacedEmitter> = specs.into_iter().map(|s| PlacedEmitter::random_phase(s, &mut rng)).collect();
    let noise = NoiseSpec::new(0.1, 0.2);
    let stream = simulate_stream(&emitters, &noise, 3, 60, &mut rng)?;
    let (dtoa, labels) = compute_dtoa(&stream)?;

    println!("{:>4} {:>9} {:>8} {:>6}", "idx", "toa", "dtoa", "label");
    for (i, (p, d)) in stream.pulses.iter().zip(&dtoa).enumerate().take(25) {
        println!("{i:>4} {:>9.2} {d:>8.2} {:>6}", p.toa, p.label);
    }
    for class in 0..4 {
        let name = ["constant", "dwell & switch", "staggered", "noise"][class];
        println!("{name:<15} {} pulses", labels.iter().filter(|&&l| l == class).count());
    }
    Ok(())
}
