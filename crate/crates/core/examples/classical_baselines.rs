//! SDIF histograms and the PRI transform on a two-emitter stream, followed by
//! both deinterleavers on an experiment-2 sample.

use deinterleave::classical::{
    pri_transform_deinterleave, pri_transform_peaks, pri_transform_spectrum, sdif_deinterleave, sdif_histogram,
    sdif_nominate, toas_from_dtoa, Baseline, HistogramConfig, PriTransformConfig,
};
use deinterleave::dataset::{builtin_config, draw_sample};
use deinterleave::harness::{baseline_predict_all, evaluate};
use deinterleave::simulator::{interleave, pri_to_toa, PulseStream};

fn main() -> deinterleave::Result<()> {
    let a = pri_to_toa(&[41.3; 120], 3.0)?;
    let b = pri_to_toa(&[67.9; 75], 11.0)?;
    let toas = interleave(&[PulseStream::from_toas(&a, 0), PulseStream::from_toas(&b, 1)]).toas();

    let hcfg = HistogramConfig::default();
    for order in 1..=2 {
        let hist = sdif_histogram(&toas, order, &hcfg)?;
        let nominated = sdif_nominate(&hist, toas.len(), &hcfg);
        println!("SDIF order {order}: bins over threshold at {:?}", nominated.iter().map(|b| b.0).collect::<Vec<_>>());
    }
    let pcfg = PriTransformConfig::default();
    let spectrum = pri_transform_spectrum(&toas, &pcfg)?;
    let span = toas[toas.len() - 1] - toas[0];
    for peak in pri_transform_peaks(&spectrum, span, &pcfg) {
        println!("PRI transform peak at {:.1} (magnitude {:.1}, {} pairs)", peak.tau, peak.magnitude, peak.pairs);
    }
    println!("SDIF finds {:?}", sdif_deinterleave(&toas, &hcfg)?.found_pris());
    println!("PRI transform finds {:?}\n", pri_transform_deinterleave(&toas, &pcfg)?.found_pris());

    let config = builtin_config(2)?;
    let samples: Vec<_> = (0..10).map(|s| draw_sample(&config, s)).collect::<Result<_, _>>()?;
    for method in ["sdif", "pritran"] {
        let baseline = Baseline::for_experiment(method, &config)?;
        let preds = baseline_predict_all(&baseline, &config, &samples)?;
        let m = evaluate(&preds, &samples, config.num_classes())?;
        println!("{method:<8} experiment 2 accuracy {:.4}", m.accuracy);
    }
    let first = toas_from_dtoa(&samples[0].dtoa);
    println!("sample 0 spans {:.0} time units", first[first.len() - 1]);
    Ok(())
}
