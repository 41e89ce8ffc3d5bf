mod common;

#[test]
fn invariants_hold_on_every_experiment() {
    for exp in 1..=5 {
        let r = common::simulator_invariants(exp, 60);
        assert!(r.passed(), "experiment {exp}: {r:?}");
    }
}

#[test]
fn ks_detects_non_uniform_values() {
    let mut skewed: Vec<f64> = (0..500).map(|i| (i as f64 / 500.0).powi(2)).collect();
    assert!(common::ks_uniform(&mut skewed).1 < 1e-6);
    let mut even: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
    assert!(common::ks_uniform(&mut even).1 > 0.99);
}
