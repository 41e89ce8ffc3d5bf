mod common;

#[test]
fn clean_streams_are_separated() {
    for method in ["sdif", "pritran"] {
        for emitters in [1, 2] {
            let acc = common::baseline_oracle_accuracy(method, emitters, 0..15);
            assert!(acc >= 0.99, "{method} with {emitters} emitters: {acc}");
        }
    }
}

#[test]
fn fundamental_dominates_its_multiples() {
    assert!((0..20).all(common::fundamental_beats_multiples));
}
