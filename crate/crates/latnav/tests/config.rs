use latnav::{Error, PipelineConfig};

#[test]
fn defaults_round_trip() {
    let cfg = PipelineConfig::default();
    assert_eq!(PipelineConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn unknown_keys_are_rejected() {
    for text in [r#"{"sed": 1}"#, r#"{"svm": {"lambda": 0.1, "iters": 3}}"#, r#"{"data": {"count": 5}}"#] {
        let err = PipelineConfig::from_json(text).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{text}");
        assert_eq!(err.exit_code(), 1);
    }
}

#[test]
fn mismatched_point_counts_are_rejected() {
    let mut cfg = PipelineConfig::default();
    cfg.data.points = 256;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn section_seeds_follow_the_top_level_seed() {
    let mut a = PipelineConfig::default();
    a.seed = 1;
    let mut b = a.clone();
    b.seed = 2;
    let (ra, rb) = (a.resolved(), b.resolved());
    assert_ne!(ra.data.seed, rb.data.seed);
    assert_ne!(ra.object_ae.train.seed, rb.object_ae.train.seed);
    assert_eq!(ra, a.resolved());
}
