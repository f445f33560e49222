use mediated_core::model::SystemConfig;
use mediated_core::validate::*;

fn light() -> SystemConfig {
    SystemConfig::from_reduced(1.0, 0.5, 0.5, 1.5, 0.05, 0.08)
}

#[test]
fn light_config_passes_without_full_model() {
    let opts = ValidateOptions { full_model: false, ..Default::default() };
    let r = validate(&light(), &opts).unwrap();
    assert_eq!(r.stages.len(), 5);
    for s in &r.stages[..4] {
        assert_eq!(s.status, Status::Pass, "{s:?}");
    }
    assert_eq!(r.stages[4].status, Status::Skipped);
    assert!(r.passed());
    assert_eq!(r.convention, "standard");
}

#[test]
fn corrupted_term_is_named() {
    let opts = ValidateOptions { full_model: false, corrupt_term: Some(5), ..Default::default() };
    let r = validate(&light(), &opts).unwrap();
    let s = &r.stages[0];
    assert_eq!(s.status, Status::Fail);
    assert!(s.detail.contains("#5 "), "{}", s.detail);
    assert!(!r.passed());
}

#[test]
fn out_of_range_corruption_fails_stage_one() {
    let opts = ValidateOptions { full_model: false, corrupt_term: Some(10_000), ..Default::default() };
    let r = validate(&light(), &opts).unwrap();
    assert_eq!(r.stages[0].status, Status::Fail);
    assert!(r.stages[0].detail.contains("out of range"));
}

#[test]
fn lossless_cavity_runs_unitary_engine_check() {
    let cfg = SystemConfig::from_reduced(1.0, 0.2, 0.0, 3.0, 0.1, 0.1);
    let opts = ValidateOptions { max_exchange_periods: 2.0, ..Default::default() };
    let r = validate(&cfg, &opts).unwrap();
    for s in &r.stages[..3] {
        assert_eq!(s.status, Status::Pass, "{s:?}");
    }
    assert_eq!(r.stages[3].status, Status::Pass, "{:?}", r.stages[3]);
    assert!(r.stages[3].detail.contains("unitary"));
    assert_eq!(r.stages[4].status, Status::Skipped);
}

#[test]
fn window_is_capped_by_exchange_periods() {
    let p = mediated_core::effective::EffectiveParams::from_frame(
        &mediated_core::model::FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.05),
        mediated_core::effective::RateConvention::Standard,
    )
    .unwrap();
    let t = cross_check_window(&p, 10.0).unwrap();
    assert!((t - 10.0 * std::f64::consts::PI / p.j.abs()).abs() < 1e-9 * t);
    assert!(t < 5.0 / p.gamma_total);
}
