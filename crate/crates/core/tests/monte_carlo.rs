use rsma_isac::experiment::validate_statistics;
use rsma_isac::Scenario;

#[test]
fn sample_means_match_trace_formulas() {
    let report = validate_statistics(&Scenario::reference(), 100_000).unwrap();
    println!("max deviation {:.3e}, rms {:.3e}", report.max_deviation, report.rms_deviation);
    assert_eq!(report.rows.len(), 5 * 3);
    assert!(report.max_deviation <= 0.02);
}

#[test]
fn deviation_shrinks_like_inverse_root_samples() {
    // a Rayleigh-heavy channel makes the sampling error large enough to measure
    let mut s = Scenario::reference().with_antennas(6);
    for g in s.users.iter_mut().chain(s.eavesdroppers.iter_mut()) {
        g.rician_factor = 1.0;
    }
    let small = validate_statistics(&s, 10_000).unwrap().rms_deviation;
    let large = validate_statistics(&s, 100_000).unwrap().rms_deviation;
    let ratio = small / large;
    println!("rms deviation 1e4: {small:.3e}, 1e5: {large:.3e}, ratio {ratio:.2}");
    let expected = 10f64.sqrt();
    assert!(ratio >= expected / 2.0 && ratio <= expected * 2.0, "ratio {ratio}");
}

#[test]
fn deterministic_limit() {
    let mut s = Scenario::reference();
    for g in s.users.iter_mut().chain(s.eavesdroppers.iter_mut()) {
        g.rician_factor = 1e12;
    }
    assert!(validate_statistics(&s, 10_000).unwrap().max_deviation <= 1e-3);
}
