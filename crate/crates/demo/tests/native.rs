use ldp_sobolev_demo::{allocation, channel_audit, estimate_curve};

#[test]
fn allocation_sums_to_alpha() {
    let r = allocation(15, 1, 0.8, 0.5, 1000).unwrap();
    let blocks = r["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 4);
    let total: f64 = blocks.iter().map(|b| b["budget"].as_f64().unwrap()).sum();
    assert!((total - 0.8).abs() < 1e-12);
    assert!(r["variance_bound"].as_f64().unwrap() > r["sigma_total"].as_f64().unwrap());
}

#[test]
fn estimate_curve_tracks_truth() {
    let r = estimate_curve(2, true, 7, 1.0, 50_000, 1, 101).unwrap();
    let truth = r["truth"].as_array().unwrap();
    let est = r["estimate"].as_array().unwrap();
    assert_eq!(truth.len(), 101);
    let mse: f64 = truth
        .iter()
        .zip(est)
        .map(|(a, b)| (a.as_f64().unwrap() - b.as_f64().unwrap()).powi(2))
        .sum::<f64>()
        / 101.0;
    assert!(mse < 0.25, "mse {mse}");
}

#[test]
fn audit_flags_a_wrong_pi() {
    let ok = channel_audit(4, 0.5, 0.0, 50, 3).unwrap();
    assert_eq!(ok["pass"], true);
    let bad = channel_audit(4, 0.5, 0.95, 50, 3).unwrap();
    assert_eq!(bad["pass"], false);
}

#[test]
fn invalid_inputs_are_errors() {
    assert!(allocation(6, 1, 1.0, 1.0, 100).is_err());
    assert!(estimate_curve(2, true, 7, -1.0, 100, 1, 10).is_err());
    assert!(channel_audit(0, 0.5, 0.0, 10, 1).is_err());
}
