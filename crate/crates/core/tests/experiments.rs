use cbfem::experiments::{
    compare_reference, parse_series, wall_scenario, InitialSpec, Report, ScalingLayer, Table, STANDARD_GRAVITY,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn scaling_round_trips(h0 in 0.01f64..100.0, x in -1e3f64..1e3, t in 0.0f64..1e3) {
        let s = ScalingLayer::new(h0, STANDARD_GRAVITY).unwrap();
        prop_assert!((s.length_to_dim(s.length_to_nd(x)) - x).abs() <= 1e-14 * x.abs().max(1.0));
        prop_assert!((s.time_to_dim(s.time_to_nd(t)) - t).abs() <= 1e-14 * t.abs().max(1.0));
        prop_assert!((s.velocity_scale() * s.time_scale() - h0).abs() <= 1e-14 * h0);
    }

    #[test]
    fn comparison_recovers_scale_and_shift(scale in 0.5f64..2.0, shift in -0.5f64..0.5) {
        let t: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01).collect();
        let pulse = |s: f64| (-(s - 10.0).powi(2)).exp();
        let z: Vec<f64> = t.iter().map(|&s| scale * pulse(s - shift)).collect();
        let r: Vec<f64> = t.iter().map(|&s| pulse(s)).collect();
        let d = compare_reference(&t, &z, &t, &r).unwrap();
        // peaks are sampled on a grid of spacing 0.01
        prop_assert!((d.amplitude_ratio - scale).abs() < 1e-4 * scale);
        prop_assert!((d.time_shift - shift).abs() <= 0.02);
    }
}

#[test]
fn identical_series_compare_exactly() {
    let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let z: Vec<f64> = t.iter().map(|x| (x / 10.0).sin() + 2.0).collect();
    let d = compare_reference(&t, &z, &t, &z).unwrap();
    assert_eq!(d.amplitude_ratio, 1.0);
    assert_eq!(d.l2_deviation, 0.0);
    let scaled: Vec<f64> = z.iter().map(|v| 1.08 * v).collect();
    assert!((compare_reference(&t, &scaled, &t, &z).unwrap().amplitude_ratio - 1.08).abs() < 1e-12);
    assert!(compare_reference(&t, &z[..10], &t, &z).is_err());
    assert!(compare_reference(&t, &z, &[500.0, 600.0], &[1.0, 2.0]).is_err());
}

#[test]
fn series_files_parse_with_headers_and_comments() {
    let (t, z) = parse_series("t,zeta\n# gauge 3\n0,1\n0.5, 2\n1,3\n").unwrap();
    assert_eq!(t, vec![0.0, 0.5, 1.0]);
    assert_eq!(z, vec![1.0, 2.0, 3.0]);
    assert!(parse_series("0,1\n0,2\n").is_err());
    assert!(parse_series("0,1\nfoo,2\n").is_err());
}

#[test]
fn the_wall_sits_at_three_sevenths_of_the_reference_depth() {
    let (sc, scaling) = wall_scenario(0.07);
    let nd = scaling.nondimensionalize(&sc);
    let bathy = cbfem::bathymetry::Bathymetry::new(nd.bathymetry.clone()).unwrap();
    assert!((bathy.depth(nd.b)[0] - 0.3 / 0.7).abs() < 1e-12);
    assert!((nd.b - 70.0 / 0.7).abs() < 1e-12);
    match nd.initial {
        InitialSpec::Kdv { a0, .. } => assert!((a0 - 0.1).abs() < 1e-15),
        ref other => panic!("{other:?}"),
    }
}

#[test]
fn reports_write_atomically_and_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = Report::new("r");
    report.metrics.push(("amplitude".into(), 0.125));
    let mut table = Table::new("final", &["x", "zeta"]);
    table.push(vec![0.0, f64::NAN]);
    table.push(vec![1.5, -2e-9]);
    report.tables.push(table);
    let written = report.write_to_dir(dir.path()).unwrap();
    assert_eq!(written.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("final.csv")).unwrap();
    assert_eq!(csv, "x,zeta\n0e0,\n1.5e0,-2e-9\n");
    let metrics = std::fs::read_to_string(dir.path().join("metrics.txt")).unwrap();
    assert_eq!(metrics, "amplitude = 1.25e-1\n");
    let leftovers = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
        .count();
    assert_eq!(leftovers, 0);
}
