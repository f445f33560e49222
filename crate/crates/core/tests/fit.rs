use mediated_core::fit::*;

#[test]
fn recovers_synthetic_rabi() {
    let ts: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| 0.98 * (-0.01 * t).exp() * (0.3 * t).sin().powi(2)).collect();
    let f = fit_damped_rabi(&ts, &ys).unwrap();
    assert!((f.rate - 0.3).abs() < 1e-8, "{f:?}");
    assert!((f.decay - 0.01).abs() < 1e-8);
    assert!((f.amplitude - 0.98).abs() < 1e-8);
    assert!(f.drift.abs() < 1e-10);
}

#[test]
fn separates_linear_background() {
    let ts: Vec<f64> = (0..300).map(|i| i as f64 * 0.02).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| (0.4 * t).sin().powi(2) + 0.003 * t).collect();
    let f = fit_damped_rabi(&ts, &ys).unwrap();
    assert!((f.rate - 0.4).abs() < 1e-8, "{f:?}");
    assert!((f.drift - 0.003).abs() < 1e-8);
}

#[test]
fn rising_only_window() {
    let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| (0.5 * t).sin().powi(2)).collect();
    let f = fit_damped_rabi(&ts, &ys).unwrap();
    assert!((f.rate - 0.5).abs() < 1e-6, "{f:?}");
}

#[test]
fn power_law_slope_exact() {
    let xs: Vec<f64> = (0..50).map(|i| 10f64.powf(2.0 + 2.0 * i as f64 / 49.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
    let f = loglog_slope(&xs, &ys).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12);
}

#[test]
fn narrower_window_wider_interval() {
    let wide: Vec<f64> = (0..50).map(|i| 10f64.powf(2.0 + 2.0 * i as f64 / 49.0)).collect();
    let narrow: Vec<f64> = (0..50).map(|i| 10f64.powf(2.0 + i as f64 / 49.0)).collect();
    let fw = loglog_slope(&wide, &wide.iter().map(|x| x * x).collect::<Vec<_>>()).unwrap();
    let fn_ = loglog_slope(&narrow, &narrow.iter().map(|x| x * x).collect::<Vec<_>>()).unwrap();
    assert!((fw.slope - fn_.slope).abs() < 1e-12);
    assert!(fn_.ci_half_width > fw.ci_half_width);
}

#[test]
fn rejects_bad_input() {
    assert!(fit_damped_rabi(&[0.0], &[0.0]).is_err());
    assert!(loglog_slope(&[1.0, 2.0, 3.0], &[1.0, -1.0, 2.0]).is_err());
}
