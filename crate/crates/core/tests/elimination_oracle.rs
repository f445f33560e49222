use mediated_core::oracle::*;
use mediated_core::model::FrameParams;
use mediated_core::Error;
use num_complex::Complex64;
use mediated_core::effective::{coupling_j, EffectiveParams, RateConvention};
use approx::assert_relative_eq;

#[test]
fn fraction_reference_value() {
    let f = coherence_fraction(0.2, 1.0, 1.0, true).conj();
    assert_relative_eq!(f.re, 0.1 / 4.01, epsilon = 1e-15);
    assert_relative_eq!(f.im, 2.0 / 4.01, epsilon = 1e-15);
    assert_relative_eq!(f.re, 0.024938, epsilon = 1e-6);
    assert_relative_eq!(f.im, 0.498753, epsilon = 1e-6);
}

#[test]
fn table_sizes_and_rwa_filter() {
    let f = FrameParams::reduced(1.0, 0.3, 0.2, 0.7, 0.05, 0.04);
    let t = build_coefficient_table(&f).unwrap();
    assert_eq!(t.single_mode_terms.len(), 32);
    assert_eq!(t.cross_terms.len(), 16);
    assert_eq!(t.dropped.len(), 256 - 48);
    assert!(t.resonant().all(|x| x.residual.is_resonant() && x.oscillation == 0.0));
    assert!(t.dropped.iter().all(|x| !x.residual.is_resonant()));
}

#[test]
fn cross_terms_use_common_sideband() {
    // delta_2 - omega_2 and delta_1 - omega_1 both equal delta_bar - omega_bar
    let f = FrameParams::reduced(1.0, 0.3, 0.2, 0.7, 0.05, 0.04);
    assert!((f.delta[1] - f.omega[1] - (f.delta[0] - f.omega[0])).abs() < 1e-15);
    let t = build_coefficient_table(&f).unwrap();
    for term in &t.cross_terms {
        let (j, k, s) = term.source;
        let shift = f.delta[k] + if s { f.omega[j] } else { -f.omega[j] };
        let expect = if s { f.delta_bar + f.omega_bar } else { f.delta_bar - f.omega_bar };
        assert!((shift - expect).abs() < 1e-12, "{term}");
    }
}

#[test]
fn small_kappa_j_matches_closed_form() {
    let f = FrameParams::reduced(1.0, 0.2, 1e-6, 0.5, 0.05, 0.05);
    let r = reduce_to_effective(&build_coefficient_table(&f).unwrap()).unwrap();
    let j = coupling_j(&f).unwrap();
    assert_relative_eq!(r.params.j, j, max_relative = 1e-9);
}

#[test]
fn decoupled_mode_has_no_cross_terms() {
    let f = FrameParams {
        g: [0.0, 0.07],
        ..FrameParams::reduced(1.0, 0.2, 0.3, 0.8, 0.05, 0.07)
    };
    let t = build_coefficient_table(&f).unwrap();
    assert!(t.cross_terms.iter().all(|x| x.coefficient == Complex64::default()));
    let r = reduce_to_effective(&t).unwrap();
    assert_eq!(r.params.j, 0.0);
    assert_eq!(r.params.gamma_bar, 0.0);
    // the collective Lorentzian lands on mode 2 with weight G2^2
    let closed = EffectiveParams::from_frame(&f, RateConvention::Standard).unwrap();
    let unit = mediated_core::effective::collective_unit_rates(&f, RateConvention::Standard);
    let g2 = f.g[1] * f.g[1];
    assert_relative_eq!(
        r.params.rates.mode_2.down,
        closed.rates.mode_2.down + g2 * unit.down,
        max_relative = 1e-9
    );
    assert_relative_eq!(
        r.params.rates.mode_2.up,
        closed.rates.mode_2.up + g2 * unit.up,
        max_relative = 1e-9
    );
}

#[test]
fn reduction_matches_standard_not_halved() {
    let f = FrameParams::reduced(1.0, 0.4, 0.3, 1.2, 0.05, 0.08);
    let r = reduce_to_effective(&build_coefficient_table(&f).unwrap()).unwrap();
    let std = EffectiveParams::from_frame(&f, RateConvention::Standard).unwrap();
    let half = EffectiveParams::from_frame(&f, RateConvention::HalvedMirrored).unwrap();
    for (a, b) in r.params.rates.all().iter().zip(std.rates.all()) {
        assert_relative_eq!(a.down, b.down, max_relative = 1e-10);
        assert_relative_eq!(a.up, b.up, max_relative = 1e-10);
    }
    // the halved table misses by a factor two on the collective bath ...
    assert_relative_eq!(
        r.params.rates.collective.down,
        2.0 * half.rates.collective.down,
        max_relative = 1e-10
    );
    // ... and assigns the single-mode sidebands the other way round
    assert_relative_eq!(
        r.params.rates.mode_1.up / f.g[0].powi(2),
        2.0 * half.rates.mode_2.up / f.g[1].powi(2),
        max_relative = 1e-10
    );
}

#[test]
fn spring_shift_matches_frame() {
    let f = FrameParams::reduced(1.0, 0.4, 0.3, 1.7, 0.05, 0.08);
    let r = reduce_to_effective(&build_coefficient_table(&f).unwrap()).unwrap();
    for j in 0..2 {
        assert_relative_eq!(r.spring_shift[j], f.spring_shift[j], max_relative = 1e-10);
    }
}

#[test]
fn corrupted_sign_is_reported() {
    let f = FrameParams::reduced(1.0, 0.4, 0.3, 1.2, 0.05, 0.08);
    let base = build_coefficient_table(&f).unwrap();
    let n = base.resonant().count();
    for idx in 0..n {
        let mut t = base.clone();
        let term = t.resonant_mut().nth(idx).unwrap();
        term.coefficient = -term.coefficient;
        match reduce_to_effective(&t) {
            Err(Error::ResidualTerms { terms, .. }) => {
                assert!(terms.contains(&idx), "term {idx} not named in {terms:?}")
            }
            other => panic!("corrupting term {idx} went unnoticed: {other:?}"),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

#[test]
fn thousand_random_draws_match_closed_forms() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f = FrameParams::reduced(
            1.0,
            rng.gen_range(0.05..1.9),
            rng.gen_range(0.01..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(0.01..0.2),
            rng.gen_range(0.01..0.2),
        );
        let r = reduce_to_effective(&build_coefficient_table(&f).unwrap()).unwrap();
        let c = EffectiveParams::from_frame(&f, RateConvention::Standard).unwrap();
        worst = worst.max(rel(r.params.j, c.j));
        worst = worst.max(rel(r.params.gamma_total, c.gamma_total));
        for (a, b) in r.params.rates.all().iter().zip(c.rates.all()) {
            worst = worst.max(rel(a.down, b.down)).max(rel(a.up, b.up));
        }
        for j in 0..2 {
            worst = worst.max(rel(r.spring_shift[j], f.spring_shift[j]));
        }
    }
    assert!(worst < 1e-9, "worst relative error {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn kossakowski_matrix_is_positive() {
    use nalgebra::Matrix4;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let f = FrameParams::reduced(
            1.0,
            rng.gen_range(0.05..1.9),
            rng.gen_range(0.01..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(0.01..0.2),
            rng.gen_range(0.01..0.2),
        );
        let k = reduce_to_effective(&build_coefficient_table(&f).unwrap()).unwrap().kossakowski;
        let m = Matrix4::from_fn(|a, b| k[a][b]);
        let eig = m.symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0f64, |s, e| s.max(e.abs()));
        assert!(eig.iter().all(|&e| e >= -1e-12 * scale), "{eig}");
    }
}
