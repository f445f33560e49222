use approx::assert_relative_eq;
use mediated_core::effective::{BathRates, EffectiveParams, RateConvention, RateTable};
use mediated_core::experiments::{effective_spec_from_frame, excitation_transfer_experiment, TransferProtocol};
use mediated_core::fock::*;
use mediated_core::generator::{EffectiveSpec, GeneratorSpec};
use mediated_core::model::FrameParams;
use mediated_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn custom_effective(j: f64, mode_1: BathRates, collective: BathRates) -> GeneratorSpec {
    let rates = RateTable {
        mode_1,
        mode_2: BathRates::default(),
        collective,
    };
    let params = EffectiveParams {
        j,
        gamma: [mode_1.gamma(), 0.0],
        gamma_bar: collective.gamma(),
        occupation: [mode_1.occupation(), None],
        occupation_bar: collective.occupation(),
        rates,
        gamma_total: mode_1.up + 2.0 * collective.up,
        xi: None,
    };
    let frame = FrameParams::reduced(1.0, 0.2, 0.0, 0.5, 0.05, 0.05);
    let mut spec = EffectiveSpec::new(params, &frame, RateConvention::Standard, false);
    spec.collective_unit = BathRates {
        down: collective.down / (0.05 * 0.05),
        up: collective.up / (0.05 * 0.05),
    };
    GeneratorSpec::EffectiveTwoMode { spec, thermal: None }
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let r = &a * a.adjoint();
    let tr = r.trace();
    r / tr
}

#[test]
fn single_mode_ladder_elements() {
    let space = FockSpace::new(&[3]).unwrap();
    let b = build_operators(&space)[0].to_dense();
    let mut expect = DMatrix::<Complex64>::zeros(3, 3);
    expect[(0, 1)] = Complex64::new(1.0, 0.0);
    expect[(1, 2)] = Complex64::new(2f64.sqrt(), 0.0);
    assert_eq!(b, expect);
}

#[test]
fn commutator_fails_only_on_top_level() {
    let space = FockSpace::new(&[4, 3]).unwrap();
    let ops = build_operators(&space);
    for (s, op) in ops.iter().enumerate() {
        let b = op.to_dense();
        let c = &b * b.adjoint() - b.adjoint() * &b;
        for i in 0..space.total() {
            for k in 0..space.total() {
                let top = space.level(i, s) == space.dims()[s] - 1;
                let expect = if i == k && !top { 1.0 } else if i == k { c[(i, i)].re } else { 0.0 };
                assert!((c[(i, k)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn number_operators_commute() {
    let space = FockSpace::new(&[2, 3, 4]).unwrap();
    let ops = build_operators(&space);
    let n: Vec<_> = ops.iter().map(|b| b.adjoint().mul(b).to_dense()).collect();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(&n[i] * &n[j], &n[j] * &n[i]);
        }
    }
}

#[test]
fn dimension_cap_and_bad_spaces() {
    assert!(matches!(FockSpace::new(&[64, 64, 2]), Err(Error::DimensionCap { total: 8192, .. })));
    assert!(FockSpace::with_cap(&[4, 4], 15).is_err());
    assert!(FockSpace::new(&[1, 3]).is_err());
    assert!(FockSpace::new(&[]).is_err());
}

#[test]
fn mixed_state_is_stationary_without_dissipation() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.0, 0.5, 0.05, 0.07);
    let spec = effective_spec_from_frame(&frame, RateConvention::Standard, false, None).unwrap();
    let space = FockSpace::new(&[3, 3]).unwrap();
    let mut gen = FockGenerator::new(&spec, &space).unwrap();
    let out = gen.liouvillian_apply(&DensityState::maximally_mixed(&space));
    assert!(out.norm() < 1e-15);
}

#[test]
fn unitary_limit_is_a_commutator() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.0, 0.5, 0.05, 0.07);
    let spec = effective_spec_from_frame(&frame, RateConvention::Standard, false, None).unwrap();
    let GeneratorSpec::EffectiveTwoMode { spec: eff, .. } = &spec else { unreachable!() };
    assert!(eff.params.rates.all().iter().all(|b| b.down == 0.0 && b.up == 0.0));
    let space = FockSpace::new(&[3, 3]).unwrap();
    let rho = DensityState::basis(&space, &[1, 0]).unwrap();
    let ops = build_operators(&space);
    let (b1, b2) = (ops[0].to_dense(), ops[1].to_dense());
    let h = (b1.adjoint() * &b2 + b2.adjoint() * &b1) * Complex64::new(eff.params.j, 0.0);
    let expect = (&h * &rho.rho - &rho.rho * &h) * Complex64::new(0.0, -1.0);
    let mut gen = FockGenerator::new(&spec, &space).unwrap();
    assert!((gen.liouvillian_apply(&rho) - expect).norm() < 1e-16);
}

#[test]
fn output_is_traceless_and_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let frame = FrameParams::reduced(1.0, 0.3, 0.4, 1.5, 0.08, 0.05);
    let full = GeneratorSpec::FullLinearized { frame: frame.clone(), thermal: None };
    let eff = effective_spec_from_frame(&frame, RateConvention::Standard, true, None).unwrap();
    for (spec, dims) in [(full, vec![3, 3, 3]), (eff, vec![4, 4])] {
        let space = FockSpace::new(&dims).unwrap();
        let mut gen = FockGenerator::new(&spec, &space).unwrap();
        for _ in 0..100 {
            let rho = DensityState {
                rho: random_density(space.total(), &mut rng),
                t: rng.gen_range(0.0..50.0),
            };
            let out = gen.liouvillian_apply(&rho);
            assert!(out.trace().norm() < 1e-12);
            assert!((&out - out.adjoint()).norm() < 1e-12);
        }
    }
}

#[test]
fn beam_splitter_transfer_is_sin_squared() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.0, 0.5, 0.05, 0.05);
    let spec = effective_spec_from_frame(&frame, RateConvention::Standard, false, None).unwrap();
    let GeneratorSpec::EffectiveTwoMode { spec: eff, .. } = &spec else { unreachable!() };
    let j = eff.params.j.abs();
    let space = FockSpace::new(&[3, 3]).unwrap();
    let rho0 = DensityState::basis(&space, &[1, 0]).unwrap();
    let t_end = std::f64::consts::FRAC_PI_2 / j;
    let traj = integrate(&spec, &space, &rho0, IntegrateOptions::new(step_bound(&spec), t_end).stride(50)).unwrap();
    for r in &traj.records {
        assert!((r.n2 - (j * r.t).sin().powi(2)).abs() < 1e-8, "{r:?}");
    }
    let last = traj.records.last().unwrap();
    assert!((last.n2 - 1.0).abs() < 1e-8);
}

#[test]
fn single_decaying_mode() {
    let gamma = 0.2;
    let spec = custom_effective(0.0, BathRates { down: gamma, up: 0.0 }, BathRates::default());
    let space = FockSpace::new(&[3, 2]).unwrap();
    let rho0 = DensityState::basis(&space, &[1, 0]).unwrap();
    let traj = integrate(&spec, &space, &rho0, IntegrateOptions::new(0.01 / gamma, 10.0).stride(10)).unwrap();
    for r in &traj.records {
        assert_relative_eq!(r.n1, (-gamma * r.t).exp(), max_relative = 1e-9);
    }
}

#[test]
fn zero_duration_returns_initial_record() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.05);
    let spec = GeneratorSpec::FullLinearized { frame, thermal: None };
    let space = FockSpace::new(&[2, 3, 3]).unwrap();
    let rho0 = DensityState::basis(&space, &[0, 1, 0]).unwrap();
    let traj = integrate(&spec, &space, &rho0, IntegrateOptions::new(1e-3, 0.0)).unwrap();
    assert_eq!(traj.records.len(), 1);
    let r = traj.records[0];
    assert_eq!((r.t, r.n1, r.n2, r.n_cav, r.trace), (0.0, 1.0, 0.0, Some(0.0), 1.0));
    assert_eq!(traj.final_state.rho, rho0.rho);
}

#[test]
fn step_bound_is_enforced() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.05);
    let spec = GeneratorSpec::FullLinearized { frame, thermal: None };
    let space = FockSpace::new(&[2, 2, 2]).unwrap();
    let rho0 = DensityState::basis(&space, &[0, 1, 0]).unwrap();
    let dt = 1.01 * step_bound(&spec);
    assert!(matches!(
        integrate(&spec, &space, &rho0, IntegrateOptions::new(dt, 1.0)),
        Err(Error::StepTooLarge { .. })
    ));
}

#[test]
fn truncation_monitor_aborts() {
    // strong blue-detuned drive pumps phonons into a tiny space
    let frame = FrameParams::reduced(1.0, 0.2, 0.5, -1.0, 0.3, 0.3);
    let spec = GeneratorSpec::FullLinearized { frame, thermal: None };
    let space = FockSpace::new(&[2, 2, 2]).unwrap();
    let rho0 = DensityState::basis(&space, &[0, 0, 0]).unwrap();
    let err = integrate(&spec, &space, &rho0, IntegrateOptions::new(step_bound(&spec), 50.0).stride(100)).unwrap_err();
    assert!(matches!(err, Error::Truncation { .. }), "{err}");
    assert!(err.to_string().contains("increase dimensions"));
}

#[test]
fn halving_step_converges() {
    let frame = FrameParams::reduced(1.0, 0.3, 0.4, 1.5, 0.08, 0.05);
    let spec = GeneratorSpec::FullLinearized { frame, thermal: None };
    let space = FockSpace::new(&[3, 3, 3]).unwrap();
    let rho0 = DensityState::basis(&space, &[0, 1, 0]).unwrap();
    let dt = step_bound(&spec);
    let run = |dt: f64| {
        let mut o = IntegrateOptions::new(dt, 20.0).stride(1_000_000);
        o.check_positivity = false;
        o.truncation_threshold = 1.0;
        *integrate(&spec, &space, &rho0, o).unwrap().records.last().unwrap()
    };
    let (a, b) = (run(dt), run(dt / 2.0));
    assert!((a.n1 - b.n1).abs() < 1e-6 * b.n1.abs());
    assert!((a.n2 - b.n2).abs() < 1e-6 * b.n2.abs());
}

#[test]
fn effective_transfer_fit_matches_closed_form() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.05);
    let spec = effective_spec_from_frame(&frame, RateConvention::Standard, false, None).unwrap();
    let r = excitation_transfer_experiment(&spec, &TransferProtocol::for_spec(&spec)).unwrap();
    assert!(r.relative_error().unwrap() < 0.01, "{:?}", r.fit);
    assert!(r.trajectory.invariants.max_trace_error < TRACE_TOLERANCE);
}

#[test]
fn decoupled_mode_receives_nothing_from_the_excitation() {
    // mode 1 factorizes out; n2 is whatever the drive creates from vacuum
    let frame = FrameParams {
        g: [0.0, 0.05],
        ..FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.05)
    };
    let spec = GeneratorSpec::FullLinearized { frame, thermal: None };
    let space = FockSpace::new(&[3, 3, 3]).unwrap();
    let run = |levels: &[usize]| {
        let rho0 = DensityState::basis(&space, levels).unwrap();
        let mut o = IntegrateOptions::new(step_bound(&spec), 150.0).stride(5000);
        o.check_positivity = false;
        integrate(&spec, &space, &rho0, o).unwrap()
    };
    let (excited, vacuum) = (run(&[0, 1, 0]), run(&[0, 0, 0]));
    for (a, b) in excited.records.iter().zip(&vacuum.records) {
        assert!((a.n2 - b.n2).abs() < 1e-6);
        assert!((a.n1 - 1.0).abs() < 1e-12);
    }
}
