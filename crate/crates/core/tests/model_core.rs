use mediated_core::model::*;
use mediated_core::Error;
use approx::assert_relative_eq;

fn base() -> SystemConfig {
    SystemConfig {
        mode_1: MechanicalMode {
            frequency: 0.9,
            coupling: 0.01,
        },
        mode_2: MechanicalMode {
            frequency: 1.1,
            coupling: 0.02,
        },
        cavity: CavityPump {
            cavity_frequency: 100.0,
            decay: 0.2,
            pump_1: 99.0,
            alpha: 2.0,
        },
        thermal_baths: None,
        absorb_spring: false,
    }
}

#[test]
fn second_pump_follows_beat_condition() {
    let cfg = base();
    assert_relative_eq!(cfg.pump_2(), 98.8, epsilon = 1e-12);
    let f = derive_frame(&cfg).unwrap();
    assert_relative_eq!(f.delta[0], 1.0, epsilon = 1e-12);
    assert_relative_eq!(f.delta[1], 1.2, epsilon = 1e-12);
    assert_relative_eq!(f.delta_omega, -0.2, epsilon = 1e-12);
    assert_relative_eq!(f.delta_bar, 1.1, epsilon = 1e-12);
    assert_relative_eq!(f.delta[0] - f.delta[1], f.delta_omega, epsilon = 1e-15);
}

#[test]
fn pump_amplitude_inverts_displacement() {
    let eta = pump_amplitude(2.0, 0.2, 1.0);
    assert_relative_eq!(eta.re, -2.0, epsilon = 1e-15);
    assert_relative_eq!(eta.im, 0.2, epsilon = 1e-15);
    let f = derive_frame(&base()).unwrap();
    for j in 0..2 {
        let a = f.displacement(j);
        assert!((a.re - 2.0).abs() / 2.0 < 1e-12 && a.im.abs() < 1e-12);
        let modulus = f.eta[j].norm() / (0.25 * f.kappa * f.kappa + f.delta[j].powi(2)).sqrt();
        assert_relative_eq!(modulus, 2.0, max_relative = 1e-12);
    }
}

#[test]
fn spring_examples() {
    assert_eq!(optical_spring(1.3, 0.0, 0.7, 0.4), 0.0);
    assert_eq!(optical_spring(0.0, 1.0, 1.0, 0.2), 0.0);
    assert_relative_eq!(optical_spring(1.0, 1.0, 1.0, 0.2), 2.0 / 4.01, epsilon = 1e-15);
    assert_relative_eq!(optical_spring(1.0, 1.0, 1.0, 0.2), 0.49875, epsilon = 1e-5);
}

#[test]
fn lossless_resonant_pump_rejected() {
    let mut cfg = base();
    cfg.cavity.decay = 0.0;
    cfg.cavity.pump_1 = 100.0;
    assert!(matches!(
        derive_frame(&cfg),
        Err(Error::UndefinedDisplacement { pump: 1 })
    ));
    cfg.cavity.pump_1 = 100.2;
    assert!(matches!(
        derive_frame(&cfg),
        Err(Error::UndefinedDisplacement { pump: 2 })
    ));
}

#[test]
fn invalid_configs_rejected() {
    let mut cfg = base();
    cfg.mode_2.frequency = cfg.mode_1.frequency;
    assert!(cfg.validate().is_err());
    let mut cfg = base();
    cfg.mode_1.coupling = 0.0;
    assert!(cfg.validate().is_err());
    let mut cfg = base();
    cfg.cavity.decay = -1.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn derive_is_deterministic() {
    let cfg = base();
    assert_eq!(derive_frame(&cfg).unwrap(), derive_frame(&cfg).unwrap());
}

#[test]
fn parse_round_trip() {
    let text = "\
# desk config
omega1 = 1.1
omega2 = 0.9
omega_c = 100
kappa = 0.1
omega_L1 = 94.9
alpha = 10
g1 = 0.005
g2 = 0.005
gamma_th_1 = 1e-4   # optional
n_th_1 = 2
absorb_spring = true
";
    let cfg = SystemConfig::parse(text).unwrap();
    assert_eq!(cfg.mode_1.frequency, 1.1);
    assert!(cfg.absorb_spring);
    let baths = cfg.thermal_baths.unwrap();
    assert_eq!(baths[0].occupation, 2.0);
    assert_eq!(baths[1].rate, 0.0);
    assert_eq!(SystemConfig::parse(&cfg.canonical()).unwrap(), cfg);
}

#[test]
fn parse_errors() {
    assert!(matches!(
        SystemConfig::parse("omega1 = 1\nbogus = 2"),
        Err(Error::ConfigParse { line: 2, .. })
    ));
    assert!(matches!(
        SystemConfig::parse("omega1 = x"),
        Err(Error::ConfigParse { line: 1, .. })
    ));
    assert!(matches!(
        SystemConfig::parse("omega1 = 1"),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn reduced_constructors_agree() {
    let cfg = SystemConfig::from_reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.04);
    let f = derive_frame(&cfg).unwrap();
    let r = FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.04);
    for j in 0..2 {
        assert_relative_eq!(f.delta[j], r.delta[j], epsilon = 1e-9);
        assert_relative_eq!(f.omega[j], r.omega[j], epsilon = 1e-12);
        assert_relative_eq!(f.g[j], r.g[j], epsilon = 1e-15);
    }
    assert_relative_eq!(f.delta_bar, 5.0, epsilon = 1e-9);
}
