use mediated_core::gauss::*;
use mediated_core::generator::{Ladder, QuadraticModel};
use mediated_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use mediated_core::generator::{HamiltonianTerm, JumpOperator};
use approx::assert_relative_eq;

fn damped(omega: f64, kappa: f64) -> QuadraticModel {
    QuadraticModel {
        subsystems: 1,
        hamiltonian: vec![HamiltonianTerm {
            coeff: Complex64::new(omega, 0.0),
            left: Ladder::Raise(0),
            right: Ladder::Lower(0),
        }],
        jumps: vec![JumpOperator {
            rate: kappa,
            components: vec![(Complex64::new(1.0, 0.0), Ladder::Lower(0))],
        }],
    }
}

#[test]
fn damped_oscillator_matrices() {
    let dd = drift_diffusion_from_model(&damped(1.3, 0.4));
    let a = DMatrix::from_row_slice(2, 2, &[-0.2, 1.3, -1.3, -0.2]);
    assert!((dd.a - a).norm() < 1e-15);
    assert!((dd.d - DMatrix::identity(2, 2) * 0.2).norm() < 1e-15);
}

#[test]
fn thermal_steady_state() {
    let (g, n) = (0.3, 2.5);
    let model = QuadraticModel {
        subsystems: 1,
        hamiltonian: vec![],
        jumps: vec![
            JumpOperator { rate: g * (n + 1.0), components: vec![(Complex64::new(1.0, 0.0), Ladder::Lower(0))] },
            JumpOperator { rate: g * n, components: vec![(Complex64::new(1.0, 0.0), Ladder::Raise(0))] },
        ],
    };
    let s = steady_state(&drift_diffusion_from_model(&model)).unwrap();
    assert!((s.sigma - DMatrix::identity(2, 2) * (n + 0.5)).norm() < 1e-12);
}

#[test]
fn two_mode_squeezed_negativity() {
    for r in [0.0, 0.3, 1.0, 1.7] {
        let s = CovarianceState::two_mode_squeezed(r);
        assert_relative_eq!(log_negativity(&s, &[0], &[1]).unwrap(), 2.0 * r, epsilon = 1e-10);
        assert_relative_eq!(log_negativity_invariants(&s.sigma), 2.0 * r, epsilon = 1e-10);
    }
}

#[test]
fn vacuum_symplectic_spectrum() {
    let nu = CovarianceState::vacuum(3).symplectic_eigenvalues().unwrap();
    assert_eq!(nu.len(), 3);
    assert!(nu.iter().all(|v| (v - 0.5).abs() < 1e-14));
    assert!(CovarianceState::vacuum(2).physicality().abs() < 1e-14);
}

#[test]
fn non_hurwitz_rejected() {
    let dd = drift_diffusion_from_model(&damped(1.0, 0.0));
    assert!(matches!(steady_state(&dd), Err(Error::NotHurwitz { .. })));
}
