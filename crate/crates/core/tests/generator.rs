use mediated_core::generator::*;
use mediated_core::effective::EffectiveParams;
use mediated_core::model::{FrameParams, ThermalBath};
use mediated_core::effective::RateConvention;

#[test]
fn full_hamiltonian_is_hermitian_at_any_time() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.03);
    let spec = GeneratorSpec::FullLinearized { frame, thermal: None };
    for t in [0.0, 0.37, 12.5] {
        let m = spec.model_at(t);
        // a^dag b^dag pairs with a b, a^dag b with a b^dag
        for j in 0..2 {
            let h = &m.hamiltonian[4 * j..4 * j + 4];
            assert!((h[0].coeff - h[3].coeff.conj()).norm() < 1e-15);
            assert!((h[1].coeff - h[2].coeff.conj()).norm() < 1e-15);
        }
    }
}

#[test]
fn jump_rates_are_nonnegative() {
    let frame = FrameParams::reduced(1.0, 0.2, 0.5, -1.0, 0.05, 0.03);
    let params = EffectiveParams::from_frame(&frame, RateConvention::Standard).unwrap();
    let spec = GeneratorSpec::EffectiveTwoMode {
        spec: EffectiveSpec::new(params, &frame, RateConvention::Standard, false),
        thermal: Some([ThermalBath { rate: 1e-3, occupation: 3.0 }; 2]),
    };
    let jumps = spec.jumps();
    assert_eq!(jumps.len(), 6 + 4);
    assert!(jumps.iter().all(|j| j.rate > 0.0));
}
