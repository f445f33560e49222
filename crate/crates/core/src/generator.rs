//! Symbolic description of the two generators both engines integrate: the
//! full linearized cavity + two-mode model and the effective two-mode model.
//!
//! Each is a quadratic Hamiltonian in ladder operators plus linear jump
//! operators. The Fock and Gaussian engines lower the same description, so
//! any disagreement between them is numerical, not a transcription slip.

use num_complex::Complex64;

use crate::effective::{collective_unit_rates, BathRates, EffectiveParams, RateConvention};
use crate::model::{FrameParams, ThermalBath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ladder {
    Lower(usize),
    Raise(usize),
}

impl Ladder {
    pub fn dagger(self) -> Self {
        match self {
            Ladder::Lower(s) => Ladder::Raise(s),
            Ladder::Raise(s) => Ladder::Lower(s),
        }
    }

    pub fn subsystem(self) -> usize {
        match self {
            Ladder::Lower(s) | Ladder::Raise(s) => s,
        }
    }
}

/// `coeff * left * right`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub coeff: Complex64,
    pub left: Ladder,
    pub right: Ladder,
}

/// Dissipator `rate * D[L]` with `L = sum_i c_i op_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpOperator {
    pub rate: f64,
    pub components: Vec<(Complex64, Ladder)>,
}

impl JumpOperator {
    fn single(rate: f64, op: Ladder) -> Self {
        JumpOperator {
            rate,
            components: vec![(Complex64::new(1.0, 0.0), op)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticModel {
    pub subsystems: usize,
    pub hamiltonian: Vec<HamiltonianTerm>,
    pub jumps: Vec<JumpOperator>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveSpec {
    pub params: EffectiveParams,
    /// The collective jump is `G1 b1 + G2 b2` at these rates.
    pub collective_unit: BathRates,
    pub couplings: [f64; 2],
    /// Extra `delta_j b_j^dag b_j` terms; zero unless the spring shift is absorbed.
    pub shifts: [f64; 2],
}

impl EffectiveSpec {
    pub fn new(
        params: EffectiveParams,
        frame: &FrameParams,
        conv: RateConvention,
        absorb_spring: bool,
    ) -> Self {
        EffectiveSpec {
            params,
            collective_unit: collective_unit_rates(frame, conv),
            couplings: frame.g,
            shifts: if absorb_spring {
                frame.spring_shift
            } else {
                [0.0; 2]
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    /// Cavity fluctuations (subsystem 0) and both mechanical modes (1, 2) in
    /// the displaced interaction picture; explicitly time dependent.
    FullLinearized {
        frame: FrameParams,
        thermal: Option<[ThermalBath; 2]>,
    },
    /// Mechanical modes only (subsystems 0, 1); time independent.
    EffectiveTwoMode {
        spec: EffectiveSpec,
        thermal: Option<[ThermalBath; 2]>,
    },
}

const FULL_PAIRS: [(Ladder, Ladder); 4] = [
    (Ladder::Raise(0), Ladder::Raise(1)),
    (Ladder::Raise(0), Ladder::Lower(1)),
    (Ladder::Lower(0), Ladder::Raise(1)),
    (Ladder::Lower(0), Ladder::Lower(1)),
];

impl GeneratorSpec {
    pub fn subsystems(&self) -> usize {
        match self {
            GeneratorSpec::FullLinearized { .. } => 3,
            GeneratorSpec::EffectiveTwoMode { .. } => 2,
        }
    }

    /// Subsystem indices of mechanical modes 1 and 2.
    pub fn mechanical(&self) -> [usize; 2] {
        match self {
            GeneratorSpec::FullLinearized { .. } => [1, 2],
            GeneratorSpec::EffectiveTwoMode { .. } => [0, 1],
        }
    }

    pub fn cavity(&self) -> Option<usize> {
        match self {
            GeneratorSpec::FullLinearized { .. } => Some(0),
            GeneratorSpec::EffectiveTwoMode { .. } => None,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, GeneratorSpec::FullLinearized { .. })
    }

    /// Largest frequency or rate in the generator; sets the step bound.
    pub fn max_frequency(&self) -> f64 {
        let (base, thermal) = match self {
            GeneratorSpec::FullLinearized { frame, thermal } => {
                (frame.max_frequency().max(frame.kappa), thermal)
            }
            GeneratorSpec::EffectiveTwoMode { spec, thermal } => (
                spec.params
                    .max_frequency()
                    .max(spec.shifts[0].abs())
                    .max(spec.shifts[1].abs()),
                thermal,
            ),
        };
        thermal
            .iter()
            .flatten()
            .map(|b| b.rate * (b.occupation + 1.0))
            .fold(base, f64::max)
    }

    /// Hamiltonian at time `t` together with the (static) jump operators.
    /// The term layout does not depend on `t`.
    pub fn model_at(&self, t: f64) -> QuadraticModel {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.hamiltonian_len()];
        self.hamiltonian_coeffs(t, &mut coeffs);
        let hamiltonian = self
            .hamiltonian_layout()
            .into_iter()
            .zip(coeffs)
            .map(|((left, right), coeff)| HamiltonianTerm { coeff, left, right })
            .collect();
        QuadraticModel {
            subsystems: self.subsystems(),
            hamiltonian,
            jumps: self.jumps(),
        }
    }

    pub fn hamiltonian_len(&self) -> usize {
        match self {
            GeneratorSpec::FullLinearized { .. } => 8,
            GeneratorSpec::EffectiveTwoMode { .. } => 4,
        }
    }

    pub fn hamiltonian_layout(&self) -> Vec<(Ladder, Ladder)> {
        match self {
            GeneratorSpec::FullLinearized { .. } => [1, 2]
                .iter()
                .flat_map(|&m| {
                    FULL_PAIRS.iter().map(move |&(c, b)| {
                        let b = match b {
                            Ladder::Raise(_) => Ladder::Raise(m),
                            Ladder::Lower(_) => Ladder::Lower(m),
                        };
                        (c, b)
                    })
                })
                .collect(),
            GeneratorSpec::EffectiveTwoMode { .. } => vec![
                (Ladder::Raise(0), Ladder::Lower(1)),
                (Ladder::Raise(1), Ladder::Lower(0)),
                (Ladder::Raise(0), Ladder::Lower(0)),
                (Ladder::Raise(1), Ladder::Lower(1)),
            ],
        }
    }

    /// Writes the Hamiltonian coefficients at `t` in `hamiltonian_layout` order.
    pub fn hamiltonian_coeffs(&self, t: f64, out: &mut [Complex64]) {
        match self {
            GeneratorSpec::FullLinearized { frame, .. } => {
                // sum_{j,k} G_j (a^dag e^{i D_k t} + a e^{-i D_k t})(b_j^dag e^{i w_j t} + b_j e^{-i w_j t})
                let pump: [Complex64; 2] = frame.delta.map(|d| Complex64::from_polar(1.0, d * t));
                let pump_sum = pump[0] + pump[1];
                for j in 0..2 {
                    let mech = Complex64::from_polar(1.0, frame.omega[j] * t);
                    let g = frame.g[j];
                    let o = 4 * j;
                    out[o] = g * pump_sum * mech;
                    out[o + 1] = g * pump_sum * mech.conj();
                    out[o + 2] = g * pump_sum.conj() * mech;
                    out[o + 3] = g * pump_sum.conj() * mech.conj();
                }
            }
            GeneratorSpec::EffectiveTwoMode { spec, .. } => {
                let j = Complex64::new(spec.params.j, 0.0);
                out[0] = j;
                out[1] = j.conj();
                out[2] = Complex64::new(spec.shifts[0], 0.0);
                out[3] = Complex64::new(spec.shifts[1], 0.0);
            }
        }
    }

    pub fn jumps(&self) -> Vec<JumpOperator> {
        let mut jumps = Vec::new();
        let thermal = match self {
            GeneratorSpec::FullLinearized { frame, thermal } => {
                if frame.kappa > 0.0 {
                    jumps.push(JumpOperator::single(frame.kappa, Ladder::Lower(0)));
                }
                thermal
            }
            GeneratorSpec::EffectiveTwoMode { spec, thermal } => {
                let r = &spec.params.rates;
                let [c1, c2] = spec.couplings.map(|c| Complex64::new(c, 0.0));
                let unit = spec.collective_unit;
                let push = |jumps: &mut Vec<JumpOperator>, rate: f64, comps: Vec<(Complex64, Ladder)>| {
                    if rate > 0.0 {
                        jumps.push(JumpOperator { rate, components: comps });
                    }
                };
                push(&mut jumps, unit.down, vec![(c1, Ladder::Lower(0)), (c2, Ladder::Lower(1))]);
                push(&mut jumps, unit.up, vec![(c1, Ladder::Raise(0)), (c2, Ladder::Raise(1))]);
                for (m, b) in [r.mode_1, r.mode_2].iter().enumerate() {
                    if b.down > 0.0 {
                        jumps.push(JumpOperator::single(b.down, Ladder::Lower(m)));
                    }
                    if b.up > 0.0 {
                        jumps.push(JumpOperator::single(b.up, Ladder::Raise(m)));
                    }
                }
                thermal
            }
        };
        if let Some(baths) = thermal {
            for (b, m) in baths.iter().zip(self.mechanical()) {
                if b.rate > 0.0 {
                    jumps.push(JumpOperator::single(b.rate * (b.occupation + 1.0), Ladder::Lower(m)));
                    if b.occupation > 0.0 {
                        jumps.push(JumpOperator::single(b.rate * b.occupation, Ladder::Raise(m)));
                    }
                }
            }
        }
        jumps
    }
}
