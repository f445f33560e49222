//! Dynamical experiments built on the two engines.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::effective::{EffectiveParams, RateConvention};
use crate::error::{Error, Result};
use crate::fit::{fit_damped_rabi, RabiFit};
use crate::fock::{
    build_operators, integrate, step_bound, DensityState, FockSpace, IntegrateOptions, InvariantReport, SparseOp,
    Trajectory,
};
use crate::gauss::{
    evolve_covariance, spectral_abscissa, steady_state, CovarianceState, EvolveOptions, GaussGenerator,
    GaussTrajectory,
};
use crate::generator::{EffectiveSpec, GeneratorSpec};
use crate::model::{derive_frame, FrameParams, SystemConfig};

/// Which generator drives an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    Full,
    Effective,
}

pub fn full_spec(config: &SystemConfig) -> Result<GeneratorSpec> {
    Ok(GeneratorSpec::FullLinearized {
        frame: derive_frame(config)?,
        thermal: config.thermal_baths,
    })
}

pub fn effective_spec(config: &SystemConfig, conv: RateConvention) -> Result<GeneratorSpec> {
    let frame = derive_frame(config)?;
    effective_spec_from_frame(&frame, conv, config.absorb_spring, config.thermal_baths)
}

pub fn effective_spec_from_frame(
    frame: &FrameParams,
    conv: RateConvention,
    absorb_spring: bool,
    thermal: Option<[crate::model::ThermalBath; 2]>,
) -> Result<GeneratorSpec> {
    let params = EffectiveParams::from_frame(frame, conv)?;
    Ok(GeneratorSpec::EffectiveTwoMode {
        spec: EffectiveSpec::new(params, frame, conv, absorb_spring),
        thermal,
    })
}

#[derive(Clone, Debug)]
pub struct TransferProtocol {
    /// Fock dimensions; `(d_c, d_1, d_2)` for the full model, `(d_1, d_2)` otherwise.
    /// Defaults are `(4, 3, 3)` and `(5, 5)`.
    pub dims: Vec<usize>,
    /// Defaults to `1.2 * pi / (2 |J|)`, just past the first full transfer.
    pub t_end: Option<f64>,
    /// Defaults to the stability bound `0.01 / f_max`.
    pub dt: Option<f64>,
    pub records: usize,
    pub check_positivity: bool,
    pub truncation_threshold: f64,
}

impl TransferProtocol {
    pub fn for_spec(spec: &GeneratorSpec) -> Self {
        TransferProtocol {
            dims: if spec.cavity().is_some() { vec![4, 3, 3] } else { vec![5, 5] },
            t_end: None,
            dt: None,
            records: 600,
            check_positivity: true,
            truncation_threshold: crate::fock::TRUNCATION_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransferResult {
    pub j_closed: f64,
    pub fit: std::result::Result<RabiFit, String>,
    pub trajectory: Trajectory,
}

impl TransferResult {
    pub fn j_fit(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.rate)
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.j_fit().map(|j| (j - self.j_closed.abs()).abs() / self.j_closed.abs())
    }
}

fn closed_j(spec: &GeneratorSpec) -> Result<f64> {
    match spec {
        GeneratorSpec::FullLinearized { frame, .. } => crate::effective::coupling_j(frame),
        GeneratorSpec::EffectiveTwoMode { spec, .. } => Ok(spec.params.j),
    }
}

fn initial_levels(spec: &GeneratorSpec) -> Vec<usize> {
    match spec.cavity() {
        Some(_) => vec![0, 1, 0],
        None => vec![1, 0],
    }
}

fn schedule(spec: &GeneratorSpec, j: f64, t_end: Option<f64>, dt: Option<f64>, records: usize) -> Result<(f64, f64, usize)> {
    let t_end = match t_end {
        Some(t) => t,
        None if j != 0.0 => 1.2 * std::f64::consts::FRAC_PI_2 / j.abs(),
        None => {
            return Err(Error::InvalidConfig(
                "J = 0: give an explicit t_end for the transfer run".into(),
            ))
        }
    };
    let dt = dt.unwrap_or_else(|| step_bound(spec));
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    Ok((t_end, dt, (steps / records.max(1)).max(1)))
}

/// Runs `|0>_c |1, 0>` (or `|1, 0>`) and fits `<n_2>(t)` to a damped Rabi curve.
pub fn excitation_transfer_experiment(spec: &GeneratorSpec, protocol: &TransferProtocol) -> Result<TransferResult> {
    let j = closed_j(spec)?;
    let space = FockSpace::new(&protocol.dims)?;
    let rho0 = DensityState::basis(&space, &initial_levels(spec))?;
    let (t_end, dt, stride) = schedule(spec, j, protocol.t_end, protocol.dt, protocol.records)?;
    let mut opts = IntegrateOptions::new(dt, t_end).stride(stride);
    opts.check_positivity = protocol.check_positivity;
    opts.truncation_threshold = protocol.truncation_threshold;
    let trajectory = integrate(spec, &space, &rho0, opts)?;
    let ts: Vec<f64> = trajectory.records.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = trajectory.records.iter().map(|r| r.n2).collect();
    let fit = fit_damped_rabi(&ts, &ys).map_err(|e| e.to_string());
    Ok(TransferResult {
        j_closed: j,
        fit,
        trajectory,
    })
}

/// The same initial second moments on the Gaussian engine. A single phonon
/// is not Gaussian, but occupations and coherences only depend on second
/// moments, which evolve identically.
pub fn gaussian_transfer(spec: &GeneratorSpec, t_end: Option<f64>, dt: Option<f64>, records: usize) -> Result<GaussTrajectory> {
    let j = closed_j(spec)?;
    let (t_end, dt, stride) = schedule(spec, j, t_end, dt, records)?;
    let n0: Vec<f64> = initial_levels(spec).iter().map(|&n| n as f64).collect();
    let mut gen = GaussGenerator::from_spec(spec);
    evolve_covariance(&mut gen, &CovarianceState::with_occupations(&n0), EvolveOptions::new(dt, t_end).stride(stride))
}

#[derive(Clone, Debug, Serialize)]
pub struct EntanglementResult {
    pub xi: Option<f64>,
    pub max_log_negativity: f64,
    pub t_at_max: f64,
    pub min_physicality: f64,
}

/// Mode 1 starts in squeezed vacuum `r`, mode 2 in vacuum; evolves under
/// the effective generator and returns the largest `E_N(1|2)` seen.
pub fn entanglement_experiment(spec: &GeneratorSpec, r: f64, t_end: f64, dt: Option<f64>) -> Result<EntanglementResult> {
    let GeneratorSpec::EffectiveTwoMode { spec: eff, .. } = spec else {
        return Err(Error::InvalidConfig("entanglement experiment needs the effective model".into()));
    };
    let mut gen = GaussGenerator::from_spec(spec);
    let dt = dt.unwrap_or(0.01 / gen.max_frequency());
    let traj = evolve_covariance(&mut gen, &CovarianceState::squeezed(2, 0, r), EvolveOptions::new(dt, t_end))?;
    let (t_at_max, max_en) = traj
        .records
        .iter()
        .map(|r| (r.t, r.log_negativity))
        .fold((0.0, 0.0), |best, x| if x.1 > best.1 { x } else { best });
    Ok(EntanglementResult {
        xi: eff.params.xi,
        max_log_negativity: max_en,
        t_at_max,
        min_physicality: traj.records.iter().map(|r| r.physicality).fold(f64::INFINITY, f64::min),
    })
}

/// Means and symmetrized covariances of the quadratures of a density
/// matrix; mode `m` is subsystem `m`.
///
/// Only `<b>`, `<b^dag b>` and `<b b>` are evaluated on the truncated space,
/// where they are exact; the commutator part is added analytically.
pub fn moments_from_density(space: &FockSpace, state: &DensityState) -> CovarianceState {
    let ops: Vec<DMatrix<Complex64>> = build_operators(space).iter().map(SparseOp::to_dense).collect();
    let rho = &state.rho;
    let expect = |op: &DMatrix<Complex64>| (op * rho).trace();
    let modes = ops.len();
    let amp: Vec<Complex64> = ops.iter().map(expect).collect();
    let mut mean = DVector::zeros(2 * modes);
    for m in 0..modes {
        mean[2 * m] = std::f64::consts::SQRT_2 * amp[m].re;
        mean[2 * m + 1] = std::f64::consts::SQRT_2 * amp[m].im;
    }
    let mut sigma = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        for n in 0..modes {
            let nn = expect(&(ops[m].adjoint() * &ops[n]));
            let mm = expect(&(&ops[m] * &ops[n]));
            let delta = if m == n { 0.5 } else { 0.0 };
            sigma[(2 * m, 2 * n)] = mm.re + nn.re + delta;
            sigma[(2 * m + 1, 2 * n + 1)] = -mm.re + nn.re + delta;
            sigma[(2 * m, 2 * n + 1)] = mm.im + nn.im;
            sigma[(2 * n + 1, 2 * m)] = mm.im + nn.im;
        }
    }
    sigma -= &mean * mean.transpose();
    CovarianceState { mean, sigma }
}

/// Largest absolute disagreement between the two engines over a shared
/// time grid.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct EngineComparison {
    pub t_end: f64,
    pub records: usize,
    pub max_occupation_error: f64,
    pub max_coherence_error: f64,
    pub max_amplitude_error: f64,
    pub fock_invariants: InvariantReport,
    pub min_physicality: f64,
    pub max_truncation_monitor: f64,
}

impl EngineComparison {
    pub fn max_error(&self) -> f64 {
        self.max_occupation_error
            .max(self.max_coherence_error)
            .max(self.max_amplitude_error)
    }
}

/// Runs the same initial state through both engines with identical steps
/// and compares `<b_j>`, `<b_j^dag b_j>` and `<b_1^dag b_2>` at every record.
pub fn compare_engines(
    spec: &GeneratorSpec,
    space: &FockSpace,
    rho0: &DensityState,
    t_end: f64,
    records: usize,
    truncation_threshold: f64,
) -> Result<EngineComparison> {
    let dt = step_bound(spec);
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let stride = (steps / records.max(1)).max(1);
    let mut opts = IntegrateOptions::new(dt, t_end).stride(stride);
    opts.truncation_threshold = truncation_threshold;
    let fock = integrate(spec, space, rho0, opts)?;
    let mut gen = GaussGenerator::from_spec(spec);
    let gauss = evolve_covariance(
        &mut gen,
        &moments_from_density(space, rho0),
        EvolveOptions::new(dt, t_end).stride(stride),
    )?;
    if fock.records.len() != gauss.records.len() {
        return Err(Error::InvalidConfig(format!(
            "engines recorded {} and {} samples",
            fock.records.len(),
            gauss.records.len()
        )));
    }
    let mut out = EngineComparison {
        t_end,
        records: fock.records.len(),
        fock_invariants: fock.invariants,
        min_physicality: f64::INFINITY,
        ..Default::default()
    };
    for (f, g) in fock.records.iter().zip(&gauss.records) {
        if (f.t - g.t).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::InvalidConfig(format!("record times diverge: {} vs {}", f.t, g.t)));
        }
        out.max_occupation_error = out
            .max_occupation_error
            .max((f.n1 - g.n1).abs())
            .max((f.n2 - g.n2).abs());
        if let (Some(a), Some(b)) = (f.n_cav, g.n_cav) {
            out.max_occupation_error = out.max_occupation_error.max((a - b).abs());
        }
        out.max_coherence_error = out.max_coherence_error.max((f.coherence - g.coherence).norm());
        for m in 0..2 {
            out.max_amplitude_error = out.max_amplitude_error.max((f.amplitude[m] - g.amplitude[m]).norm());
        }
        out.min_physicality = out.min_physicality.min(g.physicality);
        out.max_truncation_monitor = out.max_truncation_monitor.max(f.trunc_monitor);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyStateCheck {
    pub t_end: f64,
    pub slowest_rate: f64,
    /// Max-norm distance between the Lyapunov solution and the evolved covariance.
    pub max_deviation: f64,
}

/// Evolves the Gaussian engine from vacuum for `decay_times` e-foldings of
/// the slowest mode and compares with the Lyapunov steady state.
pub fn steady_state_check(spec: &GeneratorSpec, decay_times: f64) -> Result<SteadyStateCheck> {
    let mut gen = GaussGenerator::from_spec(spec);
    if spec.is_time_dependent() {
        return Err(Error::InvalidConfig("steady state needs a time-independent generator".into()));
    }
    let dd = gen.at(0.0);
    let slowest_rate = -spectral_abscissa(&dd.a);
    let target = steady_state(&dd)?;
    let t_end = decay_times / slowest_rate;
    let dt = (0.01 / gen.max_frequency()).min(0.01 / slowest_rate);
    let steps = (t_end / dt).ceil() as usize;
    let traj = evolve_covariance(
        &mut gen,
        &CovarianceState::vacuum(spec.subsystems()),
        EvolveOptions::new(dt, t_end).stride(steps),
    )?;
    let max_deviation = (&traj.final_state.sigma - &target.sigma).amax();
    Ok(SteadyStateCheck { t_end, slowest_rate, max_deviation })
}
