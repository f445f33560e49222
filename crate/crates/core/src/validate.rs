//! Five-stage consistency check of one configuration.

use num_complex::Complex64;
use serde::Serialize;

use crate::effective::{
    collective_rates, single_mode_rates, EffectiveParams, Mode, ModeRates, RateConvention,
};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_engines, excitation_transfer_experiment, full_spec, effective_spec_from_frame, steady_state_check,
    TransferProtocol,
};
use crate::fock::{coherent_amplitudes, number_amplitudes, DensityState, FockSpace};
use crate::generator::GeneratorSpec;
use crate::model::{derive_frame, FrameParams, SystemConfig};
use crate::oracle::{build_coefficient_table, reduce_to_effective};

pub const ORACLE_TOLERANCE: f64 = 1e-9;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const ENGINE_TOLERANCE: f64 = 1e-3;
pub const STEADY_STATE_TOLERANCE: f64 = 1e-6;
pub const TRANSFER_TOLERANCE: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub name: &'static str,
    pub status: Status,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub convention: &'static str,
    pub stages: Vec<StageReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.status != Status::Fail)
    }
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub convention: RateConvention,
    /// Negates this resonant oracle term before reduction.
    pub corrupt_term: Option<usize>,
    /// Run the full tri-partite transfer (the slow stage).
    pub full_model: bool,
    pub full_dims: Vec<usize>,
    pub full_truncation_threshold: f64,
    /// Longest engine comparison window, in units of `pi / |J|`.
    pub max_exchange_periods: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            convention: RateConvention::Standard,
            corrupt_term: None,
            full_model: true,
            full_dims: vec![4, 3, 3],
            full_truncation_threshold: 5e-2,
            max_exchange_periods: 10.0,
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

fn stage(n: usize, name: &'static str, measured: Option<f64>, tolerance: Option<f64>, ok: bool, detail: String) -> StageReport {
    StageReport {
        stage: n,
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        measured,
        tolerance,
        detail,
    }
}

fn failed(n: usize, name: &'static str, e: Error) -> StageReport {
    stage(n, name, None, None, false, e.to_string())
}

fn skipped(n: usize, name: &'static str, reason: &str) -> StageReport {
    StageReport {
        stage: n,
        name,
        status: Status::Skipped,
        measured: None,
        tolerance: None,
        detail: reason.into(),
    }
}

/// Oracle reduction against the closed forms. The oracle is checked against
/// the convention it derives; any other convention is reported as a mismatch.
pub fn oracle_stage(frame: &FrameParams, conv: RateConvention, corrupt: Option<usize>) -> StageReport {
    const NAME: &str = "oracle-vs-closed-form";
    let run = || -> Result<StageReport> {
        let mut table = build_coefficient_table(frame)?;
        if let Some(idx) = corrupt {
            let count = table.resonant().count();
            let term = table.resonant_mut().nth(idx).ok_or_else(|| {
                Error::InvalidConfig(format!("corrupt-term index {idx} out of range (0..{count})"))
            })?;
            term.coefficient = -term.coefficient;
        }
        let reduced = match reduce_to_effective(&table) {
            Ok(r) => r,
            Err(Error::ResidualTerms { detail, terms }) => {
                let named: Vec<String> = terms
                    .iter()
                    .filter_map(|&i| table.resonant().nth(i).map(|t| format!("#{i} {t}")))
                    .collect();
                return Ok(stage(1, NAME, None, Some(ORACLE_TOLERANCE), false, format!("{detail}; offending terms: {}", named.join("; "))));
            }
            Err(e) => return Err(e),
        };
        let closed = EffectiveParams::from_frame(frame, conv)?;
        let mut worst = rel(reduced.params.j, closed.j);
        let mut field = "J";
        let names = ["mode 1", "mode 2", "collective"];
        for ((a, b), name) in reduced.params.rates.all().iter().zip(closed.rates.all()).zip(names) {
            for (x, y) in [(a.down, b.down), (a.up, b.up)] {
                if rel(x, y) > worst {
                    worst = rel(x, y);
                    field = name;
                }
            }
        }
        for j in 0..2 {
            if rel(reduced.spring_shift[j], frame.spring_shift[j]) > worst {
                worst = rel(reduced.spring_shift[j], frame.spring_shift[j]);
                field = "spring shift";
            }
        }
        let ok = worst < ORACLE_TOLERANCE;
        Ok(stage(1, NAME, Some(worst), Some(ORACLE_TOLERANCE), ok, format!("largest relative error on {field}")))
    };
    run().unwrap_or_else(|e| failed(1, NAME, e))
}

fn product_errors(m: &ModeRates) -> Option<f64> {
    let n = m.occupation?;
    Some(rel(m.gamma * n, m.rates.up).max(rel(m.gamma * (n + 1.0), m.rates.down)))
}

pub fn identity_stage(frame: &FrameParams, conv: RateConvention) -> StageReport {
    const NAME: &str = "lorentzian-identities";
    let baths = [
        single_mode_rates(frame, Mode::One, conv),
        single_mode_rates(frame, Mode::Two, conv),
        collective_rates(frame, conv),
    ];
    let errs: Vec<Option<f64>> = baths.iter().map(product_errors).collect();
    let worst = errs.iter().flatten().copied().fold(0.0, f64::max);
    let undefined = errs.iter().filter(|e| e.is_none()).count();
    let detail = if undefined > 0 {
        format!("{undefined} occupations undefined at this point; their finite rate pairs were used directly")
    } else {
        "gamma * n and gamma * (n + 1) against the up and down Lorentzians".into()
    };
    stage(2, NAME, Some(worst), Some(IDENTITY_TOLERANCE), worst < IDENTITY_TOLERANCE, detail)
}

/// Rates over a detuning scan through the configured point, plus the sign of
/// the oracle's jump matrix at the point itself.
pub fn positivity_stage(frame: &FrameParams, conv: RateConvention) -> StageReport {
    const NAME: &str = "complete-positivity";
    let run = || -> Result<StageReport> {
        let scale = frame.omega_bar.abs().max(frame.kappa);
        let mut min_rate = f64::INFINITY;
        for i in 0..=400 {
            let d = scale * (-10.0 + 0.05 * i as f64);
            let f = frame.with_delta_bar(d);
            if frame.kappa == 0.0 && (d.abs() - f.omega_bar.abs()).abs() < 1e-12 {
                continue;
            }
            let p = EffectiveParams::from_frame(&f, conv)?;
            for b in p.rates.all() {
                min_rate = min_rate.min(b.down).min(b.up);
            }
        }
        let k = reduce_to_effective(&build_coefficient_table(frame)?)?.kossakowski;
        let m = nalgebra::Matrix4::from_fn(|a, b| k[a][b]);
        let eig = m.symmetric_eigenvalues();
        let kscale = eig.iter().fold(0.0f64, |s, e| s.max(e.abs()));
        let min_eig = eig.min();
        let ok = min_rate >= 0.0 && min_eig >= -1e-12 * kscale;
        Ok(stage(
            3,
            NAME,
            Some(min_rate.min(min_eig)),
            Some(0.0),
            ok,
            format!("min rate over 401 detunings {min_rate:.3e}; min jump-matrix eigenvalue {min_eig:.3e}"),
        ))
    };
    run().unwrap_or_else(|e| failed(3, NAME, e))
}

/// Mode 1 coherent with `<b_1> = 0.4 + 0.2i`, mode 2 in `|1>`.
pub fn cross_check_state(space: &FockSpace) -> Result<DensityState> {
    let d = space.dims();
    DensityState::product(
        space,
        &[coherent_amplitudes(d[0], Complex64::new(0.4, 0.2)), number_amplitudes(d[1], 1)],
    )
}

/// Comparison window: `5 / Gamma_total`, capped at `periods * pi / |J|`.
pub fn cross_check_window(params: &EffectiveParams, periods: f64) -> Option<f64> {
    let cap = (params.j != 0.0).then(|| periods * std::f64::consts::PI / params.j.abs());
    let natural = (params.gamma_total > 0.0).then(|| 5.0 / params.gamma_total);
    match (natural, cap) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Fock and Gaussian engines on the effective model, escalating the
/// truncation until the monitor stays below threshold and the engines agree.
pub fn engine_stage(spec: &GeneratorSpec, periods: f64) -> StageReport {
    const NAME: &str = "fock-vs-gauss-effective";
    let GeneratorSpec::EffectiveTwoMode { spec: eff, .. } = spec else {
        return failed(4, NAME, Error::InvalidConfig("needs the effective model".into()));
    };
    let Some(t_end) = cross_check_window(&eff.params, periods) else {
        return skipped(4, NAME, "no coupling and no dissipation: nothing evolves");
    };
    let unitary = eff.params.gamma_total == 0.0;
    let mut last = None;
    for d in [6, 8, 10, 12] {
        let run = || -> Result<_> {
            let space = FockSpace::new(&[d, d])?;
            compare_engines(spec, &space, &cross_check_state(&space)?, t_end, 500, crate::fock::TRUNCATION_THRESHOLD)
        };
        match run() {
            Ok(c) if c.max_error() >= ENGINE_TOLERANCE && d < 12 => {
                last = Some(Error::Truncation {
                    monitor: c.max_truncation_monitor,
                    threshold: crate::fock::TRUNCATION_THRESHOLD,
                    t: t_end,
                })
            }
            Ok(c) => {
                let steady = if unitary {
                    None
                } else {
                    match steady_state_check(spec, 40.0) {
                        Ok(s) => Some(Ok(s.max_deviation)),
                        Err(Error::NotHurwitz { .. }) => None,
                        Err(e) => Some(Err(e)),
                    }
                };
                let (steady_ok, steady_txt) = match steady {
                    None => (true, "no stable steady state to compare".to_string()),
                    Some(Ok(dev)) => (dev < STEADY_STATE_TOLERANCE, format!("lyapunov vs long-time {dev:.3e}")),
                    Some(Err(e)) => (false, format!("steady state: {e}")),
                };
                let err = c.max_error();
                let mode = if unitary { "unitary mode, " } else { "" };
                return stage(
                    4,
                    NAME,
                    Some(err),
                    Some(ENGINE_TOLERANCE),
                    err < ENGINE_TOLERANCE && steady_ok,
                    format!("{mode}dims ({d},{d}), t in [0, {t_end:.4e}], {steady_txt}"),
                );
            }
            Err(e @ Error::Truncation { .. }) => last = Some(e),
            Err(e) => return failed(4, NAME, e),
        }
    }
    failed(4, NAME, last.expect("loop ran"))
}

pub fn transfer_stage(config: &SystemConfig, frame: &FrameParams, opts: &ValidateOptions) -> StageReport {
    const NAME: &str = "full-vs-effective-transfer";
    if frame.kappa == 0.0 {
        return skipped(5, NAME, "lossless cavity: there is no dissipative mediator to eliminate");
    }
    if !opts.full_model {
        return skipped(5, NAME, "full-model run disabled");
    }
    let run = || -> Result<StageReport> {
        let spec = full_spec(config)?;
        let mut protocol = TransferProtocol::for_spec(&spec);
        protocol.dims = opts.full_dims.clone();
        protocol.truncation_threshold = opts.full_truncation_threshold;
        let r = excitation_transfer_experiment(&spec, &protocol)?;
        let err = r.relative_error().ok_or_else(|| Error::FitFailed(format!("{:?}", r.fit)))?;
        Ok(stage(
            5,
            NAME,
            Some(err),
            Some(TRANSFER_TOLERANCE),
            err < TRANSFER_TOLERANCE,
            format!(
                "|J| = {:.6e}, fitted {:.6e}, dims {:?}, truncation threshold {:.0e}",
                r.j_closed.abs(),
                r.j_fit().unwrap_or(f64::NAN),
                opts.full_dims,
                opts.full_truncation_threshold
            ),
        ))
    };
    if crate::effective::coupling_j(frame).map_or(true, |j| j == 0.0) {
        return skipped(5, NAME, "J vanishes or is undefined here: no exchange to fit");
    }
    run().unwrap_or_else(|e| failed(5, NAME, e))
}

pub fn validate(config: &SystemConfig, opts: &ValidateOptions) -> Result<ValidationReport> {
    let frame = derive_frame(config)?;
    let conv = opts.convention;
    let mut stages = vec![
        oracle_stage(&frame, conv, opts.corrupt_term),
        identity_stage(&frame, conv),
        positivity_stage(&frame, conv),
    ];
    stages.push(match effective_spec_from_frame(&frame, conv, config.absorb_spring, config.thermal_baths) {
        Ok(spec) => engine_stage(&spec, opts.max_exchange_periods),
        Err(e) => failed(4, "fock-vs-gauss-effective", e),
    });
    stages.push(transfer_stage(config, &frame, opts));
    Ok(ValidationReport { convention: conv.name(), stages })
}
