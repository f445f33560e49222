use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mediated_core::analysis::{self, Axis, AxisScale};
use mediated_core::effective::{self, EffectiveParams, RateConvention};
use mediated_core::emit::{self, Cell, Dataset, Format, Table};
use mediated_core::experiments::{self, TransferProtocol};
use mediated_core::model::{derive_frame, FrameParams, SystemConfig};
use mediated_core::oracle::build_coefficient_table;
use mediated_core::validate::{self, Status, ValidateOptions};
use mediated_core::Error;

#[derive(Parser, Debug)]
#[command(name = "mediated", version, about = "Cavity-mediated coupling of two mechanical modes")]
struct Cli {
    /// Key-value configuration file; the desk-scale point is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Worker threads for sweeps; 0 lets the runtime decide.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Accepted for interface stability; every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "standard", value_parser = parse_convention)]
    convention: RateConvention,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frame quantities, effective parameters and the classicality verdict.
    Params,
    /// Detunings where the exchange coupling vanishes.
    Nulls {
        /// Cavity decay rates; the configured one when absent.
        #[arg(long, value_delimiter = ',')]
        kappa: Vec<f64>,
    },
    /// Normalized |J| against the central detuning, one curve per kappa.
    Fig1 {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 1.0, 1.5, 2.0, 3.0])]
        kappa: Vec<f64>,
        #[command(flatten)]
        delta: DeltaAxis,
    },
    /// Regime map of xi over detuning and cavity decay.
    Fig2 {
        /// delta_omega / omega_bar; the configured value when absent.
        #[arg(long)]
        delta_omega: Option<f64>,
        #[command(flatten)]
        delta: DeltaAxis,
        #[arg(long, default_value_t = 0.01)]
        kappa_min: f64,
        #[arg(long, default_value_t = 10.0)]
        kappa_max: f64,
        #[arg(long, default_value_t = 61)]
        kappa_count: usize,
        #[arg(long, default_value = "log", value_parser = parse_scale)]
        kappa_scale: AxisScale,
    },
    /// Far-detuned power law of xi.
    XiAsymptote {
        /// Window start, in units of max(omega_bar, kappa).
        #[arg(long, default_value_t = 1e2)]
        lo: f64,
        #[arg(long, default_value_t = 1e4)]
        hi: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Excitation transfer in the full linearized cavity-plus-mechanics model.
    SimulateFull(SimArgs),
    /// Excitation transfer in the effective two-mode model.
    SimulateEffective(SimArgs),
    /// Entanglement generated from a squeezed mode.
    Entangle {
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Defaults to pi / |J|.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Cross-checks between the closed forms, the oracle and both engines.
    Validate {
        /// Skip the full-model transfer stage.
        #[arg(long)]
        no_full: bool,
        /// Negate one resonant oracle term before reduction.
        #[arg(long)]
        corrupt_term: Option<usize>,
        /// Also list the oracle terms dropped as off-resonant.
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Args, Debug)]
struct DeltaAxis {
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    delta_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    delta_max: f64,
    #[arg(long, default_value_t = 401)]
    delta_count: usize,
}

impl DeltaAxis {
    fn axis(&self) -> Axis {
        Axis::linear("delta_bar", self.delta_min, self.delta_max, self.delta_count)
    }
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Fock dimensions, comma separated (cavity first for the full model).
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 600)]
    records: usize,
    #[arg(long, default_value_t = mediated_core::fock::TRUNCATION_THRESHOLD)]
    truncation_threshold: f64,
    /// Skip the eigenvalue positivity check at records.
    #[arg(long)]
    no_positivity: bool,
    /// Also run the Gaussian engine and report its occupations.
    #[arg(long)]
    compare_gauss: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_convention(s: &str) -> Result<RateConvention, String> {
    s.parse()
}

fn parse_scale(s: &str) -> Result<AxisScale, String> {
    match s {
        "linear" => Ok(AxisScale::Linear),
        "log" => Ok(AxisScale::Log),
        _ => Err(format!("unknown axis scale `{s}`, expected linear or log")),
    }
}

enum Failure {
    Validation(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::ConfigParse { .. }
            | Error::UndefinedDisplacement { .. }
            | Error::InvalidSpace(_)
            | Error::DimensionCap { .. }
            | Error::StepTooLarge { .. }
            | Error::OutOfValidity(_)
            | Error::Io { .. } => Failure::Input(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn desk_config() -> SystemConfig {
    SystemConfig::from_reduced(1.0, 0.2, 0.1, 5.0, 0.05, 0.05)
}

struct Context {
    config: SystemConfig,
    frame: FrameParams,
    conv: RateConvention,
}

impl Context {
    fn dataset(&self, command: &str, args: String, tables: Vec<Table>) -> Dataset {
        Dataset {
            command: command.into(),
            provenance: format!("{command}\n{args}\nconvention = {}\n{}", self.conv.name(), self.config.canonical()),
            notes: vec![("rate-convention".into(), self.conv.name().into())],
            tables,
        }
    }
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn params(ctx: &Context) -> Result<Dataset, Failure> {
    let f = &ctx.frame;
    let p = EffectiveParams::from_frame(f, ctx.conv)?;
    let mut t = Table::new("params", &["quantity", "value"]);
    let mut row = |k: &str, v: Cell| t.push(vec![k.into(), v]);
    for (k, v) in [
        ("delta_1", f.delta[0]),
        ("delta_2", f.delta[1]),
        ("delta_bar", f.delta_bar),
        ("omega_bar", f.omega_bar),
        ("delta_omega", f.delta_omega),
        ("kappa", f.kappa),
        ("G_1", f.g[0]),
        ("G_2", f.g[1]),
        ("eta_1_re", f.eta[0].re),
        ("eta_1_im", f.eta[0].im),
        ("eta_2_re", f.eta[1].re),
        ("eta_2_im", f.eta[1].im),
        ("spring_shift_1", f.spring_shift[0]),
        ("spring_shift_2", f.spring_shift[1]),
        ("J", p.j),
        ("Gamma_1", p.gamma[0]),
        ("Gamma_2", p.gamma[1]),
        ("Gamma_bar", p.gamma_bar),
    ] {
        row(k, num(v));
    }
    row("n_1", p.occupation[0].into());
    row("n_2", p.occupation[1].into());
    row("n_bar", p.occupation_bar.into());
    for (name, b) in ["mode_1", "mode_2", "collective"].iter().zip(p.rates.all()) {
        row(&format!("{name}_down_rate"), num(b.down));
        row(&format!("{name}_up_rate"), num(b.up));
    }
    row("Gamma_total", num(p.gamma_total));
    row("xi", p.xi.into());
    row("regime", p.classicality().label().into());
    let g = f.g[0].max(f.g[1]);
    row("validity_G_over_kappa", if f.kappa > 0.0 { num(g / f.kappa) } else { Cell::Missing });
    let gap = (f.delta_bar - f.omega_bar).abs().min((f.delta_bar + f.omega_bar).abs());
    row("validity_G_over_sideband_gap", num(g / gap));
    let mut ds = ctx.dataset("params", String::new(), vec![t]);
    ds.notes.push((
        "optical-spring".into(),
        "delta_Omega = G^2 sum_k [(D_k - w)/(k^2/4 + (D_k - w)^2) + (D_k + w)/(k^2/4 + (D_k + w)^2)], a standard form chosen here".into(),
    ));
    Ok(ds)
}

fn nulls(ctx: &Context, kappas: &[f64]) -> Result<Dataset, Failure> {
    let ks = if kappas.is_empty() { vec![ctx.frame.kappa] } else { kappas.to_vec() };
    let mut t = Table::new("nulls", &["kappa", "delta_bar", "analytic"]);
    for &k in &ks {
        if k < 0.0 {
            return Err(Failure::Input(format!("kappa = {k} must be non-negative")));
        }
        let f = ctx.frame.with_kappa(k);
        let analytic = (k < 2.0 * f.omega_bar.abs()).then(|| (f.omega_bar.powi(2) - 0.25 * k * k).sqrt());
        for d in effective::find_coupling_nulls(&f) {
            let a = if d == 0.0 { Some(0.0) } else { analytic.map(|a| a.copysign(d)) };
            t.push(vec![num(k), num(d), a.into()]);
        }
    }
    Ok(ctx.dataset("nulls", format!("kappa = {ks:?}"), vec![t]))
}

fn fig1(ctx: &Context, kappas: &[f64], delta: &DeltaAxis) -> Result<Dataset, Failure> {
    let data = analysis::fig1_data(&ctx.frame, kappas, &delta.axis())?;
    let mut curves = Table::new("curves", &["kappa", "delta_bar", "abs_j_normalized"]);
    let mut nulls = Table::new("nulls", &["kappa", "delta_bar"]);
    let mut scale = Table::new("normalization", &["kappa", "max_abs_j"]);
    for c in &data.curves {
        for (d, j) in data.delta_bar.iter().zip(&c.normalized_j) {
            curves.push(vec![num(c.kappa), num(*d), num(*j)]);
        }
        for n in &c.nulls {
            nulls.push(vec![num(c.kappa), num(*n)]);
        }
        scale.push(vec![num(c.kappa), num(c.j_max)]);
    }
    Ok(ctx.dataset("fig1", format!("kappa = {kappas:?}\n{delta:?}"), vec![curves, nulls, scale]))
}

#[allow(clippy::too_many_arguments)]
fn fig2(
    ctx: &Context,
    delta_omega: Option<f64>,
    delta: &DeltaAxis,
    kappa_axis: Axis,
) -> Result<Dataset, Failure> {
    let f = &ctx.frame;
    let base = match delta_omega {
        Some(r) => FrameParams::reduced(f.omega_bar, r * f.omega_bar, f.kappa, f.delta_bar, f.g[0], f.g[1]),
        None => f.clone(),
    };
    let map = analysis::fig2_data(&base, ctx.conv, &delta.axis(), &kappa_axis)?;
    let mut grid = Table::new("grid", &["kappa", "delta_bar", "xi", "regime"]);
    for (k, &kappa) in map.kappa.iter().enumerate() {
        for (d, &db) in map.delta_bar.iter().enumerate() {
            let (xi, regime) = map.cell(k, d);
            grid.push(vec![num(kappa), num(db), xi.into(), regime.label().into()]);
        }
    }
    let mut contour = Table::new("contour", &["polyline", "delta_bar", "kappa"]);
    for (i, line) in map.contour.iter().enumerate() {
        for p in line {
            contour.push(vec![i.into(), num(p[0]), num(p[1])]);
        }
    }
    let mut onsets = Table::new("quantum_onset", &["kappa", "delta_bar_star"]);
    for o in &map.onsets {
        onsets.push(vec![num(o.kappa), o.delta_bar.into()]);
    }
    let args = format!("delta_omega = {:.16e}\n{delta:?}\n{kappa_axis:?}", base.delta_omega);
    let mut ds = ctx.dataset("fig2", args, vec![grid, contour, onsets]);
    ds.notes.push(("contour".into(), "xi = 1/2 by marching squares on xi - 1/2".into()));
    Ok(ds)
}

fn xi_asymptote(ctx: &Context, lo: f64, hi: f64, points: usize) -> Result<Dataset, Failure> {
    let r = analysis::xi_asymptote(&ctx.frame, ctx.conv, lo, hi, points)?;
    let mut samples = Table::new("samples", &["delta_bar", "xi"]);
    for (d, x) in r.delta_bar.iter().zip(&r.xi) {
        samples.push(vec![num(*d), num(*x)]);
    }
    let mut fit = Table::new("fit", &["quantity", "value"]);
    fit.push(vec!["measured_slope".into(), num(r.fit.slope)]);
    fit.push(vec!["ci95_half_width".into(), num(r.fit.ci_half_width)]);
    fit.push(vec!["predicted_slope".into(), num(r.predicted_slope)]);
    fit.push(vec!["quadratic_claim_slope".into(), num(r.quadratic_claim_slope)]);
    let mut ds = ctx.dataset("xi-asymptote", format!("lo = {lo:e}\nhi = {hi:e}\npoints = {points}"), vec![samples, fit]);
    ds.notes.push(("asymptote".into(), r.note));
    Ok(ds)
}

fn simulate(ctx: &Context, full: bool, a: &SimArgs) -> Result<Dataset, Failure> {
    let spec = if full {
        experiments::full_spec(&ctx.config)?
    } else {
        experiments::effective_spec(&ctx.config, ctx.conv)?
    };
    let mut protocol = TransferProtocol::for_spec(&spec);
    if !a.dims.is_empty() {
        protocol.dims = a.dims.clone();
    }
    protocol.t_end = a.t_end;
    protocol.dt = a.dt;
    protocol.records = a.records;
    protocol.truncation_threshold = a.truncation_threshold;
    protocol.check_positivity = !a.no_positivity;
    let r = experiments::excitation_transfer_experiment(&spec, &protocol)?;
    let gauss = if a.compare_gauss {
        let steps = r.trajectory.records.len();
        let g = experiments::gaussian_transfer(&spec, a.t_end, Some(r.trajectory.dt), a.records)?;
        if g.records.len() != steps {
            return Err(Failure::Validation(format!("engines recorded {steps} and {} samples", g.records.len())));
        }
        Some(g)
    } else {
        None
    };
    let mut cols = vec!["t", "n1", "n2", "n_cav", "coherence_re", "coherence_im", "trace", "truncation_monitor"];
    if gauss.is_some() {
        cols.extend(["gauss_n1", "gauss_n2", "gauss_n_cav"]);
    }
    let mut t = Table::new("trajectory", &cols);
    let mut max_diff = 0.0f64;
    for (i, rec) in r.trajectory.records.iter().enumerate() {
        let mut row = vec![
            num(rec.t),
            num(rec.n1),
            num(rec.n2),
            rec.n_cav.into(),
            num(rec.coherence.re),
            num(rec.coherence.im),
            num(rec.trace),
            num(rec.trunc_monitor),
        ];
        if let Some(g) = &gauss {
            let gr = &g.records[i];
            max_diff = max_diff.max((gr.n1 - rec.n1).abs()).max((gr.n2 - rec.n2).abs());
            if let (Some(x), Some(y)) = (gr.n_cav, rec.n_cav) {
                max_diff = max_diff.max((x - y).abs());
            }
            row.extend([num(gr.n1), num(gr.n2), gr.n_cav.into()]);
        }
        t.push(row);
    }
    let mut summary = Table::new("summary", &["quantity", "value"]);
    summary.push(vec!["j_closed_form_abs".into(), num(r.j_closed.abs())]);
    summary.push(vec!["j_fit".into(), r.j_fit().into()]);
    summary.push(vec!["j_relative_error".into(), r.relative_error().into()]);
    if let Ok(fit) = &r.fit {
        summary.push(vec!["fit_decay".into(), num(fit.decay)]);
        summary.push(vec!["fit_amplitude".into(), num(fit.amplitude)]);
        summary.push(vec!["fit_drift".into(), num(fit.drift)]);
        summary.push(vec!["fit_rms_residual".into(), num(fit.rms_residual)]);
    }
    let inv = r.trajectory.invariants;
    summary.push(vec!["dt".into(), num(r.trajectory.dt)]);
    summary.push(vec!["max_trace_error".into(), num(inv.max_trace_error)]);
    summary.push(vec!["max_hermiticity_error".into(), num(inv.max_hermiticity_error)]);
    summary.push(vec!["min_eigenvalue".into(), num(inv.min_eigenvalue)]);
    if gauss.is_some() {
        summary.push(vec!["max_fock_gauss_occupation_diff".into(), num(max_diff)]);
    }
    let name = if full { "simulate-full" } else { "simulate-effective" };
    let args = format!(
        "dims = {:?}\nt_end = {:?}\ndt = {:?}\nrecords = {}\nthreshold = {:e}\npositivity = {}\ngauss = {}",
        protocol.dims, a.t_end, a.dt, a.records, a.truncation_threshold, !a.no_positivity, a.compare_gauss
    );
    let mut ds = ctx.dataset(name, args, vec![t, summary]);
    if let Err(e) = &r.fit {
        ds.notes.push(("fit".into(), format!("failed: {e}")));
    }
    Ok(ds)
}

fn entangle(ctx: &Context, r: f64, t_end: Option<f64>) -> Result<Dataset, Failure> {
    let spec = experiments::effective_spec(&ctx.config, ctx.conv)?;
    let j = effective::coupling_j(&ctx.frame)?;
    let t_end = match t_end {
        Some(t) => t,
        None if j != 0.0 => std::f64::consts::PI / j.abs(),
        None => return Err(Failure::Input("J = 0: pass --t-end".into())),
    };
    let res = experiments::entanglement_experiment(&spec, r, t_end, None)?;
    let mut t = Table::new("entanglement", &["quantity", "value"]);
    t.push(vec!["squeezing_r".into(), num(r)]);
    t.push(vec!["t_end".into(), num(t_end)]);
    t.push(vec!["xi".into(), res.xi.into()]);
    t.push(vec!["max_log_negativity".into(), num(res.max_log_negativity)]);
    t.push(vec!["t_at_max".into(), num(res.t_at_max)]);
    t.push(vec!["min_physicality".into(), num(res.min_physicality)]);
    Ok(ctx.dataset("entangle", format!("r = {r:e}\nt_end = {t_end:e}"), vec![t]))
}

fn run_validate(ctx: &Context, no_full: bool, corrupt: Option<usize>, verbose: bool) -> Result<(Dataset, bool), Failure> {
    let opts = ValidateOptions {
        convention: ctx.conv,
        corrupt_term: corrupt,
        full_model: !no_full,
        ..ValidateOptions::default()
    };
    let report = validate::validate(&ctx.config, &opts)?;
    let mut t = Table::new("stages", &["stage", "name", "status", "measured", "tolerance", "detail"]);
    for s in &report.stages {
        let status = match s.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        };
        t.push(vec![s.stage.into(), s.name.into(), status.into(), s.measured.into(), s.tolerance.into(), s.detail.clone().into()]);
    }
    let mut tables = vec![t];
    if verbose {
        if let Ok(table) = build_coefficient_table(&ctx.frame) {
            let mut d = Table::new("dropped_terms", &["term", "residual_frequency"]);
            for term in &table.dropped {
                d.push(vec![term.to_string().into(), num(term.oscillation)]);
            }
            tables.push(d);
        }
    }
    let args = format!("full = {}\ncorrupt = {corrupt:?}\nverbose = {verbose}", !no_full);
    let mut ds = ctx.dataset("validate", args, tables);
    ds.notes.push(("result".into(), if report.passed() { "pass" } else { "fail" }.into()));
    Ok((ds, report.passed()))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(p) => SystemConfig::load(p)?,
        None => desk_config(),
    };
    let frame = derive_frame(&config)?;
    let ctx = Context { config, frame, conv: cli.convention };
    let mut ok = true;
    let ds = match &cli.command {
        Command::Params => params(&ctx)?,
        Command::Nulls { kappa } => nulls(&ctx, kappa)?,
        Command::Fig1 { kappa, delta } => fig1(&ctx, kappa, delta)?,
        Command::Fig2 { delta_omega, delta, kappa_min, kappa_max, kappa_count, kappa_scale } => {
            let axis = Axis { name: "kappa".into(), min: *kappa_min, max: *kappa_max, count: *kappa_count, scale: *kappa_scale };
            fig2(&ctx, *delta_omega, delta, axis)?
        }
        Command::XiAsymptote { lo, hi, points } => xi_asymptote(&ctx, *lo, *hi, *points)?,
        Command::SimulateFull(a) => simulate(&ctx, true, a)?,
        Command::SimulateEffective(a) => simulate(&ctx, false, a)?,
        Command::Entangle { r, t_end } => entangle(&ctx, *r, *t_end)?,
        Command::Validate { no_full, corrupt_term, verbose } => {
            let (ds, passed) = run_validate(&ctx, *no_full, *corrupt_term, *verbose)?;
            ok = passed;
            ds
        }
    };
    match &cli.out {
        Some(path) => emit::emit(&ds, cli.format, path)?,
        None => print!("{}", emit::render(&ds, cli.format)),
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
