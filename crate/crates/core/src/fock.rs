//! Truncated Fock-space master-equation integrator.
//!
//! Density matrices are dense and row-major; operators are sparse triplet
//! lists. The right-hand side is evaluated as `M + M^dag + sum r L rho L^dag`
//! with `M = K rho` and `K = -iH - 1/2 sum r L^dag L`, which keeps the trace
//! exactly conserved in the truncated space.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{GeneratorSpec, Ladder};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;
pub const TRUNCATION_THRESHOLD: f64 = 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FockSpace {
    dims: Vec<usize>,
}

impl FockSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(dims: &[usize], cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("subsystem dimension {d} < 2")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::DimensionCap { total, cap });
        }
        Ok(FockSpace { dims: dims.to_vec() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Index offset between neighbouring Fock levels of subsystem `s`; the
    /// first subsystem is the most significant digit.
    pub fn stride(&self, s: usize) -> usize {
        self.dims[s + 1..].iter().product()
    }

    /// Occupation of subsystem `s` in basis state `index`.
    pub fn level(&self, index: usize, s: usize) -> usize {
        (index / self.stride(s)) % self.dims[s]
    }

    pub fn index(&self, levels: &[usize]) -> usize {
        levels
            .iter()
            .enumerate()
            .map(|(s, &n)| n * self.stride(s))
            .sum()
    }
}

/// Sparse operator as `(row, col, value)` triplets, sorted and deduplicated.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    fn from_map(n: usize, map: BTreeMap<(usize, usize), Complex64>) -> Self {
        SparseOp {
            n,
            entries: map
                .into_iter()
                .filter(|(_, v)| *v != ZERO)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseOp {
            n,
            entries: (0..n).map(|i| (i, i, ONE)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let map = self
            .entries
            .iter()
            .map(|&(r, c, v)| ((c, r), v.conj()))
            .collect();
        Self::from_map(self.n, map)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let map = self.entries.iter().map(|&(r, c, v)| ((r, c), s * v)).collect();
        Self::from_map(self.n, map)
    }

    pub fn add(&self, other: &SparseOp) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(r, c, v) in self.entries.iter().chain(&other.entries) {
            *map.entry((r, c)).or_default() += v;
        }
        Self::from_map(self.n, map)
    }

    pub fn mul(&self, other: &SparseOp) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.n];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &rows[k] {
                *map.entry((r, c)).or_default() += v * w;
            }
        }
        Self::from_map(self.n, map)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `Tr(op rho)` for a row-major `rho`.
    fn expect(&self, rho: &[Complex64]) -> Complex64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| v * rho[c * self.n + r])
            .sum()
    }
}

/// Amplitudes of the coherent state `|beta>` on levels `0..dim`, before renormalization.
pub fn coherent_amplitudes(dim: usize, beta: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        out.push(c);
        c = c * beta / ((n + 1) as f64).sqrt();
    }
    out
}

pub fn number_amplitudes(dim: usize, n: usize) -> Vec<Complex64> {
    (0..dim).map(|k| if k == n { ONE } else { Complex64::new(0.0, 0.0) }).collect()
}

/// Annihilation operator of every subsystem, embedded in the full space.
pub fn build_operators(space: &FockSpace) -> Vec<SparseOp> {
    let n = space.total();
    (0..space.dims().len())
        .map(|s| {
            let stride = space.stride(s);
            let entries = (0..n)
                .filter_map(|i| {
                    let level = space.level(i, s);
                    (level > 0).then(|| (i - stride, i, Complex64::new((level as f64).sqrt(), 0.0)))
                })
                .collect();
            SparseOp { n, entries }
        })
        .collect()
}

fn ladder_op(ops: &[SparseOp], l: Ladder) -> SparseOp {
    match l {
        Ladder::Lower(s) => ops[s].clone(),
        Ladder::Raise(s) => ops[s].adjoint(),
    }
}

#[derive(Clone, Debug)]
pub struct DensityState {
    pub rho: DMatrix<Complex64>,
    pub t: f64,
}

impl DensityState {
    /// Pure basis state with the given levels.
    pub fn basis(space: &FockSpace, levels: &[usize]) -> Result<Self> {
        if levels.len() != space.dims().len() || levels.iter().zip(space.dims()).any(|(n, d)| n >= d) {
            return Err(Error::InvalidSpace(format!(
                "levels {levels:?} do not fit dimensions {:?}",
                space.dims()
            )));
        }
        let n = space.total();
        let mut rho = DMatrix::zeros(n, n);
        let i = space.index(levels);
        rho[(i, i)] = ONE;
        Ok(DensityState { rho, t: 0.0 })
    }

    /// `|psi_1> (x) |psi_2> (x) ...`, each factor given by its Fock amplitudes
    /// and renormalized after truncation.
    pub fn product(space: &FockSpace, factors: &[Vec<Complex64>]) -> Result<Self> {
        if factors.len() != space.dims().len() || factors.iter().zip(space.dims()).any(|(f, &d)| f.len() != d) {
            return Err(Error::InvalidSpace(format!(
                "factor lengths do not match dimensions {:?}",
                space.dims()
            )));
        }
        let mut psi = DVector::from_element(1, ONE);
        for f in factors {
            let norm = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidSpace("zero state factor".into()));
            }
            let v = DVector::from_iterator(f.len(), f.iter().map(|c| c / norm));
            psi = psi.kronecker(&v);
        }
        Ok(DensityState {
            rho: &psi * psi.adjoint(),
            t: 0.0,
        })
    }

    pub fn maximally_mixed(space: &FockSpace) -> Self {
        let n = space.total();
        DensityState {
            rho: DMatrix::from_diagonal_element(n, n, Complex64::new(1.0 / n as f64, 0.0)),
            t: 0.0,
        }
    }

    fn to_row_major(&self) -> Vec<Complex64> {
        self.rho.transpose().as_slice().to_vec()
    }

    fn from_row_major(n: usize, data: &[Complex64], t: f64) -> Self {
        DensityState {
            rho: DMatrix::from_row_slice(n, n, data),
            t,
        }
    }
}

/// A [`GeneratorSpec`] lowered onto a concrete Fock space.
pub struct FockGenerator {
    n: usize,
    space: FockSpace,
    spec: GeneratorSpec,
    /// Union sparsity pattern of `K(t)`.
    pattern: Vec<(usize, usize)>,
    static_vals: Vec<Complex64>,
    /// `(pattern index, hamiltonian term, matrix element)`.
    driven: Vec<(usize, usize, Complex64)>,
    jumps: Vec<(f64, SparseOp)>,
    number: Vec<SparseOp>,
    coherence: SparseOp,
    lowering: [SparseOp; 2],
    coeffs: Vec<Complex64>,
    vals: Vec<Complex64>,
    scratch: Vec<Complex64>,
    scratch2: Vec<Complex64>,
}

impl FockGenerator {
    pub fn new(spec: &GeneratorSpec, space: &FockSpace) -> Result<Self> {
        if space.dims().len() != spec.subsystems() {
            return Err(Error::InvalidSpace(format!(
                "generator has {} subsystems, space has {}",
                spec.subsystems(),
                space.dims().len()
            )));
        }
        let n = space.total();
        let ops = build_operators(space);
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut static_vals = Vec::new();
        let mut slot = |r: usize, c: usize, vals: &mut Vec<Complex64>| {
            *index.entry((r, c)).or_insert_with(|| {
                vals.push(ZERO);
                vals.len() - 1
            })
        };
        let mut jumps = Vec::new();
        for jump in spec.jumps() {
            let l = jump
                .components
                .iter()
                .map(|&(c, op)| ladder_op(&ops, op).scale(c))
                .reduce(|a, b| a.add(&b))
                .unwrap_or_else(|| SparseOp { n, entries: vec![] });
            let ldl = l.adjoint().mul(&l);
            for &(r, c, v) in ldl.entries() {
                let i = slot(r, c, &mut static_vals);
                static_vals[i] += -0.5 * jump.rate * v;
            }
            jumps.push((jump.rate, l));
        }
        let mut driven = Vec::new();
        for (m, (a, b)) in spec.hamiltonian_layout().into_iter().enumerate() {
            let p = ladder_op(&ops, a).mul(&ladder_op(&ops, b));
            for &(r, c, v) in p.entries() {
                let i = slot(r, c, &mut static_vals);
                driven.push((i, m, Complex64::new(0.0, -1.0) * v));
            }
        }
        let mut pattern = vec![(0, 0); static_vals.len()];
        for (&rc, &i) in &index {
            pattern[i] = rc;
        }
        let [m1, m2] = spec.mechanical();
        let number = (0..space.dims().len())
            .map(|s| ops[s].adjoint().mul(&ops[s]))
            .collect();
        let coherence = ops[m1].adjoint().mul(&ops[m2]);
        let lowering = [ops[m1].clone(), ops[m2].clone()];
        Ok(FockGenerator {
            n,
            space: space.clone(),
            spec: spec.clone(),
            vals: vec![ZERO; pattern.len()],
            pattern,
            static_vals,
            driven,
            jumps,
            number,
            coherence,
            lowering,
            coeffs: vec![ZERO; spec.hamiltonian_len()],
            scratch: vec![ZERO; n * n],
            scratch2: vec![ZERO; n * n],
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    fn refresh(&mut self, t: f64) {
        self.spec.hamiltonian_coeffs(t, &mut self.coeffs);
        self.vals.copy_from_slice(&self.static_vals);
        for &(i, m, v) in &self.driven {
            self.vals[i] += self.coeffs[m] * v;
        }
    }

    /// `d rho / dt` at time `t`, both row-major.
    pub fn rhs(&mut self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        self.refresh(t);
        out.fill(ZERO);
        for (&(r, k), &v) in self.pattern.iter().zip(&self.vals) {
            let (dst, src) = (&mut out[r * n..(r + 1) * n], &rho[k * n..(k + 1) * n]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += v * s;
            }
        }
        for r in 0..n {
            for c in r..n {
                let a = out[r * n + c];
                let b = out[c * n + r];
                out[r * n + c] = a + b.conj();
                out[c * n + r] = b + a.conj();
            }
        }
        for (rate, l) in &self.jumps {
            // L rho L^dag = L (L rho)^dag for Hermitian rho
            let tmp = &mut self.scratch;
            tmp.fill(ZERO);
            for &(r, k, v) in l.entries() {
                let (dst, src) = (&mut tmp[r * n..(r + 1) * n], &rho[k * n..(k + 1) * n]);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
            let adj = &mut self.scratch2;
            for r in 0..n {
                for c in 0..n {
                    adj[c * n + r] = tmp[r * n + c].conj();
                }
            }
            for &(r, k, v) in l.entries() {
                let w = *rate * v;
                let (dst, src) = (&mut out[r * n..(r + 1) * n], &adj[k * n..(k + 1) * n]);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }

    /// Column-major convenience wrapper around [`FockGenerator::rhs`].
    pub fn liouvillian_apply(&mut self, state: &DensityState) -> DMatrix<Complex64> {
        let rho = state.to_row_major();
        let mut out = vec![ZERO; self.n * self.n];
        self.rhs(state.t, &rho, &mut out);
        DMatrix::from_row_slice(self.n, self.n, &out)
    }

    fn record(&self, t: f64, rho: &[Complex64]) -> ExpectationRecord {
        let n = self.n;
        let trace: f64 = (0..n).map(|i| rho[i * n + i].re).sum();
        let occ = |s: usize| self.number[s].expect(rho).re / trace;
        let [m1, m2] = self.spec.mechanical();
        let mut monitor = 0.0f64;
        for (s, &d) in self.space.dims().iter().enumerate() {
            let top: f64 = (0..n)
                .filter(|&i| self.space.level(i, s) == d - 1)
                .map(|i| rho[i * n + i].re)
                .sum();
            monitor = monitor.max(top);
        }
        ExpectationRecord {
            t,
            n1: occ(m1),
            n2: occ(m2),
            n_cav: self.spec.cavity().map(occ),
            coherence: self.coherence.expect(rho) / trace,
            amplitude: self.lowering.each_ref().map(|b| b.expect(rho) / trace),
            trace,
            trunc_monitor: monitor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpectationRecord {
    pub t: f64,
    pub n1: f64,
    pub n2: f64,
    pub n_cav: Option<f64>,
    #[serde(skip)]
    pub coherence: Complex64,
    /// `<b_1>`, `<b_2>`.
    #[serde(skip)]
    pub amplitude: [Complex64; 2],
    pub trace: f64,
    pub trunc_monitor: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `stride` steps (the last step is always recorded).
    pub stride: usize,
    pub truncation_threshold: f64,
    /// Check the full eigenvalue spectrum at records (costly for big spaces).
    pub check_positivity: bool,
}

impl IntegrateOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegrateOptions {
            dt,
            t_end,
            stride: 1,
            truncation_threshold: TRUNCATION_THRESHOLD,
            check_positivity: true,
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

/// Worst deviations seen at the recorded steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct InvariantReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<ExpectationRecord>,
    pub final_state: DensityState,
    pub invariants: InvariantReport,
    pub dt: f64,
}

pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

/// Stability bound `0.01 / f_max` for the given generator.
pub fn step_bound(spec: &GeneratorSpec) -> f64 {
    0.01 / spec.max_frequency()
}

/// Drops the anti-Hermitian rounding drift, after it has been measured.
fn hermitian_part(rho: &mut [Complex64], n: usize) {
    for r in 0..n {
        rho[r * n + r].im = 0.0;
        for c in r + 1..n {
            let v = 0.5 * (rho[r * n + c] + rho[c * n + r].conj());
            rho[r * n + c] = v;
            rho[c * n + r] = v.conj();
        }
    }
}

pub fn integrate(
    spec: &GeneratorSpec,
    space: &FockSpace,
    rho0: &DensityState,
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    let f_max = spec.max_frequency();
    let bound = 0.01 / f_max;
    if !(opts.dt > 0.0) || opts.dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            dt: opts.dt,
            bound,
            f_max,
        });
    }
    if !(opts.t_end >= 0.0) {
        return Err(Error::InvalidConfig(format!("t_end = {} must be >= 0", opts.t_end)));
    }
    let mut gen = FockGenerator::new(spec, space)?;
    let n = gen.n;
    if rho0.rho.nrows() != n || rho0.rho.ncols() != n {
        return Err(Error::InvalidSpace(format!(
            "initial state has side {}, space has {n}",
            rho0.rho.nrows()
        )));
    }
    let steps = (opts.t_end / opts.dt).ceil() as usize;
    let dt = if steps == 0 { opts.dt } else { opts.t_end / steps as f64 };
    let t0 = rho0.t;
    let mut rho = rho0.to_row_major();
    let mut k = [vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n]];
    let mut stage = vec![ZERO; n * n];
    let mut records = Vec::new();
    let mut report = InvariantReport {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };

    let check = |gen: &FockGenerator, rho: &[Complex64], t: f64, report: &mut InvariantReport| -> Result<ExpectationRecord> {
        let rec = gen.record(t, rho);
        let trace_err = (1.0 - rec.trace).abs();
        let mut herm: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                herm = herm.max((rho[r * n + c] - rho[c * n + r].conj()).norm());
            }
        }
        report.max_trace_error = report.max_trace_error.max(trace_err);
        report.max_hermiticity_error = report.max_hermiticity_error.max(herm);
        if trace_err > TRACE_TOLERANCE {
            return Err(Error::Invariant { t, what: format!("trace error {trace_err:.3e}") });
        }
        if herm > HERMITICITY_TOLERANCE {
            return Err(Error::Invariant { t, what: format!("Hermiticity error {herm:.3e}") });
        }
        if opts.check_positivity {
            let m = DMatrix::from_row_slice(n, n, rho);
            let ev = m.symmetric_eigenvalues().min();
            report.min_eigenvalue = report.min_eigenvalue.min(ev);
            if ev < -POSITIVITY_TOLERANCE {
                return Err(Error::Invariant { t, what: format!("negative eigenvalue {ev:.3e}") });
            }
        }
        if rec.trunc_monitor > opts.truncation_threshold {
            return Err(Error::Truncation {
                monitor: rec.trunc_monitor,
                threshold: opts.truncation_threshold,
                t,
            });
        }
        Ok(rec)
    };

    records.push(check(&gen, &rho, t0, &mut report)?);
    for step in 0..steps {
        let t = t0 + step as f64 * dt;
        gen.rhs(t, &rho, &mut k[0]);
        for (s, (r, k0)) in stage.iter_mut().zip(rho.iter().zip(&k[0])) {
            *s = r + 0.5 * dt * k0;
        }
        gen.rhs(t + 0.5 * dt, &stage, &mut k[1]);
        for (s, (r, k1)) in stage.iter_mut().zip(rho.iter().zip(&k[1])) {
            *s = r + 0.5 * dt * k1;
        }
        gen.rhs(t + 0.5 * dt, &stage, &mut k[2]);
        for (s, (r, k2)) in stage.iter_mut().zip(rho.iter().zip(&k[2])) {
            *s = r + dt * k2;
        }
        gen.rhs(t + dt, &stage, &mut k[3]);
        let w = dt / 6.0;
        for (i, r) in rho.iter_mut().enumerate() {
            *r += w * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        if (step + 1) % opts.stride == 0 || step + 1 == steps {
            let t_rec = t0 + (step + 1) as f64 * dt;
            records.push(check(&gen, &rho, t_rec, &mut report)?);
            hermitian_part(&mut rho, n);
        }
    }
    if !opts.check_positivity {
        report.min_eigenvalue = f64::NAN;
    }
    Ok(Trajectory {
        records,
        final_state: DensityState::from_row_major(n, &rho, t0 + steps as f64 * dt),
        invariants: report,
        dt,
    })
}
