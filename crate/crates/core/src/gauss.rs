//! Exact first- and second-moment dynamics of the quadratic models.
//!
//! Quadratures are ordered `(x_1, p_1, ..., x_N, p_N)` with
//! `b = (x + i p)/sqrt(2)`; the vacuum has `sigma = I/2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{GeneratorSpec, Ladder, QuadraticModel};

pub const PHYSICALITY_TOLERANCE: f64 = 1e-6;

/// Block-diagonal symplectic form.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        o[(2 * m, 2 * m + 1)] = 1.0;
        o[(2 * m + 1, 2 * m)] = -1.0;
    }
    o
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState {
    pub mean: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl CovarianceState {
    pub fn vacuum(modes: usize) -> Self {
        Self::with_occupations(&vec![0.0; modes])
    }

    /// Diagonal state with `<b^dag b> = n_m` per mode.
    pub fn with_occupations(n: &[f64]) -> Self {
        let diag: Vec<f64> = n.iter().flat_map(|&x| [x + 0.5, x + 0.5]).collect();
        CovarianceState {
            mean: DVector::zeros(diag.len()),
            sigma: DMatrix::from_diagonal(&DVector::from_vec(diag)),
        }
    }

    /// Single-mode squeezed vacuum on `mode`, vacuum elsewhere.
    pub fn squeezed(modes: usize, mode: usize, r: f64) -> Self {
        let mut s = Self::vacuum(modes);
        s.sigma[(2 * mode, 2 * mode)] = 0.5 * (-2.0 * r).exp();
        s.sigma[(2 * mode + 1, 2 * mode + 1)] = 0.5 * (2.0 * r).exp();
        s
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let (c, s) = (0.5 * (2.0 * r).cosh(), 0.5 * (2.0 * r).sinh());
        let sigma = DMatrix::from_row_slice(
            4,
            4,
            &[c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c],
        );
        CovarianceState {
            mean: DVector::zeros(4),
            sigma,
        }
    }

    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn occupation(&self, m: usize) -> f64 {
        let (x, p) = (2 * m, 2 * m + 1);
        0.5 * (self.sigma[(x, x)] + self.sigma[(p, p)] + self.mean[x].powi(2) + self.mean[p].powi(2) - 1.0)
    }

    /// `<b_m> = (<x_m> + i <p_m>) / sqrt 2`.
    pub fn amplitude(&self, m: usize) -> Complex64 {
        Complex64::new(self.mean[2 * m], self.mean[2 * m + 1]) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// `<b_m^dag b_n>` for `m != n`.
    pub fn coherence(&self, m: usize, n: usize) -> Complex64 {
        let s = |i: usize, j: usize| self.sigma[(i, j)] + self.mean[i] * self.mean[j];
        let (xm, pm, xn, pn) = (2 * m, 2 * m + 1, 2 * n, 2 * n + 1);
        Complex64::new(
            0.5 * (s(xm, xn) + s(pm, pn)),
            0.5 * (s(xm, pn) - s(pm, xn)),
        )
    }

    /// Restriction to the given modes, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Self {
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = idx.len();
        CovarianceState {
            mean: DVector::from_iterator(k, idx.iter().map(|&i| self.mean[i])),
            sigma: DMatrix::from_fn(k, k, |i, j| self.sigma[(idx[i], idx[j])]),
        }
    }

    /// Smallest eigenvalue of `sigma + i Omega / 2`; negative means unphysical.
    pub fn physicality(&self) -> f64 {
        let o = symplectic_form(self.modes());
        let h = DMatrix::from_fn(self.sigma.nrows(), self.sigma.ncols(), |i, j| {
            Complex64::new(self.sigma[(i, j)], 0.5 * o[(i, j)])
        });
        h.symmetric_eigenvalues().min()
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.sigma)
    }
}

/// Symplectic spectrum (ascending) from the Hermitian matrix
/// `i sigma^{1/2} Omega sigma^{1/2}`, whose eigenvalues are `+-nu_k`.
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = sigma.nrows();
    let eig = sigma.clone().symmetric_eigen();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Unphysical { min_eig: bad });
    }
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let core = &root * symplectic_form(n / 2) * &root;
    let h = core.map(|v| Complex64::new(0.0, v));
    let mut nu: Vec<f64> = h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .collect();
    nu.sort_by(f64::total_cmp);
    nu.truncate(n / 2);
    Ok(nu)
}

/// Logarithmic negativity between mode sets `a` and `b`:
/// `sum_k max(0, -ln(2 nu_k))` over the partially transposed spectrum. For
/// two modes at most one term is nonzero.
pub fn log_negativity(state: &CovarianceState, a: &[usize], b: &[usize]) -> Result<f64> {
    let phys = state.physicality();
    if phys < -PHYSICALITY_TOLERANCE {
        return Err(Error::Unphysical { min_eig: phys });
    }
    let modes: Vec<usize> = a.iter().chain(b).copied().collect();
    let mut sub = state.reduced(&modes).sigma;
    for k in a.len()..modes.len() {
        let p = 2 * k + 1;
        for i in 0..sub.nrows() {
            sub[(p, i)] = -sub[(p, i)];
        }
        for i in 0..sub.nrows() {
            sub[(i, p)] = -sub[(i, p)];
        }
    }
    Ok(symplectic_eigenvalues(&sub)?
        .iter()
        .map(|&nu| (-(2.0 * nu).ln()).max(0.0))
        .sum())
}

/// Two-mode log negativity from the local symplectic invariants.
pub fn log_negativity_invariants(sigma: &DMatrix<f64>) -> f64 {
    let a = sigma.fixed_view::<2, 2>(0, 0).determinant();
    let b = sigma.fixed_view::<2, 2>(2, 2).determinant();
    let c = sigma.fixed_view::<2, 2>(0, 2).determinant();
    let delta = a + b - 2.0 * c;
    let det = sigma.determinant();
    let nu2 = 0.5 * (delta - (delta * delta - 4.0 * det).max(0.0).sqrt());
    (-(2.0 * nu2.sqrt()).ln()).max(0.0)
}

/// Moment equations `d sigma/dt = A sigma + sigma A^T + D`, `d m/dt = A m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftDiffusion {
    pub a: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

fn row(op: Ladder, modes: usize) -> DVector<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::zeros(2 * modes);
    let (m, sign) = match op {
        Ladder::Lower(m) => (m, 1.0),
        Ladder::Raise(m) => (m, -1.0),
    };
    v[2 * m] = Complex64::new(h, 0.0);
    v[2 * m + 1] = Complex64::new(0.0, sign * h);
    v
}

fn symmetric_pair(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DMatrix<Complex64> {
    let m = a * b.transpose();
    &m + m.transpose()
}

/// Jump part of the drift and the full diffusion matrix.
fn dissipative_part(model_jumps: &[crate::generator::JumpOperator], modes: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut m = DMatrix::<Complex64>::zeros(2 * modes, 2 * modes);
    for j in model_jumps {
        let c = j
            .components
            .iter()
            .fold(DVector::zeros(2 * modes), |acc: DVector<Complex64>, &(w, op)| acc + row(op, modes) * w);
        m += (&c * c.adjoint()) * Complex64::new(j.rate, 0.0);
    }
    let o = symplectic_form(modes);
    let a = -(&o * m.map(|z| z.im));
    let d = &o * m.map(|z| z.re) * o.transpose();
    (a, d)
}

pub fn drift_diffusion_from_model(model: &QuadraticModel) -> DriftDiffusion {
    let modes = model.subsystems;
    let mut hq = DMatrix::<Complex64>::zeros(2 * modes, 2 * modes);
    for t in &model.hamiltonian {
        hq += symmetric_pair(&row(t.left, modes), &row(t.right, modes)) * t.coeff;
    }
    let o = symplectic_form(modes);
    let (a_jump, d) = dissipative_part(&model.jumps, modes);
    DriftDiffusion {
        a: &o * hq.map(|z| z.re) + a_jump,
        d,
    }
}

pub fn drift_diffusion_from_generator(spec: &GeneratorSpec, t: f64) -> DriftDiffusion {
    drift_diffusion_from_model(&spec.model_at(t))
}

/// Precomputed moment equations for repeated evaluation in time.
#[derive(Clone, Debug)]
pub struct GaussGenerator {
    spec: Option<GeneratorSpec>,
    a_static: DMatrix<f64>,
    d: DMatrix<f64>,
    /// `Omega * S_m` split into real and imaginary parts, per Hamiltonian term.
    terms: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    coeffs: Vec<Complex64>,
    f_max: f64,
    mechanical: [usize; 2],
}

impl GaussGenerator {
    pub fn from_spec(spec: &GeneratorSpec) -> Self {
        let modes = spec.subsystems();
        let o = symplectic_form(modes);
        let (a_static, d) = dissipative_part(&spec.jumps(), modes);
        let terms = spec
            .hamiltonian_layout()
            .into_iter()
            .map(|(l, r)| {
                let s = symmetric_pair(&row(l, modes), &row(r, modes));
                (&o * s.map(|z| z.re), &o * s.map(|z| z.im))
            })
            .collect();
        GaussGenerator {
            spec: Some(spec.clone()),
            a_static,
            d,
            terms,
            coeffs: vec![Complex64::default(); spec.hamiltonian_len()],
            f_max: spec.max_frequency(),
            mechanical: spec.mechanical(),
        }
    }

    /// Time-independent generator; `f_max` is taken from the spectral norm of `A`.
    pub fn constant(dd: DriftDiffusion, mechanical: [usize; 2]) -> Self {
        let f_max = dd.a.norm();
        GaussGenerator {
            spec: None,
            a_static: dd.a,
            d: dd.d,
            terms: Vec::new(),
            coeffs: Vec::new(),
            f_max,
            mechanical,
        }
    }

    pub fn modes(&self) -> usize {
        self.d.nrows() / 2
    }

    pub fn max_frequency(&self) -> f64 {
        self.f_max
    }

    pub fn drift(&mut self, t: f64) -> DMatrix<f64> {
        let mut a = self.a_static.clone();
        if let Some(spec) = &self.spec {
            spec.hamiltonian_coeffs(t, &mut self.coeffs);
            for ((re, im), c) in self.terms.iter().zip(&self.coeffs) {
                a += re * c.re - im * c.im;
            }
        }
        a
    }

    pub fn at(&mut self, t: f64) -> DriftDiffusion {
        DriftDiffusion {
            a: self.drift(t),
            d: self.d.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussRecord {
    pub t: f64,
    pub n1: f64,
    pub n2: f64,
    pub n_cav: Option<f64>,
    #[serde(skip)]
    pub coherence: Complex64,
    #[serde(skip)]
    pub amplitude: [Complex64; 2],
    pub log_negativity: f64,
    pub min_symplectic_eigenvalue: f64,
    pub physicality: f64,
}

#[derive(Clone, Debug)]
pub struct GaussTrajectory {
    pub records: Vec<GaussRecord>,
    pub final_state: CovarianceState,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        EvolveOptions { dt, t_end, stride: 1 }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

fn record(gen: &GaussGenerator, s: &CovarianceState, t: f64) -> Result<GaussRecord> {
    let physicality = s.physicality();
    if physicality < -PHYSICALITY_TOLERANCE {
        return Err(Error::Unphysical { min_eig: physicality });
    }
    let [m1, m2] = gen.mechanical;
    let cavity = (s.modes() == 3).then(|| (0..3).find(|m| !gen.mechanical.contains(m)).unwrap_or(0));
    let nu = s.symplectic_eigenvalues()?;
    Ok(GaussRecord {
        t,
        n1: s.occupation(m1),
        n2: s.occupation(m2),
        n_cav: cavity.map(|c| s.occupation(c)),
        coherence: s.coherence(m1, m2),
        amplitude: [m1, m2].map(|m| s.amplitude(m)),
        log_negativity: log_negativity(s, &[m1], &[m2])?,
        min_symplectic_eigenvalue: nu.first().copied().unwrap_or(f64::NAN),
        physicality,
    })
}

pub fn evolve_covariance(
    gen: &mut GaussGenerator,
    initial: &CovarianceState,
    opts: EvolveOptions,
) -> Result<GaussTrajectory> {
    let bound = 0.01 / gen.f_max;
    if !(opts.dt > 0.0) || opts.dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            dt: opts.dt,
            bound,
            f_max: gen.f_max,
        });
    }
    if initial.modes() != gen.modes() {
        return Err(Error::InvalidSpace(format!(
            "state has {} modes, generator has {}",
            initial.modes(),
            gen.modes()
        )));
    }
    let steps = (opts.t_end / opts.dt).ceil().max(0.0) as usize;
    let dt = if steps == 0 { opts.dt } else { opts.t_end / steps as f64 };
    let d = gen.d.clone();
    let mut s = initial.clone();
    let mut records = vec![record(gen, &s, 0.0)?];
    let f = |a: &DMatrix<f64>, sig: &DMatrix<f64>| a * sig + sig * a.transpose() + &d;
    for step in 0..steps {
        let t = step as f64 * dt;
        let a0 = gen.drift(t);
        let ah = gen.drift(t + 0.5 * dt);
        let a1 = gen.drift(t + dt);
        let k1 = f(&a0, &s.sigma);
        let k2 = f(&ah, &(&s.sigma + &k1 * (0.5 * dt)));
        let k3 = f(&ah, &(&s.sigma + &k2 * (0.5 * dt)));
        let k4 = f(&a1, &(&s.sigma + &k3 * dt));
        let m1 = &a0 * &s.mean;
        let m2 = &ah * (&s.mean + &m1 * (0.5 * dt));
        let m3 = &ah * (&s.mean + &m2 * (0.5 * dt));
        let m4 = &a1 * (&s.mean + &m3 * dt);
        s.sigma += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        s.sigma = (&s.sigma + s.sigma.transpose()) * 0.5;
        s.mean += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (dt / 6.0);
        if (step + 1) % opts.stride == 0 || step + 1 == steps {
            records.push(record(gen, &s, (step + 1) as f64 * dt)?);
        }
    }
    Ok(GaussTrajectory {
        records,
        final_state: s,
        dt,
    })
}

/// Largest real part of the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `A X + X A^T + D = 0` by a complex Schur (Bartels-Stewart) sweep.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let (q, t) = ac.schur().unpack();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let abscissa = (0..n).map(|i| t[(i, i)].re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= -1e-12 * scale {
        return Err(Error::NotHurwitz { abscissa });
    }
    let c = q.adjoint() * d.map(|x| Complex64::new(x, 0.0)) * &q;
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = -c[(i, j)];
            for k in i + 1..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            y[(i, j)] = rhs / (t[(i, i)] + t[(j, j)].conj());
        }
    }
    let x = (&q * y * q.adjoint()).map(|z| z.re);
    let x = (&x + x.transpose()) * 0.5;
    let residual = (a * &x + &x * a.transpose() + d).norm();
    let tolerance = 1e-10 * d.norm().max(f64::MIN_POSITIVE);
    if residual > tolerance {
        return Err(Error::LyapunovResidual { residual, tolerance });
    }
    Ok(x)
}

pub fn steady_state(dd: &DriftDiffusion) -> Result<CovarianceState> {
    let sigma = solve_lyapunov(&dd.a, &dd.d)?;
    Ok(CovarianceState {
        mean: DVector::zeros(sigma.nrows()),
        sigma,
    })
}
