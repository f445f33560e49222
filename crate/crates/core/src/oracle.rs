//! Independent route to the effective generator.
//!
//! The cavity is traced out by hand: the optical coherence `<1|rho|0>` is
//! slaved to the mechanical state, giving a table of second-order terms
//! `coeff * (left op) rho (right op)`, each oscillating at a residual
//! frequency built from the detunings and mechanical frequencies. Terms
//! whose residual frequency is symbolically zero under the beat-note
//! condition are kept; the rest are returned separately.
//!
//! [`reduce_to_effective`] then regroups the kept terms into a Hamiltonian
//! and a Kossakowski matrix and reads off `J`, the spring shifts and the
//! three bath rate pairs. Nothing here calls into [`crate::effective`]; the
//! two modules are compared only in tests and in validation.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::effective::{BathRates, EffectiveParams, RateTable};
use crate::error::{Error, Result};
use crate::generator::Ladder;
use crate::model::FrameParams;

/// Linear combination `(a * delta_bar + b * omega_bar + c * delta_omega) / 2`
/// with integer coefficients. Under the beat-note condition
/// `delta_{1,2} = delta_bar +- delta_omega/2` and
/// `omega_{1,2} = omega_bar +- delta_omega/2`, so every residual frequency
/// has this form and resonance is an exact integer test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Residual {
    pub delta_bar: i32,
    pub omega_bar: i32,
    pub delta_omega: i32,
}

impl Residual {
    fn detuning(k: usize) -> Self {
        Residual {
            delta_bar: 2,
            omega_bar: 0,
            delta_omega: if k == 0 { 1 } else { -1 },
        }
    }

    fn mechanical(j: usize) -> Self {
        Residual {
            delta_bar: 0,
            omega_bar: 2,
            delta_omega: if j == 0 { 1 } else { -1 },
        }
    }

    fn scaled(self, s: i32) -> Self {
        Residual {
            delta_bar: s * self.delta_bar,
            omega_bar: s * self.omega_bar,
            delta_omega: s * self.delta_omega,
        }
    }

    fn plus(self, o: Self) -> Self {
        Residual {
            delta_bar: self.delta_bar + o.delta_bar,
            omega_bar: self.omega_bar + o.omega_bar,
            delta_omega: self.delta_omega + o.delta_omega,
        }
    }

    pub fn is_resonant(&self) -> bool {
        *self == Residual::default()
    }

    pub fn value(&self, frame: &FrameParams) -> f64 {
        0.5 * (self.delta_bar as f64 * frame.delta_bar
            + self.omega_bar as f64 * frame.omega_bar
            + self.delta_omega as f64 * frame.delta_omega)
    }
}

/// Where the two ladder operators sit relative to `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Placement {
    /// `A B rho`
    Left,
    /// `rho A B`
    Right,
    /// `A rho B`
    Sandwich,
}

/// Which of the four products in the traced equation produced a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Block {
    /// `X <1|rho|0>`
    CoherenceLeft,
    /// `<1|rho|0> X`
    CoherenceRight,
    /// `X <0|rho|1>`
    ConjugateLeft,
    /// `<0|rho|1> X`
    ConjugateRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PreRwaTerm {
    pub placement: Placement,
    /// Left operator (`A` in `A B rho`, `A rho B`, `rho A B`).
    #[serde(skip)]
    pub first: Ladder,
    #[serde(skip)]
    pub second: Ladder,
    #[serde(skip)]
    pub coefficient: Complex64,
    pub residual: Residual,
    /// Numerical value of the residual frequency.
    pub oscillation: f64,
    pub block: Block,
    /// `(mode, pump, raising?)` of the slaved coherence factor.
    pub source: (usize, usize, bool),
    /// `(mode, pump, raising?)` of the driving quadrature factor.
    pub probe: (usize, usize, bool),
}

impl fmt::Display for PreRwaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (op_name(self.first), op_name(self.second));
        let ops = match self.placement {
            Placement::Left => format!("{a} {b} rho"),
            Placement::Right => format!("rho {a} {b}"),
            Placement::Sandwich => format!("{a} rho {b}"),
        };
        write!(
            f,
            "({:+.6e} {:+.6e}i) {ops}  [residual {:+.6e}]",
            self.coefficient.re, self.coefficient.im, self.oscillation
        )
    }
}

fn op_name(op: Ladder) -> String {
    match op {
        Ladder::Lower(m) => format!("b{}", m + 1),
        Ladder::Raise(m) => format!("b{}^dag", m + 1),
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub single_mode_terms: Vec<PreRwaTerm>,
    pub cross_terms: Vec<PreRwaTerm>,
    pub dropped: Vec<PreRwaTerm>,
    /// Dressed couplings; fix the collective-mode weights during reduction.
    pub couplings: [f64; 2],
    /// `max G / kappa` and `max G / |delta_bar -+ omega_bar|`; the
    /// perturbative elimination needs both small.
    pub validity: [f64; 2],
}

impl CoefficientTable {
    /// Resonant terms in the order used for error reporting.
    pub fn resonant(&self) -> impl Iterator<Item = &PreRwaTerm> {
        self.single_mode_terms.iter().chain(self.cross_terms.iter())
    }

    pub fn resonant_mut(&mut self) -> impl Iterator<Item = &mut PreRwaTerm> {
        self.single_mode_terms
            .iter_mut()
            .chain(self.cross_terms.iter_mut())
    }
}

fn ladder(mode: usize, raise: bool) -> Ladder {
    if raise {
        Ladder::Raise(mode)
    } else {
        Ladder::Lower(mode)
    }
}

/// `1 / (kappa/2 + i (delta_k + s omega_j))`, the stationary weight of the
/// slaved optical coherence.
pub fn coherence_fraction(kappa: f64, delta: f64, omega: f64, raise: bool) -> Complex64 {
    let s = if raise { 1.0 } else { -1.0 };
    Complex64::new(0.5 * kappa, delta + s * omega).inv()
}

pub fn build_coefficient_table(frame: &FrameParams) -> Result<CoefficientTable> {
    let g = frame.g;
    let mut single = Vec::new();
    let mut cross = Vec::new();
    let mut dropped = Vec::new();
    let bools = [false, true];
    for j in 0..2 {
        for k in 0..2 {
            for &s in &bools {
                // <1|rho|0> = -i sum G_j b_j^s e^{i(D_k + s w_j)t} / (kappa/2 + i(D_k + s w_j)) rho
                let fraction = coherence_fraction(frame.kappa, frame.delta[k], frame.omega[j], s);
                if !fraction.is_finite() {
                    return Err(Error::OutOfValidity(format!(
                        "lossless cavity with delta_{} {} omega_{} = 0",
                        k + 1,
                        if s { "+" } else { "-" },
                        j + 1
                    )));
                }
                let sign_s = if s { 1 } else { -1 };
                let q_freq = Residual::detuning(k).plus(Residual::mechanical(j).scaled(sign_s));
                for jp in 0..2 {
                    for kp in 0..2 {
                        for &sp in &bools {
                            let sign_sp = if sp { 1 } else { -1 };
                            let x_freq = Residual::detuning(kp)
                                .scaled(-1)
                                .plus(Residual::mechanical(jp).scaled(sign_sp));
                            let forward = q_freq.plus(x_freq);
                            let backward = forward.scaled(-1);
                            let gg = g[j] * g[jp];
                            let src = ladder(j, s);
                            let prb = ladder(jp, sp);
                            let terms = [
                                (Block::CoherenceLeft, Placement::Left, prb, src, -gg * fraction, forward),
                                (Block::CoherenceRight, Placement::Sandwich, src, prb, gg * fraction, forward),
                                (Block::ConjugateLeft, Placement::Sandwich, prb.dagger(), src.dagger(), gg * fraction.conj(), backward),
                                (Block::ConjugateRight, Placement::Right, src.dagger(), prb.dagger(), -gg * fraction.conj(), backward),
                            ];
                            for (block, placement, first, second, coefficient, residual) in terms {
                                let term = PreRwaTerm {
                                    placement,
                                    first,
                                    second,
                                    coefficient,
                                    residual,
                                    oscillation: residual.value(frame),
                                    block,
                                    source: (j, k, s),
                                    probe: (jp, kp, sp),
                                };
                                if !residual.is_resonant() {
                                    dropped.push(term);
                                } else if j == jp {
                                    single.push(term);
                                } else {
                                    cross.push(term);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let gmax = g[0].abs().max(g[1].abs());
    let gap = (frame.delta_bar - frame.omega_bar)
        .abs()
        .min((frame.delta_bar + frame.omega_bar).abs());
    Ok(CoefficientTable {
        single_mode_terms: single,
        cross_terms: cross,
        dropped,
        couplings: g,
        validity: [gmax / frame.kappa, gmax / gap],
    })
}

/// Normal-ordered quadratic monomial in the two mechanical modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Monomial {
    Identity,
    Pair(Ladder, Ladder),
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monomial::Identity => write!(f, "1"),
            Monomial::Pair(a, b) => write!(f, "{} {}", op_name(*a), op_name(*b)),
        }
    }
}

/// `a b` rewritten in normal order.
fn normal_order(a: Ladder, b: Ladder) -> Vec<(Monomial, f64)> {
    match (a, b) {
        (Ladder::Lower(i), Ladder::Raise(j)) => {
            let mut v = vec![(Monomial::Pair(b, a), 1.0)];
            if i == j {
                v.push((Monomial::Identity, 1.0));
            }
            v
        }
        (Ladder::Raise(_), Ladder::Lower(_)) => vec![(Monomial::Pair(a, b), 1.0)],
        // like ladders commute; sort for a canonical key
        _ => {
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            vec![(Monomial::Pair(x, y), 1.0)]
        }
    }
}

#[derive(Default)]
struct Poly {
    coeffs: BTreeMap<Monomial, Complex64>,
    sources: BTreeMap<Monomial, Vec<usize>>,
}

impl Poly {
    fn add(&mut self, a: Ladder, b: Ladder, c: Complex64, source: Option<usize>) {
        for (m, w) in normal_order(a, b) {
            *self.coeffs.entry(m).or_default() += c * w;
            if let Some(s) = source {
                self.sources.entry(m).or_default().push(s);
            }
        }
    }

    fn get(&self, m: &Monomial) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    fn keys<'a>(&'a self, other: &'a Poly) -> Vec<Monomial> {
        let mut k: Vec<Monomial> = self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        k.sort();
        k.dedup();
        k
    }

    fn sources(&self, m: &Monomial) -> Vec<usize> {
        self.sources.get(m).cloned().unwrap_or_default()
    }
}

/// Jump basis order: `b1, b2, b1^dag, b2^dag`.
fn jump_index(op: Ladder) -> usize {
    match op {
        Ladder::Lower(m) => m,
        Ladder::Raise(m) => 2 + m,
    }
}

fn jump_op(i: usize) -> Ladder {
    if i < 2 {
        Ladder::Lower(i)
    } else {
        Ladder::Raise(i - 2)
    }
}

/// Generator regrouped as `-i[H, rho] + sum M_ab (F_a rho F_b^dag - 1/2 {F_b^dag F_a, rho})`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub params: EffectiveParams,
    /// Diagonal Hamiltonian shifts `b_j^dag b_j` produced by the elimination.
    pub spring_shift: [f64; 2],
    /// Kossakowski matrix over `b1, b2, b1^dag, b2^dag`.
    pub kossakowski: [[Complex64; 4]; 4],
}

pub fn reduce_to_effective(table: &CoefficientTable) -> Result<Reduction> {
    let terms: Vec<&PreRwaTerm> = table.resonant().collect();
    let scale = terms
        .iter()
        .map(|t| t.coefficient.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-11 * scale;

    let mut left = Poly::default();
    let mut right = Poly::default();
    let mut kossakowski = [[Complex64::default(); 4]; 4];
    let mut k_sources: [[Vec<usize>; 4]; 4] = Default::default();
    for (idx, t) in terms.iter().enumerate() {
        match t.placement {
            Placement::Left => left.add(t.first, t.second, t.coefficient, Some(idx)),
            Placement::Right => right.add(t.first, t.second, t.coefficient, Some(idx)),
            Placement::Sandwich => {
                let a = jump_index(t.first);
                let b = jump_index(t.second.dagger());
                kossakowski[a][b] += t.coefficient;
                k_sources[a][b].push(idx);
            }
        }
    }

    let residual = |detail: String, mut terms: Vec<usize>| {
        terms.sort_unstable();
        terms.dedup();
        Err(Error::ResidualTerms { detail, terms })
    };

    for a in 0..4 {
        for b in 0..4 {
            if (kossakowski[a][b] - kossakowski[b][a].conj()).norm() > tol {
                let mut s = k_sources[a][b].clone();
                s.extend(&k_sources[b][a]);
                return residual(
                    format!(
                        "jump matrix not Hermitian at ({} rho {})",
                        op_name(jump_op(a)),
                        op_name(jump_op(b).dagger())
                    ),
                    s,
                );
            }
        }
    }

    // K from the sandwich terms: sum M_ab F_b^dag F_a
    let mut from_jumps = Poly::default();
    for a in 0..4 {
        for b in 0..4 {
            from_jumps.add(jump_op(b).dagger(), jump_op(a), kossakowski[a][b], None);
        }
    }
    let mut hamiltonian = Poly::default();
    for m in left.keys(&right) {
        let (l, r) = (left.get(&m), right.get(&m));
        // left = -iH - K/2, right = iH - K/2
        *hamiltonian.coeffs.entry(m).or_default() = (r - l) / Complex64::new(0.0, 2.0);
        let k = -(l + r);
        let expect = from_jumps.get(&m);
        if (k - expect).norm() > tol {
            let mut s = left.sources(&m);
            s.extend(right.sources(&m));
            return residual(
                format!(
                    "anticommutator part of `{m}` is {k:.6e}, jump terms need {expect:.6e}"
                ),
                s,
            );
        }
    }
    for m in from_jumps.keys(&left) {
        if left.coeffs.contains_key(&m) || right.coeffs.contains_key(&m) {
            continue;
        }
        if from_jumps.get(&m).norm() > tol {
            let (a, b) = match m {
                Monomial::Pair(x, y) => (jump_index(y), jump_index(x.dagger())),
                Monomial::Identity => (0, 0),
            };
            return residual(format!("jump terms need an unmatched `{m}`"), k_sources[a][b].clone());
        }
    }

    let h = |a: Ladder, b: Ladder| hamiltonian.get(&Monomial::Pair(a, b));
    for i in 0..2 {
        for j in 0..2 {
            let hij = h(Ladder::Raise(i), Ladder::Lower(j));
            let hji = h(Ladder::Raise(j), Ladder::Lower(i));
            if (hij - hji.conj()).norm() > tol {
                let m = Monomial::Pair(Ladder::Raise(i), Ladder::Lower(j));
                let mut s = left.sources(&m);
                s.extend(right.sources(&m));
                return residual(format!("Hamiltonian not Hermitian at `{m}`"), s);
            }
        }
    }
    for m in hamiltonian.coeffs.keys() {
        if let Monomial::Pair(a, b) = m {
            let anomalous = matches!((a, b), (Ladder::Lower(_), Ladder::Lower(_)) | (Ladder::Raise(_), Ladder::Raise(_)));
            if anomalous && hamiltonian.get(m).norm() > tol {
                let mut s = left.sources(m);
                s.extend(right.sources(m));
                return residual(format!("two-mode squeezing term `{m}` survives"), s);
            }
        }
    }
    for a in 0..2 {
        for b in 2..4 {
            if kossakowski[a][b].norm() > tol {
                return residual(
                    format!(
                        "phase-sensitive jump pair ({} rho {})",
                        op_name(jump_op(a)),
                        op_name(jump_op(b).dagger())
                    ),
                    k_sources[a][b].clone(),
                );
            }
        }
    }

    let j = h(Ladder::Raise(0), Ladder::Lower(1));
    if j.im.abs() > tol {
        let m = Monomial::Pair(Ladder::Raise(0), Ladder::Lower(1));
        let mut s = left.sources(&m);
        s.extend(right.sources(&m));
        return residual(format!("exchange coupling is complex: {j}"), s);
    }
    let spring_shift = [0, 1].map(|i| h(Ladder::Raise(i), Ladder::Lower(i)).re);

    let down_c = kossakowski[0][1];
    let up_c = kossakowski[2][3];
    for (c, (a, b)) in [(down_c, (0, 1)), (up_c, (2, 3))] {
        if c.im.abs() > tol {
            return residual("collective jump weight is complex".into(), k_sources[a][b].clone());
        }
    }
    let [g1, g2] = table.couplings;
    // c_1^2 = G_1/G_2, c_2^2 = G_2/G_1 and c_1 c_2 = 1
    let weight = |c: f64, num: f64, den: f64| if c == 0.0 { 0.0 } else { c * num / den };
    let (dc, uc) = (down_c.re, up_c.re);
    let mode = |i: usize, num: f64, den: f64| BathRates {
        down: kossakowski[i][i].re - weight(dc, num, den),
        up: kossakowski[2 + i][2 + i].re - weight(uc, num, den),
    };
    let rates = RateTable {
        mode_1: mode(0, g1, g2),
        mode_2: mode(1, g2, g1),
        collective: BathRates { down: dc, up: uc },
    };
    for (i, b) in rates.all().iter().enumerate() {
        if b.down < -tol || b.up < -tol {
            let (x, y) = [(0, 0), (1, 1), (0, 1)][i];
            return residual(
                format!("negative jump rate in bath {} ({:.3e}, {:.3e})", i + 1, b.down, b.up),
                k_sources[x][y].iter().chain(&k_sources[2 + x][2 + y]).copied().collect(),
            );
        }
    }
    let gamma_total = rates.mode_1.up + rates.mode_2.up + 2.0 * rates.collective.up;
    let params = EffectiveParams {
        j: j.re,
        gamma: [rates.mode_1.gamma(), rates.mode_2.gamma()],
        gamma_bar: rates.collective.gamma(),
        occupation: [rates.mode_1.occupation(), rates.mode_2.occupation()],
        occupation_bar: rates.collective.occupation(),
        rates,
        gamma_total,
        xi: (gamma_total > 0.0).then(|| j.re.abs() / gamma_total),
    };
    Ok(Reduction {
        params,
        spring_shift,
        kossakowski,
    })
}
