//! Closed-form effective two-mode theory: coherent exchange `J`, the three
//! mediator-induced baths, total excess noise and the classicality ratio.
//!
//! Every bath is carried as a (down, up) pair of Lorentzian rates,
//! `down = Gamma (n + 1)` and `up = Gamma n`. These stay finite and
//! non-negative everywhere, including `delta_bar = 0` where the occupations
//! alone diverge. The rational forms for `Gamma` and `n` are kept for
//! cross-checking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FrameParams;

/// Normalisation and sideband assignment for the dissipative rates.
///
/// The two conventions share `J` and every rational form; they differ in the
/// Lorentzian weight and in which sideband offset each mode sees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateConvention {
    /// Weight `G^2 kappa`, offsets `x_1 = Omega + delta_omega`,
    /// `x_2 = Omega - delta_omega`. This is what a term-by-term elimination of
    /// the cavity produces (see [`crate::oracle`]).
    #[default]
    Standard,
    /// Weight `G^2 kappa / 2` with the offsets swapped
    /// (`x_1 = Omega - delta_omega`). Kept for comparison with tabulated
    /// values that use this form.
    HalvedMirrored,
}

impl RateConvention {
    fn weight(self) -> f64 {
        match self {
            RateConvention::Standard => 1.0,
            RateConvention::HalvedMirrored => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateConvention::Standard => "standard",
            RateConvention::HalvedMirrored => "halved-mirrored",
        }
    }
}

impl std::str::FromStr for RateConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(RateConvention::Standard),
            "halved-mirrored" => Ok(RateConvention::HalvedMirrored),
            _ => Err(format!("unknown rate convention `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BathRates {
    /// Rate of the lowering jump, `Gamma (n + 1)`.
    pub down: f64,
    /// Rate of the raising jump, `Gamma n`.
    pub up: f64,
}

impl BathRates {
    pub fn gamma(&self) -> f64 {
        self.down - self.up
    }

    pub fn occupation(&self) -> Option<f64> {
        let g = self.gamma();
        (g != 0.0).then(|| self.up / g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRates {
    pub gamma: f64,
    /// `None` where the rational form is singular (`delta_bar = 0` or `x = 0`).
    pub occupation: Option<f64>,
    pub rates: BathRates,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub mode_1: BathRates,
    pub mode_2: BathRates,
    pub collective: BathRates,
}

impl RateTable {
    pub fn all(&self) -> [BathRates; 3] {
        [self.mode_1, self.mode_2, self.collective]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub j: f64,
    pub gamma: [f64; 2],
    pub gamma_bar: f64,
    pub occupation: [Option<f64>; 2],
    pub occupation_bar: Option<f64>,
    pub rates: RateTable,
    pub gamma_total: f64,
    /// `|J| / gamma_total`; `None` in the unitary limit.
    pub xi: Option<f64>,
}

impl EffectiveParams {
    pub fn from_frame(frame: &FrameParams, conv: RateConvention) -> Result<Self> {
        let j = coupling_j(frame)?;
        let m1 = single_mode_rates(frame, Mode::One, conv);
        let m2 = single_mode_rates(frame, Mode::Two, conv);
        let c = collective_rates(frame, conv);
        let rates = RateTable {
            mode_1: m1.rates,
            mode_2: m2.rates,
            collective: c.rates,
        };
        let gamma_total = total_from_table(&rates);
        Ok(EffectiveParams {
            j,
            gamma: [m1.gamma, m2.gamma],
            gamma_bar: c.gamma,
            occupation: [m1.occupation, m2.occupation],
            occupation_bar: c.occupation,
            rates,
            gamma_total,
            xi: xi_from(j, gamma_total),
        })
    }

    pub fn classicality(&self) -> Classicality {
        match self.xi {
            None => Classicality::UnitaryLimit,
            Some(xi) if xi <= 0.5 => Classicality::Classical(xi),
            Some(xi) => Classicality::Quantum(xi),
        }
    }

    /// Largest rate or frequency appearing in the effective generator.
    pub fn max_frequency(&self) -> f64 {
        self.rates
            .all()
            .iter()
            .flat_map(|b| [b.down, b.up])
            .fold(self.j.abs(), f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Classicality {
    UnitaryLimit,
    Classical(f64),
    Quantum(f64),
}

impl Classicality {
    pub fn label(&self) -> &'static str {
        match self {
            Classicality::UnitaryLimit => "unitary-limit",
            Classicality::Classical(_) => "classical",
            Classicality::Quantum(_) => "quantum",
        }
    }

    pub fn xi(&self) -> Option<f64> {
        match *self {
            Classicality::UnitaryLimit => None,
            Classicality::Classical(x) | Classicality::Quantum(x) => Some(x),
        }
    }
}

fn xi_from(j: f64, gamma_total: f64) -> Option<f64> {
    (gamma_total > 0.0).then(|| j.abs() / gamma_total)
}

fn total_from_table(t: &RateTable) -> f64 {
    t.mode_1.up + t.mode_2.up + 2.0 * t.collective.up
}

/// `G_1 G_2 Im[(kappa + 2i D) / ((kappa/2 + i D)^2 + Omega^2)]`.
pub fn coupling_j(frame: &FrameParams) -> Result<f64> {
    let (k, d, w) = (frame.kappa, frame.delta_bar, frame.omega_bar);
    if k == 0.0 && (d.abs() == w.abs()) {
        return Err(Error::OutOfValidity(format!(
            "J has a pole at delta_bar = {d} for a lossless cavity"
        )));
    }
    let z = num_complex::Complex64::new(0.5 * k, d);
    let num = num_complex::Complex64::new(k, 2.0 * d);
    let den = z * z + w * w;
    Ok(frame.g[0] * frame.g[1] * (num / den).im)
}

/// Sum over the two exchange pathways, one through each sideband.
pub fn coupling_j_two_pathway(frame: &FrameParams) -> f64 {
    let k = 0.25 * frame.kappa * frame.kappa;
    let lo = frame.delta_bar - frame.omega_bar;
    let hi = frame.delta_bar + frame.omega_bar;
    -frame.g[0] * frame.g[1] * (lo / (k + lo * lo) + hi / (k + hi * hi))
}

/// Sideband offset `x_j` entering mode `j`'s bath.
pub fn sideband_offset(frame: &FrameParams, mode: Mode, conv: RateConvention) -> f64 {
    let sign = match (mode, conv) {
        (Mode::One, RateConvention::Standard) | (Mode::Two, RateConvention::HalvedMirrored) => 1.0,
        _ => -1.0,
    };
    frame.omega_bar + sign * frame.delta_omega
}

fn lorentzian_pair(weight: f64, kappa: f64, delta_bar: f64, x: f64) -> BathRates {
    if kappa == 0.0 || weight == 0.0 {
        return BathRates::default();
    }
    let k = 0.25 * kappa * kappa;
    let lo = delta_bar - x;
    let hi = delta_bar + x;
    BathRates {
        down: weight * kappa / (k + lo * lo),
        up: weight * kappa / (k + hi * hi),
    }
}

/// `2 W D x / ((k^2/4 + x^2 - D^2)^2 + k^2 D^2)` times the convention weight,
/// with `W` the squared (or mixed) dressed coupling times `kappa`.
fn rational_gamma(weight: f64, kappa: f64, delta_bar: f64, x: f64) -> f64 {
    let k = 0.25 * kappa * kappa;
    let a = k + (x - delta_bar) * (x + delta_bar);
    let den = a * a + kappa * kappa * delta_bar * delta_bar;
    if weight == 0.0 || kappa == 0.0 {
        return 0.0;
    }
    4.0 * weight * kappa * delta_bar * x / den
}

/// `kappa^2/(16 D x) + D/(4x) + x/(4D) - 1/2`.
fn rational_occupation(kappa: f64, delta_bar: f64, x: f64) -> Option<f64> {
    if delta_bar == 0.0 || x == 0.0 {
        return None;
    }
    Some(
        kappa * kappa / (16.0 * delta_bar * x) + delta_bar / (4.0 * x) + x / (4.0 * delta_bar)
            - 0.5,
    )
}

pub fn single_mode_rates(frame: &FrameParams, mode: Mode, conv: RateConvention) -> ModeRates {
    let x = sideband_offset(frame, mode, conv);
    let g = frame.g[mode.index()];
    let weight = conv.weight() * g * g;
    ModeRates {
        gamma: rational_gamma(weight, frame.kappa, frame.delta_bar, x),
        occupation: rational_occupation(frame.kappa, frame.delta_bar, x),
        rates: lorentzian_pair(weight, frame.kappa, frame.delta_bar, x),
    }
}

pub fn collective_rates(frame: &FrameParams, conv: RateConvention) -> ModeRates {
    let x = frame.omega_bar;
    let weight = conv.weight() * frame.g[0] * frame.g[1];
    ModeRates {
        gamma: rational_gamma(weight, frame.kappa, frame.delta_bar, x),
        occupation: rational_occupation(frame.kappa, frame.delta_bar, x),
        rates: lorentzian_pair(weight, frame.kappa, frame.delta_bar, x),
    }
}

/// Collective bath rates per unit `G1 G2`; the jump `G1 b1 + G2 b2` at
/// these rates reproduces the collective dissipator for any couplings,
/// including a vanishing one.
pub fn collective_unit_rates(frame: &FrameParams, conv: RateConvention) -> BathRates {
    lorentzian_pair(conv.weight(), frame.kappa, frame.delta_bar, frame.omega_bar)
}

/// `Gamma_1 n_1 + Gamma_2 n_2 + 2 Gamma_bar n_bar`, summed from the up rates.
pub fn total_decoherence(frame: &FrameParams, conv: RateConvention) -> f64 {
    let t = RateTable {
        mode_1: single_mode_rates(frame, Mode::One, conv).rates,
        mode_2: single_mode_rates(frame, Mode::Two, conv).rates,
        collective: collective_rates(frame, conv).rates,
    };
    total_from_table(&t)
}

pub fn classicality(frame: &FrameParams, conv: RateConvention) -> Result<Classicality> {
    Ok(EffectiveParams::from_frame(frame, conv)?.classicality())
}

/// Leading far-detuned behaviour of `xi`,
/// `c G_1 G_2 D / (kappa (G_1 + G_2)^2)` with `c = 2` (standard) or `4`.
pub fn xi_far_detuned(frame: &FrameParams, conv: RateConvention) -> f64 {
    let (g1, g2) = (frame.g[0], frame.g[1]);
    let c = 2.0 / conv.weight();
    c * g1 * g2 * frame.delta_bar.abs() / (frame.kappa * (g1 + g2).powi(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMode {
    pub c1: f64,
    pub c2: f64,
}

pub fn collective_mode_coeffs(g1: f64, g2: f64) -> Result<CollectiveMode> {
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "collective mode needs positive couplings, got g1 = {g1}, g2 = {g2}"
        )));
    }
    Ok(CollectiveMode {
        c1: (g1 / g2).sqrt(),
        c2: (g2 / g1).sqrt(),
    })
}

/// All real detunings where `J` vanishes, sorted ascending.
///
/// The zero at `delta_bar = 0` is exact and added directly. Interior zeros are
/// bracketed by sign changes on a logarithmic grid over `delta_bar > 0` and
/// refined by bisection to `1e-12`; the negative ones follow from `J` being odd.
pub fn find_coupling_nulls(frame: &FrameParams) -> Vec<f64> {
    let scale = frame.omega_bar.abs().max(frame.kappa).max(1e-300);
    let j_at = |d: f64| -> f64 {
        let f = frame.with_delta_bar(d);
        // the G prefactor only rescales
        coupling_j(&FrameParams { g: [1.0, 1.0], ..f }).unwrap_or(f64::NAN)
    };
    let points = 4000;
    let (lo, hi) = ((1e-6 * scale).ln(), (1e4 * scale).ln());
    let grid: Vec<f64> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect();
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (j_at(a), j_at(b));
        if !(fa.is_finite() && fb.is_finite()) || fa == 0.0 || fa.signum() == fb.signum() {
            if fb == 0.0 {
                roots.push(b);
            }
            continue;
        }
        let edge = fa.abs().max(fb.abs());
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            let fm = j_at(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        // a sign flip through a pole (lossless cavity) is not a null
        if j_at(r).abs() <= 1e-6 * edge {
            roots.push(r);
        }
    }
    let mut out: Vec<f64> = roots.iter().map(|r| -r).collect();
    out.push(0.0);
    out.extend(roots);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}
