//! Physical configuration of the two-mode optomechanical system and the
//! frame quantities derived from it.
//!
//! Program units are dimensionless; by convention the mean mechanical
//! frequency sets the scale, so `omega_bar = 1` in most configurations.
//! All detunings are cavity-minus-pump, `delta_j = omega_c - omega_Lj`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    pub frequency: f64,
    /// Single-photon optomechanical coupling.
    pub coupling: f64,
}

/// Cavity and bichromatic pump. Only the first pump frequency is free; the
/// second one is fixed by the beat-note condition against the mode pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityPump {
    pub cavity_frequency: f64,
    pub decay: f64,
    pub pump_1: f64,
    /// Common real displacement amplitude of both pump components.
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThermalBath {
    pub rate: f64,
    pub occupation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub mode_1: MechanicalMode,
    pub mode_2: MechanicalMode,
    pub cavity: CavityPump,
    pub thermal_baths: Option<[ThermalBath; 2]>,
    /// Fold the optical-spring shifts into the effective Hamiltonian.
    pub absorb_spring: bool,
}

impl SystemConfig {
    /// Builds a configuration from the reduced frame quantities used on
    /// figure axes. The cavity sits at a fixed reference frequency well above
    /// the mechanics and `alpha = 1`, so dressed and bare couplings coincide.
    pub fn from_reduced(
        omega_bar: f64,
        delta_omega: f64,
        kappa: f64,
        delta_bar: f64,
        g1: f64,
        g2: f64,
    ) -> Self {
        let omega_c = 1000.0 * omega_bar.max(1.0);
        let delta_1 = delta_bar + 0.5 * delta_omega;
        SystemConfig {
            mode_1: MechanicalMode {
                frequency: omega_bar + 0.5 * delta_omega,
                coupling: g1,
            },
            mode_2: MechanicalMode {
                frequency: omega_bar - 0.5 * delta_omega,
                coupling: g2,
            },
            cavity: CavityPump {
                cavity_frequency: omega_c,
                decay: kappa,
                pump_1: omega_c - delta_1,
                alpha: 1.0,
            },
            thermal_baths: None,
            absorb_spring: false,
        }
    }

    /// Second pump frequency from `omega_L1 - omega_L2 = omega_2 - omega_1`.
    pub fn pump_2(&self) -> f64 {
        self.cavity.pump_1 - (self.mode_2.frequency - self.mode_1.frequency)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, m) in [self.mode_1, self.mode_2].iter().enumerate() {
            if !(m.frequency > 0.0) || !m.frequency.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "omega{} must be positive, got {}",
                    j + 1,
                    m.frequency
                )));
            }
            if !(m.coupling > 0.0) || !m.coupling.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "g{} must be positive, got {}",
                    j + 1,
                    m.coupling
                )));
            }
        }
        if self.mode_1.frequency == self.mode_2.frequency {
            return Err(Error::InvalidConfig(
                "mechanical frequencies must be distinct".into(),
            ));
        }
        let c = &self.cavity;
        if !(c.decay >= 0.0) || !c.decay.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "kappa must be non-negative, got {}",
                c.decay
            )));
        }
        if !c.alpha.is_finite() || !c.cavity_frequency.is_finite() || !c.pump_1.is_finite() {
            return Err(Error::InvalidConfig("non-finite cavity parameter".into()));
        }
        if let Some(baths) = &self.thermal_baths {
            for (j, b) in baths.iter().enumerate() {
                if !(b.rate >= 0.0) || !(b.occupation >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "thermal bath {} needs gamma_th >= 0 and n_th >= 0",
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; stable across runs and used for output hashes.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v:.16e}");
        }
        let _ = writeln!(s, "absorb_spring = {}", self.absorb_spring);
        s
    }

    fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut e = vec![
            ("omega1", self.mode_1.frequency),
            ("omega2", self.mode_2.frequency),
            ("omega_c", self.cavity.cavity_frequency),
            ("kappa", self.cavity.decay),
            ("omega_L1", self.cavity.pump_1),
            ("alpha", self.cavity.alpha),
            ("g1", self.mode_1.coupling),
            ("g2", self.mode_2.coupling),
        ];
        if let Some(b) = &self.thermal_baths {
            e.extend([
                ("gamma_th_1", b[0].rate),
                ("n_th_1", b[0].occupation),
                ("gamma_th_2", b[1].rate),
                ("n_th_2", b[1].occupation),
            ]);
        }
        e
    }

    /// Parses the flat `key = value` format. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut absorb_spring = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "absorb_spring" {
                absorb_spring = value.parse().map_err(|_| Error::ConfigParse {
                    line: i + 1,
                    msg: format!("absorb_spring must be true or false, got `{value}`"),
                })?;
                continue;
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::ConfigParse {
                    line: i + 1,
                    msg: format!("unknown key `{key}`"),
                });
            }
            let v: f64 = value.parse().map_err(|_| Error::ConfigParse {
                line: i + 1,
                msg: format!("`{key}` is not a number: `{value}`"),
            })?;
            if map.insert(key.to_string(), v).is_some() {
                return Err(Error::ConfigParse {
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("missing key `{k}`")))
        };
        let thermal = ["gamma_th_1", "n_th_1", "gamma_th_2", "n_th_2"];
        let thermal_baths = if thermal.iter().any(|k| map.contains_key(*k)) {
            let v = |k: &str| map.get(k).copied().unwrap_or(0.0);
            Some([
                ThermalBath {
                    rate: v("gamma_th_1"),
                    occupation: v("n_th_1"),
                },
                ThermalBath {
                    rate: v("gamma_th_2"),
                    occupation: v("n_th_2"),
                },
            ])
        } else {
            None
        };
        let cfg = SystemConfig {
            mode_1: MechanicalMode {
                frequency: get("omega1")?,
                coupling: get("g1")?,
            },
            mode_2: MechanicalMode {
                frequency: get("omega2")?,
                coupling: get("g2")?,
            },
            cavity: CavityPump {
                cavity_frequency: get("omega_c")?,
                decay: get("kappa")?,
                pump_1: get("omega_L1")?,
                alpha: get("alpha")?,
            },
            thermal_baths,
            absorb_spring,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            context: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

const KNOWN_KEYS: [&str; 12] = [
    "omega1",
    "omega2",
    "omega_c",
    "kappa",
    "omega_L1",
    "alpha",
    "g1",
    "g2",
    "gamma_th_1",
    "n_th_1",
    "gamma_th_2",
    "n_th_2",
];

/// Frame quantities shared by every downstream computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    /// Detunings `omega_c - omega_Lj`.
    pub delta: [f64; 2],
    pub delta_bar: f64,
    pub omega: [f64; 2],
    pub omega_bar: f64,
    /// `omega_1 - omega_2`.
    pub delta_omega: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// Dressed couplings `g_j * alpha`.
    pub g: [f64; 2],
    /// Pump amplitudes reproducing the real displacement `alpha`.
    pub eta: [Complex64; 2],
    /// Optical-spring shift of each mode, summed over both pumps.
    pub spring_shift: [f64; 2],
}

impl FrameParams {
    /// Frame built directly from reduced quantities, with `alpha = 1`.
    pub fn reduced(
        omega_bar: f64,
        delta_omega: f64,
        kappa: f64,
        delta_bar: f64,
        g1: f64,
        g2: f64,
    ) -> Self {
        let delta = [delta_bar + 0.5 * delta_omega, delta_bar - 0.5 * delta_omega];
        let omega = [omega_bar + 0.5 * delta_omega, omega_bar - 0.5 * delta_omega];
        Self::assemble(delta, omega, kappa, 1.0, [g1, g2])
    }

    /// Same frame with a different central detuning.
    pub fn with_delta_bar(&self, delta_bar: f64) -> Self {
        let delta = [
            delta_bar + 0.5 * self.delta_omega,
            delta_bar - 0.5 * self.delta_omega,
        ];
        Self::assemble(delta, self.omega, self.kappa, self.alpha, self.g)
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self::assemble(self.delta, self.omega, kappa, self.alpha, self.g)
    }

    /// Same frame with both dressed couplings multiplied by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        Self::assemble(
            self.delta,
            self.omega,
            self.kappa,
            self.alpha * s,
            [self.g[0] * s, self.g[1] * s],
        )
    }

    fn assemble(delta: [f64; 2], omega: [f64; 2], kappa: f64, alpha: f64, g: [f64; 2]) -> Self {
        let eta = delta.map(|d| pump_amplitude(alpha, kappa, d));
        let spring_shift = [0, 1].map(|j| {
            delta
                .iter()
                .map(|&d| optical_spring(g[j], -d, omega[j], kappa))
                .sum()
        });
        FrameParams {
            delta,
            delta_bar: 0.5 * (delta[0] + delta[1]),
            omega,
            omega_bar: 0.5 * (omega[0] + omega[1]),
            delta_omega: omega[0] - omega[1],
            kappa,
            alpha,
            g,
            eta,
            spring_shift,
        }
    }

    /// Largest bare frequency of the linearized interaction, `max(delta_k + omega_j)`.
    pub fn max_frequency(&self) -> f64 {
        let mut f: f64 = 0.0;
        for d in self.delta {
            for w in self.omega {
                f = f.max((d + w).abs()).max((d - w).abs());
            }
        }
        f
    }

    /// Displacement recovered from a pump amplitude, `-i eta / (kappa/2 + i delta)`.
    pub fn displacement(&self, pump: usize) -> Complex64 {
        let z = Complex64::new(0.5 * self.kappa, self.delta[pump]);
        -Complex64::i() * self.eta[pump] / z
    }
}

/// `eta = i alpha (kappa/2 + i delta)`, the pump amplitude giving a real
/// steady displacement `alpha`.
pub fn pump_amplitude(alpha: f64, kappa: f64, delta: f64) -> Complex64 {
    Complex64::i() * alpha * Complex64::new(0.5 * kappa, delta)
}

/// Optical-spring shift from one pump,
/// `G^2 [(D - w)/(k^2/4 + (D - w)^2) + (D + w)/(k^2/4 + (D + w)^2)]`.
///
/// `detuning` follows the pump-minus-cavity convention of the standard
/// single-mode result, so callers holding cavity-minus-pump detunings pass
/// `-delta`.
pub fn optical_spring(g: f64, detuning: f64, omega: f64, kappa: f64) -> f64 {
    let k = 0.25 * kappa * kappa;
    let lo = detuning - omega;
    let hi = detuning + omega;
    let term = |x: f64| if x == 0.0 { 0.0 } else { x / (k + x * x) };
    g * g * (term(lo) + term(hi))
}

pub fn derive_frame(config: &SystemConfig) -> Result<FrameParams> {
    config.validate()?;
    let c = &config.cavity;
    let delta_1 = c.cavity_frequency - c.pump_1;
    let delta_omega = config.mode_1.frequency - config.mode_2.frequency;
    let delta = [delta_1, delta_1 - delta_omega];
    if c.decay == 0.0 {
        let tol = 1e-12 * c.cavity_frequency.abs().max(1.0);
        if let Some(pump) = delta.iter().position(|&d| d.abs() <= tol) {
            return Err(Error::UndefinedDisplacement { pump: pump + 1 });
        }
    }
    let omega = [config.mode_1.frequency, config.mode_2.frequency];
    let g = [config.mode_1.coupling * c.alpha, config.mode_2.coupling * c.alpha];
    Ok(FrameParams::assemble(delta, omega, c.decay, c.alpha, g))
}
